#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""module with reader and writer for csv tables like the manifest and the report files"""
import csv
import logging
import pathlib
from typing import Dict, List, Optional, Sequence, Union


class ReportTable:
    """generic table with named columns and string cells, read from and written to csv"""

    def __init__(self, name: str = "", columns: Optional[Sequence[str]] = None):
        """create an empty table"""
        self._logger = logging.getLogger("ReportTable")
        self.name = name
        self._content: List[Dict[str, str]] = []
        self._columns: List[str] = []
        for column in columns or []:
            self.append_column(column)

    def __len__(self):
        """number of rows"""
        return len(self._content)

    @property
    def name(self) -> str:
        """name of the table, usually the file stem"""
        return self._name

    @name.setter
    def name(self, value: str):
        self._name = value

    @property
    def rows(self) -> List[Dict[str, str]]:
        """rows of the table as dictionaries"""
        return self._content

    @property
    def column_names(self) -> List[str]:
        """column names in file order"""
        return self._columns

    def append_column(self, name: str):
        """append a new empty column"""
        if name in self._columns:
            raise ValueError("column %s already part of the table" % name)
        self._columns.append(name)

    def append_row(self, row: Dict[str, str]):
        """add a data entry to the table, new keys are added as columns"""
        for key in row:
            if key not in self._columns:
                self._columns.append(key)
        self._content.append({key: str(value) for key, value in row.items()})

    def extend_rows(self, rows: Sequence[Dict[str, str]]):
        """add multiple data entries at once"""
        for row in rows:
            self.append_row(row)

    def column(self, name: str) -> List[str]:
        """all values of one column, missing cells as empty string"""
        return [row.get(name, "") for row in self._content]

    def dump_csv(self, file_path: Union[str, pathlib.Path]):
        """
        save content of table as csv file, comma separated with header row

        :param file_path: path of the csv file to write
        """
        self._logger.debug("write table '%s' with %d rows to %s", self.name, len(self), file_path)
        with open(file_path, "w", newline="", encoding="utf8") as csvfp:
            csv_writer = csv.DictWriter(
                csvfp,
                delimiter=",",
                quotechar='"',
                quoting=csv.QUOTE_MINIMAL,
                fieldnames=self.column_names,
                restval="",
                lineterminator="\n",
            )
            csv_writer.writeheader()
            for row in self.rows:
                csv_writer.writerow(row)
        self._logger.info("csv file %s saved successfully", file_path)

    @staticmethod
    def parse_csv(table_path: Union[str, pathlib.Path], required_columns: Optional[Sequence[str]] = None) -> "ReportTable":
        """Parse a comma separated file with header row

        :param str or Path table_path: Path to the csv file
        :param required_columns: column names that have to be present, in this order

        :returns: table object, cells are stripped strings
        :raises FileNotFoundError: if the file does not exist
        :raises ValueError: if the header does not match or a row has the wrong number of cells
        """
        logger = logging.getLogger("ReportTable parser")
        table_file = pathlib.Path(table_path)
        if not table_file.is_file():
            raise FileNotFoundError("Could not open file %s" % table_path)

        table = ReportTable(name=table_file.stem)
        with table_file.open(mode="r", encoding="utf8", newline="") as tfp:
            reader = csv.reader(tfp)
            header = next(reader, None)
            if header is None:
                logger.debug("file %s is empty", table_file)
                for column in required_columns or []:
                    table.append_column(column)
                return table

            header = [cell.strip() for cell in header]
            if required_columns is not None and tuple(header) != tuple(required_columns):
                raise ValueError("File has wrong format: expected columns %s, got %s" % (", ".join(required_columns), ", ".join(header)))
            for column in header:
                table.append_column(column)

            for line_number, cells in enumerate(reader, start=2):
                if len(cells) == 0 or (len(cells) == 1 and cells[0].strip() == ""):
                    continue
                if len(cells) != len(header):
                    raise ValueError("line %d has %d cells, expected %d" % (line_number, len(cells), len(header)))
                table._content.append({column: cell.strip() for column, cell in zip(header, cells)})

        logger.debug("Found %d columns and %d entries in %s", len(table.column_names), len(table), table_file)
        return table
