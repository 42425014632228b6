#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""dataset manifest, partitioning, probe and gallery lists and the similarity matrix exchange format"""
import csv
import logging
import pathlib
from collections import Counter, OrderedDict, defaultdict
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import dat_cls as ud
from . import misc
from .const import MANIFEST_COLUMNS, UNLABELED, Origin, Partition
from .err import UERCDataException, UERCFormatException, UERCInputException, UERCStateException
from .table_reader import ReportTable

logger = logging.getLogger("UERC Protocol")

#: errors of this package pass through the scorers unchanged
OWN_ERRORS = (UERCInputException, UERCDataException, UERCStateException, UERCFormatException)

PathLike = Union[str, pathlib.Path]

#: manifest columns that have to hold a value
REQUIRED_COLUMNS = ("image_id", "subject_id", "origin", "partition", "pixel_count")

#: annotation columns, only images of the annotated origin carry labels
ANNOTATION_COLUMNS = ("pitch", "roll", "yaw", "occlusion", "gender")


def _entry_from_row(row: Dict[str, str], line: int) -> ud.ManifestEntry:
    for column in REQUIRED_COLUMNS:
        if row[column] == "":
            raise UERCDataException("manifest line %d: missing value for required field %s" % (line, column))
    entry = ud.ManifestEntry()
    entry.image_id = row["image_id"]
    entry.subject_id = row["subject_id"]
    entry.path = row["path"]
    try:
        entry.side = row["side"] or "unknown"
        entry.origin = row["origin"]
        entry.partition = row["partition"]
        for column in ANNOTATION_COLUMNS:
            setattr(entry, column, row[column] or UNLABELED)
        entry.pixel_count = int(row["pixel_count"])
    except ValueError as ex:
        raise UERCDataException("manifest line %d, image '%s': %s" % (line, entry.image_id, ex)) from ex
    if entry.origin is not Origin.AWE and entry.is_annotated():
        raise UERCDataException("image '%s' of origin %s carries annotation labels" % (entry.image_id, entry.origin.value))
    return entry


def load_manifest(path: PathLike) -> List[ud.ManifestEntry]:
    """
    read and validate a manifest csv

    :param path: location of the manifest
    :raises UERCDataException: on parse errors, duplicate ids or missing fields
    """
    try:
        table = ReportTable.parse_csv(path, MANIFEST_COLUMNS)
    except ValueError as ex:
        raise UERCDataException("could not parse manifest %s: %s" % (path, ex)) from ex

    entries = []
    seen = set()
    for line, row in enumerate(table.rows, start=2):
        entry = _entry_from_row(row, line)
        if entry.image_id in seen:
            raise UERCDataException("duplicate image id '%s' in manifest line %d" % (entry.image_id, line))
        seen.add(entry.image_id)
        entries.append(entry)
    logger.info("loaded %d manifest entries of %d subjects from %s", len(entries), len({e.subject_id for e in entries}), path)
    return entries


def write_manifest(entries: Sequence[ud.ManifestEntry], path: PathLike):
    """write entries as manifest csv"""
    table = ReportTable(name="manifest", columns=MANIFEST_COLUMNS)
    for entry in entries:
        row = {}
        for column in MANIFEST_COLUMNS:
            value = getattr(entry, column)
            row[column] = value.value if hasattr(value, "value") else str(value)
        table.append_row(row)
    table.dump_csv(path)


def entry_index(entries: Sequence[ud.ManifestEntry]) -> Dict[str, ud.ManifestEntry]:
    """manifest entries by image id"""
    return {entry.image_id: entry for entry in entries}


def partition(
    entries: Sequence[ud.ManifestEntry], expected_totals: Optional[Dict[str, Tuple[int, int]]] = None
) -> Tuple[List[ud.ManifestEntry], List[ud.ManifestEntry]]:
    """
    split entries into train and test set

    :param entries: manifest entries
    :param expected_totals: optional (images, subjects) per partition name that have to match
    :raises UERCStateException: if a subject appears in both sets or the totals do not match
    """
    train = [entry for entry in entries if entry.partition is Partition.TRAIN]
    test = [entry for entry in entries if entry.partition is Partition.TEST]
    shared = {entry.subject_id for entry in train} & {entry.subject_id for entry in test}
    if shared:
        raise UERCStateException("subjects in train and test partition: %s" % ", ".join(sorted(shared)))

    for name, subset in ((Partition.TRAIN.value, train), (Partition.TEST.value, test)):
        images, subjects = len(subset), len({entry.subject_id for entry in subset})
        logger.debug("%s partition: %d images of %d subjects", name, images, subjects)
        if expected_totals is not None and name in expected_totals and tuple(expected_totals[name]) != (images, subjects):
            raise UERCStateException(
                "%s partition has %d images of %d subjects, expected %d of %d" % ((name, images, subjects) + tuple(expected_totals[name]))
            )
    return train, test


def partition_summary(entries: Sequence[ud.ManifestEntry]) -> ReportTable:
    """overview of images and subjects per partition and origin"""
    table = ReportTable(name="partitions", columns=("partition", "origin", "images", "subjects", "images_per_subject"))
    for part in Partition:
        subset = [entry for entry in entries if entry.partition is part]
        for origin in list(Origin) + [None]:
            rows = subset if origin is None else [entry for entry in subset if entry.origin is origin]
            if not rows and origin is not None:
                continue
            per_subject = set(Counter(entry.subject_id for entry in rows).values())
            table.append_row(
                {
                    "partition": part.value,
                    "origin": "total" if origin is None else origin.value,
                    "images": len(rows),
                    "subjects": len({entry.subject_id for entry in rows}),
                    "images_per_subject": str(per_subject.pop()) if len(per_subject) == 1 else ("variable" if per_subject else "0"),
                }
            )
    return table


def build_gallery(test_set: Sequence[ud.ManifestEntry]) -> List[str]:
    """
    every test image, ordered by image id

    :raises UERCStateException: for an empty test set
    """
    if len(test_set) == 0:
        raise UERCStateException("test set is empty")
    return sorted(entry.image_id for entry in test_set)


def build_probes(test_set: Sequence[ud.ManifestEntry]) -> List[str]:
    """
    test images of subjects with at least 2 test images, ordered by image id

    :raises UERCStateException: for an empty test set
    """
    if len(test_set) == 0:
        raise UERCStateException("test set is empty")
    counts = Counter(entry.subject_id for entry in test_set)
    probes = sorted(entry.image_id for entry in test_set if counts[entry.subject_id] >= 2)
    logger.debug("%d probes of %d subjects", len(probes), len([s for s, c in counts.items() if c >= 2]))
    return probes


def _check_closed(probe_ids: Sequence[str], gallery_ids: Sequence[str]):
    galleries = set(gallery_ids)
    missing = [probe_id for probe_id in probe_ids if probe_id not in galleries]
    if missing:
        raise UERCDataException("%d probes are not part of the gallery, first one '%s'" % (len(missing), missing[0]))


def _run_rows(row_count: int, compute: Callable[[int], np.ndarray], threads: int) -> List[np.ndarray]:
    if threads <= 1 or row_count <= 1:
        return [compute(i) for i in range(row_count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(compute, range(row_count)))


def compute_matrix(
    probes: Sequence[Tuple[str, Any]],
    gallery: Sequence[Tuple[str, Any]],
    scorer: Callable[[Any, Any], float],
    threads: int = 1,
) -> ud.SimilarityMatrix:
    """
    score every probe against every gallery item

    The scorer sees exactly two items per call. Rows may be computed in parallel, the result
    does not depend on the scheduling.

    :param probes: (image id, item) pairs
    :param gallery: (image id, item) pairs
    :param scorer: similarity of a probe item and a gallery item
    :param threads: number of worker threads
    :raises UERCDataException: if a probe is no gallery image, the scorer fails with a foreign error or returns a non-finite score
    """
    probe_ids = [probe_id for probe_id, _ in probes]
    gallery_ids = [gallery_id for gallery_id, _ in gallery]
    _check_closed(probe_ids, gallery_ids)

    def compute(i: int) -> np.ndarray:
        probe_id, probe_item = probes[i]
        row = np.empty(len(gallery), dtype=np.float64)
        for j, (gallery_id, gallery_item) in enumerate(gallery):
            try:
                row[j] = scorer(probe_item, gallery_item)
            except OWN_ERRORS:
                raise
            except Exception as ex:
                raise UERCDataException("scorer failed for probe '%s' and gallery '%s': %s" % (probe_id, gallery_id, ex)) from ex
            if not np.isfinite(row[j]):
                raise UERCDataException("non-finite score for probe '%s' and gallery '%s'" % (probe_id, gallery_id))
        return row

    rows = _run_rows(len(probes), compute, threads)
    return _assemble(probe_ids, gallery_ids, rows)


def compute_matrix_rows(
    probe_ids: Sequence[str], gallery_ids: Sequence[str], row_scorer: Callable[[str], np.ndarray], threads: int = 1
) -> ud.SimilarityMatrix:
    """
    like :func:`compute_matrix` with a scorer that returns the whole row of one probe

    used for fused scores, where normalization needs the complete row
    """
    _check_closed(probe_ids, gallery_ids)

    def compute(i: int) -> np.ndarray:
        probe_id = probe_ids[i]
        try:
            row = np.asarray(row_scorer(probe_id), dtype=np.float64)
        except OWN_ERRORS:
            raise
        except Exception as ex:
            raise UERCDataException("scoring failed for probe '%s': %s" % (probe_id, ex)) from ex
        if row.shape != (len(gallery_ids),):
            raise UERCDataException("row of probe '%s' has %d scores, expected %d" % (probe_id, row.size, len(gallery_ids)))
        bad = np.nonzero(~np.isfinite(row))[0]
        if bad.size > 0:
            raise UERCDataException("non-finite score for probe '%s' and gallery '%s'" % (probe_id, gallery_ids[bad[0]]))
        return row

    rows = _run_rows(len(probe_ids), compute, threads)
    return _assemble(probe_ids, gallery_ids, rows)


def _assemble(probe_ids: Sequence[str], gallery_ids: Sequence[str], rows: List[np.ndarray]) -> ud.SimilarityMatrix:
    scores = np.vstack(rows) if rows else np.zeros((0, len(gallery_ids)))
    # scores beyond the float32 range are rejected by the matrix itself
    matrix = ud.SimilarityMatrix(probe_ids, gallery_ids, scores)
    logger.info("computed similarity matrix of %d x %d", *matrix.shape)
    return matrix


def write_matrix(matrix: ud.SimilarityMatrix, path: PathLike):
    """
    write a matrix in the binary exchange format

    :raises UERCDataException: if a probe is not part of the gallery
    """
    _check_closed(matrix.probe_ids, matrix.gallery_ids)
    pathlib.Path(path).write_bytes(misc.encode_matrix(matrix))
    logger.info("wrote %d x %d matrix to %s", matrix.shape[0], matrix.shape[1], path)


def read_matrix(path: PathLike) -> ud.SimilarityMatrix:
    """
    read a matrix in the binary exchange format

    :raises UERCFormatException: for malformed files
    """
    path = pathlib.Path(path)
    try:
        data = path.read_bytes()
    except OSError as ex:
        raise UERCFormatException("could not read matrix file %s: %s" % (path, ex)) from ex
    matrix = misc.decode_matrix(data)
    logger.debug("read %d x %d matrix from %s", matrix.shape[0], matrix.shape[1], path)
    return matrix


def write_matrix_csv(matrix: ud.SimilarityMatrix, path: PathLike):
    """csv export, gallery ids in the first row, probe ids in the first column"""
    with open(path, "w", newline="", encoding="utf8") as csvfp:
        writer = csv.writer(csvfp, lineterminator="\n")
        writer.writerow(["probe_id"] + list(matrix.gallery_ids))
        for probe_id, row in zip(matrix.probe_ids, matrix.scores):
            writer.writerow([probe_id] + [repr(float(value)) for value in row])
    logger.info("wrote csv export of %d x %d matrix to %s", matrix.shape[0], matrix.shape[1], path)


def read_matrix_csv(path: PathLike) -> ud.SimilarityMatrix:
    """
    csv import, the counterpart of :func:`write_matrix_csv`

    :raises UERCFormatException: for malformed files or non-numeric scores
    """
    try:
        with open(path, "r", newline="", encoding="utf8") as csvfp:
            lines = list(csv.reader(csvfp))
    except OSError as ex:
        raise UERCFormatException("could not read matrix csv %s: %s" % (path, ex)) from ex
    if not lines:
        raise UERCFormatException("matrix csv %s has no header row" % path)
    gallery_ids = lines[0][1:]
    probe_ids, rows = [], []
    for number, cells in enumerate(lines[1:], start=2):
        if len(cells) != len(gallery_ids) + 1:
            raise UERCFormatException("line %d of %s has %d cells, expected %d" % (number, path, len(cells), len(gallery_ids) + 1))
        probe_ids.append(cells[0])
        try:
            rows.append([float(cell) for cell in cells[1:]])
        except ValueError as ex:
            raise UERCFormatException("line %d of %s: %s" % (number, path, ex)) from ex
    scores = np.asarray(rows, dtype=np.float32).reshape((len(probe_ids), len(gallery_ids)))
    if not np.all(np.isfinite(scores)):
        raise UERCFormatException("matrix csv %s contains non-finite scores" % path)
    return ud.SimilarityMatrix(probe_ids, gallery_ids, scores)


def restrict_matrix(matrix: ud.SimilarityMatrix, probe_ids: Sequence[str], gallery_ids: Sequence[str]) -> ud.SimilarityMatrix:
    """
    sub matrix of the given rows and columns in the given order

    :raises UERCDataException: for ids that are not part of the matrix
    """
    probe_index, gallery_index = matrix.probe_index(), matrix.gallery_index()
    try:
        rows = [probe_index[probe_id] for probe_id in probe_ids]
        cols = [gallery_index[gallery_id] for gallery_id in gallery_ids]
    except KeyError as ex:
        raise UERCDataException("id %s is not part of the matrix" % ex) from ex
    scores = matrix.scores[np.ix_(rows, cols)] if rows and cols else np.zeros((len(rows), len(cols)), dtype=np.float32)
    return ud.SimilarityMatrix(probe_ids, gallery_ids, scores)


def origin_subset(matrix: ud.SimilarityMatrix, entries: Sequence[ud.ManifestEntry], origin: Origin) -> ud.SimilarityMatrix:
    """restrict probes and gallery to the images of one origin, keeping the matrix order"""
    origin = Origin(origin)
    index = entry_index(entries)
    check_ids(matrix, index)
    probe_ids = [p for p in matrix.probe_ids if index[p].origin is origin]
    gallery_ids = [g for g in matrix.gallery_ids if index[g].origin is origin]
    logger.info("%s subset: %d probes, %d gallery images", origin.value, len(probe_ids), len(gallery_ids))
    return restrict_matrix(matrix, probe_ids, gallery_ids)


def check_ids(matrix: ud.SimilarityMatrix, index: Dict[str, ud.ManifestEntry]):
    """
    every id of the matrix has to resolve to a manifest entry

    :raises UERCDataException: naming the first unknown id
    """
    for image_id in list(matrix.probe_ids) + list(matrix.gallery_ids):
        if image_id not in index:
            raise UERCDataException("matrix id '%s' is not part of the manifest" % image_id)


def subjects_with_images(entries: Sequence[ud.ManifestEntry]) -> Dict[str, List[str]]:
    """sorted image ids per subject, subjects in order of first appearance"""
    images: Dict[str, List[str]] = OrderedDict()
    grouped = defaultdict(list)
    for entry in entries:
        images.setdefault(entry.subject_id, [])
        grouped[entry.subject_id].append(entry.image_id)
    for subject_id in images:
        images[subject_id] = sorted(grouped[subject_id])
    return images
