#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""misc helper functions for pyUERC, mostly encoding and decoding of the binary file formats"""
import json
import struct
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import dat_cls as ud
from .const import DESCRIPTOR_MAGIC, MATRIX_MAGIC, DescriptorKind
from .err import UERCFormatException, UERCInputException

# largest row or column count accepted while decoding
MAX_DIMENSION = 2**32


def ustr_to_ba(str_to_convert: str) -> bytes:
    """
    convert a string to utf-8 bytes, prefixed with a 16 bit length

    :param str_to_convert: string that should be converted
    """
    data = str(str_to_convert).encode("utf8")
    if len(data) > 0xFFFF:
        raise UERCInputException("string too long for the file format: %d bytes" % len(data))
    return struct.pack("<H", len(data)) + data


def ba_to_ustr(data: bytes, offset: int) -> Tuple[str, int]:
    """
    decode a length prefixed utf-8 string

    :param data: buffer to read from
    :param offset: position of the length prefix
    :returns: the string and the offset of the first byte after it
    :raises UERCFormatException: if the buffer ends early or the bytes are no valid utf-8
    """
    if offset + 2 > len(data):
        raise UERCFormatException("truncated payload: missing string length at offset %d" % offset)
    length = struct.unpack_from("<H", data, offset)[0]
    start = offset + 2
    if start + length > len(data):
        raise UERCFormatException("truncated payload: string of %d bytes at offset %d" % (length, start))
    try:
        return data[start : start + length].decode("utf8"), start + length
    except UnicodeDecodeError as ex:
        raise UERCFormatException("invalid utf-8 string at offset %d" % start) from ex


def encode_id_list(ids: Sequence[str]) -> bytes:
    """join ids as newline terminated utf-8 lines"""
    for image_id in ids:
        if "\n" in image_id:
            raise UERCInputException("id '%s' contains a line break" % image_id.replace("\n", "\\n"))
    return b"".join(image_id.encode("utf8") + b"\n" for image_id in ids)


def decode_id_list(data: bytes, offset: int, count: int) -> Tuple[List[str], int]:
    """
    read ``count`` newline terminated ids

    :returns: list of ids and the offset of the first byte after the last line break
    :raises UERCFormatException: if fewer than ``count`` lines are present
    """
    ids = []
    for _ in range(count):
        end = data.find(b"\n", offset)
        if end < 0:
            raise UERCFormatException("truncated payload: expected %d ids, found %d" % (count, len(ids)))
        try:
            ids.append(data[offset:end].decode("utf8"))
        except UnicodeDecodeError as ex:
            raise UERCFormatException("invalid utf-8 id at offset %d" % offset) from ex
        offset = end + 1
    return ids, offset


def matrix_header_size(probe_ids: Sequence[str], gallery_ids: Sequence[str]) -> int:
    """number of bytes in front of the score payload of a matrix file"""
    return len(MATRIX_MAGIC) + 16 + len(encode_id_list(probe_ids)) + len(encode_id_list(gallery_ids))


def encode_matrix(matrix: ud.SimilarityMatrix) -> bytes:
    """
    encode a similarity matrix in the binary exchange format

    magic, row and column count as unsigned 64 bit little endian, newline terminated probe ids,
    newline terminated gallery ids, row-major scores as 32 bit little endian floats
    """
    rows, cols = matrix.shape
    header = MATRIX_MAGIC + struct.pack("<QQ", rows, cols)
    payload = np.ascontiguousarray(matrix.scores, dtype="<f4").tobytes()
    return header + encode_id_list(matrix.probe_ids) + encode_id_list(matrix.gallery_ids) + payload


def decode_matrix(data: bytes) -> ud.SimilarityMatrix:
    """
    decode the binary exchange format

    :raises UERCFormatException: on magic mismatch, dimension overflow, truncated payload,
        trailing bytes or non-finite scores
    """
    if data[: len(MATRIX_MAGIC)] != MATRIX_MAGIC:
        raise UERCFormatException("magic mismatch, expected %r got %r" % (MATRIX_MAGIC, bytes(data[: len(MATRIX_MAGIC)])))
    offset = len(MATRIX_MAGIC)
    if len(data) < offset + 16:
        raise UERCFormatException("truncated payload: header ends after %d bytes" % len(data))
    rows, cols = struct.unpack_from("<QQ", data, offset)
    offset += 16
    if rows > MAX_DIMENSION or cols > MAX_DIMENSION:
        raise UERCFormatException("dimension overflow: %d x %d" % (rows, cols))

    probe_ids, offset = decode_id_list(data, offset, rows)
    gallery_ids, offset = decode_id_list(data, offset, cols)

    expected = rows * cols * 4
    available = len(data) - offset
    if available < expected:
        raise UERCFormatException("truncated payload: %d x %d scores need %d bytes, found %d" % (rows, cols, expected, available))
    if available > expected:
        raise UERCFormatException("%d unexpected bytes after the score payload" % (available - expected))

    scores = np.frombuffer(data, dtype="<f4", count=rows * cols, offset=offset).reshape((rows, cols))
    if not np.all(np.isfinite(scores)):
        raise UERCFormatException("payload contains non-finite scores")
    return ud.SimilarityMatrix(probe_ids, gallery_ids, scores.astype(np.float32))


def parameter_fingerprint(kind: DescriptorKind, params: Dict, image_size: Tuple[int, int]) -> str:
    """canonical json of everything that determines a descriptor vector"""
    content = {"kind": DescriptorKind(kind).value, "params": params, "image_size": list(image_size)}
    return json.dumps(content, sort_keys=True, separators=(",", ":"))


def encode_descriptor_header(kind: DescriptorKind, fingerprint: str, vector_length: int, record_count: int) -> bytes:
    """header of a descriptor file"""
    return (
        DESCRIPTOR_MAGIC
        + ustr_to_ba(DescriptorKind(kind).value)
        + ustr_to_ba(fingerprint)
        + struct.pack("<QQ", vector_length, record_count)
    )


def encode_descriptor_record(vector: ud.DescriptorVector) -> bytes:
    """one record of a descriptor file, id followed by the float32 values"""
    return ustr_to_ba(vector.source_image_id) + np.asarray(vector.values, dtype="<f4").tobytes()


def decode_descriptors(data: bytes) -> Tuple[DescriptorKind, str, List[ud.DescriptorVector]]:
    """
    decode a descriptor file

    :returns: kind, parameter fingerprint and the records in file order
    :raises UERCFormatException: on magic mismatch, unknown kind, truncated payload, trailing bytes
        or non-finite values
    """
    if data[: len(DESCRIPTOR_MAGIC)] != DESCRIPTOR_MAGIC:
        raise UERCFormatException("magic mismatch, expected %r got %r" % (DESCRIPTOR_MAGIC, bytes(data[: len(DESCRIPTOR_MAGIC)])))
    offset = len(DESCRIPTOR_MAGIC)
    kind_name, offset = ba_to_ustr(data, offset)
    try:
        kind = DescriptorKind(kind_name)
    except ValueError as ex:
        raise UERCFormatException("unknown descriptor kind '%s'" % kind_name) from ex
    fingerprint, offset = ba_to_ustr(data, offset)
    if offset + 16 > len(data):
        raise UERCFormatException("truncated payload: missing vector length and record count")
    vector_length, record_count = struct.unpack_from("<QQ", data, offset)
    offset += 16
    if vector_length > MAX_DIMENSION or record_count > MAX_DIMENSION:
        raise UERCFormatException("dimension overflow: %d records of length %d" % (record_count, vector_length))
    if record_count > 0 and vector_length == 0:
        raise UERCFormatException("records with zero length vectors")

    vectors = []
    for _ in range(record_count):
        image_id, offset = ba_to_ustr(data, offset)
        if offset + vector_length * 4 > len(data):
            raise UERCFormatException("truncated payload: record '%s' is incomplete" % image_id)
        values = np.frombuffer(data, dtype="<f4", count=vector_length, offset=offset)
        offset += vector_length * 4
        if not np.all(np.isfinite(values)):
            raise UERCFormatException("record '%s' contains non-finite values" % image_id)
        vectors.append(ud.DescriptorVector(values.astype(np.float64), kind, image_id))
    if offset != len(data):
        raise UERCFormatException("%d unexpected bytes after the last record" % (len(data) - offset))
    return kind, fingerprint, vectors
