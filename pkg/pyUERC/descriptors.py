#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""hand crafted feature extraction: uniform lbp, hog and chainlets, plus the descriptor file container"""
import logging
import pathlib
from collections import OrderedDict
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np
from scipy import ndimage
from skimage import feature

from . import dat_cls as ud
from . import imaging
from . import misc
from .const import BLOCK_EPS, HOG_SIZE, PIPELINE_SIZE, DescriptorKind
from .err import UERCDataException, UERCFormatException, UERCInputException

logger = logging.getLogger("UERC Descriptors")

#: number of bins of the uniform lbp histogram with 8 neighbors
UNIFORM_BINS = 59


def _circular_transitions(code: int, bits: int = 8) -> int:
    rotated = ((code >> 1) | ((code & 1) << (bits - 1))) & ((1 << bits) - 1)
    return bin(code ^ rotated).count("1")


def _build_uniform_lut() -> np.ndarray:
    lut = np.full(256, UNIFORM_BINS - 1, dtype=np.intp)
    uniform_codes = [code for code in range(256) if _circular_transitions(code) <= 2]
    for index, code in enumerate(uniform_codes):
        lut[code] = index
    return lut


UNIFORM_LUT = _build_uniform_lut()


def uniform_bin(code: int, neighbors: int = 8) -> int:
    """
    histogram bin of an lbp code, uniform codes in ascending order, everything else in the last bin

    :raises UERCInputException: if the code is out of range or neighbors is not 8
    """
    if neighbors != 8:
        raise UERCInputException("uniform mapping is only defined for 8 neighbors")
    if not 0 <= code <= 255:
        raise UERCInputException("lbp code %d out of range [0, 255]" % code)
    return int(UNIFORM_LUT[code])


def lbp_code(img: ud.GrayImage, center: Tuple[int, int], radius: int = 2, neighbors: int = 8) -> int:
    """
    local binary pattern of a single pixel, bit i is set if the neighbor at angle 2*pi*i/neighbors is >= the center

    :param img: source image
    :param center: (x, y) of the center pixel
    :raises UERCInputException: if the sampling circle leaves the image
    """
    x, y = center
    if x - radius < 0 or y - radius < 0 or x + radius > img.width - 1 or y + radius > img.height - 1:
        raise UERCInputException("center (%d, %d) too close to the border for radius %d" % (x, y, radius))
    window = img.data[y - radius : y + radius + 1, x - radius : x + radius + 1]
    return int(feature.local_binary_pattern(window, neighbors, radius, method="default")[radius, radius])


def lbp_code_image(img: ud.GrayImage, radius: int = 2, neighbors: int = 8) -> np.ndarray:
    """codes of every pixel whose sampling circle lies inside the image, -1 elsewhere"""
    codes = np.full(img.data.shape, -1, dtype=np.intp)
    if img.width <= 2 * radius or img.height <= 2 * radius:
        return codes
    inner = (slice(radius, img.height - radius), slice(radius, img.width - radius))
    codes[inner] = feature.local_binary_pattern(img.data, neighbors, radius, method="default")[inner].astype(np.intp)
    return codes


def patch_starts(size: int, patch: int, step: int) -> np.ndarray:
    """offsets of the sliding window positions along one axis"""
    return np.arange(0, size - patch + 1, step)


def lbp_length(width: int, height: int, params: Optional[ud.LbpParams] = None) -> int:
    """closed form length of the lbp descriptor"""
    params = params or ud.LbpParams()
    return len(patch_starts(width, params.patch, params.step)) * len(patch_starts(height, params.patch, params.step)) * UNIFORM_BINS


def lbp_descriptor(img: ud.GrayImage, params: Optional[ud.LbpParams] = None) -> ud.DescriptorVector:
    """
    concatenated uniform lbp histograms of overlapping patches, row-major patch order

    every patch histogram is L1 normalized

    :raises UERCInputException: if the image is smaller than one patch
    """
    params = params or ud.LbpParams()
    if img.width < params.patch or img.height < params.patch:
        raise UERCInputException("image of %d x %d pixels is smaller than one %d pixel patch" % (img.width, img.height, params.patch))

    codes = lbp_code_image(img, params.radius, params.neighbors)
    valid = codes >= 0
    bins = np.where(valid, UNIFORM_LUT[np.where(valid, codes, 0)], 0)

    # integral histogram, one channel per bin
    one_hot = np.zeros(img.data.shape + (UNIFORM_BINS,), dtype=np.int32)
    rows, cols = np.nonzero(valid)
    one_hot[rows, cols, bins[rows, cols]] = 1
    integral = np.zeros((img.height + 1, img.width + 1, UNIFORM_BINS), dtype=np.int64)
    integral[1:, 1:] = one_hot.cumsum(axis=0).cumsum(axis=1)

    ys = patch_starts(img.height, params.patch, params.step)
    xs = patch_starts(img.width, params.patch, params.step)
    y0, x0 = ys[:, None], xs[None, :]
    y1, x1 = y0 + params.patch, x0 + params.patch
    histograms = (integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]).astype(np.float64)
    sums = histograms.sum(axis=2, keepdims=True)
    histograms = np.divide(histograms, sums, out=np.zeros_like(histograms), where=sums > 0)
    logger.debug("lbp of '%s': %d x %d patches", img.image_id, len(ys), len(xs))
    return ud.DescriptorVector(histograms.ravel(), DescriptorKind.LBP, img.image_id)


def _normalize_blocks(cells: np.ndarray, block: int, stride: int) -> np.ndarray:
    """group cells of shape (rows, cols, bins) into overlapping L2 normalized blocks"""
    rows, cols = cells.shape[:2]
    vectors = []
    for by in range(0, rows - block + 1, stride):
        for bx in range(0, cols - block + 1, stride):
            vector = cells[by : by + block, bx : bx + block].ravel()
            vectors.append(vector / (np.linalg.norm(vector) + BLOCK_EPS))
    return np.concatenate(vectors)


def hog_length(width: int, height: int, params: Optional[ud.HogParams] = None) -> int:
    """closed form length of the hog descriptor"""
    params = params or ud.HogParams()
    cols, rows = width // params.cell, height // params.cell
    return (rows - params.block + 1) * (cols - params.block + 1) * params.block * params.block * params.bins


def hog_descriptor(img: ud.GrayImage, params: Optional[ud.HogParams] = None) -> ud.DescriptorVector:
    """
    histogram of oriented gradients with unsigned orientations

    partial cells at the right and bottom border are dropped

    :raises UERCInputException: if the image does not hold a single block
    """
    params = params or ud.HogParams()
    cols, rows = img.width // params.cell, img.height // params.cell
    if cols < params.block or rows < params.block:
        raise UERCInputException("image of %d x %d pixels too small for one hog block" % (img.width, img.height))

    data = img.data.astype(np.float64)
    grad_x = np.zeros_like(data)
    grad_y = np.zeros_like(data)
    grad_x[:, 1:-1] = data[:, 2:] - data[:, :-2]
    grad_y[1:-1, :] = data[2:, :] - data[:-2, :]
    magnitude = np.hypot(grad_x, grad_y)
    angle = np.degrees(np.arctan2(grad_y, grad_x)) % 180.0

    bin_width = 180.0 / params.bins
    position = angle / bin_width
    lower = np.floor(position)
    fraction = position - lower
    lower = lower.astype(np.intp) % params.bins
    upper = (lower + 1) % params.bins

    height, width = rows * params.cell, cols * params.cell
    cell_y = (np.arange(height) // params.cell)[:, None]
    cell_x = (np.arange(width) // params.cell)[None, :]
    cell_index = (cell_y * cols + cell_x) * params.bins
    weights_low = (magnitude * (1.0 - fraction))[:height, :width]
    weights_high = (magnitude * fraction)[:height, :width]
    histogram = np.bincount((cell_index + lower[:height, :width]).ravel(), weights=weights_low.ravel(), minlength=rows * cols * params.bins)
    histogram += np.bincount((cell_index + upper[:height, :width]).ravel(), weights=weights_high.ravel(), minlength=rows * cols * params.bins)

    values = _normalize_blocks(histogram.reshape((rows, cols, params.bins)), params.block, 1)
    return ud.DescriptorVector(values, DescriptorKind.HOG, img.image_id)


def edge_map(img: ud.GrayImage, low: float = 40.0, high: float = 100.0) -> ud.BinaryMask:
    """
    canny style edges: sobel gradients, non maximum suppression and hysteresis

    magnitudes are scaled by 1/4, so thresholds refer to the intensity range

    :raises UERCInputException: unless 0 <= low <= high
    """
    if not 0 <= low <= high:
        raise UERCInputException("edge thresholds need 0 <= low <= high, got %s and %s" % (low, high))
    data = img.data.astype(np.float64)
    grad_x = ndimage.sobel(data, axis=1, mode="nearest")
    grad_y = ndimage.sobel(data, axis=0, mode="nearest")
    magnitude = np.hypot(grad_x, grad_y) / 4.0

    # quantized direction, 0 = horizontal gradient, 1 = down-right, 2 = vertical, 3 = down-left
    angle = np.degrees(np.arctan2(grad_y, grad_x)) % 180.0
    sector = (np.floor((angle + 22.5) / 45.0).astype(np.intp)) % 4
    steps = ((1, 0), (1, 1), (0, 1), (-1, 1))

    padded = np.pad(magnitude, 1, mode="constant", constant_values=0.0)
    height, width = magnitude.shape
    keep = np.zeros(magnitude.shape, dtype=bool)
    for index, (dx, dy) in enumerate(steps):
        ahead = padded[1 + dy : 1 + dy + height, 1 + dx : 1 + dx + width]
        behind = padded[1 - dy : 1 - dy + height, 1 - dx : 1 - dx + width]
        keep |= (sector == index) & (magnitude > ahead) & (magnitude >= behind)
    keep &= magnitude > 0

    strong = keep & (magnitude >= high)
    weak = keep & (magnitude >= low)
    labels, count = ndimage.label(weak, structure=imaging.SQUARE_3X3)
    if count == 0:
        return ud.BinaryMask(np.zeros(magnitude.shape, dtype=bool))
    connected = np.zeros(count + 1, dtype=bool)
    connected[np.unique(labels[strong])] = True
    connected[0] = False
    return ud.BinaryMask(connected[labels])


def _turn_order(previous: Optional[int]) -> Tuple[int, ...]:
    if previous is None:
        return tuple(range(8))
    return tuple((previous + turn) % 8 for turn in (0, 1, -1, 2, -2, 3, -3, 4))


def _free_neighbors(free: np.ndarray, x: int, y: int) -> int:
    window = free[max(y - 1, 0) : y + 2, max(x - 1, 0) : x + 2]
    return int(np.count_nonzero(window)) - int(free[y, x])


def _walk(free: np.ndarray, start: Tuple[int, int]) -> List[Tuple[int, int]]:
    """follow free pixels from start, smallest turn first, counterclockwise first on equal turns"""
    height, width = free.shape
    x, y = start
    free[y, x] = False
    path = [(x, y)]
    previous = None
    while True:
        for code in _turn_order(previous):
            nx, ny = x + ud.ChainCode.DX[code], y + ud.ChainCode.DY[code]
            if 0 <= nx < width and 0 <= ny < height and free[ny, nx]:
                break
        else:
            return path
        free[ny, nx] = False
        path.append((nx, ny))
        previous, x, y = code, nx, ny


def _adjacent(a: Tuple[int, int], b: Tuple[int, int]) -> bool:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1])) == 1


def _splice(paths: List[List[Tuple[int, int]]], pixel: Tuple[int, int]) -> bool:
    """insert a pixel between two successive path pixels it touches, or at a path end"""
    for path in paths:
        for i in range(len(path) - 1):
            if _adjacent(pixel, path[i]) and _adjacent(pixel, path[i + 1]):
                path.insert(i + 1, pixel)
                return True
        if _adjacent(pixel, path[-1]):
            path.append(pixel)
            return True
        if _adjacent(pixel, path[0]):
            path.insert(0, pixel)
            return True
    return False


def _to_chain(path: List[Tuple[int, int]]) -> ud.ChainCode:
    steps = {(dx, dy): code for code, (dx, dy) in enumerate(zip(ud.ChainCode.DX, ud.ChainCode.DY))}
    moves = [steps[(b[0] - a[0], b[1] - a[1])] for a, b in zip(path[:-1], path[1:])]
    chain = ud.ChainCode(path[0], moves)
    if len(moves) < 2:
        return chain
    # walking direction with the smaller sorted turn list, independent of image rotation
    backward = chain.reversed()
    if sorted(relative_chain_code(backward)) < sorted(relative_chain_code(chain)):
        return backward
    return chain


def trace_chains(edges: ud.BinaryMask, min_moves: int = 2) -> List[ud.ChainCode]:
    """
    follow every 8-connected edge component into chain codes

    A component is entered at its row-major first end pixel (a pixel with at most one untraced
    neighbor), or at its row-major first pixel if it is closed. From there the trace moves to the
    untraced neighbor with the smallest turn, counterclockwise first on equal turns. Pixels left over
    start new chains in the same way. A simple curve gives a single chain. Single pixels left by a
    too short chain are spliced into a neighboring chain of the component when they touch it.

    Every chain is walked in the direction whose sorted relative codes are smaller, so a rotated
    curve gives the same relative codes. Every edge pixel ends up in at most one chain.

    :param edges: edge mask
    :param min_moves: chains with fewer moves are dropped
    """
    mask = edges.data
    labels, _ = ndimage.label(mask, structure=imaging.SQUARE_3X3)
    free = mask.copy()
    chains = []
    for label, window in enumerate(ndimage.find_objects(labels), start=1):
        ys, xs = np.nonzero(labels[window] == label)
        pixels = [(int(x) + window[1].start, int(y) + window[0].start) for y, x in zip(ys, xs)]
        paths: List[List[Tuple[int, int]]] = []
        leftover: List[Tuple[int, int]] = []
        while True:
            remaining = [p for p in pixels if free[p[1], p[0]]]
            if not remaining:
                break
            ends = [p for p in remaining if _free_neighbors(free, p[0], p[1]) <= 1]
            path = _walk(free, ends[0] if ends else remaining[0])
            if len(path) - 1 >= min_moves:
                paths.append(path)
            else:
                leftover.extend(path)

        spliced = True
        while leftover and spliced:
            spliced = False
            for pixel in list(leftover):
                if _splice(paths, pixel):
                    leftover.remove(pixel)
                    spliced = True
        chains.extend(_to_chain(path) for path in paths)
    return chains


def relative_chain_code(chain: ud.ChainCode) -> List[int]:
    """
    direction changes between successive moves, (a[i] - a[i - 1]) mod 8

    :raises UERCInputException: if the chain has fewer than 2 moves
    """
    moves = chain.moves
    if len(moves) < 2:
        raise UERCInputException("relative chain code needs at least 2 moves, got %d" % len(moves))
    return [(moves[i] - moves[i - 1]) % 8 for i in range(1, len(moves))]


def chainlet_cells(width: int, height: int, cell: int) -> Tuple[int, int]:
    """number of cell columns and rows, partial cells at the border are kept"""
    return -(-width // cell), -(-height // cell)


def chainlets_length(width: int, height: int, params: Optional[ud.ChainletParams] = None) -> int:
    """closed form length of the chainlets descriptor"""
    params = params or ud.ChainletParams()
    cols, rows = chainlet_cells(width, height, params.cell)
    block_cols = (cols - params.block) // params.block_stride + 1
    block_rows = (rows - params.block) // params.block_stride + 1
    return block_cols * block_rows * params.block * params.block * params.bins


def chainlets_descriptor(img: ud.GrayImage, params: Optional[ud.ChainletParams] = None) -> ud.DescriptorVector:
    """
    block normalized histograms of relative chain codes

    every relative code counts for the cell of the pixel where its move ends

    :raises UERCInputException: if the image does not hold a single block
    """
    params = params or ud.ChainletParams()
    cols, rows = chainlet_cells(img.width, img.height, params.cell)
    if cols < params.block or rows < params.block:
        raise UERCInputException("image of %d x %d pixels too small for one chainlet block" % (img.width, img.height))

    cells = np.zeros((rows, cols, params.bins), dtype=np.float64)
    chains = trace_chains(edge_map(img, params.low, params.high))
    for chain in chains:
        path = chain.path()
        for i, code in enumerate(relative_chain_code(chain), start=1):
            x, y = path[i + 1]
            cells[y // params.cell, x // params.cell, code] += 1.0
    logger.debug("chainlets of '%s': %d chains", img.image_id, len(chains))
    values = _normalize_blocks(cells, params.block, params.block_stride)
    return ud.DescriptorVector(values, DescriptorKind.CHAINLETS, img.image_id)


def default_params(kind: DescriptorKind):
    """parameter object with default values for a descriptor kind, ``None`` for external descriptors"""
    kind = DescriptorKind(kind)
    if kind is DescriptorKind.LBP:
        return ud.LbpParams()
    if kind is DescriptorKind.HOG:
        return ud.HogParams()
    if kind is DescriptorKind.CHAINLETS:
        return ud.ChainletParams()
    return None


def parameter_fingerprint(kind: DescriptorKind, params=None) -> str:
    """fingerprint stored in the descriptor file header"""
    kind = DescriptorKind(kind)
    if params is None:
        params = default_params(kind)
    image_size = HOG_SIZE if kind is DescriptorKind.HOG else PIPELINE_SIZE
    return misc.parameter_fingerprint(kind, {} if params is None else params.as_dict(), image_size)


def extract_pipeline(kind: DescriptorKind, img: ud.ColorImage, params=None, flip: bool = False) -> ud.DescriptorVector:
    """
    full extraction from a decoded image

    :param kind: descriptor kind, external descriptors can not be extracted
    :param img: decoded image
    :param params: parameter object of the kind, defaults when ``None``
    :param flip: mirror the image before extraction
    :raises UERCInputException: for external descriptors
    """
    kind = DescriptorKind(kind)
    if flip:
        img = imaging.flip_color(img)
    if kind is DescriptorKind.LBP:
        width, height = PIPELINE_SIZE
        gray = imaging.resize_bilinear(imaging.to_grayscale(img), width, height)
        return lbp_descriptor(gray, params)
    if kind is DescriptorKind.HOG:
        width, height = HOG_SIZE
        gray = imaging.resize_bilinear(imaging.to_grayscale(img), width, height)
        return hog_descriptor(gray, params)
    if kind is DescriptorKind.CHAINLETS:
        equalized, roi = imaging.preprocess_ucss(img)
        if roi.is_empty():
            logger.warning("empty ear mask for '%s', using the whole image", img.image_id)
            masked = equalized
        else:
            masked = imaging.apply_mask(equalized, roi)
        return chainlets_descriptor(masked, params)
    raise UERCInputException("external descriptors have to be computed outside of this package")


class DescriptorStore:
    """descriptor vectors of one file, keyed by image id in file order"""

    def __init__(self, kind: DescriptorKind, fingerprint: str, vectors: Iterable[ud.DescriptorVector] = ()):
        self._logger = logging.getLogger("UERC Descriptors")
        self.kind = DescriptorKind(kind)
        self.fingerprint = fingerprint
        self._vectors: Dict[str, ud.DescriptorVector] = OrderedDict()
        for vector in vectors:
            self.add(vector)

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, image_id: str) -> bool:
        return image_id in self._vectors

    def __iter__(self) -> Iterator[ud.DescriptorVector]:
        return iter(self._vectors.values())

    @property
    def ids(self) -> List[str]:
        """image ids in file order"""
        return list(self._vectors.keys())

    @property
    def vector_length(self) -> int:
        """common length of all vectors, 0 for an empty store"""
        for vector in self._vectors.values():
            return len(vector)
        return 0

    def add(self, vector: ud.DescriptorVector):
        """add a record, ids have to be unique and lengths equal"""
        if vector.source_image_id in self._vectors:
            raise UERCDataException("duplicate descriptor record for image '%s'" % vector.source_image_id)
        if len(self._vectors) > 0 and len(vector) != self.vector_length:
            raise UERCInputException(
                "descriptor of '%s' has length %d, expected %d" % (vector.source_image_id, len(vector), self.vector_length)
            )
        self._vectors[vector.source_image_id] = vector

    def get(self, image_id: str) -> ud.DescriptorVector:
        """vector of an image

        :raises UERCDataException: if no record exists
        """
        try:
            return self._vectors[image_id]
        except KeyError as ex:
            raise UERCDataException("no descriptor record for image '%s'" % image_id) from ex

    def matrix(self, image_ids: Iterable[str]) -> np.ndarray:
        """vectors of the given images stacked as rows"""
        return np.stack([self.get(image_id).values for image_id in image_ids])


def write_descriptors(
    path: Union[str, pathlib.Path], kind: DescriptorKind, fingerprint: str, vectors: Iterable[ud.DescriptorVector]
) -> int:
    """
    write descriptor records to a file

    :returns: number of records written
    :raises UERCInputException: if lengths differ or a vector has another kind
    """
    kind = DescriptorKind(kind)
    store = DescriptorStore(kind, fingerprint)
    for vector in vectors:
        if vector.kind is not kind:
            raise UERCInputException("record '%s' of kind %s in a %s file" % (vector.source_image_id, vector.kind.value, kind.value))
        store.add(vector)
    chunks = [misc.encode_descriptor_header(kind, fingerprint, store.vector_length, len(store))]
    chunks.extend(misc.encode_descriptor_record(vector) for vector in store)
    pathlib.Path(path).write_bytes(b"".join(chunks))
    logger.info("wrote %d %s descriptors of length %d to %s", len(store), kind.value, store.vector_length, path)
    return len(store)


def read_descriptors(path: Union[str, pathlib.Path]) -> DescriptorStore:
    """
    read a descriptor file

    :raises UERCFormatException: for malformed files
    """
    path = pathlib.Path(path)
    try:
        data = path.read_bytes()
    except OSError as ex:
        raise UERCFormatException("could not read descriptor file %s: %s" % (path, ex)) from ex
    kind, fingerprint, vectors = misc.decode_descriptors(data)
    store = DescriptorStore(kind, fingerprint, vectors)
    logger.debug("read %d %s descriptors from %s", len(store), kind.value, path)
    return store
