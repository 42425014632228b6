#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""pixel level operations and the segmentation preprocessing that isolates the ear region"""
import logging
import math
import pathlib
from typing import Dict, Optional, Tuple, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage
from skimage import filters

from . import dat_cls as ud
from .const import FLIP_SUFFIX, PIPELINE_SIZE
from .err import UERCDataException, UERCInputException

logger = logging.getLogger("UERC Imaging")

#: 3x3 square used for morphology and 8-connectivity
SQUARE_3X3 = np.ones((3, 3), dtype=bool)

#: default skin tone bounds as (low, high); hue in degrees, saturation and value in [0, 1]
SKIN_HUE = (0.0, 50.0)
SKIN_SATURATION = (0.15, 0.90)
SKIN_VALUE = (0.20, 0.95)


def round_half_up(values: np.ndarray) -> np.ndarray:
    """round to the nearest integer, halves go up, clamped to the 8 bit range"""
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def read_color_image(path: Union[str, pathlib.Path], image_id: Optional[str] = None) -> ud.ColorImage:
    """
    decode a png or jpeg file, gray scale files are expanded to rgb

    :param path: location of the image file
    :param image_id: id for the image, defaults to the file stem
    :raises UERCDataException: if the file can not be read or decoded
    """
    path = pathlib.Path(path)
    try:
        with Image.open(path) as pil_image:
            data = np.asarray(pil_image.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as ex:
        raise UERCDataException("could not decode image %s: %s" % (path, ex)) from ex
    logger.debug("read %s with %d x %d pixels", path, data.shape[1], data.shape[0])
    return ud.ColorImage(data, path.stem if image_id is None else image_id)


def to_grayscale(img: ud.ColorImage) -> ud.GrayImage:
    """luma with BT.601 weights"""
    rgb = img.data.astype(np.float64)
    luma = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return ud.GrayImage(round_half_up(luma), img.image_id)


def _sample_positions(size_in: int, size_out: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """lower index, upper index and fraction for corner aligned linear sampling"""
    if size_out == 1:
        positions = np.array([(size_in - 1) / 2.0])
    else:
        positions = np.arange(size_out, dtype=np.float64) * (size_in - 1) / (size_out - 1)
    lower = np.floor(positions).astype(np.intp)
    upper = np.minimum(lower + 1, size_in - 1)
    return lower, upper, positions - lower


def _resize_plane(plane: np.ndarray, width: int, height: int) -> np.ndarray:
    x0, x1, fx = _sample_positions(plane.shape[1], width)
    y0, y1, fy = _sample_positions(plane.shape[0], height)
    top = plane[y0][:, x0] + (plane[y0][:, x1] - plane[y0][:, x0]) * fx
    bottom = plane[y1][:, x0] + (plane[y1][:, x1] - plane[y1][:, x0]) * fx
    return top + (bottom - top) * fy[:, None]


def _check_size(width: int, height: int):
    if width < 1 or height < 1:
        raise UERCInputException("target size has to be at least 1 x 1, got %d x %d" % (width, height))


def resize_bilinear(img: ud.GrayImage, width: int, height: int) -> ud.GrayImage:
    """
    bilinear resize with corner alignment and edge clamping

    :param img: source image
    :param width: target number of columns
    :param height: target number of rows
    :raises UERCInputException: if a target dimension is zero
    """
    _check_size(width, height)
    if (width, height) == (img.width, img.height):
        return ud.GrayImage(img.data, img.image_id)
    resized = _resize_plane(img.data.astype(np.float64), width, height)
    return ud.GrayImage(round_half_up(resized), img.image_id)


def resize_color(img: ud.ColorImage, width: int, height: int) -> ud.ColorImage:
    """per channel bilinear resize, see :func:`resize_bilinear`"""
    _check_size(width, height)
    if (width, height) == (img.width, img.height):
        return ud.ColorImage(img.data, img.image_id)
    channels = [_resize_plane(img.data[:, :, c].astype(np.float64), width, height) for c in range(3)]
    return ud.ColorImage(round_half_up(np.stack(channels, axis=2)), img.image_id)


def flipped_id(image_id: str) -> str:
    """id of the mirrored image, mirroring twice gives the original id back"""
    if image_id.endswith(FLIP_SUFFIX):
        return image_id[: -len(FLIP_SUFFIX)]
    return image_id + FLIP_SUFFIX if image_id else ""


def flip_horizontal(img: ud.GrayImage) -> ud.GrayImage:
    """mirror columns, pixel (x, y) moves to (width - 1 - x, y)"""
    return ud.GrayImage(img.data[:, ::-1], flipped_id(img.image_id))


def flip_color(img: ud.ColorImage) -> ud.ColorImage:
    """mirrored copy of a color image"""
    return ud.ColorImage(img.data[:, ::-1], flipped_id(img.image_id))


def _equalization_lut(histogram: np.ndarray, pixel_count: int) -> np.ndarray:
    cdf = np.cumsum(histogram)
    return np.clip(np.floor(255.0 * cdf / pixel_count + 0.5), 0, 255)


def global_equalize(img: ud.GrayImage) -> ud.GrayImage:
    """plain histogram equalization over the whole image"""
    histogram = np.bincount(img.data.ravel(), minlength=256).astype(np.float64)
    lut = _equalization_lut(histogram, img.data.size)
    return ud.GrayImage(lut[img.data].astype(np.uint8), img.image_id)


def _tile_centers(size: int, tiles: int) -> Tuple[np.ndarray, np.ndarray]:
    bounds = np.array([(i * size) // tiles for i in range(tiles + 1)])
    centers = (bounds[:-1] + bounds[1:] - 1) / 2.0
    return bounds, centers


def _blend_positions(size: int, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """per pixel the two neighboring tile indices and the weight of the second one"""
    coords = np.arange(size, dtype=np.float64)
    upper = np.searchsorted(centers, coords, side="right")
    lower = np.clip(upper - 1, 0, len(centers) - 1)
    upper = np.clip(upper, 0, len(centers) - 1)
    span = centers[upper] - centers[lower]
    fraction = np.where(span > 0, (coords - centers[lower]) / np.where(span > 0, span, 1.0), 0.0)
    return lower, upper, np.clip(fraction, 0.0, 1.0)


def clahe(img: ud.GrayImage, tiles: int = 8, clip: float = 2.0) -> ud.GrayImage:
    """
    contrast limited adaptive histogram equalization

    Every tile gets its own clipped equalization mapping, the clipped mass is spread evenly
    over all 256 bins. Pixels blend the mappings of the four nearest tile centers.

    :param img: source image
    :param tiles: number of tiles per row and per column
    :param clip: clip limit in multiples of the uniform bin height, ``math.inf`` disables clipping
    :raises UERCInputException: for invalid parameters or an image smaller than the tile grid
    """
    if tiles < 1:
        raise UERCInputException("tile count has to be at least 1, got %d" % tiles)
    if not clip > 0:
        raise UERCInputException("clip limit has to be positive, got %s" % clip)
    if img.width < tiles or img.height < tiles:
        raise UERCInputException("image of %d x %d pixels is smaller than the %d x %d tile grid" % (img.width, img.height, tiles, tiles))

    data = img.data
    row_bounds, row_centers = _tile_centers(img.height, tiles)
    col_bounds, col_centers = _tile_centers(img.width, tiles)

    luts = np.empty((tiles, tiles, 256), dtype=np.float64)
    for ty in range(tiles):
        for tx in range(tiles):
            tile = data[row_bounds[ty] : row_bounds[ty + 1], col_bounds[tx] : col_bounds[tx + 1]]
            histogram = np.bincount(tile.ravel(), minlength=256).astype(np.float64)
            if math.isfinite(clip):
                limit = clip * tile.size / 256.0
                excess = np.sum(np.maximum(histogram - limit, 0.0))
                histogram = np.minimum(histogram, limit) + excess / 256.0
            luts[ty, tx] = _equalization_lut(histogram, tile.size)

    y0, y1, fy = _blend_positions(img.height, row_centers)
    x0, x1, fx = _blend_positions(img.width, col_centers)
    rows0, rows1 = y0[:, None], y1[:, None]
    cols0, cols1 = x0[None, :], x1[None, :]
    top = luts[rows0, cols0, data] + (luts[rows0, cols1, data] - luts[rows0, cols0, data]) * fx[None, :]
    bottom = luts[rows1, cols0, data] + (luts[rows1, cols1, data] - luts[rows1, cols0, data]) * fx[None, :]
    blended = top + (bottom - top) * fy[:, None]
    return ud.GrayImage(round_half_up(blended), img.image_id)


def otsu_level(img: ud.GrayImage) -> Optional[int]:
    """
    threshold that maximizes the between-class variance, class 0 holds intensities <= threshold

    :returns: the first maximizing threshold or ``None`` for a constant image
    """
    data = img.data
    if data.min() == data.max():
        return None
    return int(filters.threshold_otsu(data))


def otsu_threshold(img: ud.GrayImage) -> ud.BinaryMask:
    """binary mask of the pixels brighter than the otsu level, constant images give an empty mask"""
    level = otsu_level(img)
    if level is None:
        logger.debug("no otsu split possible, image is constant")
        return ud.BinaryMask(np.zeros(img.data.shape, dtype=bool))
    logger.debug("otsu level %d", level)
    return ud.BinaryMask(img.data > level)


def dilate(mask: ud.BinaryMask) -> ud.BinaryMask:
    """dilation with a 3x3 square"""
    return ud.BinaryMask(ndimage.binary_dilation(mask.data, structure=SQUARE_3X3, border_value=0))


def erode(mask: ud.BinaryMask) -> ud.BinaryMask:
    """erosion with a 3x3 square, pixels outside the image count as false"""
    return ud.BinaryMask(ndimage.binary_erosion(mask.data, structure=SQUARE_3X3, border_value=0))


def open_mask(mask: ud.BinaryMask) -> ud.BinaryMask:
    """morphological opening, erosion followed by dilation"""
    return dilate(erode(mask))


def largest_component(mask: ud.BinaryMask) -> ud.BinaryMask:
    """
    keep the largest 8-connected region

    equal sizes are decided by the region whose first pixel comes first in row-major order
    """
    labels, count = ndimage.label(mask.data, structure=SQUARE_3X3)
    if count == 0:
        return ud.BinaryMask(np.zeros(mask.data.shape, dtype=bool))
    flat = labels.ravel()
    sizes = np.bincount(flat)
    label_ids, first_pixel = np.unique(flat, return_index=True)
    candidates = [(-sizes[label], first, label) for label, first in zip(label_ids, first_pixel) if label != 0]
    _, _, best = min(candidates)
    logger.debug("%d components, keeping label %d with %d pixels", count, best, sizes[best])
    return ud.BinaryMask(labels == best)


def rgb_to_hsv(img: ud.ColorImage) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """hue in degrees [0, 360), saturation and value in [0, 1]"""
    rgb = img.data.astype(np.float64) / 255.0
    red, green, blue = rgb[:, :, 0], rgb[:, :, 1], rgb[:, :, 2]
    maximum = rgb.max(axis=2)
    minimum = rgb.min(axis=2)
    delta = maximum - minimum
    safe_delta = np.where(delta > 0, delta, 1.0)

    hue = np.zeros_like(maximum)
    is_red = (maximum == red) & (delta > 0)
    is_green = (maximum == green) & (delta > 0) & ~is_red
    is_blue = (delta > 0) & ~is_red & ~is_green
    hue[is_red] = (60.0 * (green - blue) / safe_delta)[is_red] % 360.0
    hue[is_green] = (60.0 * (blue - red) / safe_delta + 120.0)[is_green]
    hue[is_blue] = (60.0 * (red - green) / safe_delta + 240.0)[is_blue]

    saturation = np.where(maximum > 0, delta / np.where(maximum > 0, maximum, 1.0), 0.0)
    return hue, saturation, maximum


def hsv_skin_mask(
    img: ud.ColorImage,
    hue: Tuple[float, float] = SKIN_HUE,
    saturation: Tuple[float, float] = SKIN_SATURATION,
    value: Tuple[float, float] = SKIN_VALUE,
) -> ud.BinaryMask:
    """
    pixels with a skin tone, all bounds are inclusive

    :param img: source image
    :param hue: hue range in degrees
    :param saturation: saturation range
    :param value: value range
    """
    h, s, v = rgb_to_hsv(img)
    mask = (
        (h >= hue[0])
        & (h <= hue[1])
        & (s >= saturation[0])
        & (s <= saturation[1])
        & (v >= value[0])
        & (v <= value[1])
    )
    return ud.BinaryMask(mask)


def apply_mask(img: ud.GrayImage, mask: ud.BinaryMask) -> ud.GrayImage:
    """set every pixel outside the mask to zero"""
    if (img.width, img.height) != (mask.width, mask.height):
        raise UERCInputException("mask of %d x %d does not fit image of %d x %d" % (mask.width, mask.height, img.width, img.height))
    return ud.GrayImage(np.where(mask.data, img.data, 0).astype(np.uint8), img.image_id)


def ucss_stages(img: ud.ColorImage, tiles: int = 8, clip: float = 2.0, **skin_bounds) -> Dict[str, object]:
    """
    run the ear segmentation chain and keep every intermediate result

    keys: ``gray``, ``equalized``, ``threshold``, ``morphology``, ``component``, ``skin``, ``roi``
    """
    width, height = PIPELINE_SIZE
    stages: Dict[str, object] = {}
    stages["gray"] = resize_bilinear(to_grayscale(img), width, height)
    stages["equalized"] = clahe(stages["gray"], tiles, clip)
    stages["threshold"] = otsu_threshold(stages["equalized"])
    stages["morphology"] = open_mask(dilate(stages["threshold"]))
    stages["component"] = largest_component(stages["morphology"])
    stages["skin"] = hsv_skin_mask(resize_color(img, width, height), **skin_bounds)
    stages["roi"] = ud.BinaryMask(stages["component"].data & stages["skin"].data)
    logger.debug(
        "segmentation of '%s': %d thresholded, %d after morphology, %d in component, %d in roi",
        img.image_id,
        stages["threshold"].count(),
        stages["morphology"].count(),
        stages["component"].count(),
        stages["roi"].count(),
    )
    return stages


def preprocess_ucss(img: ud.ColorImage, tiles: int = 8, clip: float = 2.0, **skin_bounds) -> Tuple[ud.GrayImage, ud.BinaryMask]:
    """
    segmentation preprocessing of an ear image

    :returns: contrast enhanced 100 x 100 gray image and the region of interest mask, which may be empty
    """
    stages = ucss_stages(img, tiles, clip, **skin_bounds)
    return stages["equalized"], stages["roi"]
