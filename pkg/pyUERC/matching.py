#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""comparison of descriptors, score normalization and fusion, flip handling and the left/right classifier"""
import logging
from typing import Callable, Sequence, Tuple, Union

import numpy as np

from . import dat_cls as ud
from . import descriptors
from . import imaging
from .const import CHI_SQUARE_EPS, DEFAULT_SEED, DISTANCE_POLARITY, HOG_SIZE, Distance, Polarity, Side
from .err import UERCInputException, UERCStateException

logger = logging.getLogger("UERC Matching")

VectorLike = Union[ud.DescriptorVector, Sequence[float], np.ndarray]
GalleryLike = Union[np.ndarray, Sequence[VectorLike], descriptors.DescriptorStore]
Extractor = Callable[[ud.GrayImage], ud.DescriptorVector]

#: training settings of the side classifier
SIDE_LAMBDA = 1e-4
SIDE_EPOCHS = 50
SIDE_STEP = 0.1


def _values(vector: VectorLike) -> np.ndarray:
    if isinstance(vector, ud.DescriptorVector):
        return vector.values
    return np.asarray(vector, dtype=np.float64).ravel()


def _pair(a: VectorLike, b: VectorLike) -> Tuple[np.ndarray, np.ndarray]:
    va, vb = _values(a), _values(b)
    if va.size != vb.size:
        raise UERCInputException("descriptor lengths differ: %d and %d" % (va.size, vb.size))
    return va, vb


def cosine_similarity(a: VectorLike, b: VectorLike) -> float:
    """
    cosine of the angle between two descriptors

    :raises UERCInputException: on length mismatch or a zero vector
    """
    va, vb = _pair(a, b)
    norm_a, norm_b = np.linalg.norm(va), np.linalg.norm(vb)
    if norm_a == 0 or norm_b == 0:
        raise UERCInputException("cosine similarity of a zero vector is undefined")
    return float(np.dot(va, vb) / (norm_a * norm_b))


def chi_square_distance(a: VectorLike, b: VectorLike) -> float:
    """
    chi-square distance of two histograms

    :raises UERCInputException: on length mismatch or negative entries
    """
    va, vb = _pair(a, b)
    if np.any(va < 0) or np.any(vb < 0):
        raise UERCInputException("chi-square distance needs non-negative entries")
    return float(np.sum((va - vb) ** 2 / (va + vb + CHI_SQUARE_EPS)))


def euclidean_distance(a: VectorLike, b: VectorLike) -> float:
    """
    L2 distance

    :raises UERCInputException: on length mismatch
    """
    va, vb = _pair(a, b)
    return float(np.linalg.norm(va - vb))


_COMPARATORS = {
    Distance.COSINE: cosine_similarity,
    Distance.CHISQ: chi_square_distance,
    Distance.L2: euclidean_distance,
}


def compare(a: VectorLike, b: VectorLike, distance: Distance) -> ud.MatchScore:
    """compare two descriptors, the score carries the polarity of the comparison function"""
    distance = Distance(distance)
    return ud.MatchScore(_COMPARATORS[distance](a, b), DISTANCE_POLARITY[distance])


def to_similarity(score: ud.MatchScore) -> ud.MatchScore:
    """distances become similarities by negation"""
    if score.polarity is Polarity.DISTANCE:
        return ud.MatchScore(-score.value, Polarity.SIMILARITY)
    return ud.MatchScore(score.value, Polarity.SIMILARITY)


def pair_scorer(distance: Distance) -> Callable[[VectorLike, VectorLike], float]:
    """scorer for two descriptors returning a similarity"""
    distance = Distance(distance)

    def scorer(a: VectorLike, b: VectorLike) -> float:
        return to_similarity(compare(a, b, distance)).value

    return scorer


def _gallery_matrix(gallery: GalleryLike) -> np.ndarray:
    if isinstance(gallery, descriptors.DescriptorStore):
        return gallery.matrix(gallery.ids)
    if isinstance(gallery, np.ndarray):
        return np.atleast_2d(np.asarray(gallery, dtype=np.float64))
    return np.stack([_values(vector) for vector in gallery]) if len(gallery) > 0 else np.zeros((0, 0))


def similarity_row(probe: VectorLike, gallery: GalleryLike, distance: Distance) -> np.ndarray:
    """
    compare one probe with every gallery descriptor, distances are negated

    :raises UERCInputException: on empty gallery, length mismatch, zero vectors for cosine or
        negative entries for chi-square
    """
    distance = Distance(distance)
    p = _values(probe)
    matrix = _gallery_matrix(gallery)
    if matrix.shape[0] == 0:
        raise UERCInputException("gallery is empty")
    if matrix.shape[1] != p.size:
        raise UERCInputException("descriptor lengths differ: probe %d, gallery %d" % (p.size, matrix.shape[1]))

    if distance is Distance.COSINE:
        norms = np.linalg.norm(matrix, axis=1)
        norm_p = np.linalg.norm(p)
        if norm_p == 0 or np.any(norms == 0):
            raise UERCInputException("cosine similarity of a zero vector is undefined")
        return (matrix @ p) / (norms * norm_p)
    if distance is Distance.CHISQ:
        if np.any(p < 0) or np.any(matrix < 0):
            raise UERCInputException("chi-square distance needs non-negative entries")
        return -np.sum((matrix - p) ** 2 / (matrix + p + CHI_SQUARE_EPS), axis=1)
    return -np.linalg.norm(matrix - p, axis=1)


def zscore_normalize(scores: Sequence[float]) -> np.ndarray:
    """
    standardize with mean and population standard deviation

    :raises UERCInputException: for fewer than 2 scores
    :raises UERCStateException: if all scores are equal
    """
    values = np.asarray(scores, dtype=np.float64).ravel()
    if values.size < 2:
        raise UERCInputException("z-score normalization needs at least 2 scores, got %d" % values.size)
    if values.max() == values.min():
        raise UERCStateException("degenerate score row, all %d scores equal %g" % (values.size, values[0]))
    return (values - values.mean()) / values.std()


def fuse_sum(score_lists: Sequence[Sequence[float]]) -> np.ndarray:
    """
    elementwise sum of score rows

    :raises UERCInputException: for no rows or rows of different length
    """
    if len(score_lists) == 0:
        raise UERCInputException("nothing to fuse")
    rows = [np.asarray(scores, dtype=np.float64).ravel() for scores in score_lists]
    for row in rows[1:]:
        if row.size != rows[0].size:
            raise UERCInputException("score rows of different length: %d and %d" % (rows[0].size, row.size))
    fused = rows[0].copy()
    for row in rows[1:]:
        fused += row
    return fused


def flip_aware_rows(original: VectorLike, flipped: VectorLike, gallery: GalleryLike, distance: Distance) -> np.ndarray:
    """sum of the z-scored similarity rows of a probe descriptor and its flipped counterpart"""
    row_a = zscore_normalize(similarity_row(original, gallery, distance))
    row_b = zscore_normalize(similarity_row(flipped, gallery, distance))
    return fuse_sum([row_a, row_b])


def flip_aware_scores(
    probe: ud.GrayImage,
    gallery: GalleryLike,
    extract: Extractor,
    distance: Distance,
    flip: bool = True,
) -> np.ndarray:
    """
    score a probe image and its mirrored copy against the gallery

    :param probe: probe image
    :param gallery: gallery descriptors
    :param extract: descriptor function for an image
    :param distance: comparison function
    :param flip: ``False`` returns the plain similarity row of the unflipped probe
    """
    if not flip:
        return similarity_row(extract(probe), gallery, distance)
    return flip_aware_rows(extract(probe), extract(imaging.flip_horizontal(probe)), gallery, distance)


def ensemble_rows(
    probe_pairs: Sequence[Tuple[VectorLike, VectorLike]], galleries: Sequence[GalleryLike], distances: Sequence[Distance]
) -> np.ndarray:
    """fuse the flip aware rows of several descriptor types, one (original, flipped) pair per type"""
    if not len(probe_pairs) == len(galleries) == len(distances):
        raise UERCInputException("need one gallery and one distance per descriptor type")
    rows = []
    for (original, flipped), gallery, distance in zip(probe_pairs, galleries, distances):
        rows.append(zscore_normalize(similarity_row(original, gallery, distance)))
        rows.append(zscore_normalize(similarity_row(flipped, gallery, distance)))
    return fuse_sum(rows)


def ensemble_scores(
    probe: ud.GrayImage, galleries: Sequence[GalleryLike], extractors: Sequence[Extractor], distances: Sequence[Distance]
) -> np.ndarray:
    """
    fused score row of several descriptor types, each scored with the original and the flipped probe

    :raises UERCInputException: if the gallery rows differ in length
    :raises UERCStateException: if one of the rows is constant
    """
    if len(extractors) != len(galleries):
        raise UERCInputException("need one gallery per extractor")
    flipped = imaging.flip_horizontal(probe)
    pairs = [(extract(probe), extract(flipped)) for extract in extractors]
    return ensemble_rows(pairs, galleries, distances)


class ExternalExtractor:
    """extractor backed by a descriptor file, vectors are looked up by the image id"""

    def __init__(self, store: descriptors.DescriptorStore):
        self._store = store

    def __call__(self, img: ud.GrayImage) -> ud.DescriptorVector:
        return self._store.get(img.image_id)


def side_features(img: ud.GrayImage) -> np.ndarray:
    """hog features of the image resized to the side classifier input size"""
    width, height = HOG_SIZE
    return descriptors.hog_descriptor(imaging.resize_bilinear(img, width, height)).values


def train_side_classifier(
    samples: Sequence[Tuple[ud.GrayImage, Side]],
    seed: int = DEFAULT_SEED,
    epochs: int = SIDE_EPOCHS,
    regularization: float = SIDE_LAMBDA,
    step: float = SIDE_STEP,
) -> ud.SideModel:
    """
    linear left/right classifier, hinge loss with L2 regularization minimized by sub-gradient steps

    :param samples: images with their side, ``Side.UNKNOWN`` is not allowed
    :param seed: seed of the per epoch shuffling
    :raises UERCInputException: if one of the sides has no example
    """
    labels = []
    for img, side in samples:
        side = Side(side)
        if side is Side.UNKNOWN:
            raise UERCInputException("training image '%s' has no side label" % img.image_id)
        labels.append(1.0 if side is Side.RIGHT else -1.0)
    targets = np.asarray(labels)
    if not np.any(targets > 0) or not np.any(targets < 0):
        raise UERCInputException("side classifier needs examples of both sides, got %d right and %d left" % (np.sum(targets > 0), np.sum(targets < 0)))

    features = np.stack([side_features(img) for img, _ in samples])
    weights = np.zeros(features.shape[1])
    bias = 0.0
    rng = np.random.default_rng(seed)
    for epoch in range(epochs):
        violations = 0
        for index in rng.permutation(len(targets)):
            target = targets[index]
            margin = target * (features[index] @ weights + bias)
            weights *= 1.0 - step * regularization
            if margin < 1.0:
                weights += step * target * features[index]
                bias += step * target
                violations += 1
        logger.debug("side classifier epoch %d: %d margin violations", epoch + 1, violations)
    logger.info("trained side classifier on %d images", len(targets))
    return ud.SideModel(weights, bias)


def decision_value(model: ud.SideModel, img: ud.GrayImage) -> float:
    """
    signed distance to the decision boundary, positive means right

    :raises UERCInputException: if the features do not match the model
    """
    features = side_features(img)
    if features.size != model.feature_length:
        raise UERCInputException("feature length %d does not match model length %d" % (features.size, model.feature_length))
    return float(features @ model.weights + model.bias)


def predict_side(model: ud.SideModel, img: ud.GrayImage) -> Side:
    """predicted side of an ear image, a decision value of 0 counts as right"""
    return Side.RIGHT if decision_value(model, img) >= 0 else Side.LEFT


def normalize_side(model: ud.SideModel, img: Union[ud.GrayImage, ud.ColorImage]) -> Union[ud.GrayImage, ud.ColorImage]:
    """mirror images predicted as left ears so all ears face the same way, color images are classified by their luma"""
    if isinstance(img, ud.ColorImage):
        if predict_side(model, imaging.to_grayscale(img)) is Side.LEFT:
            return imaging.flip_color(img)
        return img
    if predict_side(model, img) is Side.LEFT:
        return imaging.flip_horizontal(img)
    return img


def score_rows(
    gallery_ids: Sequence[str],
    stores: Sequence[descriptors.DescriptorStore],
    distances: Sequence[Distance],
    flip: bool,
) -> Callable[[str], np.ndarray]:
    """
    row scorer over descriptor files as used by the score command

    With a single file and no flipping a row is the plain similarity row. Otherwise every file
    contributes z-scored rows, with flipping one for the probe record and one for its flipped record.
    """
    if len(stores) != len(distances):
        raise UERCInputException("need one distance per descriptor file")
    galleries = [store.matrix(gallery_ids) for store in stores]

    def row(probe_id: str) -> np.ndarray:
        if not flip and len(stores) == 1:
            return similarity_row(stores[0].get(probe_id), galleries[0], distances[0])
        if flip:
            pairs = [(store.get(probe_id), store.get(imaging.flipped_id(probe_id))) for store in stores]
            return ensemble_rows(pairs, galleries, distances)
        rows = [
            zscore_normalize(similarity_row(store.get(probe_id), gallery, distance))
            for store, gallery, distance in zip(stores, galleries, distances)
        ]
        return fuse_sum(rows)

    logger.debug("row scorer over %d descriptor files, %d gallery images, flip %s", len(stores), len(gallery_ids), flip)
    return row
