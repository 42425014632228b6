#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""tests for comparison functions, score normalization, fusion and the side classifier"""

import numpy as np
import pytest

import pyUERC
from pyUERC import descriptors, imaging, matching


def test_cosine_similarity():
    """test the cosine similarity examples and errors"""
    assert matching.cosine_similarity([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert matching.cosine_similarity([1, 0], [0, 1]) == pytest.approx(0.0)
    assert matching.cosine_similarity([1, 2, 3], [3, 2, 1]) == pytest.approx(10 / 14)
    assert matching.cosine_similarity([1, 2, 3], [2.5, 5, 7.5]) == pytest.approx(1.0)

    with pytest.raises(pyUERC.UERCInputException):
        matching.cosine_similarity([1, 2], [1, 2, 3])
    with pytest.raises(pyUERC.UERCInputException):
        matching.cosine_similarity([0, 0], [1, 2])


def test_chi_square_distance():
    """test the chi-square examples and errors"""
    assert matching.chi_square_distance([0.2, 0.8], [0.2, 0.8]) == pytest.approx(0.0)
    assert matching.chi_square_distance([1, 0], [0, 1]) == pytest.approx(2.0)
    assert matching.chi_square_distance([2, 1], [1, 2]) == pytest.approx(2 / 3)

    with pytest.raises(pyUERC.UERCInputException):
        matching.chi_square_distance([1, -1], [1, 1])
    with pytest.raises(pyUERC.UERCInputException):
        matching.chi_square_distance([1], [1, 1])


def test_euclidean_distance(rng):
    """test the l2 examples and the triangle inequality"""
    assert matching.euclidean_distance([1, 2], [1, 2]) == 0.0
    assert matching.euclidean_distance([0, 0], [3, 4]) == pytest.approx(5.0)
    for _ in range(50):
        a, b, c = rng.normal(size=(3, 6))
        assert matching.euclidean_distance(a, c) <= matching.euclidean_distance(a, b) + matching.euclidean_distance(b, c) + 1e-12


def test_distance_properties(rng):
    """test symmetry and non-negativity"""
    for _ in range(50):
        a, b = rng.random((2, 8))
        assert matching.chi_square_distance(a, b) == pytest.approx(matching.chi_square_distance(b, a))
        assert matching.chi_square_distance(a, b) >= 0
        assert matching.euclidean_distance(a, b) == pytest.approx(matching.euclidean_distance(b, a))


def test_compare_polarity():
    """test that distances are turned into similarities by negation"""
    score = matching.compare([0, 0], [3, 4], pyUERC.Distance.L2)
    assert score.polarity is pyUERC.Polarity.DISTANCE
    similarity = matching.to_similarity(score)
    assert similarity.polarity is pyUERC.Polarity.SIMILARITY
    assert similarity.value == pytest.approx(-5.0)
    assert matching.compare([1, 0], [1, 0], pyUERC.Distance.COSINE).polarity is pyUERC.Polarity.SIMILARITY
    assert matching.pair_scorer(pyUERC.Distance.CHISQ)([1, 0], [0, 1]) == pytest.approx(-2.0)


def test_similarity_row(rng):
    """test that the vectorized row agrees with the pairwise functions"""
    gallery = rng.random((5, 7))
    probe = rng.random(7)
    for distance in pyUERC.Distance:
        scorer = matching.pair_scorer(distance)
        expected = [scorer(probe, g) for g in gallery]
        assert np.allclose(matching.similarity_row(probe, gallery, distance), expected)

    with pytest.raises(pyUERC.UERCInputException):
        matching.similarity_row(probe, np.zeros((0, 7)), pyUERC.Distance.L2)
    with pytest.raises(pyUERC.UERCInputException):
        matching.similarity_row(probe[:3], gallery, pyUERC.Distance.L2)


def test_zscore_normalize(rng):
    """test the z-score examples, invariances and errors"""
    assert np.allclose(matching.zscore_normalize([1, 2, 3]), [-1.224744871391589, 0.0, 1.224744871391589])

    for _ in range(20):
        scores = rng.normal(size=30) * 7 + 3
        normalized = matching.zscore_normalize(scores)
        assert abs(normalized.mean()) < 1e-9
        assert abs(normalized.std() - 1.0) < 1e-9
        assert np.allclose(matching.zscore_normalize(normalized), normalized, atol=1e-9)
        assert np.allclose(matching.zscore_normalize(4.5 * scores - 11), normalized, atol=1e-9)

    with pytest.raises(pyUERC.UERCStateException):
        matching.zscore_normalize([2, 2, 2])
    with pytest.raises(pyUERC.UERCInputException):
        matching.zscore_normalize([1])


def test_fuse_sum(rng):
    """test fusion examples and the argmax under common rescaling"""
    assert matching.fuse_sum([[1, 2]]).tolist() == [1, 2]
    assert matching.fuse_sum([[1, 2], [3, 4]]).tolist() == [4, 6]
    s = np.array([0.5, 2.0, -1.0])
    assert np.allclose(matching.fuse_sum([s, s, s]), 3 * s)

    for _ in range(20):
        rows = rng.normal(size=(3, 10))
        assert np.argmax(matching.fuse_sum(rows)) == np.argmax(matching.fuse_sum(2.5 * rows))

    with pytest.raises(pyUERC.UERCInputException):
        matching.fuse_sum([[1, 2], [1, 2, 3]])
    with pytest.raises(pyUERC.UERCInputException):
        matching.fuse_sum([])


def _column_mean_extractor(img: pyUERC.GrayImage) -> pyUERC.DescriptorVector:
    """tiny descriptor, the mean of every column"""
    return pyUERC.DescriptorVector(img.data.mean(axis=0) + 1.0, pyUERC.DescriptorKind.EXTERNAL, img.image_id)


def test_flip_aware_scores():
    """test the symmetric probe, the flipped match and the pass-through mode"""
    gallery = np.array([[1.0, 5.0, 9.0, 4.0], [9.0, 5.0, 1.0, 3.0], [20.0, 20.0, 20.0, 20.0]])

    symmetric = pyUERC.GrayImage(np.tile(np.array([10, 40, 40, 10]), (3, 1)))
    row = matching.similarity_row(_column_mean_extractor(symmetric), gallery, pyUERC.Distance.L2)
    fused = matching.flip_aware_scores(symmetric, gallery, _column_mean_extractor, pyUERC.Distance.L2)
    assert np.allclose(fused, 2 * matching.zscore_normalize(row))

    probe = pyUERC.GrayImage(np.tile(np.array([2, 0, 4, 8]), (3, 1)))
    plain = matching.flip_aware_scores(probe, gallery, _column_mean_extractor, pyUERC.Distance.L2, flip=False)
    assert np.allclose(plain, matching.similarity_row(_column_mean_extractor(probe), gallery, pyUERC.Distance.L2))
    # the probe columns plus one are [3, 1, 5, 9], mirrored [9, 5, 1, 3]
    assert np.argmax(matching.flip_aware_scores(probe, gallery, _column_mean_extractor, pyUERC.Distance.L2)) == 1


def test_ensemble_scores():
    """test identical extractors, the hand summed row and the degenerate row"""
    gallery = np.array([[1.0, 2.0, 3.0], [3.0, 2.0, 1.0], [2.0, 2.0, 5.0]])
    probe = pyUERC.GrayImage([[0, 3, 6]])

    single = matching.flip_aware_scores(probe, gallery, _column_mean_extractor, pyUERC.Distance.COSINE)
    double = matching.ensemble_scores(probe, [gallery, gallery], [_column_mean_extractor] * 2, [pyUERC.Distance.COSINE] * 2)
    assert np.allclose(double, 2 * single)

    def scaled(img):
        return pyUERC.DescriptorVector(2 * img.data.ravel() + 1.0, pyUERC.DescriptorKind.LBP, img.image_id)

    second = np.array([[1.0, 4.0, 9.0], [9.0, 7.0, 1.0], [5.0, 1.0, 13.0]])
    fused = matching.ensemble_scores(
        probe, [gallery, second], [_column_mean_extractor, scaled], [pyUERC.Distance.COSINE, pyUERC.Distance.CHISQ]
    )
    flipped = imaging.flip_horizontal(probe)
    expected = (
        matching.zscore_normalize(matching.similarity_row(_column_mean_extractor(probe), gallery, pyUERC.Distance.COSINE))
        + matching.zscore_normalize(matching.similarity_row(_column_mean_extractor(flipped), gallery, pyUERC.Distance.COSINE))
        + matching.zscore_normalize(matching.similarity_row(scaled(probe), second, pyUERC.Distance.CHISQ))
        + matching.zscore_normalize(matching.similarity_row(scaled(flipped), second, pyUERC.Distance.CHISQ))
    )
    assert np.allclose(fused, expected)

    constant_gallery = np.ones((3, 3))
    with pytest.raises(pyUERC.UERCStateException):
        matching.ensemble_scores(
            probe, [gallery, constant_gallery], [_column_mean_extractor] * 2, [pyUERC.Distance.COSINE, pyUERC.Distance.COSINE]
        )


def test_external_extractor():
    """test lookup of precomputed descriptors by image id"""
    store = descriptors.DescriptorStore(pyUERC.DescriptorKind.EXTERNAL, "{}")
    store.add(pyUERC.DescriptorVector([1.0, -2.0], pyUERC.DescriptorKind.EXTERNAL, "a"))
    store.add(pyUERC.DescriptorVector([0.5, 0.5], pyUERC.DescriptorKind.EXTERNAL, "a" + pyUERC.FLIP_SUFFIX))
    extract = matching.ExternalExtractor(store)
    img = pyUERC.GrayImage(np.zeros((2, 2)), "a")
    assert extract(img).values.tolist() == [1.0, -2.0]
    assert extract(imaging.flip_horizontal(img)).values.tolist() == [0.5, 0.5]


def _diagonal_ear(offset: int) -> pyUERC.GrayImage:
    """bright area right of a line leaning to the right, a stand in for a right ear"""
    ys, xs = np.mgrid[0:60, 0:30]
    return pyUERC.GrayImage(np.where(xs > ys / 3.0 + offset, 210, 40), "right_%d" % offset)


def test_side_classifier():
    """test training on mirrored fixtures and the prediction of flipped copies"""
    rights = [_diagonal_ear(offset) for offset in (2, 4, 6, 8)]
    lefts = [imaging.flip_horizontal(img) for img in rights]
    samples = [(img, pyUERC.Side.RIGHT) for img in rights] + [(img, pyUERC.Side.LEFT) for img in lefts]
    model = matching.train_side_classifier(samples, seed=7)
    assert model.feature_length == 432

    for img in rights:
        assert matching.predict_side(model, img) is pyUERC.Side.RIGHT
        assert matching.predict_side(model, imaging.flip_horizontal(img)) is pyUERC.Side.LEFT
        assert matching.normalize_side(model, img) == img
    for img in lefts:
        assert matching.normalize_side(model, img) == imaging.flip_horizontal(img)

    color = pyUERC.ColorImage(np.repeat(lefts[0].data[:, :, np.newaxis], 3, axis=2), "left_color")
    normalized = matching.normalize_side(model, color)
    assert isinstance(normalized, pyUERC.ColorImage)
    assert np.array_equal(normalized.data, np.repeat(rights[0].data[:, :, np.newaxis], 3, axis=2))
    color = pyUERC.ColorImage(np.repeat(rights[0].data[:, :, np.newaxis], 3, axis=2), "right_color")
    assert matching.normalize_side(model, color) is color

    again = matching.train_side_classifier(samples, seed=7)
    assert np.array_equal(again.weights, model.weights)
    assert again.bias == model.bias

    with pytest.raises(pyUERC.UERCInputException):
        matching.train_side_classifier([(img, pyUERC.Side.RIGHT) for img in rights])
    with pytest.raises(pyUERC.UERCInputException):
        matching.train_side_classifier(samples + [(rights[0], pyUERC.Side.UNKNOWN)])
    with pytest.raises(pyUERC.UERCInputException):
        matching.decision_value(pyUERC.SideModel(np.ones(10), 0.0), rights[0])


def test_score_rows():
    """test the row scorer used by the score command"""
    vectors = {
        "a": [1.0, 0.0, 1.0],
        "b": [0.0, 1.0, 1.0],
        "c": [1.0, 1.0, 0.0],
    }
    store = descriptors.DescriptorStore(pyUERC.DescriptorKind.LBP, "{}")
    for image_id, values in vectors.items():
        store.add(pyUERC.DescriptorVector(values, pyUERC.DescriptorKind.LBP, image_id))
        store.add(pyUERC.DescriptorVector(values[::-1], pyUERC.DescriptorKind.LBP, imaging.flipped_id(image_id)))
    gallery_ids = ["a", "b", "c"]

    plain = matching.score_rows(gallery_ids, [store], [pyUERC.Distance.COSINE], flip=False)
    assert np.allclose(plain("a"), [1.0, 0.5, 0.5])

    flipped = matching.score_rows(gallery_ids, [store], [pyUERC.Distance.COSINE], flip=True)
    gallery = store.matrix(gallery_ids)
    expected = matching.flip_aware_rows(store.get("b"), store.get(imaging.flipped_id("b")), gallery, pyUERC.Distance.COSINE)
    assert np.allclose(flipped("b"), expected)

    summed = matching.score_rows(gallery_ids, [store, store], [pyUERC.Distance.COSINE, pyUERC.Distance.L2], flip=False)
    expected = matching.zscore_normalize(plain("c")) + matching.zscore_normalize(
        matching.similarity_row(store.get("c"), gallery, pyUERC.Distance.L2)
    )
    assert np.allclose(summed("c"), expected)

    with pytest.raises(pyUERC.UERCDataException):
        plain("d")
    with pytest.raises(pyUERC.UERCInputException):
        matching.score_rows(gallery_ids, [store], [], flip=False)
