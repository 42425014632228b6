#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""tests for the command line script on a small generated dataset"""

import json
import tempfile
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

import pyUERC
from pyUERC import descriptors, evaluation, protocol
from pyUERC.scripts import cmd

SUBJECTS = 10
IMAGES_PER_SUBJECT = 5


@pytest.fixture
def toy_dataset(entry_factory, rng):
    """noise images of 10 subjects with 5 images each, all in the test partition"""
    with tempfile.TemporaryDirectory(suffix=None, prefix="pyUERC_") as tmp_dir_name:
        root = Path(tmp_dir_name)
        entries = []
        for s in range(SUBJECTS):
            for i in range(IMAGES_PER_SUBJECT):
                image_id = "s%02d_%d" % (s, i)
                Image.fromarray(rng.integers(0, 256, (40, 32, 3)).astype(np.uint8)).save(root.joinpath(image_id + ".png"))
                entries.append(
                    entry_factory(
                        image_id,
                        "s%02d" % s,
                        side="left" if i % 2 == 0 else "right",
                        pixel_count=800 if i < 3 else 3000,
                    )
                )
        protocol.write_manifest(entries, root.joinpath("manifest.csv"))
        yield root, entries


def _perfect_matrix(root: Path, entries) -> Path:
    ids = sorted(entry.image_id for entry in entries)
    labels = {entry.image_id: entry.subject_id for entry in entries}
    scores = np.array([[1.0 if labels[p] == labels[g] else 0.0 for g in ids] for p in ids])
    matrix_path = root.joinpath("perfect.bin")
    protocol.write_matrix(pyUERC.SimilarityMatrix(ids, ids, scores), matrix_path)
    return matrix_path


def test_extract_and_score_threads(toy_dataset):
    """test that descriptor and matrix files do not depend on the number of threads"""
    root, entries = toy_dataset
    common = ["--manifest", str(root.joinpath("manifest.csv")), "--images-root", str(root)]

    for threads in (1, 8):
        out = root.joinpath("lbp_%d.dsc" % threads)
        assert cmd.run(["extract"] + common + ["--descriptor", "lbp", "--out", str(out), "--threads", str(threads)], environ={}) == 0
    assert root.joinpath("lbp_1.dsc").read_bytes() == root.joinpath("lbp_8.dsc").read_bytes()

    store = descriptors.read_descriptors(root.joinpath("lbp_1.dsc"))
    assert len(store) == SUBJECTS * IMAGES_PER_SUBJECT
    assert store.vector_length == 28556
    assert store.fingerprint == descriptors.parameter_fingerprint(pyUERC.DescriptorKind.LBP)

    for threads in (1, 8):
        out = root.joinpath("scores_%d.bin" % threads)
        argv = ["score"] + common + ["--descriptors", str(root.joinpath("lbp_1.dsc")), "--out", str(out), "--threads", str(threads)]
        assert cmd.run(argv + ["--csv"], environ={}) == 0
    assert root.joinpath("scores_1.bin").read_bytes() == root.joinpath("scores_8.bin").read_bytes()

    matrix = protocol.read_matrix(root.joinpath("scores_1.bin"))
    assert matrix.shape == (50, 50)
    assert matrix.probe_ids == tuple(sorted(entry.image_id for entry in entries))
    assert np.allclose(np.diag(matrix.scores), 1.0, atol=1e-5)
    assert protocol.read_matrix_csv(root.joinpath("scores_1.bin.csv")) == matrix

    report_path = root.joinpath("eval.csv")
    assert cmd.run(["eval"] + common + ["--matrix", str(root.joinpath("scores_1.bin")), "--out", str(report_path)], environ={}) == 0
    auc = float(pyUERC.ReportTable.parse_csv(report_path).rows[0]["auc"])
    assert 0.0 < auc <= 1.0


def test_flip_sum_pipeline(toy_dataset):
    """test extraction with flipped records and the fused scoring"""
    root, _ = toy_dataset
    common = ["--manifest", str(root.joinpath("manifest.csv")), "--images-root", str(root)]
    dsc_path = root.joinpath("hog.dsc")
    assert cmd.run(["extract"] + common + ["--descriptor", "hog", "--flip", "sum", "--out", str(dsc_path)], environ={}) == 0
    store = descriptors.read_descriptors(dsc_path)
    assert len(store) == 2 * SUBJECTS * IMAGES_PER_SUBJECT
    assert "s00_0" + pyUERC.FLIP_SUFFIX in store

    matrix_path = root.joinpath("hog.bin")
    argv = ["score"] + common + ["--descriptor", "hog", "--flip", "sum", "--descriptors", str(dsc_path), "--out", str(matrix_path)]
    assert cmd.run(argv, environ={}) == 0
    assert protocol.read_matrix(matrix_path).shape == (50, 50)

    assert cmd.run(["score"] + common + ["--descriptors", str(dsc_path), "--out", str(matrix_path)], environ={}) == cmd.EXIT_FORMAT


def test_side_classifier_extraction(toy_dataset, entry_factory, rng):
    """test extraction with the left/right classifier trained on the train partition"""
    root, entries = toy_dataset
    train = []
    for i, side in enumerate(("left", "right", "left", "right")):
        image_id = "t%d" % i
        Image.fromarray(rng.integers(0, 256, (40, 32, 3)).astype(np.uint8)).save(root.joinpath(image_id + ".png"))
        train.append(entry_factory(image_id, "train_%d" % i, side=side, partition="train"))
    protocol.write_manifest(train + entries, root.joinpath("with_train.csv"))

    dsc_path = root.joinpath("sides.dsc")
    argv = ["extract", "--manifest", str(root.joinpath("with_train.csv")), "--images-root", str(root), "--method", "side-classifier"]
    assert cmd.run(argv + ["--out", str(dsc_path)], environ={}) == 0
    assert descriptors.read_descriptors(dsc_path).ids == [entry.image_id for entry in train + entries]


def test_evaluation_commands(toy_dataset):
    """test eval, stratify, resample, sides and report on a perfect matrix"""
    root, entries = toy_dataset
    matrix_path = _perfect_matrix(root, entries)
    common = ["--manifest", str(root.joinpath("manifest.csv")), "--matrix", str(matrix_path)]

    out = root.joinpath("eval.csv")
    assert cmd.run(["eval"] + common + ["--out", str(out)], environ={}) == 0
    row = pyUERC.ReportTable.parse_csv(out).rows[0]
    assert row["rank1"] == "100.0000"
    assert row["auc"] == "1.000000"
    assert row["n_probes"] == "50"
    assert len(pyUERC.ReportTable.parse_csv(str(out) + ".cmc.csv")) == SUBJECTS

    out = root.joinpath("stratify.csv")
    assert cmd.run(["stratify"] + common + ["--stratify-field", "size_bin", "--out", str(out)], environ={}) == 0
    table = pyUERC.ReportTable.parse_csv(out)
    assert table.column("stratum") == ["size_bin=<=1000", "size_bin=1000-5000"]
    assert table.column("n_probes") == ["30", "20"]

    out = root.joinpath("resample.csv")
    assert cmd.run(["resample"] + common + ["--runs", "5", "--out", str(out)], environ={}) == 0
    table = pyUERC.ReportTable.parse_csv(out)
    assert table.column("run") == ["1", "2", "3", "4", "5", "summary"]
    assert table.column("rank1")[:5] == ["100.0000"] * 5

    out = root.joinpath("sides.csv")
    assert cmd.run(["sides"] + common + ["--out", str(out)], environ={}) == 0
    assert pyUERC.ReportTable.parse_csv(out).column("stratum") == ["left->left", "right->right", "left->right", "right->left"]

    out = root.joinpath("report.csv")
    assert cmd.run(["report"] + common + ["--top-k", "3", "--out", str(out)], environ={}) == 0
    table = pyUERC.ReportTable.parse_csv(out)
    assert len(table) == 50
    assert "match_3" in table.column_names
    assert set(table.column("rank")) == {"1"}

    out = root.joinpath("self.csv")
    assert cmd.run(["eval"] + common + ["--no-exclude-self", "--origin", "uerc_new", "--out", str(out)], environ={}) == 0
    assert pyUERC.ReportTable.parse_csv(out).rows[0]["rank1"] == "100.0000"


def test_exit_codes(toy_dataset):
    """test the exit status of failing runs"""
    root, entries = toy_dataset
    manifest = str(root.joinpath("manifest.csv"))
    matrix_path = _perfect_matrix(root, entries)
    out = str(root.joinpath("out.csv"))

    assert cmd.run(["eval", "--matrix", str(matrix_path), "--out", out], environ={}) == cmd.EXIT_INPUT
    assert cmd.run(["extract", "--manifest", manifest, "--descriptor", "external", "--out", out], environ={}) == cmd.EXIT_INPUT
    assert cmd.run(["eval", "--manifest", manifest, "--matrix", str(matrix_path), "--out", out], environ={"UERC_THREADS": "0"}) == cmd.EXIT_INPUT
    assert cmd.run(["eval", "--manifest", str(root.joinpath("none.csv")), "--matrix", str(matrix_path), "--out", out], environ={}) == cmd.EXIT_IO

    garbage = root.joinpath("garbage.bin")
    garbage.write_bytes(b"not a matrix")
    assert cmd.run(["eval", "--manifest", manifest, "--matrix", str(garbage), "--out", out], environ={}) == cmd.EXIT_FORMAT

    argv = ["resample", "--manifest", manifest, "--matrix", str(matrix_path), "--out", out]
    assert cmd.run(argv + ["--runs", "6"], environ={}) == cmd.EXIT_DATA

    small = [entry for entry in entries if entry.image_id != "s03_2"]
    protocol.write_manifest(small, root.joinpath("small.csv"))
    assert cmd.run(["eval", "--manifest", str(root.joinpath("small.csv")), "--matrix", str(matrix_path), "--out", out], environ={}) == cmd.EXIT_DATA

    for entry in entries:
        entry.side = "unknown"
    protocol.write_manifest(entries, root.joinpath("no_sides.csv"))
    argv = ["sides", "--manifest", str(root.joinpath("no_sides.csv")), "--matrix", str(matrix_path), "--out", out]
    assert cmd.run(argv, environ={}) == cmd.EXIT_STATE


def test_partial_extraction(toy_dataset):
    """test that broken images are listed and the rest is written"""
    root, _ = toy_dataset
    root.joinpath("s04_1.png").write_bytes(b"broken")
    dsc_path = root.joinpath("partial.dsc")
    argv = ["extract", "--manifest", str(root.joinpath("manifest.csv")), "--images-root", str(root), "--out", str(dsc_path)]
    assert cmd.run(argv, environ={}) == cmd.EXIT_PARTIAL
    assert len(descriptors.read_descriptors(dsc_path)) == SUBJECTS * IMAGES_PER_SUBJECT - 1
    failures = pyUERC.ReportTable.parse_csv(str(dsc_path) + ".failures.csv", ("image_id", "path", "reason"))
    assert failures.column("image_id") == ["s04_1"]

    empty_manifest = root.joinpath("empty.csv")
    empty_manifest.write_text("", encoding="utf8")
    assert cmd.run(["extract", "--manifest", str(empty_manifest), "--out", str(dsc_path)], environ={}) == 0
    assert len(descriptors.read_descriptors(dsc_path)) == 0


def test_build_config():
    """test the order of defaults, config file, environment and flags"""
    parser = cmd.build_parser()
    with tempfile.TemporaryDirectory(suffix=None, prefix="pyUERC_") as tmp_dir_name:
        config_path = Path(tmp_dir_name).joinpath("run.json")
        config_path.write_text(json.dumps({"seed": 7, "threads": 2, "method": "chainlets", "command": "extract"}), encoding="utf8")
        base = ["eval", "--config", str(config_path), "--manifest", "m.csv", "--matrix", "s.bin", "--out", "r.csv"]

        config = cmd.build_config(parser.parse_args(base), environ={})
        assert config.command is pyUERC.Command.EVAL
        assert (config.seed, config.threads) == (7, 2)
        assert config.descriptor is pyUERC.DescriptorKind.CHAINLETS
        assert config.distance == [pyUERC.Distance.CHISQ]
        assert config.exclude_self is True

        assert cmd.build_config(parser.parse_args(base), environ={"UERC_THREADS": "3"}).threads == 3
        config = cmd.build_config(parser.parse_args(base + ["--threads", "4", "--distance", "l2"]), environ={"UERC_THREADS": "3"})
        assert config.threads == 4
        assert config.distance == [pyUERC.Distance.L2]

        config = cmd.build_config(parser.parse_args(base + ["--method", "flip-sum", "--no-exclude-self"]), environ={})
        assert config.descriptor is pyUERC.DescriptorKind.EXTERNAL
        assert config.flip is pyUERC.FlipMode.SUM
        assert config.exclude_self is False

        config_path.write_text(json.dumps({"flip": "sideways"}), encoding="utf8")
        with pytest.raises(pyUERC.UERCInputException):
            cmd.build_config(parser.parse_args(base), environ={})
        config_path.write_text("[1, 2]", encoding="utf8")
        with pytest.raises(pyUERC.UERCInputException):
            cmd.build_config(parser.parse_args(base), environ={})
        config_path.write_text(json.dumps({"colour": "red"}), encoding="utf8")
        with pytest.raises(pyUERC.UERCInputException):
            cmd.build_config(parser.parse_args(base), environ={})
        with pytest.raises(pyUERC.UERCInputException):
            cmd.build_config(parser.parse_args(["eval", "--manifest", "m.csv", "--matrix", "s.bin", "--out", "r.csv"]), environ={"UERC_THREADS": "x"})

    with pytest.raises(SystemExit):
        parser.parse_args(["eval", "--distance", "manhattan"])


def test_dataset_baseline(manifest, images_root):
    """test the lbp baseline on the annotated part of a real dataset"""
    with tempfile.TemporaryDirectory(suffix=None, prefix="pyUERC_") as tmp_dir_name:
        tmp_dir = Path(tmp_dir_name)
        common = ["--manifest", manifest, "--images-root", images_root, "--threads", "8"]
        assert cmd.run(["extract"] + common + ["--method", "lbp-baseline", "--out", str(tmp_dir.joinpath("lbp.dsc"))]) == 0
        argv = ["score"] + common + ["--method", "lbp-baseline", "--descriptors", str(tmp_dir.joinpath("lbp.dsc"))]
        assert cmd.run(argv + ["--out", str(tmp_dir.joinpath("lbp.bin"))]) == 0
        argv = ["eval"] + common + ["--matrix", str(tmp_dir.joinpath("lbp.bin")), "--origin", "awe"]
        assert cmd.run(argv + ["--out", str(tmp_dir.joinpath("eval.csv"))]) == 0
        row = pyUERC.ReportTable.parse_csv(tmp_dir.joinpath("eval.csv")).rows[0]

    assert float(row["rank1"]) == pytest.approx(14.3, abs=3.0)
    assert float(row["rank5"]) == pytest.approx(28.6, abs=3.0)
    assert float(row["auc"]) == pytest.approx(0.759, abs=0.03)


def test_score_per_file_distance(toy_dataset):
    """test one distance per descriptor file, files without one use their default"""
    root, _ = toy_dataset
    common = ["--manifest", str(root.joinpath("manifest.csv")), "--images-root", str(root)]
    files = []
    for kind in ("lbp", "hog"):
        files.append(str(root.joinpath(kind + ".dsc")))
        assert cmd.run(["extract"] + common + ["--descriptor", kind, "--flip", "sum", "--out", files[-1]], environ={}) == 0

    argv = ["score"] + common + ["--descriptor", "lbp", "--flip", "sum", "--descriptors"] + files
    outputs = {}
    for distances in (["chisq"], ["chisq", "l2"], ["cosine"]):
        out = root.joinpath("ensemble_%s.bin" % "_".join(distances))
        assert cmd.run(argv + ["--distance"] + distances + ["--out", str(out)], environ={}) == 0
        outputs[tuple(distances)] = protocol.read_matrix(out)
    assert outputs[("chisq",)] == outputs[("chisq", "l2")]
    assert not np.allclose(outputs[("chisq",)].scores, outputs[("cosine",)].scores)

    out = str(root.joinpath("too_many.bin"))
    assert cmd.run(argv + ["--distance", "chisq", "cosine", "l2", "--out", out], environ={}) == cmd.EXIT_INPUT


def test_degenerate_external_scores(toy_dataset):
    """test that a constant score row ends with the state exit code"""
    root, entries = toy_dataset
    vectors = []
    for entry in entries:
        for suffix in ("", pyUERC.FLIP_SUFFIX):
            vectors.append(pyUERC.DescriptorVector(np.ones(8), pyUERC.DescriptorKind.EXTERNAL, entry.image_id + suffix))
    dsc_path = root.joinpath("constant.dsc")
    descriptors.write_descriptors(dsc_path, pyUERC.DescriptorKind.EXTERNAL, "external", vectors)

    argv = ["score", "--manifest", str(root.joinpath("manifest.csv")), "--descriptor", "external", "--flip", "sum"]
    argv += ["--descriptors", str(dsc_path), "--out", str(root.joinpath("constant.bin"))]
    assert cmd.run(argv, environ={}) == cmd.EXIT_STATE


def test_resample_seed(toy_dataset):
    """test that the seed decides which gallery image each run uses"""
    root, entries = toy_dataset
    ids = sorted(entry.image_id for entry in entries)
    labels = {entry.image_id: entry.subject_id for entry in entries}
    # only the first image of a subject scores above the impostors
    scores = np.array([[1.0 if labels[p] == labels[g] and g.endswith("_0") else 0.0 if labels[p] == labels[g] else 0.5 for g in ids] for p in ids])
    matrix_path = root.joinpath("first_only.bin")
    protocol.write_matrix(pyUERC.SimilarityMatrix(ids, ids, scores), matrix_path)

    matrix = protocol.read_matrix(matrix_path)
    in_id_order = evaluation.single_gallery_experiment(matrix, entries, 5)
    assert in_id_order.rank1[0] == 100.0
    assert in_id_order.rank1[1:] == [0.0] * 4

    argv = ["resample", "--manifest", str(root.joinpath("manifest.csv")), "--matrix", str(matrix_path), "--runs", "5"]
    tables = []
    for name in ("a", "b"):
        out = root.joinpath("seeded_%s.csv" % name)
        assert cmd.run(argv + ["--seed", "11", "--out", str(out)], environ={}) == 0
        tables.append(out.read_bytes())
    assert tables[0] == tables[1]
    seeded = evaluation.single_gallery_experiment(matrix, entries, 5, seed=11)
    assert seeded.rank1 != in_id_order.rank1
    rank1 = pyUERC.ReportTable.parse_csv(root.joinpath("seeded_a.csv")).column("rank1")[:5]
    assert [float(value) for value in rank1] == pytest.approx(seeded.rank1, abs=1e-4)
