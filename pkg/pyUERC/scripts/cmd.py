#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""This script runs the ear recognition benchmark from the command line:
   descriptor extraction, scoring into a similarity matrix and the evaluation reports.
"""
import argparse
import json
import logging
import os
import pathlib
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import pyUERC
from pyUERC import descriptors, evaluation, imaging, matching, protocol
from pyUERC.const import DEFAULT_DISTANCE, METHOD_PRESETS, THREADS_ENV, Command, DescriptorKind, FlipMode, Partition, Side

__license__ = "MIT"
__version__ = "1.0"

#: exit status per failure family
EXIT_INPUT = -1
EXIT_DATA = -2
EXIT_STATE = -3
EXIT_FORMAT = -4
EXIT_IO = -5
EXIT_PARTIAL = -6

logger = logging.getLogger("uerc")


def build_parser() -> argparse.ArgumentParser:
    """argument parser with one sub command per pipeline step"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="json file with configuration values, flags take precedence", type=str)
    common.add_argument("--method", help="named pipeline preset", choices=sorted(METHOD_PRESETS))
    common.add_argument("--manifest", help="manifest csv of the dataset", type=str)
    common.add_argument("--images-root", help="directory the manifest paths are relative to", type=str)
    common.add_argument("--descriptor", help="descriptor type", choices=[k.value for k in DescriptorKind])
    common.add_argument("--descriptors", help="descriptor files to score, one per descriptor type", nargs="+", type=str)
    common.add_argument("--distance", help="comparison function per descriptor file, missing ones use the default of the descriptor", nargs="+", choices=["cosine", "chisq", "l2"])
    common.add_argument("--flip", help="handling of left and right ears", choices=[f.value for f in FlipMode])
    common.add_argument("--matrix", help="similarity matrix file", type=str)
    common.add_argument("--out", help="output file", type=str)
    common.add_argument("--seed", help="seed for all random decisions", type=int)
    common.add_argument("--threads", help="number of worker threads, default from %s" % THREADS_ENV, type=int)
    common.add_argument("--stratify-field", help="manifest field to split probes by", choices=["pitch", "roll", "yaw", "occlusion", "gender", "size_bin"])
    common.add_argument("--runs", help="number of runs of the single gallery image experiment", type=int)
    common.add_argument("--origin", help="evaluate only images of this origin", choices=["awe", "awe_aux", "uerc_new"])
    common.add_argument("--top-k", help="number of matches listed per probe", type=int)
    common.add_argument("--no-exclude-self", help="keep the probe image itself in the gallery", action="store_const", const=False, dest="exclude_self")
    common.add_argument("--csv", help="also write the matrix as csv", action="store_const", const=True)

    log_group = common.add_mutually_exclusive_group()
    log_group.add_argument(
        "-d",
        "--debug",
        help="enable log level DEBUG",
        action="store_const",
        dest="loglevel",
        const=logging.DEBUG,
        default=logging.WARNING,
    )
    log_group.add_argument(
        "-v",
        "--verbose",
        help="enable log level INFO",
        action="store_const",
        dest="loglevel",
        const=logging.INFO,
        default=logging.WARNING,
    )

    parser = argparse.ArgumentParser(prog="uerc", description="command line script for the ear recognition benchmark in pyUERC")
    commands = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        Command.EXTRACT: "extract one descriptor record per manifest image",
        Command.SCORE: "score probes against the gallery into a similarity matrix",
        Command.EVAL: "cmc, rank-1, rank-5 and auc of a similarity matrix",
        Command.STRATIFY: "evaluation per label of a manifest field",
        Command.RESAMPLE: "identification with a single gallery image per subject",
        Command.SIDES: "same side and opposite side identification",
        Command.REPORT: "best matches per probe",
    }
    for command, description in descriptions.items():
        commands.add_parser(command.value, help=description, parents=[common])
    return parser


FLAG_KEYS = (
    "manifest",
    "images_root",
    "descriptor",
    "descriptors",
    "distance",
    "flip",
    "matrix",
    "out",
    "seed",
    "threads",
    "stratify_field",
    "runs",
    "origin",
    "top_k",
    "exclude_self",
    "csv",
)


def _apply_source(config: pyUERC.RunConfig, values: dict):
    values = dict(values)
    method = values.pop("method", None)
    if method is not None:
        if method not in METHOD_PRESETS:
            raise pyUERC.UERCInputException("unknown method '%s'" % method)
        config.update(METHOD_PRESETS[method])
    config.update(values)


def build_config(args: argparse.Namespace, environ: Optional[dict] = None) -> pyUERC.RunConfig:
    """
    merge defaults, config file, environment and flags, later sources win

    :raises UERCInputException: for invalid values or parameter combinations
    """
    environ = os.environ if environ is None else environ
    config = pyUERC.RunConfig()
    config.command = args.command

    if args.config:
        try:
            with open(args.config, "r", encoding="utf8") as cfp:
                values = json.load(cfp)
        except (OSError, ValueError) as ex:
            raise pyUERC.UERCInputException("could not read config file %s: %s" % (args.config, ex)) from ex
        if not isinstance(values, dict):
            raise pyUERC.UERCInputException("config file %s does not hold an object" % args.config)
        values.pop("command", None)
        _apply_source(config, values)

    if environ.get(THREADS_ENV):
        try:
            config.threads = int(environ[THREADS_ENV])
        except ValueError as ex:
            raise pyUERC.UERCInputException("invalid %s value '%s'" % (THREADS_ENV, environ[THREADS_ENV])) from ex

    flags = {key: getattr(args, key) for key in FLAG_KEYS}
    flags["method"] = args.method
    _apply_source(config, flags)
    validate_config(config)
    return config


def validate_config(config: pyUERC.RunConfig):
    """check that everything a command needs is configured"""

    def require(*names):
        for name in names:
            if not getattr(config, name):
                raise pyUERC.UERCInputException("command %s needs --%s" % (config.command.value, name.replace("_", "-")))

    if config.command is Command.EXTRACT:
        require("manifest", "out")
        if config.descriptor is DescriptorKind.EXTERNAL:
            raise pyUERC.UERCInputException("external descriptors can not be extracted")
    elif config.command is Command.SCORE:
        require("manifest", "descriptors", "out")
    else:
        require("manifest", "matrix", "out")


def _image_path(config: pyUERC.RunConfig, entry: pyUERC.ManifestEntry) -> pathlib.Path:
    return pathlib.Path(config.images_root or ".") / entry.path


def _train_side_model(config: pyUERC.RunConfig, entries: Sequence[pyUERC.ManifestEntry]) -> pyUERC.SideModel:
    samples = []
    for entry in entries:
        if entry.partition is Partition.TRAIN and entry.side is not Side.UNKNOWN:
            samples.append((imaging.to_grayscale(imaging.read_color_image(_image_path(config, entry), entry.image_id)), entry.side))
    logger.info("training side classifier on %d images", len(samples))
    return matching.train_side_classifier(samples, seed=config.seed)


def cmd_extract(config: pyUERC.RunConfig) -> int:
    """one descriptor record per manifest image, failed images are listed in a failure file"""
    entries = protocol.load_manifest(config.manifest)
    kind = config.descriptor
    params = descriptors.default_params(kind)
    fingerprint = descriptors.parameter_fingerprint(kind, params)
    model = _train_side_model(config, entries) if config.flip is FlipMode.CLASSIFIER else None

    def extract(entry: pyUERC.ManifestEntry) -> Tuple[List[pyUERC.DescriptorVector], Optional[str]]:
        try:
            img = imaging.read_color_image(_image_path(config, entry), entry.image_id)
            normalized = img if model is None else matching.normalize_side(model, img)
            vector = descriptors.extract_pipeline(kind, normalized, params)
            vector.source_image_id = entry.image_id
            vectors = [vector]
            if config.flip is FlipMode.SUM:
                flipped = descriptors.extract_pipeline(kind, img, params, flip=True)
                flipped.source_image_id = imaging.flipped_id(entry.image_id)
                vectors.append(flipped)
            return vectors, None
        except (pyUERC.UERCDataException, pyUERC.UERCInputException) as ex:
            logger.warning("extraction failed for '%s': %s", entry.image_id, ex)
            return [], str(ex)

    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        results = list(pool.map(extract, entries))

    records = []
    failures = pyUERC.ReportTable(name="failures", columns=("image_id", "path", "reason"))
    for entry, (vectors, reason) in zip(entries, results):
        records.extend(vectors)
        if reason is not None:
            failures.append_row({"image_id": entry.image_id, "path": entry.path, "reason": reason})

    descriptors.write_descriptors(config.out, kind, fingerprint, records)
    if len(failures) > 0:
        failures.dump_csv(str(config.out) + ".failures.csv")
        logger.error("%d of %d images failed, see %s.failures.csv", len(failures), len(entries), config.out)
        return EXIT_PARTIAL
    return 0


def cmd_score(config: pyUERC.RunConfig) -> int:
    """similarity matrix of the probes against the gallery of the test partition"""
    entries = protocol.load_manifest(config.manifest)
    _, test = protocol.partition(entries)
    gallery_ids = protocol.build_gallery(test)
    probe_ids = protocol.build_probes(test)

    stores = [descriptors.read_descriptors(path) for path in config.descriptors]
    if stores[0].kind is not config.descriptor:
        raise pyUERC.UERCFormatException("descriptor file holds %s descriptors, configured are %s" % (stores[0].kind.value, config.descriptor.value))
    for path, store in zip(config.descriptors, stores):
        if store.kind is not DescriptorKind.EXTERNAL and store.fingerprint != descriptors.parameter_fingerprint(store.kind):
            raise pyUERC.UERCFormatException("parameter fingerprint of %s does not match: %s" % (path, store.fingerprint))
    if len(config.distance) > len(stores):
        raise pyUERC.UERCInputException("%d distances given for %d descriptor files" % (len(config.distance), len(stores)))
    distances = config.distance + [DEFAULT_DISTANCE[store.kind] for store in stores[len(config.distance) :]]
    logger.info("scoring %d probes against %d gallery images with %s", len(probe_ids), len(gallery_ids), ", ".join(d.value for d in distances))

    row_scorer = matching.score_rows(gallery_ids, stores, distances, flip=config.flip is FlipMode.SUM)
    matrix = protocol.compute_matrix_rows(probe_ids, gallery_ids, row_scorer, threads=config.threads)
    protocol.write_matrix(matrix, config.out)
    if config.csv:
        protocol.write_matrix_csv(matrix, str(config.out) + ".csv")
    return 0


def _load_evaluation_inputs(config: pyUERC.RunConfig) -> Tuple[pyUERC.SimilarityMatrix, List[pyUERC.ManifestEntry]]:
    entries = protocol.load_manifest(config.manifest)
    matrix = protocol.read_matrix(config.matrix)
    protocol.check_ids(matrix, protocol.entry_index(entries))
    if config.origin is not None:
        matrix = protocol.origin_subset(matrix, entries, config.origin)
    return matrix, entries


def cmd_eval(config: pyUERC.RunConfig) -> int:
    """report row and cmc points of the whole matrix"""
    matrix, entries = _load_evaluation_inputs(config)
    probe_subjects, gallery_subjects = evaluation.subject_maps(entries)
    report = evaluation.evaluate(matrix, probe_subjects, gallery_subjects, config.exclude_self)
    evaluation.write_reports([report], config.out)
    evaluation.write_cmc_points(report.curve, str(config.out) + ".cmc.csv")
    return 0


def cmd_stratify(config: pyUERC.RunConfig) -> int:
    """one report row per label of the configured field"""
    matrix, entries = _load_evaluation_inputs(config)
    reports = evaluation.stratified_eval(matrix, entries, config.stratify_field, config.exclude_self)
    evaluation.write_reports(list(reports.values()), config.out)
    return 0


def cmd_resample(config: pyUERC.RunConfig) -> int:
    """rank-1 per run of the single gallery image experiment"""
    matrix, entries = _load_evaluation_inputs(config)
    result = evaluation.single_gallery_experiment(matrix, entries, config.runs, seed=config.seed, exclude_self=config.exclude_self)
    evaluation.write_resample(result, config.out)
    return 0


def cmd_sides(config: pyUERC.RunConfig) -> int:
    """one report row per side condition"""
    matrix, entries = _load_evaluation_inputs(config)
    reports = evaluation.side_experiment(matrix, entries, config.exclude_self)
    evaluation.write_reports(list(reports.values()), config.out)
    return 0


def cmd_report(config: pyUERC.RunConfig) -> int:
    """top matches per probe"""
    matrix, entries = _load_evaluation_inputs(config)
    probe_subjects, gallery_subjects = evaluation.subject_maps(entries)
    rows = evaluation.qualitative_report(matrix, probe_subjects, gallery_subjects, config.top_k, config.exclude_self)
    evaluation.write_qualitative(rows, config.out)
    return 0


COMMANDS = {
    Command.EXTRACT: cmd_extract,
    Command.SCORE: cmd_score,
    Command.EVAL: cmd_eval,
    Command.STRATIFY: cmd_stratify,
    Command.RESAMPLE: cmd_resample,
    Command.SIDES: cmd_sides,
    Command.REPORT: cmd_report,
}


def run(argv: Optional[Sequence[str]] = None, environ: Optional[dict] = None) -> int:
    """parse arguments, run the command and return the exit status"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.loglevel)
    logger.debug("Start logging with level '%s'", logging.getLevelName(args.loglevel))

    try:
        config = build_config(args, environ)
        logger.debug("configuration: %s", config.as_json())
        return COMMANDS[config.command](config)
    except pyUERC.UERCInputException as ex:
        logger.error("invalid input: %s", ex)
        return EXIT_INPUT
    except pyUERC.UERCDataException as ex:
        logger.error("inconsistent data: %s", ex)
        return EXIT_DATA
    except pyUERC.UERCStateException as ex:
        logger.error("protocol violation: %s", ex)
        return EXIT_STATE
    except pyUERC.UERCFormatException as ex:
        logger.error("malformed file: %s", ex)
        return EXIT_FORMAT
    except OSError as ex:
        logger.error("An Exception occurred: '%s'", ex)
        return EXIT_IO


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
