#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""identification performance: cmc curves, rank-k, auc and the experiments built on them"""
import logging
import pathlib
from collections import OrderedDict
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import dat_cls as ud
from . import protocol
from .const import SIZE_BIN_LABELS, UNLABELED, Gender, Occlusion, Rotation, Side, StratifyField
from .err import UERCDataException, UERCInputException, UERCStateException
from .table_reader import ReportTable

logger = logging.getLogger("UERC Evaluation")

PathLike = Union[str, pathlib.Path]

#: number of probe rows ranked at once
CHUNK_ROWS = 512


def subject_maps(entries: Sequence[ud.ManifestEntry]) -> Tuple[Dict[str, str], Dict[str, str]]:
    """image id to subject id, once for probes and once for galleries"""
    labels = {entry.image_id: entry.subject_id for entry in entries}
    return labels, dict(labels)


class _Ranking:
    """gallery columns grouped by subject, shared by all rank computations on one matrix"""

    def __init__(self, matrix: ud.SimilarityMatrix, probe_subjects: Mapping[str, str], gallery_subjects: Mapping[str, str]):
        self.matrix = matrix
        try:
            column_subjects = [gallery_subjects[g] for g in matrix.gallery_ids]
        except KeyError as ex:
            raise UERCDataException("no subject for gallery image %s" % ex) from ex
        try:
            self.probe_subjects = [probe_subjects[p] for p in matrix.probe_ids]
        except KeyError as ex:
            raise UERCDataException("no subject for probe image %s" % ex) from ex
        if not column_subjects:
            raise UERCStateException("gallery is empty")

        self.subjects = sorted(set(column_subjects))
        subject_position = {s: i for i, s in enumerate(self.subjects)}
        column_index = np.array([subject_position[s] for s in column_subjects])
        # stable, so columns of one subject keep the gallery order
        self.order = np.argsort(column_index, kind="stable")
        self.position_of_column = np.empty_like(self.order)
        self.position_of_column[self.order] = np.arange(len(self.order))
        self.starts = np.searchsorted(column_index[self.order], np.arange(len(self.subjects)))

        missing = sorted({s for s in self.probe_subjects if s not in subject_position})
        if missing:
            raise UERCDataException("probe subject '%s' has no gallery image" % missing[0])
        self.correct = np.array([subject_position[s] for s in self.probe_subjects], dtype=np.intp)

    def collapsed(self, exclude_self: bool) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """per chunk of probes the row indices and the per subject maximum scores"""
        gallery_index = self.matrix.gallery_index()
        for start in range(0, len(self.matrix.probe_ids), CHUNK_ROWS):
            rows = np.arange(start, min(start + CHUNK_ROWS, len(self.matrix.probe_ids)))
            scores = self.matrix.scores[rows].astype(np.float64)[:, self.order]
            if exclude_self:
                for offset, row in enumerate(rows):
                    column = gallery_index.get(self.matrix.probe_ids[row])
                    if column is not None:
                        scores[offset, self.position_of_column[column]] = -np.inf
            yield rows, np.maximum.reduceat(scores, self.starts, axis=1)

    def ranks(self, exclude_self: bool) -> np.ndarray:
        """1-based rank of the correct subject for every probe"""
        ranks = np.empty(len(self.matrix.probe_ids), dtype=np.intp)
        positions = np.arange(len(self.subjects))
        for rows, collapsed in self.collapsed(exclude_self):
            correct = self.correct[rows]
            target = collapsed[np.arange(len(rows)), correct][:, None]
            absent = np.isneginf(target[:, 0])
            if np.any(absent):
                probe_id = self.matrix.probe_ids[rows[np.argmax(absent)]]
                raise UERCDataException("subject of probe '%s' has no gallery image besides the probe itself" % probe_id)
            better = np.sum(collapsed > target, axis=1)
            tied_before = np.sum((collapsed == target) & (positions[None, :] < correct[:, None]), axis=1)
            ranks[rows] = 1 + better + tied_before
        return ranks


def probe_ranks(
    matrix: ud.SimilarityMatrix, probe_subjects: Mapping[str, str], gallery_subjects: Mapping[str, str], exclude_self: bool = True
) -> np.ndarray:
    """
    rank of the correct identity for every probe

    gallery scores are collapsed per subject by their maximum, subjects are ordered by score
    descending and subject id ascending

    :raises UERCDataException: for unlabeled ids or a probe subject missing from the gallery
    """
    return _Ranking(matrix, probe_subjects, gallery_subjects).ranks(exclude_self)


def _curve_from_ranks(ranks: np.ndarray, max_rank: int) -> ud.CmcCurve:
    if ranks.size == 0:
        raise UERCDataException("no probes to evaluate")
    counts = np.bincount(ranks, minlength=max_rank + 1)[1 : max_rank + 1]
    return ud.CmcCurve(np.cumsum(counts) / ranks.size)


def cmc(
    matrix: ud.SimilarityMatrix, probe_subjects: Mapping[str, str], gallery_subjects: Mapping[str, str], exclude_self: bool = True
) -> ud.CmcCurve:
    """
    cumulative match characteristic, value r - 1 is the fraction of probes identified within rank r

    :raises UERCDataException: for unlabeled ids, missing probe subjects or an empty probe set
    """
    ranking = _Ranking(matrix, probe_subjects, gallery_subjects)
    return _curve_from_ranks(ranking.ranks(exclude_self), len(ranking.subjects))


def rank_k(curve: ud.CmcCurve, k: int) -> float:
    """
    identification rate at rank k in percent

    :raises UERCInputException: unless 1 <= k <= max rank
    """
    if not 1 <= k <= curve.max_rank:
        raise UERCInputException("rank %d out of range [1, %d]" % (k, curve.max_rank))
    return 100.0 * float(curve.values[k - 1])


def auc(curve: ud.CmcCurve) -> float:
    """area under the cmc curve with the rank axis normalized to [0, 1]"""
    return float(np.mean(curve.values))


def evaluate(
    matrix: ud.SimilarityMatrix,
    probe_subjects: Mapping[str, str],
    gallery_subjects: Mapping[str, str],
    exclude_self: bool = True,
    stratum: Optional[str] = None,
) -> ud.EvalReport:
    """cmc with rank-1, rank-5 and auc; rank-5 falls back to the highest rank for smaller galleries"""
    ranking = _Ranking(matrix, probe_subjects, gallery_subjects)
    curve = _curve_from_ranks(ranking.ranks(exclude_self), len(ranking.subjects))
    report = ud.EvalReport(
        curve,
        rank_k(curve, 1),
        rank_k(curve, min(5, curve.max_rank)),
        auc(curve),
        len(matrix.probe_ids),
        curve.max_rank,
    )
    report.n_distractor_identities = len(set(ranking.subjects) - set(ranking.probe_subjects))
    report.stratum = stratum
    logger.info("%s", report)
    return report


def _label_order(field: StratifyField) -> Tuple[str, ...]:
    if field is StratifyField.SIZE_BIN:
        return SIZE_BIN_LABELS
    if field is StratifyField.OCCLUSION:
        return tuple(o.value for o in Occlusion)
    if field is StratifyField.GENDER:
        return tuple(g.value for g in Gender)
    return tuple(r.value for r in Rotation)


def stratified_eval(
    matrix: ud.SimilarityMatrix, entries: Sequence[ud.ManifestEntry], field: StratifyField, exclude_self: bool = True
) -> Dict[str, ud.EvalReport]:
    """
    one report per label of a manifest field, probes are split by label and the gallery is kept

    unlabeled probes are skipped, labels without probes are absent from the result
    """
    field = StratifyField(field)
    index = protocol.entry_index(entries)
    protocol.check_ids(matrix, index)
    probe_subjects, gallery_subjects = subject_maps(entries)

    groups: Dict[str, List[str]] = {}
    for probe_id in matrix.probe_ids:
        label = index[probe_id].annotation(field)
        if label != UNLABELED:
            groups.setdefault(label, []).append(probe_id)
    skipped = len(matrix.probe_ids) - sum(len(g) for g in groups.values())
    if skipped:
        logger.info("%d probes without %s label skipped", skipped, field.value)

    reports: Dict[str, ud.EvalReport] = OrderedDict()
    for label in _label_order(field):
        if label not in groups:
            continue
        subset = protocol.restrict_matrix(matrix, groups[label], matrix.gallery_ids)
        reports[label] = evaluate(subset, probe_subjects, gallery_subjects, exclude_self, stratum="%s=%s" % (field.value, label))
    return reports


def _admissible(probe_ids: Sequence[str], gallery_ids: Sequence[str], labels: Mapping[str, str], exclude_self: bool) -> List[str]:
    """probes that keep at least one gallery image of their subject"""
    available: Dict[str, set] = {}
    for gallery_id in gallery_ids:
        available.setdefault(labels[gallery_id], set()).add(gallery_id)
    kept = []
    for probe_id in probe_ids:
        images = available.get(labels[probe_id], set())
        if exclude_self:
            images = images - {probe_id}
        if images:
            kept.append(probe_id)
    return kept


def single_gallery_experiment(
    matrix: ud.SimilarityMatrix,
    entries: Sequence[ud.ManifestEntry],
    runs: int = 10,
    seed: Optional[int] = None,
    exclude_self: bool = True,
) -> ud.ResampleResult:
    """
    identification with a single gallery image per subject

    Run k uses the k-th image of every subject, so with as many runs as images each one is
    used once. Images are taken in image id order, or in a seeded random order per subject.
    Probes without a usable gallery image in a run are left out of that run.

    :raises UERCDataException: if a subject has fewer gallery images than runs
    """
    if runs < 1:
        raise UERCInputException("number of runs has to be at least 1, got %d" % runs)
    index = protocol.entry_index(entries)
    protocol.check_ids(matrix, index)
    labels, _ = subject_maps(entries)

    per_subject = protocol.subjects_with_images([index[g] for g in matrix.gallery_ids])
    subjects = sorted(per_subject)
    rng = None if seed is None else np.random.default_rng(seed)
    for subject_id in subjects:
        images = per_subject[subject_id]
        if len(images) < runs:
            raise UERCDataException("subject '%s' has %d gallery images, %d runs requested" % (subject_id, len(images), runs))
        if rng is not None:
            per_subject[subject_id] = [images[i] for i in rng.permutation(len(images))]

    rank1, counts = [], []
    for run in range(runs):
        gallery_ids = [per_subject[subject_id][run] for subject_id in subjects]
        probe_ids = _admissible(matrix.probe_ids, gallery_ids, labels, exclude_self)
        dropped = len(matrix.probe_ids) - len(probe_ids)
        if dropped:
            logger.info("run %d: %d probes without gallery image of their subject left out", run + 1, dropped)
        subset = protocol.restrict_matrix(matrix, probe_ids, gallery_ids)
        report = evaluate(subset, labels, labels, exclude_self, stratum="run=%d" % (run + 1))
        rank1.append(report.rank1)
        counts.append(report.n_probes)
    return ud.ResampleResult(rank1, counts)


#: conditions of the side experiment as (probe side, gallery side)
SIDE_CONDITIONS = (
    (Side.LEFT, Side.LEFT),
    (Side.RIGHT, Side.RIGHT),
    (Side.LEFT, Side.RIGHT),
    (Side.RIGHT, Side.LEFT),
)


def side_experiment(matrix: ud.SimilarityMatrix, entries: Sequence[ud.ManifestEntry], exclude_self: bool = True) -> Dict[str, ud.EvalReport]:
    """
    same side and opposite side identification, keys like ``left->right``

    :raises UERCStateException: if a condition has no probes or no gallery images
    """
    index = protocol.entry_index(entries)
    protocol.check_ids(matrix, index)
    labels, _ = subject_maps(entries)

    reports: Dict[str, ud.EvalReport] = OrderedDict()
    for probe_side, gallery_side in SIDE_CONDITIONS:
        name = "%s->%s" % (probe_side.value, gallery_side.value)
        gallery_ids = [g for g in matrix.gallery_ids if index[g].side is gallery_side]
        candidates = [p for p in matrix.probe_ids if index[p].side is probe_side]
        probe_ids = _admissible(candidates, gallery_ids, labels, exclude_self)
        if not gallery_ids or not probe_ids:
            raise UERCStateException("condition %s is empty: %d probes, %d gallery images" % (name, len(probe_ids), len(gallery_ids)))
        if len(candidates) > len(probe_ids):
            logger.info("%s: %d probes without gallery image of their subject left out", name, len(candidates) - len(probe_ids))
        subset = protocol.restrict_matrix(matrix, probe_ids, gallery_ids)
        reports[name] = evaluate(subset, labels, labels, exclude_self, stratum=name)
    return reports


def qualitative_report(
    matrix: ud.SimilarityMatrix,
    probe_subjects: Mapping[str, str],
    gallery_subjects: Mapping[str, str],
    k: int = 2,
    exclude_self: bool = True,
) -> List[ud.QualitativeRow]:
    """
    best matching gallery images per probe together with the rank of the correct identity

    every listed image is the best scoring image of one of the top-k subjects

    :raises UERCInputException: if k exceeds the number of gallery identities
    """
    ranking = _Ranking(matrix, probe_subjects, gallery_subjects)
    if not 1 <= k <= len(ranking.subjects):
        raise UERCInputException("k = %d out of range [1, %d]" % (k, len(ranking.subjects)))
    ranks = ranking.ranks(exclude_self)
    gallery_index = matrix.gallery_index()
    sorted_ids = [matrix.gallery_ids[c] for c in ranking.order]
    ends = list(ranking.starts[1:]) + [len(sorted_ids)]

    report = []
    for rows, collapsed in ranking.collapsed(exclude_self):
        for offset, row in enumerate(rows):
            probe_id = matrix.probe_ids[row]
            scores = matrix.scores[row].astype(np.float64)[ranking.order]
            if exclude_self and probe_id in gallery_index:
                scores[ranking.position_of_column[gallery_index[probe_id]]] = -np.inf
            # score descending, subject position ascending
            order = np.lexsort((np.arange(len(ranking.subjects)), -collapsed[offset]))
            best = [sorted_ids[start + int(np.argmax(scores[start:end]))] for start, end in zip(ranking.starts, ends)]
            top = [int(s) for s in order[:k]]
            report.append(
                ud.QualitativeRow(
                    probe_id,
                    ranking.probe_subjects[row],
                    [best[s] for s in top],
                    [ranking.subjects[s] for s in top],
                    best[int(ranking.correct[row])],
                    int(ranks[row]),
                )
            )
    return report


def write_reports(reports: Sequence[ud.EvalReport], path: PathLike):
    """one csv row per report"""
    table = ReportTable(name="reports")
    table.extend_rows([report.as_row() for report in reports])
    table.dump_csv(path)


def write_cmc_points(curve: ud.CmcCurve, path: PathLike):
    """(rank, value) pairs for plotting"""
    table = ReportTable(name="cmc", columns=("rank", "value"))
    for rank, value in enumerate(curve.values, start=1):
        table.append_row({"rank": rank, "value": "%.6f" % value})
    table.dump_csv(path)


def write_resample(result: ud.ResampleResult, path: PathLike):
    """one row per run followed by the five number summary"""
    table = ReportTable(name="resample", columns=("run", "rank1", "n_probes"))
    for run, (rank1, count) in enumerate(zip(result.rank1, result.n_probes), start=1):
        table.append_row({"run": run, "rank1": "%.4f" % rank1, "n_probes": count})
    minimum, q1, median, q3, maximum = result.summary
    table.append_row(
        {"run": "summary", "rank1": "min=%.4f q1=%.4f median=%.4f q3=%.4f max=%.4f" % (minimum, q1, median, q3, maximum), "n_probes": ""}
    )
    table.dump_csv(path)


def write_qualitative(rows: Sequence[ud.QualitativeRow], path: PathLike):
    """top matches per probe"""
    table = ReportTable(name="qualitative")
    table.extend_rows([row.as_row() for row in rows])
    table.dump_csv(path)
