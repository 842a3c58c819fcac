"""Score classifier prediction logs against a dataset manifest.

The prediction log (JSON lines, one ranked prediction per frame) is the
integration boundary: any external trainer that emits the format plugs in.
A small nearest-centroid color-histogram classifier ships as a baseline so
the whole loop runs end to end without any deep-learning dependency.

Error convention: a frame counts as a top-k error iff its true label is
absent from the first k ranking entries. A label missing from a partial
ranking is therefore an error at every k. Percentages are reported to one
decimal; macro values are unweighted means over categories with n > 0.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .imaging import color_histogram, decode_image
from .model import DatasetManifest, ModelError
from .store import DatasetStore

DEFAULT_KS = (1, 3)


@dataclass(frozen=True)
class PredictionRecord:
    """Ranked classifier output for one frame; scores strictly descending."""

    frame_id: str
    classifier_id: str
    ranking: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if not self.ranking:
            raise ModelError(f"{self.frame_id}: empty ranking")
        labels = [lab for lab, _ in self.ranking]
        if len(set(labels)) != len(labels):
            raise ModelError(f"{self.frame_id}: duplicate labels in ranking")
        scores = [s for _, s in self.ranking]
        if any(later >= earlier for later, earlier in zip(scores[1:], scores)):
            raise ModelError(f"{self.frame_id}: scores not strictly descending")

    @property
    def top1(self) -> str:
        return self.ranking[0][0]

    def to_dict(self) -> dict:
        return {"frame_id": self.frame_id, "classifier_id": self.classifier_id,
                "ranking": [{"label": lab, "score": s} for lab, s in self.ranking]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PredictionRecord":
        return cls(frame_id=d["frame_id"], classifier_id=d["classifier_id"],
                   ranking=tuple((r["label"], float(r["score"]))
                                 for r in d["ranking"]))


def write_prediction_log(records: Iterable[PredictionRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def read_prediction_log(path: str | Path) -> list[PredictionRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(PredictionRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ModelError) as e:
                raise ModelError(f"{path}:{line_no}: bad prediction record: {e}") from e
    return records


@dataclass
class EvaluationReport:
    classifier_id: str
    per_category: dict[str, dict]          # slug -> {top1_error_pct, top3_error_pct, n}
    macro_top1_error_pct: float
    macro_top3_error_pct: float
    subset_tag: str | None = None
    n_scored: int = 0
    rejected: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "classifier_id": self.classifier_id,
            "subset_tag": self.subset_tag,
            "n_scored": self.n_scored,
            "per_category": {k: self.per_category[k] for k in sorted(self.per_category)},
            "macro_top1_error_pct": self.macro_top1_error_pct,
            "macro_top3_error_pct": self.macro_top3_error_pct,
            "rejected": self.rejected,
        }


def _pct(misses: int, n: int) -> float:
    return round(100.0 * misses / n, 1)


def evaluate(predictions: Sequence[PredictionRecord], manifest: DatasetManifest,
             *, split: str = "eval", subset_tag: str | None = None,
             classifier_id: str | None = None,
             ks: Sequence[int] = DEFAULT_KS) -> EvaluationReport:
    """Top-k error per category over one split (optionally one context tag).

    Top-1 and top-3 are always computed; extra ``ks`` add top{k}_error_pct
    keys to each category row. Predictions for unknown, excluded, or
    wrong-split frames are rejected and listed; when ``subset_tag`` is set,
    predictions for untagged frames are ignored rather than rejected.
    """
    all_ks = sorted(set(ks) | set(DEFAULT_KS))
    if any(k < 1 for k in all_ks):
        raise ModelError("k must be >= 1")
    frames = {f.frame_id: f for f in manifest.frames}
    registered = set(manifest.category_slugs())
    if subset_tag is not None:
        tagged = [f for f in manifest.kept_frames()
                  if subset_tag in f.context_tags
                  and manifest.split_of(f.frame_id) == split]
        if not tagged:
            raise ModelError(f"no {split} frames carry context tag {subset_tag!r}")

    rejected: list[dict] = []
    seen: set[str] = set()
    misses: dict[str, dict[int, int]] = {}
    counts: Counter[str] = Counter()
    cid = classifier_id

    for rec in predictions:
        if cid is None:
            cid = rec.classifier_id
        frame = frames.get(rec.frame_id)
        if frame is None:
            rejected.append({"frame_id": rec.frame_id, "reason": "unknown-frame"})
            continue
        if frame.excluded:
            rejected.append({"frame_id": rec.frame_id, "reason": "excluded-frame"})
            continue
        if manifest.split_of(rec.frame_id) != split:
            rejected.append({"frame_id": rec.frame_id, "reason": f"not-in-{split}-split"})
            continue
        if rec.frame_id in seen:
            rejected.append({"frame_id": rec.frame_id, "reason": "duplicate-prediction"})
            continue
        if any(lab not in registered for lab, _ in rec.ranking):
            rejected.append({"frame_id": rec.frame_id, "reason": "unregistered-label"})
            continue
        if subset_tag is not None and subset_tag not in frame.context_tags:
            continue
        seen.add(rec.frame_id)
        counts[frame.label] += 1
        ranked = [lab for lab, _ in rec.ranking]
        per_k = misses.setdefault(frame.label, {k: 0 for k in all_ks})
        for k in all_ks:
            if frame.label not in ranked[:k]:
                per_k[k] += 1

    per_category: dict[str, dict] = {}
    top1_values: list[float] = []
    top3_values: list[float] = []
    for slug in sorted(counts):
        n = counts[slug]
        t1 = 100.0 * misses[slug][1] / n
        t3 = 100.0 * misses[slug][3] / n
        per_category[slug] = {"top1_error_pct": round(t1, 1),
                              "top3_error_pct": round(t3, 1), "n": n,
                              "top1_misses": misses[slug][1],
                              "top3_misses": misses[slug][3]}
        for k in all_ks:
            if k not in DEFAULT_KS:
                per_category[slug][f"top{k}_error_pct"] = _pct(misses[slug][k], n)
        top1_values.append(t1)
        top3_values.append(t3)

    return EvaluationReport(
        classifier_id=cid or "unknown",
        per_category=per_category,
        macro_top1_error_pct=round(sum(top1_values) / len(top1_values), 1) if top1_values else 0.0,
        macro_top3_error_pct=round(sum(top3_values) / len(top3_values), 1) if top3_values else 0.0,
        subset_tag=subset_tag,
        n_scored=sum(counts.values()),
        rejected=rejected,
    )


def context_report(predictions: Sequence[PredictionRecord], manifest: DatasetManifest,
                   tag: str, *, split: str = "eval") -> EvaluationReport:
    """Evaluation restricted to frames carrying one context tag.

    Cross-context subsets are small (tens of frames), so their tables report
    whole-percent values (nearest integer, ties to even) in the style of a
    field report; a tenth of a percent would be false precision at that n.
    """
    all_tags = {t for f in manifest.frames for t in f.context_tags}
    if tag not in all_tags:
        raise ModelError(f"unknown context tag: {tag!r}")
    report = evaluate(predictions, manifest, split=split, subset_tag=tag)
    for row in report.per_category.values():
        row["top1_error_pct"] = float(round(100.0 * row["top1_misses"] / row["n"]))
        row["top3_error_pct"] = float(round(100.0 * row["top3_misses"] / row["n"]))
    report.macro_top1_error_pct = round(
        sum(r["top1_error_pct"] for r in report.per_category.values())
        / len(report.per_category), 1) if report.per_category else 0.0
    report.macro_top3_error_pct = round(
        sum(r["top3_error_pct"] for r in report.per_category.values())
        / len(report.per_category), 1) if report.per_category else 0.0
    return report


# -- ensemble voting ---------------------------------------------------------

@dataclass
class VoteResult:
    records: list[PredictionRecord]
    report: EvaluationReport
    coverage_mismatches: list[dict]


def majority_vote(logs: Sequence[Sequence[PredictionRecord]],
                  manifest: DatasetManifest, *, split: str = "eval",
                  subset_tag: str | None = None) -> VoteResult:
    """Vote across classifiers: per frame, the mode of the top-1 labels wins.

    Ties break by the highest top-1 score summed over the tied label's
    voters, then by slug. The voted ranking orders all voted labels the same
    way; its scores encode (vote count + positional fraction), which keeps
    scores strictly descending while preserving the documented order. Frames
    not covered by every classifier are skipped and listed.
    """
    if len(logs) < 2:
        raise ModelError("majority vote needs at least 2 classifier logs")
    by_frame: list[dict[str, PredictionRecord]] = []
    for log in logs:
        d: dict[str, PredictionRecord] = {}
        for rec in log:
            d[rec.frame_id] = rec
        by_frame.append(d)

    frame_sets = [set(d) for d in by_frame]
    common = set.intersection(*frame_sets)
    mismatches = []
    for fid in sorted(set.union(*frame_sets) - common):
        missing = [i for i, s in enumerate(frame_sets) if fid not in s]
        mismatches.append({"frame_id": fid, "missing_from": missing})

    voted: list[PredictionRecord] = []
    for fid in sorted(common):
        votes: Counter[str] = Counter()
        score_sum: dict[str, float] = {}
        for d in by_frame:
            lab, score = d[fid].ranking[0]
            votes[lab] += 1
            score_sum[lab] = score_sum.get(lab, 0.0) + score
        order = sorted(votes, key=lambda lab: (-votes[lab], -score_sum[lab], lab))
        total = len(order)
        ranking = tuple(
            (lab, votes[lab] + (total - pos) / (2.0 * total))
            for pos, lab in enumerate(order))
        voted.append(PredictionRecord(frame_id=fid, classifier_id="vote",
                                      ranking=ranking))

    report = evaluate(voted, manifest, split=split, subset_tag=subset_tag,
                      classifier_id="vote")
    return VoteResult(records=voted, report=report,
                      coverage_mismatches=mismatches)


# -- built-in baseline classifier ---------------------------------------------

class HistogramCentroidClassifier:
    """Nearest-centroid over concatenated per-channel color histograms.

    Ranks all fitted categories by ascending Euclidean distance to the frame's
    histogram. Exact distance ties order by slug; tied scores are nudged by a
    deterministic epsilon per rank so the log keeps strictly descending scores.
    """

    classifier_id = "baseline-centroid"

    def __init__(self, bins_per_channel: int = 8):
        self.bins_per_channel = bins_per_channel
        self.centroids_: dict[str, np.ndarray] = {}

    def fit(self, store: DatasetStore,
            manifest: DatasetManifest | None = None) -> "HistogramCentroidClassifier":
        manifest = manifest or store.load()
        sums: dict[str, np.ndarray] = {}
        counts: Counter[str] = Counter()
        for f in manifest.kept_frames():
            if manifest.split and manifest.split_of(f.frame_id) != "train":
                continue
            px = decode_image(store.frame_path(f.label, f.frame_id))
            feat = color_histogram(px, self.bins_per_channel)
            sums[f.label] = sums.get(f.label, 0) + feat
            counts[f.label] += 1
        if not counts:
            raise ModelError("empty train split: nothing to fit")
        self.centroids_ = {lab: sums[lab] / counts[lab] for lab in sorted(counts)}
        return self

    def predict_ranking(self, pixels: np.ndarray) -> tuple[tuple[str, float], ...]:
        if not self.centroids_:
            raise ModelError("classifier is not fitted")
        feat = color_histogram(pixels, self.bins_per_channel)
        dists = sorted(
            ((float(np.linalg.norm(feat - c)), lab)
             for lab, c in self.centroids_.items()),
            key=lambda t: (t[0], t[1]))
        ranking = []
        prev_score = None
        for dist, lab in dists:
            score = -dist
            if prev_score is not None and score >= prev_score:
                score = prev_score - 1e-12
            ranking.append((lab, score))
            prev_score = score
        return tuple(ranking)

    def classify_split(self, store: DatasetStore, *, split: str = "eval",
                       manifest: DatasetManifest | None = None) -> list[PredictionRecord]:
        manifest = manifest or store.load()
        records = []
        for f in sorted(manifest.kept_frames(), key=lambda f: f.frame_id):
            if manifest.split and manifest.split_of(f.frame_id) != split:
                continue
            px = decode_image(store.frame_path(f.label, f.frame_id))
            records.append(PredictionRecord(
                frame_id=f.frame_id, classifier_id=self.classifier_id,
                ranking=self.predict_ranking(px)))
        return records


def baseline_classify(store: DatasetStore, *, split: str = "eval",
                      bins_per_channel: int = 8) -> list[PredictionRecord]:
    """Fit the baseline on the train split and rank every frame in ``split``."""
    manifest = store.load()
    clf = HistogramCentroidClassifier(bins_per_channel).fit(store, manifest)
    return clf.classify_split(store, split=split, manifest=manifest)


# -- rendering ----------------------------------------------------------------

def render_report_table(report: EvaluationReport) -> str:
    """Plain-text table: one row per category plus the macro summary."""
    lines = [f"classifier: {report.classifier_id}"]
    if report.subset_tag:
        lines.append(f"context: {report.subset_tag}")
    lines.append(f"{'category':<20} {'n':>6} {'top-1 %':>8} {'top-3 %':>8}")
    for slug in sorted(report.per_category):
        row = report.per_category[slug]
        lines.append(f"{slug:<20} {row['n']:>6} "
                     f"{row['top1_error_pct']:>8.1f} {row['top3_error_pct']:>8.1f}")
    lines.append(f"{'macro':<20} {report.n_scored:>6} "
                 f"{report.macro_top1_error_pct:>8.1f} "
                 f"{report.macro_top3_error_pct:>8.1f}")
    if report.rejected:
        lines.append(f"rejected predictions: {len(report.rejected)}")
    return "\n".join(lines)


def write_category_errors_csv(report: EvaluationReport, path: str | Path) -> None:
    """Bar-chart data file: one line per category, slug,top1,top3."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("category,top1_error_pct,top3_error_pct\n")
        for slug in sorted(report.per_category):
            row = report.per_category[slug]
            f.write(f"{slug},{row['top1_error_pct']},{row['top3_error_pct']}\n")
