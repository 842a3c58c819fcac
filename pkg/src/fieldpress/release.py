"""Dataset snapshots for publication, and merging later collection efforts.

Exports re-encode every image from raw pixels, so no metadata container of
any kind (EXIF, XMP, GPS, text chunks) survives into a release. The whole
tree is content-digested for citation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import curation
from .imaging import reencode_clean
from .labeling import extract_labeled_frames, span_whole_video
from .model import DatasetManifest, ModelError, dumps_canonical, manifest_to_json
from .store import DatasetStore


class ReleaseError(RuntimeError):
    pass


@dataclass
class ReleaseSummary:
    dataset_id: str
    version: int
    out_dir: Path
    files_written: int
    category_counts: dict[str, int]
    digest: str

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "version": self.version,
            "files_written": self.files_written,
            "category_counts": {k: self.category_counts[k]
                                for k in sorted(self.category_counts)},
            "digest": self.digest,
        }


def _tree_digest(root: Path) -> str:
    """SHA-256 over (path, file-hash) pairs in sorted order."""
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name != "DIGEST":
            rel = p.relative_to(root).as_posix()
            h.update(rel.encode())
            h.update(hashlib.sha256(p.read_bytes()).digest())
    return h.hexdigest()


def export(store: DatasetStore, out_root: str | Path, *,
           include_excluded: bool = False,
           version: int | None = None) -> ReleaseSummary:
    """Write ``<out_root>/<dataset>-v<N>/`` with scrubbed frames and metadata.

    Requires a balanced and split manifest: a release must state what was
    clamped and how it divides. Excluded frames are only written when asked,
    under ``quarantine/`` with their reasons.
    """
    manifest = store.load(version)
    if manifest.balance_state is None:
        raise ReleaseError("manifest has no balance record; run balance first")
    if not manifest.split:
        raise ReleaseError("manifest has no split assignment; run split first")

    out_dir = Path(out_root) / f"{manifest.dataset_id}-v{manifest.version}"
    out_dir.mkdir(parents=True, exist_ok=False)

    files = 0
    counts: dict[str, int] = {}
    for f in manifest.kept_frames():
        src = store.frame_path(f.label, f.frame_id)
        dst = out_dir / "frames" / f.label / f"{f.frame_id}.png"
        dst.parent.mkdir(parents=True, exist_ok=True)
        dst.write_bytes(reencode_clean(src))
        counts[f.label] = counts.get(f.label, 0) + 1
        files += 1

    quarantine_index = []
    if include_excluded:
        for f in manifest.frames:
            if not f.excluded:
                continue
            src = store.frame_path(f.label, f.frame_id)
            if not src.exists():
                continue
            dst = out_dir / "quarantine" / f.label / f"{f.frame_id}.png"
            dst.parent.mkdir(parents=True, exist_ok=True)
            dst.write_bytes(reencode_clean(src))
            quarantine_index.append({"frame_id": f.frame_id, "label": f.label,
                                     "reason": f.exclusion_reason,
                                     "note": f.exclusion_note})
            files += 1
        (out_dir / "quarantine.json").write_text(
            dumps_canonical({"excluded": quarantine_index}), encoding="utf-8")

    (out_dir / "manifest.json").write_text(manifest_to_json(manifest),
                                           encoding="utf-8")
    splits = {"train": sorted(fid for fid, s in manifest.split.items() if s == "train"),
              "eval": sorted(fid for fid, s in manifest.split.items() if s == "eval")}
    (out_dir / "splits.json").write_text(dumps_canonical(splits), encoding="utf-8")

    digest = _tree_digest(out_dir)
    summary = ReleaseSummary(
        dataset_id=manifest.dataset_id, version=manifest.version,
        out_dir=out_dir, files_written=files,
        category_counts=counts, digest=digest)
    (out_dir / "summary.json").write_text(dumps_canonical(summary.to_dict()),
                                          encoding="utf-8")
    (out_dir / "DIGEST").write_text(digest + "\n", encoding="utf-8")
    return summary


@dataclass
class MergeReport:
    target_label: str
    assets_merged: int = 0
    frames_added: int = 0
    kept_before: dict[str, int] = field(default_factory=dict)
    kept_after: dict[str, int] = field(default_factory=dict)
    balance_changed: list[str] = field(default_factory=list)
    deficient_before: tuple[str, ...] = ()
    deficient_after: tuple[str, ...] = ()
    failed_spans: list = field(default_factory=list)

    def deltas(self) -> dict[str, int]:
        keys = set(self.kept_before) | set(self.kept_after)
        return {k: self.kept_after.get(k, 0) - self.kept_before.get(k, 0)
                for k in sorted(keys)
                if self.kept_after.get(k, 0) != self.kept_before.get(k, 0)}

    def to_dict(self) -> dict:
        return {
            "target_label": self.target_label,
            "assets_merged": self.assets_merged,
            "frames_added": self.frames_added,
            "kept_deltas": self.deltas(),
            "balance_changed": self.balance_changed,
            "deficient_before": sorted(self.deficient_before),
            "deficient_after": sorted(self.deficient_after),
            "failed_spans": [{"asset_id": s.asset_id, "error": err}
                             for s, err in self.failed_spans],
        }


def _kept_counts(manifest: DatasetManifest) -> dict[str, int]:
    counts: dict[str, int] = {}
    for f in manifest.kept_frames():
        counts[f.label] = counts.get(f.label, 0) + 1
    return counts


def _balance_excluded_counts(manifest: DatasetManifest) -> dict[str, int]:
    counts: dict[str, int] = {}
    for f in manifest.frames:
        if f.excluded and f.exclusion_reason == "balance":
            counts[f.label] = counts.get(f.label, 0) + 1
    return counts


def merge_collection(store: DatasetStore, workspace, asset_ids: Sequence[str],
                     target_label: str, *, fps_cap: float = 2.0,
                     context_tags: Sequence[str] = (),
                     blur_threshold: float | None = curation.DEFAULT_BLUR_THRESHOLD,
                     dedup_hamming: int | None = curation.DEFAULT_DEDUP_HAMMING,
                     balance_seed: int = 0) -> MergeReport:
    """Fold a later collection effort into an existing category.

    Each new asset is labeled whole-video with the target category, then
    extraction and automatic curation run over the new material. When the
    dataset had a balance record, the clamp is recomputed so the report can
    show which categories' counts or balance exclusions moved.
    """
    manifest = store.load()
    if target_label not in manifest.category_slugs():
        raise ModelError(f"unregistered label: {target_label!r}")

    report = MergeReport(target_label=target_label)
    report.kept_before = _kept_counts(manifest)
    report.deficient_before = (manifest.balance_state.deficient
                               if manifest.balance_state else ())
    balance_before = _balance_excluded_counts(manifest)
    had_balance = manifest.balance_state is not None
    bounds = (manifest.balance_min, manifest.balance_max)

    if not asset_ids:
        report.kept_after = dict(report.kept_before)
        report.deficient_after = report.deficient_before
        return report

    spans = []
    for asset_id in asset_ids:
        asset = workspace.asset(asset_id)
        spans.append(span_whole_video(manifest, asset, target_label,
                                      note="merge_collection"))

    result = extract_labeled_frames(store, workspace, spans, fps_cap=fps_cap,
                                    context_tags=context_tags)
    report.frames_added = result.frames_added
    report.failed_spans = result.failed_spans
    report.assets_merged = len(asset_ids) - len(result.failed_spans)

    # automatic curation touches the new material only
    if blur_threshold is not None:
        curation.filter_blurry(store, blur_threshold,
                               frame_ids=result.new_frame_ids)
    if dedup_hamming is not None:
        curation.dedup_near_duplicates(store, dedup_hamming,
                                       frame_ids=result.new_frame_ids)
    if had_balance:
        curation.balance(store, bounds[0], bounds[1], seed=balance_seed)

    after = store.load()
    report.kept_after = _kept_counts(after)
    report.deficient_after = (after.balance_state.deficient
                              if after.balance_state else ())
    balance_after = _balance_excluded_counts(after)
    changed = {k for k in set(balance_before) | set(balance_after)
               if balance_before.get(k, 0) != balance_after.get(k, 0)}
    report.balance_changed = sorted(changed)
    return report
