"""Turn transcript evidence and expert annotations into labeled frames.

A label span asserts "this interval of this asset shows category X". Spans
come from keyword hits (speaker names the plant), from expert review, or
cover a whole clip when one plant is filmed per video. Extraction samples
frames inside each span and appends FrameRecords to the dataset: the images
are taken as decoded, full size, with no cropping or segmentation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .imaging import blur_score, encode_png, perceptual_hash
from .media import DecodeFailure, DecoderBackend, MediaError, sample_frames
from .model import (
    DatasetManifest,
    FrameRecord,
    LabelSpan,
    MediaAsset,
    ModelError,
    content_id,
    invalidate_curation_state,
)
from .store import DatasetStore
from .transcription import SearchHit

log = logging.getLogger(__name__)


def _require_label(manifest: DatasetManifest, label: str) -> None:
    if label not in manifest.category_slugs():
        raise ModelError(f"unregistered label: {label!r}")


def merge_spans(spans: Iterable[LabelSpan]) -> list[LabelSpan]:
    """Merge overlapping or touching same-label spans on the same asset."""
    merged: list[LabelSpan] = []
    for span in sorted(spans, key=lambda s: (s.asset_id, s.label, s.start_s, s.end_s)):
        if (merged and merged[-1].asset_id == span.asset_id
                and merged[-1].label == span.label
                and span.start_s <= merged[-1].end_s):
            prev = merged[-1]
            merged[-1] = replace(prev, end_s=max(prev.end_s, span.end_s))
        else:
            merged.append(span)
    return merged


def spans_from_hits(manifest: DatasetManifest, asset: MediaAsset,
                    hits: Sequence[SearchHit], label: str,
                    pad_before_s: float = 2.0, pad_after_s: float = 5.0) -> list[LabelSpan]:
    """One padded span per keyword hit, clamped to the asset and merged.

    The pads are asymmetric by default: the speaker names the plant and then
    films it, so more context follows a mention than precedes it.
    """
    _require_label(manifest, label)
    if pad_before_s < 0 or pad_after_s < 0:
        raise ModelError("pads must be non-negative")
    spans = []
    for hit in hits:
        start = max(0.0, hit.start_s - pad_before_s)
        end = min(asset.duration_s, hit.end_s + pad_after_s)
        if start < end:
            spans.append(LabelSpan(asset_id=asset.asset_id, label=label,
                                   start_s=start, end_s=end, source="keyword",
                                   note=f"hit:{hit.matched_token}"))
    return merge_spans(spans)


def span_whole_video(manifest: DatasetManifest, asset: MediaAsset,
                     label: str, note: str = "") -> LabelSpan:
    """Label an entire clip: the one-plant-per-video collection style."""
    _require_label(manifest, label)
    if asset.duration_s <= 0:
        raise ModelError(f"asset {asset.asset_id} has zero duration")
    return LabelSpan(asset_id=asset.asset_id, label=label, start_s=0.0,
                     end_s=asset.duration_s, source="whole_video", note=note)


def add_spans(store: DatasetStore, spans: Sequence[LabelSpan]) -> DatasetManifest:
    """Record spans (and their assets' registrations must already exist)."""

    def apply(m: DatasetManifest) -> DatasetManifest:
        for s in spans:
            _require_label(m, s.label)
        return replace(m, spans=m.spans + tuple(spans))

    return store.mutate(apply, note=f"add_spans n={len(spans)}")


def register_asset(store: DatasetStore, asset: MediaAsset) -> DatasetManifest:
    def apply(m: DatasetManifest) -> DatasetManifest:
        if any(a.asset_id == asset.asset_id for a in m.assets):
            return m
        return replace(m, assets=m.assets + (asset,))

    return store.mutate(apply, note=f"register_asset {asset.asset_id}")


@dataclass
class ExtractionResult:
    manifest: DatasetManifest
    frames_added: int = 0
    duplicates_skipped: int = 0
    new_frame_ids: list[str] = None  # type: ignore[assignment]
    failed_spans: list[tuple[LabelSpan, str]] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.new_frame_ids is None:
            self.new_frame_ids = []
        if self.failed_spans is None:
            self.failed_spans = []


def _warn_cross_label_overlaps(spans: Sequence[LabelSpan]) -> None:
    by_asset: dict[str, list[LabelSpan]] = {}
    for s in spans:
        by_asset.setdefault(s.asset_id, []).append(s)
    for asset_id, group in by_asset.items():
        group.sort(key=lambda s: s.start_s)
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                if b.start_s >= a.end_s:
                    break
                if a.label != b.label:
                    log.info("cross-label overlap on %s: %s [%.1f,%.1f] and %s [%.1f,%.1f]",
                             asset_id, a.label, a.start_s, a.end_s,
                             b.label, b.start_s, b.end_s)


def extract_labeled_frames(store: DatasetStore, workspace, spans: Sequence[LabelSpan],
                           *, fps_cap: float = 2.0,
                           context_tags: Sequence[str] = (),
                           backend: DecoderBackend | None = None) -> ExtractionResult:
    """Sample frames inside each span and append them as labeled records.

    Every frame is written to ``frames/<label>/<frame_id>.png`` with blur
    score and perceptual hash computed at extraction time. frame_id hashes
    (asset, timestamp, label, pixels), so re-running over the same inputs
    adds nothing. A span whose decode fails is skipped and reported; other
    spans proceed.
    """
    manifest = store.load()
    for s in spans:
        _require_label(manifest, s.label)

    _warn_cross_label_overlaps(spans)
    result = ExtractionResult(manifest=manifest)
    existing_ids = {f.frame_id for f in manifest.frames}
    new_records: list[FrameRecord] = []
    new_assets: list[MediaAsset] = []
    resolved = {a.asset_id: a for a in manifest.assets}
    tags = tuple(sorted(set(context_tags)))

    for span in spans:
        try:
            asset = resolved.get(span.asset_id)
            if asset is None:
                asset = workspace.asset(span.asset_id)
            media_path = workspace.media_path(span.asset_id)
            frames = sample_frames(asset, media_path, (span.start_s, span.end_s),
                                   fps_cap, backend=backend)
        except (MediaError, ModelError, OSError) as e:
            result.failed_spans.append((span, str(e)))
            continue
        if span.asset_id not in resolved:
            new_assets.append(asset)
            resolved[span.asset_id] = asset
        for frame in frames:
            png = encode_png(frame.pixels)
            stamp_ms = int(round(frame.timestamp_s * 1000))
            frame_id = content_id(
                f"{span.asset_id}|{stamp_ms}|{span.label}|".encode() + png)
            if frame_id in existing_ids:
                result.duplicates_skipped += 1
                continue
            existing_ids.add(frame_id)
            path = store.frame_path(span.label, frame_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(png)
            new_records.append(FrameRecord(
                frame_id=frame_id,
                asset_id=span.asset_id,
                timestamp_s=frame.timestamp_s,
                label=span.label,
                blur_score=round(blur_score(frame.pixels), 4),
                perceptual_hash=perceptual_hash(frame.pixels),
                context_tags=tags,
            ))

    if new_records or new_assets:
        def apply(m: DatasetManifest) -> DatasetManifest:
            m = replace(m, assets=m.assets + tuple(new_assets),
                        frames=m.frames + tuple(new_records))
            # a grown frame population invalidates prior balance/split claims
            return invalidate_curation_state(m) if new_records else m

        result.manifest = store.mutate(
            apply, note=f"extract frames={len(new_records)} fps_cap={fps_cap}")
    result.frames_added = len(new_records)
    result.new_frame_ids = [r.frame_id for r in new_records]
    return result


# -- span exchange (JSON lines) so experts can annotate off-site ------------

def dump_spans(spans: Iterable[LabelSpan], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in spans:
            f.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")


def load_spans(path: str | Path) -> list[LabelSpan]:
    spans = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                spans.append(LabelSpan.from_dict(json.loads(line)))
    return spans
