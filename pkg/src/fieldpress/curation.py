"""Quality filtering, dedup, balancing, splitting, normalization statistics.

Nothing here deletes a record or an image: exclusion flags are the only
mechanism, so the manifest history is a complete audit trail. Any operation
that changes the excluded set invalidates downstream state (balance record,
split assignment, normalization) since those were computed against the old
set.

All randomness comes from a Philox counter-based generator keyed by
(dataset_id, seed, purpose), so runs reproduce bit-exactly across machines.
"""

from __future__ import annotations

import hashlib
from dataclasses import replace
from typing import Iterable, Mapping

import numpy as np

from .imaging import blur_score, decode_image, hamming_distance  # noqa: F401  (blur_score is this module's API too)
from .model import (
    BalanceState,
    DatasetManifest,
    FrameRecord,
    ModelError,
    Normalization,
    invalidate_curation_state as _invalidate_downstream,
)
from .store import DatasetStore

DEFAULT_BLUR_THRESHOLD = 100.0
DEFAULT_DEDUP_HAMMING = 4


def rng_for(dataset_id: str, seed: int, purpose: str) -> np.random.Generator:
    """Named, splittable PRNG stream for one curation purpose."""
    digest = hashlib.sha256(f"{dataset_id}|{seed}|{purpose}".encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _frame_sort_key(f: FrameRecord):
    return (f.asset_id, f.timestamp_s, f.frame_id)


def filter_blurry(store: DatasetStore,
                  threshold: float = DEFAULT_BLUR_THRESHOLD,
                  *, frame_ids: Iterable[str] | None = None) -> DatasetManifest:
    """Exclude kept frames whose blur score falls below the threshold.

    ``frame_ids`` restricts the candidates (merges curate new material only).
    """
    if threshold < 0:
        raise ModelError(f"blur threshold must be >= 0, got {threshold}")
    manifest = store.load()
    scope = None if frame_ids is None else set(frame_ids)
    targets = {f.frame_id for f in manifest.kept_frames()
               if f.blur_score < threshold
               and (scope is None or f.frame_id in scope)}
    if not targets:
        return manifest

    def apply(m: DatasetManifest) -> DatasetManifest:
        frames = tuple(
            replace(f, excluded=True, exclusion_reason="blur")
            if f.frame_id in targets else f
            for f in m.frames)
        return _invalidate_downstream(replace(m, frames=frames))

    return store.mutate(apply, note=f"filter_blurry threshold={threshold}")


def dedup_near_duplicates(store: DatasetStore,
                          hamming_max: int = DEFAULT_DEDUP_HAMMING,
                          *, frame_ids: Iterable[str] | None = None) -> DatasetManifest:
    """Exclude near-duplicate frames by perceptual-hash distance.

    Within each (asset, label) group in timestamp order, a frame within
    ``hamming_max`` bits of the previously kept frame is excluded; the
    comparison anchor only advances when a frame is kept, so a slow drift
    across many frames still collapses onto sparse anchors. ``frame_ids``
    restricts the groups to those frames.
    """
    if not 0 <= hamming_max <= 64:
        raise ModelError(f"hamming_max {hamming_max} outside [0, 64]")
    manifest = store.load()
    scope = None if frame_ids is None else set(frame_ids)
    groups: dict[tuple[str, str], list[FrameRecord]] = {}
    for f in manifest.kept_frames():
        if scope is None or f.frame_id in scope:
            groups.setdefault((f.asset_id, f.label), []).append(f)

    targets: set[str] = set()
    for group in groups.values():
        group.sort(key=_frame_sort_key)
        anchor: FrameRecord | None = None
        for f in group:
            if anchor is not None and hamming_distance(
                    anchor.perceptual_hash, f.perceptual_hash) <= hamming_max:
                targets.add(f.frame_id)
            else:
                anchor = f
    if not targets:
        return manifest

    def apply(m: DatasetManifest) -> DatasetManifest:
        frames = tuple(
            replace(f, excluded=True, exclusion_reason="duplicate")
            if f.frame_id in targets else f
            for f in m.frames)
        return _invalidate_downstream(replace(m, frames=frames))

    return store.mutate(apply, note=f"dedup hamming_max={hamming_max}")


def _stride_indices(n: int, quota: int, phase_rng: np.random.Generator) -> set[int]:
    """Pick ``quota`` of ``n`` indices at uniform stride with a seeded phase."""
    if quota >= n:
        return set(range(n))
    base = [(i * n) // quota for i in range(quota)]
    headroom = (n - 1) - base[-1]
    phase = int(phase_rng.integers(0, headroom + 1)) if headroom > 0 else 0
    return {b + phase for b in base}


def balance(store: DatasetStore, min_count: int | None = None,
            max_count: int | None = None, seed: int = 0) -> DatasetManifest:
    """Clamp per-category kept counts into [min_count, max_count].

    Categories above the maximum are down-sampled to exactly the maximum by
    uniform temporal stride within each asset (temporal diversity beats
    random sampling for video-derived frames); categories below the minimum
    are flagged deficient, never padded. Re-running first releases flags a
    previous balance set, so the clamp is always computed fresh.
    """
    manifest = store.load()
    min_count = manifest.balance_min if min_count is None else min_count
    max_count = manifest.balance_max if max_count is None else max_count
    if min_count > max_count:
        raise ModelError(f"min_count {min_count} > max_count {max_count}")

    # frames excluded by an earlier balance run come back into play
    candidates = [f for f in manifest.frames
                  if not f.excluded or f.exclusion_reason == "balance"]
    by_label: dict[str, list[FrameRecord]] = {}
    for f in candidates:
        by_label.setdefault(f.label, []).append(f)

    exclude: set[str] = set()
    deficient: list[str] = []
    for slug in manifest.category_slugs():
        frames = by_label.get(slug, [])
        total = len(frames)
        if total < min_count:
            deficient.append(slug)
        if total <= max_count:
            continue
        by_asset: dict[str, list[FrameRecord]] = {}
        for f in frames:
            by_asset.setdefault(f.asset_id, []).append(f)
        asset_ids = sorted(by_asset)
        # largest-remainder allocation of the category quota across assets
        shares = {a: max_count * len(by_asset[a]) / total for a in asset_ids}
        quotas = {a: int(shares[a]) for a in asset_ids}
        shortfall = max_count - sum(quotas.values())
        for a in sorted(asset_ids, key=lambda a: (-(shares[a] - quotas[a]), a)):
            if shortfall <= 0:
                break
            if quotas[a] < len(by_asset[a]):
                quotas[a] += 1
                shortfall -= 1
        for a in asset_ids:
            group = sorted(by_asset[a], key=_frame_sort_key)
            rng = rng_for(manifest.dataset_id, seed, f"balance|{slug}|{a}")
            keep = _stride_indices(len(group), quotas[a], rng)
            for i, f in enumerate(group):
                if i not in keep:
                    exclude.add(f.frame_id)

    def apply(m: DatasetManifest) -> DatasetManifest:
        frames = []
        for f in m.frames:
            if f.frame_id in exclude:
                frames.append(replace(f, excluded=True, exclusion_reason="balance"))
            elif f.exclusion_reason == "balance":
                frames.append(replace(f, excluded=False, exclusion_reason="none"))
            else:
                frames.append(f)
        state = BalanceState(applied_version=m.version, min_count=min_count,
                             max_count=max_count, deficient=tuple(sorted(deficient)))
        return replace(m, frames=tuple(frames), balance_min=min_count,
                       balance_max=max_count, balance_state=state,
                       split={}, normalization=None)

    return store.mutate(
        apply, note=f"balance min={min_count} max={max_count} seed={seed}")


def split(store: DatasetStore, train_fraction: float = 0.5,
          seed: int = 0) -> DatasetManifest:
    """Assign every kept frame to train or eval, per category.

    |train| = floor(fraction * n + 0.5): rounding half up, so at 50:50 an
    odd category gives the extra frame to train. The shuffle is Philox-keyed
    per (dataset, seed, category), so the same seed reproduces the assignment
    bit-exactly anywhere.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ModelError(f"train_fraction {train_fraction} outside (0, 1)")
    manifest = store.load()
    assignment: dict[str, str] = {}
    for slug in manifest.category_slugs():
        frames = sorted(manifest.frames_by_label(slug), key=_frame_sort_key)
        if not frames:
            continue
        n = len(frames)
        n_train = int(np.floor(train_fraction * n + 0.5))
        rng = rng_for(manifest.dataset_id, seed, f"split|{slug}")
        order = rng.permutation(n)
        for rank, idx in enumerate(order):
            assignment[frames[idx].frame_id] = "train" if rank < n_train else "eval"
    if not assignment:
        raise ModelError("no non-excluded frames to split")

    def apply(m: DatasetManifest) -> DatasetManifest:
        return replace(m, split=assignment, split_seed=seed, normalization=None)

    return store.mutate(
        apply, note=f"split train_fraction={train_fraction} seed={seed}")


def compute_normalization(store: DatasetStore) -> DatasetManifest:
    """Record per-channel mean and population std over train-split pixels.

    Channel values are scaled to [0,1]; statistics are stored in the
    manifest and never applied to the stored images. Without a split the
    statistics cover all non-excluded frames.
    """
    manifest = store.load()
    frames = [f for f in manifest.kept_frames()
              if not manifest.split or manifest.split_of(f.frame_id) == "train"]
    if not frames:
        raise ModelError("no frames available for normalization statistics")

    count = 0
    total = np.zeros(3, dtype=np.float64)
    total_sq = np.zeros(3, dtype=np.float64)
    for f in frames:
        px = decode_image(store.frame_path(f.label, f.frame_id)).astype(np.float64) / 255.0
        count += px.shape[0] * px.shape[1]
        total += px.sum(axis=(0, 1))
        total_sq += (px * px).sum(axis=(0, 1))
    mean = total / count
    var = np.maximum(total_sq / count - mean * mean, 0.0)
    std = np.sqrt(var)
    norm = Normalization(mean=tuple(round(x, 6) for x in mean),
                         std=tuple(round(x, 6) for x in std))

    def apply(m: DatasetManifest) -> DatasetManifest:
        return replace(m, normalization=norm)

    return store.mutate(apply, note="compute_normalization")


def exclude_manual(store: DatasetStore, frame_ids: Iterable[str],
                   note: str = "") -> DatasetManifest:
    """Manually exclude frames (out-of-context imagery, etc.); reversible."""
    ids = list(frame_ids)
    manifest = store.load()
    known = {f.frame_id: f for f in manifest.frames}
    for fid in ids:
        if fid not in known:
            raise ModelError(f"unknown frame_id: {fid}")
    targets = {fid for fid in ids if not known[fid].excluded}
    if not targets:
        return manifest

    def apply(m: DatasetManifest) -> DatasetManifest:
        frames = tuple(
            replace(f, excluded=True, exclusion_reason="manual", exclusion_note=note)
            if f.frame_id in targets else f
            for f in m.frames)
        return _invalidate_downstream(replace(m, frames=frames))

    return store.mutate(apply, note=f"exclude_manual n={len(targets)}")


def include_frames(store: DatasetStore, frame_ids: Iterable[str]) -> DatasetManifest:
    """Reverse exclusions: the human reviewing the gallery has the last word."""
    ids = list(frame_ids)
    manifest = store.load()
    known = {f.frame_id: f for f in manifest.frames}
    for fid in ids:
        if fid not in known:
            raise ModelError(f"unknown frame_id: {fid}")
    targets = {fid for fid in ids if known[fid].excluded}
    if not targets:
        return manifest

    def apply(m: DatasetManifest) -> DatasetManifest:
        frames = tuple(
            replace(f, excluded=False, exclusion_reason="none", exclusion_note="")
            if f.frame_id in targets else f
            for f in m.frames)
        return _invalidate_downstream(replace(m, frames=frames))

    return store.mutate(apply, note=f"include n={len(targets)}")


def curation_report(manifest: DatasetManifest) -> dict:
    """Per-category counts: kept, excluded by reason, deficiency flag."""
    report: dict[str, dict] = {}
    deficient = set(manifest.balance_state.deficient) if manifest.balance_state else set()
    for slug in manifest.category_slugs():
        frames = manifest.frames_by_label(slug, include_excluded=True)
        by_reason: dict[str, int] = {}
        kept = 0
        for f in frames:
            if f.excluded:
                by_reason[f.exclusion_reason] = by_reason.get(f.exclusion_reason, 0) + 1
            else:
                kept += 1
        report[slug] = {
            "kept": kept,
            "excluded_by_reason": dict(sorted(by_reason.items())),
            "deficient": slug in deficient,
        }
    return report
