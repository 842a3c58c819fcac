"""Core data model: assets, transcripts, label spans, frame records, dataset manifests.

Everything here is a plain value object with a canonical JSON form. Manifests
are the single source of truth for a dataset; they are validated as a whole by
:func:`validate_manifest`, which reports violations as data instead of raising.

A deliberate, system-wide rule: no type may carry latitude/longitude or any
GPS-shaped data. :func:`scan_location_keys` enforces this at the schema level
and runs inside every manifest validation.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping

CONTAINERS = ("webm", "mp4")
SPAN_SOURCES = ("keyword", "expert", "whole_video")
EXCLUSION_REASONS = ("none", "blur", "duplicate", "manual", "balance")
SPLITS = ("train", "eval")

DEFAULT_BALANCE_MIN = 1200
DEFAULT_BALANCE_MAX = 2500

SLUG_RE = re.compile(r"^[a-z0-9][a-z0-9-]*$")
HASH_ID_RE = re.compile(r"^[0-9a-f]{16}$")

# Key names that would smuggle location data into stored records. Checked
# against every serialized manifest and against the published schema.
LOCATION_KEY_RE = re.compile(
    r"(^|[_-])(lat|latitude|lon|lng|longitude|gps|geo|coord|coords|"
    r"coordinate|coordinates|easting|northing|altitude|elevation)([_-]|$)",
    re.IGNORECASE,
)


class ModelError(ValueError):
    """Raised when an operation's preconditions are not met."""


def content_id(data: bytes) -> str:
    """Deterministic identity for raw bytes: SHA-256, first 16 hex chars."""
    return hashlib.sha256(data).hexdigest()[:16]


def file_content_id(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class MediaAsset:
    """An ingested video file with probed properties and content-hash identity."""

    asset_id: str
    source_name: str
    container: str
    duration_s: float
    frame_rate: float
    width_px: int
    height_px: int
    language: str = "id-ID"
    site_note: str = ""

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "source_name": self.source_name,
            "container": self.container,
            "duration_s": self.duration_s,
            "frame_rate": self.frame_rate,
            "width_px": self.width_px,
            "height_px": self.height_px,
            "language": self.language,
            "site_note": self.site_note,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MediaAsset":
        return cls(**{k: d[k] for k in (
            "asset_id", "source_name", "container", "duration_s", "frame_rate",
            "width_px", "height_px", "language", "site_note")})


@dataclass(frozen=True)
class Utterance:
    """One contiguous span of recognized speech with a confidence score."""

    start_s: float
    end_s: float
    text: str
    confidence: float

    def to_dict(self) -> dict:
        return {"start_s": self.start_s, "end_s": self.end_s,
                "text": self.text, "confidence": self.confidence}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Utterance":
        return cls(d["start_s"], d["end_s"], d["text"], d["confidence"])


@dataclass(frozen=True)
class ChunkStatus:
    """Outcome of transcribing one audio chunk."""

    index: int
    start_s: float
    end_s: float
    status: str  # "ok" | "failed"
    detail: str = ""

    def to_dict(self) -> dict:
        return {"index": self.index, "start_s": self.start_s,
                "end_s": self.end_s, "status": self.status, "detail": self.detail}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ChunkStatus":
        return cls(d["index"], d["start_s"], d["end_s"], d["status"], d.get("detail", ""))


@dataclass(frozen=True)
class Transcript:
    """Timed, confidence-scored speech text for one asset."""

    asset_id: str
    provider_id: str
    language: str
    utterances: tuple[Utterance, ...] = ()
    chunks: tuple[ChunkStatus, ...] = ()

    def to_dict(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "provider_id": self.provider_id,
            "language": self.language,
            "utterances": [u.to_dict() for u in self.utterances],
            "chunks": [c.to_dict() for c in self.chunks],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Transcript":
        return cls(
            asset_id=d["asset_id"],
            provider_id=d["provider_id"],
            language=d["language"],
            utterances=tuple(Utterance.from_dict(u) for u in d.get("utterances", [])),
            chunks=tuple(ChunkStatus.from_dict(c) for c in d.get("chunks", [])),
        )


@dataclass(frozen=True)
class LabelSpan:
    """A time interval on an asset asserted to depict one category."""

    asset_id: str
    label: str
    start_s: float
    end_s: float
    source: str = "expert"
    note: str = ""

    def to_dict(self) -> dict:
        return {"asset_id": self.asset_id, "label": self.label,
                "start_s": self.start_s, "end_s": self.end_s,
                "source": self.source, "note": self.note}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "LabelSpan":
        return cls(d["asset_id"], d["label"], d["start_s"], d["end_s"],
                   d.get("source", "expert"), d.get("note", ""))


@dataclass(frozen=True)
class FrameRecord:
    """One extracted image: timestamp, label, quality scores, curation state."""

    frame_id: str
    asset_id: str
    timestamp_s: float
    label: str
    blur_score: float
    perceptual_hash: str  # 64-bit value as 16 hex chars
    context_tags: tuple[str, ...] = ()
    excluded: bool = False
    exclusion_reason: str = "none"
    exclusion_note: str = ""

    def to_dict(self) -> dict:
        return {
            "frame_id": self.frame_id,
            "asset_id": self.asset_id,
            "timestamp_s": self.timestamp_s,
            "label": self.label,
            "blur_score": self.blur_score,
            "perceptual_hash": self.perceptual_hash,
            "context_tags": sorted(self.context_tags),
            "excluded": self.excluded,
            "exclusion_reason": self.exclusion_reason,
            "exclusion_note": self.exclusion_note,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FrameRecord":
        return cls(
            frame_id=d["frame_id"],
            asset_id=d["asset_id"],
            timestamp_s=d["timestamp_s"],
            label=d["label"],
            blur_score=d["blur_score"],
            perceptual_hash=d["perceptual_hash"],
            context_tags=tuple(d.get("context_tags", [])),
            excluded=d["excluded"],
            exclusion_reason=d["exclusion_reason"],
            exclusion_note=d.get("exclusion_note", ""),
        )


@dataclass(frozen=True)
class Category:
    slug: str
    display_name: str
    scientific_name: str = ""

    def to_dict(self) -> dict:
        return {"slug": self.slug, "display_name": self.display_name,
                "scientific_name": self.scientific_name}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Category":
        return cls(d["slug"], d["display_name"], d.get("scientific_name", ""))


@dataclass(frozen=True)
class Normalization:
    """Per-channel pixel statistics over the train split, channel values in [0,1]."""

    mean: tuple[float, float, float]
    std: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {"mean": list(self.mean), "std": list(self.std)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Normalization":
        return cls(tuple(d["mean"]), tuple(d["std"]))


@dataclass(frozen=True)
class BalanceState:
    """Record of the last balance run; cleared when exclusions change afterwards."""

    applied_version: int
    min_count: int
    max_count: int
    deficient: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"applied_version": self.applied_version,
                "min_count": self.min_count, "max_count": self.max_count,
                "deficient": sorted(self.deficient)}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "BalanceState":
        return cls(d["applied_version"], d["min_count"], d["max_count"],
                   tuple(d.get("deficient", [])))


@dataclass(frozen=True)
class DatasetManifest:
    """Authoritative description of a dataset at one version.

    Mutations never happen in place: the store applies a function to a copy
    and commits the result as version+1, so every historical version stays
    readable.
    """

    dataset_id: str
    version: int
    categories: tuple[Category, ...] = ()
    assets: tuple[MediaAsset, ...] = ()
    spans: tuple[LabelSpan, ...] = ()
    frames: tuple[FrameRecord, ...] = ()
    balance_min: int = DEFAULT_BALANCE_MIN
    balance_max: int = DEFAULT_BALANCE_MAX
    balance_state: BalanceState | None = None
    split_seed: int | None = None
    split: Mapping[str, str] = field(default_factory=dict)  # frame_id -> train|eval
    normalization: Normalization | None = None
    note: str = ""  # what produced this version

    # -- views ---------------------------------------------------------

    def category_slugs(self) -> tuple[str, ...]:
        return tuple(c.slug for c in self.categories)

    def asset_by_id(self, asset_id: str) -> MediaAsset:
        for a in self.assets:
            if a.asset_id == asset_id:
                return a
        raise ModelError(f"unknown asset: {asset_id}")

    def frame_by_id(self, frame_id: str) -> FrameRecord:
        for f in self.frames:
            if f.frame_id == frame_id:
                return f
        raise ModelError(f"unknown frame: {frame_id}")

    def kept_frames(self) -> tuple[FrameRecord, ...]:
        return tuple(f for f in self.frames if not f.excluded)

    def frames_by_label(self, label: str, include_excluded: bool = False) -> tuple[FrameRecord, ...]:
        return tuple(f for f in self.frames
                     if f.label == label and (include_excluded or not f.excluded))

    def split_of(self, frame_id: str) -> str:
        return self.split.get(frame_id, "unassigned")

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "version": self.version,
            "note": self.note,
            "categories": [c.to_dict() for c in self.categories],
            "assets": [a.to_dict() for a in self.assets],
            "spans": [s.to_dict() for s in self.spans],
            "frames": [f.to_dict() for f in self.frames],
            "balance_min": self.balance_min,
            "balance_max": self.balance_max,
            "balance_state": self.balance_state.to_dict() if self.balance_state else None,
            "split_seed": self.split_seed,
            "split": {k: self.split[k] for k in sorted(self.split)},
            "normalization": self.normalization.to_dict() if self.normalization else None,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "DatasetManifest":
        return cls(
            dataset_id=d["dataset_id"],
            version=d["version"],
            note=d.get("note", ""),
            categories=tuple(Category.from_dict(c) for c in d.get("categories", [])),
            assets=tuple(MediaAsset.from_dict(a) for a in d.get("assets", [])),
            spans=tuple(LabelSpan.from_dict(s) for s in d.get("spans", [])),
            frames=tuple(FrameRecord.from_dict(f) for f in d.get("frames", [])),
            balance_min=d.get("balance_min", DEFAULT_BALANCE_MIN),
            balance_max=d.get("balance_max", DEFAULT_BALANCE_MAX),
            balance_state=(BalanceState.from_dict(d["balance_state"])
                           if d.get("balance_state") else None),
            split_seed=d.get("split_seed"),
            split=dict(d.get("split", {})),
            normalization=(Normalization.from_dict(d["normalization"])
                           if d.get("normalization") else None),
        )


def invalidate_curation_state(m: DatasetManifest) -> DatasetManifest:
    """Drop balance/split/normalization records.

    Any change to the frame population (new frames, changed exclusions)
    invalidates claims computed against the old population; downstream
    operations must re-run before the next export.
    """
    return replace(m, balance_state=None, split={}, normalization=None)


def dumps_canonical(doc: Mapping[str, Any]) -> str:
    """Serialize with stable key order and trailing newline.

    Dict construction order in ``to_dict`` is the canonical order, so two
    serializations of equal values are byte-identical.
    """
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def manifest_to_json(m: DatasetManifest) -> str:
    return dumps_canonical(m.to_dict())


def manifest_from_json(text: str) -> DatasetManifest:
    return DatasetManifest.from_dict(json.loads(text))


# -- operations ----------------------------------------------------------


def register_categories(manifest: DatasetManifest,
                        categories: Iterable[Category | Mapping[str, Any]]) -> DatasetManifest:
    """Record the dataset's categories. Slugs are fixed once registered."""
    cats = tuple(c if isinstance(c, Category) else Category.from_dict(c)
                 for c in categories)
    if not cats:
        raise ModelError("category list is empty")
    seen: set[str] = set()
    for c in cats:
        if not SLUG_RE.match(c.slug):
            raise ModelError(f"invalid category slug: {c.slug!r}")
        if c.slug in seen:
            raise ModelError(f"duplicate category slug: {c.slug!r}")
        seen.add(c.slug)
    existing = {c.slug for c in manifest.categories}
    clash = seen & existing
    if clash:
        raise ModelError(f"duplicate category slug: {sorted(clash)[0]!r}")
    return replace(manifest, categories=manifest.categories + cats)


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.rule}: {self.message}"


def scan_location_keys(doc: Any, path: str = "$") -> list[str]:
    """Return JSON paths whose key names look like location/GPS fields."""
    found: list[str] = []
    if isinstance(doc, Mapping):
        for k, v in doc.items():
            p = f"{path}.{k}"
            if isinstance(k, str) and LOCATION_KEY_RE.search(k):
                found.append(p)
            found.extend(scan_location_keys(v, p))
    elif isinstance(doc, (list, tuple)):
        for i, v in enumerate(doc):
            found.extend(scan_location_keys(v, f"{path}[{i}]"))
    return found


def validate_manifest(m: DatasetManifest) -> list[Violation]:
    """Check every manifest invariant; violations are data, not failures."""
    v: list[Violation] = []

    if not SLUG_RE.match(m.dataset_id):
        v.append(Violation("dataset_id", "slug", f"not a slug: {m.dataset_id!r}"))
    if m.version < 1:
        v.append(Violation("version", "positive", f"version {m.version} < 1"))

    slugs = [c.slug for c in m.categories]
    for c in m.categories:
        if not SLUG_RE.match(c.slug):
            v.append(Violation("categories", "slug", f"not a slug: {c.slug!r}"))
    dupes = {s for s in slugs if slugs.count(s) > 1}
    for s in sorted(dupes):
        v.append(Violation("categories", "unique-slug", f"duplicate slug {s!r}"))
    registered = set(slugs)

    assets = {}
    for a in m.assets:
        if a.container not in CONTAINERS:
            v.append(Violation("assets.container", "container-enum",
                               f"{a.asset_id}: {a.container!r} not in {CONTAINERS}"))
        if a.duration_s < 0:
            v.append(Violation("assets.duration_s", "non-negative",
                               f"{a.asset_id}: {a.duration_s}"))
        if a.frame_rate <= 0:
            v.append(Violation("assets.frame_rate", "positive",
                               f"{a.asset_id}: {a.frame_rate}"))
        if a.width_px <= 0 or a.height_px <= 0:
            v.append(Violation("assets.dimensions", "positive",
                               f"{a.asset_id}: {a.width_px}x{a.height_px}"))
        assets[a.asset_id] = a

    for s in m.spans:
        if not s.start_s < s.end_s:
            v.append(Violation("spans", "ordered-interval",
                               f"{s.asset_id}/{s.label}: [{s.start_s}, {s.end_s}]"))
        if s.label not in registered:
            v.append(Violation("spans.label", "registered-category",
                               f"unregistered label {s.label!r}"))
        if s.source not in SPAN_SOURCES:
            v.append(Violation("spans.source", "source-enum", f"{s.source!r}"))

    frame_ids = set()
    for f in m.frames:
        if f.frame_id in frame_ids:
            v.append(Violation("frames.frame_id", "unique", f"duplicate {f.frame_id}"))
        frame_ids.add(f.frame_id)
        if f.label not in registered:
            v.append(Violation("frames.label", "registered-category",
                               f"{f.frame_id}: unregistered label {f.label!r}"))
        if f.excluded != (f.exclusion_reason != "none"):
            v.append(Violation("frames.excluded", "exclusion-consistency",
                               f"{f.frame_id}: excluded={f.excluded} "
                               f"reason={f.exclusion_reason}"))
        if f.exclusion_reason not in EXCLUSION_REASONS:
            v.append(Violation("frames.exclusion_reason", "reason-enum",
                               f"{f.frame_id}: {f.exclusion_reason!r}"))
        if f.blur_score < 0:
            v.append(Violation("frames.blur_score", "non-negative",
                               f"{f.frame_id}: {f.blur_score}"))
        if not HASH_ID_RE.match(f.perceptual_hash):
            v.append(Violation("frames.perceptual_hash", "hash-format",
                               f"{f.frame_id}: {f.perceptual_hash!r}"))
        a = assets.get(f.asset_id)
        if a is None:
            v.append(Violation("frames.asset_id", "known-asset",
                               f"{f.frame_id}: unknown asset {f.asset_id}"))
        elif not 0 <= f.timestamp_s <= a.duration_s:
            v.append(Violation("frames.timestamp_s", "timestamp-in-duration",
                               f"{f.frame_id}: {f.timestamp_s} outside "
                               f"[0, {a.duration_s}]"))

    if m.balance_min > m.balance_max:
        v.append(Violation("balance_min", "bounds-ordered",
                           f"{m.balance_min} > {m.balance_max}"))

    if m.balance_state is not None:
        bs = m.balance_state
        counts: dict[str, int] = {s: 0 for s in registered}
        for f in m.kept_frames():
            counts[f.label] = counts.get(f.label, 0) + 1
        for slug in sorted(registered):
            n = counts.get(slug, 0)
            if slug in bs.deficient:
                if n >= bs.min_count:
                    v.append(Violation("balance_state.deficient", "deficient-below-min",
                                       f"{slug}: {n} >= min {bs.min_count}"))
            elif n > 0 and not bs.min_count <= n <= bs.max_count:
                rule = "balance_min" if n < bs.min_count else "balance_max"
                v.append(Violation(f"frames[{slug}]", rule,
                                   f"{slug}: {n} outside "
                                   f"[{bs.min_count}, {bs.max_count}] after balance"))

    if m.split:
        kept = {f.frame_id for f in m.kept_frames()}
        assigned = set(m.split)
        for fid in sorted(assigned - frame_ids):
            v.append(Violation("split", "known-frame", f"unknown frame {fid}"))
        for fid, side in m.split.items():
            if side not in SPLITS:
                v.append(Violation("split", "split-enum", f"{fid}: {side!r}"))
        missing = kept - assigned
        extra = (assigned & frame_ids) - kept
        if missing:
            v.append(Violation("split", "split-coverage",
                               f"{len(missing)} non-excluded frames unassigned"))
        if extra:
            v.append(Violation("split", "split-coverage",
                               f"{len(extra)} excluded frames carry assignments"))

    if m.normalization is not None:
        for name, vals in (("mean", m.normalization.mean), ("std", m.normalization.std)):
            if len(vals) != 3 or any(not 0.0 <= x <= 1.0 for x in vals):
                v.append(Violation(f"normalization.{name}", "unit-range", f"{vals}"))

    for path in scan_location_keys(m.to_dict()):
        v.append(Violation(path, "no-location-fields",
                           "key name looks like a coordinate/GPS field"))

    return v
