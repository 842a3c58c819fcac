"""Shared fixtures: fabricated manifests and synthetic media."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from fieldpress import Category, Workspace, register_categories
from fieldpress.imaging import blur_score as _blur_score  # noqa: F401
from fieldpress.imaging import encode_png, perceptual_hash
from fieldpress.model import FrameRecord, MediaAsset, content_id
from fieldpress.store import DatasetStore


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        verdict = "PASS" if report.passed else "FAIL"
        print(f"\nACCEPTANCE {verdict}: {name}", flush=True)


@pytest.fixture
def workspace(tmp_path) -> Workspace:
    return Workspace(tmp_path / "ws")


def make_asset(name: str, duration_s: float = 3600.0, fps: float = 30.0,
               width: int = 16, height: int = 12) -> MediaAsset:
    """Fabricated asset record for manifest-only tests (no media file)."""
    return MediaAsset(asset_id=content_id(f"asset|{name}".encode()),
                      source_name=f"{name}.mp4", container="mp4",
                      duration_s=duration_s, frame_rate=fps,
                      width_px=width, height_px=height)


def solid_pixels(rgb, width=16, height=12) -> np.ndarray:
    px = np.empty((height, width, 3), np.uint8)
    px[:, :] = rgb
    return px


def seed_frames(store: DatasetStore, label: str, count: int, *,
                asset: MediaAsset | None = None, start_index: int = 0,
                rgb=None, noise_seed: int | None = None,
                write_images: bool = False, blur: float = 500.0,
                tags=(), spacing_s: float = 0.5) -> list[FrameRecord]:
    """Append ``count`` fabricated frame records for one category.

    With ``write_images`` the PNG files exist on disk (solid ``rgb`` color,
    optionally with seeded pixel noise so hashes differ).
    """
    manifest = store.load()
    if asset is None:
        asset = make_asset(f"{label}-src")
    rng = np.random.default_rng(noise_seed if noise_seed is not None else 0)
    records = []
    for i in range(start_index, start_index + count):
        if write_images and rgb is not None:
            px = solid_pixels(rgb)
            if noise_seed is not None:
                jitter = rng.integers(-12, 13, px.shape, dtype=np.int16)
                px = np.clip(px.astype(np.int16) + jitter, 0, 255).astype(np.uint8)
            png = encode_png(px)
            phash = perceptual_hash(px)
        else:
            png = None
            phash = f"{i & 0xFFFFFFFFFFFFFFFF:016x}"
        frame_id = content_id(f"{label}|{asset.asset_id}|{i}".encode())
        rec = FrameRecord(frame_id=frame_id, asset_id=asset.asset_id,
                          timestamp_s=i * spacing_s, label=label,
                          blur_score=blur, perceptual_hash=phash,
                          context_tags=tuple(tags))
        records.append(rec)
        if png is not None:
            path = store.frame_path(label, frame_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(png)

    def apply(m):
        assets = m.assets
        if all(a.asset_id != asset.asset_id for a in assets):
            assets = assets + (asset,)
        return replace(m, assets=assets, frames=m.frames + tuple(records))

    store.mutate(apply, note=f"seed {label} x{count}")
    return records


def fresh_store(tmp_path: Path, categories: list[str], *,
                name: str = "ds", balance_min: int = 1200,
                balance_max: int = 2500) -> DatasetStore:
    store = DatasetStore.create(tmp_path / name, name,
                                balance_min=balance_min, balance_max=balance_max)
    cats = [Category(slug, slug.title()) for slug in categories]
    store.mutate(lambda m: register_categories(m, cats), note="categories")
    return store
