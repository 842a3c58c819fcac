"""Workspace: one directory holding ingested assets, datasets, and releases.

Layout:

    <root>/
      assets/<asset_id>.<container>    ingested media, content-addressed
      assets/<asset_id>.json           probed MediaAsset record
      transcripts/<asset_id>.json      latest transcript per asset
      datasets/<dataset_id>/           one DatasetStore each
      releases/                        export targets
      jobs/                            service job records
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from .media import DecoderBackend, probe
from .model import MediaAsset, ModelError, Transcript, dumps_canonical
from .store import DatasetStore, StoreError


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.assets_dir = self.root / "assets"
        self.transcripts_dir = self.root / "transcripts"
        self.datasets_dir = self.root / "datasets"
        self.releases_dir = self.root / "releases"
        self.jobs_dir = self.root / "jobs"
        for d in (self.assets_dir, self.transcripts_dir, self.datasets_dir,
                  self.releases_dir, self.jobs_dir):
            d.mkdir(parents=True, exist_ok=True)

    # -- assets ----------------------------------------------------------

    def ingest(self, media_file: str | Path, *, language: str = "id-ID",
               site_note: str = "",
               backend: DecoderBackend | None = None) -> MediaAsset:
        """Probe a video and copy it into the workspace under its content id.

        Re-ingesting identical bytes is a no-op returning the same record.
        """
        asset = probe(media_file, language=language, site_note=site_note,
                      backend=backend)
        dest = self.assets_dir / f"{asset.asset_id}.{asset.container}"
        if not dest.exists():
            shutil.copyfile(media_file, dest)
        record = self.assets_dir / f"{asset.asset_id}.json"
        record.write_text(dumps_canonical(asset.to_dict()), encoding="utf-8")
        return asset

    def assets(self) -> list[MediaAsset]:
        out = []
        for p in sorted(self.assets_dir.glob("*.json")):
            out.append(MediaAsset.from_dict(json.loads(p.read_text(encoding="utf-8"))))
        return out

    def asset(self, asset_id: str) -> MediaAsset:
        p = self.assets_dir / f"{asset_id}.json"
        if not p.exists():
            raise ModelError(f"unknown asset: {asset_id}")
        return MediaAsset.from_dict(json.loads(p.read_text(encoding="utf-8")))

    def media_path(self, asset_id: str) -> Path:
        asset = self.asset(asset_id)
        return self.assets_dir / f"{asset.asset_id}.{asset.container}"

    # -- transcripts -------------------------------------------------------

    def save_transcript(self, transcript: Transcript) -> Path:
        p = self.transcripts_dir / f"{transcript.asset_id}.json"
        p.write_text(dumps_canonical(transcript.to_dict()), encoding="utf-8")
        return p

    def transcript(self, asset_id: str) -> Transcript:
        p = self.transcripts_dir / f"{asset_id}.json"
        if not p.exists():
            raise ModelError(f"no transcript for asset {asset_id}")
        return Transcript.from_dict(json.loads(p.read_text(encoding="utf-8")))

    def has_transcript(self, asset_id: str) -> bool:
        return (self.transcripts_dir / f"{asset_id}.json").exists()

    # -- datasets ----------------------------------------------------------

    def create_dataset(self, dataset_id: str, **kwargs) -> DatasetStore:
        return DatasetStore.create(self.datasets_dir / dataset_id, dataset_id,
                                   **kwargs)

    def dataset(self, dataset_id: str) -> DatasetStore:
        return DatasetStore.open(self.datasets_dir / dataset_id)

    def has_dataset(self, dataset_id: str) -> bool:
        try:
            self.dataset(dataset_id)
            return True
        except StoreError:
            return False

    def dataset_ids(self) -> list[str]:
        return sorted(p.name for p in self.datasets_dir.iterdir()
                      if (p / "HEAD").exists())
