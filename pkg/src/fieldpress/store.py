"""Versioned, append-only manifest storage.

Layout of a dataset directory:

    <dataset>/
      manifest/v1.json, v2.json, ...   one JSON document per version
      HEAD                             current version number
      frames/<label>/<frame_id>.png    extracted images

Mutations are serialized through a single writer (in-process lock plus a
cross-process file lock); reads may target any committed version.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path
from typing import Callable

from filelock import FileLock

from .model import (
    DatasetManifest,
    ModelError,
    SLUG_RE,
    manifest_from_json,
    manifest_to_json,
    validate_manifest,
)


class StoreError(RuntimeError):
    pass


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


class DatasetStore:
    """Single-writer, multi-reader store for one dataset's manifest history."""

    def __init__(self, dataset_dir: str | Path):
        self.dir = Path(dataset_dir)
        self.manifest_dir = self.dir / "manifest"
        self.frames_dir = self.dir / "frames"
        self._head_path = self.dir / "HEAD"
        self._mutex = threading.RLock()
        self._file_lock = FileLock(str(self.dir / ".writer.lock"))

    # -- lifecycle -------------------------------------------------------

    @classmethod
    def create(cls, dataset_dir: str | Path, dataset_id: str, *,
               balance_min: int | None = None,
               balance_max: int | None = None) -> "DatasetStore":
        if not SLUG_RE.match(dataset_id):
            raise ModelError(f"dataset_id must be a slug: {dataset_id!r}")
        store = cls(dataset_dir)
        if store._head_path.exists():
            raise StoreError(f"dataset already exists at {store.dir}")
        store.manifest_dir.mkdir(parents=True, exist_ok=True)
        store.frames_dir.mkdir(parents=True, exist_ok=True)
        kwargs = {}
        if balance_min is not None:
            kwargs["balance_min"] = balance_min
        if balance_max is not None:
            kwargs["balance_max"] = balance_max
        manifest = DatasetManifest(dataset_id=dataset_id, version=1,
                                   note="created", **kwargs)
        store._commit(manifest)
        return store

    @classmethod
    def open(cls, dataset_dir: str | Path) -> "DatasetStore":
        store = cls(dataset_dir)
        if not store._head_path.exists():
            raise StoreError(f"no dataset at {store.dir}")
        return store

    # -- reads -----------------------------------------------------------

    def head_version(self) -> int:
        return int(self._head_path.read_text(encoding="utf-8").strip())

    def versions(self) -> list[int]:
        return sorted(int(p.stem[1:]) for p in self.manifest_dir.glob("v*.json"))

    def load(self, version: int | None = None) -> DatasetManifest:
        if version is None:
            version = self.head_version()
        path = self.manifest_dir / f"v{version}.json"
        if not path.exists():
            raise StoreError(f"no manifest version {version} in {self.dir}")
        return manifest_from_json(path.read_text(encoding="utf-8"))

    def frame_path(self, label: str, frame_id: str) -> Path:
        return self.frames_dir / label / f"{frame_id}.png"

    # -- writes ----------------------------------------------------------

    def mutate(self, fn: Callable[[DatasetManifest], DatasetManifest], *,
               note: str = "") -> DatasetManifest:
        """Apply ``fn`` to the head manifest and commit the result as head+1.

        The result must pass full validation; a failing mutation commits
        nothing. ``fn`` receives a value object and must return a new one.
        """
        with self._mutex, self._file_lock:
            head = self.head_version()
            current = self.load(head)
            updated = fn(current)
            if updated is None:
                raise StoreError("mutation returned nothing")
            from dataclasses import replace
            updated = replace(updated, version=head + 1,
                              note=note or updated.note)
            violations = validate_manifest(updated)
            if violations:
                msgs = "; ".join(str(x) for x in violations[:5])
                raise StoreError(f"mutation produced invalid manifest: {msgs}")
            self._commit(updated)
            return updated

    def _commit(self, manifest: DatasetManifest) -> None:
        path = self.manifest_dir / f"v{manifest.version}.json"
        if path.exists():
            raise StoreError(f"version {manifest.version} already committed")
        _atomic_write(path, manifest_to_json(manifest))
        _atomic_write(self._head_path, f"{manifest.version}\n")
