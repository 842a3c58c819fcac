"""Speech-to-text: pluggable providers, chunked transcription, filtering, search.

Two providers ship with the package. The offline provider replays a scripted
fixture and is what every test uses; the remote provider posts WAV chunks to
an HTTP endpoint. Both return chunk-relative utterances that are rebased to
asset time here.
"""

from __future__ import annotations

import json
import re
import tempfile
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import httpx

from .media import AudioChunk, DecoderBackend, extract_audio, plan_chunks
from .model import ChunkStatus, MediaAsset, ModelError, Transcript, Utterance


class TranscriptionError(RuntimeError):
    pass


class ProviderUnreachable(TranscriptionError):
    pass


class CredentialInvalid(TranscriptionError):
    pass


class ChunkFailed(TranscriptionError):
    """A single chunk failed; transcription of other chunks continues."""


@dataclass(frozen=True)
class ProviderResult:
    """Chunk-relative utterances recognized in one audio chunk."""

    utterances: tuple[Utterance, ...]


class SttProvider(Protocol):
    provider_id: str

    def transcribe_chunk(self, chunk: AudioChunk, language: str) -> ProviderResult: ...


class OfflineScriptProvider:
    """Deterministic provider replaying a fixture script.

    The script maps chunk index to recognized utterances::

        {"chunks": {"0": [{"start_s": 2.0, "end_s": 3.5,
                           "text": "kayu manis", "confidence": 0.93}],
                    "1": "fail"}}

    A chunk mapped to "fail" raises, exercising partial-failure handling;
    unmapped chunks yield no utterances.
    """

    provider_id = "offline"

    def __init__(self, script: Mapping | str | Path | None = None):
        if isinstance(script, (str, Path)):
            script = json.loads(Path(script).read_text(encoding="utf-8"))
        self.script = dict(script or {})

    def transcribe_chunk(self, chunk: AudioChunk, language: str) -> ProviderResult:
        entry = self.script.get("chunks", {}).get(str(chunk.index), [])
        if entry == "fail":
            raise ChunkFailed(f"scripted failure for chunk {chunk.index}")
        utterances = tuple(
            Utterance(u["start_s"], u["end_s"], u["text"], u["confidence"])
            for u in entry)
        return ProviderResult(utterances=utterances)


class RemoteHttpProvider:
    """Posts WAV chunks to a transcription service.

    Wire contract: ``POST {endpoint}/v1/transcribe?language=<tag>`` with the
    WAV bytes as the request body (``Content-Type: audio/wav``) and the
    credential file's JSON passed through opaquely in the
    ``X-Stt-Credentials`` header. The response is JSON::

        {"text": "...", "confidence": 0.87,
         "words": [{"word": "...", "start_s": 0.4, "end_s": 0.9}, ...]}

    ``words`` is optional; without word timings the utterance spans its
    whole chunk. 401/403 mean the credentials were rejected.
    """

    provider_id = "remote"

    def __init__(self, endpoint: str, credential_path: str | Path,
                 client: httpx.Client | None = None):
        if not endpoint:
            raise TranscriptionError("remote provider requires an endpoint")
        self.endpoint = endpoint.rstrip("/")
        self.credential_path = Path(credential_path)
        self._client = client or httpx.Client(timeout=120.0)
        self._credentials = self._load_credentials()

    def _load_credentials(self) -> str:
        if not self.credential_path.exists():
            raise CredentialInvalid(f"credential file not found: {self.credential_path}")
        raw = self.credential_path.read_text(encoding="utf-8")
        try:
            json.loads(raw)
        except json.JSONDecodeError as e:
            raise CredentialInvalid(f"credential file is not JSON: {e}") from e
        return json.dumps(json.loads(raw), separators=(",", ":"))

    def transcribe_chunk(self, chunk: AudioChunk, language: str) -> ProviderResult:
        wav = chunk.payload_path.read_bytes()
        try:
            resp = self._client.post(
                f"{self.endpoint}/v1/transcribe",
                params={"language": language},
                content=wav,
                headers={"Content-Type": "audio/wav",
                         "X-Stt-Credentials": self._credentials})
        except httpx.TransportError as e:
            raise ProviderUnreachable(str(e)) from e
        if resp.status_code in (401, 403):
            raise CredentialInvalid(f"provider rejected credentials: {resp.status_code}")
        if resp.status_code != 200:
            raise ChunkFailed(f"provider error {resp.status_code}: {resp.text[:200]}")
        body = resp.json()
        text = body.get("text", "")
        confidence = float(body.get("confidence", 0.0))
        if not text:
            return ProviderResult(utterances=())
        words = body.get("words") or []
        if words:
            start = min(w["start_s"] for w in words)
            end = max(w["end_s"] for w in words)
        else:
            start, end = 0.0, chunk.end_s - chunk.start_s
        return ProviderResult(utterances=(Utterance(start, end, text, confidence),))


def transcribe(asset: MediaAsset, media_path: str | Path, provider: SttProvider,
               *, chunk_len_s: float = 30.0,
               window: tuple[float, float] | None = None,
               language: str | None = None,
               parallelism: int = 2,
               work_dir: str | Path | None = None,
               backend: DecoderBackend | None = None,
               progress: Callable[[float], None] | None = None) -> Transcript:
    """Transcribe an asset (or a window of it) chunk by chunk.

    Chunk failures are recorded per chunk and do not abort the job; utterance
    times come back rebased to asset time, sorted ascending.
    """
    language = language or asset.language
    if window is not None:
        start, end = window
        if start >= end:
            raise TranscriptionError(f"empty window [{start}, {end}]")
        if start < 0 or end > asset.duration_s + 1e-6:
            raise TranscriptionError(
                f"window [{start}, {end}] outside asset duration {asset.duration_s}")
    else:
        start, end = 0.0, asset.duration_s

    bounds = plan_chunks(end - start, chunk_len_s)
    bounds = [(start + a, start + b) for a, b in bounds]

    tmp_root = Path(work_dir) if work_dir else Path(tempfile.mkdtemp(prefix="fp-audio-"))
    tmp_root.mkdir(parents=True, exist_ok=True)

    def run_chunk(idx_bounds) -> tuple[ChunkStatus, list[Utterance]]:
        idx, (a, b) = idx_bounds
        try:
            chunk = extract_audio(asset, media_path, (a, b),
                                  tmp_root / f"{asset.asset_id}-{idx:04d}.wav",
                                  index=idx, backend=backend)
            result = provider.transcribe_chunk(chunk, language)
        except (ProviderUnreachable, CredentialInvalid):
            raise
        except Exception as e:  # chunk-local: decode or provider error
            return ChunkStatus(idx, a, b, "failed", str(e)), []
        rebased = [Utterance(a + u.start_s, min(a + u.end_s, asset.duration_s),
                             u.text, u.confidence)
                   for u in result.utterances]
        return ChunkStatus(idx, a, b, "ok"), rebased

    statuses: list[ChunkStatus] = []
    utterances: list[Utterance] = []
    done = 0
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        for status, rebased in pool.map(run_chunk, enumerate(bounds)):
            statuses.append(status)
            utterances.extend(rebased)
            done += 1
            if progress:
                progress(done / len(bounds))

    utterances.sort(key=lambda u: (u.start_s, u.end_s))
    return Transcript(asset_id=asset.asset_id, provider_id=provider.provider_id,
                      language=language, utterances=tuple(utterances),
                      chunks=tuple(sorted(statuses, key=lambda c: c.index)))


def filter_utterances(transcript: Transcript, threshold: float) -> Transcript:
    """Keep utterances with confidence >= threshold, order preserved."""
    if not 0.0 <= threshold <= 1.0:
        raise ModelError(f"threshold {threshold} outside [0.0, 1.0]")
    kept = tuple(u for u in transcript.utterances if u.confidence >= threshold)
    return Transcript(asset_id=transcript.asset_id,
                      provider_id=transcript.provider_id,
                      language=transcript.language,
                      utterances=kept, chunks=transcript.chunks)


@dataclass(frozen=True)
class SearchHit:
    utterance_index: int
    start_s: float
    end_s: float
    matched_token: str

    def to_dict(self) -> dict:
        return {"utterance_index": self.utterance_index, "start_s": self.start_s,
                "end_s": self.end_s, "matched_token": self.matched_token}


_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(unicodedata.normalize("NFKC", text).casefold())


def search(transcript: Transcript, term: str) -> list[SearchHit]:
    """Whole-token, case-insensitive search; hits come back in time order."""
    wanted = _tokens(term)
    if len(wanted) != 1 or not wanted[0]:
        raise ModelError(f"search term must be a single token, got {term!r}")
    needle = wanted[0]
    hits = []
    for i, u in enumerate(transcript.utterances):
        if needle in _tokens(u.text):
            hits.append(SearchHit(i, u.start_s, u.end_s, needle))
    return hits


def search_many(transcripts: Sequence[Transcript], term: str) -> dict[str, list[SearchHit]]:
    return {t.asset_id: search(t, term) for t in transcripts}
