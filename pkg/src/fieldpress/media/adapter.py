"""Media decoding behind a narrow, replaceable backend interface.

Only three capabilities are required of a backend:

* ``probe_media(path)`` -> (duration_s, frame_rate, width, height)
* ``read_frames(path, timestamps)`` -> list of RGB uint8 arrays
* ``read_audio(path, start_s, end_s)`` -> (int16 samples [n, channels], rate)

Two conforming backends ship here. :class:`OpenCvPcmBackend` decodes video
in-process with OpenCV and reads PCM audio tracks straight from the MP4
sample tables; it needs no external programs. :class:`FfmpegCliBackend`
shells out to ffmpeg/ffprobe and handles everything those tools handle
(compressed audio included); it is picked automatically when the binaries
are on PATH. Set FIELDPRESS_MEDIA_BACKEND=opencv|ffmpeg to force a choice.
"""

from __future__ import annotations

import json
import math
import os
import shutil
import subprocess
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import cv2
import numpy as np
from scipy.signal import resample_poly

from ..model import CONTAINERS, MediaAsset, file_content_id
from .isobmff import Mp4Error, read_pcm_audio

AUDIO_RATE = 16000
DEFAULT_FPS_CAP = 2.0


class MediaError(RuntimeError):
    pass


class UnsupportedContainer(MediaError):
    pass


class UnreadableFile(MediaError):
    pass


class ZeroDuration(MediaError):
    pass


class DecodeFailure(MediaError):
    pass


@dataclass(frozen=True)
class AudioChunk:
    """One planned slice of an asset's audio, rendered to mono 16 kHz PCM WAV."""

    index: int
    start_s: float
    end_s: float
    payload_path: Path


@dataclass(frozen=True)
class DecodedFrame:
    timestamp_s: float
    pixels: np.ndarray


class DecoderBackend(Protocol):
    def probe_media(self, path: Path) -> tuple[float, float, int, int]: ...

    def read_frames(self, path: Path, timestamps: Sequence[float]) -> list[np.ndarray]: ...

    def read_audio(self, path: Path, start_s: float, end_s: float) -> tuple[np.ndarray, int]: ...


class OpenCvPcmBackend:
    """In-process decode: OpenCV for video, container sample tables for PCM audio."""

    def probe_media(self, path: Path) -> tuple[float, float, int, int]:
        cap = cv2.VideoCapture(str(path))
        try:
            if not cap.isOpened():
                raise UnreadableFile(f"decoder cannot open {path}")
            fps = cap.get(cv2.CAP_PROP_FPS)
            n_frames = cap.get(cv2.CAP_PROP_FRAME_COUNT)
            width = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
            height = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
            if fps <= 0 or width <= 0 or height <= 0:
                raise UnreadableFile(f"no decodable video stream in {path}")
            duration = n_frames / fps if n_frames > 0 else 0.0
            return duration, fps, width, height
        finally:
            cap.release()

    def read_frames(self, path: Path, timestamps: Sequence[float]) -> list[np.ndarray]:
        cap = cv2.VideoCapture(str(path))
        try:
            if not cap.isOpened():
                raise DecodeFailure(f"decoder cannot open {path}")
            fps = cap.get(cv2.CAP_PROP_FPS)
            total = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
            targets = [min(int(math.floor(t * fps + 0.5)), max(total - 1, 0))
                       for t in timestamps]
            out: list[np.ndarray] = []
            pos = 0
            frame = None
            for target in targets:
                if target < pos and frame is not None:
                    # timestamps are non-decreasing; a repeat reuses the frame
                    out.append(frame)
                    continue
                while pos <= target:
                    ok, bgr = cap.read()
                    if not ok:
                        raise DecodeFailure(
                            f"decode stopped at frame {pos} of {path}")
                    pos += 1
                frame = cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)
                out.append(frame)
            return out
        finally:
            cap.release()

    def read_audio(self, path: Path, start_s: float, end_s: float) -> tuple[np.ndarray, int]:
        try:
            samples, rate = read_pcm_audio(path)
        except Mp4Error as e:
            raise DecodeFailure(str(e)) from e
        lo = int(round(start_s * rate))
        hi = int(round(end_s * rate))
        return samples[lo:hi], rate


class FfmpegCliBackend:
    """Decode by shelling out to ffmpeg/ffprobe."""

    def __init__(self, ffmpeg: str = "ffmpeg", ffprobe: str = "ffprobe"):
        self.ffmpeg = ffmpeg
        self.ffprobe = ffprobe

    def _run(self, args: list[str]) -> bytes:
        proc = subprocess.run(args, capture_output=True)
        if proc.returncode != 0:
            raise DecodeFailure(proc.stderr.decode(errors="replace")[-500:])
        return proc.stdout

    def probe_media(self, path: Path) -> tuple[float, float, int, int]:
        out = self._run([self.ffprobe, "-v", "error", "-print_format", "json",
                         "-show_format", "-show_streams", str(path)])
        info = json.loads(out)
        video = next((s for s in info.get("streams", [])
                      if s.get("codec_type") == "video"), None)
        if video is None:
            raise UnreadableFile(f"no video stream in {path}")
        num, _, den = video.get("r_frame_rate", "0/1").partition("/")
        fps = float(num) / float(den or 1)
        duration = float(info.get("format", {}).get("duration", 0.0))
        return duration, fps, int(video["width"]), int(video["height"])

    def read_frames(self, path: Path, timestamps: Sequence[float]) -> list[np.ndarray]:
        _, _, width, height = self.probe_media(path)
        frames = []
        for t in timestamps:
            raw = self._run([self.ffmpeg, "-v", "error", "-ss", f"{t:.6f}",
                             "-i", str(path), "-frames:v", "1",
                             "-f", "rawvideo", "-pix_fmt", "rgb24", "-"])
            if len(raw) < width * height * 3:
                raise DecodeFailure(f"no frame at {t}s in {path}")
            frames.append(np.frombuffer(raw[:width * height * 3], np.uint8)
                          .reshape(height, width, 3))
        return frames

    def read_audio(self, path: Path, start_s: float, end_s: float) -> tuple[np.ndarray, int]:
        raw = self._run([self.ffmpeg, "-v", "error",
                         "-ss", f"{start_s:.6f}", "-to", f"{end_s:.6f}",
                         "-i", str(path), "-ac", "1", "-ar", str(AUDIO_RATE),
                         "-f", "s16le", "-"])
        samples = np.frombuffer(raw, dtype="<i2").reshape(-1, 1)
        return samples, AUDIO_RATE


def default_backend() -> DecoderBackend:
    forced = os.environ.get("FIELDPRESS_MEDIA_BACKEND", "").lower()
    if forced == "opencv":
        return OpenCvPcmBackend()
    if forced == "ffmpeg":
        return FfmpegCliBackend()
    if shutil.which("ffmpeg") and shutil.which("ffprobe"):
        return FfmpegCliBackend()
    return OpenCvPcmBackend()


# -- operations --------------------------------------------------------------

def probe(path: str | Path, *, language: str = "id-ID", site_note: str = "",
          backend: DecoderBackend | None = None) -> MediaAsset:
    """Probe a video file and mint its content-addressed asset record."""
    path = Path(path)
    suffix = path.suffix.lower().lstrip(".")
    if suffix not in CONTAINERS:
        raise UnsupportedContainer(
            f"{path.name}: only .webm and .mp4 are accepted")
    if not path.exists() or path.stat().st_size == 0:
        raise UnreadableFile(f"{path}: missing or empty file")
    backend = backend or default_backend()
    duration, fps, width, height = backend.probe_media(path)
    if duration <= 0:
        raise ZeroDuration(f"{path}: zero-duration asset")
    return MediaAsset(
        asset_id=file_content_id(path),
        source_name=path.name,
        container=suffix,
        duration_s=round(duration, 6),
        frame_rate=round(fps, 6),
        width_px=width,
        height_px=height,
        language=language,
        site_note=site_note,
    )


def extract_audio(asset: MediaAsset, media_path: str | Path,
                  bounds: tuple[float, float], out_path: str | Path,
                  *, index: int = 0,
                  backend: DecoderBackend | None = None) -> AudioChunk:
    """Render one chunk's audio to mono 16 kHz 16-bit PCM WAV."""
    start_s, end_s = bounds
    if not (0 <= start_s < end_s <= asset.duration_s + 1e-6):
        raise MediaError(
            f"bounds [{start_s}, {end_s}] outside asset duration {asset.duration_s}")
    backend = backend or default_backend()
    samples, rate = backend.read_audio(Path(media_path), start_s, end_s)
    if samples.ndim == 2 and samples.shape[1] > 1:
        samples = samples.mean(axis=1)
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if rate != AUDIO_RATE:
        g = math.gcd(int(rate), AUDIO_RATE)
        samples = resample_poly(samples, AUDIO_RATE // g, int(rate) // g)
    pcm = np.clip(samples, -32768, 32767).astype("<i2")

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with wave.open(str(out_path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(AUDIO_RATE)
        w.writeframes(pcm.tobytes())
    return AudioChunk(index=index, start_s=float(start_s), end_s=float(end_s),
                      payload_path=out_path)


def sample_frames(asset: MediaAsset, media_path: str | Path,
                  span: tuple[float, float], fps_cap: float = DEFAULT_FPS_CAP,
                  *, backend: DecoderBackend | None = None) -> list[DecodedFrame]:
    """Decode frames at ``fps_cap`` spacing across a span.

    Timestamps run start, start + 1/fps_cap, ... for floor(span_len * fps_cap)
    frames (within one of the exact boundary count when the span length is not
    a multiple of the spacing).
    """
    start_s, end_s = span
    if end_s <= start_s:
        raise MediaError(f"empty span [{start_s}, {end_s}]")
    if not (0 <= start_s and end_s <= asset.duration_s + 1e-6):
        raise MediaError(
            f"span [{start_s}, {end_s}] outside asset duration {asset.duration_s}")
    if fps_cap <= 0:
        raise MediaError(f"fps_cap must be positive, got {fps_cap}")
    if fps_cap > asset.frame_rate + 1e-9:
        raise MediaError(
            f"fps_cap {fps_cap} exceeds asset frame rate {asset.frame_rate}")
    backend = backend or default_backend()
    count = int(math.floor((end_s - start_s) * fps_cap + 1e-9))
    timestamps = [start_s + i / fps_cap for i in range(count)]
    timestamps = [t for t in timestamps if t < asset.duration_s]
    pixels = backend.read_frames(Path(media_path), timestamps)
    return [DecodedFrame(timestamp_s=t, pixels=p)
            for t, p in zip(timestamps, pixels)]
