"""Synthetic media generators so tests and demos never need field footage."""

from __future__ import annotations

import colorsys
from pathlib import Path

import cv2
import numpy as np

from .isobmff import write_mp4


def solid_frame(width: int, height: int, rgb: tuple[int, int, int]) -> np.ndarray:
    frame = np.empty((height, width, 3), np.uint8)
    frame[:, :] = rgb
    return frame


def hue_rgb(hue: float, saturation: float = 0.85, value: float = 0.85) -> tuple[int, int, int]:
    r, g, b = colorsys.hsv_to_rgb(hue % 1.0, saturation, value)
    return int(r * 255), int(g * 255), int(b * 255)


def checkerboard(width: int, height: int, cell: int = 16, phase: int = 0) -> np.ndarray:
    ys, xs = np.mgrid[0:height, 0:width]
    board = (((ys // cell) + (xs // cell) + phase) % 2) * 255
    return np.repeat(board[:, :, None], 3, axis=2).astype(np.uint8)


def silence_pcm(duration_s: float, rate: int = 16000) -> bytes:
    return np.zeros(int(round(duration_s * rate)), np.int16).tobytes()


def tone_pcm(duration_s: float, freq_hz: float = 440.0, rate: int = 16000) -> bytes:
    t = np.arange(int(round(duration_s * rate))) / rate
    return (np.sin(2 * np.pi * freq_hz * t) * 0.3 * 32767).astype(np.int16).tobytes()


def write_video(path: str | Path, duration_s: float, *, fps: float = 30.0,
                width: int = 320, height: int = 240,
                pattern: str = "hue", hue: float = 0.0,
                audio: str = "silence", tone_hz: float = 440.0,
                jpeg_quality: int = 95) -> Path:
    """Write a synthetic MP4 (MJPEG video + PCM audio).

    Patterns: ``hue`` (solid color from a hue in [0,1)), ``checker``
    (static checkerboard), ``drift`` (hue that advances per frame, so
    consecutive frames differ), ``noise`` (seeded per-frame noise: sharp
    and distinct, survives blur and duplicate filters). Audio: ``silence``,
    ``tone`` or ``none``.
    """
    path = Path(path)
    n_frames = int(round(duration_s * fps))
    frames: list[bytes] = []
    for i in range(n_frames):
        if pattern == "hue":
            img = solid_frame(width, height, hue_rgb(hue))
        elif pattern == "checker":
            img = checkerboard(width, height)
        elif pattern == "drift":
            img = solid_frame(width, height, hue_rgb(hue + i / max(n_frames, 1)))
        elif pattern == "noise":
            rng = np.random.default_rng(int(hue * 1000) * 100003 + i)
            img = rng.integers(0, 256, (height, width, 3)).astype(np.uint8)
        else:
            raise ValueError(f"unknown pattern {pattern!r}")
        ok, buf = cv2.imencode(".jpg", cv2.cvtColor(img, cv2.COLOR_RGB2BGR),
                               [cv2.IMWRITE_JPEG_QUALITY, jpeg_quality])
        if not ok:
            raise RuntimeError("JPEG encode failed")
        frames.append(buf.tobytes())

    if audio == "silence":
        pcm = silence_pcm(duration_s)
    elif audio == "tone":
        pcm = tone_pcm(duration_s, tone_hz)
    elif audio == "none":
        pcm = None
    else:
        raise ValueError(f"unknown audio kind {audio!r}")

    path.parent.mkdir(parents=True, exist_ok=True)
    write_mp4(path, frames, width, height, fps, pcm)
    return path


def write_webm(path: str | Path, duration_s: float, *, fps: float = 30.0,
               width: int = 320, height: int = 240, hue: float = 0.3) -> Path | None:
    """Write a VP8 webm via OpenCV; returns None when the build cannot encode it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    writer = cv2.VideoWriter(str(path), cv2.VideoWriter_fourcc(*"VP80"),
                             fps, (width, height))
    if not writer.isOpened():
        return None
    img = cv2.cvtColor(solid_frame(width, height, hue_rgb(hue)), cv2.COLOR_RGB2BGR)
    for _ in range(int(round(duration_s * fps))):
        writer.write(img)
    writer.release()
    if not path.exists() or path.stat().st_size == 0:
        return None
    return path
