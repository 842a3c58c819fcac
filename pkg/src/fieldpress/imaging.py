"""Pixel-level primitives shared by extraction, curation, and the baseline classifier.

Images are numpy arrays of shape (H, W, 3), dtype uint8, RGB channel order.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import convolve

LAPLACIAN_3X3 = np.array([[0, 1, 0],
                          [1, -4, 1],
                          [0, 1, 0]], dtype=np.float64)


def blur_score(pixels: np.ndarray) -> float:
    """Sharpness measure: population variance of the 3x3 Laplacian response.

    Grayscale is the plain channel mean (R+G+B)/3. The Laplacian is evaluated
    at every pixel with edge-replicate padding, so border pixels contribute.
    Higher means sharper; a uniform image scores exactly 0.
    """
    px = np.asarray(pixels)
    if px.size == 0 or px.ndim < 2:
        raise ValueError("degenerate image")
    if px.ndim == 3:
        gray = px.astype(np.float64).mean(axis=2)
    else:
        gray = px.astype(np.float64)
    response = convolve(gray, LAPLACIAN_3X3, mode="nearest")
    return float(response.var())


def perceptual_hash(pixels: np.ndarray) -> str:
    """64-bit average hash as 16 hex chars.

    The grayscale image is reduced to an 8x8 grid of cell means; each bit is
    1 when its cell is brighter than the grid mean. Robust to re-encoding and
    small noise, so consecutive near-identical video frames land within a few
    bits of each other.
    """
    px = np.asarray(pixels)
    if px.ndim == 3:
        gray = px.astype(np.float64).mean(axis=2)
    else:
        gray = px.astype(np.float64)
    h, w = gray.shape
    if h < 8 or w < 8:
        # pad degenerate inputs up to the grid size
        gray = np.pad(gray, ((0, max(0, 8 - h)), (0, max(0, 8 - w))), mode="edge")
        h, w = gray.shape
    ys = (np.arange(9) * h) // 8
    xs = (np.arange(9) * w) // 8
    cells = np.empty((8, 8), dtype=np.float64)
    for i in range(8):
        for j in range(8):
            cells[i, j] = gray[ys[i]:ys[i + 1], xs[j]:xs[j + 1]].mean()
    bits = (cells > cells.mean()).flatten()
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return f"{value:016x}"


def hamming_distance(hash_a: str, hash_b: str) -> int:
    return bin(int(hash_a, 16) ^ int(hash_b, 16)).count("1")


def color_histogram(pixels: np.ndarray, bins_per_channel: int = 8) -> np.ndarray:
    """Concatenated per-channel histograms, normalized to sum 1 per channel."""
    px = np.asarray(pixels)
    if px.ndim != 3 or px.shape[2] != 3:
        raise ValueError("expected an RGB image")
    feats = []
    for c in range(3):
        hist, _ = np.histogram(px[:, :, c], bins=bins_per_channel, range=(0, 256))
        total = hist.sum()
        feats.append(hist / total if total else hist.astype(np.float64))
    return np.concatenate(feats)


# -- PNG I/O ---------------------------------------------------------------

# Fixed encoder settings keep export trees byte-deterministic.
_PNG_SAVE_OPTS = {"format": "PNG", "optimize": False, "compress_level": 6}


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode RGB pixels to PNG carrying no ancillary metadata chunks."""
    img = Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB")
    buf = io.BytesIO()
    img.save(buf, **_PNG_SAVE_OPTS)
    return buf.getvalue()


def decode_image(path: str | Path) -> np.ndarray:
    """Load any PIL-readable image as an RGB array."""
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def reencode_clean(src: str | Path) -> bytes:
    """Re-encode an image from raw pixels, dropping every metadata container.

    Decode-then-reencode is immune to metadata formats the scrubber has never
    heard of: nothing survives except pixel values.
    """
    return encode_png(decode_image(src))


def png_chunk_types(data: bytes) -> list[str]:
    """Chunk type codes of a PNG byte stream, in order."""
    if data[:8] != b"\x89PNG\r\n\x1a\n":
        raise ValueError("not a PNG stream")
    out = []
    pos = 8
    while pos + 8 <= len(data):
        length, kind = struct.unpack(">I4s", data[pos:pos + 8])
        out.append(kind.decode("latin-1"))
        pos += 12 + length
    return out

# Chunks a scrubbed PNG may contain: critical chunks only.
CLEAN_PNG_CHUNKS = {"IHDR", "PLTE", "IDAT", "IEND"}


def has_metadata_chunks(path: str | Path) -> bool:
    """True when a PNG file carries any ancillary (metadata) chunk."""
    data = Path(path).read_bytes()
    return any(c not in CLEAN_PNG_CHUNKS for c in png_chunk_types(data))
