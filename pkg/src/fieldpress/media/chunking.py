"""Audio chunk planning: tile an asset's timeline into transcription-sized pieces."""

from __future__ import annotations

MIN_CHUNK_S = 5.0
MAX_CHUNK_S = 59.0


class ChunkPlanError(ValueError):
    pass


def plan_chunks(duration_s: float, chunk_len_s: float) -> list[tuple[float, float]]:
    """Plan chunk bounds covering [0, duration_s].

    Chunks are back-to-back intervals of ``chunk_len_s``. The tail is handled
    by the remainder rule:

    * tail >= 5 s: it becomes the final chunk as-is;
    * tail < 5 s and (chunk + tail) <= 59 s: it merges into the last chunk;
    * tail < 5 s but merging would exceed 59 s: the final chunk is
      [duration-5, duration], overlapping its predecessor, so no audio is
      dropped and no chunk exceeds the 59 s ceiling.

    An asset shorter than 5 s yields a single whole-asset chunk.
    """
    if not MIN_CHUNK_S <= chunk_len_s <= MAX_CHUNK_S:
        raise ChunkPlanError(
            f"chunk length {chunk_len_s} outside [{MIN_CHUNK_S}, {MAX_CHUNK_S}]")
    if duration_s <= 0:
        raise ChunkPlanError(f"duration must be positive, got {duration_s}")

    if duration_s < MIN_CHUNK_S:
        return [(0.0, float(duration_s))]

    bounds: list[tuple[float, float]] = []
    n_full = int(duration_s // chunk_len_s)
    for i in range(n_full):
        bounds.append((i * chunk_len_s, (i + 1) * chunk_len_s))
    tail = duration_s - n_full * chunk_len_s

    if tail <= 1e-9:
        return bounds
    if tail >= MIN_CHUNK_S:
        bounds.append((n_full * chunk_len_s, float(duration_s)))
    elif chunk_len_s + tail <= MAX_CHUNK_S and bounds:
        start = bounds[-1][0]
        bounds[-1] = (start, float(duration_s))
    else:
        bounds.append((duration_s - MIN_CHUNK_S, float(duration_s)))
    return bounds
