"""Minimal ISO base media (MP4) support: mux MJPEG+PCM, demux PCM audio.

This exists because the pipeline must run on machines with no external
decoder: OpenCV decodes any video track, but exposes no audio API, so the
audio side of a fixture or field file is read here directly from the
container's sample tables.

Writer: one MJPEG video track (every frame a keyframe, so seeking is exact)
plus an optional 16-bit PCM audio track ('sowt'). Files play in stock
players and decode with OpenCV/ffmpeg.

Reader: extracts the first audio track whose sample entry is uncompressed
16-bit PCM ('sowt' little-endian or 'twos' big-endian). Compressed audio
(AAC, Opus) needs the ffmpeg-CLI backend instead.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np


class Mp4Error(RuntimeError):
    pass


# -- box plumbing ------------------------------------------------------------

def _box(kind: bytes, payload: bytes) -> bytes:
    return struct.pack(">I", 8 + len(payload)) + kind + payload


def _full(kind: bytes, version: int, flags: int, payload: bytes) -> bytes:
    return _box(kind, struct.pack(">I", (version << 24) | flags) + payload)


def _descriptor(tag: int, payload: bytes) -> bytes:
    assert len(payload) < 128
    return bytes([tag, len(payload)]) + payload


def _esds_mjpeg() -> bytes:
    # objectTypeIndication 0x6C marks the elementary stream as JPEG
    dec_cfg = _descriptor(0x04, struct.pack(">BB3sII", 0x6C, 0x11, b"\x00\x00\x00", 0, 0))
    sl_cfg = _descriptor(0x06, b"\x02")
    es = _descriptor(0x03, struct.pack(">HB", 1, 0) + dec_cfg + sl_cfg)
    return _full(b"esds", 0, 0, es)


# -- writer ------------------------------------------------------------------

def write_mp4(path: str | Path, jpeg_frames: list[bytes], width: int, height: int,
              fps: float, pcm: bytes | None = None, audio_rate: int = 16000) -> None:
    """Write an MP4 with an MJPEG video track and optional mono PCM audio.

    ``pcm`` is raw little-endian int16 mono samples at ``audio_rate``.
    """
    if not jpeg_frames:
        raise Mp4Error("need at least one video frame")
    if fps <= 0:
        raise Mp4Error("fps must be positive")
    pcm = pcm or b""

    ftyp = _box(b"ftyp", b"isom" + struct.pack(">I", 0x200) + b"isomiso2mp41")
    video_bytes = b"".join(jpeg_frames)
    video_off = len(ftyp) + 8
    audio_off = video_off + len(video_bytes)
    mdat = _box(b"mdat", video_bytes + pcm)

    movie_ts = 1000
    n_frames = len(jpeg_frames)
    video_ts = int(round(fps * 1000))
    n_samples = len(pcm) // 2
    dur_ms = int(round(max(n_frames / fps, n_samples / audio_rate) * movie_ts))

    def mvhd() -> bytes:
        p = struct.pack(">IIII", 0, 0, movie_ts, dur_ms)
        p += struct.pack(">iH", 0x00010000, 0x0100) + b"\x00" * 10
        p += struct.pack(">9i", 0x10000, 0, 0, 0, 0x10000, 0, 0, 0, 0x40000000)
        p += b"\x00" * 24 + struct.pack(">I", 3)
        return _full(b"mvhd", 0, 0, p)

    def tkhd(track_id: int, w: int, h: int, volume: int) -> bytes:
        p = struct.pack(">IIIII", 0, 0, track_id, 0, dur_ms)
        p += b"\x00" * 8 + struct.pack(">hhHH", 0, 0, volume, 0)
        p += struct.pack(">9i", 0x10000, 0, 0, 0, 0x10000, 0, 0, 0, 0x40000000)
        p += struct.pack(">II", w << 16, h << 16)
        return _full(b"tkhd", 0, 3, p)

    def mdhd(timescale: int, duration: int) -> bytes:
        return _full(b"mdhd", 0, 0,
                     struct.pack(">IIIIHH", 0, 0, timescale, duration, 0x55C4, 0))

    def hdlr(handler: bytes, name: bytes) -> bytes:
        return _full(b"hdlr", 0, 0,
                     struct.pack(">I", 0) + handler + b"\x00" * 12 + name + b"\x00")

    def dinf() -> bytes:
        return _box(b"dinf", _full(b"dref", 0, 0,
                                   struct.pack(">I", 1) + _full(b"url ", 0, 1, b"")))

    def stts(count: int, delta: int) -> bytes:
        return _full(b"stts", 0, 0, struct.pack(">III", 1, count, delta))

    def stsc(samples_per_chunk: int) -> bytes:
        return _full(b"stsc", 0, 0, struct.pack(">IIII", 1, 1, samples_per_chunk, 1))

    def stsz_sizes(sizes: list[int]) -> bytes:
        p = struct.pack(">II", 0, len(sizes))
        p += b"".join(struct.pack(">I", s) for s in sizes)
        return _full(b"stsz", 0, 0, p)

    def stsz_const(size: int, count: int) -> bytes:
        return _full(b"stsz", 0, 0, struct.pack(">II", size, count))

    def stco(offset: int) -> bytes:
        return _full(b"stco", 0, 0, struct.pack(">II", 1, offset))

    def video_stsd() -> bytes:
        entry = b"\x00" * 6 + struct.pack(">H", 1)
        entry += struct.pack(">HH", 0, 0) + b"\x00" * 12
        entry += struct.pack(">HH", width, height)
        entry += struct.pack(">IIIH", 0x00480000, 0x00480000, 0, 1)
        entry += b"\x00" * 32
        entry += struct.pack(">Hh", 24, -1)
        entry += _esds_mjpeg()
        return _full(b"stsd", 0, 0, struct.pack(">I", 1) + _box(b"mp4v", entry))

    def audio_stsd() -> bytes:
        entry = b"\x00" * 6 + struct.pack(">H", 1)
        entry += struct.pack(">HHI", 0, 0, 0)
        entry += struct.pack(">HHHHI", 1, 16, 0, 0, audio_rate << 16)
        return _full(b"stsd", 0, 0, struct.pack(">I", 1) + _box(b"sowt", entry))

    v_stbl = _box(b"stbl", video_stsd() + stts(n_frames, 1000) + stsc(n_frames)
                  + stsz_sizes([len(j) for j in jpeg_frames]) + stco(video_off))
    v_minf = _box(b"minf", _full(b"vmhd", 0, 1, struct.pack(">4H", 0, 0, 0, 0))
                  + dinf() + v_stbl)
    v_mdia = _box(b"mdia", mdhd(video_ts, n_frames * 1000)
                  + hdlr(b"vide", b"VideoHandler") + v_minf)
    traks = _box(b"trak", tkhd(1, width, height, 0) + v_mdia)

    if n_samples:
        a_stbl = _box(b"stbl", audio_stsd() + stts(n_samples, 1) + stsc(n_samples)
                      + stsz_const(2, n_samples) + stco(audio_off))
        a_minf = _box(b"minf", _full(b"smhd", 0, 0, struct.pack(">HH", 0, 0))
                      + dinf() + a_stbl)
        a_mdia = _box(b"mdia", mdhd(audio_rate, n_samples)
                      + hdlr(b"soun", b"SoundHandler") + a_minf)
        traks += _box(b"trak", tkhd(2, 0, 0, 0x0100) + a_mdia)

    moov = _box(b"moov", mvhd() + traks)
    Path(path).write_bytes(ftyp + mdat + moov)


# -- reader ------------------------------------------------------------------

@dataclass
class _SampleTable:
    codec: bytes
    channels: int
    sample_bits: int
    sample_rate: int
    chunk_offsets: list[int]
    stsc: list[tuple[int, int]]      # (first_chunk, samples_per_chunk)
    sample_size: int                 # constant size, or 0
    sample_sizes: list[int]          # per-sample sizes when not constant
    sample_count: int


def _iter_boxes(data: bytes, start: int, end: int) -> Iterator[tuple[bytes, int, int]]:
    pos = start
    while pos + 8 <= end:
        size, kind = struct.unpack(">I4s", data[pos:pos + 8])
        body = pos + 8
        if size == 1:
            size = struct.unpack(">Q", data[pos + 8:pos + 16])[0]
            body = pos + 16
        elif size == 0:
            size = end - pos
        if size < 8 or pos + size > end:
            raise Mp4Error(f"malformed box {kind!r} at {pos}")
        yield kind, body, pos + size
        pos += size


def _find(data: bytes, start: int, end: int, kind: bytes) -> list[tuple[int, int]]:
    return [(b, e) for k, b, e in _iter_boxes(data, start, end) if k == kind]


_PCM_CODECS = {b"sowt": "<i2", b"twos": ">i2"}


def _parse_audio_table(data: bytes, stbl_start: int, stbl_end: int) -> _SampleTable | None:
    codec = None
    channels = sample_bits = sample_rate = 0
    chunk_offsets: list[int] = []
    stsc: list[tuple[int, int]] = []
    sample_size = 0
    sample_sizes: list[int] = []
    sample_count = 0

    for kind, b, e in _iter_boxes(data, stbl_start, stbl_end):
        if kind == b"stsd":
            n = struct.unpack(">I", data[b + 4:b + 8])[0]
            pos = b + 8
            for _ in range(n):
                size, fourcc = struct.unpack(">I4s", data[pos:pos + 8])
                if fourcc in _PCM_CODECS:
                    codec = fourcc
                    entry = pos + 8
                    channels, sample_bits = struct.unpack(
                        ">HH", data[entry + 16:entry + 20])
                    sample_rate = struct.unpack(
                        ">I", data[entry + 24:entry + 28])[0] >> 16
                pos += size
        elif kind == b"stco":
            n = struct.unpack(">I", data[b + 4:b + 8])[0]
            chunk_offsets = list(struct.unpack(f">{n}I", data[b + 8:b + 8 + 4 * n]))
        elif kind == b"co64":
            n = struct.unpack(">I", data[b + 4:b + 8])[0]
            chunk_offsets = list(struct.unpack(f">{n}Q", data[b + 8:b + 8 + 8 * n]))
        elif kind == b"stsc":
            n = struct.unpack(">I", data[b + 4:b + 8])[0]
            for i in range(n):
                fc, spc, _sdi = struct.unpack(
                    ">III", data[b + 8 + 12 * i:b + 20 + 12 * i])
                stsc.append((fc, spc))
        elif kind == b"stsz":
            sample_size, sample_count = struct.unpack(">II", data[b + 4:b + 12])
            if sample_size == 0:
                sample_sizes = list(struct.unpack(
                    f">{sample_count}I", data[b + 12:b + 12 + 4 * sample_count]))

    if codec is None:
        return None
    return _SampleTable(codec, channels, sample_bits, sample_rate, chunk_offsets,
                        stsc, sample_size, sample_sizes, sample_count)


def _audio_tables(data: bytes) -> Iterator[_SampleTable]:
    for moov_b, moov_e in _find(data, 0, len(data), b"moov"):
        for trak_b, trak_e in _find(data, moov_b, moov_e, b"trak"):
            for mdia_b, mdia_e in _find(data, trak_b, trak_e, b"mdia"):
                handlers = _find(data, mdia_b, mdia_e, b"hdlr")
                if not handlers:
                    continue
                handler = data[handlers[0][0] + 8:handlers[0][0] + 12]
                if handler != b"soun":
                    continue
                for minf_b, minf_e in _find(data, mdia_b, mdia_e, b"minf"):
                    for stbl_b, stbl_e in _find(data, minf_b, minf_e, b"stbl"):
                        table = _parse_audio_table(data, stbl_b, stbl_e)
                        if table is not None:
                            yield table


def read_pcm_audio(path: str | Path) -> tuple[np.ndarray, int]:
    """Extract the first PCM audio track as (samples[n, channels] int16, rate).

    Raises Mp4Error when the file has no audio track this reader understands.
    """
    data = Path(path).read_bytes()
    if len(data) < 12 or data[4:8] != b"ftyp":
        raise Mp4Error("not an ISO base media file")

    for t in _audio_tables(data):
        if t.sample_bits != 16 or t.channels < 1:
            continue
        frame_bytes = 2 * t.channels
        chunks: list[bytes] = []
        sample_index = 0
        n_chunks = len(t.chunk_offsets)
        for ci in range(n_chunks):
            spc = 0
            for fc, count in t.stsc:
                if fc <= ci + 1:
                    spc = count
            if t.sample_size:
                length = spc * t.sample_size
            else:
                length = sum(t.sample_sizes[sample_index:sample_index + spc])
            sample_index += spc
            off = t.chunk_offsets[ci]
            chunks.append(data[off:off + length])
        raw = b"".join(chunks)
        samples = np.frombuffer(raw, dtype=_PCM_CODECS[t.codec])
        usable = (len(samples) // t.channels) * t.channels
        samples = samples[:usable].reshape(-1, t.channels).astype(np.int16)
        return samples, t.sample_rate
    raise Mp4Error("no 16-bit PCM audio track found")
