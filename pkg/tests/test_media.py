"""Media adapter: probing, chunk planning, audio extraction, frame sampling."""

import wave

import numpy as np
import pytest

from fieldpress.media import (
    ChunkPlanError,
    MediaError,
    UnreadableFile,
    UnsupportedContainer,
    ZeroDuration,
    extract_audio,
    plan_chunks,
    probe,
    sample_frames,
)
from fieldpress.media.fixtures import write_video, write_webm
from fieldpress.media.isobmff import Mp4Error, read_pcm_audio, write_mp4


@pytest.fixture(scope="module")
def clip_10s(tmp_path_factory):
    path = tmp_path_factory.mktemp("media") / "clip10.mp4"
    return write_video(path, 10.0, fps=30, width=320, height=240, hue=0.6)


@pytest.fixture(scope="module")
def clip_60s(tmp_path_factory):
    path = tmp_path_factory.mktemp("media") / "clip60.mp4"
    return write_video(path, 60.0, fps=10, width=64, height=48, hue=0.1)


class TestProbe:
    def test_known_fixture_parameters(self, clip_10s):
        asset = probe(clip_10s)
        assert asset.duration_s == pytest.approx(10.0, abs=0.1)
        assert asset.frame_rate == pytest.approx(30.0, abs=0.01)
        assert (asset.width_px, asset.height_px) == (320, 240)
        assert asset.container == "mp4"

    def test_deterministic(self, clip_10s):
        assert probe(clip_10s) == probe(clip_10s)

    def test_avi_rejected(self, tmp_path):
        bad = tmp_path / "clip.avi"
        bad.write_bytes(b"RIFFxxxxAVI LIST")
        with pytest.raises(UnsupportedContainer):
            probe(bad)

    def test_empty_file_unreadable(self, tmp_path):
        empty = tmp_path / "clip.mp4"
        empty.write_bytes(b"")
        with pytest.raises(UnreadableFile):
            probe(empty)

    def test_garbage_mp4_unreadable(self, tmp_path):
        garbage = tmp_path / "garbage.mp4"
        garbage.write_bytes(b"\x00" * 2048)
        with pytest.raises(UnreadableFile):
            probe(garbage)

    def test_webm_accepted_when_encoder_available(self, tmp_path):
        path = write_webm(tmp_path / "clip.webm", 2.0, fps=10, width=64, height=48)
        if path is None:
            pytest.skip("VP8 encoder unavailable in this OpenCV build")
        asset = probe(path)
        assert asset.container == "webm"
        assert asset.duration_s == pytest.approx(2.0, abs=0.2)

    def test_reingest_same_bytes_same_id(self, clip_10s, tmp_path):
        copy = tmp_path / "copy.mp4"
        copy.write_bytes(clip_10s.read_bytes())
        assert probe(copy).asset_id == probe(clip_10s).asset_id


class TestPlanChunks:
    def test_exact_tiling(self):
        assert plan_chunks(60, 30) == [(0.0, 30.0), (30.0, 60.0)]

    def test_small_remainder_merges_into_final_chunk(self):
        # hand enumeration: 0-30, 30-60, 60-90, then 90-120 plus the 2 s tail
        assert plan_chunks(122, 30) == [(0.0, 30.0), (30.0, 60.0),
                                        (60.0, 90.0), (90.0, 122.0)]

    def test_legal_remainder_stays_its_own_chunk(self):
        assert plan_chunks(125, 30) == [(0.0, 30.0), (30.0, 60.0), (60.0, 90.0),
                                        (90.0, 120.0), (120.0, 125.0)]

    def test_chunk_len_bounds_enforced(self):
        with pytest.raises(ChunkPlanError):
            plan_chunks(100, 4.9)
        with pytest.raises(ChunkPlanError):
            plan_chunks(100, 59.1)

    def test_short_asset_single_chunk(self):
        assert plan_chunks(4, 30) == [(0.0, 4.0)]

    def test_merge_would_exceed_ceiling_overlaps_instead(self):
        chunks = plan_chunks(59 + 3, 59)
        assert chunks[0] == (0.0, 59.0)
        assert chunks[-1] == (62 - 5, 62.0)
        assert all(b - a <= 59.0 + 1e-9 for a, b in chunks)

    def test_partition_property_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            duration = float(rng.uniform(0.2, 7200.0))
            chunk_len = float(rng.uniform(5.0, 59.0))
            chunks = plan_chunks(duration, chunk_len)
            assert chunks[0][0] == 0.0
            assert chunks[-1][1] == pytest.approx(duration)
            for (a0, b0), (a1, b1) in zip(chunks, chunks[1:]):
                # contiguous, except the documented final-overlap case
                assert a1 == pytest.approx(b0) or (a1 == pytest.approx(duration - 5)
                                                   and b1 == pytest.approx(duration))
            for a, b in chunks:
                assert b - a <= 59.0 + 1e-9
                assert b - a >= 5.0 - 1e-9 or duration < 5.0 or (a, b) == chunks[-1]


class TestExtractAudio:
    def test_chunk_duration_within_tolerance(self, clip_60s, tmp_path):
        asset = probe(clip_60s)
        chunk = extract_audio(asset, clip_60s, (0.0, 30.0),
                              tmp_path / "c0.wav", index=0)
        with wave.open(str(chunk.payload_path)) as w:
            assert w.getnchannels() == 1
            assert w.getframerate() == 16000
            assert w.getsampwidth() == 2
            duration = w.getnframes() / 16000
        assert abs(duration - 30.0) <= 0.05

    def test_bounds_beyond_duration_rejected(self, clip_60s, tmp_path):
        asset = probe(clip_60s)
        with pytest.raises(MediaError):
            extract_audio(asset, clip_60s, (55.0, 65.0), tmp_path / "x.wav")

    def test_short_asset_whole_chunk(self, tmp_path):
        clip = write_video(tmp_path / "short.mp4", 4.0, fps=10, width=64,
                           height=48, hue=0.8)
        asset = probe(clip)
        chunk = extract_audio(asset, clip, (0.0, asset.duration_s),
                              tmp_path / "whole.wav")
        with wave.open(str(chunk.payload_path)) as w:
            assert abs(w.getnframes() / 16000 - 4.0) <= 0.05

    def test_no_audio_track_fails_decode(self, tmp_path):
        clip = write_video(tmp_path / "mute.mp4", 2.0, fps=10, width=64,
                           height=48, audio="none")
        asset = probe(clip)
        with pytest.raises(MediaError):
            extract_audio(asset, clip, (0.0, 2.0), tmp_path / "mute.wav")

    def test_tone_round_trips_through_container(self, tmp_path):
        clip = write_video(tmp_path / "tone.mp4", 2.0, fps=10, width=64,
                           height=48, audio="tone", tone_hz=440)
        samples, rate = read_pcm_audio(clip)
        assert rate == 16000
        mono = samples[:, 0].astype(np.float64)
        # dominant frequency of the recovered signal is the written tone
        spectrum = np.abs(np.fft.rfft(mono))
        freq = np.fft.rfftfreq(len(mono), 1 / rate)[spectrum.argmax()]
        assert freq == pytest.approx(440, abs=2)


class TestSampleFrames:
    def test_count_matches_arithmetic(self, clip_10s):
        asset = probe(clip_10s)
        frames = sample_frames(asset, clip_10s, (0.0, 10.0), fps_cap=2)
        assert len(frames) == 20
        stamps = [f.timestamp_s for f in frames]
        assert stamps == pytest.approx([i * 0.5 for i in range(20)])

    def test_full_rate_sampling(self, clip_10s):
        asset = probe(clip_10s)
        frames = sample_frames(asset, clip_10s, (0.0, 10.0), fps_cap=30)
        assert len(frames) == 300

    def test_fps_cap_above_frame_rate_rejected(self, clip_10s):
        asset = probe(clip_10s)
        with pytest.raises(MediaError, match="exceeds"):
            sample_frames(asset, clip_10s, (0.0, 10.0), fps_cap=60)

    def test_empty_span_rejected(self, clip_10s):
        asset = probe(clip_10s)
        with pytest.raises(MediaError, match="empty"):
            sample_frames(asset, clip_10s, (3.0, 3.0), fps_cap=2)

    def test_timestamps_strictly_increasing_and_inside_span(self, clip_10s):
        asset = probe(clip_10s)
        frames = sample_frames(asset, clip_10s, (2.0, 7.5), fps_cap=3)
        stamps = [f.timestamp_s for f in frames]
        assert all(b > a for a, b in zip(stamps, stamps[1:]))
        assert all(2.0 <= t < 7.5 for t in stamps)

    def test_pixels_match_probed_dimensions(self, clip_10s):
        asset = probe(clip_10s)
        frames = sample_frames(asset, clip_10s, (0.0, 1.0), fps_cap=2)
        for f in frames:
            assert f.pixels.shape == (asset.height_px, asset.width_px, 3)


class TestMuxer:
    def test_rejects_empty_frame_list(self, tmp_path):
        with pytest.raises(Mp4Error):
            write_mp4(tmp_path / "x.mp4", [], 64, 48, 10)

    def test_video_decodes_with_expected_color(self, tmp_path):
        from fieldpress.media.fixtures import hue_rgb
        clip = write_video(tmp_path / "c.mp4", 1.0, fps=10, width=64, height=48,
                           hue=0.0)
        asset = probe(clip)
        frames = sample_frames(asset, clip, (0.0, 1.0), fps_cap=10)
        expected = np.array(hue_rgb(0.0), dtype=np.int16)
        got = frames[0].pixels[24, 32].astype(np.int16)
        assert np.abs(got - expected).max() <= 6  # JPEG round trip
