"""Transcription: offline/remote providers, filtering, search."""

import json

import httpx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldpress.media import probe
from fieldpress.media.fixtures import write_video
from fieldpress.model import ModelError, Transcript, Utterance
from fieldpress.transcription import (
    CredentialInvalid,
    OfflineScriptProvider,
    ProviderUnreachable,
    RemoteHttpProvider,
    TranscriptionError,
    filter_utterances,
    search,
    transcribe,
)


@pytest.fixture(scope="module")
def clip(tmp_path_factory):
    path = tmp_path_factory.mktemp("stt") / "clip.mp4"
    return write_video(path, 12.0, fps=10, width=64, height=48, hue=0.4)


@pytest.fixture(scope="module")
def asset(clip):
    return probe(clip)


def make_transcript(confidences, asset_id="a" * 16) -> Transcript:
    utts = tuple(Utterance(float(i), float(i) + 0.5, f"word{i}", c)
                 for i, c in enumerate(confidences))
    return Transcript(asset_id=asset_id, provider_id="offline",
                      language="id-ID", utterances=utts)


class TestTranscribe:
    def test_scripted_utterance_rebased_to_asset_time(self, clip, asset, tmp_path):
        script = {"chunks": {"0": [{"start_s": 2.0, "end_s": 3.5,
                                    "text": "kayu manis", "confidence": 0.93}]}}
        t = transcribe(asset, clip, OfflineScriptProvider(script),
                       chunk_len_s=12.0, work_dir=tmp_path)
        assert len(t.utterances) == 1
        u = t.utterances[0]
        assert (u.start_s, u.end_s) == (2.0, 3.5)
        assert u.text == "kayu manis"
        assert u.confidence == 0.93
        assert t.provider_id == "offline"

    def test_second_chunk_rebases_by_chunk_start(self, clip, asset, tmp_path):
        script = {"chunks": {"1": [{"start_s": 1.0, "end_s": 2.0,
                                    "text": "pohon durian", "confidence": 0.8}]}}
        t = transcribe(asset, clip, OfflineScriptProvider(script),
                       chunk_len_s=6.0, work_dir=tmp_path)
        assert [c.status for c in t.chunks] == ["ok", "ok"]
        assert t.utterances[0].start_s == 7.0  # chunk 1 starts at 6.0

    def test_empty_window_rejected(self, clip, asset):
        with pytest.raises(TranscriptionError, match="empty window"):
            transcribe(asset, clip, OfflineScriptProvider(), window=(0.0, 0.0))

    def test_window_outside_duration_rejected(self, clip, asset):
        with pytest.raises(TranscriptionError, match="outside"):
            transcribe(asset, clip, OfflineScriptProvider(), window=(0.0, 99.0))

    def test_window_restricts_chunks(self, clip, asset, tmp_path):
        script = {"chunks": {"0": [{"start_s": 0.5, "end_s": 1.0,
                                    "text": "ini", "confidence": 0.9}]}}
        t = transcribe(asset, clip, OfflineScriptProvider(script),
                       chunk_len_s=5.0, window=(4.0, 10.0), work_dir=tmp_path)
        assert len(t.chunks) == 1
        assert (t.chunks[0].start_s, t.chunks[0].end_s) == (4.0, 10.0)
        assert t.utterances[0].start_s == 4.5

    def test_failed_chunk_is_partial_not_fatal(self, clip, asset, tmp_path):
        script = {"chunks": {"0": "fail",
                             "1": [{"start_s": 0.0, "end_s": 1.0,
                                    "text": "bambu", "confidence": 0.7}]}}
        t = transcribe(asset, clip, OfflineScriptProvider(script),
                       chunk_len_s=6.0, work_dir=tmp_path)
        assert [c.status for c in t.chunks] == ["failed", "ok"]
        assert len(t.utterances) == 1

    def test_concat_equals_per_chunk_transcripts(self, clip, asset, tmp_path):
        script = {"chunks": {
            "0": [{"start_s": 1.0, "end_s": 2.0, "text": "satu", "confidence": 0.9}],
            "1": [{"start_s": 2.0, "end_s": 3.0, "text": "dua", "confidence": 0.8}],
        }}
        whole = transcribe(asset, clip, OfflineScriptProvider(script),
                           chunk_len_s=6.0, work_dir=tmp_path)
        # windows aligned to the same chunk grid, one chunk each
        part0 = transcribe(asset, clip, OfflineScriptProvider(
            {"chunks": {"0": script["chunks"]["0"]}}),
            chunk_len_s=6.0, window=(0.0, 6.0), work_dir=tmp_path)
        part1 = transcribe(asset, clip, OfflineScriptProvider(
            {"chunks": {"0": script["chunks"]["1"]}}),
            chunk_len_s=6.0, window=(6.0, 12.0), work_dir=tmp_path)
        combined = sorted(part0.utterances + part1.utterances,
                          key=lambda u: u.start_s)
        assert list(whole.utterances) == combined


class TestRemoteProvider:
    def make_provider(self, tmp_path, handler, key=None):
        keyfile = tmp_path / "key.json"
        keyfile.write_text(json.dumps(key if key is not None
                                      else {"api_key": "k-123"}))
        transport = httpx.MockTransport(handler)
        client = httpx.Client(transport=transport)
        return RemoteHttpProvider("http://stt.local", keyfile, client=client)

    def run_chunk(self, provider, tmp_path, asset, clip):
        from fieldpress.media import extract_audio
        chunk = extract_audio(asset, clip, (0.0, 5.0), tmp_path / "c.wav", index=0)
        return provider.transcribe_chunk(chunk, "id-ID")

    def test_posts_wav_and_parses_response(self, tmp_path, asset, clip):
        seen = {}

        def handler(request):
            seen["url"] = str(request.url)
            seen["credentials"] = request.headers["X-Stt-Credentials"]
            seen["content_type"] = request.headers["Content-Type"]
            seen["body_head"] = request.content[:4]
            return httpx.Response(200, json={"text": "kayu manis",
                                             "confidence": 0.91})

        provider = self.make_provider(tmp_path, handler)
        result = self.run_chunk(provider, tmp_path, asset, clip)
        assert seen["url"] == "http://stt.local/v1/transcribe?language=id-ID"
        assert json.loads(seen["credentials"]) == {"api_key": "k-123"}
        assert seen["content_type"] == "audio/wav"
        assert seen["body_head"] == b"RIFF"
        assert result.utterances[0].text == "kayu manis"
        assert result.utterances[0].confidence == 0.91
        # no word timings: utterance spans the whole chunk
        assert (result.utterances[0].start_s, result.utterances[0].end_s) == (0.0, 5.0)

    def test_word_timings_trim_the_utterance(self, tmp_path, asset, clip):
        def handler(request):
            return httpx.Response(200, json={
                "text": "kayu manis", "confidence": 0.9,
                "words": [{"word": "kayu", "start_s": 1.2, "end_s": 1.6},
                          {"word": "manis", "start_s": 1.7, "end_s": 2.1}]})

        provider = self.make_provider(tmp_path, handler)
        result = self.run_chunk(provider, tmp_path, asset, clip)
        assert (result.utterances[0].start_s, result.utterances[0].end_s) == (1.2, 2.1)

    def test_bad_key_file_rejected_before_any_request(self, tmp_path):
        keyfile = tmp_path / "key.json"
        keyfile.write_text("{not json")
        with pytest.raises(CredentialInvalid):
            RemoteHttpProvider("http://stt.local", keyfile)

    def test_missing_key_file_rejected(self, tmp_path):
        with pytest.raises(CredentialInvalid):
            RemoteHttpProvider("http://stt.local", tmp_path / "absent.json")

    def test_401_maps_to_credential_invalid(self, tmp_path, asset, clip):
        provider = self.make_provider(
            tmp_path, lambda request: httpx.Response(401))
        with pytest.raises(CredentialInvalid):
            self.run_chunk(provider, tmp_path, asset, clip)

    def test_transport_error_maps_to_unreachable(self, tmp_path, asset, clip):
        def handler(request):
            raise httpx.ConnectError("refused")

        provider = self.make_provider(tmp_path, handler)
        with pytest.raises(ProviderUnreachable):
            self.run_chunk(provider, tmp_path, asset, clip)

    def test_server_error_fails_only_the_chunk(self, tmp_path, asset, clip):
        calls = {"n": 0}

        def handler(request):
            calls["n"] += 1
            if calls["n"] == 1:
                return httpx.Response(500, text="boom")
            return httpx.Response(200, json={"text": "ok", "confidence": 0.5})

        provider = self.make_provider(tmp_path, handler)
        t = transcribe(asset, clip, provider, chunk_len_s=6.0,
                       work_dir=tmp_path, parallelism=1)
        assert [c.status for c in t.chunks] == ["failed", "ok"]


class TestFilter:
    def test_threshold_is_inclusive(self):
        t = make_transcript([0.95, 0.50])
        kept = filter_utterances(t, 0.9)
        assert len(kept.utterances) == 1
        assert kept.utterances[0].confidence == 0.95

    def test_zero_threshold_is_identity(self):
        t = make_transcript([0.95, 0.50, 0.0])
        assert filter_utterances(t, 0.0).utterances == t.utterances

    def test_threshold_one_keeps_only_perfect(self):
        t = make_transcript([0.99, 0.5])
        assert filter_utterances(t, 1.0).utterances == ()
        t2 = make_transcript([1.0, 0.5])
        assert len(filter_utterances(t2, 1.0).utterances) == 1

    def test_out_of_range_threshold_rejected(self):
        t = make_transcript([0.5])
        for bad in (-0.1, 1.1):
            with pytest.raises(ModelError):
                filter_utterances(t, bad)

    @settings(max_examples=200)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), max_size=30),
           st.floats(min_value=0.0, max_value=1.0),
           st.floats(min_value=0.0, max_value=1.0))
    def test_properties_monotone_idempotent_composable(self, confs, a, b):
        t = make_transcript(confs)
        fa = filter_utterances(t, a)
        # monotonicity
        assert len(filter_utterances(t, max(a, b)).utterances) <= len(fa.utterances)
        # idempotence
        assert filter_utterances(fa, a).utterances == fa.utterances
        # composition
        assert (filter_utterances(fa, b).utterances
                == filter_utterances(t, max(a, b)).utterances)

    @settings(max_examples=100)
    @given(st.lists(st.floats(min_value=0.0, max_value=1.0), max_size=20),
           st.floats(min_value=0.0, max_value=1.0))
    def test_order_preserved(self, confs, thr):
        t = make_transcript(confs)
        kept = filter_utterances(t, thr).utterances
        starts = [u.start_s for u in kept]
        assert starts == sorted(starts)


class TestSearch:
    def transcript(self):
        return Transcript(
            asset_id="a" * 16, provider_id="offline", language="id-ID",
            utterances=(Utterance(0.0, 1.0, "Ini kayu manis", 0.9),
                        Utterance(2.0, 3.0, "pohon durian", 0.8)))

    def test_whole_token_match(self):
        hits = search(self.transcript(), "durian")
        assert len(hits) == 1
        assert hits[0].utterance_index == 1
        assert (hits[0].start_s, hits[0].end_s) == (2.0, 3.0)

    def test_case_insensitive(self):
        assert search(self.transcript(), "Durian") == search(self.transcript(), "durian")

    def test_substring_does_not_match(self):
        assert search(self.transcript(), "duri") == []

    def test_punctuation_stripped(self):
        t = Transcript(asset_id="a" * 16, provider_id="offline", language="id",
                       utterances=(Utterance(0.0, 1.0, "Itu durian, ya!", 0.9),))
        assert len(search(t, "durian")) == 1

    def test_empty_term_rejected(self):
        with pytest.raises(ModelError):
            search(self.transcript(), "")
        with pytest.raises(ModelError):
            search(self.transcript(), "  ,  ")

    def test_hits_in_time_order(self):
        t = Transcript(asset_id="a" * 16, provider_id="offline", language="id",
                       utterances=(Utterance(0.0, 1.0, "taro", 0.9),
                                   Utterance(5.0, 6.0, "taro lagi taro", 0.8),
                                   Utterance(9.0, 10.0, "taro", 0.7)))
        hits = search(t, "taro")
        assert [h.utterance_index for h in hits] == [0, 1, 2]

    def test_search_invariant_under_filter_when_hits_survive(self):
        t = self.transcript()
        filtered = filter_utterances(t, 0.7)  # both survive
        assert ([h.utterance_index for h in search(t, "durian")]
                == [h.utterance_index for h in search(filtered, "durian")])
