"""Acceptance criteria, one test per criterion, tolerances pinned.

Runs against the library only: no service process, no network, no real
field video. Each criterion prints its own PASS/FAIL line (see conftest).
"""

import json
import random
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from fieldpress import Workspace, curation
from fieldpress.evaluation import (
    PredictionRecord,
    baseline_classify,
    context_report,
    evaluate,
    majority_vote,
    write_prediction_log,
)
from fieldpress.imaging import blur_score, encode_png, perceptual_hash
from fieldpress.labeling import extract_labeled_frames, spans_from_hits
from fieldpress.media import plan_chunks
from fieldpress.media.fixtures import checkerboard, solid_frame, write_video
from fieldpress.model import (
    FrameRecord,
    Transcript,
    Utterance,
    content_id,
    scan_location_keys,
)
from fieldpress.release import export
from fieldpress.transcription import OfflineScriptProvider, filter_utterances, search, transcribe

from conftest import fresh_store, seed_frames


def test_chunk_planner_tiles_1000_randomized_durations():
    rng = np.random.default_rng(20260809)
    started = time.perf_counter()
    for _ in range(1000):
        duration = float(rng.uniform(0.2, 7200.0))
        chunk_len = float(rng.uniform(5.0, 59.0))
        chunks = plan_chunks(duration, chunk_len)
        # tiles [0, duration]
        assert chunks[0][0] == 0.0
        assert chunks[-1][1] == pytest.approx(duration, abs=1e-9)
        overlap_tail = (len(chunks) >= 2
                        and chunks[-1] == (pytest.approx(duration - 5.0),
                                           pytest.approx(duration)))
        for (a0, b0), (a1, b1) in zip(chunks, chunks[1:]):
            assert b0 == pytest.approx(a1, abs=1e-9) or \
                (a1, b1) == (pytest.approx(duration - 5.0), pytest.approx(duration))
        for a, b in chunks:
            length = b - a
            assert length <= 59.0 + 1e-9
            # remainder rule: only a whole-short-asset chunk may go below 5 s
            if duration >= 5.0:
                assert length >= 5.0 - 1e-9
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"planner took {elapsed:.3f}s for 1000 pairs"


def test_confidence_filtering_properties_10000_cases():
    rng = random.Random(97)
    failures = 0
    for _ in range(10000):
        confs = [rng.random() for _ in range(rng.randint(0, 12))]
        t = Transcript(asset_id="a" * 16, provider_id="offline", language="id",
                       utterances=tuple(
                           Utterance(float(i), i + 0.5, f"w{i}", c)
                           for i, c in enumerate(confs)))
        a, b = rng.random(), rng.random()
        fa = filter_utterances(t, a)
        ok = (len(filter_utterances(t, max(a, b)).utterances)
              <= len(fa.utterances))
        ok &= filter_utterances(fa, a).utterances == fa.utterances
        ok &= (filter_utterances(fa, b).utterances
               == filter_utterances(t, max(a, b)).utterances)
        failures += 0 if ok else 1
    assert failures == 0


def test_end_to_end_synthetic_pipeline(tmp_path):
    started = time.perf_counter()
    ws = Workspace(tmp_path / "ws")
    cats = ["taro", "durian", "cacao"]
    store = fresh_store(tmp_path, cats, name="field", balance_min=1,
                        balance_max=5000)

    # 3 categories x 3 videos; each transcript names its plant once in chunk 0
    assets = {slug: [] for slug in cats}
    for c, slug in enumerate(cats):
        for v in range(3):
            clip = write_video(tmp_path / f"{slug}-{v}.mp4", 6.0, fps=6,
                               width=64, height=48, pattern="noise",
                               hue=(3 * c + v) / 9)
            assets[slug].append(ws.ingest(clip))

    script = {"chunks": {"0": [{"start_s": 1.0, "end_s": 2.0,
                                "text": "ini {} bagus", "confidence": 0.95}]}}
    spans = []
    manifest = store.load()
    for slug in cats:
        for asset in assets[slug]:
            chunks = dict(script["chunks"])
            chunks["0"] = [dict(chunks["0"][0], text=f"ini {slug} bagus")]
            transcript = transcribe(asset, ws.media_path(asset.asset_id),
                                    OfflineScriptProvider({"chunks": chunks}),
                                    chunk_len_s=5.0)
            ws.save_transcript(transcript)
            kept = filter_utterances(transcript, 0.9)
            hits = search(kept, slug)
            assert len(hits) == 1
            spans.extend(spans_from_hits(manifest, asset, hits, slug,
                                         pad_before_s=1.0, pad_after_s=2.0))

    # hit 1-2 s padded (1, 2) -> span [0, 4]: 8 frames per video at 2 fps
    result = extract_labeled_frames(store, ws, spans, fps_cap=2.0)
    assert result.frames_added == 72, "fps arithmetic: 3 cats x 3 clips x 8"

    curation.filter_blurry(store, 100.0)
    curation.dedup_near_duplicates(store, 4)
    curation.balance(store, 1, 5000, seed=7)
    manifest = curation.split(store, 0.5, seed=7)
    for slug in cats:
        frames = manifest.frames_by_label(slug)
        assert len(frames) == 24
        sides = [manifest.split[f.frame_id] for f in frames]
        assert sides.count("train") == 12 and sides.count("eval") == 12
    curation.compute_normalization(store)

    summary = export(store, tmp_path / "release")
    pngs = list((summary.out_dir / "frames").rglob("*.png"))
    assert len(pngs) == 72
    from fieldpress.imaging import has_metadata_chunks
    for p in pngs:
        assert not has_metadata_chunks(p)
    for doc in summary.out_dir.rglob("*.json"):
        assert scan_location_keys(json.loads(doc.read_text())) == []

    elapsed = time.perf_counter() - started
    assert elapsed < 120.0, f"pipeline took {elapsed:.1f}s"


def test_balance_bounds_fixture(tmp_path):
    store = fresh_store(tmp_path, ["a", "b", "c", "d"])
    for slug, n in [("a", 900), ("b", 1200), ("c", 2400), ("d", 3000)]:
        seed_frames(store, slug, n)
    manifest = curation.balance(store, 1200, 2500, seed=0)
    kept = {slug: len(manifest.frames_by_label(slug)) for slug in "abcd"}
    assert kept == {"a": 900, "b": 1200, "c": 2400, "d": 2500}
    assert manifest.balance_state.deficient == ("a",)


def test_split_half_and_bit_exact_reproducibility(tmp_path):
    def run(where):
        store = fresh_store(tmp_path / where, ["a"])
        seed_frames(store, "a", 2400)
        return curation.split(store, 0.5, seed=7).split

    first, second = run("one"), run("two")
    sides = list(first.values())
    assert sides.count("train") == 1200 and sides.count("eval") == 1200
    assert first == second  # bit-exact across runs


def test_metric_oracle_100k_records_and_table1_rates(tmp_path):
    labels = [f"cat-{i:02d}" for i in range(20)]
    store = fresh_store(tmp_path, labels)
    per_label = 5000
    asset = None
    from conftest import make_asset
    asset = make_asset("bulk", duration_s=per_label)
    frames = []
    for slug in labels:
        for i in range(per_label):
            frames.append(FrameRecord(
                frame_id=content_id(f"{slug}|{i}".encode()),
                asset_id=asset.asset_id, timestamp_s=i * 0.5, label=slug,
                blur_score=500.0, perceptual_hash=f"{i:016x}"))

    def apply(m):
        split = {f.frame_id: "eval" for f in frames}
        return replace(m, assets=(asset,), frames=tuple(frames), split=split,
                       split_seed=0)

    manifest = store.mutate(apply, note="bulk fixture")

    rng = random.Random(123)
    records = []
    for f in frames:  # 100,000 randomized rankings
        pool = [l for l in labels if l != f.label]
        ranked = rng.sample(pool, 3)
        slot = rng.randint(0, 4)
        if slot < 3:
            ranked.insert(slot, f.label)
        records.append(PredictionRecord(
            f.frame_id, "clf",
            tuple((lab, 1.0 - 0.1 * i) for i, lab in enumerate(ranked))))
    assert len(records) == 100_000

    report = evaluate(records, manifest)

    # independent brute-force recount, plain loops
    truth = {f.frame_id: f.label for f in frames}
    counts, m1, m3 = {}, {}, {}
    for r in records:
        lab = truth[r.frame_id]
        counts[lab] = counts.get(lab, 0) + 1
        ranked_labels = [x for x, _ in r.ranking]
        if lab not in ranked_labels[:1]:
            m1[lab] = m1.get(lab, 0) + 1
        if lab not in ranked_labels[:3]:
            m3[lab] = m3.get(lab, 0) + 1
    t1_vals, t3_vals = [], []
    for slug in labels:
        row = report.per_category[slug]
        assert row["n"] == counts[slug]
        assert row["top1_misses"] == m1.get(slug, 0)
        assert row["top3_misses"] == m3.get(slug, 0)
        t1 = 100.0 * m1.get(slug, 0) / counts[slug]
        t3 = 100.0 * m3.get(slug, 0) / counts[slug]
        assert row["top1_error_pct"] == round(t1, 1)
        assert row["top3_error_pct"] == round(t3, 1)
        t1_vals.append(t1)
        t3_vals.append(t3)
    assert report.macro_top1_error_pct == round(sum(t1_vals) / len(t1_vals), 1)
    assert report.macro_top3_error_pct == round(sum(t3_vals) / len(t3_vals), 1)

    # fixture logs at the comparative top-1 rates: 21, 28, 47, 57, 62
    sub = frames[:100]  # one category, 100 eval frames
    for rate in (21, 28, 47, 57, 62):
        fixture = []
        for i, f in enumerate(sub):
            wrong = i < rate
            ranked = (["cat-01", f.label] if wrong else [f.label, "cat-01"])
            fixture.append(PredictionRecord(
                f.frame_id, f"clf-{rate}",
                tuple((lab, 1.0 - 0.1 * j) for j, lab in enumerate(ranked))))
        r = evaluate(fixture, manifest)
        assert r.per_category["cat-00"]["top1_error_pct"] == float(rate)
        assert r.macro_top1_error_pct == float(rate)


def test_context_subsets_reproduce_table2_cells(tmp_path):
    store = fresh_store(tmp_path, ["snakefruit", "dragonfruit", "x1", "x2"])
    seed_frames(store, "snakefruit", 80, tags=("market",))
    seed_frames(store, "dragonfruit", 80, tags=("market",))

    def apply(m):
        return replace(m, split={f.frame_id: "eval" for f in m.frames},
                       split_seed=0)

    manifest = store.mutate(apply, note="eval split")

    def ranking(true_label, kind):
        if kind == "hit":
            return ((true_label, 0.9), ("x1", 0.5), ("x2", 0.3))
        if kind == "top3":  # top-1 miss, top-3 hit
            return (("x1", 0.9), (true_label, 0.5), ("x2", 0.3))
        return (("x1", 0.9), ("x2", 0.5))  # full miss

    records = []
    for i, f in enumerate(manifest.frames_by_label("snakefruit")):
        kind = "miss" if i < 2 else ("top3" if i < 30 else "hit")
        records.append(PredictionRecord(f.frame_id, "ctx", ranking("snakefruit", kind)))
    for i, f in enumerate(manifest.frames_by_label("dragonfruit")):
        kind = "top3" if i < 2 else "hit"
        records.append(PredictionRecord(f.frame_id, "ctx", ranking("dragonfruit", kind)))

    report = context_report(records, manifest, "market")
    snake = report.per_category["snakefruit"]
    dragon = report.per_category["dragonfruit"]
    assert (snake["top1_error_pct"], snake["top3_error_pct"]) == (38.0, 2.0)
    assert (dragon["top1_error_pct"], dragon["top3_error_pct"]) == (2.0, 0.0)
    assert snake["n"] == 80 and dragon["n"] == 80


def test_voting_1000_randomized_trials(tmp_path):
    labels = ["a", "b", "c"]
    store = fresh_store(tmp_path, labels + ["x1", "x2"])
    seed_frames(store, "a", 30)

    def apply(m):
        return replace(m, split={f.frame_id: "eval" for f in m.frames},
                       split_seed=0)

    manifest = store.mutate(apply, note="eval split")
    frames = manifest.frames_by_label("a")
    rng = random.Random(2026)

    def log_of(assignments, cid):
        out = []
        for f, (lab, score) in zip(frames, assignments):
            runner_up = "x1" if lab != "x1" else "x2"
            out.append(PredictionRecord(
                f.frame_id, cid, ((lab, score), (runner_up, score - 0.4))))
        return out

    for _ in range(1000):
        per_clf = []
        for c in range(3):
            per_clf.append([(rng.choice(labels), rng.uniform(0.5, 1.0))
                            for _ in frames])
        logs = [log_of(a, f"clf-{i}") for i, a in enumerate(per_clf)]
        result = majority_vote(logs, manifest)
        voted = {r.frame_id: r.top1 for r in result.records}
        for i, f in enumerate(frames):
            votes = [per_clf[c][i][0] for c in range(3)]
            top = max(votes.count(l) for l in set(votes))
            leaders = [l for l in set(votes) if votes.count(l) == top]
            if len(leaders) == 1:
                assert voted[f.frame_id] == leaders[0]

    # unanimity: one classifier cloned three times equals its own report
    base_assign = [(rng.choice(labels), 0.8) for _ in frames]
    base = log_of(base_assign, "solo")
    result = majority_vote([base, base, base], manifest)
    solo = evaluate(base, manifest)
    assert result.report.per_category == solo.per_category
    assert all(v.top1 == b.top1 for v, b in
               zip(result.records, sorted(base, key=lambda r: r.frame_id)))


def test_baseline_zero_error_on_separable_fixture_and_schema(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    labels = [f"hue-{i:02d}" for i in range(26)]
    store = fresh_store(tmp_path, labels)
    from fieldpress.media.fixtures import hue_rgb
    for i, slug in enumerate(labels):
        seed_frames(store, slug, 4, rgb=hue_rgb(i / 26), write_images=True,
                    noise_seed=i)
    curation.split(store, 0.5, seed=3)

    records = baseline_classify(store)
    report = evaluate(records, store.load())
    assert report.macro_top1_error_pct == 0.0
    assert report.n_scored == 52  # 2 eval frames per category

    log_path = tmp_path / "baseline.jsonl"
    write_prediction_log(records, log_path)
    schema = json.loads((__import__("pathlib").Path(__file__).parent.parent
                         / "docs" / "prediction_log.schema.json").read_text())
    for line in log_path.read_text().splitlines():
        jsonschema.validate(json.loads(line), schema)


def test_blur_filter_checkerboard_vs_blurred(tmp_path):
    store = fresh_store(tmp_path, ["board"])
    sharp_px = checkerboard(64, 48, cell=8)
    blurred_px = np.clip(gaussian_filter(sharp_px.astype(np.float64),
                                         sigma=(4, 4, 0)), 0, 255).astype(np.uint8)
    uniform_px = solid_frame(64, 48, (93, 93, 93))
    assert blur_score(uniform_px) == 0.0

    from conftest import make_asset
    asset = make_asset("board-src")
    frames = []
    for i, px in enumerate((sharp_px, blurred_px)):
        frame_id = content_id(f"board|{i}".encode())
        path = store.frame_path("board", frame_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_png(px))
        frames.append(FrameRecord(
            frame_id=frame_id, asset_id=asset.asset_id, timestamp_s=float(i),
            label="board", blur_score=round(blur_score(px), 4),
            perceptual_hash=perceptual_hash(px)))

    def apply(m):
        return replace(m, assets=(asset,), frames=tuple(frames))

    store.mutate(apply, note="board frames")
    manifest = curation.filter_blurry(store)  # default threshold
    by_id = {f.frame_id: f for f in manifest.frames}
    assert not by_id[frames[0].frame_id].excluded      # sharp kept
    assert by_id[frames[1].frame_id].excluded          # blurred out
    assert by_id[frames[1].frame_id].exclusion_reason == "blur"
