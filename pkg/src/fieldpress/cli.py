"""Command line interface: every pipeline stage, scriptable end to end."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import curation, labeling, release
from .categories import BALI_26
from .config import AppConfig
from .evaluation import (
    baseline_classify,
    context_report,
    evaluate,
    majority_vote,
    read_prediction_log,
    render_report_table,
    write_category_errors_csv,
    write_prediction_log,
)
from .model import Category, LabelSpan, ModelError, dumps_canonical, register_categories
from .store import StoreError
from .media import MediaError
from .transcription import (
    OfflineScriptProvider,
    RemoteHttpProvider,
    TranscriptionError,
    filter_utterances,
    search as search_transcript,
    transcribe as run_transcribe,
)
from .workspace import Workspace

_FAILURES = (ModelError, StoreError, MediaError, TranscriptionError,
             release.ReleaseError, OSError, ValueError)


def fail(error: Exception, kind: str | None = None) -> None:
    """Machine-readable error on stderr, nonzero exit."""
    doc = {"error": str(error), "kind": kind or type(error).__name__}
    click.echo(json.dumps(doc), err=True)
    sys.exit(1)


def echo_json(doc) -> None:
    click.echo(json.dumps(doc, indent=2, ensure_ascii=False))


class Ctx:
    def __init__(self, root: str, config_path: str | None):
        self.config = AppConfig.load(config_path)
        if root:
            self.config.root = root
        self.workspace = Workspace(self.config.root)

    def dataset(self, dataset_id: str):
        return self.workspace.dataset(dataset_id)


@click.group()
@click.option("--root", envvar="FIELDPRESS_ROOT", default="",
              help="Workspace directory (default from config).")
@click.option("--config", "config_path", envvar="FIELDPRESS_CONFIG",
              default=None, type=click.Path(), help="Config file path.")
@click.pass_context
def main(ctx, root, config_path):
    """Press field video into curated, labeled image datasets."""
    ctx.obj = Ctx(root, config_path)


@main.command()
@click.argument("files", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@click.option("--language", default="id-ID", show_default=True)
@click.option("--site-note", default="")
@click.pass_obj
def ingest(ctx, files, language, site_note):
    """Probe and copy videos into the workspace; prints one asset id per file."""
    try:
        for f in files:
            asset = ctx.workspace.ingest(f, language=language,
                                         site_note=site_note)
            click.echo(f"{asset.asset_id}  {asset.source_name}  "
                       f"{asset.duration_s:.1f}s {asset.frame_rate:.1f}fps "
                       f"{asset.width_px}x{asset.height_px}")
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--categories", default="bali26", show_default=True,
              help="'bali26' or a JSON file with [{slug, display_name, ...}].")
@click.option("--balance", default=None, help="MIN:MAX kept-count bounds.")
@click.pass_obj
def init(ctx, dataset_id, categories, balance):
    """Create a dataset and register its categories."""
    try:
        bmin = bmax = None
        if balance:
            bmin, _, bmax = balance.partition(":")
            bmin, bmax = int(bmin), int(bmax)
        store = ctx.workspace.create_dataset(dataset_id, balance_min=bmin,
                                             balance_max=bmax)
        if categories == "bali26":
            cats = list(BALI_26)
        else:
            cats = [Category.from_dict(c)
                    for c in json.loads(Path(categories).read_text())]
        store.mutate(lambda m: register_categories(m, cats), note="categories")
        m = store.load()
        click.echo(f"created {dataset_id} v{m.version} "
                   f"with {len(m.categories)} categories")
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("asset_id")
@click.option("--chunk-len", default=30.0, show_default=True)
@click.option("--window", default=None,
              help="Asset-time window SECONDS:SECONDS (default: whole asset).")
@click.option("--threshold", default=None, type=float,
              help="Confidence threshold for the printed summary.")
@click.option("--provider", default=None, help="offline or remote.")
@click.option("--script", default=None, type=click.Path(exists=True),
              help="Offline provider fixture script (JSON).")
@click.option("--language", default=None)
@click.option("--term", default=None, help="Single search term to report hits for.")
@click.pass_obj
def transcribe(ctx, asset_id, chunk_len, window, threshold, provider, script,
               language, term):
    """Run speech-to-text over an asset and store the transcript."""
    cfg = ctx.config
    try:
        asset = ctx.workspace.asset(asset_id)
        name = provider or cfg.provider
        if name == "offline":
            source = script or cfg.offline_script_path or None
            stt = OfflineScriptProvider(source)
        elif name == "remote":
            stt = RemoteHttpProvider(cfg.provider_endpoint, cfg.credential_path)
        else:
            raise ModelError(f"unknown provider {name!r}")
        win = None
        if window:
            a, _, b = window.partition(":")
            win = (float(a), float(b))
        transcript = run_transcribe(
            asset, ctx.workspace.media_path(asset_id), stt,
            chunk_len_s=chunk_len, window=win, language=language,
            parallelism=cfg.parallelism)
        ctx.workspace.save_transcript(transcript)
        thr = cfg.confidence_threshold if threshold is None else threshold
        kept = filter_utterances(transcript, thr)
        failed = sum(1 for c in transcript.chunks if c.status == "failed")
        click.echo(f"chunks: {len(transcript.chunks)} ({failed} failed)  "
                   f"utterances: {len(transcript.utterances)} "
                   f"({len(kept.utterances)} at threshold {thr})")
        for u in kept.utterances:
            click.echo(f"  [{u.start_s:8.2f} - {u.end_s:8.2f}] "
                       f"({u.confidence:.2f}) {u.text}")
        if term:
            for h in search_transcript(transcript, term):
                click.echo(f"hit: utterance {h.utterance_index} at "
                           f"{h.start_s:.2f}-{h.end_s:.2f} ({h.matched_token})")
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("asset_id")
@click.argument("term")
@click.pass_obj
def search(ctx, asset_id, term):
    """Keyword-search a stored transcript; prints hits in time order."""
    try:
        transcript = ctx.workspace.transcript(asset_id)
        hits = search_transcript(transcript, term)
        echo_json([h.to_dict() for h in hits])
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--asset", "asset_id", default=None, help="Asset to label.")
@click.option("--label", "label_slug", default=None, help="Category slug.")
@click.option("--start", default=None, type=float)
@click.option("--end", default=None, type=float)
@click.option("--whole", is_flag=True, help="Span the entire asset.")
@click.option("--from-term", default=None,
              help="Build padded spans from transcript hits for this term.")
@click.option("--pad-before", default=2.0, show_default=True)
@click.option("--pad-after", default=5.0, show_default=True)
@click.option("--import", "import_path", default=None,
              type=click.Path(exists=True), help="Import spans from JSONL.")
@click.option("--export", "export_path", default=None, type=click.Path(),
              help="Export the dataset's spans to JSONL and exit.")
@click.pass_obj
def label(ctx, dataset_id, asset_id, label_slug, start, end, whole,
          from_term, pad_before, pad_after, import_path, export_path):
    """Attach label spans to a dataset (manual, keyword-derived, or JSONL)."""
    try:
        store = ctx.dataset(dataset_id)
        if export_path:
            labeling.dump_spans(store.load().spans, export_path)
            click.echo(f"wrote {len(store.load().spans)} spans to {export_path}")
            return
        spans: list[LabelSpan] = []
        if import_path:
            spans = labeling.load_spans(import_path)
        else:
            if not asset_id or not label_slug:
                raise ModelError("--asset and --label are required "
                                 "unless importing")
            asset = ctx.workspace.asset(asset_id)
            manifest = store.load()
            if from_term:
                transcript = ctx.workspace.transcript(asset_id)
                hits = search_transcript(transcript, from_term)
                spans = labeling.spans_from_hits(manifest, asset, hits,
                                                 label_slug, pad_before,
                                                 pad_after)
            elif whole:
                spans = [labeling.span_whole_video(manifest, asset, label_slug)]
            else:
                if start is None or end is None:
                    raise ModelError("provide --start/--end, --whole, "
                                     "or --from-term")
                spans = [LabelSpan(asset_id=asset_id, label=label_slug,
                                   start_s=start, end_s=end, source="expert")]
        known = {a.asset_id for a in store.load().assets}
        for s in spans:
            if s.asset_id not in known:
                labeling.register_asset(store, ctx.workspace.asset(s.asset_id))
                known.add(s.asset_id)
        m = labeling.add_spans(store, spans)
        click.echo(f"added {len(spans)} spans (dataset v{m.version}, "
                   f"{len(m.spans)} total)")
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--fps-cap", default=None, type=float,
              help="Frames per second sampled from each span.")
@click.option("--tags", default="", help="Comma-separated context tags.")
@click.option("--assets", default="", help="Only spans of these asset ids.")
@click.pass_obj
def extract(ctx, dataset_id, fps_cap, tags, assets):
    """Sample labeled frames from every span in the dataset."""
    try:
        store = ctx.dataset(dataset_id)
        manifest = store.load()
        wanted = {a for a in assets.split(",") if a}
        spans = [s for s in manifest.spans
                 if not wanted or s.asset_id in wanted]
        result = labeling.extract_labeled_frames(
            store, ctx.workspace, spans,
            fps_cap=fps_cap or ctx.config.fps_cap,
            context_tags=[t for t in tags.split(",") if t])
        click.echo(f"added {result.frames_added} frames "
                   f"({result.duplicates_skipped} duplicates skipped, "
                   f"{len(result.failed_spans)} spans failed)")
        for span, err in result.failed_spans:
            click.echo(f"  failed: {span.asset_id} {span.label}: {err}",
                       err=True)
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--blur", default=None, type=float,
              help="Exclude frames scoring below this sharpness.")
@click.option("--dedup", default=None, type=int,
              help="Exclude near-duplicates within this hamming distance.")
@click.option("--balance", default=None, help="MIN:MAX kept-count clamp.")
@click.option("--seed", default=0, show_default=True)
@click.pass_obj
def curate(ctx, dataset_id, blur, dedup, balance, seed):
    """Quality-filter, dedup, and balance; prints the curation report."""
    try:
        store = ctx.dataset(dataset_id)
        if blur is not None:
            curation.filter_blurry(store, blur)
        if dedup is not None:
            curation.dedup_near_duplicates(store, dedup)
        if balance is not None:
            bmin, _, bmax = balance.partition(":")
            curation.balance(store, int(bmin), int(bmax), seed=seed)
        echo_json(curation.curation_report(store.load()))
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--fraction", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_obj
def split(ctx, dataset_id, fraction, seed):
    """Assign kept frames to train/eval per category."""
    try:
        store = ctx.dataset(dataset_id)
        m = curation.split(store, fraction, seed=seed)
        sides = list(m.split.values())
        click.echo(f"train: {sides.count('train')}  eval: {sides.count('eval')}"
                   f"  (seed {seed}, v{m.version})")
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.pass_obj
def normalize(ctx, dataset_id):
    """Record per-channel mean/std statistics over the train split."""
    try:
        store = ctx.dataset(dataset_id)
        m = curation.compute_normalization(store)
        echo_json(m.normalization.to_dict())
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--out", default=None, type=click.Path(),
              help="Release parent directory (default <root>/releases).")
@click.option("--include-excluded", is_flag=True)
@click.pass_obj
def export(ctx, dataset_id, out, include_excluded):
    """Write a privacy-scrubbed release tree."""
    try:
        store = ctx.dataset(dataset_id)
        out_dir = Path(out) if out else ctx.workspace.releases_dir
        summary = release.export(store, out_dir,
                                 include_excluded=include_excluded)
        echo_json(summary.to_dict())
        click.echo(f"release at {summary.out_dir}", err=True)
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.argument("target_label")
@click.argument("files", nargs=-1, required=True,
                type=click.Path(exists=True, path_type=Path))
@click.option("--fps-cap", default=None, type=float)
@click.option("--tags", default="", help="Comma-separated context tags.")
@click.pass_obj
def merge(ctx, dataset_id, target_label, files, fps_cap, tags):
    """Ingest new clips of one category and fold them into the dataset."""
    try:
        store = ctx.dataset(dataset_id)
        asset_ids = [ctx.workspace.ingest(f).asset_id for f in files]
        report = release.merge_collection(
            store, ctx.workspace, asset_ids, target_label,
            fps_cap=fps_cap or ctx.config.fps_cap,
            context_tags=[t for t in tags.split(",") if t],
            blur_threshold=ctx.config.blur_threshold,
            dedup_hamming=ctx.config.dedup_hamming)
        echo_json(report.to_dict())
    except _FAILURES as e:
        fail(e)


@main.command("evaluate")
@click.argument("dataset_id")
@click.option("--log", "log_path", required=True,
              type=click.Path(exists=True), help="Prediction log (JSONL).")
@click.option("--k", "ks", multiple=True, type=int, default=(1, 3),
              show_default=True)
@click.option("--context", default=None, help="Restrict to one context tag.")
@click.option("--split", "split_side", default="eval", show_default=True)
@click.option("--csv", "csv_path", default=None, type=click.Path(),
              help="Also write per-category top-1/top-3 chart data.")
@click.pass_obj
def evaluate_cmd(ctx, dataset_id, log_path, ks, context, split_side, csv_path):
    """Score a prediction log; prints the per-category table."""
    try:
        store = ctx.dataset(dataset_id)
        manifest = store.load()
        records = read_prediction_log(log_path)
        if context:
            report = context_report(records, manifest, context,
                                    split=split_side)
        else:
            report = evaluate(records, manifest, split=split_side, ks=ks)
        click.echo(render_report_table(report))
        if csv_path:
            write_category_errors_csv(report, csv_path)
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--log", "log_paths", multiple=True, required=True,
              type=click.Path(exists=True),
              help="Prediction log (repeat for each classifier).")
@click.option("--out", default=None, type=click.Path(),
              help="Write the voted predictions as a log.")
@click.pass_obj
def vote(ctx, dataset_id, log_paths, out):
    """Majority-consensus vote across classifier logs, scored like any log."""
    try:
        store = ctx.dataset(dataset_id)
        logs = [read_prediction_log(p) for p in log_paths]
        result = majority_vote(logs, store.load())
        click.echo(render_report_table(result.report))
        if result.coverage_mismatches:
            click.echo(f"coverage mismatches: "
                       f"{len(result.coverage_mismatches)}", err=True)
        if out:
            write_prediction_log(result.records, out)
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--out", default=None, type=click.Path(),
              help="Write the log instead of stdout.")
@click.option("--split", "split_side", default="eval", show_default=True)
@click.pass_obj
def baseline(ctx, dataset_id, out, split_side):
    """Run the built-in color-histogram baseline; emits a prediction log."""
    try:
        store = ctx.dataset(dataset_id)
        records = baseline_classify(store, split=split_side)
        if out:
            write_prediction_log(records, out)
            click.echo(f"wrote {len(records)} predictions to {out}", err=True)
        else:
            for r in records:
                click.echo(json.dumps(r.to_dict(), ensure_ascii=False))
    except _FAILURES as e:
        fail(e)


@main.command()
@click.argument("dataset_id")
@click.option("--version", default=None, type=int)
@click.pass_obj
def report(ctx, dataset_id, version):
    """Print the dataset's curation report."""
    try:
        store = ctx.dataset(dataset_id)
        manifest = store.load(version)
        echo_json({
            "dataset_id": manifest.dataset_id,
            "version": manifest.version,
            "categories": curation.curation_report(manifest),
            "balance": manifest.balance_state.to_dict()
            if manifest.balance_state else None,
            "split_seed": manifest.split_seed,
            "normalization": manifest.normalization.to_dict()
            if manifest.normalization else None,
        })
    except _FAILURES as e:
        fail(e)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.pass_obj
def serve(ctx, host, port):
    """Run the HTTP service (and the web UI, when built)."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(ctx.config), host=host, port=port)


if __name__ == "__main__":
    main()
