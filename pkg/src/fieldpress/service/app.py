"""HTTP service: thin wrappers over the pipeline modules.

Every endpoint validates input and delegates; no pipeline logic lives here.
Slow operations return 202 with a job id; `Idempotency-Key` makes retried
submissions return the original job. All ids are validated against strict
patterns before touching the filesystem, so no request can escape the
workspace directory.
"""

from __future__ import annotations

import json
import tempfile
import uuid
from pathlib import Path

from fastapi import Body, Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .. import curation, labeling, release
from ..categories import BALI_26
from ..config import AppConfig
from ..evaluation import (
    PredictionRecord,
    context_report,
    evaluate,
    majority_vote,
    render_report_table,
)
from ..media import (
    MediaError,
    UnreadableFile,
    UnsupportedContainer,
    ZeroDuration,
)
from ..model import (
    HASH_ID_RE,
    SLUG_RE,
    Category,
    LabelSpan,
    ModelError,
    dumps_canonical,
    register_categories,
)
from ..store import StoreError
from ..transcription import (
    OfflineScriptProvider,
    RemoteHttpProvider,
    filter_utterances,
    search,
    transcribe,
)
from ..workspace import Workspace
from .jobs import JobError, JobManager


def _require_slug(value: str, what: str) -> str:
    if not SLUG_RE.match(value):
        raise HTTPException(422, f"invalid {what}: {value!r}")
    return value


def _require_hash_id(value: str, what: str) -> str:
    if not HASH_ID_RE.match(value):
        raise HTTPException(422, f"invalid {what}: {value!r}")
    return value


class TranscribeRequest(BaseModel):
    start_min: int = Field(0, ge=0, le=59)
    start_sec: int = Field(0, ge=0, le=59)
    end_min: int = Field(0, ge=0, le=59)
    end_sec: int = Field(0, ge=0, le=59)
    chunk_len_s: float = Field(30.0, ge=5.0, le=59.0)
    threshold: float = Field(0.9, ge=0.0, le=1.0)
    language: str = ""
    provider: str = ""
    search_term: str = ""

    def window(self) -> tuple[float, float] | None:
        start = self.start_min * 60 + self.start_sec
        end = self.end_min * 60 + self.end_sec
        if start == 0 and end == 0:
            return None  # whole asset
        if end <= start:
            raise HTTPException(422, "window end must be after start")
        return (float(start), float(end))


class SpanPayload(BaseModel):
    asset_id: str
    label: str
    start_s: float
    end_s: float
    source: str = "expert"
    note: str = ""


class LabelsRequest(BaseModel):
    dataset_id: str
    spans: list[SpanPayload]


class CreateDatasetRequest(BaseModel):
    dataset_id: str
    categories: str | list[dict] = "bali26"
    balance_min: int | None = None
    balance_max: int | None = None


class ExtractRequest(BaseModel):
    asset_ids: list[str] | None = None
    fps_cap: float | None = Field(None, gt=0)
    context_tags: list[str] = []


class BalanceParams(BaseModel):
    min_count: int | None = None
    max_count: int | None = None
    seed: int = 0


class SplitParams(BaseModel):
    train_fraction: float = Field(0.5, gt=0.0, lt=1.0)
    seed: int = 0


class CurateRequest(BaseModel):
    blur_threshold: float | None = None
    dedup_hamming: int | None = Field(None, ge=0, le=64)
    balance: BalanceParams | None = None
    split: SplitParams | None = None
    normalize: bool = False


class ExportRequest(BaseModel):
    include_excluded: bool = False


class MergeRequest(BaseModel):
    asset_ids: list[str]
    target_label: str
    fps_cap: float | None = Field(None, gt=0)
    context_tags: list[str] = []


class FrameSelection(BaseModel):
    frame_ids: list[str]
    note: str = ""


class VoteRequest(BaseModel):
    dataset_id: str
    log_ids: list[str]
    context_tag: str = ""


class HitPayload(BaseModel):
    start_s: float
    end_s: float


class PromoteHitsRequest(BaseModel):
    dataset_id: str
    asset_id: str
    label: str
    hits: list[HitPayload]
    pad_before_s: float = Field(2.0, ge=0)
    pad_after_s: float = Field(5.0, ge=0)


class ContextRescoreRequest(BaseModel):
    dataset_id: str
    log_id: str
    context_tag: str


def create_app(config: AppConfig | None = None) -> FastAPI:
    config = config or AppConfig.load()
    workspace = Workspace(config.root)
    jobs = JobManager(workspace.jobs_dir, workers=config.parallelism)
    app = FastAPI(title="fieldpress", version="0.1.0")
    app.state.workspace = workspace
    app.state.jobs = jobs
    app.state.config = config
    reports_dir = workspace.root / "reports"
    logs_dir = workspace.root / "prediction-logs"
    reports_dir.mkdir(exist_ok=True)
    logs_dir.mkdir(exist_ok=True)

    def auth(authorization: str = Header("")) -> None:
        if config.api_token and authorization != f"Bearer {config.api_token}":
            raise HTTPException(401, "missing or invalid token")

    guarded = [Depends(auth)]

    def provider_for(name: str = ""):
        name = name or config.provider
        if name == "offline":
            script = (json.loads(Path(config.offline_script_path).read_text())
                      if config.offline_script_path else None)
            return OfflineScriptProvider(script)
        if name == "remote":
            if not config.provider_endpoint or not config.credential_path:
                raise HTTPException(422, "remote provider is not configured")
            return RemoteHttpProvider(config.provider_endpoint,
                                      config.credential_path)
        raise HTTPException(422, f"unknown provider: {name!r}")

    @app.exception_handler(ModelError)
    async def model_error(request: Request, exc: ModelError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(StoreError)
    async def store_error(request: Request, exc: StoreError):
        return JSONResponse(status_code=409, content={"error": str(exc)})

    # -- assets -----------------------------------------------------------

    @app.post("/assets", status_code=201, dependencies=guarded)
    async def upload_asset(request: Request,
                           filename: str = Query(...),
                           language: str = Query("id-ID"),
                           site_note: str = Query("")):
        suffix = Path(filename).name.lower().rpartition(".")[2]
        if suffix not in ("webm", "mp4"):
            raise HTTPException(415, "only .webm and .mp4 uploads are accepted")
        body = await request.body()
        if not body:
            raise HTTPException(400, "empty upload")
        with tempfile.NamedTemporaryFile(suffix=f".{suffix}", delete=False) as f:
            f.write(body)
            tmp = Path(f.name)
        try:
            asset = workspace.ingest(tmp, language=language, site_note=site_note)
        except UnsupportedContainer as e:
            raise HTTPException(415, str(e))
        except ZeroDuration as e:
            raise HTTPException(422, str(e))
        except (UnreadableFile, MediaError) as e:
            raise HTTPException(400, str(e))
        finally:
            tmp.unlink(missing_ok=True)
        doc = asset.to_dict()
        doc["source_name"] = Path(filename).name
        return doc

    @app.get("/assets", dependencies=guarded)
    def list_assets():
        return [a.to_dict() for a in workspace.assets()]

    @app.get("/assets/{asset_id}", dependencies=guarded)
    def get_asset(asset_id: str):
        _require_hash_id(asset_id, "asset id")
        try:
            return workspace.asset(asset_id).to_dict()
        except ModelError:
            raise HTTPException(404, f"unknown asset {asset_id}")

    @app.get("/assets/{asset_id}/media", dependencies=guarded)
    def get_media(asset_id: str):
        _require_hash_id(asset_id, "asset id")
        try:
            path = workspace.media_path(asset_id)
        except ModelError:
            raise HTTPException(404, f"unknown asset {asset_id}")
        return FileResponse(path, media_type=f"video/{path.suffix.lstrip('.')}")

    # -- transcription ------------------------------------------------------

    @app.post("/assets/{asset_id}/transcribe", status_code=202,
              dependencies=guarded)
    def start_transcribe(asset_id: str, req: TranscribeRequest,
                         idempotency_key: str = Header("")):
        _require_hash_id(asset_id, "asset id")
        try:
            asset = workspace.asset(asset_id)
        except ModelError:
            raise HTTPException(404, f"unknown asset {asset_id}")
        window = req.window()
        provider = provider_for(req.provider)
        language = req.language or asset.language

        def run(progress) -> dict:
            transcript = transcribe(
                asset, workspace.media_path(asset_id), provider,
                chunk_len_s=req.chunk_len_s, window=window, language=language,
                parallelism=config.parallelism, progress=progress)
            workspace.save_transcript(transcript)
            kept = filter_utterances(transcript, req.threshold)
            result = {
                "asset_id": asset_id,
                "chunks_total": len(transcript.chunks),
                "chunks_failed": sum(1 for c in transcript.chunks
                                     if c.status == "failed"),
                "utterances_total": len(transcript.utterances),
                "utterances_at_threshold": len(kept.utterances),
                "threshold": req.threshold,
            }
            if req.search_term.strip():
                result["search_term"] = req.search_term
                result["hits"] = [h.to_dict() for h in
                                  search(transcript, req.search_term)]
            return result

        job = jobs.submit("transcribe", run,
                          idempotency_key=idempotency_key or None)
        return {"job_id": job.job_id}

    @app.get("/assets/{asset_id}/transcript", dependencies=guarded)
    def get_transcript(asset_id: str, threshold: float = Query(0.0, ge=0.0, le=1.0)):
        _require_hash_id(asset_id, "asset id")
        try:
            transcript = workspace.transcript(asset_id)
        except ModelError:
            raise HTTPException(404, f"no transcript for asset {asset_id}")
        return filter_utterances(transcript, threshold).to_dict()

    @app.get("/assets/{asset_id}/search", dependencies=guarded)
    def search_transcript(asset_id: str, term: str = Query(...)):
        _require_hash_id(asset_id, "asset id")
        try:
            transcript = workspace.transcript(asset_id)
        except ModelError:
            raise HTTPException(404, f"no transcript for asset {asset_id}")
        return {"term": term, "hits": [h.to_dict()
                                       for h in search(transcript, term)]}

    # -- datasets -----------------------------------------------------------

    @app.post("/datasets", status_code=201, dependencies=guarded)
    def create_dataset(req: CreateDatasetRequest):
        _require_slug(req.dataset_id, "dataset id")
        if workspace.has_dataset(req.dataset_id):
            raise HTTPException(409, f"dataset {req.dataset_id} already exists")
        store = workspace.create_dataset(req.dataset_id,
                                         balance_min=req.balance_min,
                                         balance_max=req.balance_max)
        if req.categories == "bali26":
            cats = list(BALI_26)
        elif isinstance(req.categories, list):
            cats = [Category.from_dict(c) for c in req.categories]
        else:
            raise HTTPException(422, "categories must be 'bali26' or a list")
        if cats:
            store.mutate(lambda m: register_categories(m, cats),
                         note="register categories")
        m = store.load()
        return {"dataset_id": m.dataset_id, "version": m.version,
                "categories": len(m.categories)}

    @app.get("/datasets", dependencies=guarded)
    def list_datasets():
        out = []
        for did in workspace.dataset_ids():
            m = workspace.dataset(did).load()
            out.append({"dataset_id": did, "version": m.version,
                        "categories": len(m.categories),
                        "frames": len(m.frames)})
        return out

    def open_dataset(dataset_id: str):
        _require_slug(dataset_id, "dataset id")
        try:
            return workspace.dataset(dataset_id)
        except StoreError:
            raise HTTPException(404, f"unknown dataset {dataset_id}")

    @app.get("/datasets/{dataset_id}/manifest", dependencies=guarded)
    def get_manifest(dataset_id: str, version: int | None = Query(None, ge=1)):
        store = open_dataset(dataset_id)
        try:
            return store.load(version).to_dict()
        except StoreError as e:
            raise HTTPException(404, str(e))

    @app.get("/datasets/{dataset_id}/report", dependencies=guarded)
    def get_curation_report(dataset_id: str):
        store = open_dataset(dataset_id)
        manifest = store.load()
        return {"dataset_id": dataset_id, "version": manifest.version,
                "balance_min": manifest.balance_min,
                "balance_max": manifest.balance_max,
                "categories": curation.curation_report(manifest)}

    @app.get("/datasets/{dataset_id}/frames", dependencies=guarded)
    def list_frames(dataset_id: str, label: str = Query(""),
                    include_excluded: bool = Query(True)):
        store = open_dataset(dataset_id)
        manifest = store.load()
        frames = manifest.frames
        if label:
            _require_slug(label, "label")
            frames = [f for f in frames if f.label == label]
        if not include_excluded:
            frames = [f for f in frames if not f.excluded]
        frames = sorted(frames, key=lambda f: (f.label, f.timestamp_s))
        return [dict(f.to_dict(), split=manifest.split_of(f.frame_id))
                for f in frames]

    @app.get("/datasets/{dataset_id}/frames/{frame_id}/image",
             dependencies=guarded)
    def get_frame_image(dataset_id: str, frame_id: str):
        store = open_dataset(dataset_id)
        _require_hash_id(frame_id, "frame id")
        try:
            frame = store.load().frame_by_id(frame_id)
        except ModelError:
            raise HTTPException(404, f"unknown frame {frame_id}")
        return FileResponse(store.frame_path(frame.label, frame.frame_id),
                            media_type="image/png")

    @app.post("/datasets/{dataset_id}/frames/exclude", dependencies=guarded)
    def exclude_frames(dataset_id: str, req: FrameSelection):
        store = open_dataset(dataset_id)
        m = curation.exclude_manual(store, req.frame_ids, req.note)
        return {"version": m.version, "excluded": len(req.frame_ids)}

    @app.post("/datasets/{dataset_id}/frames/include", dependencies=guarded)
    def include_frames(dataset_id: str, req: FrameSelection):
        store = open_dataset(dataset_id)
        m = curation.include_frames(store, req.frame_ids)
        return {"version": m.version, "included": len(req.frame_ids)}

    # -- labels ---------------------------------------------------------------

    @app.post("/labels", dependencies=guarded)
    def post_labels(req: LabelsRequest):
        store = open_dataset(req.dataset_id)
        manifest = store.load()
        known = {a.asset_id for a in manifest.assets}
        spans = []
        for p in req.spans:
            _require_hash_id(p.asset_id, "asset id")
            if p.asset_id not in known:
                labeling.register_asset(store, workspace.asset(p.asset_id))
                known.add(p.asset_id)
            spans.append(LabelSpan(asset_id=p.asset_id, label=p.label,
                                   start_s=p.start_s, end_s=p.end_s,
                                   source=p.source, note=p.note))
        m = labeling.add_spans(store, spans)
        return {"version": m.version, "spans": len(m.spans)}

    @app.post("/labels/from-hits", dependencies=guarded)
    def post_labels_from_hits(req: PromoteHitsRequest):
        """Promote search hits to padded, merged, clamped label spans."""
        store = open_dataset(req.dataset_id)
        _require_hash_id(req.asset_id, "asset id")
        asset = workspace.asset(req.asset_id)
        manifest = store.load()
        from ..transcription import SearchHit
        hits = [SearchHit(i, h.start_s, h.end_s, "") for i, h in
                enumerate(req.hits)]
        spans = labeling.spans_from_hits(manifest, asset, hits, req.label,
                                         req.pad_before_s, req.pad_after_s)
        if not any(a.asset_id == req.asset_id for a in manifest.assets):
            labeling.register_asset(store, asset)
        m = labeling.add_spans(store, spans)
        return {"version": m.version, "spans_added": len(spans),
                "spans": [s.to_dict() for s in spans]}

    # -- dataset jobs ---------------------------------------------------------

    @app.post("/datasets/{dataset_id}/extract", status_code=202,
              dependencies=guarded)
    def start_extract(dataset_id: str, req: ExtractRequest,
                      idempotency_key: str = Header("")):
        store = open_dataset(dataset_id)
        fps_cap = req.fps_cap or config.fps_cap
        wanted = set(req.asset_ids or [])

        def run(progress) -> dict:
            manifest = store.load()
            spans = [s for s in manifest.spans
                     if not wanted or s.asset_id in wanted]
            result = labeling.extract_labeled_frames(
                store, workspace, spans, fps_cap=fps_cap,
                context_tags=req.context_tags)
            return {
                "dataset_id": dataset_id,
                "version": result.manifest.version,
                "frames_added": result.frames_added,
                "duplicates_skipped": result.duplicates_skipped,
                "failed_spans": [{"asset_id": s.asset_id, "label": s.label,
                                  "error": err}
                                 for s, err in result.failed_spans],
            }

        job = jobs.submit("extract", run,
                          idempotency_key=idempotency_key or None)
        return {"job_id": job.job_id}

    @app.post("/datasets/{dataset_id}/curate", status_code=202,
              dependencies=guarded)
    def start_curate(dataset_id: str, req: CurateRequest,
                     idempotency_key: str = Header("")):
        store = open_dataset(dataset_id)

        def run(progress) -> dict:
            steps: list[str] = []
            if req.blur_threshold is not None:
                curation.filter_blurry(store, req.blur_threshold)
                steps.append("blur")
            progress(0.25)
            if req.dedup_hamming is not None:
                curation.dedup_near_duplicates(store, req.dedup_hamming)
                steps.append("dedup")
            progress(0.5)
            if req.balance is not None:
                curation.balance(store, req.balance.min_count,
                                 req.balance.max_count, seed=req.balance.seed)
                steps.append("balance")
            progress(0.7)
            if req.split is not None:
                curation.split(store, req.split.train_fraction,
                               seed=req.split.seed)
                steps.append("split")
            progress(0.85)
            if req.normalize:
                curation.compute_normalization(store)
                steps.append("normalize")
            manifest = store.load()
            return {"dataset_id": dataset_id, "version": manifest.version,
                    "steps": steps,
                    "report": curation.curation_report(manifest)}

        job = jobs.submit("curate", run,
                          idempotency_key=idempotency_key or None)
        return {"job_id": job.job_id}

    @app.post("/datasets/{dataset_id}/export", status_code=202,
              dependencies=guarded)
    def start_export(dataset_id: str, req: ExportRequest,
                     idempotency_key: str = Header("")):
        store = open_dataset(dataset_id)

        def run(progress) -> dict:
            summary = release.export(store, workspace.releases_dir,
                                     include_excluded=req.include_excluded)
            doc = summary.to_dict()
            doc["out_dir"] = str(summary.out_dir.relative_to(workspace.root))
            return doc

        job = jobs.submit("export", run,
                          idempotency_key=idempotency_key or None)
        return {"job_id": job.job_id}

    @app.post("/datasets/{dataset_id}/merge", status_code=202,
              dependencies=guarded)
    def start_merge(dataset_id: str, req: MergeRequest,
                    idempotency_key: str = Header("")):
        store = open_dataset(dataset_id)
        for asset_id in req.asset_ids:
            _require_hash_id(asset_id, "asset id")

        def run(progress) -> dict:
            report = release.merge_collection(
                store, workspace, req.asset_ids, req.target_label,
                fps_cap=req.fps_cap or config.fps_cap,
                context_tags=req.context_tags,
                blur_threshold=config.blur_threshold,
                dedup_hamming=config.dedup_hamming)
            return report.to_dict()

        job = jobs.submit("merge", run,
                          idempotency_key=idempotency_key or None)
        return {"job_id": job.job_id}

    # -- evaluation -------------------------------------------------------------

    @app.post("/evaluations", dependencies=guarded)
    async def post_evaluation(request: Request,
                              dataset: str = Query(...),
                              context_tag: str = Query(""),
                              split: str = Query("eval")):
        store = open_dataset(dataset)
        body = (await request.body()).decode("utf-8")
        records = []
        for line_no, line in enumerate(body.splitlines(), 1):
            if not line.strip():
                continue
            try:
                records.append(PredictionRecord.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ModelError) as e:
                raise HTTPException(422, f"line {line_no}: {e}")
        if not records:
            raise HTTPException(422, "empty prediction log")
        manifest = store.load()
        if context_tag:
            report = context_report(records, manifest, context_tag, split=split)
        else:
            report = evaluate(records, manifest, split=split)
        log_id = uuid.uuid4().hex[:16]
        (logs_dir / f"{log_id}.jsonl").write_text(body, encoding="utf-8")
        report_id = uuid.uuid4().hex[:16]
        doc = dict(report.to_dict(), report_id=report_id, dataset_id=dataset,
                   log_id=log_id)
        (reports_dir / f"{report_id}.json").write_text(
            dumps_canonical(doc), encoding="utf-8")
        return doc

    @app.post("/evaluations/vote", dependencies=guarded)
    def post_vote(req: VoteRequest):
        store = open_dataset(req.dataset_id)
        if len(req.log_ids) < 2:
            raise HTTPException(422, "vote needs at least 2 prediction logs")
        logs = []
        for log_id in req.log_ids:
            _require_hash_id(log_id, "log id")
            path = logs_dir / f"{log_id}.jsonl"
            if not path.exists():
                raise HTTPException(404, f"unknown log {log_id}")
            logs.append([PredictionRecord.from_dict(json.loads(line))
                         for line in path.read_text().splitlines()
                         if line.strip()])
        result = majority_vote(logs, store.load(),
                               subset_tag=req.context_tag or None)
        report_id = uuid.uuid4().hex[:16]
        doc = dict(result.report.to_dict(), report_id=report_id,
                   dataset_id=req.dataset_id,
                   coverage_mismatches=result.coverage_mismatches)
        (reports_dir / f"{report_id}.json").write_text(
            dumps_canonical(doc), encoding="utf-8")
        return doc

    @app.post("/evaluations/context", dependencies=guarded)
    def post_context_rescore(req: ContextRescoreRequest):
        """Re-score a stored prediction log against one context subset."""
        store = open_dataset(req.dataset_id)
        _require_hash_id(req.log_id, "log id")
        path = logs_dir / f"{req.log_id}.jsonl"
        if not path.exists():
            raise HTTPException(404, f"unknown log {req.log_id}")
        records = [PredictionRecord.from_dict(json.loads(line))
                   for line in path.read_text().splitlines() if line.strip()]
        report = context_report(records, store.load(), req.context_tag)
        report_id = uuid.uuid4().hex[:16]
        doc = dict(report.to_dict(), report_id=report_id,
                   dataset_id=req.dataset_id, log_id=req.log_id)
        (reports_dir / f"{report_id}.json").write_text(
            dumps_canonical(doc), encoding="utf-8")
        return doc

    @app.get("/reports/{report_id}", dependencies=guarded)
    def get_report(report_id: str):
        _require_hash_id(report_id, "report id")
        path = reports_dir / f"{report_id}.json"
        if not path.exists():
            raise HTTPException(404, f"unknown report {report_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    @app.get("/reports/{report_id}/table", dependencies=guarded,
             response_class=PlainTextResponse)
    def get_report_table(report_id: str):
        doc = get_report(report_id)
        from ..evaluation import EvaluationReport
        report = EvaluationReport(
            classifier_id=doc["classifier_id"],
            per_category=doc["per_category"],
            macro_top1_error_pct=doc["macro_top1_error_pct"],
            macro_top3_error_pct=doc["macro_top3_error_pct"],
            subset_tag=doc.get("subset_tag"), n_scored=doc.get("n_scored", 0),
            rejected=doc.get("rejected", []))
        return render_report_table(report)

    # -- jobs / misc --------------------------------------------------------------

    @app.get("/jobs/{job_id}", dependencies=guarded)
    def get_job(job_id: str):
        _require_hash_id(job_id, "job id")
        try:
            return jobs.get(job_id).to_dict()
        except JobError:
            raise HTTPException(404, f"unknown job {job_id}")

    @app.get("/config")
    def get_ui_config():
        # UI prefills; never exposes credentials or filesystem paths
        return {
            "language": config.language,
            "chunk_len_s": config.chunk_len_s,
            "confidence_threshold": config.confidence_threshold,
            "fps_cap": config.fps_cap,
            "blur_threshold": config.blur_threshold,
            "balance_min": config.balance_min,
            "balance_max": config.balance_max,
            "train_fraction": config.train_fraction,
            "provider": config.provider,
        }

    app_dir = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if app_dir.exists():
        from fastapi.staticfiles import StaticFiles
        app.mount("/app", StaticFiles(directory=app_dir, html=True),
                  name="webapp")

    return app
