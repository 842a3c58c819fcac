// Typed client over the service API. Every screen goes through this module;
// nothing below ever computes a domain value, it only moves payloads.

export interface UiConfig {
  language: string;
  chunk_len_s: number;
  confidence_threshold: number;
  fps_cap: number;
  blur_threshold: number;
  balance_min: number;
  balance_max: number;
  train_fraction: number;
  provider: string;
}

export interface AssetDoc {
  asset_id: string;
  source_name: string;
  container: string;
  duration_s: number;
  frame_rate: number;
  width_px: number;
  height_px: number;
  language: string;
  site_note: string;
}

export interface UtteranceDoc {
  start_s: number;
  end_s: number;
  text: string;
  confidence: number;
}

export interface TranscriptDoc {
  asset_id: string;
  provider_id: string;
  language: string;
  utterances: UtteranceDoc[];
  chunks: Array<{ index: number; start_s: number; end_s: number; status: string }>;
}

export interface SearchHitDoc {
  utterance_index: number;
  start_s: number;
  end_s: number;
  matched_token: string;
}

export interface FrameDoc {
  frame_id: string;
  asset_id: string;
  timestamp_s: number;
  label: string;
  blur_score: number;
  perceptual_hash: string;
  context_tags: string[];
  excluded: boolean;
  exclusion_reason: string;
  exclusion_note: string;
  split: string;
}

export interface JobDoc {
  job_id: string;
  kind: string;
  status: "queued" | "running" | "done" | "failed";
  progress: number;
  result_ref: Record<string, unknown> | null;
  error_detail: string;
}

export interface CategoryRow {
  top1_error_pct: number;
  top3_error_pct: number;
  n: number;
  top1_misses: number;
  top3_misses: number;
}

export interface ReportDoc {
  report_id: string;
  log_id?: string;
  classifier_id: string;
  subset_tag: string | null;
  n_scored: number;
  per_category: Record<string, CategoryRow>;
  macro_top1_error_pct: number;
  macro_top3_error_pct: number;
  rejected: Array<{ frame_id: string; reason: string }>;
}

export interface CurationReportDoc {
  dataset_id: string;
  version: number;
  balance_min: number;
  balance_max: number;
  categories: Record<string, {
    kept: number;
    excluded_by_reason: Record<string, number>;
    deficient: boolean;
  }>;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class Api {
  constructor(private base: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.base + path, init);
    if (!resp.ok) {
      const body = await resp.text();
      throw new ApiError(resp.status, body || resp.statusText);
    }
    return (await resp.json()) as T;
  }

  config(): Promise<UiConfig> {
    return this.request("/config");
  }

  // -- assets --

  uploadAsset(file: File | Blob, filename: string): Promise<AssetDoc> {
    const name = encodeURIComponent(filename);
    return this.request(`/assets?filename=${name}`, {
      method: "POST",
      body: file,
    });
  }

  listAssets(): Promise<AssetDoc[]> {
    return this.request("/assets");
  }

  mediaUrl(assetId: string): string {
    return `${this.base}/assets/${assetId}/media`;
  }

  // -- transcription --

  startTranscribe(assetId: string, body: {
    start_min: number; start_sec: number; end_min: number; end_sec: number;
    chunk_len_s: number; threshold: number; language: string;
    search_term: string;
  }): Promise<{ job_id: string }> {
    return this.request(`/assets/${assetId}/transcribe`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  transcript(assetId: string, threshold = 0): Promise<TranscriptDoc> {
    return this.request(`/assets/${assetId}/transcript?threshold=${threshold}`);
  }

  search(assetId: string, term: string): Promise<{ hits: SearchHitDoc[] }> {
    return this.request(
      `/assets/${assetId}/search?term=${encodeURIComponent(term)}`);
  }

  promoteHits(body: {
    dataset_id: string; asset_id: string; label: string;
    hits: Array<{ start_s: number; end_s: number }>;
    pad_before_s: number; pad_after_s: number;
  }): Promise<{ spans_added: number }> {
    return this.request("/labels/from-hits", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  // -- datasets / curation --

  listDatasets(): Promise<Array<{ dataset_id: string; version: number }>> {
    return this.request("/datasets");
  }

  curationReport(datasetId: string): Promise<CurationReportDoc> {
    return this.request(`/datasets/${datasetId}/report`);
  }

  manifest(datasetId: string): Promise<{ categories: Array<{ slug: string }> }> {
    return this.request(`/datasets/${datasetId}/manifest`);
  }

  frames(datasetId: string, label: string): Promise<FrameDoc[]> {
    const suffix = label ? `?label=${encodeURIComponent(label)}` : "";
    return this.request(`/datasets/${datasetId}/frames${suffix}`);
  }

  frameImageUrl(datasetId: string, frameId: string): string {
    return `${this.base}/datasets/${datasetId}/frames/${frameId}/image`;
  }

  excludeFrames(datasetId: string, frameIds: string[], note: string):
      Promise<{ version: number }> {
    return this.request(`/datasets/${datasetId}/frames/exclude`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ frame_ids: frameIds, note }),
    });
  }

  includeFrames(datasetId: string, frameIds: string[]):
      Promise<{ version: number }> {
    return this.request(`/datasets/${datasetId}/frames/include`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ frame_ids: frameIds }),
    });
  }

  startExport(datasetId: string): Promise<{ job_id: string }> {
    return this.request(`/datasets/${datasetId}/export`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({}),
    });
  }

  // -- evaluation --

  uploadPredictionLog(datasetId: string, jsonl: string,
                      contextTag = ""): Promise<ReportDoc> {
    const tag = contextTag ? `&context_tag=${encodeURIComponent(contextTag)}` : "";
    return this.request(`/evaluations?dataset=${datasetId}${tag}`, {
      method: "POST",
      body: jsonl,
    });
  }

  vote(datasetId: string, logIds: string[]): Promise<ReportDoc> {
    return this.request("/evaluations/vote", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dataset_id: datasetId, log_ids: logIds }),
    });
  }

  contextRescore(datasetId: string, logId: string, tag: string):
      Promise<ReportDoc> {
    return this.request("/evaluations/context", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dataset_id: datasetId, log_id: logId,
                             context_tag: tag }),
    });
  }

  // -- jobs --

  job(jobId: string): Promise<JobDoc> {
    return this.request(`/jobs/${jobId}`);
  }
}
