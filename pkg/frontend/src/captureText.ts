// Capture-text screen: upload a clip, set the transcription window and
// parameters, run the job, and watch its progress. Field layout and bounds
// follow the interview-processing form this tool grew out of.

import type { Api, UiConfig } from "./api.js";
import {
  CHUNK_LEN,
  KEY_FILE_EXTENSIONS,
  THRESHOLD,
  TIME_FIELD,
  hasAllowedExtension,
  validateCaptureText,
} from "./constraints.js";
import { clear, el } from "./dom.js";
import { SPOKEN_LANGUAGES, t } from "./i18n.js";
import { pollJob } from "./jobs.js";

export interface CaptureTextScreen {
  root: HTMLElement;
  /** Re-runs validation; returns the current error keys. */
  refresh: () => string[];
}

function numberInput(id: string, value: number, min: number, max: number,
                     step: number | "any" = 1): HTMLInputElement {
  return el("input", {
    id, type: "number", value, min, max, step: String(step),
  });
}

export function captureTextScreen(api: Api, config: UiConfig): CaptureTextScreen {
  const videoInput = el("input", {
    id: "ct-video", type: "file", accept: ".webm,.mp4",
  });
  const startMin = numberInput("ct-start-min", 0, TIME_FIELD.min, TIME_FIELD.max);
  const startSec = numberInput("ct-start-sec", 0, TIME_FIELD.min, TIME_FIELD.max);
  const endMin = numberInput("ct-end-min", 0, TIME_FIELD.min, TIME_FIELD.max);
  const endSec = numberInput("ct-end-sec", 0, TIME_FIELD.min, TIME_FIELD.max);
  // prefills come from the server's configuration, not client constants
  const chunkLen = numberInput("ct-chunk-len", config.chunk_len_s,
                               CHUNK_LEN.min, CHUNK_LEN.max);
  const threshold = numberInput("ct-threshold", config.confidence_threshold,
                                THRESHOLD.min, THRESHOLD.max, "any");
  const searchTerm = el("input", {
    id: "ct-search-term", type: "text", placeholder: "searchterm",
  });
  const keyFile = el("input", {
    id: "ct-key-file", type: "file", accept: KEY_FILE_EXTENSIONS.join(","),
  });
  const language = el("select", { id: "ct-language" });
  for (const lang of SPOKEN_LANGUAGES) {
    language.append(el("option", { value: lang.tag }, lang.name));
  }
  language.value = config.language;

  const submit = el("button", { id: "ct-submit", type: "button" },
                    t("capture-text"));
  const viewVideo = el("button", { id: "ct-view-video", type: "button" },
                       t("view-video"));
  const errorBox = el("ul", { id: "ct-errors", class: "errors" });
  const statusLine = el("p", { id: "ct-status", class: "status" });
  const progressBar = el("progress", { id: "ct-progress", max: 1, value: 0 });
  const player = el("video", { id: "ct-player", controls: true, width: 480 });

  function currentValues() {
    const file = videoInput.files?.[0] ?? null;
    return {
      file,
      values: {
        filename: file?.name ?? "",
        startMin: Number(startMin.value),
        startSec: Number(startSec.value),
        endMin: Number(endMin.value),
        endSec: Number(endSec.value),
        chunkLenS: Number(chunkLen.value),
        threshold: Number(threshold.value),
        searchTerm: searchTerm.value,
        language: language.value,
      },
    };
  }

  function refresh(): string[] {
    const { values } = currentValues();
    const errors = validateCaptureText(values);
    clear(errorBox);
    for (const key of errors) {
      errorBox.append(el("li", { class: "error" }, t(key)));
    }
    submit.disabled = errors.length > 0;
    return errors;
  }

  for (const field of [videoInput, startMin, startSec, endMin, endSec,
                       chunkLen, threshold, searchTerm]) {
    field.addEventListener("input", refresh);
    field.addEventListener("change", refresh);
  }

  async function run(): Promise<void> {
    const { file, values } = currentValues();
    if (refresh().length > 0 || !file) return;
    submit.disabled = true;
    statusLine.textContent = t("uploading");
    try {
      const asset = await api.uploadAsset(file, file.name);
      player.src = api.mediaUrl(asset.asset_id);
      statusLine.textContent = `${t("transcribing")} ${t("capture-takes-time")}`;
      const { job_id } = await api.startTranscribe(asset.asset_id, {
        start_min: values.startMin,
        start_sec: values.startSec,
        end_min: values.endMin,
        end_sec: values.endSec,
        chunk_len_s: values.chunkLenS,
        threshold: values.threshold,
        language: values.language,
        search_term: values.searchTerm.trim(),
      });
      const job = await pollJob(api, job_id, (j) => {
        progressBar.value = j.progress;
      });
      if (job.status === "done") {
        const kept = job.result_ref?.["utterances_at_threshold"];
        statusLine.textContent = `${t("job-done")}: ${kept} ${t("utterances")}`;
        window.location.hash = `#/transcript/${asset.asset_id}`;
      } else {
        statusLine.textContent = `${t("job-failed")}: ${job.error_detail}`;
      }
    } catch (err) {
      statusLine.textContent = `${t("job-failed")}: ${err}`;
    } finally {
      submit.disabled = false;
    }
  }

  submit.addEventListener("click", () => { void run(); });
  viewVideo.addEventListener("click", () => {
    const file = videoInput.files?.[0];
    if (file && hasAllowedExtension(file.name, [".webm", ".mp4"])) {
      player.src = URL.createObjectURL(file);
    }
  });

  const row = (input: HTMLElement, labelKey: string) =>
    el("div", { class: "form-row" },
       input, el("label", { for: input.id }, t(labelKey)));

  const root = el("section", { class: "screen capture-text" },
    row(videoInput, "choose-video"),
    row(startMin, "start-minute"),
    row(startSec, "start-second"),
    row(endMin, "end-minute"),
    row(endSec, "end-second"),
    row(chunkLen, "chunk-length"),
    row(threshold, "confidence-threshold"),
    row(searchTerm, "search-term"),
    row(keyFile, "key-file"),
    row(language, "language-spoken"),
    el("p", { class: "caveat" }, t("capture-takes-time")),
    el("div", { class: "form-actions" }, viewVideo, submit),
    errorBox,
    statusLine,
    progressBar,
    player,
  );
  refresh();
  return { root, refresh };
}
