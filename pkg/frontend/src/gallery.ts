// Curation gallery: per-category frame grid in timestamp order, exclusion
// badges, multi-select include/exclude, a kept-count meter against the
// dataset's balance bounds, and the release trigger. Counts always come from
// the server's curation report, never from counting DOM nodes.

import type { Api, CurationReportDoc, FrameDoc } from "./api.js";
import { clear, el } from "./dom.js";
import { t } from "./i18n.js";
import { pollJob } from "./jobs.js";

export interface GalleryScreen {
  root: HTMLElement;
  load: (datasetId: string) => Promise<void>;
  reload: () => Promise<void>;
}

export function galleryScreen(api: Api): GalleryScreen {
  const categorySelect = el("select", { id: "g-category" });
  const meter = el("div", { id: "g-meter", class: "meter" });
  const grid = el("div", { id: "g-grid", class: "grid" });
  const excludeButton = el("button", { id: "g-exclude", type: "button" },
                           t("exclude-selected"));
  const includeButton = el("button", { id: "g-include", type: "button" },
                           t("include-selected"));
  const noteInput = el("input", {
    id: "g-note", type: "text", placeholder: "note",
  });
  const releaseButton = el("button", { id: "g-release", type: "button" },
                           t("release-data"));
  const statusLine = el("p", { id: "g-status", class: "status" });

  let dataset = "";
  const selection = new Set<string>();

  function renderMeter(report: CurationReportDoc, label: string): void {
    clear(meter);
    const row = report.categories[label];
    if (!row) return;
    const kept = el("span", { id: "g-kept", class: "kept" },
                    `${t("kept")}: ${row.kept}`);
    const bounds = el("span", { class: "bounds" },
                      ` / ${report.balance_min}-${report.balance_max}`);
    meter.append(kept, bounds);
    if (row.deficient) {
      meter.append(el("span", { id: "g-deficient", class: "warning" },
                      ` ${t("deficient-warning")}`));
    }
    const excluded = Object.entries(row.excluded_by_reason)
      .map(([reason, count]) => `${reason}: ${count}`).join(", ");
    if (excluded) {
      meter.append(el("span", { class: "excluded-summary" }, ` (${excluded})`));
    }
  }

  function card(frame: FrameDoc): HTMLElement {
    const img = el("img", {
      src: api.frameImageUrl(dataset, frame.frame_id),
      width: 96, height: 72, loading: "lazy",
    });
    const badges = el("div", { class: "badges" });
    if (frame.excluded) {
      badges.append(el("span", { class: `badge badge-${frame.exclusion_reason}` },
                       frame.exclusion_reason));
    }
    const box = el("div", {
      class: `card${frame.excluded ? " excluded" : ""}`,
      "data-frame-id": frame.frame_id,
      "data-timestamp": frame.timestamp_s,
    }, img, badges, el("div", { class: "stamp" }, `${frame.timestamp_s.toFixed(1)}s`));
    box.addEventListener("click", () => {
      if (selection.has(frame.frame_id)) {
        selection.delete(frame.frame_id);
        box.classList.remove("selected");
      } else {
        selection.add(frame.frame_id);
        box.classList.add("selected");
      }
    });
    return box;
  }

  async function reload(): Promise<void> {
    if (!dataset) return;
    selection.clear();
    const label = categorySelect.value;
    const [frames, report] = await Promise.all([
      api.frames(dataset, label),
      api.curationReport(dataset),
    ]);
    renderMeter(report, label);
    clear(grid);
    for (const frame of frames.sort((a, b) => a.timestamp_s - b.timestamp_s)) {
      grid.append(card(frame));
    }
  }

  categorySelect.addEventListener("change", () => { void reload(); });

  excludeButton.addEventListener("click", async () => {
    if (!selection.size) return;
    await api.excludeFrames(dataset, [...selection], noteInput.value);
    await reload();
  });

  includeButton.addEventListener("click", async () => {
    if (!selection.size) return;
    await api.includeFrames(dataset, [...selection]);
    await reload();
  });

  releaseButton.addEventListener("click", async () => {
    statusLine.textContent = t("export-started");
    const { job_id } = await api.startExport(dataset);
    const job = await pollJob(api, job_id);
    if (job.status === "done") {
      const out = job.result_ref?.["out_dir"];
      const digest = job.result_ref?.["digest"];
      statusLine.textContent = `${t("job-done")}: ${out} (${digest})`;
    } else {
      statusLine.textContent = `${t("job-failed")}: ${job.error_detail}`;
    }
  });

  const root = el("section", { class: "screen gallery" },
    el("div", { class: "form-row" },
       categorySelect, el("label", { for: categorySelect.id }, t("label"))),
    meter,
    grid,
    el("div", { class: "form-actions" },
       noteInput, excludeButton, includeButton, releaseButton),
    statusLine,
  );

  return {
    root,
    reload,
    async load(datasetId: string) {
      dataset = datasetId;
      const manifest = await api.manifest(datasetId);
      clear(categorySelect);
      for (const cat of manifest.categories) {
        categorySelect.append(el("option", { value: cat.slug }, cat.slug));
      }
      await reload();
    },
  };
}
