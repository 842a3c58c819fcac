// Evaluation dashboard: upload prediction logs, render per-category top-1 and
// top-3 error bars, Table-style context subsets, and ensemble voting. Every
// number on screen is copied from a report payload; the client never
// recomputes a metric.

import type { Api, ReportDoc } from "./api.js";
import { clear, el, fmtMetric } from "./dom.js";
import { t } from "./i18n.js";

export interface DashboardScreen {
  root: HTMLElement;
  setDataset: (datasetId: string) => void;
  renderReport: (report: ReportDoc) => void;
}

const BAR_WIDTH = 18;
const CHART_HEIGHT = 140;

function svgNode(tag: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

export function dashboardScreen(api: Api): DashboardScreen {
  const logInput = el("input", { id: "d-log", type: "file", accept: ".jsonl" });
  const uploadButton = el("button", { id: "d-upload", type: "button" },
                          t("upload-log"));
  const logList = el("ul", { id: "d-logs", class: "log-list" });
  const voteButton = el("button", { id: "d-vote", type: "button" },
                        t("vote-selected"));
  const tagInput = el("input", {
    id: "d-context-tag", type: "text", placeholder: t("context-tag"),
  });
  const rescoreButton = el("button", { id: "d-rescore", type: "button" },
                           t("rescore"));
  const chart = el("div", { id: "d-chart", class: "chart" });
  const table = el("table", { id: "d-table", class: "report-table" });
  const statusLine = el("p", { id: "d-status", class: "status" });

  let dataset = "";
  const uploaded: Array<{ logId: string; classifier: string; selected: boolean }> = [];
  let lastLogId = "";

  function renderChart(report: ReportDoc): void {
    clear(chart);
    const slugs = Object.keys(report.per_category).sort();
    const width = Math.max(slugs.length * (2 * BAR_WIDTH + 24), 200);
    const svg = svgNode("svg", {
      width, height: CHART_HEIGHT + 40, id: "d-bars",
    });
    slugs.forEach((slug, i) => {
      const row = report.per_category[slug];
      const x0 = i * (2 * BAR_WIDTH + 24) + 8;
      const pairs: Array<[number, string, string]> = [
        [row.top1_error_pct, "bar-top1", `${slug}-top1`],
        [row.top3_error_pct, "bar-top3", `${slug}-top3`],
      ];
      pairs.forEach(([pct, cls, id], j) => {
        const h = (pct / 100) * CHART_HEIGHT;
        svg.append(svgNode("rect", {
          id, class: cls, x: x0 + j * BAR_WIDTH, y: CHART_HEIGHT - h,
          width: BAR_WIDTH - 2, height: h,
          "data-value": fmtMetric(pct),
        }));
      });
      const label = svgNode("text", {
        x: x0, y: CHART_HEIGHT + 14, class: "bar-label", "font-size": 9,
      });
      label.textContent = slug;
      svg.append(label);
    });
    chart.append(svg);
  }

  function renderTable(report: ReportDoc): void {
    clear(table);
    const caption = el("caption", {},
      `${report.classifier_id}` +
      (report.subset_tag ? ` [${report.subset_tag}]` : ""));
    const head = el("tr", {},
      el("th", {}, t("category")),
      el("th", {}, "n"),
      el("th", {}, t("top1")),
      el("th", {}, t("top3")));
    table.append(caption, head);
    for (const slug of Object.keys(report.per_category).sort()) {
      const row = report.per_category[slug];
      table.append(el("tr", { "data-category": slug },
        el("td", {}, slug),
        el("td", { class: "cell-n" }, String(row.n)),
        el("td", { class: "cell-top1" }, fmtMetric(row.top1_error_pct)),
        el("td", { class: "cell-top3" }, fmtMetric(row.top3_error_pct))));
    }
    table.append(el("tr", { class: "macro-row" },
      el("td", {}, "macro"),
      el("td", { class: "cell-n" }, String(report.n_scored)),
      el("td", { class: "cell-top1" }, fmtMetric(report.macro_top1_error_pct)),
      el("td", { class: "cell-top3" }, fmtMetric(report.macro_top3_error_pct))));
  }

  function renderReport(report: ReportDoc): void {
    renderChart(report);
    renderTable(report);
    if (report.rejected.length) {
      statusLine.textContent = `rejected predictions: ${report.rejected.length}`;
    }
  }

  function addLogRow(report: ReportDoc): void {
    if (!report.log_id) return;
    const entry = { logId: report.log_id, classifier: report.classifier_id,
                    selected: true };
    uploaded.push(entry);
    lastLogId = report.log_id;
    const checkbox = el("input", { type: "checkbox", checked: true });
    checkbox.addEventListener("change", () => {
      entry.selected = checkbox.checked;
    });
    const show = el("button", { type: "button", class: "show-log" },
                    report.classifier_id);
    show.addEventListener("click", () => renderReport(report));
    logList.append(el("li", { "data-log-id": report.log_id },
                      checkbox, show));
  }

  uploadButton.addEventListener("click", async () => {
    const file = logInput.files?.[0];
    if (!file || !dataset) return;
    const text = await file.text();
    try {
      const report = await api.uploadPredictionLog(dataset, text);
      addLogRow(report);
      renderReport(report);
    } catch (err) {
      statusLine.textContent = String(err);
    }
  });

  voteButton.addEventListener("click", async () => {
    const ids = uploaded.filter((u) => u.selected).map((u) => u.logId);
    if (ids.length < 2) return;
    try {
      renderReport(await api.vote(dataset, ids));
    } catch (err) {
      statusLine.textContent = String(err);
    }
  });

  rescoreButton.addEventListener("click", async () => {
    const tag = tagInput.value.trim();
    if (!tag || !lastLogId) return;
    try {
      renderReport(await api.contextRescore(dataset, lastLogId, tag));
    } catch (err) {
      statusLine.textContent = String(err);
    }
  });

  const root = el("section", { class: "screen dashboard" },
    el("div", { class: "form-row" }, logInput, uploadButton),
    logList,
    el("div", { class: "form-row" }, voteButton, tagInput, rescoreButton),
    chart,
    table,
    statusLine,
  );

  return {
    root,
    renderReport,
    setDataset(datasetId: string) {
      dataset = datasetId;
    },
  };
}
