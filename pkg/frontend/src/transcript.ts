// Transcript review: confidence-badged utterances, live threshold filtering
// (always refetched, never filtered client-side), click-to-seek into the
// original video, and hit promotion to label spans.

import type { Api, SearchHitDoc, TranscriptDoc } from "./api.js";
import { clear, el, fmtSeconds } from "./dom.js";
import { t } from "./i18n.js";

export interface TranscriptScreen {
  root: HTMLElement;
  load: (assetId: string) => Promise<void>;
  /** Present for tests: the embedded player. */
  player: HTMLVideoElement;
}

export function transcriptScreen(api: Api, datasetId: () => string): TranscriptScreen {
  const player = el("video", { id: "tr-player", controls: true, width: 480 });
  const slider = el("input", {
    id: "tr-threshold", type: "range", min: 0, max: 1, step: 0.05, value: 0,
  });
  const sliderValue = el("span", { id: "tr-threshold-value" }, "0.00");
  const utteranceList = el("ol", { id: "tr-utterances", class: "utterances" });
  const searchBox = el("input", {
    id: "tr-search", type: "text", placeholder: t("search-term"),
  });
  const searchButton = el("button", { id: "tr-search-go", type: "button" }, "search");
  const hitList = el("ul", { id: "tr-hits", class: "hits" });
  const statusLine = el("p", { class: "status" });

  const labelInput = el("input", {
    id: "tr-label", type: "text", placeholder: t("label"),
  });
  const padBefore = el("input", {
    id: "tr-pad-before", type: "number", value: 2, min: 0, step: "0.5",
  });
  const padAfter = el("input", {
    id: "tr-pad-after", type: "number", value: 5, min: 0, step: "0.5",
  });

  let currentAsset = "";
  let currentHits: SearchHitDoc[] = [];

  function seek(seconds: number): void {
    player.currentTime = seconds;
  }

  function renderTranscript(doc: TranscriptDoc): void {
    clear(utteranceList);
    for (const u of doc.utterances) {
      const badge = el("span", { class: "badge" }, u.confidence.toFixed(2));
      const item = el("li", { class: "utterance", "data-start": u.start_s },
                      badge, ` [${fmtSeconds(u.start_s)} - ${fmtSeconds(u.end_s)}] `,
                      u.text);
      item.addEventListener("click", () => seek(u.start_s));
      utteranceList.append(item);
    }
  }

  async function refetch(): Promise<void> {
    if (!currentAsset) return;
    const threshold = Number(slider.value);
    sliderValue.textContent = threshold.toFixed(2);
    try {
      renderTranscript(await api.transcript(currentAsset, threshold));
    } catch {
      statusLine.textContent = t("no-transcript");
    }
  }

  slider.addEventListener("input", () => { void refetch(); });

  async function runSearch(): Promise<void> {
    if (!currentAsset || !searchBox.value.trim()) return;
    const { hits } = await api.search(currentAsset, searchBox.value.trim());
    currentHits = hits;
    clear(hitList);
    for (const hit of hits) {
      const promote = el("button", { class: "promote", type: "button" },
                         t("promote-hit"));
      promote.addEventListener("click", () => { void promoteHit(hit); });
      const item = el("li", { class: "hit", "data-start": hit.start_s },
                      `${hit.matched_token} @ ${fmtSeconds(hit.start_s)} `,
                      promote);
      item.addEventListener("click", (event) => {
        if (event.target === promote) return;
        seek(hit.start_s);
      });
      hitList.append(item);
    }
  }

  searchButton.addEventListener("click", () => { void runSearch(); });

  async function promoteHit(hit: SearchHitDoc): Promise<void> {
    const dataset = datasetId();
    if (!dataset || !labelInput.value.trim()) return;
    const result = await api.promoteHits({
      dataset_id: dataset,
      asset_id: currentAsset,
      label: labelInput.value.trim(),
      hits: [{ start_s: hit.start_s, end_s: hit.end_s }],
      pad_before_s: Number(padBefore.value),
      pad_after_s: Number(padAfter.value),
    });
    statusLine.textContent = `+${result.spans_added} spans`;
  }

  const root = el("section", { class: "screen transcript" },
    player,
    el("div", { class: "form-row" },
       slider, sliderValue, el("label", { for: slider.id }, t("threshold-slider"))),
    el("h3", {}, t("utterances")),
    utteranceList,
    el("div", { class: "form-row" }, searchBox, searchButton),
    el("h3", {}, t("hits")),
    hitList,
    el("div", { class: "form-row promote-controls" },
       labelInput, el("label", { for: labelInput.id }, t("label")),
       padBefore, el("label", { for: padBefore.id }, t("pad-before")),
       padAfter, el("label", { for: padAfter.id }, t("pad-after"))),
    statusLine,
  );

  return {
    root,
    player,
    async load(assetId: string) {
      currentAsset = assetId;
      player.src = api.mediaUrl(assetId);
      await refetch();
    },
  };
}
