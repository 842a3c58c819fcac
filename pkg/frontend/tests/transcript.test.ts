// @vitest-environment happy-dom
import { beforeEach, describe, expect, it, vi } from "vitest";

import { Api } from "../src/api.js";
import { transcriptScreen } from "../src/transcript.js";

const ASSET = "c".repeat(16);

const TRANSCRIPT = {
  asset_id: ASSET,
  provider_id: "offline",
  language: "id-ID",
  utterances: [
    { start_s: 2.0, end_s: 3.5, text: "ini kayu manis", confidence: 0.93 },
    { start_s: 12.3, end_s: 13.1, text: "pohon durian", confidence: 0.41 },
  ],
  chunks: [{ index: 0, start_s: 0, end_s: 30, status: "ok" }],
};

function mockFetch(onUrl: (url: string, init?: RequestInit) => unknown) {
  globalThis.fetch = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const result = onUrl(String(input), init);
    return Response.json(result as object);
  }) as typeof fetch;
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("transcript review", () => {
  it("renders utterances with confidence badges", async () => {
    mockFetch(() => TRANSCRIPT);
    const screen = transcriptScreen(new Api(""), () => "field");
    document.body.append(screen.root);
    await screen.load(ASSET);
    const items = document.querySelectorAll("#tr-utterances li");
    expect(items.length).toBe(2);
    expect(items[0].querySelector(".badge")!.textContent).toBe("0.93");
  });

  it("threshold slider refetches from the server, never filters locally",
     async () => {
    const requested: string[] = [];
    mockFetch((url) => {
      requested.push(url);
      const threshold = Number(new URL(url, "http://x").searchParams
        .get("threshold"));
      return {
        ...TRANSCRIPT,
        utterances: TRANSCRIPT.utterances
          .filter((u) => u.confidence >= threshold),
      };
    });
    const screen = transcriptScreen(new Api(""), () => "field");
    document.body.append(screen.root);
    await screen.load(ASSET);

    const slider = document.getElementById("tr-threshold") as HTMLInputElement;
    slider.value = "1";
    slider.dispatchEvent(new Event("input"));
    await vi.waitFor(() => {
      expect(document.querySelectorAll("#tr-utterances li").length).toBe(0);
    });
    // the filtering happened server-side: a request carried threshold=1
    expect(requested.some((u) => u.includes("threshold=1"))).toBe(true);
  });

  it("clicking an utterance seeks the player to its start", async () => {
    mockFetch(() => TRANSCRIPT);
    const screen = transcriptScreen(new Api(""), () => "field");
    document.body.append(screen.root);
    await screen.load(ASSET);
    const second = document.querySelectorAll("#tr-utterances li")[1] as HTMLElement;
    second.click();
    expect(Math.abs(screen.player.currentTime - 12.3)).toBeLessThanOrEqual(0.3);
  });

  it("search lists hits and promote posts a span request", async () => {
    const posts: Array<{ url: string; body: unknown }> = [];
    mockFetch((url, init) => {
      if (url.includes("/search")) {
        return { hits: [{ utterance_index: 0, start_s: 2.0, end_s: 3.5,
                          matched_token: "manis" }] };
      }
      if (url.includes("/labels/from-hits")) {
        posts.push({ url, body: JSON.parse(String(init?.body)) });
        return { spans_added: 1, version: 4, spans: [] };
      }
      return TRANSCRIPT;
    });
    const screen = transcriptScreen(new Api(""), () => "field");
    document.body.append(screen.root);
    await screen.load(ASSET);

    (document.getElementById("tr-search") as HTMLInputElement).value = "manis";
    (document.getElementById("tr-search-go") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(document.querySelectorAll("#tr-hits li").length).toBe(1);
    });

    (document.getElementById("tr-label") as HTMLInputElement).value = "cinnamon";
    (document.getElementById("tr-pad-before") as HTMLInputElement).value = "1";
    (document.getElementById("tr-pad-after") as HTMLInputElement).value = "3";
    (document.querySelector("#tr-hits .promote") as HTMLButtonElement).click();
    await vi.waitFor(() => expect(posts.length).toBe(1));
    expect(posts[0].body).toMatchObject({
      dataset_id: "field",
      asset_id: ASSET,
      label: "cinnamon",
      hits: [{ start_s: 2.0, end_s: 3.5 }],
      pad_before_s: 1,
      pad_after_s: 3,
    });
  });
});
