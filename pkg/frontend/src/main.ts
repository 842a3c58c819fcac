// Hash router. The only state that survives a reload is the dataset id and
// screen carried in the URL hash: #/<screen>/<arg>?dataset=<id>

import { Api } from "./api.js";
import { captureTextScreen } from "./captureText.js";
import { dashboardScreen } from "./dashboard.js";
import { clear, el } from "./dom.js";
import { galleryScreen } from "./gallery.js";
import { getLocale, setLocale, t } from "./i18n.js";
import { transcriptScreen } from "./transcript.js";

interface Route {
  screen: string;
  arg: string;
  dataset: string;
}

export function parseHash(hash: string): Route {
  const [path, query] = hash.replace(/^#\/?/, "").split("?");
  const [screen, arg] = path.split("/");
  const dataset = new URLSearchParams(query ?? "").get("dataset") ?? "";
  return { screen: screen || "capture", arg: arg ?? "", dataset };
}

export async function boot(root: HTMLElement, api: Api): Promise<void> {
  const config = await api.config();
  const capture = captureTextScreen(api, config);
  const route0 = parseHash(window.location.hash);
  const datasetOf = () => parseHash(window.location.hash).dataset;
  const transcript = transcriptScreen(api, datasetOf);
  const gallery = galleryScreen(api);
  const dashboard = dashboardScreen(api);

  const tabs = el("nav", { class: "tabs" });
  for (const [screen, key] of [["capture", "nav-capture"],
                               ["transcript", "nav-transcript"],
                               ["gallery", "nav-gallery"],
                               ["dashboard", "nav-dashboard"]] as const) {
    const link = el("a", { href: `#/${screen}`, "data-screen": screen }, t(key));
    link.addEventListener("click", () => {
      const dataset = datasetOf();
      link.setAttribute("href",
                        dataset ? `#/${screen}?dataset=${dataset}` : `#/${screen}`);
    });
    tabs.append(link);
  }
  const localeToggle = el("button", { class: "locale", type: "button" },
                          getLocale() === "en" ? "ID" : "EN");
  localeToggle.addEventListener("click", () => {
    setLocale(getLocale() === "en" ? "id" : "en");
    window.location.reload();
  });
  tabs.append(localeToggle);

  const outlet = el("main", { class: "outlet" });
  clear(root);
  root.append(tabs, outlet);

  async function render(): Promise<void> {
    const route = parseHash(window.location.hash);
    clear(outlet);
    switch (route.screen) {
      case "transcript": {
        outlet.append(transcript.root);
        if (route.arg) await transcript.load(route.arg);
        break;
      }
      case "gallery": {
        outlet.append(gallery.root);
        if (route.dataset) await gallery.load(route.dataset);
        break;
      }
      case "dashboard": {
        outlet.append(dashboard.root);
        dashboard.setDataset(route.dataset);
        break;
      }
      default:
        outlet.append(capture.root);
    }
  }

  window.addEventListener("hashchange", () => { void render(); });
  if (!window.location.hash) {
    window.location.hash = route0.dataset
      ? `#/capture?dataset=${route0.dataset}` : "#/capture";
  }
  await render();
}

declare global {
  interface Window { FIELDPRESS_API?: string }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const api = new Api(window.FIELDPRESS_API ?? "");
  void boot(document.getElementById("app") as HTMLElement, api);
}
