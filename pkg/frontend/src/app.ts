/** Single-page bootstrap: two tabs over the same service client. */

import { ApiClient } from "./api.js";
import { CalibrationView } from "./calibration.js";
import { ConductView } from "./conduct.js";

export function startApp(root: HTMLElement, baseUrl = ""): void {
  root.innerHTML = `
    <header>
      <h1>dosepick</h1>
      <nav>
        <button data-tab="calibration" class="active">calibration</button>
        <button data-tab="conduct">conduct</button>
      </nav>
    </header>
    <main>
      <div id="tab-calibration"></div>
      <div id="tab-conduct" hidden></div>
    </main>
  `;
  const api = new ApiClient(baseUrl);
  const calibration = new CalibrationView(
    root.querySelector("#tab-calibration") as HTMLElement, api);
  const conduct = new ConductView(
    root.querySelector("#tab-conduct") as HTMLElement, api);
  calibration.mount();
  conduct.mount();

  root.querySelectorAll("nav button").forEach((btn) => {
    btn.addEventListener("click", () => {
      root.querySelectorAll("nav button").forEach((b) => b.classList.remove("active"));
      btn.classList.add("active");
      const tab = (btn as HTMLElement).dataset.tab;
      (root.querySelector("#tab-calibration") as HTMLElement).hidden = tab !== "calibration";
      (root.querySelector("#tab-conduct") as HTMLElement).hidden = tab !== "conduct";
    });
  });
}

declare global {
  interface Window {
    dosepickStart?: typeof startApp;
  }
}

if (typeof window !== "undefined") {
  window.dosepickStart = startApp;
  const mount = document.getElementById("app");
  if (mount) startApp(mount, mount.dataset.apiBase ?? "");
}
