import { ElementAudioSink, SessionApp } from "./app.js";

// Served from the same origin as the API (the service's static_dir), so the
// base URL stays empty. ?testing_plays=N raises the testing replay budget.
document.addEventListener("DOMContentLoaded", () => {
  const params = new URLSearchParams(window.location.search);
  const plays = Number(params.get("testing_plays") ?? "1");
  const app = new SessionApp(document.getElementById("app") as HTMLElement, {
    sink: new ElementAudioSink(),
    maxTestingPlays: Number.isFinite(plays) && plays > 0 ? plays : 1,
  });
  app.init();
});
