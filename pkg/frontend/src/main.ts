import { ApiError, FaregridClient } from "./api";
import { EstimateFlow, JourneyForm, canSubmit, parseEndpoint } from "./form";
import { renderHeatmap, renderHeatmapEmpty } from "./heatmap";

const client = new FaregridClient();
const form: JourneyForm = { origin: null, destination: null };

const $ = (id: string) => document.getElementById(id)!;

function bindEndpoint(inputId: string, key: "origin" | "destination"): void {
  $(inputId).addEventListener("input", (ev) => {
    form[key] = parseEndpoint((ev.target as HTMLInputElement).value);
    ($("go") as HTMLButtonElement).disabled = !canSubmit(form);
  });
}

function markBlame(html: string): void {
  // out-of-grid banners carry data-blame; reflect it on the matching input
  $("origin").classList.remove("bad");
  $("destination").classList.remove("bad");
  const m = html.match(/data-blame="(origin|destination)"/);
  if (m) $(m[1]).classList.add("bad");
}

async function openHeatmap(): Promise<void> {
  const pane = $("heatmap-pane");
  try {
    pane.innerHTML = renderHeatmap(await client.heatmap());
  } catch (err) {
    if (err instanceof ApiError) pane.innerHTML = renderHeatmapEmpty(err);
    else throw err;
  }
}

function switchTab(which: "journey" | "heatmap"): void {
  $("journey-tab").hidden = which !== "journey";
  $("heatmap-tab").hidden = which !== "heatmap";
  if (which === "heatmap") void openHeatmap();
}

const flow = new EstimateFlow(client, (html) => {
  $("verdict").innerHTML = html;
  markBlame(html);
});

bindEndpoint("origin", "origin");
bindEndpoint("destination", "destination");
$("go").addEventListener("click", () => void flow.submit(form, "web"));
$("show-journey").addEventListener("click", () => switchTab("journey"));
$("show-heatmap").addEventListener("click", () => switchTab("heatmap"));
switchTab("journey");
