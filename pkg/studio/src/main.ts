// DOM glue: a small hash-routed single-page client over the state models.
// Views: annotate (draw tracks on a pre-event image), judge (side-by-side
// 2AFC), reason (job console). Overlay and heatmap previews are rendered
// server-side and displayed as images.

import { ApiError, StudioApi } from "./api.js";
import { AnnotationModel } from "./annotate.js";
import { JudgeModel } from "./judge.js";
import { ReasonConsole } from "./reason.js";
import type { BenchItemSummary, PresentedWinner, StrengthLabel } from "./types.js";

const api = new StudioApi("");
const app = document.getElementById("app") as HTMLDivElement;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = []
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) node.append(child);
  return node;
}

function blobUrl(buffer: ArrayBuffer): string {
  return URL.createObjectURL(new Blob([buffer], { type: "image/png" }));
}

async function pickItem(onPick: (item: BenchItemSummary) => void): Promise<HTMLElement> {
  const listing = await api.listItems();
  const select = el("select", { class: "item-picker" });
  for (const item of listing.items) {
    select.append(el("option", { value: item.id }, [`${item.id} (${item.category})`]));
  }
  const button = el("button", {}, ["Load"]);
  button.addEventListener("click", () => {
    const item = listing.items.find((i) => i.id === select.value);
    if (item) onPick(item);
  });
  return el("div", { class: "row" }, [select, button]);
}

// --- annotate view ----------------------------------------------------------

async function annotateView(): Promise<void> {
  app.replaceChildren(el("h2", {}, ["Annotate"]));
  app.append(
    await pickItem((item) => {
      void openAnnotator(item);
    })
  );
}

async function openAnnotator(item: BenchItemSummary): Promise<void> {
  const detail = await api.getItem(item.id);
  const model = new AnnotationModel(detail.width, detail.height);
  model.loadManifest(detail.manifest);

  const canvas = el("canvas", {
    width: String(detail.width * 4),
    height: String(detail.height * 4),
    class: "annotate-canvas",
  });
  const ctx = canvas.getContext("2d")!;
  const image = new Image();
  image.src = detail.image_url;

  const status = el("p", { class: "status" });
  const trackPanel = el("div", { class: "track-panel" });
  const overlayPreview = el("img", { class: "preview", alt: "server overlay preview" });
  const heatmapPreview = el("img", { class: "preview", alt: "server heatmap preview" });

  const scaleX = () => canvas.width / detail.width;
  const scaleY = () => canvas.height / detail.height;

  function redraw(): void {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (image.complete) ctx.drawImage(image, 0, 0, canvas.width, canvas.height);
    for (const track of model.tracks) {
      ctx.strokeStyle = track.kind === "user" ? "#00c800" :
        track.kind === "refined_user" ? "#dc0000" : "#005ae6";
      ctx.fillStyle = ctx.strokeStyle;
      ctx.lineWidth = track.selected ? 3 : 2;
      ctx.beginPath();
      track.points.forEach(([x, y], i) => {
        const px = x * scaleX();
        const py = y * scaleY();
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.stroke();
      for (const [x, y] of track.points) {
        ctx.beginPath();
        ctx.arc(x * scaleX(), y * scaleY(), track.selected ? 5 : 3, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
    renderTrackPanel();
  }
  image.addEventListener("load", redraw);

  function renderTrackPanel(): void {
    trackPanel.replaceChildren();
    for (const track of model.tracks) {
      const kindSelect = el("select", {});
      for (const kind of ["user", "refined_user", "secondary", "static"]) {
        const option = el("option", { value: kind }, [kind]);
        if (kind === track.kind) option.setAttribute("selected", "selected");
        kindSelect.append(option);
      }
      kindSelect.addEventListener("change", () => {
        model.setKind(track.id, kindSelect.value as never);
        redraw();
      });
      const confidence = el("input", {
        type: "number", min: "0", max: "1", step: "0.05", value: String(track.confidence),
      });
      confidence.addEventListener("change", () => {
        try {
          model.setConfidence(track.id, Number(confidence.value));
          status.textContent = "";
        } catch (err) {
          status.textContent = String(err);
        }
      });
      const select = el("button", {}, [track.selected ? "selected" : "select"]);
      select.addEventListener("click", () => {
        model.selectTrack(track.id);
        redraw();
      });
      const remove = el("button", {}, ["delete"]);
      remove.addEventListener("click", () => {
        model.removeTrack(track.id);
        redraw();
      });
      trackPanel.append(
        el("div", { class: "track-row" }, [
          el("span", { class: "track-id" }, [`${track.id} (${track.points.length} pts)`]),
          kindSelect, confidence, select, remove,
        ])
      );
    }
  }

  let dragTarget: { trackId: string; pointIndex: number } | null = null;

  function canvasCoords(event: MouseEvent): [number, number] {
    const rect = canvas.getBoundingClientRect();
    const x = ((event.clientX - rect.left) / rect.width) * detail.width;
    const y = ((event.clientY - rect.top) / rect.height) * detail.height;
    return [x / detail.width, y / detail.height];
  }

  canvas.addEventListener("mousedown", (event) => {
    const [nx, ny] = canvasCoords(event);
    for (const track of model.tracks) {
      for (let i = 0; i < track.points.length; i += 1) {
        const [tx, ty] = track.points[i];
        const dist = Math.hypot((tx - nx) * detail.width, (ty - ny) * detail.height);
        if (dist < 3) {
          dragTarget = { trackId: track.id, pointIndex: i };
          return;
        }
      }
    }
  });
  canvas.addEventListener("mousemove", (event) => {
    if (!dragTarget) return;
    const [nx, ny] = canvasCoords(event);
    model.dragPoint(dragTarget.trackId, dragTarget.pointIndex, nx, ny);
    redraw();
  });
  canvas.addEventListener("mouseup", () => {
    dragTarget = null;
  });
  canvas.addEventListener("click", (event) => {
    if (dragTarget) return;
    if (!model.selected) model.startTrack("user");
    const [nx, ny] = canvasCoords(event);
    model.addPoint(nx, ny);
    redraw();
  });

  const newTrack = el("button", {}, ["New track"]);
  newTrack.addEventListener("click", () => {
    model.startTrack("user");
    redraw();
  });

  const preview = el("button", {}, ["Preview overlay + heatmap"]);
  preview.addEventListener("click", async () => {
    const error = model.validationError();
    if (error) {
      status.textContent = error;
      return;
    }
    try {
      const manifest = model.toManifest();
      overlayPreview.src = blobUrl(await api.renderOverlay(item.id, manifest));
      heatmapPreview.src = blobUrl(await api.renderHeatmap(item.id, manifest, 0));
      status.textContent = "";
    } catch (err) {
      status.textContent = err instanceof ApiError ? err.detail : String(err);
    }
  });

  const save = el("button", { class: "primary" }, ["Save annotation"]);
  save.addEventListener("click", async () => {
    const error = model.validationError();
    if (error) {
      status.textContent = error;
      return;
    }
    try {
      const saved = await api.saveAnnotation(item.id, model.toManifest());
      status.textContent = `saved revision ${saved.revision}`;
    } catch (err) {
      status.textContent = err instanceof ApiError ? err.detail : String(err);
    }
  });

  app.replaceChildren(
    el("h2", {}, [`Annotate: ${item.id}`]),
    el("p", { class: "hint" }, [
      "Click to add points to the selected track; drag a point to adjust. ",
      `Prompt: ${detail.prompt ?? "(none)"}`,
    ]),
    el("div", { class: "row" }, [newTrack, preview, save]),
    status,
    el("div", { class: "annotate-layout" }, [
      canvas,
      el("div", {}, [trackPanel, overlayPreview, heatmapPreview]),
    ])
  );
  redraw();
}

// --- judge view -------------------------------------------------------------

async function judgeView(): Promise<void> {
  const participant = el("input", { type: "text", placeholder: "participant name" });
  const tokenInput = el("input", { type: "text", placeholder: "or resume with a session token" });
  const start = el("button", { class: "primary" }, ["Start session"]);
  const resume = el("button", {}, ["Resume"]);
  const status = el("p", { class: "status" });

  start.addEventListener("click", async () => {
    try {
      const session = await api.createSession(participant.value || "anonymous");
      await runJudgeFlow(session.token);
    } catch (err) {
      status.textContent = err instanceof ApiError ? err.detail : String(err);
    }
  });
  resume.addEventListener("click", async () => {
    if (tokenInput.value) await runJudgeFlow(tokenInput.value.trim());
  });

  app.replaceChildren(
    el("h2", {}, ["Judge"]),
    el("div", { class: "row" }, [participant, start]),
    el("div", { class: "row" }, [tokenInput, resume]),
    status
  );
}

async function runJudgeFlow(token: string): Promise<void> {
  const model = new JudgeModel(api, token);
  await model.loadNext();

  function render(): void {
    if (model.completed) {
      app.replaceChildren(
        el("h2", {}, ["Session complete"]),
        el("p", {}, [`All ${model.descriptor?.total ?? 0} comparisons are recorded. Thank you.`]),
        el("p", { class: "hint" }, [`Session token: ${token}`])
      );
      return;
    }
    const d = model.descriptor!;
    const winnerButtons = (["first", "second", "tie"] as PresentedWinner[]).map((winner) => {
      const button = el(
        "button",
        { class: model.winner === winner ? "choice active" : "choice" },
        [winner === "first" ? "Left video" : winner === "second" ? "Right video" : "Tie"]
      );
      button.addEventListener("click", () => {
        model.selectWinner(winner);
        render();
      });
      return button;
    });
    const strengthButtons = (["slight", "moderate", "strong"] as StrengthLabel[]).map((strength) => {
      const button = el("button", {
        class: model.strength === strength ? "choice active" : "choice",
        ...(model.strengthPickerEnabled ? {} : { disabled: "disabled" }),
      }, [strength]);
      button.addEventListener("click", () => {
        model.selectStrength(strength);
        render();
      });
      return button;
    });
    const submit = el(
      "button",
      { class: "primary", ...(model.canSubmit ? {} : { disabled: "disabled" }) },
      ["Submit verdict"]
    );
    submit.addEventListener("click", async () => {
      await model.submit();
      render();
    });

    app.replaceChildren(
      el("h2", {}, [`Judge ${model.progressLabel}`]),
      el("p", { class: "hint" }, [`Criterion: ${d.metric}. Prompt: ${d.prompt}`]),
      el("div", { class: "judge-context" }, [
        el("img", { src: d.context_frame_url!, alt: "context frame" }),
        el("img", { src: d.overlay_url!, alt: "trajectory overlay" }),
      ]),
      el("div", { class: "judge-videos" }, [
        el("img", { src: d.video_first_url!, alt: "candidate video (left)" }),
        el("img", { src: d.video_second_url!, alt: "candidate video (right)" }),
      ]),
      el("div", { class: "row" }, winnerButtons),
      el("div", { class: "row" }, strengthButtons),
      el("div", { class: "row" }, [submit]),
      el("p", { class: "status" }, [model.error ?? ""])
    );
  }
  render();
}

// --- reason view --------------------------------------------------------------

async function reasonView(): Promise<void> {
  app.replaceChildren(el("h2", {}, ["Reasoning console"]));
  app.append(
    await pickItem((item) => {
      void runReasonConsole(item.id);
    })
  );
}

async function runReasonConsole(itemId: string): Promise<void> {
  const console_ = new ReasonConsole(api, itemId);
  const status = el("p", { class: "status" });
  const roundsBox = el("div", { class: "rounds" });
  const startButton = el("button", { class: "primary" }, ["Start reasoning"]);
  const acceptButton = el("button", {}, ["Accept plan"]);
  const moreButton = el("button", {}, ["One more round"]);
  const editButton = el("button", {}, ["Edit tracks"]);

  function renderRounds(): void {
    roundsBox.replaceChildren();
    for (const round of console_.rounds) {
      roundsBox.append(
        el("div", { class: "round-card" }, [
          el("h4", {}, [`Round ${round.round}${round.done ? " (done)" : ""}`]),
          el("p", {}, [round.narrative_prompt]),
          el("p", { class: "hint" }, [`${round.n_tracks} tracks`]),
          el("img", { src: round.overlay_url, alt: `round ${round.round} overlay` }),
        ])
      );
    }
  }

  async function runJob(maxRounds?: number): Promise<void> {
    status.textContent = "running...";
    try {
      await console_.start(maxRounds);
      await console_.pollUntilDone();
      if (console_.status === "failed") {
        status.textContent = `job failed: ${console_.error}`;
        status.className = "status error-banner";
      } else {
        status.textContent = "plan ready";
        status.className = "status";
      }
      renderRounds();
    } catch (err) {
      status.textContent = String(err);
    }
  }

  startButton.addEventListener("click", () => void runJob());
  acceptButton.addEventListener("click", async () => {
    try {
      const revision = await console_.accept();
      status.textContent = `accepted as revision ${revision}`;
    } catch (err) {
      status.textContent = String(err);
    }
  });
  moreButton.addEventListener("click", () => {
    void (async () => {
      try {
        await console_.anotherRound();
        await console_.pollUntilDone();
        renderRounds();
        status.textContent = "extra round complete";
      } catch (err) {
        status.textContent = String(err);
      }
    })();
  });
  editButton.addEventListener("click", () => {
    window.location.hash = "#/annotate";
  });

  app.replaceChildren(
    el("h2", {}, [`Reasoning: ${itemId}`]),
    el("div", { class: "row" }, [startButton, acceptButton, moreButton, editButton]),
    status,
    roundsBox
  );
}

// --- router --------------------------------------------------------------------

const routes: Record<string, () => Promise<void>> = {
  "#/annotate": annotateView,
  "#/judge": judgeView,
  "#/reason": reasonView,
};

async function route(): Promise<void> {
  const view = routes[window.location.hash] ?? annotateView;
  try {
    await view();
  } catch (err) {
    app.replaceChildren(
      el("p", { class: "status error-banner" }, [
        err instanceof ApiError ? err.detail : String(err),
      ])
    );
  }
}

window.addEventListener("hashchange", () => void route());
void route();
