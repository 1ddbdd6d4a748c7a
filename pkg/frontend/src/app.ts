/**
 * DOM wiring: the search form (tag box with autocomplete, sketch canvas,
 * caps box, filter checkboxes) above a live result grid. Every edit
 * debounces into one /v1/search call; double-clicking a thumbnail switches
 * the grid to visual-similarity results for that keyframe.
 */

import { CanvasState, SketchBox } from "./canvas.js";
import { ApiError, SearchClient, groupByVideo } from "./client.js";
import { debounce } from "./debounce.js";
import { composeQuery, similarityQuery, UiState } from "./query.js";
import { BoxKind, MetaResponse, ResultEntry, SearchResponse } from "./types.js";

const CANVAS_SIZE = 490; // 70 px per grid cell

interface Elements {
  tagInput: HTMLInputElement;
  tagSuggestions: HTMLElement;
  capsInput: HTMLInputElement;
  capsError: HTMLElement;
  bwSelect: HTMLSelectElement;
  aspectSelect: HTMLSelectElement;
  groupToggle: HTMLInputElement;
  palette: HTMLElement;
  objectPalette: HTMLElement;
  sketch: HTMLCanvasElement;
  results: HTMLElement;
  status: HTMLElement;
  clearButton: HTMLButtonElement;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export class App {
  private readonly state = new CanvasState(CANVAS_SIZE, CANVAS_SIZE);
  private readonly client: SearchClient;
  private readonly els: Elements;
  private meta: MetaResponse | null = null;
  private lastResponse: SearchResponse | null = null;
  private dragging: { box: SketchBox; mode: "move" | "resize"; lastX: number; lastY: number } | null = null;
  private pendingLabel: { label: string; kind: BoxKind } | null = null;
  private readonly scheduleSearch = debounce(() => void this.runSearch(), 300);

  constructor(client?: SearchClient) {
    this.client = client ?? new SearchClient();
    this.els = {
      tagInput: el("tag-input"),
      tagSuggestions: el("tag-suggestions"),
      capsInput: el("caps-input"),
      capsError: el("caps-error"),
      bwSelect: el("bw-select"),
      aspectSelect: el("aspect-select"),
      groupToggle: el("group-toggle"),
      palette: el("color-palette"),
      objectPalette: el("object-palette"),
      sketch: el("sketch-canvas"),
      results: el("results"),
      status: el("status"),
      clearButton: el("clear-canvas"),
    };
  }

  async start(): Promise<void> {
    this.els.sketch.width = CANVAS_SIZE;
    this.els.sketch.height = CANVAS_SIZE;
    this.bindForm();
    this.bindCanvas();
    try {
      this.meta = await this.client.meta();
      this.renderPalettes();
      this.setStatus(`${this.meta.doc_count.toLocaleString()} keyframes indexed`);
    } catch (err) {
      this.setStatus(describeError(err));
    }
    this.drawCanvas();
  }

  private bindForm(): void {
    this.els.tagInput.addEventListener("input", () => {
      void this.refreshSuggestions();
      this.scheduleSearch();
    });
    this.els.capsInput.addEventListener("input", () => this.scheduleSearch());
    this.els.bwSelect.addEventListener("change", () => this.scheduleSearch());
    this.els.aspectSelect.addEventListener("change", () => this.scheduleSearch());
    this.els.groupToggle.addEventListener("change", () => this.renderResults());
    this.els.clearButton.addEventListener("click", () => {
      this.state.clear();
      this.drawCanvas();
      this.scheduleSearch();
    });
  }

  private bindCanvas(): void {
    const sketch = this.els.sketch;
    sketch.addEventListener("mousedown", (ev) => {
      const { x, y } = this.canvasPoint(ev);
      if (ev.shiftKey) {
        const hitBox = this.state.hit(x, y);
        if (hitBox) {
          this.state.remove(hitBox.id);
          this.drawCanvas();
          this.scheduleSearch();
        }
        return;
      }
      const hitBox = this.state.hit(x, y);
      if (hitBox && !this.pendingLabel) {
        const nearCorner =
          Math.abs(x - hitBox.x1) < 12 && Math.abs(y - hitBox.y1) < 12;
        this.dragging = {
          box: hitBox,
          mode: nearCorner ? "resize" : "move",
          lastX: x,
          lastY: y,
        };
        return;
      }
      const label = this.pendingLabel ?? this.promptForObject();
      if (!label) return;
      const box = this.state.addBox(label.label, label.kind, x, y, x, y);
      this.dragging = { box, mode: "resize", lastX: x, lastY: y };
      this.pendingLabel = null;
    });
    sketch.addEventListener("mousemove", (ev) => {
      if (!this.dragging) return;
      const { x, y } = this.canvasPoint(ev);
      if (this.dragging.mode === "move") {
        this.state.move(this.dragging.box.id, x - this.dragging.lastX, y - this.dragging.lastY);
        this.dragging.lastX = x;
        this.dragging.lastY = y;
      } else {
        this.state.resize(this.dragging.box.id, x, y);
      }
      this.drawCanvas();
    });
    const finish = () => {
      if (this.dragging) {
        this.dragging = null;
        this.scheduleSearch();
      }
    };
    sketch.addEventListener("mouseup", finish);
    sketch.addEventListener("mouseleave", finish);
  }

  private promptForObject(): { label: string; kind: BoxKind } | null {
    const raw = window.prompt("Object name for this box:");
    if (!raw || !raw.trim()) return null;
    return { label: raw.trim(), kind: "object" };
  }

  private canvasPoint(ev: MouseEvent): { x: number; y: number } {
    const rect = this.els.sketch.getBoundingClientRect();
    return { x: ev.clientX - rect.left, y: ev.clientY - rect.top };
  }

  private renderPalettes(): void {
    if (!this.meta) return;
    this.els.palette.replaceChildren(
      ...this.meta.palette.map((entry) => {
        const chip = document.createElement("button");
        chip.className = "chip";
        chip.title = entry.name;
        chip.style.backgroundColor = entry.hex;
        chip.addEventListener("click", () => {
          this.pendingLabel = { label: entry.name, kind: "color" };
          this.setStatus(`draw a box for "${entry.name}"`);
        });
        return chip;
      }),
    );
    this.els.objectPalette.replaceChildren(
      ...this.meta.objects.map((name) => {
        const chip = document.createElement("button");
        chip.className = "chip object-chip";
        chip.textContent = name;
        chip.addEventListener("click", () => {
          this.pendingLabel = { label: name, kind: "object" };
          this.setStatus(`draw a box for "${name}"`);
        });
        return chip;
      }),
    );
  }

  private async refreshSuggestions(): Promise<void> {
    const text = this.els.tagInput.value;
    const lastWord = text.split(/\s+/).pop() ?? "";
    const prefix = lastWord.replace(/\*+$/, "");
    if (prefix.length < 2) {
      this.els.tagSuggestions.replaceChildren();
      return;
    }
    try {
      const suggestions = await this.client.autocomplete(prefix);
      this.els.tagSuggestions.replaceChildren(
        ...suggestions.map((s) => {
          const item = document.createElement("div");
          item.className = "suggestion";
          item.textContent = s.display;
          item.addEventListener("mousedown", (ev) => {
            ev.preventDefault();
            const words = text.split(/\s+/);
            words[words.length - 1] = s.term;
            this.els.tagInput.value = words.join(" ") + " ";
            this.els.tagSuggestions.replaceChildren();
            this.scheduleSearch();
          });
          return item;
        }),
      );
    } catch {
      this.els.tagSuggestions.replaceChildren();
    }
  }

  private uiState(): UiState {
    return {
      canvasWidth: CANVAS_SIZE,
      canvasHeight: CANVAS_SIZE,
      boxes: this.state.boxes.map((b) => ({
        label: b.label,
        kind: b.kind,
        rect: [b.x0, b.y0, b.x1, b.y1],
      })),
      tagsText: this.els.tagInput.value,
      capsText: this.els.capsInput.value,
      bw: parseTriState(this.els.bwSelect.value),
      aspect: this.els.aspectSelect.value || null,
    };
  }

  private async runSearch(): Promise<void> {
    const composed = composeQuery(this.uiState());
    if (composed.kind === "error") {
      this.els.capsError.textContent = composed.message;
      return;
    }
    this.els.capsError.textContent = "";
    if (composed.kind === "empty") {
      this.lastResponse = null;
      this.renderResults();
      this.setStatus("draw a box or type a tag to search");
      return;
    }
    try {
      const response = await this.client.search(composed.spec, { pageSize: 100 });
      if (response === null) return; // superseded by a newer edit
      this.lastResponse = response;
      this.renderResults();
      this.setStatus(`${response.total_candidates.toLocaleString()} candidates`);
    } catch (err) {
      this.setStatus(describeError(err));
    }
  }

  private async runSimilarity(entry: ResultEntry): Promise<void> {
    try {
      void similarityQuery(entry.video, entry.segment); // spec form, logged by the service
      const response = await this.client.similar(entry.key);
      this.lastResponse = response;
      this.renderResults();
      this.setStatus(`similar to ${entry.key}`);
    } catch (err) {
      this.setStatus(describeError(err));
    }
  }

  private renderResults(): void {
    const response = this.lastResponse;
    if (!response || !response.results) {
      this.els.results.replaceChildren();
      return;
    }
    const renderEntry = (entry: ResultEntry) => {
      const card = document.createElement("figure");
      card.className = "result";
      if (entry.thumbnail) {
        const img = document.createElement("img");
        img.src = this.client.thumbnailUrl(entry.key);
        img.alt = entry.key;
        card.appendChild(img);
      } else {
        const placeholder = document.createElement("div");
        placeholder.className = "no-thumb";
        placeholder.textContent = entry.key;
        card.appendChild(placeholder);
      }
      const caption = document.createElement("figcaption");
      caption.textContent = `${entry.key} (${entry.score.toFixed(3)})`;
      card.appendChild(caption);
      card.addEventListener("dblclick", () => void this.runSimilarity(entry));
      return card;
    };
    if (this.els.groupToggle.checked) {
      this.els.results.replaceChildren(
        ...groupByVideo(response.results).map((group) => {
          const section = document.createElement("section");
          section.className = "video-group";
          const header = document.createElement("h3");
          header.textContent = group.video;
          section.appendChild(header);
          group.results.forEach((entry) => section.appendChild(renderEntry(entry)));
          return section;
        }),
      );
    } else {
      this.els.results.replaceChildren(...response.results.map(renderEntry));
    }
  }

  private drawCanvas(): void {
    const ctx = this.els.sketch.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, CANVAS_SIZE, CANVAS_SIZE);
    ctx.strokeStyle = "#d0d0d8";
    ctx.lineWidth = 1;
    const { xs, ys } = this.state.gridLines();
    for (const x of xs) {
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, CANVAS_SIZE);
      ctx.stroke();
    }
    for (const y of ys) {
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(CANVAS_SIZE, y);
      ctx.stroke();
    }
    const paletteHex = new Map(
      (this.meta?.palette ?? []).map((p) => [p.name, p.hex]),
    );
    for (const box of this.state.boxes) {
      const color = box.kind === "color" ? paletteHex.get(box.label) ?? "#444" : "#3366cc";
      ctx.strokeStyle = color;
      ctx.lineWidth = 2;
      ctx.strokeRect(box.x0, box.y0, box.x1 - box.x0, box.y1 - box.y0);
      ctx.fillStyle = color;
      ctx.font = "12px sans-serif";
      ctx.fillText(box.label, box.x0 + 4, box.y0 + 14);
    }
  }

  private setStatus(text: string): void {
    this.els.status.textContent = text;
  }
}

function parseTriState(value: string): boolean | null {
  if (value === "bw") return true;
  if (value === "color") return false;
  return null;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status === 503 ? "index is still loading…" : `error: ${err.message}`;
  }
  return `error: ${(err as Error).message ?? String(err)}`;
}

if (typeof document !== "undefined" && document.getElementById("sketch-canvas")) {
  void new App().start();
}
