/** DOM wiring: forms, panels, and the 500 ms polling loop. */

import { ApiClient, QueryEvent } from "./api.js";
import { chartSvg } from "./chart.js";
import { ControllerState, SessionController } from "./controller.js";
import { Projection, glyphSvg } from "./projection.js";
import { Highlights, TreeNode, buildTree, highlightClass, nodeLabel } from "./tree.js";

const POLL_INTERVAL_MS = 500;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function expansionKey(sessionId: string): string {
  return `genusdiff-expanded-${sessionId}`;
}

function loadExpanded(sessionId: string): Set<number> {
  try {
    const raw = localStorage.getItem(expansionKey(sessionId));
    return new Set(raw ? (JSON.parse(raw) as number[]) : []);
  } catch {
    return new Set();
  }
}

function saveExpanded(sessionId: string, expanded: Set<number>): void {
  try {
    localStorage.setItem(expansionKey(sessionId), JSON.stringify([...expanded]));
  } catch {
    // storage may be unavailable; expansion then lives for the page only
  }
}

function renderTree(
  node: TreeNode,
  highlights: Highlights,
  expanded: Set<number>,
  onToggle: (id: number, open: boolean) => void
): HTMLElement {
  const wrap = document.createElement(node.children.length ? "details" : "div");
  wrap.className = "tree-node";
  const labelClass = highlightClass(node.id, highlights);
  const label = document.createElement(node.children.length ? "summary" : "span");
  label.textContent = nodeLabel(node);
  label.title = `node ${node.id}`;
  if (labelClass) label.classList.add(labelClass);
  wrap.appendChild(label);
  if (wrap instanceof HTMLDetailsElement) {
    wrap.open = expanded.has(node.id) || node.id === 0;
    wrap.addEventListener("toggle", () => onToggle(node.id, wrap.open));
  }
  for (const child of node.children) {
    wrap.appendChild(renderTree(child, highlights, expanded, onToggle));
  }
  return wrap;
}

function describeQuery(query: QueryEvent): string {
  const place =
    query.kind === "shares-genus-below"
      ? `sibling node ${query.node} under node ${query.under}`
      : `node ${query.node}`;
  return `${query.prompt} (encounter ${query.encounter_id}, ${place})`;
}

function main(): void {
  const api = new ApiClient();
  let projection: Projection | null = null;
  let expanded = new Set<number>();

  const render = (state: ControllerState): void => {
    el("session-info").textContent = state.sessionId
      ? `session ${state.sessionId} - ${state.metrics?.completed ?? 0}/${state.queueLength} placed` +
        (state.finished ? " - complete" : "")
      : "no session yet";
    el("error-banner").textContent = state.error ?? "";
    el("stale-banner").textContent = state.staleNotice ?? "";

    const query = state.pending;
    el("query-prompt").textContent = query ? describeQuery(query) : "waiting for the next question";
    const yes = el<HTMLButtonElement>("answer-yes");
    const no = el<HTMLButtonElement>("answer-no");
    yes.disabled = no.disabled = !query || state.answering;
    const glyphBox = el("query-glyphs");
    if (query && query.visual_objects.length > 0) {
      const dim = query.visual_objects[0]?.length ?? 0;
      if (!projection || projection.dimension !== dim) {
        projection = Projection.forSession(state.sessionId ?? "", dim);
      }
      glyphBox.innerHTML = glyphSvg(projection, query.visual_objects);
    } else {
      glyphBox.innerHTML = "";
    }

    const treeBox = el("hierarchy");
    treeBox.innerHTML = "";
    if (state.snapshot) {
      const highlights: Highlights = {
        queried: query?.node,
        genus: query?.under ?? undefined,
        placed: state.lastPlacement?.placed_node,
      };
      const onToggle = (id: number, open: boolean) => {
        if (open) expanded.add(id);
        else expanded.delete(id);
        if (state.sessionId) saveExpanded(state.sessionId, expanded);
      };
      treeBox.appendChild(renderTree(buildTree(state.snapshot), highlights, expanded, onToggle));
    }

    const costs = state.metrics?.costs ?? [];
    el("metrics").innerHTML = chartSvg([
      { label: "predict_genus", values: costs.map((c) => c.predict_genus), color: "#4ea1ff" },
      { label: "naive", values: costs.map((c) => c.naive), color: "#ff8c42" },
    ]);

    const log = el("transcript");
    log.innerHTML = "";
    for (const entry of state.transcript.slice(-200)) {
      const row = document.createElement("li");
      row.className = `log-${entry.label}`;
      row.textContent = `[${entry.label}] ${entry.detail}`;
      log.appendChild(row);
    }
    log.scrollTop = log.scrollHeight;
  };

  const controller = new SessionController(api, render);

  el<HTMLFormElement>("session-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const num = (id: string) => Number(el<HTMLInputElement>(id).value);
    const embeddings = el<HTMLTextAreaElement>("embeddings").value.trim();
    const request = embeddings
      ? { embeddings, tail_size: num("tail-size") }
      : {
          synthetic: {
            depth: num("depth"),
            branching: num("branching"),
            encounters_per_leaf: num("epl"),
            dimension: num("dim"),
            view_noise_sigma: num("sigma"),
            seed: num("seed"),
          },
          tail_size: num("tail-size"),
        };
    controller
      .createSession(request)
      .then(() => {
        projection = null;
        expanded = controller.state.sessionId
          ? loadExpanded(controller.state.sessionId)
          : new Set();
      })
      .catch((error) => {
        controller.state.error = error instanceof Error ? error.message : String(error);
        render(controller.state);
      });
  });

  el("answer-yes").addEventListener("click", () => void controller.answer(true));
  el("answer-no").addEventListener("click", () => void controller.answer(false));

  window.setInterval(() => void controller.poll(), POLL_INTERVAL_MS);
  render(controller.state);
}

main();
