import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import type { FetchLike, QueryEvent } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { FakeBackend, placementEvent, queryEvent } from "./fake_backend.js";

function setup(): { backend: FakeBackend; controller: SessionController; changes: number[] } {
  const backend = new FakeBackend();
  const changes: number[] = [];
  const controller = new SessionController(new ApiClient(backend.fetch), () =>
    changes.push(Date.now())
  );
  return { backend, controller, changes };
}

async function drive(
  controller: SessionController,
  decide: (q: QueryEvent) => boolean,
  maxSteps = 50
): Promise<number> {
  let steps = 0;
  while (!controller.state.finished && steps < maxSteps) {
    steps += 1;
    await controller.poll();
    if (controller.state.pending) {
      await controller.answer(decide(controller.state.pending));
    }
  }
  return steps;
}

describe("SessionController", () => {
  it("ignores polling before a session exists", async () => {
    const { backend, controller } = setup();
    await controller.poll();
    expect(backend.calls).toHaveLength(0);
  });

  it("creating a session resets state and loads both views", async () => {
    const { backend, controller, changes } = setup();
    controller.state.error = "leftover";
    await controller.createSession({ synthetic: { depth: 2, seed: 5 } });
    expect(controller.state.sessionId).toBe("s1");
    expect(controller.state.queueLength).toBe(2);
    expect(controller.state.error).toBeNull();
    expect(controller.state.snapshot?.root).toBe(0);
    expect(controller.state.metrics?.total).toBe(2);
    expect(controller.state.transcript.map((t) => t.label)).toEqual(["info"]);
    expect(changes.length).toBeGreaterThan(0);
    expect(backend.mutatingCalls().map((c) => c.url)).toEqual(["/sessions"]);
  });

  it("runs a scripted session end to end with one answer per query", async () => {
    const { backend, controller } = setup();
    backend.events = [
      placementEvent(0, 1),
      queryEvent(0),
      placementEvent(1, 0),
      { type: "done", iterations: 2 },
    ];
    await controller.createSession({ synthetic: {} });
    await drive(controller, () => true);

    expect(controller.state.finished).toBe(true);
    expect(controller.state.pending).toBeNull();
    expect(backend.answers).toEqual([{ query_id: 0, answer: true }]);
    expect(controller.state.lastPlacement?.iteration).toBe(1);

    const labels = controller.state.transcript.map((t) => t.label);
    expect(labels).toEqual(["info", "placement", "query", "answer", "placement", "info"]);

    // the UI only ever mutates by opening the session and answering questions
    expect(backend.mutatingCalls().map((c) => `${c.method} ${c.url}`)).toEqual([
      "POST /sessions",
      "POST /sessions/s1/answer",
    ]);
    // views refresh after creation, each placement, and completion
    const hierarchyGets = backend.calls.filter((c) => c.url.endsWith("/hierarchy"));
    expect(hierarchyGets).toHaveLength(4);
  });

  it("re-polling an unanswered query does not duplicate it", async () => {
    const { backend, controller } = setup();
    backend.events = [queryEvent(0)];
    await controller.createSession({ synthetic: {} });
    await controller.poll();
    await controller.poll();
    expect(controller.state.pending?.query_id).toBe(0);
    const queries = controller.state.transcript.filter((t) => t.label === "query");
    expect(queries).toHaveLength(1);
  });

  it("overlapping polls collapse into one request", async () => {
    const { backend, controller } = setup();
    backend.events = [queryEvent(0)];
    await controller.createSession({ synthetic: {} });
    await Promise.all([controller.poll(), controller.poll(), controller.poll()]);
    expect(backend.queryCalls()).toHaveLength(1);
  });

  it("double answering sends a single request", async () => {
    const { backend, controller } = setup();
    backend.events = [queryEvent(0)];
    await controller.createSession({ synthetic: {} });
    await controller.poll();
    await Promise.all([controller.answer(true), controller.answer(false)]);
    expect(backend.answers).toEqual([{ query_id: 0, answer: true }]);
    expect(controller.state.pending).toBeNull();
    expect(controller.state.error).toBeNull();
  });

  it("recovers from a superseded query with a notice instead of an error", async () => {
    const { backend, controller } = setup();
    backend.events = [queryEvent(0)];
    await controller.createSession({ synthetic: {} });
    await controller.poll();
    backend.pendingQuery = queryEvent(1, { prompt: "Is it the very same object?" });
    await controller.answer(true);
    expect(controller.state.staleNotice).toMatch(/expired/);
    expect(controller.state.pending).toBeNull();
    expect(controller.state.error).toBeNull();
    expect(backend.answers).toHaveLength(0);

    await controller.poll();
    expect(controller.state.pending?.query_id).toBe(1);
    expect(controller.state.staleNotice).toBeNull();

    controller.state.staleNotice = "lingering";
    controller.dismissStale();
    expect(controller.state.staleNotice).toBeNull();
  });

  it("stops polling once the session is done", async () => {
    const { backend, controller } = setup();
    backend.events = [{ type: "done", iterations: 0 }];
    await controller.createSession({ synthetic: {} });
    await controller.poll();
    expect(controller.state.finished).toBe(true);
    await controller.poll();
    await controller.poll();
    expect(backend.queryCalls()).toHaveLength(1);
  });

  it("surfaces service failures in state.error", async () => {
    const backend = new FakeBackend();
    const flaky: FetchLike = async (url, init) => {
      if (url.includes("/query")) {
        return new Response(JSON.stringify({ error: "boom" }), { status: 500 });
      }
      return backend.fetch(url, init);
    };
    const controller = new SessionController(new ApiClient(flaky));
    await controller.createSession({ synthetic: {} });
    await controller.poll();
    expect(controller.state.error).toBe("boom");
  });
});
