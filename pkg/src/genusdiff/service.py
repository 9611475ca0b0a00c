"""HTTP facade exposing the interactive placement protocol.

A session owns one hierarchy and one encounter queue.  Protocol work runs
on a dedicated worker thread that blocks inside the oracle whenever it
needs a human answer; the HTTP layer long-polls for the next question,
posts answers exactly once, and reads lock-free snapshots of the evolving
hierarchy and cost metrics.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .core import Encounter, InputError
from .experiment import encounter_order
from .hierarchy import Hierarchy
from .interaction import OracleBase, process_encounter
from .recognition import EvmConfig, Recognizer, SupervisionMemory
from .synth import GeneratorConfig, generate_dataset, load_embedding_lines

DEFAULT_POLL_SECONDS = 25.0
MAX_POLL_SECONDS = 60.0

QUERY_PROMPTS = {
    "genus": "Does the shown encounter belong to the genus at this node?",
    "same-object": "Is the shown encounter the same object as this node?",
    "shares-genus-below": (
        "Do the encounter and this sibling share a genus below the current node?"
    ),
}


@dataclass
class PendingQuery:
    query_id: int
    kind: str
    encounter_id: str
    node: int
    under: Optional[int]


class _SessionOracle(OracleBase):
    """Routes the three protocol questions through the session channel."""

    def __init__(self, session: "Session"):
        self.session = session

    def genus_of(self, e: Encounter, node: int) -> bool:
        return self.session.ask("genus", e, node, None)

    def same_object(self, e: Encounter, node: int) -> bool:
        return self.session.ask("same-object", e, node, None)

    def shares_genus_below(self, e: Encounter, sibling: int, under: int) -> bool:
        return self.session.ask("shares-genus-below", e, sibling, under)


class Session:
    """One oracle-in-the-loop run: queue, worker thread, and query channel.

    All channel state is guarded by ``self.cond``; the worker only touches
    it between compute bursts, so HTTP reads never wait on model fitting.
    """

    def __init__(self, session_id: str, encounters: list[Encounter], config: EvmConfig):
        self.id = session_id
        self.encounters = encounters
        self.cond = threading.Condition()
        self.hierarchy = Hierarchy()
        self.recognizer = Recognizer(self.hierarchy, config)
        self.memory = SupervisionMemory()
        self.pending: Optional[PendingQuery] = None
        self.answer: Optional[bool] = None
        self.notification: Optional[dict] = None
        self.demand = False
        self.finished = not encounters
        self.error: Optional[str] = None
        self.next_query_id = 0
        self.completed = 0
        self.costs: list[dict] = []
        self.snapshot = self.hierarchy.snapshot_json()
        self.worker = threading.Thread(target=self._run, name=f"session-{session_id}", daemon=True)
        self.worker.start()

    # ---------------------------------------------------- worker thread

    def _run(self) -> None:
        oracle = _SessionOracle(self)
        try:
            for encounter in self.encounters:
                with self.cond:
                    while not self.demand:
                        self.cond.wait()
                    self.demand = False
                outcome = process_encounter(
                    self.hierarchy, self.recognizer, encounter, oracle, self.memory
                )
                predict_cost = self.hierarchy.geodesic_distance(
                    outcome.predicted_node, outcome.placed_node
                )
                naive_cost = self.hierarchy.depth(outcome.placed_node)
                with self.cond:
                    iteration = self.completed
                    self.completed += 1
                    self.costs.append(
                        {
                            "iteration": iteration,
                            "predict_genus": predict_cost,
                            "naive": naive_cost,
                        }
                    )
                    self.notification = {
                        "type": "placement",
                        "iteration": iteration,
                        "encounter_id": encounter.id,
                        "action": outcome.action.value,
                        "placed_node": outcome.placed_node,
                        "predicted_node": outcome.predicted_node,
                        "queries_asked": outcome.queries_asked,
                        "predict_cost": predict_cost,
                        "naive_cost": naive_cost,
                        "queue_remaining": len(self.encounters) - self.completed,
                    }
                    self.snapshot = self.hierarchy.snapshot_json()
                    self.cond.notify_all()
            with self.cond:
                self.finished = True
                self.cond.notify_all()
        except Exception as exc:  # surfaced to every waiting client
            with self.cond:
                self.error = f"{type(exc).__name__}: {exc}"
                self.cond.notify_all()

    def ask(self, kind: str, e: Encounter, node: int, under: Optional[int]) -> bool:
        """Publish a question and block until the answer arrives."""
        with self.cond:
            self.pending = PendingQuery(self.next_query_id, kind, e.id, node, under)
            self.next_query_id += 1
            self.answer = None
            self.cond.notify_all()
            while self.answer is None:
                self.cond.wait()
            value = self.answer
            self.pending = None
            self.answer = None
            return value

    # ------------------------------------------------------- HTTP side

    def _query_payload(self) -> dict:
        q = self.pending
        encounter = next(e for e in self.encounters if e.id == q.encounter_id)
        return {
            "type": "query",
            "query_id": q.query_id,
            "kind": q.kind,
            "prompt": QUERY_PROMPTS[q.kind],
            "encounter_id": q.encounter_id,
            "visual_objects": [vo.embedding.tolist() for vo in encounter.visual_objects],
            "node": q.node,
            "under": q.under,
            "iteration": self.completed,
        }

    def next_event(self, timeout: float) -> dict:
        deadline = time.monotonic() + timeout
        with self.cond:
            while True:
                if self.error is not None:
                    raise HTTPException(status_code=500, detail=self.error)
                # placements are delivered before any follow-up question
                if self.notification is not None:
                    payload = self.notification
                    self.notification = None
                    return payload
                # an answered-but-unconsumed query is in flight, not pending
                if self.pending is not None and self.answer is None:
                    return self._query_payload()
                if self.finished:
                    return {"type": "done", "iterations": self.completed}
                self.demand = True
                self.cond.notify_all()
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return {"type": "pending"}
                self.cond.wait(remaining)

    def post_answer(self, query_id: int, answer: bool) -> dict:
        with self.cond:
            if self.error is not None:
                raise HTTPException(status_code=500, detail=self.error)
            if self.pending is None or self.pending.query_id != query_id:
                raise HTTPException(status_code=409, detail=f"no pending query with id {query_id}")
            if self.answer is not None:
                raise HTTPException(status_code=409, detail=f"query {query_id} already answered")
            self.answer = bool(answer)
            self.cond.notify_all()
            return {"status": "ok", "query_id": query_id}

    def metrics_payload(self) -> dict:
        with self.cond:
            return {
                "completed": self.completed,
                "total": len(self.encounters),
                "costs": list(self.costs),
            }


class SessionManager:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, encounters: list[Encounter], config: EvmConfig) -> Session:
        session = Session(uuid.uuid4().hex[:12], encounters, config)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session


class SyntheticSpec(BaseModel):
    depth: int = 4
    branching: int = 3
    encounters_per_leaf: int = 5
    dimension: int = 32
    view_noise_sigma: float = 0.25
    seed: int = 0
    level_offset_scales: Optional[list[float]] = None

    def generator(self) -> GeneratorConfig:
        scales = self.level_offset_scales
        if scales is None:
            scales = [8.0 / 2**k for k in range(max(self.depth, 1))]
        return GeneratorConfig(
            depth=self.depth,
            branching=self.branching,
            encounters_per_leaf=self.encounters_per_leaf,
            dimension=self.dimension,
            level_offset_scales=tuple(scales),
            view_noise_sigma=self.view_noise_sigma,
            seed=self.seed,
        )


class CreateSessionRequest(BaseModel):
    synthetic: Optional[SyntheticSpec] = None
    embeddings: Optional[str] = Field(default=None, description="line-delimited JSON records")
    ordering_seed: int = 0
    tail_size: int = 16
    open_space_scale: float = 10.0


class AnswerRequest(BaseModel):
    query_id: int
    answer: bool


def create_app(static_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="genusdiff", docs_url=None, redoc_url=None)
    manager = SessionManager()
    app.state.manager = manager

    @app.exception_handler(InputError)
    async def input_error_handler(request, exc: InputError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(HTTPException)
    async def http_error_handler(request, exc: HTTPException):
        return JSONResponse(status_code=exc.status_code, content={"error": str(exc.detail)})

    @app.post("/sessions")
    def create_session(request: CreateSessionRequest):
        if (request.synthetic is None) == (request.embeddings is None):
            raise InputError("provide exactly one of 'synthetic' or 'embeddings'")
        if request.synthetic is not None:
            _, encounters = generate_dataset(request.synthetic.generator())
        else:
            encounters = load_embedding_lines(request.embeddings.splitlines(), source="upload")
            if not encounters:
                raise InputError("the uploaded embedding data holds no encounters")
        order = encounter_order(request.ordering_seed, 0, len(encounters))
        queue = [encounters[i] for i in order]
        config = EvmConfig(
            tail_size=request.tail_size, open_space_scale=request.open_space_scale
        )
        session = manager.create(queue, config)
        return {"session_id": session.id, "queue_length": len(queue)}

    @app.get("/sessions/{session_id}/query")
    def next_query(
        session_id: str,
        timeout: float = Query(default=DEFAULT_POLL_SECONDS, ge=0.0, le=MAX_POLL_SECONDS),
    ):
        return manager.get(session_id).next_event(timeout)

    @app.post("/sessions/{session_id}/answer")
    def post_answer(session_id: str, request: AnswerRequest):
        return manager.get(session_id).post_answer(request.query_id, request.answer)

    @app.get("/sessions/{session_id}/hierarchy")
    def get_hierarchy(session_id: str):
        session = manager.get(session_id)
        with session.cond:
            body = session.snapshot
        return Response(content=body, media_type="application/json")

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        return manager.get(session_id).metrics_payload()

    if static_dir is not None:
        static_path = Path(static_dir)
        if static_path.is_dir():
            app.mount("/", StaticFiles(directory=static_path, html=True), name="ui")

    return app
