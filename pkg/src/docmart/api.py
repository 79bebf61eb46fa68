"""HTTP surface over a Store.

Thin by design: every route parses the wire shape, calls the store, and
serializes the result.  Domain errors become ApiError JSON with the status
from the shared taxonomy; body-shape problems surface as code "validation"
with status 400 rather than framework-default 422.  Payload schemas are
documented in docs/http_api.md.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from . import __version__
from .errors import (
    ApiError,
    DocmartError,
    STATUS_BY_CODE,
    ValidationError,
)
from .marts import year_over_year
from .query import ClassificationSpec, parse_query
from .store import Store
from .usermodel import session_to_record, problem_to_record
from .warehouse import EnrichmentSource, PERMISSIVE_FILTER, SelectionFilter

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StoreConfig:
    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 8000
    refresh_interval: float | None = None  # seconds between mart refreshes

    def __post_init__(self):
        if self.refresh_interval is not None and self.refresh_interval <= 0:
            raise ValidationError(
                f"refresh interval must be positive, got {self.refresh_interval}"
            )


class IngestBody(BaseModel):
    records: list[dict]
    filter: dict | None = None


class EnrichBody(BaseModel):
    join: str
    target: str
    records: dict[str, str]
    name: str = "api-enrichment"


class QueryBody(BaseModel):
    text: str
    identity: str | None = None


class SessionBody(BaseModel):
    identity: str
    objective: str


class SubsessionBody(BaseModel):
    objective: str


class ClassificationBody(BaseModel):
    axes: list[str]
    constraint: str | None = None


class ActivityBody(BaseModel):
    activity_type: str
    classification: ClassificationBody | None = None
    request_text: str | None = None
    note: str | None = None
    solution: list[str] = Field(default_factory=list)


class EvaluationBody(BaseModel):
    degree: int
    reasons: str = ""
    judged_docs: list[str] = Field(default_factory=list)


class ProblemBody(BaseModel):
    identity: str
    object: str
    signal: str
    hypotheses: list[str]
    cognitive_style: str = ""
    personality_traits: list[str] = Field(default_factory=list)
    global_env: str = ""
    immediate_env: str = ""


class RecommendBody(BaseModel):
    identity: str
    n: int = 5


class AccessBody(BaseModel):
    identity: str
    doc_id: str
    year: int
    kind: str = "consult"


def _parse_path(raw: str) -> list[tuple[str, str]]:
    steps: list[tuple[str, str]] = []
    if not raw:
        return steps
    for piece in raw.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise ValidationError(f"exploration step must look like attr=value: {piece!r}")
        name, _, value = piece.partition("=")
        steps.append((name.strip(), value.strip()))
    return steps


def create_app(store: Store) -> FastAPI:
    app = FastAPI(title="docmart gateway", version=__version__)

    @app.exception_handler(DocmartError)
    async def domain_error(request: Request, exc: DocmartError):
        err = ApiError.from_exception(exc)
        return JSONResponse(status_code=STATUS_BY_CODE[err.code], content=err.to_json())

    @app.exception_handler(RequestValidationError)
    async def body_error(request: Request, exc: RequestValidationError):
        err = ApiError(code="validation", message="invalid request body or parameters",
                       detail={"errors": [str(e.get("msg", e)) for e in exc.errors()]})
        return JSONResponse(status_code=400, content=err.to_json())

    # -- health and schema -------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok", "snapshot_id": store.snapshot_id, "version": __version__}

    @app.get("/schema")
    def schema():
        return {
            "attributes": [
                {"name": d.name, "kind": d.kind, "coverage": d.coverage}
                for d in store.schema()
            ]
        }

    @app.get("/gaps")
    def gaps(require: str = Query("")):
        names = [part.strip() for part in require.split(",") if part.strip()]
        if not names:
            raise ValidationError("gaps needs ?require=attr[,attr...]")
        report = store.detect_gaps(names)
        return report.to_json()

    # -- documents ----------------------------------------------------------

    @app.post("/documents:ingest")
    def ingest(body: IngestBody):
        selection = (
            SelectionFilter.from_mapping(body.filter)
            if body.filter is not None
            else PERMISSIVE_FILTER
        )
        report = store.ingest(body.records, selection)
        return report.to_json()

    @app.post("/enrich")
    def enrich(body: EnrichBody):
        source = EnrichmentSource(
            name=body.name,
            join_attr=body.join,
            target_attr=body.target,
            records=dict(body.records),
        )
        return store.enrich(source).to_json()

    # -- retrieval ------------------------------------------------------------

    @app.post("/queries")
    def queries(body: QueryBody):
        return store.query(body.text, identity=body.identity).to_json()

    @app.get("/explore")
    def explore(path: str = Query("")):
        return store.explore(_parse_path(path)).to_json()

    @app.get("/classify")
    def classify_route(axes: str = Query(...), constraint: str | None = Query(None)):
        axis_names = tuple(a.strip() for a in axes.split(",") if a.strip())
        spec = ClassificationSpec(
            axes=axis_names,
            constraint=parse_query(constraint) if constraint else None,
        )
        groups = store.classify(spec)
        return {
            "axes": list(axis_names),
            "groups": [
                {"key": list(key), "doc_ids": list(ids)}
                for key, ids in groups.items()
            ],
        }

    # -- sessions -----------------------------------------------------------------

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionBody):
        session_id = store.start_session(body.identity, body.objective)
        return {"session_id": session_id}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": [session_to_record(s) for s in store.list_sessions()]}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return session_to_record(store.get_session(session_id))

    @app.post("/sessions/{session_id}/subsessions", status_code=201)
    def create_subsession(session_id: str, body: SubsessionBody):
        sub_id = store.start_subsession(session_id, body.objective)
        return {"session_id": sub_id, "parent_id": session_id}

    @app.post("/sessions/{session_id}/activities", status_code=201)
    def create_activity(session_id: str, body: ActivityBody):
        classification = None
        if body.classification is not None:
            classification = ClassificationSpec(
                axes=tuple(body.classification.axes),
                constraint=(
                    parse_query(body.classification.constraint)
                    if body.classification.constraint
                    else None
                ),
            )
        activity_id = store.record_activity(
            session_id,
            body.activity_type,
            classification=classification,
            request_text=body.request_text,
            note=body.note,
            solution=tuple(body.solution),
        )
        return {"activity_id": activity_id, "session_id": session_id}

    @app.post("/sessions/{session_id}/activities/{activity_id}/evaluation")
    def evaluate(session_id: str, activity_id: str, body: EvaluationBody):
        profile = store.submit_evaluation(
            session_id,
            activity_id,
            body.degree,
            reasons=body.reasons,
            judged_docs=tuple(body.judged_docs),
        )
        return profile.to_json()

    @app.get("/profiles/{identity}")
    def get_profile(identity: str):
        return store.profile(identity).to_json()

    # -- decisional problems ---------------------------------------------------------

    @app.post("/problems", status_code=201)
    def create_problem(body: ProblemBody):
        problem_id = store.define_problem(
            identity=body.identity,
            object=body.object,
            signal=body.signal,
            hypotheses=tuple(body.hypotheses),
            cognitive_style=body.cognitive_style,
            personality_traits=tuple(body.personality_traits),
            global_env=body.global_env,
            immediate_env=body.immediate_env,
        )
        return {"problem_id": problem_id}

    @app.get("/problems/{problem_id}")
    def get_problem(problem_id: str):
        return problem_to_record(store.get_problem(problem_id))

    @app.get("/problems/{problem_id}/translation")
    def translate(problem_id: str):
        attributes, unmatched = store.translate_problem(problem_id)
        return {"attributes": attributes, "unmatched": unmatched}

    # -- marts ----------------------------------------------------------------------

    @app.get("/marts")
    def marts():
        return {"marts": store.mart_list()}

    @app.post("/marts/{name}:build")
    def mart_build(name: str):
        return store.mart_build(name).to_json()

    @app.post("/marts/{name}:refresh")
    def mart_refresh(name: str):
        return store.mart_refresh(name).to_json()

    @app.get("/marts/{name}/cells")
    def mart_cells(name: str):
        return store.get_mart(name).to_json()

    @app.get("/marts/{name}/export")
    def mart_export(name: str):
        csv_text = store.mart_export(name)
        return PlainTextResponse(csv_text, media_type="text/csv")

    @app.get("/marts/{name}/yoy")
    def mart_yoy(name: str):
        deltas = year_over_year(store.get_mart(name))
        return {"name": name, "deltas": {str(y): d for y, d in sorted(deltas.items())}}

    # -- usage and recommendations ------------------------------------------------------

    @app.post("/access-events", status_code=201)
    def access_event(body: AccessBody):
        store.record_access(body.identity, body.doc_id, body.year, body.kind)
        return {
            "identity": body.identity,
            "doc_id": body.doc_id,
            "year": body.year,
            "kind": body.kind,
        }

    @app.post("/recommendations")
    def recommend(body: RecommendBody):
        doc_ids = store.recommend(body.identity, body.n)
        return {"identity": body.identity, "doc_ids": doc_ids}

    return app


def start_refresh_thread(store: Store, interval: float) -> threading.Event:
    """Rebuild every built mart each interval until the event is set."""
    stop = threading.Event()

    def loop():
        while not stop.wait(interval):
            for row in store.mart_list():
                if not row["built"]:
                    continue
                try:
                    store.mart_refresh(row["name"])
                except DocmartError as exc:
                    logger.warning("periodic refresh of %s failed: %s", row["name"], exc)

    thread = threading.Thread(target=loop, name="mart-refresh", daemon=True)
    thread.start()
    return stop


def run_server(config: StoreConfig):
    import uvicorn

    store = Store(config.data_dir)
    try:
        app = create_app(store)
        if config.refresh_interval is not None:
            start_refresh_thread(store, config.refresh_interval)
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    finally:
        store.close()
