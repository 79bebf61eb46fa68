"""Durable single-writer store tying the warehouse, user model, and marts
together behind one facade.

State lives in an append-only JSONL journal.  Every line carries a
sequence id that must increase by exactly one; a "base" line written by
compaction restores full state and restarts replay from its sid.  Writes
are buffered per operation and fsynced before the call returns, so an
acknowledged mutation survives a crash and a failed one leaves nothing
behind.  A lockfile guards against two writers on the same directory.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .errors import ConflictError, StoreError, ValidationError
from .marts import (
    Mart,
    MartEngine,
    access_to_record,
    export_csv,
    mart_to_record,
)
from .query import (
    ClassificationSpec,
    ExplorationView,
    ResultSet,
    canonical_order,
    classify,
    evaluate_query,
    explore,
)
from .usermodel import (
    Profile,
    SessionModel,
    UserModel,
    problem_to_record,
    session_to_record,
)
from .warehouse import (
    EnrichReport,
    EnrichmentSource,
    IngestReport,
    PERMISSIVE_FILTER,
    SelectionFilter,
    Warehouse,
)

logger = logging.getLogger(__name__)

JOURNAL_NAME = "journal.jsonl"
LOCK_NAME = "store.lock"


class Journal:
    """Buffered event recorder.  Components call record(); the store
    flushes after a successful mutation or discards after a failed one."""

    def __init__(self, path: Path):
        self.path = path
        self._sid = 0
        self._flushed_sid = 0
        self._pending: list[dict] = []

    @property
    def sid(self) -> int:
        return self._sid

    def set_replayed_sid(self, sid: int):
        self._sid = sid
        self._flushed_sid = sid

    def record(self, op: str, data: Mapping):
        self._sid += 1
        self._pending.append({"sid": self._sid, "op": op, "data": dict(data)})

    def flush(self):
        if not self._pending:
            return
        with open(self.path, "a", encoding="utf-8") as fh:
            for event in self._pending:
                fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._flushed_sid = self._sid
        self._pending.clear()

    def discard(self):
        self._pending.clear()
        self._sid = self._flushed_sid


def read_events(path: Path):
    """Yield (sid, op, data) while checking the sid chain.  Any bad line
    makes the whole file untrustworthy, so refuse instead of skipping."""
    expected = 1
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError:
                raise StoreError(f"corrupt journal {path}: line {number} is not valid JSON")
            if not isinstance(event, dict) or "sid" not in event or "op" not in event:
                raise StoreError(f"corrupt journal {path}: line {number} lacks sid/op")
            sid, op = event["sid"], event["op"]
            if op == "base":
                if number != 1:
                    raise StoreError(
                        f"corrupt journal {path}: base line {number} not at start"
                    )
                expected = int(sid) + 1
                yield sid, op, event.get("data", {})
                continue
            if sid != expected:
                raise StoreError(
                    f"corrupt journal {path}: line {number} has sid {sid}, expected {expected}"
                )
            expected += 1
            yield sid, op, event.get("data", {})


def _pid_running(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True


class Store:
    """Facade over warehouse + user model + marts with journal-backed
    durability.  One writer per directory, enforced by a pid lockfile."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.journal_path = self.root / JOURNAL_NAME
        self.lock_path = self.root / LOCK_NAME
        self._mutex = threading.Lock()
        self._closed = False
        self._acquire_lock()
        try:
            self.journal = Journal(self.journal_path)
            self.warehouse = Warehouse(journal=self.journal)
            self.users = UserModel(self.warehouse, journal=self.journal)
            self.marts = MartEngine(self.warehouse, journal=self.journal)
            if self.journal_path.exists():
                self._replay()
        except BaseException:
            self._release_lock()
            raise

    # -- lifecycle -----------------------------------------------------------

    def _acquire_lock(self):
        for attempt in (1, 2):
            try:
                fd = os.open(self.lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            except FileExistsError:
                pid = self._lock_owner()
                if pid is not None and not _pid_running(pid):
                    logger.warning("removing stale lock held by dead pid %s", pid)
                    self.lock_path.unlink(missing_ok=True)
                    continue
                raise ConflictError(
                    f"store {self.root} is locked by another process"
                    + (f" (pid {pid})" if pid is not None else "")
                )
            with os.fdopen(fd, "w") as fh:
                fh.write(str(os.getpid()))
            return
        raise ConflictError(f"store {self.root} is locked by another process")

    def _lock_owner(self) -> int | None:
        try:
            return int(self.lock_path.read_text().strip())
        except (OSError, ValueError):
            return None

    def _release_lock(self):
        self.lock_path.unlink(missing_ok=True)

    @property
    def snapshot_id(self) -> int:
        """Monotone over the store's whole lifetime, reopenings included."""
        return self.journal.sid

    def close(self):
        if self._closed:
            return
        self._closed = True
        self._release_lock()

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc_info):
        self.close()

    # -- replay ----------------------------------------------------------------

    def _replay(self):
        last_sid = 0
        for sid, op, data in read_events(self.journal_path):
            self._apply(op, data)
            last_sid = sid
        self.journal.set_replayed_sid(last_sid)

    def _apply(self, op: str, data: Mapping):
        if op == "base":
            self._restore(data)
        elif op == "doc.put":
            self.warehouse.load_doc(data)
        elif op == "session.put":
            self.users.load_session(data)
        elif op == "problem.put":
            self.users.load_problem(data)
        elif op == "history.add":
            self.users.load_history(data["identity"], data["doc_ids"])
        elif op == "access.add":
            self.marts.load_access(data)
        elif op == "mart.built":
            self.marts.load_mart(data)
        else:
            raise StoreError(f"corrupt journal {self.journal_path}: unknown op {op!r}")

    def _restore(self, state: Mapping):
        for record in state.get("documents", []):
            self.warehouse.load_doc(record)
        for record in state.get("sessions", []):
            self.users.load_session(record)
        for record in state.get("problems", []):
            self.users.load_problem(record)
        for identity, doc_ids in state.get("history", {}).items():
            self.users.load_history(identity, doc_ids)
        for record in state.get("access", []):
            self.marts.load_access(record)
        for record in state.get("marts", []):
            self.marts.load_mart(record)

    # -- state dump / compaction -----------------------------------------------

    def state_record(self) -> dict:
        """Full current state as one JSON-able mapping, canonically ordered."""
        return {
            "documents": [
                doc.to_record()
                for doc in sorted(self.warehouse.snapshot(), key=lambda d: d.doc_id)
            ],
            "sessions": [session_to_record(s) for s in self.users.list_sessions()],
            "problems": [problem_to_record(p) for p in self.users.list_problems()],
            "history": {
                identity: list(doc_ids)
                for identity, doc_ids in sorted(self.users._history.items())
            },
            "access": [access_to_record(e) for e in self.marts.access_events()],
            "marts": [
                mart_to_record(self.marts.get_mart(spec.name))
                for spec in self.marts.specs()
                if spec.name in self.marts._marts
            ],
        }

    def state_json(self) -> str:
        return json.dumps(self.state_record(), ensure_ascii=False, sort_keys=True)

    def state_fingerprint(self) -> str:
        return hashlib.sha256(self.state_json().encode("utf-8")).hexdigest()

    def compact(self):
        """Rewrite the journal as a single base line carrying full state."""
        with self._mutex:
            base = {"sid": self.journal.sid, "op": "base", "data": self.state_record()}
            tmp = self.journal_path.with_suffix(".tmp")
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(json.dumps(base, ensure_ascii=False, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.journal_path)

    def _mutate(self, fn: Callable):
        with self._mutex:
            try:
                result = fn()
            except BaseException:
                self.journal.discard()
                raise
            self.journal.flush()
            return result

    # -- warehouse operations ---------------------------------------------------

    def ingest(self, records: Iterable[Mapping], selection: SelectionFilter = PERMISSIVE_FILTER) -> IngestReport:
        return self._mutate(lambda: self.warehouse.ingest(records, selection))

    def ingest_lines(self, lines: Iterable[str], selection: SelectionFilter = PERMISSIVE_FILTER) -> IngestReport:
        return self._mutate(lambda: self.warehouse.ingest_lines(lines, selection))

    def enrich(self, source: EnrichmentSource) -> "EnrichReport":
        return self._mutate(lambda: self.warehouse.enrich(source))

    def schema(self):
        return self.warehouse.schema()

    def detect_gaps(self, required: Sequence[str]):
        return self.warehouse.detect_gaps(required)

    # -- retrieval ---------------------------------------------------------------

    def query(self, text: str, identity: str | None = None) -> ResultSet:
        results = evaluate_query(self.warehouse, text)
        if identity is not None:
            profile = self.users.derive_profile(identity)
            results = self.users.personalize(results, profile)
        return results

    def explore(self, path: Sequence[tuple[str, str]]) -> ExplorationView:
        return explore(self.warehouse, path)

    def classify(self, spec: ClassificationSpec):
        return classify(self.warehouse, spec)

    # -- sessions and problems ------------------------------------------------------

    def start_session(self, identity: str, objective: str) -> str:
        return self._mutate(lambda: self.users.start_session(identity, objective))

    def start_subsession(self, parent_id: str, objective: str) -> str:
        return self._mutate(lambda: self.users.start_subsession(parent_id, objective))

    def record_activity(self, session_id: str, activity_type: str, **kwargs) -> str:
        return self._mutate(
            lambda: self.users.record_activity(session_id, activity_type, **kwargs)
        )

    def submit_evaluation(
        self,
        session_id: str,
        activity_id: str,
        degree: int,
        reasons: str = "",
        judged_docs: Sequence[str] = (),
    ) -> Profile:
        return self._mutate(
            lambda: self.users.submit_evaluation(
                session_id, activity_id, degree, reasons, judged_docs
            )
        )

    def get_session(self, session_id: str) -> SessionModel:
        return self.users.get_session(session_id)

    def list_sessions(self) -> list[SessionModel]:
        return self.users.list_sessions()

    def profile(self, identity: str) -> Profile:
        return self.users.derive_profile(identity)

    def define_problem(self, **kwargs) -> str:
        return self._mutate(lambda: self.users.define_problem(**kwargs))

    def get_problem(self, problem_id: str):
        return self.users.get_problem(problem_id)

    def translate_problem(self, problem_id: str):
        return self.users.translate_problem(problem_id)

    # -- marts and usage ---------------------------------------------------------

    def record_access(self, identity: str, doc_id: str, year: int, kind: str = "consult"):
        return self._mutate(
            lambda: self.marts.record_access(identity, doc_id, year, kind)
        )

    def mart_build(self, name: str) -> Mart:
        return self._mutate(lambda: self.marts.build(name))

    def mart_refresh(self, name: str) -> Mart:
        return self._mutate(lambda: self.marts.refresh(name))

    def mart_list(self) -> list[dict]:
        return self.marts.list_marts()

    def get_mart(self, name: str) -> Mart:
        return self.marts.get_mart(name)

    def mart_export(self, name: str) -> str:
        return export_csv(self.marts.get_mart(name))

    # -- recommendations -----------------------------------------------------------

    def recommend(self, identity: str, n: int) -> list[str]:
        """Top-n unseen documents by profile score, canonical order breaking
        ties.  Recommending appends to history, so the same document is
        never offered to the same identity twice."""
        if n <= 0:
            raise ValidationError(f"recommendation count must be positive, got {n}")

        def run():
            profile = self.users.derive_profile(identity)
            seen = set(profile.recommended_history)
            candidates = [
                doc.doc_id
                for doc in canonical_order(self.warehouse.snapshot())
                if doc.doc_id not in seen
            ]
            ranked = sorted(
                candidates, key=lambda doc_id: -self.users.score(doc_id, profile)
            )
            picked = ranked[: int(n)]
            self.users.add_recommended(identity, picked)
            return picked

        return self._mutate(run)
