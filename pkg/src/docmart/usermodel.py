"""Explicit session model with pertinence feedback, decisional-problem
capture, derived per-user profiles, and result personalization.

A session records who is searching, the real need behind the search, and
the ordered activities performed (exploration, request, synthesis), each
optionally judged for pertinence on an ordinal 0..3 scale.  Judgments feed
additive topic weights; weights rerank later results.  Sub-sessions nest
under a parent and never appear in the top-level listing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import NotFoundError, QuerySyntaxError, ValidationError
from .query import (
    And,
    ClassificationSpec,
    Not,
    Or,
    QueryExpr,
    ResultSet,
    Term,
    parse_query,
    to_text,
)
from .warehouse import Warehouse, resolve_attribute

logger = logging.getLogger(__name__)

ACTIVITY_TYPES = ("exploration", "request", "synthesis")
DEGREE_MIN, DEGREE_MAX = 0, 3


@dataclass
class Evaluation:
    degree_of_pertinence: int
    reasons: str = ""
    judged_docs: tuple[str, ...] = ()


@dataclass
class Activity:
    activity_id: str
    activity_type: str
    classification: ClassificationSpec | None = None
    request_text: str | None = None
    note: str | None = None
    solution: tuple[str, ...] = ()
    evaluation: Evaluation | None = None


@dataclass
class SessionModel:
    session_id: str
    identity: str
    objective: str
    parent_id: str | None = None
    activities: list[Activity] = field(default_factory=list)
    sub_sessions: list["SessionModel"] = field(default_factory=list)


@dataclass
class DecisionalProblem:
    """Stake (object, signal, hypotheses), individual characteristics
    (cognitive style, personality traits, identity), environment
    (global, immediate)."""

    problem_id: str
    object: str
    signal: str
    hypotheses: tuple[str, ...]
    cognitive_style: str
    personality_traits: tuple[str, ...]
    identity: str
    global_env: str
    immediate_env: str


@dataclass
class Profile:
    identity: str
    topic_weights: dict[str, float] = field(default_factory=dict)
    attribute_usage: dict[str, int] = field(default_factory=dict)
    recommended_history: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "identity": self.identity,
            "topic_weights": dict(sorted(self.topic_weights.items())),
            "attribute_usage": dict(sorted(self.attribute_usage.items())),
            "recommended_history": list(self.recommended_history),
        }


def _expr_attributes(expr: QueryExpr) -> list[str]:
    if isinstance(expr, Term):
        return [expr.attribute]
    if isinstance(expr, (And, Or)):
        return _expr_attributes(expr.left) + _expr_attributes(expr.right)
    if isinstance(expr, Not):
        return _expr_attributes(expr.child)
    return []


class UserModel:
    """Session, profile, and decisional-problem registry for all users.

    Operations touching one user's state are serialized by the owning
    store; this class validates before mutating so failed calls leave no
    partial state behind.
    """

    def __init__(self, warehouse: Warehouse, journal=None):
        self.warehouse = warehouse
        self._journal = journal
        self._sessions: dict[str, SessionModel] = {}  # every session, any depth
        self._top_order: list[str] = []
        self._problems: dict[str, DecisionalProblem] = {}
        self._problem_order: list[str] = []
        self._history: dict[str, list[str]] = {}
        self._session_seq = 0
        self._problem_seq = 0

    # -- sessions ----------------------------------------------------------

    def start_session(self, identity: str, objective: str) -> str:
        if not identity.strip():
            raise ValidationError("session identity must be non-empty")
        if not objective.strip():
            raise ValidationError("session objective must be non-empty")
        self._session_seq += 1
        session = SessionModel(
            session_id=f"S{self._session_seq}", identity=identity, objective=objective
        )
        self._sessions[session.session_id] = session
        self._top_order.append(session.session_id)
        self._emit_session(session)
        return session.session_id

    def start_subsession(self, parent_id: str, objective: str) -> str:
        parent = self._sessions.get(parent_id)
        if parent is None:
            raise NotFoundError(f"unknown session: {parent_id}")
        if not objective.strip():
            raise ValidationError("session objective must be non-empty")
        self._session_seq += 1
        sub = SessionModel(
            session_id=f"S{self._session_seq}",
            identity=parent.identity,
            objective=objective,
            parent_id=parent_id,
        )
        parent.sub_sessions.append(sub)
        self._sessions[sub.session_id] = sub
        self._emit_session(self._root_of(sub))
        return sub.session_id

    def list_sessions(self) -> list[SessionModel]:
        """Top-level sessions only; sub-sessions are reachable via parents."""
        return [self._sessions[sid] for sid in self._top_order]

    def get_session(self, session_id: str) -> SessionModel:
        session = self._sessions.get(session_id)
        if session is None:
            raise NotFoundError(f"unknown session: {session_id}")
        return session

    def _root_of(self, session: SessionModel) -> SessionModel:
        while session.parent_id is not None:
            session = self._sessions[session.parent_id]
        return session

    def record_activity(
        self,
        session_id: str,
        activity_type: str,
        classification: ClassificationSpec | None = None,
        request_text: str | None = None,
        note: str | None = None,
        solution: Sequence[str] = (),
    ) -> str:
        session = self.get_session(session_id)
        activity_type = activity_type.strip().lower()
        if activity_type not in ACTIVITY_TYPES:
            raise ValidationError(
                f"activity_type must be one of {ACTIVITY_TYPES}, got {activity_type!r}"
            )
        if activity_type == "request":
            if not request_text or not request_text.strip():
                raise ValidationError("request activities require request_text")
            try:
                parse_query(request_text)
            except QuerySyntaxError as exc:
                raise ValidationError(f"request_text does not parse: {exc}")
        activity = Activity(
            activity_id=f"A{len(session.activities) + 1}",
            activity_type=activity_type,
            classification=classification,
            request_text=request_text,
            note=note,
            solution=tuple(solution),
        )
        session.activities.append(activity)
        self._emit_session(self._root_of(session))
        return activity.activity_id

    def submit_evaluation(
        self,
        session_id: str,
        activity_id: str,
        degree: int,
        reasons: str = "",
        judged_docs: Sequence[str] = (),
    ) -> Profile:
        session = self.get_session(session_id)
        activity = next(
            (a for a in session.activities if a.activity_id == activity_id), None
        )
        if activity is None:
            raise NotFoundError(f"unknown activity: {activity_id} in {session_id}")
        if not activity.solution:
            raise ValidationError("activity has no solution to evaluate")
        if not DEGREE_MIN <= int(degree) <= DEGREE_MAX:
            raise ValidationError(
                f"degree of pertinence must be in {DEGREE_MIN}..{DEGREE_MAX}, got {degree}"
            )
        judged = tuple(judged_docs)
        outside = [d for d in judged if d not in activity.solution]
        if outside:
            raise ValidationError(f"judged docs not in the activity's solution: {outside}")
        activity.evaluation = Evaluation(
            degree_of_pertinence=int(degree), reasons=reasons, judged_docs=judged
        )
        self._emit_session(self._root_of(session))
        return self.derive_profile(session.identity)

    # -- profiles ----------------------------------------------------------

    def derive_profile(self, identity: str) -> Profile:
        """Aggregate the identity's whole session history (sub-sessions
        included) into topic weights and attribute usage.  Unknown
        identities yield an empty profile."""
        profile = Profile(identity=identity)
        for root in self.list_sessions():
            if root.identity == identity:
                self._accumulate(root, profile)
        profile.recommended_history = tuple(self._history.get(identity, ()))
        return profile

    def _accumulate(self, session: SessionModel, profile: Profile):
        for activity in session.activities:
            for name in self._activity_attributes(activity):
                profile.attribute_usage[name] = profile.attribute_usage.get(name, 0) + 1
            evaluation = activity.evaluation
            if evaluation is None or evaluation.degree_of_pertinence == 0:
                continue
            for doc_id in evaluation.judged_docs:
                doc = self.warehouse.get(doc_id)
                if doc is None:
                    logger.warning("judged doc %s no longer in warehouse", doc_id)
                    continue
                for topic in doc.topics:
                    profile.topic_weights[topic] = (
                        profile.topic_weights.get(topic, 0) + evaluation.degree_of_pertinence
                    )
        for sub in session.sub_sessions:
            self._accumulate(sub, profile)

    @staticmethod
    def _activity_attributes(activity: Activity) -> list[str]:
        names: list[str] = []
        if activity.request_text:
            try:
                names.extend(_expr_attributes(parse_query(activity.request_text)))
            except QuerySyntaxError:  # validated at record time; be lenient on replay
                pass
        if activity.classification is not None:
            names.extend(a.lower() for a in activity.classification.axes)
            if activity.classification.constraint is not None:
                names.extend(_expr_attributes(activity.classification.constraint))
        return names

    def score(self, doc_id: str, profile: Profile) -> float:
        doc = self.warehouse.get(doc_id)
        if doc is None:
            return 0.0
        return sum(profile.topic_weights.get(t, 0) for t in doc.topics)

    def personalize(self, results: ResultSet, profile: Profile) -> ResultSet:
        """Stable reordering of a result set by descending profile score;
        always a permutation of the input."""
        reordered = sorted(
            results.doc_ids, key=lambda doc_id: -self.score(doc_id, profile)
        )
        return ResultSet(
            doc_ids=tuple(reordered),
            total=results.total,
            origin_query=results.origin_query,
        )

    def known_identities(self) -> set[str]:
        known = {self._sessions[sid].identity for sid in self._top_order}
        known.update(self._history)
        return known

    def add_recommended(self, identity: str, doc_ids: Sequence[str]):
        if not doc_ids:
            return
        self._history.setdefault(identity, []).extend(doc_ids)
        if self._journal is not None:
            self._journal.record(
                "history.add", {"identity": identity, "doc_ids": list(doc_ids)}
            )

    # -- decisional problems -------------------------------------------------

    def define_problem(
        self,
        identity: str,
        object: str,
        signal: str,
        hypotheses: Sequence[str],
        cognitive_style: str = "",
        personality_traits: Sequence[str] = (),
        global_env: str = "",
        immediate_env: str = "",
    ) -> str:
        if not tuple(hypotheses):
            raise ValidationError("a decisional problem needs at least one hypothesis")
        if identity not in self.known_identities():
            raise ValidationError(f"unknown user identity: {identity}")
        self._problem_seq += 1
        problem = DecisionalProblem(
            problem_id=f"P{self._problem_seq}",
            object=object,
            signal=signal,
            hypotheses=tuple(hypotheses),
            cognitive_style=cognitive_style,
            personality_traits=tuple(personality_traits),
            identity=identity,
            global_env=global_env,
            immediate_env=immediate_env,
        )
        self._problems[problem.problem_id] = problem
        self._problem_order.append(problem.problem_id)
        if self._journal is not None:
            self._journal.record("problem.put", problem_to_record(problem))
        return problem.problem_id

    def get_problem(self, problem_id: str) -> DecisionalProblem:
        problem = self._problems.get(problem_id)
        if problem is None:
            raise NotFoundError(f"unknown problem: {problem_id}")
        return problem

    def list_problems(self, identity: str | None = None) -> list[DecisionalProblem]:
        problems = [self._problems[pid] for pid in self._problem_order]
        if identity is not None:
            problems = [p for p in problems if p.identity == identity]
        return problems

    def translate_problem(self, problem_id: str) -> tuple[list[str], list[str]]:
        """Token-match the problem's object and signal against the warehouse
        schema and known topic values; hand unmatched tokens back for the
        information watcher to resolve."""
        problem = self.get_problem(problem_id)
        schema_names = self.warehouse.attribute_names()
        topics = {t.lower() for t in self.warehouse.topic_values()}
        attributes: list[str] = []
        unmatched: list[str] = []
        for token in (problem.object + " " + problem.signal).split():
            lowered = token.lower()
            resolved = resolve_attribute(lowered)
            if resolved in schema_names:
                if resolved not in attributes:
                    attributes.append(resolved)
            elif lowered in topics:
                if "topics" not in attributes:
                    attributes.append("topics")
            elif lowered not in unmatched:
                unmatched.append(lowered)
        return attributes, unmatched

    # -- persistence hooks ---------------------------------------------------

    def _emit_session(self, root: SessionModel):
        if self._journal is not None:
            self._journal.record("session.put", session_to_record(root))

    def load_session(self, record: Mapping):
        root = session_from_record(record)
        for session in _walk(root):
            self._sessions[session.session_id] = session
            self._bump_session_seq(session.session_id)
        if root.session_id not in self._top_order:
            self._top_order.append(root.session_id)

    def load_problem(self, record: Mapping):
        problem = problem_from_record(record)
        self._problems[problem.problem_id] = problem
        if problem.problem_id not in self._problem_order:
            self._problem_order.append(problem.problem_id)
        if problem.problem_id.startswith("P"):
            try:
                self._problem_seq = max(self._problem_seq, int(problem.problem_id[1:]))
            except ValueError:
                pass

    def load_history(self, identity: str, doc_ids: Iterable[str]):
        self._history.setdefault(identity, []).extend(doc_ids)

    def _bump_session_seq(self, session_id: str):
        if session_id.startswith("S"):
            try:
                self._session_seq = max(self._session_seq, int(session_id[1:]))
            except ValueError:
                pass


def _walk(session: SessionModel):
    yield session
    for sub in session.sub_sessions:
        yield from _walk(sub)


# -- record (de)serialization ---------------------------------------------

def session_to_record(session: SessionModel) -> dict:
    return {
        "session_id": session.session_id,
        "identity": session.identity,
        "objective": session.objective,
        "parent_id": session.parent_id,
        "activities": [_activity_to_record(a) for a in session.activities],
        "sub_sessions": [session_to_record(s) for s in session.sub_sessions],
    }


def session_from_record(record: Mapping) -> SessionModel:
    session = SessionModel(
        session_id=record["session_id"],
        identity=record["identity"],
        objective=record["objective"],
        parent_id=record.get("parent_id"),
        activities=[_activity_from_record(a) for a in record.get("activities", [])],
    )
    for sub_record in record.get("sub_sessions", []):
        sub = session_from_record(sub_record)
        sub.parent_id = session.session_id
        session.sub_sessions.append(sub)
    return session


def _activity_to_record(activity: Activity) -> dict:
    classification = None
    if activity.classification is not None:
        classification = {
            "axes": list(activity.classification.axes),
            "constraint": (
                to_text(activity.classification.constraint)
                if activity.classification.constraint is not None
                else None
            ),
        }
    evaluation = None
    if activity.evaluation is not None:
        evaluation = {
            "degree_of_pertinence": activity.evaluation.degree_of_pertinence,
            "reasons": activity.evaluation.reasons,
            "judged_docs": list(activity.evaluation.judged_docs),
        }
    return {
        "activity_id": activity.activity_id,
        "activity_type": activity.activity_type,
        "classification": classification,
        "request_text": activity.request_text,
        "note": activity.note,
        "solution": list(activity.solution),
        "evaluation": evaluation,
    }


def _activity_from_record(record: Mapping) -> Activity:
    classification = None
    if record.get("classification") is not None:
        spec = record["classification"]
        constraint = spec.get("constraint")
        classification = ClassificationSpec(
            axes=tuple(spec["axes"]),
            constraint=parse_query(constraint) if constraint else None,
        )
    evaluation = None
    if record.get("evaluation") is not None:
        ev = record["evaluation"]
        evaluation = Evaluation(
            degree_of_pertinence=ev["degree_of_pertinence"],
            reasons=ev.get("reasons", ""),
            judged_docs=tuple(ev.get("judged_docs", ())),
        )
    return Activity(
        activity_id=record["activity_id"],
        activity_type=record["activity_type"],
        classification=classification,
        request_text=record.get("request_text"),
        note=record.get("note"),
        solution=tuple(record.get("solution", ())),
        evaluation=evaluation,
    )


def problem_to_record(problem: DecisionalProblem) -> dict:
    return {
        "problem_id": problem.problem_id,
        "object": problem.object,
        "signal": problem.signal,
        "hypotheses": list(problem.hypotheses),
        "cognitive_style": problem.cognitive_style,
        "personality_traits": list(problem.personality_traits),
        "identity": problem.identity,
        "global_env": problem.global_env,
        "immediate_env": problem.immediate_env,
    }


def problem_from_record(record: Mapping) -> DecisionalProblem:
    return DecisionalProblem(
        problem_id=record["problem_id"],
        object=record["object"],
        signal=record["signal"],
        hypotheses=tuple(record["hypotheses"]),
        cognitive_style=record.get("cognitive_style", ""),
        personality_traits=tuple(record.get("personality_traits", ())),
        identity=record["identity"],
        global_env=record.get("global_env", ""),
        immediate_env=record.get("immediate_env", ""),
    )
