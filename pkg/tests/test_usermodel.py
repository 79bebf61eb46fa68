"""Sessions, evaluations, profiles, personalization, decisional problems."""

import pytest

from docmart import ClassificationSpec, ResultSet, UserModel, Warehouse
from docmart.errors import NotFoundError, ValidationError
from docmart.query import parse_query
from docmart.usermodel import session_from_record, session_to_record


@pytest.fixture
def wh(corpus_records):
    warehouse = Warehouse()
    warehouse.ingest(corpus_records)
    return warehouse


@pytest.fixture
def users(wh):
    return UserModel(wh)


# -- session structure -------------------------------------------------------

def test_start_session_requires_identity_and_objective(users):
    with pytest.raises(ValidationError):
        users.start_session("", "goal")
    with pytest.raises(ValidationError):
        users.start_session("u1", "   ")


def test_subsessions_nest_and_never_list_top_level(users):
    top = users.start_session("u1", "broad scan")
    sub = users.start_subsession(top, "narrow down")
    deeper = users.start_subsession(sub, "narrower still")
    top_level = [s.session_id for s in users.list_sessions()]
    assert top_level == [top]
    assert users.get_session(sub).parent_id == top
    assert users.get_session(deeper).parent_id == sub
    assert users.get_session(sub).identity == "u1"


def test_subsession_of_unknown_parent(users):
    with pytest.raises(NotFoundError):
        users.start_subsession("S99", "whatever")


def test_activity_validation(users):
    sid = users.start_session("u1", "goal")
    with pytest.raises(ValidationError):
        users.record_activity(sid, "daydreaming")
    with pytest.raises(ValidationError):
        users.record_activity(sid, "request")  # no request_text
    with pytest.raises(ValidationError):
        users.record_activity(sid, "request", request_text="(broken")
    aid = users.record_activity(sid, "Request", request_text="author:martin")
    assert users.get_session(sid).activities[0].activity_id == aid
    assert users.get_session(sid).activities[0].activity_type == "request"


def test_activity_types(users):
    sid = users.start_session("u1", "goal")
    users.record_activity(sid, "exploration", note="poking around")
    users.record_activity(
        sid, "synthesis",
        classification=ClassificationSpec(axes=("year",)),
        note="grouped by year",
    )
    kinds = [a.activity_type for a in users.get_session(sid).activities]
    assert kinds == ["exploration", "synthesis"]


# -- evaluations ----------------------------------------------------------------

def request_with_solution(users, identity="u1", solution=("D3", "D1")):
    sid = users.start_session(identity, "find warehouse work")
    aid = users.record_activity(sid, "request", request_text="author:martin",
                                solution=solution)
    return sid, aid


def test_evaluation_judged_docs_must_be_in_solution(users):
    sid, aid = request_with_solution(users)
    with pytest.raises(ValidationError):
        users.submit_evaluation(sid, aid, 2, judged_docs=("D4",))


def test_evaluation_degree_range(users):
    sid, aid = request_with_solution(users)
    with pytest.raises(ValidationError):
        users.submit_evaluation(sid, aid, 4, judged_docs=("D3",))
    with pytest.raises(ValidationError):
        users.submit_evaluation(sid, aid, -1, judged_docs=("D3",))


def test_evaluation_requires_solution(users):
    sid = users.start_session("u1", "goal")
    aid = users.record_activity(sid, "exploration")
    with pytest.raises(ValidationError):
        users.submit_evaluation(sid, aid, 1)


def test_evaluation_unknown_activity(users):
    sid = users.start_session("u1", "goal")
    with pytest.raises(NotFoundError):
        users.submit_evaluation(sid, "A9", 1)


def test_evaluation_updates_profile(users):
    sid, aid = request_with_solution(users)
    profile = users.submit_evaluation(sid, aid, 3, "spot on", ("D3",))
    assert profile.topic_weights == {"databases": 3, "warehousing": 3}


def test_degree_zero_adds_no_weight(users):
    sid, aid = request_with_solution(users)
    profile = users.submit_evaluation(sid, aid, 0, "useless", ("D3",))
    assert profile.topic_weights == {}


# -- profile derivation -----------------------------------------------------------

def test_profile_covers_subsessions(users):
    top = users.start_session("u1", "broad")
    sub = users.start_subsession(top, "narrow")
    aid = users.record_activity(sub, "request", request_text="topic:intelligence",
                                solution=("D4",))
    users.submit_evaluation(sub, aid, 2, judged_docs=("D4",))
    profile = users.derive_profile("u1")
    assert profile.topic_weights == {"intelligence": 2}


def test_profile_attribute_usage_counts_raw_names(users):
    sid = users.start_session("u1", "goal")
    users.record_activity(sid, "request", request_text="author:martin AND year:2003")
    users.record_activity(
        sid, "synthesis",
        classification=ClassificationSpec(
            axes=("pub_type",), constraint=parse_query("author:dupont")),
    )
    usage = users.derive_profile("u1").attribute_usage
    assert usage == {"author": 2, "year": 1, "pub_type": 1}


def test_profile_weights_accumulate_across_sessions(users):
    for _ in range(2):
        sid, aid = request_with_solution(users)
        users.submit_evaluation(sid, aid, 1, judged_docs=("D3",))
    profile = users.derive_profile("u1")
    assert profile.topic_weights == {"databases": 2, "warehousing": 2}


def test_unknown_identity_profile_is_empty(users):
    profile = users.derive_profile("nobody")
    assert profile.topic_weights == {}
    assert profile.attribute_usage == {}
    assert profile.recommended_history == ()


# -- personalization ----------------------------------------------------------------

def result_set(*doc_ids):
    return ResultSet(doc_ids=tuple(doc_ids), total=len(doc_ids), origin_query="q")


def test_personalize_is_stable_permutation(users):
    sid, aid = request_with_solution(users)
    profile = users.submit_evaluation(sid, aid, 3, judged_docs=("D3",))
    ordered = users.personalize(result_set("D4", "D2", "D3"), profile)
    assert list(ordered.doc_ids) == ["D3", "D4", "D2"]  # ties keep input order
    assert sorted(ordered.doc_ids) == ["D2", "D3", "D4"]
    assert ordered.total == 3 and ordered.origin_query == "q"


def test_personalize_empty_profile_keeps_order(users):
    profile = users.derive_profile("nobody")
    ordered = users.personalize(result_set("D1", "D4", "D2"), profile)
    assert list(ordered.doc_ids) == ["D1", "D4", "D2"]


def test_personalize_scaling_invariance(users):
    sid, aid = request_with_solution(users)
    profile = users.submit_evaluation(sid, aid, 2, judged_docs=("D3", "D1"))
    base = users.personalize(result_set("D4", "D2", "D3", "D1"), profile)
    for c in (0.25, 1.0, 3.5):
        scaled = users.derive_profile("u1")
        scaled.topic_weights = {k: v * c for k, v in profile.topic_weights.items()}
        assert users.personalize(result_set("D4", "D2", "D3", "D1"),
                                 scaled).doc_ids == base.doc_ids


# -- decisional problems ---------------------------------------------------------------

def test_problem_requires_known_identity(users):
    with pytest.raises(ValidationError):
        users.define_problem(identity="stranger", object="o", signal="s",
                             hypotheses=("h",))


def test_problem_requires_hypotheses(users):
    users.start_session("u1", "goal")
    with pytest.raises(ValidationError):
        users.define_problem(identity="u1", object="o", signal="s", hypotheses=())


def test_problem_round_trip(users):
    users.start_session("u1", "goal")
    pid = users.define_problem(
        identity="u1",
        object="team publications",
        signal="rising demand",
        hypotheses=("output is shifting", "new team forming"),
        cognitive_style="analytic",
        personality_traits=("curious",),
        global_env="national research policy",
        immediate_env="lab steering committee",
    )
    problem = users.get_problem(pid)
    assert problem.identity == "u1"
    assert problem.hypotheses == ("output is shifting", "new team forming")


def test_translate_problem_matches_attrs_and_topics(users):
    users.start_session("u1", "goal")
    pid = users.define_problem(identity="u1", object="team publications",
                               signal="year trend", hypotheses=("h",))
    attributes, unmatched = users.translate_problem(pid)
    # "team" is not in the warehouse schema yet: stays unmatched until enrichment
    assert attributes == ["year"]
    assert unmatched == ["team", "publications", "trend"]


def test_translate_problem_after_enrichment(users, wh):
    from docmart import EnrichmentSource
    from conftest import directory_csv

    wh.enrich(EnrichmentSource.from_csv("d.csv", "authors", "team", directory_csv()))
    users.start_session("u1", "goal")
    pid = users.define_problem(identity="u1", object="team publications",
                               signal="year trend", hypotheses=("h",))
    attributes, unmatched = users.translate_problem(pid)
    assert attributes == ["team", "year"]
    assert unmatched == ["publications", "trend"]


def test_translate_topic_value_maps_to_topics(users):
    users.start_session("u1", "goal")
    pid = users.define_problem(identity="u1", object="databases",
                               signal="", hypotheses=("h",))
    attributes, unmatched = users.translate_problem(pid)
    assert attributes == ["topics"]
    assert unmatched == []


# -- serialization -----------------------------------------------------------------

def test_session_record_round_trip(users):
    top = users.start_session("u1", "broad")
    sub = users.start_subsession(top, "narrow")
    aid = users.record_activity(
        sub, "request", request_text="author:martin", solution=("D3", "D1"),
        note="first pass",
    )
    users.submit_evaluation(sub, aid, 2, "fine", ("D1",))
    users.record_activity(
        top, "synthesis",
        classification=ClassificationSpec(
            axes=("year",), constraint=parse_query("topic:databases")),
    )
    record = session_to_record(users.get_session(top))
    rebuilt = session_from_record(record)
    assert session_to_record(rebuilt) == record
