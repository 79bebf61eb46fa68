"""Durability, replay, corruption handling, locking, compaction."""

import json
import os

import pytest

from docmart import EnrichmentSource, Store
from docmart.errors import ConflictError, StoreError, ValidationError

from conftest import directory_csv, fixture_records


def populate(store):
    store.ingest(fixture_records())
    store.enrich(EnrichmentSource.from_csv("d.csv", "authors", "team",
                                           directory_csv()))
    sid = store.start_session("u1", "find warehouse work")
    sub = store.start_subsession(sid, "narrow to 2003")
    aid = store.record_activity(sub, "request", request_text="author:martin",
                                solution=("D3", "D1"))
    store.submit_evaluation(sub, aid, 3, "good", ("D3",))
    store.define_problem(identity="u1", object="team publications",
                         signal="year trend", hypotheses=("shift",))
    store.record_access("u1", "D3", 2005)
    store.mart_build("team-evolution")
    store.recommend("u1", 2)
    return sid, sub


def test_round_trip_byte_equal(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        populate(store)
        before = store.state_json()
        fingerprint = store.state_fingerprint()
    with Store(path) as reopened:
        assert reopened.state_json() == before
        assert reopened.state_fingerprint() == fingerprint


def test_nested_sessions_survive_reopen(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        sid, sub = populate(store)
    with Store(path) as reopened:
        tops = [s.session_id for s in reopened.list_sessions()]
        assert tops == [sid]
        assert reopened.get_session(sub).parent_id == sid
        assert reopened.get_session(sub).activities[0].evaluation.degree_of_pertinence == 3


def test_snapshot_id_monotone_across_reopen(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        populate(store)
        first = store.snapshot_id
        assert first > 0
    with Store(path) as reopened:
        assert reopened.snapshot_id == first
        reopened.start_session("u2", "more")
        assert reopened.snapshot_id > first


def test_compaction_preserves_state_and_sid(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        populate(store)
        before = store.state_json()
        sid = store.snapshot_id
        store.compact()
        lines = (path / "journal.jsonl").read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["op"] == "base"
    with Store(path) as reopened:
        assert reopened.state_json() == before
        assert reopened.snapshot_id == sid


def test_writes_after_compaction_replay(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        populate(store)
        store.compact()
        store.start_session("u2", "later work")
        before = store.state_json()
    with Store(path) as reopened:
        assert reopened.state_json() == before


def test_failed_mutation_leaves_no_trace(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        store.ingest(fixture_records())
        before = store.state_json()
        sid_before = store.snapshot_id
        with pytest.raises(ValidationError):
            store.start_session("u1", "   ")
        assert store.state_json() == before
        assert store.snapshot_id == sid_before
    with Store(path) as reopened:
        assert reopened.state_json() == before


def test_corrupt_journal_bad_json(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        store.ingest(fixture_records())
    journal = path / "journal.jsonl"
    with open(journal, "a") as fh:
        fh.write("{broken\n")
    with pytest.raises(StoreError) as info:
        Store(path)
    assert "journal.jsonl" in str(info.value)
    assert not (path / "store.lock").exists()  # failed open must not leak the lock


def test_corrupt_journal_broken_chain(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        store.ingest(fixture_records())
    journal = path / "journal.jsonl"
    lines = journal.read_text().splitlines()
    # drop a middle event: the sid chain now has a hole
    del lines[1]
    journal.write_text("\n".join(lines) + "\n")
    with pytest.raises(StoreError) as info:
        Store(path)
    assert "sid" in str(info.value)


def test_corrupt_journal_unknown_op(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        store.start_session("u1", "goal")
        next_sid = store.snapshot_id + 1
    journal = path / "journal.jsonl"
    with open(journal, "a") as fh:
        fh.write(json.dumps({"sid": next_sid, "op": "mystery", "data": {}}) + "\n")
    with pytest.raises(StoreError) as info:
        Store(path)
    assert "unknown op" in str(info.value)


def test_truncated_journal_line(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        store.ingest(fixture_records())
    journal = path / "journal.jsonl"
    text = journal.read_text()
    journal.write_text(text[:-20])  # chop the tail mid-record
    with pytest.raises(StoreError):
        Store(path)


def test_second_writer_conflicts(tmp_path):
    path = tmp_path / "store"
    with Store(path):
        with pytest.raises(ConflictError):
            Store(path)


def test_stale_lock_reclaimed(tmp_path):
    path = tmp_path / "store"
    path.mkdir()
    # a pid that cannot be running (max_pid is far below this)
    (path / "store.lock").write_text("99999999")
    with Store(path) as store:
        assert store.snapshot_id == 0


def test_lock_released_on_close(tmp_path):
    path = tmp_path / "store"
    store = Store(path)
    store.close()
    with Store(path) as second:
        second.start_session("u1", "goal")


def test_empty_store_opens_clean(tmp_path):
    with Store(tmp_path / "fresh") as store:
        assert store.schema() == []
        assert store.list_sessions() == []
        assert store.snapshot_id == 0


def test_reingest_after_reopen_is_idempotent(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        store.ingest(fixture_records())
    with Store(path) as reopened:
        report = reopened.ingest(fixture_records())
        assert report.accepted == 0
        assert report.merged_duplicates == 5
        assert len(reopened.warehouse) == 4


def test_marts_survive_reopen_without_rebuild(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        populate(store)
        cells = dict(store.get_mart("team-evolution").cells)
    with Store(path) as reopened:
        assert dict(reopened.get_mart("team-evolution").cells) == cells


def test_recommend_history_survives_reopen(tmp_path):
    path = tmp_path / "store"
    with Store(path) as store:
        store.ingest(fixture_records())
        first = store.recommend("u1", 2)
    with Store(path) as reopened:
        second = reopened.recommend("u1", 2)
    assert not set(first) & set(second)
    assert len(first + second) == 4


def test_recommend_rejects_nonpositive_n(tmp_path):
    with Store(tmp_path / "store") as store:
        with pytest.raises(ValidationError):
            store.recommend("u1", 0)
