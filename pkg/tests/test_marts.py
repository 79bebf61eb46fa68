"""Mart construction, cube operations, access-event marts, CSV export."""

import random

import pytest

from docmart import (
    BUILTIN_SPECS,
    EnrichmentSource,
    Mart,
    MartEngine,
    MartSpec,
    Warehouse,
    build_cells,
    export_csv,
    rollup,
    slice_mart,
    year_over_year,
)
from docmart.errors import NotFoundError, ValidationError
from docmart.marts import SOURCE_ACCESS, build_access_cells, AccessEvent

from conftest import directory_csv


@pytest.fixture
def wh(corpus_records):
    warehouse = Warehouse()
    warehouse.ingest(corpus_records)
    return warehouse


@pytest.fixture
def enriched(wh):
    wh.enrich(EnrichmentSource.from_csv("d.csv", "authors", "team", directory_csv()))
    return wh


@pytest.fixture
def engine(enriched):
    return MartEngine(enriched)


# -- spec validation ------------------------------------------------------------

def test_spec_validation():
    with pytest.raises(ValidationError):
        MartSpec("x", ())
    with pytest.raises(ValidationError):
        MartSpec("x", ("year", "year"))
    with pytest.raises(ValidationError):
        MartSpec("", ("year",))
    with pytest.raises(ValidationError):
        MartSpec("x", ("year",), source="stream")


def test_builtin_specs_present():
    names = [s.name for s in BUILTIN_SPECS]
    assert names == ["topic-evolution", "demand-evolution", "team-evolution"]
    by_name = {s.name: s for s in BUILTIN_SPECS}
    assert by_name["topic-evolution"].dimensions == ("topics", "year")
    assert by_name["demand-evolution"].dimensions == ("identity", "access-year")
    assert by_name["demand-evolution"].source == SOURCE_ACCESS
    assert by_name["team-evolution"].dimensions == ("team", "year")


# -- document cubes -------------------------------------------------------------

def test_team_evolution_cells(engine):
    mart = engine.build("team-evolution")
    assert mart.cells == {
        ("SITE", "2002"): 1,
        ("SITE", "2003"): 2,
        ("ORPAILLEUR", "2004"): 1,
    }
    assert mart.spec.measure == "doc_count"


def test_build_fails_on_absent_attribute(wh):
    engine = MartEngine(wh)  # no enrichment: no "team" anywhere
    with pytest.raises(ValidationError) as info:
        engine.build("team-evolution")
    assert "attribute not in warehouse schema: team" in str(info.value)


def test_topic_evolution_fans_out(engine):
    mart = engine.build("topic-evolution")
    # D3 carries two topics: one count under each
    assert mart.cells[("databases", "2003")] == 1
    assert mart.cells[("warehousing", "2003")] == 1
    assert mart.cells[("databases", "2002")] == 1
    assert sum(mart.cells.values()) == 5  # 4 docs, one of them twice


def test_missing_bucket_keeps_every_doc(enriched):
    enriched.ingest([{"doc_id": "D9", "title": "Extra", "authors": "zed",
                      "year": 2005}])
    engine = MartEngine(enriched)
    mart = engine.build("team-evolution")
    assert mart.cells[("(missing)", "2005")] == 1
    assert sum(mart.cells.values()) == 5


def test_unknown_mart(engine):
    with pytest.raises(NotFoundError):
        engine.build("nonsense")
    with pytest.raises(NotFoundError):
        engine.get_mart("team-evolution")  # not built yet


def test_refresh_requires_prior_build(engine):
    with pytest.raises(NotFoundError):
        engine.refresh("team-evolution")
    engine.build("team-evolution")
    assert engine.refresh("team-evolution").cells == engine.get_mart("team-evolution").cells


def test_refresh_reflects_new_state(engine, enriched):
    engine.build("team-evolution")
    enriched.ingest([{"doc_id": "D9", "title": "More", "authors": "zed",
                      "year": 2004, "team": "SITE"}])
    refreshed = engine.refresh("team-evolution")
    assert refreshed.cells[("SITE", "2004")] == 1


def test_built_mart_cells_unchanged_by_later_ingest(engine, enriched):
    mart = engine.build("team-evolution")
    before = dict(mart.cells)
    enriched.ingest([{"doc_id": "D9", "title": "More", "authors": "zed",
                      "year": 2004, "team": "SITE"}])
    assert engine.get_mart("team-evolution").cells == before


def test_list_marts(engine):
    engine.build("team-evolution")
    rows = {row["name"]: row for row in engine.list_marts()}
    assert rows["team-evolution"]["built"] is True
    assert rows["team-evolution"]["cell_count"] == 3
    assert rows["topic-evolution"]["built"] is False


# -- access-event cubes --------------------------------------------------------------

def test_demand_evolution(engine):
    engine.record_access("lib-user", "D1", 2005)
    engine.record_access("lib-user", "D2", 2005)
    engine.record_access("lib-user", "D1", 2006)
    engine.record_access("other", "D1", 2006)
    mart = engine.build("demand-evolution")
    assert mart.cells == {
        ("lib-user", "2005"): 2,
        ("lib-user", "2006"): 1,
        ("other", "2006"): 1,
    }
    assert mart.spec.measure == "access_count"


def test_access_event_requires_known_doc(engine):
    with pytest.raises(NotFoundError):
        engine.record_access("u", "D99", 2005)


def test_access_event_requires_identity(engine):
    with pytest.raises(ValidationError):
        engine.record_access("  ", "D1", 2005)


def test_access_cells_dimension_check():
    events = [AccessEvent("u", "D1", 2005)]
    spec = MartSpec("m", ("identity",), source=SOURCE_ACCESS)
    assert build_access_cells(events, spec) == {("u",): 1}
    with pytest.raises(ValidationError):
        build_access_cells(events, MartSpec("m", ("year",), source=SOURCE_ACCESS))


# -- cube operations ------------------------------------------------------------------

def test_rollup_team_year_to_team(engine):
    mart = engine.build("team-evolution")
    rolled = rollup(mart, "year")
    assert rolled.cells == {("SITE",): 3, ("ORPAILLEUR",): 1}
    assert rolled.spec.dimensions == ("team",)


def test_rollup_matches_direct_build(engine, enriched):
    mart = engine.build("team-evolution")
    direct = build_cells(enriched.snapshot(), MartSpec("t", ("team",)))
    assert rollup(mart, "year").cells == direct


def test_rollup_unknown_dimension(engine):
    mart = engine.build("team-evolution")
    with pytest.raises(ValidationError):
        rollup(mart, "pub_type")


def test_rollup_cannot_drop_last_dimension(engine):
    mart = rollup(engine.build("team-evolution"), "year")
    with pytest.raises(ValidationError):
        rollup(mart, "team")


def test_slice(engine):
    mart = engine.build("team-evolution")
    sliced = slice_mart(mart, "team", "SITE")
    assert sliced.cells == {("2002",): 1, ("2003",): 2}
    assert sliced.spec.dimensions == ("year",)


def test_slice_value_case_insensitive(engine):
    mart = engine.build("team-evolution")
    assert slice_mart(mart, "team", "site").cells == {("2002",): 1, ("2003",): 2}


def test_year_over_year(engine):
    mart = engine.build("team-evolution")
    assert year_over_year(mart) == {2003: 1, 2004: -1}


def test_year_over_year_requires_year_dim(engine):
    mart = rollup(engine.build("team-evolution"), "year")
    with pytest.raises(ValidationError):
        year_over_year(mart)


def test_year_over_year_skips_missing(enriched):
    enriched.ingest([{"doc_id": "D9", "title": "No year attr trick", "authors": "z",
                      "year": 2004, "team": "SITE"}])
    engine = MartEngine(enriched)
    mart = engine.build("team-evolution")
    deltas = year_over_year(mart)
    assert deltas == {2003: 1, 2004: 0}


# -- export ---------------------------------------------------------------------------

def test_export_csv_exact(engine):
    mart = engine.build("team-evolution")
    assert export_csv(mart) == (
        "team,year,value\n"
        "ORPAILLEUR,2004,1\n"
        "SITE,2002,1\n"
        "SITE,2003,2\n"
    )


def test_export_csv_missing_literal(enriched):
    enriched.ingest([{"doc_id": "D9", "title": "Extra", "authors": "zed",
                      "year": 2005}])
    engine = MartEngine(enriched)
    text = export_csv(engine.build("team-evolution"))
    assert "(missing),2005,1" in text.splitlines()


# -- random-cube equivalence (small, seeded; the big run lives in acceptance) ---------

def brute_force_cells(records, dims):
    alias = {"author": "authors", "topic": "topics"}
    counts = {}

    def values_for(record, dim):
        name = alias.get(dim, dim)
        raw = record.get(name)
        if raw is None or str(raw).strip() == "":
            return ["(missing)"]
        if name in ("authors", "topics"):
            parts = []
            for piece in str(raw).split(";"):
                piece = piece.strip()
                if name == "topics":
                    piece = piece.lower()
                if piece and piece not in parts:
                    parts.append(piece)
            return parts or ["(missing)"]
        return [str(raw)]

    def fan(record, remaining):
        if not remaining:
            return [()]
        rest = fan(record, remaining[1:])
        return [(v,) + tail for v in values_for(record, remaining[0]) for tail in rest]

    for record in records:
        for key in fan(record, dims):
            counts[key] = counts.get(key, 0) + 1
    return counts


def test_random_cubes_match_brute_force():
    rng = random.Random(11)
    dims_pool = ["year", "pub_type", "topics", "authors", "team"]
    for round_no in range(25):
        records = []
        for i in range(rng.randint(5, 40)):
            record = {
                "doc_id": f"R{round_no}x{i}",
                "title": f"title {round_no} {i}",
                "authors": ";".join(rng.sample(["a", "b", "c", "d"], rng.randint(1, 2))),
                "year": rng.randint(2000, 2004),
                "pub_type": rng.choice(["report", "thesis"]),
            }
            if rng.random() < 0.6:
                record["topics"] = ";".join(rng.sample(["t1", "t2", "t3"],
                                                       rng.randint(1, 2)))
            if rng.random() < 0.4:
                record["team"] = rng.choice(["X", "Y"])
            records.append(record)
        wh = Warehouse()
        wh.ingest(records)
        kept = {d.doc_id for d in wh.snapshot()}
        live = [r for r in records if r["doc_id"] in kept]
        dims = tuple(rng.sample(dims_pool, rng.randint(1, 3)))
        spec = MartSpec("probe", dims)
        assert build_cells(wh.snapshot(), spec) == brute_force_cells(live, list(dims))
