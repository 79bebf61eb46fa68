"""Aggregated, multidimensional views over the warehouse and its usage.

A mart is a small cube: named dimensions over document attributes (or
access-event attributes) and one additive count measure.  Marts are
snapshots; they answer reads only and change when rebuilt or refreshed,
never in place.  Cell keys are attribute-value tuples in dimension order,
with "(missing)" standing in for absent values so every document lands in
exactly one cell per single-valued dimension.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Callable, Iterable, Mapping, Sequence

from .errors import NotFoundError, ValidationError
from .warehouse import MISSING_VALUE, Document, Warehouse, resolve_attribute

logger = logging.getLogger(__name__)

SOURCE_DOCUMENTS = "documents"
SOURCE_ACCESS = "access_events"

MEASURES = {SOURCE_DOCUMENTS: "doc_count", SOURCE_ACCESS: "access_count"}

# attributes an access event carries; "access-year" keeps the event year
# distinct from the document's publication year
EVENT_ATTRS = ("identity", "access-year", "doc_id", "kind")

YEAR_DIMS = ("year", "access-year")


@dataclass(frozen=True)
class MartSpec:
    name: str
    dimensions: tuple[str, ...]
    source: str = SOURCE_DOCUMENTS

    def __post_init__(self):
        if not self.name.strip():
            raise ValidationError("mart name must be non-empty")
        if not self.dimensions:
            raise ValidationError("a mart needs at least one dimension")
        if len(set(self.dimensions)) != len(self.dimensions):
            raise ValidationError(f"repeated dimension in mart spec: {self.dimensions}")
        if self.source not in MEASURES:
            raise ValidationError(f"unknown mart source: {self.source}")

    @property
    def measure(self) -> str:
        return MEASURES[self.source]


@dataclass(frozen=True)
class AccessEvent:
    identity: str
    doc_id: str
    year: int
    kind: str = "consult"

    def value_of(self, attribute: str) -> str:
        if attribute == "identity":
            return self.identity
        if attribute == "access-year":
            return str(self.year)
        if attribute == "doc_id":
            return self.doc_id
        if attribute == "kind":
            return self.kind
        raise ValidationError(f"attribute not tracked for access events: {attribute}")


@dataclass
class Mart:
    spec: MartSpec
    cells: dict[tuple[str, ...], int]
    built_at: str = field(default="", compare=False)

    def to_json(self) -> dict:
        return {
            "name": self.spec.name,
            "dimensions": list(self.spec.dimensions),
            "measure": self.spec.measure,
            "source": self.spec.source,
            "built_at": self.built_at,
            "cells": [
                {"key": list(key), "value": value}
                for key, value in sorted(self.cells.items())
            ],
        }


BUILTIN_SPECS = (
    MartSpec("topic-evolution", ("topics", "year"), SOURCE_DOCUMENTS),
    MartSpec("demand-evolution", ("identity", "access-year"), SOURCE_ACCESS),
    MartSpec("team-evolution", ("team", "year"), SOURCE_DOCUMENTS),
)


def _doc_values(doc: Document, attribute: str) -> tuple[str, ...]:
    values = doc.values_of(attribute)
    if not values:
        return (MISSING_VALUE,)
    return tuple(dict.fromkeys(values))  # drop duplicates, keep order


def build_cells(docs: Iterable[Document], spec: MartSpec) -> dict[tuple[str, ...], int]:
    """Group-by count over documents.  Multi-valued dimensions fan out:
    a document contributes one count per combination of its values."""
    resolved = [resolve_attribute(d) for d in spec.dimensions]
    cells: dict[tuple[str, ...], int] = {}
    for doc in docs:
        per_dim = [_doc_values(doc, dim) for dim in resolved]
        for key in itertools.product(*per_dim):
            cells[key] = cells.get(key, 0) + 1
    return cells


def build_access_cells(
    events: Iterable[AccessEvent], spec: MartSpec
) -> dict[tuple[str, ...], int]:
    cells: dict[tuple[str, ...], int] = {}
    for event in events:
        key = tuple(event.value_of(dim) for dim in spec.dimensions)
        cells[key] = cells.get(key, 0) + 1
    return cells


def rollup(mart: Mart, drop_dimension: str) -> Mart:
    """Remove one dimension, summing cells that collapse together."""
    wanted = resolve_attribute(drop_dimension)
    resolved = [resolve_attribute(d) for d in mart.spec.dimensions]
    if wanted not in resolved:
        raise ValidationError(f"dimension not in mart: {drop_dimension}")
    index = resolved.index(wanted)
    kept = tuple(
        d for position, d in enumerate(mart.spec.dimensions) if position != index
    )
    if not kept:
        raise ValidationError("cannot roll up the last dimension")
    cells: dict[tuple[str, ...], int] = {}
    for key, value in mart.cells.items():
        new_key = key[:index] + key[index + 1 :]
        cells[new_key] = cells.get(new_key, 0) + value
    return Mart(
        spec=replace(mart.spec, dimensions=kept),
        cells=cells,
        built_at=mart.built_at,
    )


def slice_mart(mart: Mart, dimension: str, value: str) -> Mart:
    """Fix one dimension to a value and drop it from the key."""
    wanted = resolve_attribute(dimension)
    resolved = [resolve_attribute(d) for d in mart.spec.dimensions]
    if wanted not in resolved:
        raise ValidationError(f"dimension not in mart: {dimension}")
    index = resolved.index(wanted)
    kept = tuple(
        d for position, d in enumerate(mart.spec.dimensions) if position != index
    )
    if not kept:
        raise ValidationError("cannot slice away the last dimension")
    cells: dict[tuple[str, ...], int] = {}
    for key, count in mart.cells.items():
        if key[index].lower() != value.lower():
            continue
        new_key = key[:index] + key[index + 1 :]
        cells[new_key] = cells.get(new_key, 0) + count
    return Mart(
        spec=replace(mart.spec, dimensions=kept),
        cells=cells,
        built_at=mart.built_at,
    )


def year_over_year(mart: Mart) -> dict[int, int]:
    """Change in total count between consecutive observed years.  Needs a
    year-like dimension; "(missing)" years are left out."""
    resolved = [resolve_attribute(d) for d in mart.spec.dimensions]
    year_index = next(
        (i for i, d in enumerate(resolved) if d in YEAR_DIMS), None
    )
    if year_index is None:
        raise ValidationError(f"mart has no year dimension: {mart.spec.dimensions}")
    totals: dict[int, int] = {}
    for key, count in mart.cells.items():
        raw = key[year_index]
        if raw == MISSING_VALUE:
            continue
        totals[int(raw)] = totals.get(int(raw), 0) + count
    years = sorted(totals)
    return {
        year: totals[year] - totals[previous]
        for previous, year in zip(years, years[1:])
    }


def export_csv(mart: Mart) -> str:
    """Header of dimension names plus "value"; one row per cell, sorted by
    key so exports diff cleanly."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(list(mart.spec.dimensions) + ["value"])
    for key, value in sorted(mart.cells.items()):
        writer.writerow(list(key) + [value])
    return out.getvalue()


class MartEngine:
    """Registry of mart definitions plus the built snapshots and the
    access-event log feeding usage marts."""

    def __init__(self, warehouse: Warehouse, journal=None):
        self.warehouse = warehouse
        self._journal = journal
        self._specs: dict[str, MartSpec] = {s.name: s for s in BUILTIN_SPECS}
        self._spec_order: list[str] = [s.name for s in BUILTIN_SPECS]
        self._marts: dict[str, Mart] = {}
        self._access: list[AccessEvent] = []

    # -- access events -----------------------------------------------------

    def record_access(self, identity: str, doc_id: str, year: int, kind: str = "consult"):
        if not identity.strip():
            raise ValidationError("access event identity must be non-empty")
        if self.warehouse.get(doc_id) is None:
            raise NotFoundError(f"unknown document: {doc_id}")
        event = AccessEvent(
            identity=identity, doc_id=doc_id, year=int(year), kind=kind or "consult"
        )
        self._access.append(event)
        if self._journal is not None:
            self._journal.record("access.add", access_to_record(event))

    def access_events(self) -> tuple[AccessEvent, ...]:
        return tuple(self._access)

    # -- specs and builds ----------------------------------------------------

    def specs(self) -> list[MartSpec]:
        return [self._specs[name] for name in self._spec_order]

    def get_spec(self, name: str) -> MartSpec:
        spec = self._specs.get(name)
        if spec is None:
            raise NotFoundError(f"unknown mart: {name}")
        return spec

    def get_mart(self, name: str) -> Mart:
        mart = self._marts.get(name)
        if mart is None:
            raise NotFoundError(f"mart not built: {name}")
        return mart

    def list_marts(self) -> list[dict]:
        listing = []
        for spec in self.specs():
            mart = self._marts.get(spec.name)
            listing.append(
                {
                    "name": spec.name,
                    "dimensions": list(spec.dimensions),
                    "measure": spec.measure,
                    "source": spec.source,
                    "built": mart is not None,
                    "built_at": mart.built_at if mart is not None else None,
                    "cell_count": len(mart.cells) if mart is not None else None,
                }
            )
        return listing

    def _check_dimensions(self, spec: MartSpec):
        if spec.source == SOURCE_ACCESS:
            for dim in spec.dimensions:
                if dim not in EVENT_ATTRS:
                    raise ValidationError(
                        f"attribute not tracked for access events: {dim}"
                    )
            return
        known = self.warehouse.attribute_names()
        for dim in spec.dimensions:
            if resolve_attribute(dim) not in known:
                raise ValidationError(f"attribute not in warehouse schema: {dim}")

    def build(self, name: str) -> Mart:
        """Build (or rebuild) a registered mart from current state.  Every
        dimension must exist in the source schema; a missing attribute is
        the caller's cue to enrich first."""
        spec = self.get_spec(name)
        self._check_dimensions(spec)
        if spec.source == SOURCE_ACCESS:
            cells = build_access_cells(self._access, spec)
        else:
            cells = build_cells(self.warehouse.snapshot(), spec)
        mart = Mart(
            spec=spec,
            cells=cells,
            built_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        )
        self._marts[name] = mart
        if self._journal is not None:
            self._journal.record("mart.built", mart_to_record(mart))
        return mart

    def refresh(self, name: str) -> Mart:
        """Same computation as build, but only for marts that already exist;
        keeps 'refresh' an explicit, periodic act."""
        if name not in self._marts:
            raise NotFoundError(f"mart not built: {name}")
        return self.build(name)

    # -- persistence hooks ---------------------------------------------------

    def load_access(self, record: Mapping):
        self._access.append(access_from_record(record))

    def load_mart(self, record: Mapping):
        mart = mart_from_record(record)
        self._specs.setdefault(mart.spec.name, mart.spec)
        if mart.spec.name not in self._spec_order:
            self._spec_order.append(mart.spec.name)
        self._marts[mart.spec.name] = mart


# -- record (de)serialization ---------------------------------------------

def access_to_record(event: AccessEvent) -> dict:
    return {
        "identity": event.identity,
        "doc_id": event.doc_id,
        "year": event.year,
        "kind": event.kind,
    }


def access_from_record(record: Mapping) -> AccessEvent:
    return AccessEvent(
        identity=record["identity"],
        doc_id=record["doc_id"],
        year=int(record["year"]),
        kind=record.get("kind", "consult"),
    )


def mart_to_record(mart: Mart) -> dict:
    return mart.to_json()


def mart_from_record(record: Mapping) -> Mart:
    spec = MartSpec(
        name=record["name"],
        dimensions=tuple(record["dimensions"]),
        source=record.get("source", SOURCE_DOCUMENTS),
    )
    cells = {
        tuple(cell["key"]): int(cell["value"]) for cell in record.get("cells", [])
    }
    return Mart(spec=spec, cells=cells, built_at=record.get("built_at", ""))
