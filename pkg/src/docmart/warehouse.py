"""Document warehouse: filtered ingestion, schema metadata, gap detection,
and enrichment from external sources.

The warehouse stores bibliographic records with an open attribute schema.
Records arrive as flat string mappings (one JSON object per line on disk),
pass through a conjunctive selection filter, and are deduplicated on a
normalized (title, year) key.  Attributes that decision support turns out
to need but that no record carries are surfaced by ``detect_gaps`` and can
be filled from directory-style external sources with ``enrich``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import re
import threading
import unicodedata
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import ValidationError

logger = logging.getLogger(__name__)

PUB_TYPES = (
    "journal-article",
    "conference-paper",
    "book-chapter",
    "thesis",
    "report",
    "other",
)

# Core fields every document carries; everything else lives in ``attrs``.
CORE_FIELDS = ("doc_id", "title", "authors", "year", "pub_type", "topics")

# Query-language and join-key aliases for the multi-valued core fields.
ATTRIBUTE_ALIASES = {"author": "authors", "topic": "topics"}

YEAR_MIN, YEAR_MAX = 1900, 2100

# Bucket label for documents lacking a value on a grouped attribute.
MISSING_VALUE = "(missing)"

ATTR_KIND_DOCUMENT = "document-attribute"
ATTR_KIND_USER = "user-attribute"

GAP_ATTRIBUTE_MISSING = "attribute-missing"
GAP_VALUES_MISSING = "values-missing"
GAP_BOTH_MISSING = "both-missing"  # combined classification; see GapReport

_WS = re.compile(r"\s+")


def normalize_attr_name(name: str) -> str:
    """Lowercase, trim, and ASCII-fold an attribute name ("Catégorie" -> "categorie")."""
    folded = unicodedata.normalize("NFKD", name)
    folded = "".join(ch for ch in folded if not unicodedata.combining(ch))
    return folded.strip().lower()


def collapse_ws(text: str) -> str:
    return _WS.sub(" ", text.strip())


def normalize_join_key(key: str) -> str:
    """Join keys fold accents too, so a directory's "Bérnard" still finds
    the plain-ASCII author string."""
    folded = unicodedata.normalize("NFKD", key)
    folded = "".join(ch for ch in folded if not unicodedata.combining(ch))
    return collapse_ws(folded).lower()


def resolve_attribute(name: str) -> str:
    """Map query/join aliases (author, topic) onto canonical field names."""
    name = normalize_attr_name(name)
    return ATTRIBUTE_ALIASES.get(name, name)


@dataclass(frozen=True)
class Document:
    """One bibliographic record.  Instances are never mutated in place;
    merge and enrichment build replacements so readers can hold snapshots."""

    doc_id: str
    title: str
    authors: tuple[str, ...]
    year: int
    pub_type: str
    topics: frozenset[str]
    attrs: dict[str, str] = field(default_factory=dict)

    def values_of(self, attribute: str) -> tuple[str, ...]:
        """String view of an attribute's values; empty when absent."""
        attribute = resolve_attribute(attribute)
        if attribute == "doc_id":
            return (self.doc_id,)
        if attribute == "title":
            return (self.title,)
        if attribute == "authors":
            return self.authors
        if attribute == "year":
            return (str(self.year),)
        if attribute == "pub_type":
            return (self.pub_type,)
        if attribute == "topics":
            return tuple(sorted(self.topics))
        value = self.attrs.get(attribute)
        return (value,) if value is not None else ()

    def dup_key(self) -> tuple[str, int]:
        return (collapse_ws(self.title).lower(), self.year)

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "authors": list(self.authors),
            "year": self.year,
            "pub_type": self.pub_type,
            "topics": sorted(self.topics),
            "attrs": dict(sorted(self.attrs.items())),
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "Document":
        return cls(
            doc_id=record["doc_id"],
            title=record["title"],
            authors=tuple(record["authors"]),
            year=int(record["year"]),
            pub_type=record["pub_type"],
            topics=frozenset(record["topics"]),
            attrs=dict(record["attrs"]),
        )


@dataclass(frozen=True)
class SelectionFilter:
    """Conjunctive ingestion filter: every condition must pass."""

    required_fields: frozenset[str] = frozenset()
    accepted_pub_types: frozenset[str] = frozenset()  # empty = all
    year_range: tuple[int, int] | None = None

    def __post_init__(self):
        if self.year_range is not None:
            lo, hi = self.year_range
            if lo > hi:
                raise ValidationError(f"year_range min {lo} exceeds max {hi}")
        for pt in self.accepted_pub_types:
            if pt not in PUB_TYPES:
                raise ValidationError(f"unknown pub_type in filter: {pt}")

    @classmethod
    def from_mapping(cls, spec: Mapping) -> "SelectionFilter":
        known = {"required_fields", "accepted_pub_types", "year_range"}
        unknown = set(spec) - known
        if unknown:
            raise ValidationError(f"unknown filter keys: {sorted(unknown)}")
        year_range = spec.get("year_range")
        return cls(
            required_fields=frozenset(
                normalize_attr_name(f) for f in spec.get("required_fields", ())
            ),
            accepted_pub_types=frozenset(spec.get("accepted_pub_types", ())),
            year_range=tuple(year_range) if year_range else None,
        )


PERMISSIVE_FILTER = SelectionFilter()


@dataclass
class IngestReport:
    """Partition of one ingest run: accepted + rejected + merged = input count."""

    accepted: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    merged_duplicates: int = 0

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": [[line, reason] for line, reason in self.rejected],
            "merged_duplicates": self.merged_duplicates,
        }


@dataclass(frozen=True)
class AttributeDescriptor:
    name: str
    kind: str  # document-attribute | user-attribute
    coverage: float  # fraction of documents carrying a value, in [0, 1]

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "coverage": self.coverage}


@dataclass
class GapReport:
    """Missing-attribute report.

    ``detect_gaps`` emits attribute-missing (unknown to the warehouse) and
    values-missing (declared but incompletely valued).  The combined
    both-missing kind exists for callers classifying gaps by hand; the
    detector never needs it because an unknown attribute already implies
    its values are absent everywhere.
    """

    entries: list[tuple[str, str, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"entries": [[n, k, c] for n, k, c in self.entries]}


@dataclass(frozen=True)
class EnrichmentSource:
    """External directory used to fill one attribute via a join key."""

    name: str
    join_attr: str
    target_attr: str
    records: Mapping[str, str]

    def normalized_records(self) -> dict[str, str]:
        return {
            normalize_join_key(k): v.strip()
            for k, v in self.records.items()
            if k.strip() and v.strip()
        }

    @classmethod
    def from_csv(
        cls, name: str, join_attr: str, target_attr: str, text: str
    ) -> "EnrichmentSource":
        """Parse the two-column `join_key,value` CSV form (one header line)."""
        reader = csv.reader(io.StringIO(text))
        rows = list(reader)
        if not rows:
            raise ValidationError("enrichment CSV is empty (expected a header line)")
        records: dict[str, str] = {}
        for row in rows[1:]:
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) < 2:
                raise ValidationError(f"enrichment CSV row has no value column: {row!r}")
            records[row[0]] = row[1]
        return cls(name=name, join_attr=join_attr, target_attr=target_attr, records=records)


@dataclass
class EnrichReport:
    docs_updated: int = 0
    values_written: int = 0
    unmatched_keys: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "docs_updated": self.docs_updated,
            "values_written": self.values_written,
            "unmatched_keys": list(self.unmatched_keys),
        }


class Warehouse:
    """In-memory document store with single-writer, multi-reader semantics.

    Mutations (ingest, enrich) are serialized by a lock and validate before
    they touch state; reads operate on an immutable snapshot tuple.  An
    optional journal receives a full-document put for every stored change
    so a gateway store can persist and replay the warehouse.
    """

    def __init__(self, journal=None):
        self._docs: dict[str, Document] = {}
        self._by_key: dict[tuple[str, int], str] = {}
        self._lock = threading.RLock()
        self._journal = journal

    # -- read side -------------------------------------------------------

    def snapshot(self) -> tuple[Document, ...]:
        with self._lock:
            return tuple(self._docs.values())

    def get(self, doc_id: str) -> Document | None:
        with self._lock:
            return self._docs.get(doc_id)

    def __len__(self) -> int:
        with self._lock:
            return len(self._docs)

    def attribute_names(self) -> set[str]:
        """Canonical names known to the warehouse: core fields plus every
        attrs key occurring in at least one document."""
        docs = self.snapshot()
        names = set(CORE_FIELDS)
        for doc in docs:
            names.update(doc.attrs)
        return names

    def topic_values(self) -> set[str]:
        values: set[str] = set()
        for doc in self.snapshot():
            values.update(doc.topics)
        return values

    def schema(self) -> list[AttributeDescriptor]:
        docs = self.snapshot()
        if not docs:
            return []
        total = len(docs)
        counts: dict[str, int] = {}
        for name in CORE_FIELDS:
            counts[name] = sum(1 for d in docs if d.values_of(name))
        for doc in docs:
            for name in doc.attrs:
                counts[name] = counts.get(name, 0) + 1
        return [
            AttributeDescriptor(name=name, kind=ATTR_KIND_DOCUMENT, coverage=counts[name] / total)
            for name in sorted(counts)
        ]

    def detect_gaps(self, required: Iterable[str]) -> GapReport:
        docs = self.snapshot()
        known = self.attribute_names()
        coverage = {d.name: d.coverage for d in self.schema()}
        report = GapReport()
        for raw in sorted({resolve_attribute(r) for r in required}):
            if raw not in known:
                report.entries.append((raw, GAP_ATTRIBUTE_MISSING, len(docs)))
            elif coverage.get(raw, 0.0) < 1.0:
                lacking = sum(1 for d in docs if not d.values_of(raw))
                report.entries.append((raw, GAP_VALUES_MISSING, lacking))
            # fully covered attributes are omitted
        return report

    # -- write side ------------------------------------------------------

    def ingest_lines(self, lines: Iterable[str], selection: SelectionFilter | None = None) -> IngestReport:
        """Ingest the on-disk format: one flat JSON object per line."""
        numbered: list[tuple[int, Mapping | None, str | None]] = []
        # Materialize first: an unreadable stream must abort with no writes.
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                numbered.append((lineno, None, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(record, dict):
                numbered.append((lineno, None, "record is not a JSON object"))
                continue
            numbered.append((lineno, record, None))
        return self._ingest_numbered(numbered, selection or PERMISSIVE_FILTER)

    def ingest(self, records: Sequence[Mapping], selection: SelectionFilter | None = None) -> IngestReport:
        """Ingest already-parsed flat records (1-based positions as line numbers)."""
        numbered = [(i, rec, None) for i, rec in enumerate(records, start=1)]
        return self._ingest_numbered(numbered, selection or PERMISSIVE_FILTER)

    def _ingest_numbered(self, numbered, selection: SelectionFilter) -> IngestReport:
        report = IngestReport()
        with self._lock:
            for lineno, record, parse_error in numbered:
                if parse_error is not None:
                    report.rejected.append((lineno, parse_error))
                    continue
                try:
                    doc = self._normalize_record(record)
                    self._apply_filter(doc, record, selection)
                except ValidationError as exc:
                    report.rejected.append((lineno, str(exc)))
                    continue
                key = doc.dup_key()
                existing_id = self._by_key.get(key)
                if existing_id is not None:
                    self._merge(existing_id, doc)
                    report.merged_duplicates += 1
                    continue
                if doc.doc_id in self._docs:
                    report.rejected.append((lineno, f"duplicate doc_id: {doc.doc_id}"))
                    continue
                self._put(doc)
                report.accepted += 1
        return report

    def _normalize_record(self, record: Mapping) -> Document:
        values: dict[str, str] = {}
        for key, raw in record.items():
            if raw is None:
                continue
            if not isinstance(raw, (str, int, float)):
                raise ValidationError(f"non-scalar value for key: {key}")
            values[normalize_attr_name(str(key))] = str(raw).strip()

        doc_id = values.pop("doc_id", "")
        if not doc_id:
            raise ValidationError("missing required field: doc_id")
        title = values.pop("title", "")
        if not title:
            raise ValidationError("missing required field: title")
        authors = tuple(a.strip() for a in values.pop("authors", "").split(";") if a.strip())
        if not authors:
            raise ValidationError("missing required field: authors")
        year_text = values.pop("year", "")
        try:
            year = int(float(year_text)) if year_text else 0
        except ValueError:
            raise ValidationError(f"invalid year: {year_text}")
        if not year:
            raise ValidationError("missing required field: year")
        if not YEAR_MIN <= year <= YEAR_MAX:
            raise ValidationError(f"year out of range: {year}")
        pub_type = values.pop("pub_type", "").lower()
        if pub_type not in PUB_TYPES:
            pub_type = "other"
        topics = frozenset(t.strip().lower() for t in values.pop("topics", "").split(";") if t.strip())
        attrs = {k: v for k, v in values.items() if v}  # empty string = absent
        return Document(
            doc_id=doc_id, title=title, authors=authors, year=year,
            pub_type=pub_type, topics=topics, attrs=attrs,
        )

    def _apply_filter(self, doc: Document, record: Mapping, selection: SelectionFilter):
        for fieldname in sorted(selection.required_fields):
            if not doc.values_of(fieldname):
                raise ValidationError(f"missing required field: {fieldname}")
        if selection.accepted_pub_types and doc.pub_type not in selection.accepted_pub_types:
            raise ValidationError(f"pub_type not accepted: {doc.pub_type}")
        if selection.year_range is not None:
            lo, hi = selection.year_range
            if not lo <= doc.year <= hi:
                raise ValidationError(f"year outside range: {doc.year}")

    def _merge(self, existing_id: str, incoming: Document):
        existing = self._docs[existing_id]
        merged_attrs = dict(existing.attrs)
        for key, value in incoming.attrs.items():
            if key not in merged_attrs:
                merged_attrs[key] = value
            elif merged_attrs[key] != value:
                logger.warning(
                    "merge conflict on %s.%s: keeping %r, dropping %r",
                    existing_id, key, merged_attrs[key], value,
                )
        merged = replace(
            existing,
            topics=existing.topics | incoming.topics,
            attrs=merged_attrs,
        )
        self._put(merged)

    def _put(self, doc: Document):
        self._docs[doc.doc_id] = doc
        self._by_key[doc.dup_key()] = doc.doc_id
        if self._journal is not None:
            self._journal.record("doc.put", doc.to_record())

    def load_doc(self, record: Mapping):
        """Replay hook: install a document record without journaling."""
        doc = Document.from_record(record)
        with self._lock:
            self._docs[doc.doc_id] = doc
            self._by_key[doc.dup_key()] = doc.doc_id

    def enrich(self, source: EnrichmentSource) -> EnrichReport:
        target = normalize_attr_name(source.target_attr)
        if not target:
            raise ValidationError("enrichment target attribute name is empty")
        records = source.normalized_records()
        report = EnrichReport()
        matched_keys: set[str] = set()
        with self._lock:
            for doc in list(self._docs.values()):
                join_values = [normalize_join_key(v) for v in doc.values_of(source.join_attr)]
                matches = [(v, records[v]) for v in join_values if v in records]
                matched_keys.update(v for v, _ in matches)
                if not matches or target in doc.attrs:
                    continue
                chosen = matches[0][1]  # first join value wins on disagreement
                distinct = {value for _, value in matches}
                if len(distinct) > 1:
                    logger.warning(
                        "enrich disagreement on %s.%s: %s; keeping %r",
                        doc.doc_id, target, sorted(distinct), chosen,
                    )
                updated = replace(doc, attrs={**doc.attrs, target: chosen})
                self._put(updated)
                report.docs_updated += 1
                report.values_written += sum(1 for _, value in matches if value == chosen)
        report.unmatched_keys = sorted(set(records) - matched_keys)
        return report
