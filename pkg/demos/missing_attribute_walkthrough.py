"""End-to-end walkthrough: an analyst needs publications-per-team, but the
corpus has no team attribute.  The gap report names what is missing, a
staff directory fills it, and the mart builds.

Run from the repo root:  python3 demos/missing_attribute_walkthrough.py
"""

import json
import tempfile
from pathlib import Path

from docmart import DocmartError, EnrichmentSource, Store, export_csv

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    with tempfile.TemporaryDirectory() as tmp:
        store = Store(Path(tmp) / "store")

        print("== ingest the corpus ==")
        report = store.ingest_lines(
            (FIXTURES / "corpus_f5.jsonl").read_text().splitlines()
        )
        print(json.dumps(report.to_json()))

        print("\n== ask for the team mart too early ==")
        try:
            store.mart_build("team-evolution")
        except DocmartError as exc:
            print(f"build failed: {exc}")

        print("\n== what exactly is missing? ==")
        for name, kind, affected in store.detect_gaps(["team"]).entries:
            print(f"{name} {kind} affects {affected} documents")

        print("\n== join the staff directory in ==")
        directory = EnrichmentSource(
            name="staff-directory",
            join_attr="authors",
            target_attr="team",
            records={"martin": "SITE", "dupont": "SITE", "bernard": "ORPAILLEUR"},
        )
        print(json.dumps(store.enrich(directory).to_json()))

        print("\n== now the mart builds ==")
        mart = store.mart_build("team-evolution")
        print(export_csv(mart), end="")

        store.close()


if __name__ == "__main__":
    main()
