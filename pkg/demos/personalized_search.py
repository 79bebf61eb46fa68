"""How relevance feedback changes ranking: the same query before and after
an evaluation, then non-repeating recommendations.

Run from the repo root:  python3 demos/personalized_search.py
"""

import tempfile
from pathlib import Path

from docmart import Store

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
QUERY = "year:2003 OR year:2004"


def main():
    with tempfile.TemporaryDirectory() as tmp:
        store = Store(Path(tmp) / "store")
        store.ingest_lines((FIXTURES / "corpus_f5.jsonl").read_text().splitlines())

        print("canonical order:", store.query(QUERY).doc_ids)

        # dupont opens a session, runs the query, and judges D3 highly
        # pertinent.  Weights come from the judged doc's topics.
        sid = store.start_session("dupont", "survey warehouse design work")
        aid = store.record_activity(
            sid, "request", request_text=QUERY,
            solution=store.query(QUERY).doc_ids,
        )
        profile = store.submit_evaluation(
            sid, aid, degree=3, reasons="exactly the design style I need",
            judged_docs=("D3",),
        )
        print("profile weights: ", profile.topic_weights)

        print("personalized:    ", store.query(QUERY, identity="dupont").doc_ids)

        # Recommendations draw on the same profile and never repeat.
        print("recommend 2:     ", store.recommend("dupont", 2))
        print("recommend 2 more:", store.recommend("dupont", 2))
        print("exhausted:       ", store.recommend("dupont", 2))

        store.close()


if __name__ == "__main__":
    main()
