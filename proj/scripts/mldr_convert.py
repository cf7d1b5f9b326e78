#!/usr/bin/env python3
"""Converts a local MLDR English download into funnel's eval formats.

Expected inputs (from the Shitao/MLDR dataset, "en" config):
  corpus.jsonl   {"docid", "text"} per line
  test.jsonl     {"query_id", "query", "positive_passages": [{"docid", ...}], ...} per line
Writes corpus.jsonl, queries.tsv and qrels.tsv into --out.
"""

import argparse
import json
from pathlib import Path


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--queries", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--limit-queries", type=int, default=0, help="keep only the first N queries (0 = all)")
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    n_docs = 0
    with open(args.corpus) as src, open(args.out / "corpus.jsonl", "w") as dst:
        for line in src:
            rec = json.loads(line)
            text = rec.get("text", "").strip()
            if not text:
                continue
            first, _, rest = text.partition("\n")
            doc = {"id": rec["docid"], "title": first[:200], "sections": [{"heading": "", "text": text}]}
            dst.write(json.dumps(doc, ensure_ascii=False) + "\n")
            n_docs += 1

    n_queries = 0
    with open(args.queries) as src, open(args.out / "queries.tsv", "w") as q, open(args.out / "qrels.tsv", "w") as r:
        for line in src:
            rec = json.loads(line)
            text = " ".join(rec["query"].split())
            q.write(f"{rec['query_id']}\t{text}\n")
            for pos in rec.get("positive_passages", []):
                r.write(f"{rec['query_id']}\t{pos['docid']}\t1\n")
            n_queries += 1
            if args.limit_queries and n_queries >= args.limit_queries:
                break

    print(f"{n_docs} documents, {n_queries} queries -> {args.out}")


if __name__ == "__main__":
    main()
