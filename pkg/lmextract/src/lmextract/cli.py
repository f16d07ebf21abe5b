"""CLI: one subcommand per feature type, one process per feature file."""

from __future__ import annotations

import argparse
import sys

from lmextract.backends import default_backend
from lmextract.extract import extract_embeddings, extract_fluency, extract_sentiment
from lmextract.records import read_text_dump, read_title_abstract_dump, write_feature_file


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmextract",
        description="Extract LM features (sentiment, fluency, embeddings) into revaudit feature files.",
    )
    sub = parser.add_subparsers(dest="feature", required=True)
    for name, help_text in [
        ("sentiment", "positive-sentiment probability per review text"),
        ("fluency", "prose fluency score per submission full text"),
        ("embedding", "document embedding per title-abstract pair"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True,
                       help="NDJSON {id, text} (or {id, title, abstract} for embeddings)")
        p.add_argument("--out", required=True, help="feature file to write")
        p.add_argument("--backend", default="offline", choices=("offline", "hf"))
        p.add_argument("--batch-size", type=int, default=16)
        p.add_argument("--device", default="cpu")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        backend = default_backend(args.feature, args.backend)
        if args.backend == "hf":
            backend.batch_size = args.batch_size
            backend.device = args.device
        if args.feature == "embedding":
            records = extract_embeddings(read_title_abstract_dump(args.input), backend)
        elif args.feature == "sentiment":
            records = extract_sentiment(read_text_dump(args.input), backend)
        else:
            records = extract_fluency(read_text_dump(args.input), backend)
        path = write_feature_file(records, args.out)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    missing = sum(1 for r in records if r.value is None)
    print(f"{path}: {len(records)} records ({missing} missing) from {backend.model_id}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
