"""Command-line entry points: ingest, link, featurize, audit, plotdata.

Configuration precedence is file < REVAUDIT_* environment variables < CLI
flags.  Exit code is 0 iff every stage completed and validation is clean.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from revaudit.errors import AuditError
from revaudit.pipeline import (
    PLOTDATA_FIGURES,
    _Outputs,
    config_fingerprint,
    export_feature_matrices,
    read_run_config,
    run_audit,
    stage_featurize,
    stage_ingest,
    stage_link,
    write_plotdata,
)

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="revaudit",
        description="Fairness auditing pipeline for peer-review decision data.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="key-value run config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument(
            "--feature-set",
            action="append",
            dest="feature_sets",
            default=None,
            help="restrict to a feature set (repeatable)",
        )

    common(sub.add_parser("ingest", help="load, validate and snapshot the corpus"))
    common(sub.add_parser("link", help="run entity resolution over a loaded corpus"))
    common(sub.add_parser("featurize", help="derive attributes and cluster labels"))
    audit = sub.add_parser("audit", help="full pipeline: fit models and report disparities")
    common(audit)
    audit.add_argument("--force", action="store_true", help="recompute even if outputs are current")

    plot = sub.add_parser("plotdata", help="emit per-figure CSV files from a bundle")
    plot.add_argument("--bundle", required=True, help="bundle.json produced by audit")
    plot.add_argument("--figure", required=True, help=f"one of {', '.join(PLOTDATA_FIGURES)}")
    plot.add_argument("--out", required=True, help="directory for the plot-data files")
    return parser


def _load_config(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    if args.feature_sets:
        overrides["feature_sets"] = ",".join(args.feature_sets)
    return read_run_config(args.config, overrides=overrides)


def _print_summary(out_dir: Path) -> None:
    summary = out_dir / "summary.csv"
    if summary.exists():
        print(summary.read_text(encoding="utf-8"), end="")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "plotdata":
        try:
            written = write_plotdata(args.bundle, args.figure, args.out)
        except (AuditError, ValueError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for path in written:
            print(path)
        return 0

    try:
        config = _load_config(args)
    except (AuditError, ValueError, OSError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(config.out)
    try:
        if args.command == "audit":
            bundle = run_audit(config, force=args.force)
            _print_summary(out_dir)
            for feature_set in bundle.feature_sets:
                auc = bundle.aucs.get(feature_set)
                if auc is not None:
                    print(f"auc[{feature_set}] = {auc:.4f}")
            print(f"reports written to {out_dir} (fingerprint {bundle.fingerprint[:12]})")
            return 0

        outputs = _Outputs(out_dir)
        corpus = stage_ingest(config, outputs)
        if args.command == "ingest":
            _print_summary(out_dir)
            print(f"snapshot written to {out_dir / 'snapshot'}")
            print(f"fingerprint {config_fingerprint(config)[:12]}")
            return 0
        link = stage_link(corpus, config, outputs)
        if args.command == "link":
            print(f"linkage outputs written to {out_dir}")
            return 0
        features = stage_featurize(corpus, config, link, outputs)
        export_feature_matrices(corpus, config, features, outputs)
        print(f"feature outputs written to {out_dir}")
        return 0
    except AuditError as exc:
        report_path = out_dir / "errors.txt"
        out_dir.mkdir(parents=True, exist_ok=True)
        report_path.write_text(str(exc) + "\n", encoding="utf-8")
        print(f"error: {exc}", file=sys.stderr)
        print(f"report: {report_path}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
