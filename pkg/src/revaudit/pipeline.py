"""Audit pipeline: ingest -> link -> featurize -> fit -> fairness reports.

Every stage is a pure function of (corpus snapshot, run config, seed), so a
rerun with identical inputs produces byte-identical report files.  Stages
persist their artifacts under the output directory together with a content
hash; a rerun skips stages whose hash is unchanged.
"""

from __future__ import annotations

import bisect
import datetime
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import revaudit
from revaudit.corpus.io import load_corpus, load_snapshot, read_config, write_corpus
from revaudit.corpus.model import Corpus, CorpusConfig
from revaudit.errors import AuditError, StageError
from revaudit.fairness import (
    DisparityReport,
    GroupedOutcome,
    MarginalCurve,
    cdf_max_disparity,
    disparity_report,
    marginal_curve,
)
from revaudit.features.attributes import citation_percentile_table, sensitive_attributes
from revaudit.features.gender import load_gender_dictionary
from revaudit.features.geography import load_overrides
from revaudit.features.matrix import FEATURE_SETS, DesignMatrixBuilder, FeatureContext
from revaudit.linkage import cluster_keywords, iclr_ranking, match_arxiv, match_scholar, write_arxiv_matches
from revaudit.stats.cluster import spectral_cluster
from revaudit.stats.logistic import fit_logistic, predict_proba, save_model
from revaudit.stats.metrics import calibration_curve, roc_auc

logger = logging.getLogger(__name__)

ATTRIBUTES = (
    ("geography", "majority_north_america"),
    ("gender", "leading_author_female"),
    ("author_prestige", "top_percent_author"),
    ("institution_prestige", "top_institution"),
)

ENV_PREFIX = "REVAUDIT_"


@dataclass
class RunConfig:
    """Resolved pipeline configuration (file < environment < CLI flags)."""

    submissions: Path
    reviews: Path
    authors: Path
    profiles: Path
    rankings: Path
    arxiv: Path
    out: Path
    corpus: CorpusConfig
    features: list[Path] = field(default_factory=list)
    gender_dictionary: Path | None = None
    tld_overrides: Path | None = None
    train_years: list[int] = field(default_factory=list)
    test_years: list[int] = field(default_factory=list)
    feature_sets: list[str] = field(default_factory=lambda: list(FEATURE_SETS))
    institution_threshold: float = 0.8
    arxiv_threshold: float = 0.5
    binarize_threshold: float = 0.5
    top_rank_cutoff: int = 10
    top_percentile: int = 99
    keyword_distance: int = 2
    n_clusters: int = 20
    seed: int = 0
    eo_both_rates: bool = False
    review_release: dict[int, datetime.date] = field(default_factory=dict)

    def __post_init__(self):
        if set(self.train_years) & set(self.test_years):
            raise ValueError("train and test years must be disjoint")
        for name in ("institution_threshold", "arxiv_threshold", "binarize_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        if not 1 <= self.top_percentile <= 100:
            raise ValueError(f"top_percentile must be in [1, 100], got {self.top_percentile}")
        if self.top_rank_cutoff < 1:
            raise ValueError("top_rank_cutoff must be >= 1")
        unknown = set(self.feature_sets) - set(FEATURE_SETS)
        if unknown:
            raise ValueError(f"unknown feature sets: {sorted(unknown)}")

    def release_date(self, year: int) -> datetime.date:
        """Review release date for a conference year (default: Nov 1 prior)."""
        return self.review_release.get(year, datetime.date(year - 1, 11, 1))


def _parse_years(raw: str) -> list[int]:
    years: list[int] = []
    for chunk in raw.replace(" ", "").split(","):
        if not chunk:
            continue
        if "-" in chunk:
            lo, _, hi = chunk.partition("-")
            years.extend(range(int(lo), int(hi) + 1))
        else:
            years.append(int(chunk))
    return sorted(set(years))


def read_run_config(path, env=None, overrides=None) -> RunConfig:
    """Build a RunConfig from a key-value file.

    ``env`` entries named REVAUDIT_<KEY> and explicit ``overrides`` replace
    file values, in that order.  Relative paths resolve against the config
    file's directory.
    """
    path = Path(path)
    base = path.parent
    raw: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, _, value = line.partition("=")
        raw[key.strip()] = value.strip()
    if env is None:
        env = os.environ
    for key, value in env.items():
        if key.startswith(ENV_PREFIX):
            raw[key[len(ENV_PREFIX):].lower()] = value
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = str(value)

    def path_of(key, required=True):
        if key not in raw:
            if required:
                raise ValueError(f"{path}: missing required key {key!r}")
            return None
        candidate = Path(raw[key])
        return candidate if candidate.is_absolute() else base / candidate

    corpus_config = read_config(path)
    release = {}
    for key, value in raw.items():
        if key.startswith("review_release_"):
            release[int(key.rsplit("_", 1)[1])] = datetime.date.fromisoformat(value)
    features = [
        p if (p := Path(chunk)).is_absolute() else base / chunk
        for chunk in raw.get("features", "").split(",")
        if chunk.strip()
    ]
    return RunConfig(
        submissions=path_of("submissions"),
        reviews=path_of("reviews"),
        authors=path_of("authors"),
        profiles=path_of("profiles"),
        rankings=path_of("rankings"),
        arxiv=path_of("arxiv"),
        out=path_of("out"),
        corpus=corpus_config,
        features=features,
        gender_dictionary=path_of("gender_dictionary", required=False),
        tld_overrides=path_of("tld_overrides", required=False),
        train_years=_parse_years(raw.get("train_years", "")),
        test_years=_parse_years(raw.get("test_years", "")),
        feature_sets=[s for s in raw.get("feature_sets", ",".join(FEATURE_SETS)).split(",") if s],
        institution_threshold=float(raw.get("institution_threshold", 0.8)),
        arxiv_threshold=float(raw.get("arxiv_threshold", 0.5)),
        binarize_threshold=float(raw.get("binarize_threshold", 0.5)),
        top_rank_cutoff=int(raw.get("top_rank_cutoff", 10)),
        top_percentile=int(raw.get("top_percentile", 99)),
        keyword_distance=int(raw.get("keyword_distance", 2)),
        n_clusters=int(raw.get("n_clusters", 20)),
        seed=int(raw.get("seed", 0)),
        eo_both_rates=raw.get("eo_both_rates", "0") in ("1", "true", "yes"),
        review_release=release,
    )


def config_fingerprint(config: RunConfig) -> str:
    """Content hash identifying (inputs, config, seed)."""
    sha = hashlib.sha256()
    for attr in ("submissions", "reviews", "authors", "profiles", "rankings", "arxiv"):
        sha.update(Path(getattr(config, attr)).read_bytes())
    for feature_path in config.features:
        sha.update(Path(feature_path).read_bytes())
    for extra in (config.gender_dictionary, config.tld_overrides):
        if extra is not None:
            sha.update(Path(extra).read_bytes())
    settings = {
        "corpus": vars(config.corpus),
        "train_years": config.train_years,
        "test_years": config.test_years,
        "feature_sets": config.feature_sets,
        "institution_threshold": config.institution_threshold,
        "arxiv_threshold": config.arxiv_threshold,
        "binarize_threshold": config.binarize_threshold,
        "top_rank_cutoff": config.top_rank_cutoff,
        "top_percentile": config.top_percentile,
        "keyword_distance": config.keyword_distance,
        "n_clusters": config.n_clusters,
        "seed": config.seed,
        "eo_both_rates": config.eo_both_rates,
        "review_release": {str(y): d.isoformat() for y, d in sorted(config.review_release.items())},
        "version": revaudit.__version__,
    }
    sha.update(json.dumps(settings, sort_keys=True).encode("utf-8"))
    return sha.hexdigest()


class _Outputs:
    """Tracks files written during a run so a failing stage can clean up."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[Path] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def write_text(self, name: str, text: str) -> Path:
        target = self.out_dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
        self.written.append(target)
        return target

    def discard_all(self) -> None:
        for target in self.written:
            try:
                target.unlink()
            except OSError:
                pass


def _csv_line(cells) -> str:
    out = []
    for cell in cells:
        if isinstance(cell, float):
            out.append(repr(cell))
        elif cell is None:
            out.append("")
        else:
            out.append(str(cell))
    return ",".join(out)


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines.extend(_csv_line(row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Stages


def stage_ingest(config: RunConfig, outputs: _Outputs) -> Corpus:
    corpus = load_corpus(
        config.submissions,
        config.reviews,
        config.authors,
        config.profiles,
        config.rankings,
        config.arxiv,
        config.corpus,
        feature_paths=config.features,
    )
    snapshot_paths = write_corpus(corpus, outputs.out_dir / "snapshot")
    outputs.written.extend(snapshot_paths.values())
    summary = corpus.summary_by_year()
    rows = []
    for year in sorted(summary):
        counts = summary[year]
        rows.append([year] + [counts[key] for key in
                              ["submissions", "Oral", "Spotlight", "Poster", "Talk",
                               "WorkshopInvite", "Reject", "reviews", "authors"]])
    outputs.write_text("summary.csv", _csv_text(
        ["year", "submissions", "oral", "spotlight", "poster", "talk",
         "workshop_invite", "reject", "reviews", "authors"], rows))
    return corpus


@dataclass
class LinkageResult:
    scholar_map: dict[str, str]
    scholar_methods: dict[str, str]
    arxiv_matches: list
    keyword_clusters: list
    iclr_tables: dict[int, object]

    def ranking_for_year(self, corpus: Corpus, year: int):
        from revaudit.corpus.model import RankingSource

        entries = [e for e in corpus.rankings if e.source is RankingSource.CSRANKING and e.year == year]
        if entries:
            return entries
        table = self.iclr_tables.get(year)
        return table.entries_for(year) if table is not None else []


def stage_link(corpus: Corpus, config: RunConfig, outputs: _Outputs) -> LinkageResult:
    profiles = sorted(corpus.profiles.values(), key=lambda p: p.scholar_id)
    scholar_map: dict[str, str] = {}
    methods: dict[str, str] = {}
    for aid in sorted(corpus.authors):
        author = corpus.authors[aid]
        if author.scholar_id is not None:
            scholar_map[aid] = author.scholar_id
            methods[aid] = "reported"
            continue
        profile = match_scholar(author, profiles)
        if profile is not None:
            scholar_map[aid] = profile.scholar_id
            methods[aid] = "fuzzy"
    outputs.write_text("scholar_map.csv", _csv_text(
        ["author_id", "scholar_id", "method"],
        [[aid, scholar_map[aid], methods[aid]] for aid in sorted(scholar_map)]))

    matches = []
    for sid in sorted(corpus.arxiv_pools):
        sub = corpus.submissions[sid]
        match = match_arxiv(
            sub,
            corpus.authors_of(sub),
            corpus.arxiv_pools[sid],
            review_release=config.release_date(sub.year),
            threshold=config.arxiv_threshold,
        )
        if match is not None:
            matches.append(match)
            # the matched preprint decides the flag; loaded values stay otherwise
            sub.arxiv_first = match.preprint_before_review
    write_arxiv_matches(matches, outputs.out_dir / "arxiv_matches.csv")
    outputs.written.append(outputs.out_dir / "arxiv_matches.csv")

    keywords = [kw for sub in corpus.submissions.values() for kw in sub.keywords]
    clusters = cluster_keywords(keywords, config.keyword_distance)
    outputs.write_text("keyword_clusters.csv", _csv_text(
        ["cluster_id", "representative", "size", "members"],
        [[c.cluster_id, c.representative, len(c.members), ";".join(sorted(c.members))] for c in clusters]))

    tables = {year: iclr_ranking(corpus, year) for year in corpus.config.years}
    ranking_rows = []
    for year in sorted(tables):
        for entry in tables[year].entries_for(year):
            ranking_rows.append([entry.year, entry.institution, entry.rank])
    outputs.write_text("iclr_ranking.csv", _csv_text(["year", "institution", "rank"], ranking_rows))

    outputs.write_text("linkage_stats.csv", _csv_text(
        ["statistic", "value"],
        [
            ["authors_total", len(corpus.authors)],
            ["authors_with_profile", len(scholar_map)],
            ["arxiv_pools", len(corpus.arxiv_pools)],
            ["arxiv_matched", len(matches)],
            ["keyword_clusters", len(clusters)],
        ]))
    return LinkageResult(scholar_map, methods, matches, clusters, tables)


@dataclass
class FeatureStage:
    attributes: dict[str, object]          # submission id -> SensitiveAttributes
    cluster_labels: dict[str, int]
    context: FeatureContext


def stage_featurize(corpus: Corpus, config: RunConfig, link: LinkageResult, outputs: _Outputs) -> FeatureStage:
    gender_dict = (
        load_gender_dictionary(config.gender_dictionary) if config.gender_dictionary is not None else {}
    )
    overrides = load_overrides(config.tld_overrides) if config.tld_overrides is not None else None

    percentiles: dict[int, dict[int, int] | None] = {}
    for year in corpus.config.years:
        try:
            percentiles[year] = citation_percentile_table(corpus, year, link.scholar_map)
        except AuditError:
            percentiles[year] = None

    attributes: dict[str, object] = {}
    rankings_by_year = {year: link.ranking_for_year(corpus, year) for year in corpus.config.years}
    for sid in sorted(corpus.submissions):
        sub = corpus.submissions[sid]
        attributes[sid] = sensitive_attributes(
            sub,
            corpus,
            rankings_by_year.get(sub.year, []),
            percentiles.get(sub.year),
            gender_dictionary=gender_dict,
            scholar_map=link.scholar_map,
            tld_overrides=overrides,
            top_rank_cutoff=config.top_rank_cutoff,
            top_percentile=config.top_percentile,
            match_threshold=config.institution_threshold,
        )

    def flag_cell(value):
        return "" if value is None else str(value).lower()

    outputs.write_text("attributes.csv", _csv_text(
        ["id", "majority_north_america", "no_us_author", "leading_author_female",
         "top_percent_author", "top_institution"],
        [[sid,
          flag_cell(attrs.majority_north_america),
          flag_cell(attrs.no_us_author),
          flag_cell(attrs.leading_author_female),
          flag_cell(attrs.top_percent_author),
          flag_cell(attrs.top_institution)] for sid, attrs in sorted(attributes.items())]))

    embeddings = {
        sid: sub.embedding for sid, sub in corpus.submissions.items() if sub.embedding is not None
    }
    cluster_labels: dict[str, int] = {}
    if len(embeddings) >= config.n_clusters:
        assignment = spectral_cluster(embeddings, k=config.n_clusters, seed=config.seed)
        cluster_labels = assignment.labels
    elif embeddings:
        logger.warning("only %d embeddings < %d clusters; cluster block left empty",
                       len(embeddings), config.n_clusters)
    outputs.write_text("cluster_labels.csv", _csv_text(
        ["id", "cluster"], [[sid, label] for sid, label in sorted(cluster_labels.items())]))

    context = FeatureContext(
        cluster_labels=cluster_labels,
        scholar_map=link.scholar_map,
        ranking_by_year=rankings_by_year,
        gender_dictionary=gender_dict,
        tld_overrides=overrides,
        match_threshold=config.institution_threshold,
    )
    return FeatureStage(attributes=attributes, cluster_labels=cluster_labels, context=context)


def export_feature_matrices(corpus: Corpus, config: RunConfig, features: FeatureStage,
                            outputs: _Outputs) -> None:
    """Write one standardized design matrix per selected feature set."""
    ids = sorted(corpus.submissions)
    train_years = set(config.train_years) or set(corpus.config.years)
    train_ids = [sid for sid in ids if corpus.submissions[sid].year in train_years] or ids
    for feature_set in config.feature_sets:
        builder = DesignMatrixBuilder(feature_set=feature_set, n_clusters=config.n_clusters)
        builder.fit(corpus, train_ids, features.context)
        matrix = builder.transform(corpus, ids, features.context)
        target = outputs.out_dir / f"features_{feature_set}.csv"
        matrix.to_csv(target)
        outputs.written.append(target)


@dataclass
class FitResult:
    feature_set: str
    model: object
    test_ids: list[str]
    test_scores: np.ndarray
    test_labels: np.ndarray
    roc: object
    calibration: object


def stage_fit(corpus: Corpus, config: RunConfig, features: FeatureStage, outputs: _Outputs) -> list[FitResult]:
    ids = sorted(corpus.submissions)
    train_years = set(config.train_years) or {
        y for y in corpus.config.years if y not in set(config.test_years)
    }
    test_years = set(config.test_years)
    train_ids = [sid for sid in ids if corpus.submissions[sid].year in train_years]
    test_ids = [sid for sid in ids if corpus.submissions[sid].year in test_years]
    if not train_ids or not test_ids:
        raise AuditError(
            f"empty split: {len(train_ids)} train / {len(test_ids)} test submissions"
        )
    y_train = np.array([1.0 if corpus.submissions[sid].accepted else 0.0 for sid in train_ids])
    y_test = np.array([1.0 if corpus.submissions[sid].accepted else 0.0 for sid in test_ids])

    results = []
    for feature_set in config.feature_sets:
        builder = DesignMatrixBuilder(feature_set=feature_set, n_clusters=config.n_clusters)
        context = features.context
        builder.fit(corpus, train_ids, context)
        X_train = builder.transform(corpus, train_ids, context)
        X_test = builder.transform(corpus, test_ids, context)
        model = fit_logistic(X_train, y_train)
        scores = predict_proba(model, X_test)
        roc = roc_auc(scores, y_test)
        calibration = calibration_curve(scores, y_test)
        save_model(model, outputs.out_dir / f"model_{feature_set}.txt")
        outputs.written.append(outputs.out_dir / f"model_{feature_set}.txt")
        outputs.write_text(f"roc_{feature_set}.csv", _csv_text(
            ["fpr", "tpr"], [[x, y] for x, y in roc.points]))
        outputs.write_text(f"calibration_{feature_set}.csv", _csv_text(
            ["bin", "mean_predicted", "positive_rate", "count"],
            [[b.index, b.mean_predicted, b.positive_rate, b.count] for b in calibration.bins]))
        results.append(FitResult(feature_set, model, test_ids, scores, y_test, roc, calibration))
    outputs.write_text("metrics.csv", _csv_text(
        ["feature_set", "auc", "n_train", "n_test"],
        [[r.feature_set, r.roc.auc, len(train_ids), len(r.test_ids)] for r in results]))
    return results


def _grouped_rows(corpus, features: FeatureStage, flag_name: str, ids, scores) -> list[GroupedOutcome]:
    rows = []
    for sid, score in zip(ids, scores):
        flag = getattr(features.attributes[sid], flag_name)
        if flag is None:
            continue
        rows.append(GroupedOutcome(
            id=sid,
            score=float(score),
            y=1 if corpus.submissions[sid].accepted else 0,
            group=str(flag).lower(),
        ))
    return rows


@dataclass
class ReportBundle:
    fingerprint: str
    version: str
    seed: int
    feature_sets: list[str]
    attributes: list[str]
    data_reports: dict[str, DisparityReport]
    model_reports: dict[str, dict[str, DisparityReport]]   # attribute -> set -> report
    cdf_disparities: dict[str, dict[str, float | None]]
    cdf_points: dict[str, dict[str, list[tuple[float, float, float]]]]
    marginals: dict[str, MarginalCurve]
    roc_curves: dict[str, object]
    calibrations: dict[str, object]
    aucs: dict[str, float]


def stage_fairness(
    corpus: Corpus,
    config: RunConfig,
    features: FeatureStage,
    fits: list[FitResult],
    outputs: _Outputs,
    fingerprint: str,
) -> ReportBundle:
    all_ids = sorted(corpus.submissions)
    data_reports: dict[str, DisparityReport] = {}
    marginals: dict[str, MarginalCurve] = {}
    model_reports: dict[str, dict[str, DisparityReport]] = {}
    cdf_disparities: dict[str, dict[str, float | None]] = {}
    cdf_points: dict[str, dict[str, list[tuple[float, float, float]]]] = {}

    for attribute, flag_name in ATTRIBUTES:
        data_rows = _grouped_rows(
            corpus, features, flag_name, all_ids,
            [1.0 if corpus.submissions[sid].accepted else 0.0 for sid in all_ids],
        )
        if len({r.group for r in data_rows}) >= 2:
            data_reports[attribute] = disparity_report(
                attribute, data_rows, threshold=config.binarize_threshold,
                eo_both_rates=config.eo_both_rates)

        rating_rows = []
        for sid in all_ids:
            reviews = corpus.reviews_for(sid)
            flag = getattr(features.attributes[sid], flag_name)
            if not reviews or flag is None:
                continue
            rating_rows.append(GroupedOutcome(
                id=sid,
                score=sum(r.rating for r in reviews) / len(reviews),
                y=1 if corpus.submissions[sid].accepted else 0,
                group=str(flag).lower(),
            ))
        if rating_rows:
            curve = marginal_curve(rating_rows)
            marginals[attribute] = curve
            outputs.write_text(f"marginal_{attribute}.csv", _csv_text(
                ["bin", "group", "p", "ci_low", "ci_high", "n"],
                [[pt.bin_center, pt.group, pt.probability,
                  pt.probability - pt.half_width, pt.probability + pt.half_width, pt.count]
                 for pt in curve.points]))

        model_reports[attribute] = {}
        cdf_disparities[attribute] = {}
        cdf_points[attribute] = {}
        for fit in fits:
            rows = _grouped_rows(corpus, features, flag_name, fit.test_ids, fit.test_scores)
            groups = {r.group for r in rows}
            if len(groups) >= 2:
                model_reports[attribute][fit.feature_set] = disparity_report(
                    attribute, rows, threshold=config.binarize_threshold,
                    eo_both_rates=config.eo_both_rates)
            scores_true = sorted(r.score for r in rows if r.group == "true")
            scores_false = sorted(r.score for r in rows if r.group == "false")
            if scores_true and scores_false:
                cdf_disparities[attribute][fit.feature_set] = cdf_max_disparity(scores_true, scores_false)
                pooled = sorted(set(scores_true) | set(scores_false))
                points = []
                for t in pooled:
                    fa = bisect.bisect_right(scores_true, t) / len(scores_true)
                    fb = bisect.bisect_right(scores_false, t) / len(scores_false)
                    points.append((t, fa, fb))
                cdf_points[attribute][fit.feature_set] = points
                outputs.write_text(f"cdf_{attribute}_{fit.feature_set}.csv", _csv_text(
                    ["t", "cdf_true", "cdf_false"], [list(p) for p in points]))
            else:
                cdf_disparities[attribute][fit.feature_set] = None

    # Table layout: +rev and +revnlp (+R) side by side per attribute
    def cell(report: DisparityReport | None, measure: str):
        if report is None:
            return None
        return getattr(report, measure)

    table_rows = []
    for attribute, _ in ATTRIBUTES:
        rev = model_reports.get(attribute, {}).get("plus_rev")
        revnlp = model_reports.get(attribute, {}).get("plus_revnlp")
        table_rows.append([
            attribute,
            cell(rev, "dp"), cell(revnlp, "dp"),
            cell(rev, "eo"), cell(revnlp, "eo"),
            cell(rev, "auc"), cell(revnlp, "auc"),
        ])
    outputs.write_text("disparities.csv", _csv_text(
        ["attribute", "dp", "dp_plus_r", "eo", "eo_plus_r", "auc", "auc_plus_r"], table_rows))

    long_rows = []
    for attribute, report in sorted(data_reports.items()):
        long_rows.append([attribute, "data", report.dp, report.eo, report.auc, report.threshold])
    for attribute in sorted(model_reports):
        for feature_set in config.feature_sets:
            report = model_reports[attribute].get(feature_set)
            if report is not None:
                long_rows.append([attribute, feature_set, report.dp, report.eo, report.auc,
                                  report.threshold])
    outputs.write_text("disparities_full.csv", _csv_text(
        ["attribute", "model", "dp", "eo", "auc", "threshold"], long_rows))

    cdf_rows = []
    for attribute in sorted(cdf_disparities):
        for feature_set in config.feature_sets:
            value = cdf_disparities[attribute].get(feature_set)
            cdf_rows.append([attribute, feature_set, value])
    outputs.write_text("cdf_disparities.csv", _csv_text(
        ["attribute", "feature_set", "max_disparity"], cdf_rows))

    return ReportBundle(
        fingerprint=fingerprint,
        version=revaudit.__version__,
        seed=config.seed,
        feature_sets=list(config.feature_sets),
        attributes=[a for a, _ in ATTRIBUTES],
        data_reports=data_reports,
        model_reports=model_reports,
        cdf_disparities=cdf_disparities,
        cdf_points=cdf_points,
        marginals=marginals,
        roc_curves={f.feature_set: f.roc for f in fits},
        calibrations={f.feature_set: f.calibration for f in fits},
        aucs={f.feature_set: f.roc.auc for f in fits},
    )


def _bundle_to_json(bundle: ReportBundle) -> dict:
    def report_obj(report: DisparityReport):
        return {
            "attribute": report.attribute,
            "dp": report.dp,
            "eo": report.eo,
            "auc": report.auc,
            "threshold": report.threshold,
            "group_sizes": report.group_sizes,
            "group_rates": report.group_rates,
        }

    return {
        "fingerprint": bundle.fingerprint,
        "version": bundle.version,
        "seed": bundle.seed,
        "feature_sets": bundle.feature_sets,
        "attributes": bundle.attributes,
        "aucs": bundle.aucs,
        "data_reports": {a: report_obj(r) for a, r in sorted(bundle.data_reports.items())},
        "model_reports": {
            a: {s: report_obj(r) for s, r in sorted(by_set.items())}
            for a, by_set in sorted(bundle.model_reports.items())
        },
        "cdf_disparities": bundle.cdf_disparities,
        "cdf_points": bundle.cdf_points,
        "marginals": {
            a: {"z": curve.z,
                "points": [[p.bin_center, p.group, p.probability, p.half_width, p.count]
                           for p in curve.points]}
            for a, curve in sorted(bundle.marginals.items())
        },
        "roc_curves": {s: list(map(list, r.points)) for s, r in sorted(bundle.roc_curves.items())},
        "calibrations": {
            s: {"n_bins": c.n_bins,
                "bins": [[b.index, b.mean_predicted, b.positive_rate, b.count] for b in c.bins]}
            for s, c in sorted(bundle.calibrations.items())
        },
    }


def _bundle_from_json(obj: dict) -> ReportBundle:
    from revaudit.stats.metrics import CalibrationBin, CalibrationCurve, RocCurve
    from revaudit.fairness import MarginalPoint

    def report_of(entry: dict) -> DisparityReport:
        return DisparityReport(
            attribute=entry["attribute"],
            dp=entry["dp"],
            eo=entry["eo"],
            auc=entry["auc"],
            threshold=entry["threshold"],
            group_sizes=entry["group_sizes"],
            group_rates=entry["group_rates"],
        )

    marginals = {
        a: MarginalCurve(points=[MarginalPoint(*p) for p in body["points"]], z=body["z"])
        for a, body in obj["marginals"].items()
    }
    roc_curves = {}
    for feature_set, points in obj["roc_curves"].items():
        points = [tuple(p) for p in points]
        auc = sum((x1 - x0) * (y0 + y1) / 2.0 for (x0, y0), (x1, y1) in zip(points, points[1:]))
        roc_curves[feature_set] = RocCurve(points=points, auc=auc)
    calibrations = {
        s: CalibrationCurve(bins=[CalibrationBin(*b) for b in body["bins"]], n_bins=body["n_bins"])
        for s, body in obj["calibrations"].items()
    }
    return ReportBundle(
        fingerprint=obj["fingerprint"],
        version=obj["version"],
        seed=obj["seed"],
        feature_sets=obj["feature_sets"],
        attributes=obj["attributes"],
        data_reports={a: report_of(r) for a, r in obj["data_reports"].items()},
        model_reports={
            a: {s: report_of(r) for s, r in by_set.items()}
            for a, by_set in obj["model_reports"].items()
        },
        cdf_disparities=obj["cdf_disparities"],
        cdf_points={
            a: {s: [tuple(p) for p in pts] for s, pts in by_set.items()}
            for a, by_set in obj["cdf_points"].items()
        },
        marginals=marginals,
        roc_curves=roc_curves,
        calibrations=calibrations,
        aucs=obj["aucs"],
    )


def load_bundle(path) -> ReportBundle:
    return _bundle_from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def run_audit(config: RunConfig, force: bool = False) -> ReportBundle:
    """Run every stage and write the full report bundle; deterministic.

    When the output directory already holds a bundle produced from the
    same (inputs, config, seed) fingerprint, the completed run is reused
    unless ``force`` is set.
    """
    fingerprint = config_fingerprint(config)
    out_dir = Path(config.out)
    manifest_path = out_dir / "manifest.json"
    bundle_path = out_dir / "bundle.json"
    if not force and manifest_path.exists() and bundle_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if manifest.get("fingerprint") == fingerprint:
            logger.info("outputs in %s are up to date (fingerprint %s); skipping", out_dir, fingerprint[:12])
            return load_bundle(bundle_path)

    outputs = _Outputs(out_dir)
    stage_name = "ingest"
    try:
        corpus = stage_ingest(config, outputs)
        stage_name = "link"
        link = stage_link(corpus, config, outputs)
        stage_name = "featurize"
        features = stage_featurize(corpus, config, link, outputs)
        stage_name = "fit"
        fits = stage_fit(corpus, config, features, outputs)
        stage_name = "fairness"
        bundle = stage_fairness(corpus, config, features, fits, outputs, fingerprint)
        outputs.write_text("bundle.json", json.dumps(_bundle_to_json(bundle), indent=1, sort_keys=True) + "\n")
        outputs.write_text("manifest.json", json.dumps({
            "fingerprint": fingerprint,
            "version": revaudit.__version__,
            "seed": config.seed,
            "feature_sets": config.feature_sets,
        }, indent=1, sort_keys=True) + "\n")
        return bundle
    except Exception as exc:
        outputs.discard_all()
        raise StageError(stage_name, exc) from exc


PLOTDATA_FIGURES = ("marginal", "cdf", "roc", "calibration")


def write_plotdata(bundle_path, figure: str, out_dir) -> list[Path]:
    """Re-emit per-figure CSV files from a persisted bundle."""
    if figure not in PLOTDATA_FIGURES:
        raise ValueError(f"unknown figure {figure!r}; expected one of {PLOTDATA_FIGURES}")
    bundle = json.loads(Path(bundle_path).read_text(encoding="utf-8"))
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, header, rows):
        target = out_dir / name
        target.write_text(_csv_text(header, rows), encoding="utf-8")
        written.append(target)

    if figure == "marginal":
        for attribute, curve in sorted(bundle["marginals"].items()):
            emit(f"plot_marginal_{attribute}.csv",
                 ["bin", "group", "p", "ci_low", "ci_high", "n"],
                 [[c, g, p, p - hw, p + hw, n] for c, g, p, hw, n in curve["points"]])
    elif figure == "cdf":
        for attribute, by_set in sorted(bundle["cdf_points"].items()):
            for feature_set, points in sorted(by_set.items()):
                emit(f"plot_cdf_{attribute}_{feature_set}.csv",
                     ["t", "cdf_true", "cdf_false"], [list(p) for p in points])
    elif figure == "roc":
        for feature_set, points in sorted(bundle["roc_curves"].items()):
            emit(f"plot_roc_{feature_set}.csv", ["fpr", "tpr"], points)
    else:
        for feature_set, body in sorted(bundle["calibrations"].items()):
            emit(f"plot_calibration_{feature_set}.csv",
                 ["bin", "mean_predicted", "positive_rate", "count"], body["bins"])
    return written
