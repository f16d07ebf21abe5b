import random

import numpy as np
import pytest

from conftest import make_author, make_corpus, make_review, make_submission
from oracles import nearest_rank_top_side
from revaudit.corpus.model import Affiliation, ScholarProfile
from revaudit.errors import MatrixAssemblyError, UndefinedStatisticError
from revaudit.features import (
    build_feature_matrix,
    citation_percentile_table,
    country_for_domain,
    geography_of_author,
    load_gender_dictionary,
    perceived_gender,
    sensitive_attributes,
    submission_aggregates,
)
from revaudit.features.matrix import (
    DesignMatrixBuilder,
    FeatureContext,
    FeatureMatrix,
    columns_for,
)


class TestGeography:
    def test_country_code_tld(self):
        author = make_author(email_domains={2020: "ust.hk"})
        assert geography_of_author(author, 2020) == "HK"
        assert geography_of_author(author, 2018) == "HK"  # latest known

    def test_longest_suffix_match(self):
        assert country_for_domain("cs.ox.ac.uk") == "GB"

    def test_generic_tld_unresolved(self):
        assert country_for_domain("gmail.com") is None

    def test_edu_maps_to_us(self):
        assert country_for_domain("mit.edu") == "US"

    def test_override_beats_generic(self):
        overrides = {"deepmind.com": "GB"}
        assert country_for_domain("deepmind.com", overrides=overrides) == "GB"
        assert country_for_domain("other.com", overrides=overrides) is None

    def test_year_specific_domain_used(self):
        author = make_author(email_domains={2019: "mit.edu", 2021: "ust.hk"})
        assert geography_of_author(author, 2019) == "US"
        assert geography_of_author(author, 2021) == "HK"
        # unknown year falls back to the latest recorded domain
        assert geography_of_author(author, 2020) == "HK"

    def test_no_domains(self):
        assert geography_of_author(make_author(), 2020) is None


class TestPerceivedGender:
    def test_lookup_and_case_fold(self):
        assert perceived_gender("Alex", {"alex": 0.8}) == 0.8

    def test_absent_name(self):
        assert perceived_gender("nobody", {"alex": 0.8}) is None

    def test_dictionary_file_round_trip(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("name,male_score\nAlex,0.8\nsam,0.35\n", encoding="utf-8")
        table = load_gender_dictionary(path)
        assert table == {"alex": 0.8, "sam": 0.35}

    def test_out_of_range_score_rejected(self, tmp_path):
        path = tmp_path / "g.csv"
        path.write_text("name,male_score\nalex,1.4\n", encoding="utf-8")
        with pytest.raises(ValueError):
            load_gender_dictionary(path)


class TestAggregates:
    def test_simple_triple(self):
        reviews = [make_review(f"r{i}", rating=r) for i, r in enumerate([5, 6, 7])]
        agg = submission_aggregates(reviews)
        assert (agg.rating_avg, agg.rating_max, agg.rating_min) == (6.0, 7, 5)
        assert agg.n_review == 3

    def test_degenerate_single_review(self):
        agg = submission_aggregates([make_review(rating=8)])
        assert agg.rating_avg == agg.rating_max == agg.rating_min == 8

    def test_sentiment_over_present_only(self):
        reviews = [
            make_review("r1", sentiment=0.2),
            make_review("r2", sentiment=None),
            make_review("r3", sentiment=0.6),
        ]
        agg = submission_aggregates(reviews)
        assert agg.sentiment_avg == pytest.approx(0.4, abs=1e-12)
        assert agg.sentiment_max == 0.6 and agg.sentiment_min == 0.2

    def test_no_sentiment_is_missing(self):
        agg = submission_aggregates([make_review()])
        assert agg.sentiment_avg is None

    def test_zero_reviews_undefined(self):
        with pytest.raises(UndefinedStatisticError):
            submission_aggregates([])

    def test_min_le_avg_le_max_property(self):
        rng = random.Random(61)
        for _ in range(100):
            reviews = [
                make_review(f"r{i}", rating=rng.randrange(1, 11),
                            confidence=rng.randrange(1, 6), text_len=rng.randrange(0, 900),
                            sentiment=rng.random() if rng.random() < 0.7 else None)
                for i in range(rng.randrange(1, 7))
            ]
            agg = submission_aggregates(reviews)
            for name in ("rating", "confidence", "rlen"):
                low = getattr(agg, f"{name}_min")
                mid = getattr(agg, f"{name}_avg")
                high = getattr(agg, f"{name}_max")
                assert low <= mid <= high
            if agg.sentiment_avg is not None:
                assert agg.sentiment_min <= agg.sentiment_avg <= agg.sentiment_max


def corpus_with_citations(counts, year=2020):
    """One submission per author; author i has counts[i] citations at `year`."""
    subs, authors, profiles = [], [], []
    for i, count in enumerate(counts):
        aid = f"a{i:03d}"
        subs.append(make_submission(f"s{i:03d}", year=year, author_ids=(aid,)))
        authors.append(make_author(aid, scholar_id=f"gs{i:03d}"))
        profiles.append(ScholarProfile(f"gs{i:03d}", f"Name {i}", "MIT", {year: count}, 1))
    return make_corpus(subs, authors=authors, profiles=profiles)


class TestCitationPercentiles:
    def test_top_percentile_of_1_to_100(self):
        corpus = corpus_with_citations(list(range(1, 101)))
        table = citation_percentile_table(corpus, 2020)
        assert table[99] == 100
        assert table[99] == nearest_rank_top_side(range(1, 101), 99)
        assert table[50] == nearest_rank_top_side(range(1, 101), 50)

    def test_single_author(self):
        corpus = corpus_with_citations([42])
        table = citation_percentile_table(corpus, 2020)
        assert all(v == 42 for v in table.values())

    def test_uniform_counts(self):
        corpus = corpus_with_citations([7] * 12)
        table = citation_percentile_table(corpus, 2020)
        assert all(v == 7 for v in table.values())

    def test_no_data_is_undefined(self):
        corpus = corpus_with_citations([5], year=2020)
        with pytest.raises(UndefinedStatisticError):
            citation_percentile_table(corpus, 2021)

    def test_flag_count_at_most_one_percent_plus_ties(self):
        rng = random.Random(67)
        for _ in range(20):
            counts = [rng.randrange(0, 1000) for _ in range(rng.randrange(2, 150))]
            corpus = corpus_with_citations(counts)
            boundary = citation_percentile_table(corpus, 2020)[99]
            flagged = sum(1 for c in counts if c >= boundary)
            cap = -(-len(counts) // 100)  # ceil(1% of n)
            ties = sum(1 for c in counts if c == boundary) - 1
            assert flagged <= cap + max(ties, 0)


class TestSensitiveAttributes:
    def _corpus(self, domains, first_names=None, year=2020):
        authors = []
        for i, domain in enumerate(domains):
            name = (first_names or ["alex"] * len(domains))[i]
            authors.append(make_author(f"a{i}", first_name=name,
                                       email_domains={year: domain} if domain else {}))
        sub = make_submission("s1", year=year, author_ids=tuple(a.id for a in authors))
        return sub, make_corpus([sub], authors=authors)

    def test_strict_majority_north_america(self):
        sub, corpus = self._corpus(["mit.edu", "berkeley.edu", "tsinghua.edu.cn"])
        attrs = sensitive_attributes(sub, corpus, [], None, {})
        assert attrs.majority_north_america is True
        assert attrs.provenance["majority_north_america"] == "derived"

    def test_exact_tie_is_missing(self):
        sub, corpus = self._corpus(["mit.edu", "tsinghua.edu.cn"])
        attrs = sensitive_attributes(sub, corpus, [], None, {})
        assert attrs.majority_north_america is None
        assert attrs.provenance["majority_north_america"] == "missing"

    def test_all_unresolvable_is_missing(self):
        sub, corpus = self._corpus(["gmail.com", None])
        attrs = sensitive_attributes(sub, corpus, [], None, {})
        assert attrs.majority_north_america is None

    def test_no_us_flag(self):
        sub, corpus = self._corpus(["utoronto.ca", "ust.hk"])
        attrs = sensitive_attributes(sub, corpus, [], None, {})
        assert attrs.no_us_author is True
        sub2, corpus2 = self._corpus(["mit.edu", "ust.hk"])
        assert sensitive_attributes(sub2, corpus2, [], None, {}).no_us_author is False

    def test_leading_author_female_threshold(self):
        gender = {"ada": 0.1, "bob": 0.9, "kim": 0.5}
        sub, corpus = self._corpus(["mit.edu"], first_names=["ada"])
        assert sensitive_attributes(sub, corpus, [], None, gender).leading_author_female is True
        sub, corpus = self._corpus(["mit.edu"], first_names=["bob"])
        assert sensitive_attributes(sub, corpus, [], None, gender).leading_author_female is False
        sub, corpus = self._corpus(["mit.edu"], first_names=["kim"])
        assert sensitive_attributes(sub, corpus, [], None, gender).leading_author_female is None

    def test_depends_only_on_leading_author(self):
        gender = {"ada": 0.1, "bob": 0.9}
        authors = [
            make_author("a0", first_name="ada", email_domains={2020: "mit.edu"}),
            make_author("a1", first_name="bob", email_domains={2020: "mit.edu"}),
            make_author("a2", first_name="bob", email_domains={2020: "berkeley.edu"}),
        ]
        sub = make_submission("s1", year=2020, author_ids=("a0", "a1", "a2"))
        corpus = make_corpus([sub], authors=authors)
        base = sensitive_attributes(sub, corpus, [], None, gender)
        # permute the non-leading authors
        sub2 = make_submission("s1", year=2020, author_ids=("a0", "a2", "a1"))
        corpus2 = make_corpus([sub2], authors=authors)
        permuted = sensitive_attributes(sub2, corpus2, [], None, gender)
        assert base == permuted
        assert base.leading_author_female is True

    def test_top_percent_author(self):
        corpus = corpus_with_citations([10, 20, 9000])
        table = citation_percentile_table(corpus, 2020)
        rich = sensitive_attributes(corpus.submissions["s002"], corpus, [], table, {})
        poor = sensitive_attributes(corpus.submissions["s000"], corpus, [], table, {})
        assert rich.top_percent_author is True
        assert poor.top_percent_author is False

    def test_top_institution_cutoff(self):
        from conftest import make_ranking

        ranking = [make_ranking("mit", 3), make_ranking("unknown tech", 150)]
        author = make_author("a1", affiliations=[Affiliation("MIT", 2018, 2022)])
        sub = make_submission("s1", author_ids=("a1",))
        corpus = make_corpus([sub], authors=[author])
        attrs = sensitive_attributes(sub, corpus, ranking, None, {})
        assert attrs.top_institution is True
        attrs = sensitive_attributes(sub, corpus, ranking, None, {}, top_rank_cutoff=2)
        assert attrs.top_institution is False

    def test_no_institution_match_is_missing(self):
        sub, corpus = self._corpus(["mit.edu"])
        attrs = sensitive_attributes(sub, corpus, [], None, {})
        assert attrs.top_institution is None


def small_corpus(n=6, years=(2017, 2018), with_reviews=True):
    subs, reviews, authors = [], [], []
    rng = random.Random(5)
    from revaudit.corpus.model import CorpusConfig, Decision

    for i in range(n):
        sid = f"s{i:02d}"
        year = years[i % len(years)]
        aid = f"a{i:02d}"
        authors.append(make_author(aid, email_domains={year: "mit.edu"}))
        subs.append(make_submission(
            sid, year=year, author_ids=(aid,),
            decision=Decision.POSTER if i % 2 == 0 else Decision.REJECT,
            fluency=0.8 + 0.01 * i if i % 3 else None,
        ))
        if with_reviews:
            for j in range(2):
                reviews.append(make_review(
                    f"r{i}_{j}", sid, rating=rng.randrange(3, 9),
                    sentiment=rng.random() if j == 0 else None))
    config = CorpusConfig(year_min=min(years), year_max=max(years))
    return make_corpus(subs, reviews=reviews, authors=authors, config=config)


class TestFeatureMatrix:
    def test_base_column_count(self):
        corpus = small_corpus()
        labels = {sid: 0 for sid in corpus.submissions}
        matrix = build_feature_matrix(corpus, "base", cluster_labels=labels)
        n_years = len(corpus.config.years)
        assert len(matrix.columns) == 8 + (n_years - 1) + 20
        assert matrix.values.shape == (6, len(matrix.columns))

    def test_plus_rev_adds_exactly_the_review_aggregates(self):
        years = [2017, 2018]
        base = set(columns_for("base", years, 20))
        plus_rev = set(columns_for("plus_rev", years, 20))
        assert plus_rev - base == {
            "rating_avg", "rating_max", "rating_min",
            "confidence_avg", "confidence_max", "confidence_min", "n_review",
        }

    def test_plus_revnlp_adds_exactly_the_nlp_aggregates(self):
        years = [2017, 2018]
        plus_rev = set(columns_for("plus_rev", years, 20))
        plus_revnlp = set(columns_for("plus_revnlp", years, 20))
        assert plus_revnlp - plus_rev == {
            "sentiment_avg", "sentiment_max", "sentiment_min",
            "rlen_avg", "rlen_max", "rlen_min",
        }

    def test_feature_set_monotonicity(self):
        years = [2017, 2018, 2019]
        cols = {fs: set(columns_for(fs, years, 20)) for fs in
                ("base", "plus_author", "plus_rev", "plus_revnlp", "all")}
        assert cols["base"] < cols["plus_rev"] < cols["plus_revnlp"] <= cols["all"]
        assert cols["base"] < cols["plus_author"] <= cols["all"]

    def test_training_columns_standardized(self):
        corpus = small_corpus()
        labels = {sid: i % 3 for i, sid in enumerate(sorted(corpus.submissions))}
        matrix = build_feature_matrix(corpus, "plus_revnlp", cluster_labels=labels)
        means = matrix.values.mean(axis=0)
        assert np.max(np.abs(means)) < 1e-10
        stds = matrix.values.std(axis=0)
        assert np.all((np.abs(stds - 1.0) < 1e-10) | (stds < 1e-10))

    def test_standardization_comes_from_training_split(self):
        corpus = small_corpus()
        labels = {sid: 0 for sid in corpus.submissions}
        matrix = build_feature_matrix(corpus, "base", cluster_labels=labels, train_years=[2017])
        train_rows = [i for i, sid in enumerate(matrix.ids)
                      if corpus.submissions[sid].year == 2017]
        sub_matrix = matrix.values[train_rows]
        assert np.max(np.abs(sub_matrix.mean(axis=0))) < 1e-10

    def test_missing_cluster_labels_rejected(self):
        corpus = small_corpus()
        with pytest.raises(MatrixAssemblyError):
            build_feature_matrix(corpus, "base", cluster_labels=None)

    def test_out_of_range_label_names_submission(self):
        corpus = small_corpus()
        labels = {sid: 99 for sid in corpus.submissions}
        with pytest.raises(MatrixAssemblyError) as err:
            build_feature_matrix(corpus, "base", cluster_labels=labels)
        assert "99" in str(err.value)

    def test_missingness_indicator_for_fluency(self):
        corpus = small_corpus()
        labels = {sid: 0 for sid in corpus.submissions}
        builder = DesignMatrixBuilder("base", n_clusters=20)
        context = FeatureContext(cluster_labels=labels)
        ids = sorted(corpus.submissions)
        builder.fit(corpus, ids, context)
        raw = builder._raw_matrix(corpus, ids, context)
        col = builder.columns_.index("fluency_missing")
        flags = raw[:, col]
        missing = [corpus.submissions[sid].fluency is None for sid in ids]
        assert list(flags) == [1.0 if m else 0.0 for m in missing]

    def test_csv_round_trip_is_bit_exact(self, tmp_path):
        corpus = small_corpus()
        labels = {sid: 0 for sid in corpus.submissions}
        matrix = build_feature_matrix(corpus, "plus_rev", cluster_labels=labels)
        path = tmp_path / "m.csv"
        matrix.to_csv(path)
        reloaded = FeatureMatrix.from_csv(path, feature_set="plus_rev")
        assert reloaded.ids == matrix.ids
        assert reloaded.columns == matrix.columns
        assert np.array_equal(reloaded.values, matrix.values)

    def test_duplicate_columns_rejected(self):
        with pytest.raises(MatrixAssemblyError):
            FeatureMatrix(ids=["a"], columns=["x", "x"], values=np.zeros((1, 2)), feature_set="base")
