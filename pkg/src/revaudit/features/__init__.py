from revaudit.features.attributes import (
    SensitiveAttributes,
    SubmissionAggregates,
    author_citations_at,
    citation_percentile_table,
    sensitive_attributes,
    submission_aggregates,
)
from revaudit.features.gender import load_gender_dictionary, perceived_gender
from revaudit.features.geography import (
    NORTH_AMERICA,
    country_for_domain,
    geography_of_author,
    load_tld_table,
)
from revaudit.features.matrix import (
    FEATURE_SETS,
    DesignMatrixBuilder,
    FeatureContext,
    FeatureMatrix,
    build_feature_matrix,
)

__all__ = [
    "FEATURE_SETS",
    "NORTH_AMERICA",
    "DesignMatrixBuilder",
    "FeatureContext",
    "FeatureMatrix",
    "SensitiveAttributes",
    "SubmissionAggregates",
    "author_citations_at",
    "build_feature_matrix",
    "citation_percentile_table",
    "country_for_domain",
    "geography_of_author",
    "load_gender_dictionary",
    "load_tld_table",
    "perceived_gender",
    "sensitive_attributes",
    "submission_aggregates",
]
