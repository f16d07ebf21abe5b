from revaudit.stats.logistic import (
    LogisticModel,
    LogisticSurrogate,
    fit_logistic,
    load_model,
    predict_proba,
    save_model,
)
from revaudit.stats.metrics import CalibrationBin, CalibrationCurve, RocCurve, calibration_curve, roc_auc
from revaudit.stats.cluster import ClusterAssignment, SpectralCosineClustering, spectral_cluster

__all__ = [
    "CalibrationBin",
    "CalibrationCurve",
    "ClusterAssignment",
    "LogisticModel",
    "LogisticSurrogate",
    "RocCurve",
    "SpectralCosineClustering",
    "calibration_curve",
    "fit_logistic",
    "load_model",
    "predict_proba",
    "roc_auc",
    "save_model",
    "spectral_cluster",
]
