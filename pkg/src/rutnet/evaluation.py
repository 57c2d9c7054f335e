"""Accuracy metrics, prediction uncertainty, cluster quality and residual checks."""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from sklearn import metrics as skm

from .exceptions import ValidationError


def _pair(predictions, targets):
    p = np.asarray(predictions, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if p.shape != t.shape:
        raise ValidationError(f"length mismatch: {p.size} predictions vs {t.size} targets")
    if p.size == 0:
        raise ValidationError("metrics need at least one sample")
    return p, t


def mae(predictions, targets):
    p, t = _pair(predictions, targets)
    return float(np.mean(np.abs(t - p)))


def rmse(predictions, targets):
    p, t = _pair(predictions, targets)
    return float(np.sqrt(np.mean((t - p) ** 2)))


def mape(predictions, targets):
    """Mean absolute percentage error in percent; zero targets are an error."""
    p, t = _pair(predictions, targets)
    if np.any(t == 0):
        raise ValidationError("MAPE is undefined when a target equals zero")
    return float(100.0 * np.mean(np.abs((t - p) / t)))


@dataclass
class MetricReport:
    rmse: float
    mae: float
    mape: float
    count: int
    per_structure: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    def to_table(self, title="Test-set accuracy"):
        rows = [("Structure", "N", "MAPE", "RMSE", "MAE")]
        for sid, m in self.per_structure.items():
            rows.append((sid, str(m["count"]), f"{m['mape']:.2f}%", f"{m['rmse']:.4f}", f"{m['mae']:.4f}"))
        rows.append(("Average", str(self.count), f"{self.mape:.2f}%", f"{self.rmse:.4f}", f"{self.mae:.4f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = [title, "-" * (sum(widths) + 8)]
        for k, r in enumerate(rows):
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
            if k == 0 or k == len(rows) - 2:
                lines.append("-" * (sum(widths) + 8))
        return "\n".join(lines) + "\n"


def metric_report(results):
    """Average per-structure metrics.

    ``results`` maps structure id to ``(predictions, targets)``. Averages
    are taken over structures, matching how per-pavement scores are
    summarised.
    """
    per = {}
    for sid, (p, t) in results.items():
        per[sid] = {"rmse": rmse(p, t), "mae": mae(p, t), "mape": mape(p, t), "count": len(np.ravel(t))}
    if not per:
        raise ValidationError("no results to report")
    avg = {k: float(np.mean([m[k] for m in per.values()])) for k in ("rmse", "mae", "mape")}
    return MetricReport(avg["rmse"], avg["mae"], avg["mape"], sum(m["count"] for m in per.values()), per)


@dataclass
class UncertaintyReport:
    mean_variance: float
    trials: int
    samples: int


def uncertainty(trials):
    """Mean per-sample variance of predictions across repeated trainings.

    ``trials`` has shape (T, M): one row of M predictions per trial.
    """
    P = np.asarray(trials, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2 or P.shape[0] < 2:
        raise ValidationError("uncertainty needs at least 2 trials")
    mu = P.mean(axis=0)
    return UncertaintyReport(float(np.mean((P - mu) ** 2)), P.shape[0], P.shape[1])


def cluster_quality(features, assignment):
    """Silhouette, Davies-Bouldin and Calinski-Harabasz indices.

    When every cluster is a singleton the silhouette is 0 by convention,
    Davies-Bouldin is 0 and Calinski-Harabasz is undefined (nan).
    """
    X = np.asarray(features, dtype=float)
    labels = np.asarray(assignment)
    k = len(np.unique(labels))
    if k < 2:
        raise ValidationError("cluster quality needs at least 2 clusters")
    if k == len(labels):
        return 0.0, 0.0, math.nan
    return (
        float(skm.silhouette_score(X, labels)),
        float(skm.davies_bouldin_score(X, labels)),
        float(skm.calinski_harabasz_score(X, labels)),
    )


def ks_statistic(sample, cdf):
    """Sup distance between the empirical CDF of ``sample`` and ``cdf``."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = len(x)
    F = cdf(x)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def ks_normality(residuals, mean=None, sd=None):
    """One-sample Kolmogorov-Smirnov test against a normal distribution.

    Unless given, the mean and standard deviation are estimated from the
    residuals, so the asymptotic p-value is optimistic (the Lilliefors
    correction is not applied).
    """
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size < 8:
        raise ValidationError("K-S normality check needs at least 8 residuals")
    mu = float(r.mean()) if mean is None else float(mean)
    s = float(r.std(ddof=1)) if sd is None else float(sd)
    if not s > 0:
        raise ValidationError("residuals have zero variance")
    dist = stats.norm(mu, s)
    d = ks_statistic(r, dist.cdf)
    p = float(stats.kstwobign.sf(d * math.sqrt(r.size)))
    return d, p
