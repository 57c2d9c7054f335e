"""Measurement series, smoothing, sample construction and synthetic data.

A pavement structure is observed once per loading period: accumulated load
axis count, air temperature and rutting depth. The helpers here turn those
raw series into supervised regression samples (5 lagged depths plus four
load/temperature features) and produce synthetic track data with a known
group structure for desk-scale experiments.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import ParseError, SchemaError, ValidationError

COLUMNS = ("structure_id", "period", "load_axes", "temperature_c", "rut_depth_mm")

LOAD_SCALE = 1e6


@dataclass
class SeriesRecord:
    """Raw measurement sequence of one pavement structure."""

    structure_id: str
    period: np.ndarray
    load_axes: np.ndarray
    temperature: np.ndarray
    rut_depth: np.ndarray

    def __post_init__(self):
        self.period = np.asarray(self.period, dtype=np.int64)
        self.load_axes = np.asarray(self.load_axes, dtype=float)
        self.temperature = np.asarray(self.temperature, dtype=float)
        self.rut_depth = np.asarray(self.rut_depth, dtype=float)
        n = len(self.period)
        for name in ("load_axes", "temperature", "rut_depth"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"{self.structure_id}: column {name} has wrong length")
        if n == 0:
            raise ValidationError(f"{self.structure_id}: no periods")
        if np.any(self.period < 1):
            raise ValidationError(f"{self.structure_id}: period index must be >= 1")
        bad = np.flatnonzero(np.diff(self.period) <= 0)
        if bad.size:
            raise ValidationError(
                f"{self.structure_id}: period index not strictly increasing at period "
                f"{self.period[bad[0] + 1]}"
            )
        bad = np.flatnonzero(np.diff(self.load_axes) < 0)
        if bad.size:
            raise ValidationError(
                f"{self.structure_id}: accumulated load axes decrease at period "
                f"{self.period[bad[0] + 1]}"
            )
        if np.any(self.load_axes < 0):
            raise ValidationError(f"{self.structure_id}: negative load axes")
        if not (np.all(np.isfinite(self.rut_depth)) and np.all(np.isfinite(self.temperature))):
            raise ValidationError(f"{self.structure_id}: non-finite measurement")

    def __len__(self):
        return len(self.period)

    def with_depth(self, depth):
        return SeriesRecord(self.structure_id, self.period, self.load_axes, self.temperature, depth)


@dataclass
class SampleSet:
    """Supervised samples; ``sources`` and ``periods`` keep per-sample provenance."""

    structure_id: str
    X: np.ndarray
    y: np.ndarray
    feature_names: list
    sources: np.ndarray = None
    periods: np.ndarray = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.y), -1) if len(self.y) else np.zeros(
            (0, len(self.feature_names))
        )
        self.y = np.asarray(self.y, dtype=float)
        if self.sources is None:
            self.sources = np.full(len(self.y), self.structure_id, dtype=object)
        self.sources = np.asarray(self.sources, dtype=object)
        if self.periods is None:
            self.periods = np.arange(len(self.y))
        self.periods = np.asarray(self.periods, dtype=np.int64)
        if self.X.shape[1] != len(self.feature_names):
            raise ValidationError("feature matrix width does not match feature_names")
        if not np.all(np.isfinite(self.X)):
            raise ValidationError(f"{self.structure_id}: non-finite feature value")

    def __len__(self):
        return len(self.y)

    def subset(self, idx, structure_id=None):
        return SampleSet(
            structure_id or self.structure_id,
            self.X[idx],
            self.y[idx],
            list(self.feature_names),
            self.sources[idx],
            self.periods[idx],
        )

    @classmethod
    def concat(cls, structure_id, parts):
        parts = list(parts)
        if not parts:
            raise ValidationError("cannot merge an empty list of sample sets")
        names = parts[0].feature_names
        return cls(
            structure_id,
            np.vstack([p.X for p in parts]),
            np.concatenate([p.y for p in parts]),
            list(names),
            np.concatenate([p.sources for p in parts]),
            np.concatenate([p.periods for p in parts]),
        )


@dataclass
class SplitSpec:
    train_fraction: float = 0.8
    boundary_period: int = None

    def __post_init__(self):
        if self.boundary_period is None and not 0.0 < self.train_fraction < 1.0:
            raise ValidationError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


# ----------------------------------------------------------------------------
# I/O


def load_series(path, schema=None):
    """Read a long-format CSV into one :class:`SeriesRecord` per structure.

    ``schema`` maps the logical column names in :data:`COLUMNS` to the
    header names used in the file.
    """
    schema = {c: c for c in COLUMNS} | dict(schema or {})
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValidationError(f"{path}: no records")
        missing = [schema[c] for c in COLUMNS if schema[c] not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = {}
        for i, row in enumerate(reader, start=1):
            sid = row[schema["structure_id"]].strip()
            try:
                period = int(row[schema["period"]])
                values = [float(row[schema[c]]) for c in COLUMNS[2:]]
            except (TypeError, ValueError):
                raise ParseError(f"{path}: non-numeric cell in data row {i}", row=i) from None
            rows.setdefault(sid, []).append((period, *values))
    if not rows:
        raise ValidationError(f"{path}: no records")
    records = []
    for sid, items in rows.items():
        items.sort(key=lambda r: r[0])
        arr = np.array(items, dtype=float)
        records.append(SeriesRecord(sid, arr[:, 0].astype(np.int64), arr[:, 1], arr[:, 2], arr[:, 3]))
    return records


def save_series(records, path):
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for rec in records:
            for k in range(len(rec)):
                w.writerow(
                    [
                        rec.structure_id,
                        int(rec.period[k]),
                        repr(float(rec.load_axes[k])),
                        repr(float(rec.temperature[k])),
                        repr(float(rec.rut_depth[k])),
                    ]
                )


def save_samples(samples, path, sidecar=None):
    """Write samples as CSV plus a JSON sidecar with feature names and extras."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["structure_id", "period", *samples.feature_names, "target"])
        for i in range(len(samples)):
            w.writerow(
                [samples.sources[i], int(samples.periods[i])]
                + [repr(float(v)) for v in samples.X[i]]
                + [repr(float(samples.y[i]))]
            )
    meta = {"structure_id": samples.structure_id, "feature_names": list(samples.feature_names)}
    meta.update(sidecar or {})
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


# ----------------------------------------------------------------------------
# smoothing


def loess_smooth(y, span=0.05, degree=1):
    """Locally weighted polynomial smoothing on the index grid.

    Each point is fitted from its ``ceil(span * n)`` nearest neighbours
    (at least 2) with tricube weights scaled by the distance to the farthest
    neighbour. No robustness iterations.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        raise ValidationError("loess needs at least 2 points")
    if not np.all(np.isfinite(y)):
        raise ValidationError("loess input contains non-finite values")
    if not 0.0 < span <= 1.0:
        raise ValidationError(f"span must lie in (0, 1], got {span}")
    q = min(n, max(2, math.ceil(span * n - 1e-12)))
    x = np.arange(n, dtype=float)
    out = np.empty(n)
    left = 0
    for i in range(n):
        # slide the q-point window so that it stays the nearest neighbourhood of i
        while left + q < n and x[i] - x[left] > x[left + q] - x[i]:
            left += 1
        xs = x[left : left + q]
        ys = y[left : left + q]
        d = np.abs(xs - x[i])
        h = d.max()
        w = (1.0 - (d / h) ** 3) ** 3 if h > 0 else np.ones(q)
        out[i] = _local_fit(xs - x[i], ys, w, degree)
    return out


def _local_fit(dx, ys, w, degree):
    # weighted polynomial fit evaluated at dx = 0, falling back to lower degree
    for deg in range(degree, -1, -1):
        if np.count_nonzero(w > 0) <= deg:
            continue
        V = np.vander(dx, deg + 1, increasing=True)
        sw = np.sqrt(w)
        coef, *_ = np.linalg.lstsq(V * sw[:, None], ys * sw, rcond=None)
        return coef[0]
    return float(np.average(ys, weights=w)) if w.sum() > 0 else float(ys.mean())


def smooth_records(records, span=0.05):
    return [r.with_depth(loess_smooth(r.rut_depth, span)) for r in records]


# ----------------------------------------------------------------------------
# samples

FEATURE_NAMES_TAIL = [
    "load_axes_rate",
    "temperature_rate",
    "temperature_change_diff",
    "characteristic_load",
]


def feature_names(window_size=5):
    return [f"rut_lag_{k}" for k in range(window_size, 0, -1)] + FEATURE_NAMES_TAIL


def exogenous_features(series):
    """Per-period load/temperature features, shape (n, 4).

    Rates are first differences per period step (zero at the first period);
    the temperature change difference is the difference of successive rates.
    Load quantities are expressed in millions of axes.
    """
    dt = np.diff(series.period).astype(float)
    load = series.load_axes / LOAD_SCALE
    load_rate = np.concatenate([[0.0], np.diff(load) / dt])
    temp_rate = np.concatenate([[0.0], np.diff(series.temperature) / dt])
    temp_diff = np.concatenate([[0.0], np.diff(temp_rate)])
    return np.column_stack([load_rate, temp_rate, temp_diff, load])


def build_samples(series, window_size=5):
    """Sliding-window samples predicting the depth of period ``t`` from the
    ``window_size`` preceding depths and the exogenous features of ``t``."""
    n = len(series)
    if window_size < 1:
        raise ValidationError("window_size must be >= 1")
    if n < window_size + 1:
        raise ValidationError(
            f"{series.structure_id}: series of length {n} is too short, "
            f"need at least {window_size + 1} periods"
        )
    depth = series.rut_depth
    exo = exogenous_features(series)
    lags = np.lib.stride_tricks.sliding_window_view(depth[:-1], window_size)
    X = np.hstack([lags, exo[window_size:]])
    y = depth[window_size:].copy()
    return SampleSet(
        series.structure_id,
        X,
        y,
        feature_names(window_size),
        periods=series.period[window_size:],
    )


def resolve_boundary(samples_list, spec):
    """Return the last training period implied by ``spec`` over all sets.

    A fraction is applied to the union of target periods, so every structure
    shares one chronological cutoff.
    """
    if spec.boundary_period is not None:
        return int(spec.boundary_period)
    periods = np.unique(np.concatenate([s.periods for s in samples_list]))
    n_train = int(math.floor(spec.train_fraction * len(periods)))
    if n_train < 1 or n_train >= len(periods):
        raise ValidationError(
            f"train_fraction {spec.train_fraction} leaves an empty side for {len(periods)} periods"
        )
    return int(periods[n_train - 1])


def chronological_split(samples, spec):
    """Split into (train, test) keeping order; the test part follows training."""
    if spec.boundary_period is None:
        n = len(samples)
        n_train = int(math.floor(spec.train_fraction * n))
        if n_train < 1 or n_train >= n:
            raise ValidationError(
                f"train_fraction {spec.train_fraction} yields an empty split for {n} samples"
            )
        idx = np.arange(n)
        return samples.subset(idx[:n_train]), samples.subset(idx[n_train:])
    mask = samples.periods <= spec.boundary_period
    if mask.all() or not mask.any():
        raise ValidationError(f"boundary period {spec.boundary_period} yields an empty split")
    return samples.subset(np.flatnonzero(mask)), samples.subset(np.flatnonzero(~mask))


@dataclass
class Standardizer:
    """Per-feature z-score fitted on training rows only."""

    mean: np.ndarray = None
    scale: np.ndarray = None

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        self.mean = X.mean(axis=0)
        sd = X.std(axis=0)
        self.scale = np.where(sd > 1e-12, sd, 1.0)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


# ----------------------------------------------------------------------------
# synthetic track data

# (load exponent, temperature sensitivity, final rut amplitude in mm) per planted group
GROUP_ARCHETYPES = [(0.45, 0.15, 40.0), (1.0, 1.6, 12.0), (1.6, 0.5, 25.0), (0.7, 0.9, 30.0), (1.3, 1.3, 18.0)]
SHAPE_JITTER = (0.02, 0.04)


@dataclass
class SyntheticDataset:
    records: list
    labels: np.ndarray
    params: dict = field(default_factory=dict)

    def planted_groups(self):
        out = {}
        for rec, g in zip(self.records, self.labels):
            out.setdefault(int(g), []).append(rec.structure_id)
        return out


def synthesize_dataset(
    n_groups=3,
    structures_per_group=6,
    n_periods=94,
    noise_sd=0.15,
    seed=0,
    jitter=1.0,
    outlier_rate=0.03,
    outlier_scale=8.0,
):
    """Synthetic rutting series sharing one load/temperature history.

    Every structure sees the same traffic and weather, as on a test loop.
    Rutting grows as ``A * load**b`` with increments amplified in hot
    periods by ``exp(k * (T - 15) / 10)``. Each group has its own
    ``(b, k, A)`` archetype; members perturb ``A``, initial depth and ``(b, k)`` by
    amounts proportional to ``jitter`` (0 makes group members identical).
    Observed depth carries Gaussian noise of ``noise_sd`` mm plus sparse
    spikes (probability ``outlier_rate`` per period) with standard deviation
    ``outlier_scale * noise_sd``.
    """
    sizes = (
        [int(structures_per_group)] * int(n_groups)
        if np.isscalar(structures_per_group)
        else [int(s) for s in structures_per_group]
    )
    if n_groups < 1 or len(sizes) != n_groups or min(sizes) < 1 or n_periods < 2:
        raise ValidationError("n_groups, structures_per_group and n_periods must be >= 1")
    if noise_sd < 0 or jitter < 0 or outlier_scale < 0 or not 0 <= outlier_rate <= 1:
        raise ValidationError("noise_sd and jitter must be non-negative")
    rng = np.random.default_rng(seed)
    t = np.arange(1, n_periods + 1)
    per_year = 19.0
    increments = 0.44e6 * (1.0 + 0.25 * np.sin(2 * np.pi * (t - 3) / per_year)) * rng.uniform(0.8, 1.2, n_periods)
    load = np.round(np.cumsum(increments))
    temp = 15.0 + 13.0 * np.sin(2 * np.pi * (t - 5) / per_year) + rng.normal(0.0, 1.5, n_periods)
    load_m = load / LOAD_SCALE

    records, labels = [], []
    k = 0
    for g, size in enumerate(sizes):
        b0, kappa0, amp0 = GROUP_ARCHETYPES[g % len(GROUP_ARCHETYPES)]
        if g >= len(GROUP_ARCHETYPES):
            b0 += 0.15 * (g // len(GROUP_ARCHETYPES))
        for _ in range(size):
            b = b0 + jitter * rng.normal(0.0, SHAPE_JITTER[0])
            kappa = kappa0 + jitter * rng.normal(0.0, SHAPE_JITTER[1])
            amp = amp0 * (1.0 + jitter * rng.uniform(-0.2, 0.2))
            d0 = 7.5 + jitter * rng.uniform(-4.5, 4.5)
            growth = np.diff(np.concatenate([[0.0], load_m**b]))
            inc = growth * np.exp(kappa * (temp - 15.0) / 10.0)
            clean = d0 + amp * np.cumsum(inc) / inc.sum()
            noise = rng.normal(0.0, noise_sd, n_periods)
            spikes = rng.random(n_periods) < outlier_rate
            noise[spikes] += rng.normal(0.0, outlier_scale * noise_sd, spikes.sum())
            depth = clean + noise
            k += 1
            records.append(SeriesRecord(f"STR{k}", t, load, temp, depth))
            labels.append(g)
    params = dict(
        n_groups=n_groups,
        structures_per_group=sizes,
        n_periods=n_periods,
        noise_sd=noise_sd,
        seed=seed,
        jitter=jitter,
        outlier_rate=outlier_rate,
        outlier_scale=outlier_scale,
    )
    return SyntheticDataset(records, np.array(labels), params)
