"""End-to-end run configuration and the pipeline stages behind the CLI.

Stages talk to each other only through files in ``output_dir``:

    synth      -> data.csv, data.json (planted labels)
    cluster    -> similarity.csv, partition.json, cluster_report.json
    train      -> models/<mode>/*.json, metrics_<mode>.json, metrics_<mode>.txt
    benchmark  -> benchmark.json, benchmark.txt, traces/<function>.csv
    uncertainty-> uncertainty.json, uncertainty.txt
"""

import csv
import dataclasses
import io
import json
import logging
import os
import tempfile
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from sklearn.metrics import adjusted_rand_score

from . import data as D
from .benchmarks import BENCHMARKS
from .elm import ElmParams, RelmModel, train_elm, train_relm
from .evaluation import cluster_quality, ks_normality, metric_report, uncertainty
from .exceptions import ValidationError
from .grey import GreyConfig, normalize, similarity_matrix
from .network import Partition, build_graph, equivalent_training_set, louvain
from .swarm import VARIANTS, RelmShape, SwarmConfig, optimize, optimize_relm, relm_fitness

log = logging.getLogger("rutnet")

MODES = ("single", "all", "equivalent")
MODEL_KINDS = ("iapso_relm", "relm", "elm")


# ----------------------------------------------------------------------------
# configuration


@dataclass
class SynthConfig:
    n_groups: int = 3
    structures_per_group: list = field(default_factory=lambda: [6, 7, 6])
    n_periods: int = 94
    noise_sd: float = 0.15
    jitter: float = 1.0
    outlier_rate: float = 0.03
    outlier_scale: float = 8.0


@dataclass
class DataConfig:
    path: str = None  # defaults to <output_dir>/data.csv
    loess_span: float = 0.05
    window_size: int = 5
    train_fraction: float = 0.8
    boundary_period: int = None


@dataclass
class ClusterConfig:
    rho: float = 0.5
    edge_rule: str = "complete"
    threshold: float = None


@dataclass
class ModelConfig:
    kind: str = "iapso_relm"
    n_hidden: int = 64
    C_o: float = 100.0
    C_r: float = 100.0
    activation: str = "sigmoid"
    weight_scale: float = 1.0


@dataclass
class BenchmarkConfig:
    functions: list = field(default_factory=lambda: ["sphere", "rastrigin", "rosenbrock"])
    variants: list = field(default_factory=lambda: list(VARIANTS))
    dimension: int = 10
    runs: int = 20
    relm_runs: int = 3  # 0 skips the RELM-training fitness


@dataclass
class RunConfig:
    seed: int = 0
    output_dir: str = "out"
    workers: int = 1
    synth: SynthConfig = field(default_factory=SynthConfig)
    data: DataConfig = field(default_factory=DataConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    benchmark: BenchmarkConfig = field(default_factory=BenchmarkConfig)
    train_mode: str = "equivalent"
    trials: int = 30

    def __post_init__(self):
        self.validate()

    def validate(self):
        GreyConfig(self.cluster.rho)
        D.SplitSpec(self.data.train_fraction, self.data.boundary_period)
        if self.train_mode not in MODES:
            raise ValidationError(f"train_mode must be one of {MODES}")
        if self.model.kind not in MODEL_KINDS:
            raise ValidationError(f"model.kind must be one of {MODEL_KINDS}")
        if self.model.n_hidden < 1:
            raise ValidationError("model.n_hidden must be >= 1")
        if self.data.window_size < 1:
            raise ValidationError("data.window_size must be >= 1")
        if not 0 < self.data.loess_span <= 1:
            raise ValidationError("data.loess_span must lie in (0, 1]")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        unknown = set(self.benchmark.functions) - set(BENCHMARKS)
        if unknown:
            raise ValidationError(f"unknown benchmark function(s): {sorted(unknown)}")
        return self

    @property
    def out(self):
        return Path(self.output_dir)

    @property
    def data_path(self):
        return Path(self.data.path) if self.data.path else self.out / "data.csv"

    @property
    def shape(self):
        m = self.model
        return RelmShape(m.n_hidden, self.data.window_size + 4, m.C_o, m.C_r, m.activation, m.weight_scale)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc):
        return _build(cls, doc or {})

    def to_yaml(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    @classmethod
    def load(cls, path):
        text = Path(path).read_text()
        doc = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
        if doc is not None and not isinstance(doc, dict):
            raise ValidationError(f"{path}: config must be a mapping")
        return cls.from_dict(doc)

    def with_overrides(self, pairs):
        """Apply ``key.sub=value`` overrides; values are parsed as YAML scalars."""
        doc = self.to_dict()
        for pair in pairs:
            if "=" not in pair:
                raise ValidationError(f"override {pair!r} is not key=value")
            key, raw = pair.split("=", 1)
            node = doc
            parts = key.strip().split(".")
            for p in parts[:-1]:
                if not isinstance(node.get(p), dict):
                    raise ValidationError(f"unknown config section {p!r} in {key!r}")
                node = node[p]
            if parts[-1] not in node:
                raise ValidationError(f"unknown config key {key!r}")
            node[parts[-1]] = yaml.safe_load(raw)
        return RunConfig.from_dict(doc)


def _build(cls, doc):
    if not isinstance(doc, dict):
        raise ValidationError(f"expected a mapping for {cls.__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(doc) - set(fields)
    if unknown:
        raise ValidationError(f"unknown {cls.__name__} key(s): {sorted(unknown)}")
    kwargs = {}
    for name, value in doc.items():
        ftype = fields[name].type
        if dataclasses.is_dataclass(ftype):
            value = _build(ftype, value)
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None


# ----------------------------------------------------------------------------
# file helpers


def _write_text(path, text):
    """Atomic write: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _write_json(path, doc):
    _write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _atomic_via(path, writer):
    # for helpers that write to a path themselves
    buf = Path(path).parent / f".{Path(path).name}.part"
    writer(buf)
    os.replace(buf, path)


@contextmanager
def _stage(name, seed=None):
    extra = f" (seed {seed})" if seed is not None else ""
    log.info("%s: start%s", name, extra)
    t0 = time.perf_counter()
    yield
    log.info("%s: done in %.2f s", name, time.perf_counter() - t0)


def _sub_seed(seed, key):
    # stable across processes, unlike hash()
    return int(np.random.SeedSequence([seed, zlib.crc32(str(key).encode())]).generate_state(1)[0])


# ----------------------------------------------------------------------------
# shared stages


def load_records(cfg):
    path = cfg.data_path
    if not path.exists():
        raise ValidationError(f"data file {path} not found; run synth or set data.path")
    return D.load_series(path)


def prepare(cfg, records=None):
    """Smooth, window and split every series with one global cutoff.

    Returns ``(records, [(train, test), ...])`` in record order.
    """
    records = load_records(cfg) if records is None else records
    smoothed = D.smooth_records(records, cfg.data.loess_span)
    sets = [D.build_samples(r, cfg.data.window_size) for r in smoothed]
    spec = D.SplitSpec(cfg.data.train_fraction, cfg.data.boundary_period)
    boundary = D.resolve_boundary(sets, spec)
    fixed = D.SplitSpec(boundary_period=boundary)
    return smoothed, [D.chronological_split(s, fixed) for s in sets]


def _fit_model(cfg, pool, seed):
    """Train the configured model on a pool; returns (standardizer, model)."""
    st = D.Standardizer().fit(pool.X)
    X = st.transform(pool.X)
    shape = cfg.shape
    kind = cfg.model.kind
    if kind == "iapso_relm":
        swarm = dataclasses.replace(cfg.swarm, seed=seed)
        model, _ = optimize_relm(swarm, X, pool.y, shape)
    else:
        rng = np.random.default_rng(seed)
        o = ElmParams.random(shape.n_hidden, X.shape[1], rng, shape.C_o, shape.activation, shape.weight_scale)
        r = ElmParams.random(shape.n_hidden, X.shape[1], rng, shape.C_r, shape.activation, shape.weight_scale)
        model = train_relm(o, r if kind == "relm" else None, X, pool.y)
    return st, model


def _model_doc(st, model, pool):
    doc = json.loads(model.to_json())
    doc["standardizer"] = {"mean": st.mean.tolist(), "scale": st.scale.tolist()}
    doc["training_pool"] = {"name": pool.structure_id, "structures": sorted(set(pool.sources)), "samples": len(pool)}
    return doc


def load_model(path):
    """Read a model file written by :func:`cmd_train`; returns (standardizer, RelmModel)."""
    doc = json.loads(Path(path).read_text())
    st = D.Standardizer(np.array(doc["standardizer"]["mean"]), np.array(doc["standardizer"]["scale"]))
    core = {k: doc[k] for k in ("version", "kind", "original", "corrector")}
    return st, RelmModel.from_json(json.dumps(core))


def _pools(mode, splits, partition):
    """Map each structure to a pool key, and each key to its training SampleSet."""
    trains = [tr for tr, _ in splits]
    if mode == "single":
        return {tr.structure_id: tr.structure_id for tr in trains}, {tr.structure_id: tr for tr in trains}
    if mode == "all":
        return {tr.structure_id: "all" for tr in trains}, {"all": D.SampleSet.concat("all", trains)}
    eq = equivalent_training_set(partition, trains)
    pools = {f"community-{c}": s for c, s in eq.items()}
    return {tr.structure_id: f"community-{partition.community_of(tr.structure_id)}" for tr in trains}, pools


# ----------------------------------------------------------------------------
# commands


def cmd_synth(cfg):
    """Write a synthetic dataset and its planted labels."""
    s = cfg.synth
    with _stage("synth", cfg.seed):
        ds = D.synthesize_dataset(
            s.n_groups,
            s.structures_per_group,
            s.n_periods,
            noise_sd=s.noise_sd,
            seed=cfg.seed,
            jitter=s.jitter,
            outlier_rate=s.outlier_rate,
            outlier_scale=s.outlier_scale,
        )
        path = cfg.data_path
        path.parent.mkdir(parents=True, exist_ok=True)
        _atomic_via(path, lambda p: D.save_series(ds.records, p))
        _write_json(
            path.with_suffix(".json"),
            {
                "planted_labels": {r.structure_id: int(g) for r, g in zip(ds.records, ds.labels)},
                "params": ds.params,
                "columns": list(D.COLUMNS),
            },
        )
    return ds


@dataclass
class ClusterResult:
    similarity: object
    partition: Partition
    warnings: list
    ari: float = None


def cmd_cluster(cfg):
    """Smoothed series -> grey similarity -> graph -> Louvain partition."""
    with _stage("cluster", cfg.seed):
        records = load_records(cfg)
        if len(records) < 2:
            raise ValidationError("clustering needs at least 2 series")
        smoothed = D.smooth_records(records, cfg.data.loess_span)
        series = [r.rut_depth for r in smoothed]
        labels = [r.structure_id for r in smoothed]
        sim = similarity_matrix(series, GreyConfig(cfg.cluster.rho), labels)
        graph = build_graph(sim, cfg.cluster.edge_rule, cfg.cluster.threshold)
        part = louvain(graph, cfg.seed)
        if part.n_communities == len(labels) and len(labels) > 1:
            msg = "every structure is its own community"
            graph.warnings.append(msg)
            log.warning(msg)

        out = cfg.out
        out.mkdir(parents=True, exist_ok=True)
        _atomic_via(out / "similarity.csv", sim.to_csv)
        _write_text(out / "partition.json", part.to_json())

        report = {"n_communities": part.n_communities, "modularity": part.modularity, "warnings": graph.warnings}
        ari = None
        sidecar = cfg.data_path.with_suffix(".json")
        if sidecar.exists():
            planted = json.loads(sidecar.read_text()).get("planted_labels")
            if planted and set(planted) == set(labels):
                ari = float(adjusted_rand_score([planted[x] for x in labels], part.assignment))
                report["ari_vs_planted"] = ari
        if 2 <= part.n_communities:
            feats = np.array([normalize(s) for s in series])
            sc, dbi, chi = cluster_quality(feats, part.assignment)
            report.update(silhouette=sc, davies_bouldin=dbi, calinski_harabasz=None if np.isnan(chi) else chi)
        _write_json(out / "cluster_report.json", report)
        log.info("cluster: %d communities, Q = %.4f", part.n_communities, part.modularity)
    return ClusterResult(sim, part, graph.warnings, ari)


def train_and_evaluate(cfg, mode, records=None, partition=None, write=True):
    """Train one model per training pool and score each structure's test split.

    Returns ``(MetricReport, residual K-S result or None)``.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}")
    if mode == "equivalent" and partition is None:
        ppath = cfg.out / "partition.json"
        if not ppath.exists():
            raise ValidationError(f"mode=equivalent needs {ppath}; run cluster first")
        partition = Partition.from_json(ppath)
    _, splits = prepare(cfg, records)
    owner, pools = _pools(mode, splits, partition)

    keys = sorted(pools)
    jobs = {k: _sub_seed(cfg.seed, k) for k in keys}
    if cfg.workers > 1 and len(keys) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            fitted = dict(zip(keys, ex.map(lambda k: _fit_model(cfg, pools[k], jobs[k]), keys)))
    else:
        fitted = {k: _fit_model(cfg, pools[k], jobs[k]) for k in keys}

    results, residuals = {}, []
    for tr, te in splits:
        st, model = fitted[owner[tr.structure_id]]
        pred = model.predict(st.transform(te.X))
        results[tr.structure_id] = (pred, te.y)
        residuals.append(te.y - pred)
    report = metric_report(results)
    resid = np.concatenate(residuals)
    ks = ks_normality(resid) if len(resid) >= 8 and np.std(resid) > 0 else None

    if write:
        out = cfg.out
        for k in keys:
            st, model = fitted[k]
            _write_json(out / "models" / mode / f"{k}.json", _model_doc(st, model, pools[k]))
        doc = json.loads(report.to_json())
        doc.update(mode=mode, model=cfg.model.kind, seed=cfg.seed)
        if ks is not None:
            doc["residual_ks"] = {"statistic": ks[0], "p_value": ks[1]}
        _write_json(out / f"metrics_{mode}.json", doc)
        _write_text(out / f"metrics_{mode}.txt", report.to_table(f"Test-set accuracy, mode={mode}"))
    return report, ks


def cmd_train(cfg, mode=None):
    mode = mode or cfg.train_mode
    with _stage(f"train[{mode}]", cfg.seed):
        report, _ = train_and_evaluate(cfg, mode)
        log.info("train[%s]: RMSE %.4f MAE %.4f MAPE %.2f%%", mode, report.rmse, report.mae, report.mape)
    return report


def cmd_benchmark_pso(cfg):
    """Compare swarm variants on test functions and on the RELM fitness."""
    b = cfg.benchmark
    table = {}
    traces = {}
    with _stage("benchmark-pso", cfg.seed):
        problems = [(name, BENCHMARKS[name].on_unit_box(cfg.swarm.x_max), b.dimension, b.runs) for name in b.functions]
        if b.relm_runs > 0:
            records = load_records(cfg)
            _, splits = prepare(cfg, records)
            pool = splits[0][0]
            st = D.Standardizer().fit(pool.X)
            shape = cfg.shape
            fit = relm_fitness(st.transform(pool.X), pool.y, shape, cfg.swarm.x_max)
            problems.append(("relm_training_mse", fit, shape.dimension, b.relm_runs))
        for name, func, dim, runs in problems:
            table[name] = {}
            rows = []
            for variant in b.variants:
                finals = []
                for k in range(runs):
                    sc = dataclasses.replace(cfg.swarm, variant=variant, seed=cfg.seed + k)
                    res = optimize(sc, func, dim)
                    finals.append(res.best_fitness)
                    rows += [(variant, cfg.seed + k, g + 1, f, m) for g, (f, m) in enumerate(zip(res.trace, res.mean_trace))]
                table[name][variant] = {"median": float(np.median(finals)), "finals": [float(f) for f in finals]}
                log.info("benchmark %s/%s: median %.6g", name, variant, table[name][variant]["median"])
            traces[name] = rows

        out = cfg.out
        for name, rows in traces.items():
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["variant", "seed", "generation", "gbest_fitness", "mean_fitness"])
            w.writerows([(v, s, g, repr(float(f)), repr(float(m))) for v, s, g, f, m in rows])
            _write_text(out / "traces" / f"{name}.csv", buf.getvalue())
        _write_json(out / "benchmark.json", table)
        _write_text(out / "benchmark.txt", _benchmark_table(table, b.variants))
    return table


def _benchmark_table(table, variants):
    head = ["function", *variants]
    rows = [head] + [[name] + [f"{table[name][v]['median']:.6g}" for v in variants] for name in table]
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    lines = ["Median final fitness"] + ["  ".join(c.ljust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def uncertainty_study(cfg, trials, records=None, partition=None, structure=None):
    """Repeat training with distinct seeds and measure prediction spread.

    The pool is the equivalent training set of the community holding
    ``structure`` (the first structure by default), or that structure alone
    when no partition is available. Returns ``{model: {"train": d, "test": d}}``.
    """
    if trials < 2:
        raise ValidationError("uncertainty needs trials >= 2")
    smoothed, splits = prepare(cfg, records)
    if partition is None and (cfg.out / "partition.json").exists():
        partition = Partition.from_json(cfg.out / "partition.json")
    target = structure or smoothed[0].structure_id
    if partition is not None:
        c = partition.community_of(target)
        members = [i for i, r in enumerate(smoothed) if partition.community_of(r.structure_id) == c]
    else:
        members = [next(i for i, r in enumerate(smoothed) if r.structure_id == target)]
    pool = D.SampleSet.concat("pool", [splits[i][0] for i in members])
    test = D.SampleSet.concat("test", [splits[i][1] for i in members])
    st = D.Standardizer().fit(pool.X)
    Xtr, Xte = st.transform(pool.X), st.transform(test.X)
    shape = cfg.shape
    n = Xtr.shape[1]

    def one(k):
        rng = np.random.default_rng([cfg.seed, k])
        o = ElmParams.random(shape.n_hidden, n, rng, shape.C_o, shape.activation, shape.weight_scale)
        r = ElmParams.random(shape.n_hidden, n, rng, shape.C_r, shape.activation, shape.weight_scale)
        elm = train_elm(o, Xtr, pool.y)
        relm = train_relm(o, r, Xtr, pool.y)
        swarm = dataclasses.replace(cfg.swarm, seed=_sub_seed(cfg.seed, f"trial-{k}"))
        iapso, _ = optimize_relm(swarm, Xtr, pool.y, shape)
        return [(m.predict(Xtr), m.predict(Xte)) for m in (elm, relm, iapso)]

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            runs = list(ex.map(one, range(trials)))
    else:
        runs = [one(k) for k in range(trials)]
    out = {}
    for j, name in enumerate(("elm", "relm", "iapso_relm")):
        out[name] = {
            "train": uncertainty([r[j][0] for r in runs]).mean_variance,
            "test": uncertainty([r[j][1] for r in runs]).mean_variance,
        }
    return out, sorted(set(pool.sources))


def cmd_uncertainty(cfg, trials=None):
    trials = cfg.trials if trials is None else trials
    with _stage("uncertainty", cfg.seed):
        result, members = uncertainty_study(cfg, trials)
        doc = {"trials": trials, "seed": cfg.seed, "structures": members, "mean_variance": result}
        _write_json(cfg.out / "uncertainty.json", doc)
        lines = [f"Prediction variance over {trials} trainings", "model        train        test"]
        lines += [f"{k:<12} {v['train']:<12.6g} {v['test']:.6g}" for k, v in result.items()]
        _write_text(cfg.out / "uncertainty.txt", "\n".join(lines) + "\n")
    return result
