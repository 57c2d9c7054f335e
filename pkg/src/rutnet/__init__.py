"""Rutting-depth prediction with grey-relation networks, residual ELMs and adaptive swarms."""

from .data import (
    SampleSet,
    SeriesRecord,
    SplitSpec,
    Standardizer,
    build_samples,
    chronological_split,
    load_series,
    loess_smooth,
    save_samples,
    save_series,
    synthesize_dataset,
)
from .elm import ElmModel, ElmParams, RelmModel, solve_beta, train_elm, train_relm
from .evaluation import MetricReport, UncertaintyReport, cluster_quality, ks_normality, mae, mape, rmse, uncertainty
from .exceptions import NumericalError, ParseError, SchemaError, ValidationError
from .grey import GreyConfig, SimilarityMatrix, normalize, relation_degree, similarity_matrix
from .network import Partition, WeightedGraph, build_graph, equivalent_training_set, louvain, modularity
from .swarm import OptimizeResult, RelmShape, SwarmConfig, optimize, optimize_relm

__version__ = "0.1.0"
