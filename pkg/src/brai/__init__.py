"""Bootstrap RAI: recursive bootstrap over constraint-based structure learning.

A graph generative tree compactly encodes many CPDAGs learned from bootstrap
samples; it supports sampling, MAP and k-best extraction and
model-averaged feature posteriors.
"""

__version__ = "0.1.0"

from .averaging import Feature, FeaturePosterior, all_feature_posteriors, auc, feature_posterior
from .citest import CiBudget, CiCache, CiQuery, CiVerdict, ci_test
from .dataset import (
    Dataset,
    derive_rng,
    GroundTruthNetwork,
    bootstrap_resample,
    builtin_network,
    forward_sample,
    load_csv,
    load_network,
    random_network,
)
from .ggt import BraiConfig, BuildContext, BootstrapNode, Leaf, build_tree, count_unique_cpdags, deserialize, serialize
from .graph import ChainGraph, dag_to_cpdag, enumerate_dags, is_d_separated
from .rai import rai_learn
from .sampler import ScoredCpdag, map_cpdag, sample_cpdag, top_k_paths
from .score import ScoreConfig, dag_score, family_score, graph_score

__all__ = [
    "BootstrapNode",
    "BraiConfig",
    "BuildContext",
    "ChainGraph",
    "CiBudget",
    "CiCache",
    "CiQuery",
    "CiVerdict",
    "Dataset",
    "Feature",
    "FeaturePosterior",
    "GroundTruthNetwork",
    "Leaf",
    "ScoreConfig",
    "ScoredCpdag",
    "all_feature_posteriors",
    "auc",
    "bootstrap_resample",
    "build_tree",
    "builtin_network",
    "ci_test",
    "count_unique_cpdags",
    "dag_score",
    "dag_to_cpdag",
    "derive_rng",
    "deserialize",
    "enumerate_dags",
    "family_score",
    "feature_posterior",
    "forward_sample",
    "graph_score",
    "is_d_separated",
    "load_csv",
    "load_network",
    "map_cpdag",
    "rai_learn",
    "random_network",
    "sample_cpdag",
    "serialize",
    "top_k_paths",
]
