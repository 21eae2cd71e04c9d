"""Ego-centric vs audience-centric identity salience on follow graphs."""
from .bridge import BridgeCandidate, followee_category_share, rank_bridges
from .graph import FollowGraph, Role, UserRecord, load_graph
from .salience import (
    SalienceProfile,
    audience_scores,
    category_distribution,
    compute_profiles,
    coverage_raw,
    entropy_raw,
    normalize_scores,
)
from .stats import (
    DivergenceConfig,
    DivergenceReport,
    bonferroni,
    difference_set,
    divergence_report,
    paired_bootstrap,
    paired_t_test,
    wilcoxon_signed_rank,
)
from .synth import SynthConfig, generate
from .tagging import Dimension, TagMatrix, Vocabulary, load_vocabulary, tag_influencers

__version__ = "0.1.0"
