"""Evaluation measures for hierarchical classification."""
from .evaluate import ALL_MEASURES, EvalConfig, evaluate_all, evaluate_instance
from .hierarchy import Hierarchy, load_hierarchy, normalize_to_dag, parse_hierarchy
from .labels import InstanceLabels
from .lca_measures import lca_measures, prune_nested
from .pair_measures import gie, mgia, tree_induced_error
from .set_measures import augment, bianchi_filter, set_scores

__all__ = [
    "ALL_MEASURES", "EvalConfig", "Hierarchy", "InstanceLabels", "augment",
    "bianchi_filter", "evaluate_all", "evaluate_instance", "gie", "lca_measures",
    "load_hierarchy", "mgia", "normalize_to_dag", "parse_hierarchy", "prune_nested",
    "set_scores", "tree_induced_error",
]
