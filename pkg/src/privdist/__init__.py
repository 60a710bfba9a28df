"""Exact skewed bisimilarity distances for labelled Markov chains."""

from privdist.distance import (
    SkewedBisimilarityDistance,
    delta_bound,
    exact_value,
    threshold,
)
from privdist.fixpoint import check_certificate, kleene_iterate, recover
from privdist.kantorovich import delta_alpha, gamma_apply, kantorovich_dual, kantorovich_primal
from privdist.lmc import Lmc, bisimilarity_partition, horizon_distribution, load_lmc, parse_lmc
from privdist.lp import LinearProgram, solve
from privdist.models import DiningConfig, generate_dining, generate_random
from privdist.rational import best_rational_in_interval, rat_arith, taylor_lower_bound_exp
from privdist.smt import export_lfp_formula, export_threshold_formula, validate_model
from privdist.tv import tv_lower_bound

__all__ = [
    "DiningConfig",
    "LinearProgram",
    "Lmc",
    "SkewedBisimilarityDistance",
    "best_rational_in_interval",
    "bisimilarity_partition",
    "check_certificate",
    "delta_alpha",
    "delta_bound",
    "exact_value",
    "export_lfp_formula",
    "export_threshold_formula",
    "gamma_apply",
    "generate_dining",
    "generate_random",
    "horizon_distribution",
    "kantorovich_dual",
    "kantorovich_primal",
    "kleene_iterate",
    "load_lmc",
    "parse_lmc",
    "rat_arith",
    "recover",
    "solve",
    "taylor_lower_bound_exp",
    "threshold",
    "tv_lower_bound",
    "validate_model",
]
