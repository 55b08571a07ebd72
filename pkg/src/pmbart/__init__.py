"""Bayesian additive regression trees with probit links and monotone constraints."""

from .data import CutpointGrid, DataError, Dataset, OutcomeScaling, compute_offset, load_csv, make_cutpoint_grid, scale_outcome
from .model import ModelConfig, ModelVariant
from .posterior import CurveSummary, PosteriorDraws, curve_summary, fit_report, load_draws, predict_g, predict_prob, save_draws
from .priors import (
    LeafPriorParams,
    SigmaPriorParams,
    TreePriorParams,
    calibrate_leaf_prior,
    calibrate_sigma_prior,
    leaf_log_prior,
    split_probability,
    tree_log_prior,
)
from .sampler import SamplerState, draw_latent_z, draw_sigma, gibbs_leaves, init_state, run_mcmc, tree_move
from .tree import Cell, ConstraintBounds, SplitRule, Tree, above_pairs, birth, constraint_bounds, death, evaluate, is_monotone, leaf_cells

__version__ = "0.1.0"

__all__ = [
    "Cell",
    "ConstraintBounds",
    "CurveSummary",
    "CutpointGrid",
    "DataError",
    "Dataset",
    "LeafPriorParams",
    "ModelConfig",
    "ModelVariant",
    "OutcomeScaling",
    "PosteriorDraws",
    "SamplerState",
    "SigmaPriorParams",
    "SplitRule",
    "Tree",
    "TreePriorParams",
    "above_pairs",
    "birth",
    "calibrate_leaf_prior",
    "calibrate_sigma_prior",
    "compute_offset",
    "constraint_bounds",
    "curve_summary",
    "death",
    "draw_latent_z",
    "draw_sigma",
    "evaluate",
    "fit_report",
    "gibbs_leaves",
    "init_state",
    "is_monotone",
    "leaf_cells",
    "leaf_log_prior",
    "load_csv",
    "load_draws",
    "make_cutpoint_grid",
    "predict_g",
    "predict_prob",
    "run_mcmc",
    "save_draws",
    "scale_outcome",
    "split_probability",
    "tree_log_prior",
    "tree_move",
]
