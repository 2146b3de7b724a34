"""Nearest-neighbor and kernel Kaplan-Meier / Nelson-Aalen survival estimators,
random survival forests, evaluation scores, synthetic models and error-bound
calculators."""

from .data import L1, L2, Dataset, Metric, Standardizer, fit_standardizer, load_csv, write_csv
from .estimators import (Kernel, NeighborQuery, NeighborSurvival, estimate_cdf_reg,
                         estimate_cum_hazard, estimate_survival, find_neighbors)
from .evaluation import IpecConfig, concordance_index, ipec, mse_vs_truth, risk_scores
from .forest import ForestConfig, ForestModel, fit_forest, predict_forest_survival
from .selection import ParamGrid, cross_validate, default_grids, select_k_by_ipec
from .stepfn import (StepFunction, empirical_cdf, kaplan_meier, nelson_aalen,
                     sup_norm_distance, weighted_edf)
from .synthetic import exp_regression, weibull_mixture, weibull_regression

__version__ = "0.1.0"
