"""Robust global ranking from pairwise comparisons with outlier detection."""

__version__ = "0.1.0"

from .errors import InvariantError, ParseError, SolverError, StructuralError, TrimRankError
from .model import (ComparisonDataset, ComparisonRecord, DatasetBuilder, EvalMetrics,
                    OutlierMask, ScoreVector, TrimmedSolution, mismatch_count, residual)
from .hodge import (LaplacianSystem, assemble, connected_components, solve_scores,
                    trimmed_least_squares)
from .ilts import IltsConfig, adaptive_ilts, adjacent_pair_correction, ilts_with_k, update_mask
from .huber_lasso import LassoPath, huber_fit, lasso_path, lasso_select
from .simulate import SimulatedDataset, SimulationSpec, generate
from .evaluation import SweepReport, SweepSpec, run_sweep, score_detection
from .estimators import HodgeRank, HuberLassoRank, LeastTrimmedSquaresRank
