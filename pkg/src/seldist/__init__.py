"""Learn discrete distributions that reproduce observed box selectivities."""

from .depth import Arrangement, DeepestResult, DepthSolver, deepest_point, deepest_point_grid, deepest_point_sweep2d
from .driver import LearnConfig, LearnReport, add_sink, guess_list, learn, reduce_size
from .estimator import SelectivityEstimator
from .geometry import (DimensionError, DiscreteDistribution, Rect, SignedWeightedRanges, TrainingSample, Workload,
                       candidate_grid, contains, depth, empirical_error, selectivities, selectivity)
from .io import (WorkloadFormatError, load_distribution, load_workload, save_distribution, save_workload)
from .mwu import FeasibleOutput, Infeasible, MWUConfig, TimeLimitExceeded, is_feasible, mwu_constants
from .oracles import exhaustive_opt, explicit_mwu, gen_consistent, gen_cover_gadget
from .sampling import RngStream, WeightSplit, approx_deepest, build_eps_approx, weighted_sample

__version__ = "0.1.0"
