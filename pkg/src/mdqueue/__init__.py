"""Risk-sensitive control of a critically loaded multi-class queue under
moderate-deviation scaling: differential-game solver, asymptotically optimal
policy, exact discrete-event simulator, and Monte-Carlo cost estimation."""

from .game import GamePlay, GameSolution, decompose, rate_I, rate_J, solve_game
from .model import (ClassParams, ConfigError, ModelParams, NthSystem,
                    instantiate, load_config, validate)
from .paths import PLPath, ReflectionTriple, lipschitz_probe, osc, skorohod_map
from .rscost import (RsEstimate, RunningCost, estimate_Jn,
                     replication_log_weight, running_cost)
from .workload import WorkloadGeometry, derive_geometry

__version__ = "0.1.0"
