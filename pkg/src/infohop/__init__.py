"""Associative-memory networks with Hebbian or information-goal learning."""

__version__ = "0.1.0"

from .binning import BinningConfig, BinGrid, fit_grid, soft_histogram, soft_weights
from .harness import (CapacityResult, PatternSource, Trainer, accuracy_cos,
                      accuracy_threshold, bootstrap_ci, estimate_capacity,
                      expected_constant_neurons, goal_landscape, optimize_goal,
                      pid_profile, stability_profile)
from .hopfield import (RecallResult, hebbian_train, load_weights, recall,
                       recall_batch, recurrent_drive, save_weights, step_sync)
from .infomorphic import (InfomorphicNetwork, TrainConfig, estimate_joint, fit,
                          forward_train, init_network, train, train_epoch)
from .patterns import (check_patterns, corrupt, cosine_similarity,
                       gen_correlated_patterns, gen_iid_patterns, load_patterns,
                       memory_load, save_patterns)
from .pid import (GoalWeights, PIDAtoms, co_information, entropy, goal_value,
                  isx_redundancy, mutual_information, pid_atoms)

__all__ = [name for name in dir() if not name.startswith("_")]
