"""Gaussian boson sampling with partially distinguishable photons and uniform loss."""

from .approx import (FidelityRecord, fidelity, fidelity_sweep, leading_ones, mean_fidelity,
                     p_approx, read_records, write_records)
from .config import ConfigError, ExperimentConfig, config_hash, load_config
from .matfunc import g_function, hafnian, torontonian
from .model import Interferometer, coefficients, haar_random_unitary, kernel_matrix, q_matrix
from .oracle import fock_pnr_distribution, threshold_from_pnr
from .pnr import (GBSModel, GuardError, prob_dist_exact, prob_indistinguishable,
                  prob_total_exact, prob_virtual)
from .sampler import EmpiricalDistribution, draw_samples, estimate_p_sim
from .threshold import prob_threshold, prob_threshold_ideal

__version__ = "0.1.0"
