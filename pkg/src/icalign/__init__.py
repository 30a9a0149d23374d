"""Cooperative precoder design for the K-user MIMO interference channel."""

from .exceptions import ContractViolation, NumericFailure, SingularMatrixError
from .network import (ChannelRealization, Interferer, NetworkConfig, NoiseModel,
                      draw_realization, effective_noise_cov,
                      interference_plus_noise_cov, load_scenario,
                      stack_realizations)
from .solvers import (AlgorithmKind, AlgorithmTrace, ApproxMaxSINR, ClosedFormIA3,
                      Greedy, IterativeIA, JointMMSE, MaxSINR, MinINL,
                      RandomBeamforming, TransceiverState, init_state,
                      make_solver, run_algorithm)

__version__ = "0.1.0"
