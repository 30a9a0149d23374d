"""
Transceiver designs as scikit-learn style estimators.

``fit`` takes a :class:`~icalign.network.ChannelRealization` (one draw or a
stacked batch) and learns precoders and receive matrices for every element
of the batch; ``score`` reports the mean sum rate. Hyper-parameters follow
the estimator conventions, so ``get_params``/``set_params``/``clone`` work.

Example
-------
>>> from icalign import NetworkConfig, draw_realization, MinINL
>>> cfg = NetworkConfig.symmetric(K=3, M=2, N=2, S=1, rho_db=20)
>>> real = draw_realization(cfg, 0)
>>> est = MinINL(max_iter=50, random_state=1).fit(real)
>>> est.precoders_[0].shape
(2, 1)
"""

import enum
from dataclasses import dataclass
from typing import List

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import metrics, updates
from ._validation import check_channel, check_precoders
from .exceptions import NumericFailure

__all__ = [
    "AlgorithmKind",
    "TransceiverState",
    "AlgorithmTrace",
    "IterativeIA",
    "MinINL",
    "JointMMSE",
    "MaxSINR",
    "ApproxMaxSINR",
    "Greedy",
    "RandomBeamforming",
    "ClosedFormIA3",
    "make_solver",
    "init_state",
    "run_algorithm",
]


class AlgorithmKind(str, enum.Enum):
    IterIA = "IterIA"
    MinINL = "MinINL"
    JointMMSE = "JointMMSE"
    MaxSINR = "MaxSINR"
    ApproxMaxSINR = "ApproxMaxSINR"
    Greedy = "Greedy"
    RandomBF = "RandomBF"
    ClosedFormIA3 = "ClosedFormIA3"


@dataclass
class TransceiverState:
    """Precoders ``F[l]`` (M_l x S_l) and receive matrices ``RX[k]``
    (N_k x S_k): subspace bases for IA/min-INL, filters otherwise."""
    F: List[np.ndarray]
    RX: List[np.ndarray]


@dataclass
class AlgorithmTrace:
    """Outcome of one run (or a batch of runs).

    ``objective[t]`` is the objective after ``t`` full sweeps
    (``objective[0]`` is the initial state); entries past an element's
    ``iterations_run`` repeat its final value.
    """
    objective: np.ndarray
    iterations_run: np.ndarray
    converged: np.ndarray
    final: TransceiverState


def _where(mask, new, old):
    m = mask[..., None, None]
    return [np.where(m, a, b) for a, b in zip(new, old)]


class _TransceiverDesign(BaseEstimator):
    """Shared fit loop: alternate receiver and precoder updates until the
    objective stalls or ``max_iter`` sweeps.

    Subclasses set ``maximize`` and implement ``_init_receivers``,
    ``_sweep`` and ``_objective``.
    """

    maximize = False
    #: stop when the objective itself drops below ``tol`` (minimizations only)
    stop_below_tol = True

    def __init__(self, max_iter=100, tol=1e-8, random_state=None):
        self.max_iter = max_iter
        self.tol = tol
        self.random_state = random_state

    def _initial_precoders(self, real):
        return updates.random_orthonormal_precoders(real.config, self.random_state,
                                                    real.batch_shape)

    def _stalled(self, prev, cur):
        if self.maximize:
            return cur - prev < self.tol
        done = prev - cur < self.tol
        if self.stop_below_tol:
            done = done | (cur < self.tol)
        return done

    def fit(self, X, precoders_init=None, noise=None):
        """Run the design on every channel draw in ``X``.

        Parameters
        ----------
        X : ChannelRealization
        precoders_init : list of ndarray, optional
            Initial precoders; random orthonormal columns scaled to
            ``sqrt(rho/S)`` drawn from ``random_state`` if omitted.
        noise : NoiseModel, optional
            Overrides ``X.noise``.

        Returns
        -------
        self
        """
        real = check_channel(X)
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        noise = real.noise if noise is None else noise
        if precoders_init is None:
            F = self._initial_precoders(real)
        else:
            F = check_precoders(real, precoders_init)
        RX = self._init_receivers(real, F, noise)
        obj = self._objective(real, F, RX, noise)
        trace = [obj]
        batch = real.batch_shape
        active = np.ones(batch, dtype=bool)
        converged = np.zeros(batch, dtype=bool)
        n_iter = np.zeros(batch, dtype=int)
        for t in range(self.max_iter):
            try:
                F_new, RX_new = self._sweep(real, F, RX, noise)
            except NumericFailure as exc:
                exc.diagnostics.setdefault("iteration", t + 1)
                raise
            obj_new = self._objective(real, F_new, RX_new, noise)
            F = _where(active, F_new, F)
            RX = _where(active, RX_new, RX)
            n_iter = n_iter + active
            done = active & self._stalled(obj, obj_new)
            obj = np.where(active, obj_new, obj)
            trace.append(obj)
            converged |= done
            active &= ~done
            if not np.any(active):
                break
        self.precoders_ = F
        self.receivers_ = RX
        self.objective_ = np.array(trace)
        self.n_iter_ = n_iter
        self.converged_ = converged
        return self

    @property
    def trace_(self):
        check_is_fitted(self)
        return AlgorithmTrace(self.objective_, self.n_iter_, self.converged_,
                              TransceiverState(self.precoders_, self.receivers_))

    def sum_rate(self, X, noise=None):
        """Sum rate (bits) of the fitted precoders on ``X``, per batch
        element."""
        check_is_fitted(self)
        real = check_channel(X)
        return metrics.sum_rate(real, self.precoders_, noise)

    def score(self, X, y=None):
        """Mean sum rate in bits per channel use."""
        return float(np.mean(self.sum_rate(X)))


class IterativeIA(_TransceiverDesign):
    """Alternating minimization of the interference leakage.

    Precoders have orthogonal columns of power ``rho/S``; receive matrices are
    orthonormal bases of the interference-free subspaces.
    """

    def _init_receivers(self, real, F, noise):
        return updates.ia_subspace_update(real, F)

    def _sweep(self, real, F, RX, noise):
        Phi = updates.ia_subspace_update(real, F)
        return updates.ia_precoder_update(real, Phi), Phi

    def _objective(self, real, F, RX, noise):
        return metrics.leakage(real, F, RX)


class MinINL(IterativeIA):
    """Alternating minimization of interference plus noise leakage: the IA
    subspaces are biased away from strong noise directions."""

    def _init_receivers(self, real, F, noise):
        return updates.inl_subspace_update(real, F, noise)

    def _sweep(self, real, F, RX, noise):
        Phi = updates.inl_subspace_update(real, F, noise)
        return updates.ia_precoder_update(real, Phi), Phi

    def _objective(self, real, F, RX, noise):
        return metrics.inl(real, F, RX, noise)


class JointMMSE(_TransceiverDesign):
    """Joint MMSE transceivers under a per-transmitter power inequality.

    Parameters
    ----------
    power_rtol : float
        Relative tolerance on ``||F_l||_F^2 = rho_l`` for the multiplier
        bisection.
    """

    def __init__(self, max_iter=100, tol=1e-8, random_state=None, power_rtol=1e-13):
        super().__init__(max_iter=max_iter, tol=tol, random_state=random_state)
        self.power_rtol = power_rtol

    def _init_receivers(self, real, F, noise):
        return updates.mmse_receiver_update(real, F, noise)

    def _sweep(self, real, F, RX, noise):
        G = updates.mmse_receiver_update(real, F, noise)
        return updates.mmse_precoder_update(real, G, power_rtol=self.power_rtol), G

    def _objective(self, real, F, RX, noise):
        return metrics.mse(real, F, RX, noise)


class MaxSINR(_TransceiverDesign):
    """Column-wise alternating maximization of the network SINR (total
    signal power over total interference-plus-noise power).

    Receivers start from the per-stream max-SINR filters of the initial
    precoders.
    """

    maximize = True

    def _init_receivers(self, real, F, noise):
        return updates.approx_maxsinr_receivers(real, F, noise)

    def _sweep(self, real, F, RX, noise):
        return updates.maxsinr_sweep(real, F, RX, noise)

    def _objective(self, real, F, RX, noise):
        return metrics.sinr_objective(real, F, RX, noise)


class ApproxMaxSINR(_TransceiverDesign):
    """Per-stream max-SINR iterations using the reciprocal network.

    Not an alternating optimization of one objective; the network SINR is
    tracked and the run stops once it changes by less than ``tol``.
    """

    def _stalled(self, prev, cur):
        return np.abs(cur - prev) < self.tol

    def _init_receivers(self, real, F, noise):
        return updates.approx_maxsinr_receivers(real, F, noise)

    def _sweep(self, real, F, RX, noise):
        G = updates.approx_maxsinr_receivers(real, F, noise)
        return updates.approx_maxsinr_precoders(real, G), G

    def _objective(self, real, F, RX, noise):
        return metrics.sinr_objective(real, F, RX, noise)


class Greedy(_TransceiverDesign):
    """Selfish precoding: each transmitter in turn beamforms on its whitened
    direct channel. No convergence guarantee; ``max_iter`` sweeps at most.

    Receivers are Wiener filters of the final precoders (reporting only);
    the tracked objective is the sum rate.
    """

    maximize = True

    def __init__(self, max_iter=10, tol=1e-8, random_state=None):
        super().__init__(max_iter=max_iter, tol=tol, random_state=random_state)

    def _stalled(self, prev, cur):
        return np.abs(cur - prev) < self.tol

    def _init_receivers(self, real, F, noise):
        return updates.mmse_receiver_update(real, F, noise)

    def _sweep(self, real, F, RX, noise):
        F = updates.greedy_update(real, F, noise)
        return F, updates.mmse_receiver_update(real, F, noise)

    def _objective(self, real, F, RX, noise):
        return metrics.sum_rate(real, F, noise)


class _OneShot(_TransceiverDesign):
    """Non-iterative designs: ``fit`` computes the precoders once."""

    maximize = True

    def fit(self, X, precoders_init=None, noise=None):
        real = check_channel(X)
        noise = real.noise if noise is None else noise
        F = self._design(real, noise)
        RX = self._receivers(real, F, noise)
        obj = self._objective(real, F, RX, noise)
        self.precoders_ = F
        self.receivers_ = RX
        self.objective_ = np.array([obj])
        self.n_iter_ = np.zeros(real.batch_shape, dtype=int)
        self.converged_ = np.ones(real.batch_shape, dtype=bool)
        return self


class RandomBeamforming(_OneShot):
    """Isotropic orthonormal precoders; no iteration, ``precoders_init`` is
    ignored. The objective is the sum rate."""

    def _design(self, real, noise):
        return updates.random_beamforming(real.config, self.random_state, real.batch_shape)

    def _receivers(self, real, F, noise):
        return updates.mmse_receiver_update(real, F, noise)

    def _objective(self, real, F, RX, noise):
        return metrics.sum_rate(real, F, noise)


class ClosedFormIA3(_OneShot):
    """Closed-form alignment for three users with ``M = N`` even and
    ``S = M/2``.

    Parameters
    ----------
    choice : tuple of int, "best" or None
        Eigenvector subset for the first precoder; ``"best"`` enumerates all
        subsets and keeps the highest sum rate per channel draw.
    """

    maximize = False

    def __init__(self, choice=None):
        self.choice = choice

    def _design(self, real, noise):
        if self.choice != "best":
            return updates.closed_form_ia_3user(real, self.choice)
        cfg = real.config
        best, best_rate = None, None
        for ch in updates.closed_form_choices(cfg.M[0], cfg.S[0]):
            F = updates.closed_form_ia_3user(real, ch)
            rate = metrics.sum_rate(real, F, noise)
            if best is None:
                best, best_rate = F, rate
            else:
                better = rate > best_rate
                best = _where(better, F, best)
                best_rate = np.where(better, rate, best_rate)
        return best

    def _receivers(self, real, F, noise):
        return updates.ia_subspace_update(real, F)

    def _objective(self, real, F, RX, noise):
        return metrics.leakage(real, F, RX)


_SOLVERS = {
    AlgorithmKind.IterIA: IterativeIA,
    AlgorithmKind.MinINL: MinINL,
    AlgorithmKind.JointMMSE: JointMMSE,
    AlgorithmKind.MaxSINR: MaxSINR,
    AlgorithmKind.ApproxMaxSINR: ApproxMaxSINR,
    AlgorithmKind.Greedy: Greedy,
    AlgorithmKind.RandomBF: RandomBeamforming,
    AlgorithmKind.ClosedFormIA3: ClosedFormIA3,
}


def make_solver(kind, **params):
    """Instantiate the estimator for ``kind``; unknown parameters for that
    estimator are dropped."""
    cls = _SOLVERS[AlgorithmKind(kind)]
    accepted = cls._get_param_names()
    return cls(**{k: v for k, v in params.items() if k in accepted})


def init_state(real, rng, kind=AlgorithmKind.IterIA):
    """Random orthonormal precoders scaled to ``sqrt(rho/S)`` and the
    receivers obtained from them by one receiver update of ``kind``."""
    real = check_channel(real)
    F = updates.random_orthonormal_precoders(real.config, rng, real.batch_shape)
    est = make_solver(kind)
    if isinstance(est, _OneShot):
        RX = updates.ia_subspace_update(real, F)
    else:
        RX = est._init_receivers(real, F, real.noise)
    return TransceiverState(F, RX)


def run_algorithm(kind, real, rng=None, max_iter=100, epsilon=1e-8, precoders_init=None):
    """Run one design and return its :class:`AlgorithmTrace`."""
    est = make_solver(kind, max_iter=max_iter, tol=epsilon, random_state=rng)
    return est.fit(real, precoders_init=precoders_init).trace_
