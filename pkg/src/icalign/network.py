"""
K-user MIMO interference channel: configuration, channel draws and
noise/interference covariances.

Channel matrices are stored unscaled (unit-variance small-scale fading);
path loss enters as an explicit multiplier, see
:attr:`ChannelRealization.scaled`.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np

from .exceptions import ContractViolation
from .linalg import herm

__all__ = [
    "Interferer",
    "NetworkConfig",
    "ChannelRealization",
    "NoiseModel",
    "complex_normal",
    "draw_realization",
    "stack_realizations",
    "effective_noise_cov",
    "interference_plus_noise_cov",
    "load_scenario",
    "db2lin",
]


def db2lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def _per_user(value, K, name, cast=float):
    if np.ndim(value) == 0:
        return tuple(cast(value) for _ in range(K))
    value = tuple(cast(v) for v in value)
    if len(value) != K:
        raise ContractViolation(f"{name} must have {K} entries, got {len(value)}")
    return value


@dataclass(frozen=True, eq=False)
class Interferer:
    """Uncoordinated single-stream interferer outside the cooperating set.

    Parameters
    ----------
    rho_e : float
        Transmit power (linear).
    alpha_e : sequence of float
        Path loss to each receiver (linear).
    n_antennas : int
        Interferer transmit antennas.
    track_rho : bool
        If True, sweeps over transmit power also set ``rho_e``.
    """
    rho_e: float
    alpha_e: tuple
    n_antennas: int = 2
    track_rho: bool = False


@dataclass(frozen=True, eq=False)
class NetworkConfig:
    """Static description of a K-user interference channel.

    ``alpha[k][l]`` is the path loss from transmitter ``l`` to receiver ``k``.
    Scalars passed for per-user fields are broadcast; a scalar ``alpha`` sets
    every off-diagonal link (direct links get 1).
    """
    K: int
    M: tuple
    N: tuple
    S: tuple
    rho: tuple
    alpha: np.ndarray
    noise_sigma2: tuple
    interferer: Optional[Interferer] = None

    def __post_init__(self):
        K = int(self.K)
        if K < 1:
            raise ContractViolation("K must be >= 1")
        object.__setattr__(self, "K", K)
        for name, cast in (("M", int), ("N", int), ("S", int),
                           ("rho", float), ("noise_sigma2", float)):
            object.__setattr__(self, name, _per_user(getattr(self, name), K, name, cast))
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim == 0:
            alpha = np.full((K, K), float(alpha))
            np.fill_diagonal(alpha, 1.0)
        if alpha.shape != (K, K):
            raise ContractViolation(f"alpha must be {K}x{K}, got {alpha.shape}")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)

        for k in range(K):
            if not 1 <= self.S[k] <= min(self.M[k], self.N[k]):
                raise ContractViolation(
                    f"user {k}: need 1 <= S <= min(M, N), got S={self.S[k]}, "
                    f"M={self.M[k]}, N={self.N[k]}")
            if self.rho[k] < 0:
                raise ContractViolation(f"user {k}: negative power")
            if not self.noise_sigma2[k] > 0:
                raise ContractViolation(f"user {k}: noise_sigma2 must be > 0")
        if np.any(alpha < 0):
            raise ContractViolation("path losses must be >= 0")
        itf = self.interferer
        if itf is not None:
            alpha_e = _per_user(itf.alpha_e, K, "alpha_e")
            if itf.rho_e < 0 or min(alpha_e) < 0:
                raise ContractViolation("interferer power and path loss must be >= 0")
            object.__setattr__(self, "interferer",
                               dataclasses.replace(itf, alpha_e=alpha_e,
                                                   n_antennas=int(itf.n_antennas)))

    @classmethod
    def symmetric(cls, K=3, M=2, N=2, S=1, rho_db=0.0, alpha=1.0,
                  noise_sigma2=1.0, interferer=None):
        """``(M, N, K)`` channel with ``S`` streams per user."""
        return cls(K=K, M=M, N=N, S=S, rho=db2lin(rho_db).tolist(),
                   alpha=alpha, noise_sigma2=noise_sigma2, interferer=interferer)

    def with_rho_db(self, rho_db):
        """Copy with every transmit power set to ``rho_db``; a tracking
        interferer follows."""
        rho = float(db2lin(rho_db))
        itf = self.interferer
        if itf is not None and itf.track_rho:
            itf = dataclasses.replace(itf, rho_e=rho)
        return dataclasses.replace(self, rho=(rho,) * self.K, interferer=itf)

    def with_cross_alpha_db(self, alpha_db):
        """Copy with every interfering-link path loss set to ``alpha_db``."""
        alpha = np.array(self.alpha)
        off = ~np.eye(self.K, dtype=bool)
        alpha[off] = db2lin(alpha_db)
        return dataclasses.replace(self, alpha=alpha)

    def to_dict(self):
        out = {"K": self.K, "M": list(self.M), "N": list(self.N), "S": list(self.S),
               "rho_db": [float(10 * np.log10(r)) if r > 0 else None for r in self.rho],
               "alpha": self.alpha.tolist(), "noise_sigma2": list(self.noise_sigma2)}
        if self.interferer is not None:
            itf = self.interferer
            out["interferer"] = {
                "rho_e_db": "track_rho" if itf.track_rho else float(10 * np.log10(itf.rho_e)),
                "alpha_e": list(itf.alpha_e), "n_antennas": itf.n_antennas}
        return out


def load_scenario(source):
    """Build a :class:`NetworkConfig` from a scenario JSON file or dict.

    Recognized keys: ``K, M, N, S, rho_db, alpha, noise_sigma2`` and an
    optional ``interferer`` object with ``rho_e_db`` (number or the string
    ``"track_rho"``), ``alpha_e`` and ``n_antennas``.
    """
    if isinstance(source, dict):
        spec = source
    else:
        with open(source) as fh:
            spec = json.load(fh)
    try:
        K = int(spec["K"])
        rho_db = spec.get("rho_db", 0.0)
        rho = db2lin(_per_user(rho_db, K, "rho_db"))
        itf = None
        if spec.get("interferer") is not None:
            i = spec["interferer"]
            track = i.get("rho_e_db") == "track_rho"
            if track:
                rho_e = float(np.max(rho))
            else:
                rho_e = float(db2lin(i.get("rho_e_db", 0.0)))
            itf = Interferer(rho_e=rho_e, alpha_e=i.get("alpha_e", 1.0),
                             n_antennas=int(i.get("n_antennas", 2)), track_rho=track)
        return NetworkConfig(K=K, M=spec["M"], N=spec["N"], S=spec["S"],
                             rho=rho.tolist(), alpha=spec.get("alpha", 1.0),
                             noise_sigma2=spec.get("noise_sigma2", 1.0),
                             interferer=itf)
    except KeyError as exc:
        raise ContractViolation(f"scenario is missing key {exc}") from None


def complex_normal(rng, shape):
    """Circularly-symmetric complex Gaussian with unit variance per entry.

    Transform: two consecutive ``standard_normal`` draws per entry (real part
    first) scaled by ``1/sqrt(2)``.
    """
    z = rng.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One draw (or a stacked batch of draws) of every channel in the network.

    Attributes
    ----------
    H : list of list of ndarray
        ``H[k][l]`` has shape ``(..., N[k], M[l])``: transmitter ``l`` to
        receiver ``k``. Leading axes, if any, index a batch of realizations.
    config : NetworkConfig
    H_E : list of ndarray or None
        Interferer channels, ``H_E[k]`` of shape ``(..., N[k], M_E)``.
    f_E : ndarray or None
        Unit-norm interferer precoding vector, shape ``(..., M_E)``.
    """
    H: List[List[np.ndarray]]
    config: NetworkConfig
    H_E: Optional[List[np.ndarray]] = None
    f_E: Optional[np.ndarray] = None

    @property
    def batch_shape(self):
        return self.H[0][0].shape[:-2]

    @property
    def K(self):
        return self.config.K

    @cached_property
    def scaled(self):
        """``sqrt(alpha[k][l]) * H[k][l]``: the channels as seen by the
        algorithms."""
        a = np.sqrt(self.config.alpha)
        return [[a[k, l] * self.H[k][l] for l in range(self.K)] for k in range(self.K)]

    @cached_property
    def noise(self):
        return effective_noise_cov(self)

    def with_config(self, config):
        """Same fading draw under a different configuration (power, path
        loss)."""
        return ChannelRealization(self.H, config, self.H_E, self.f_E)

    def __getitem__(self, index):
        """Select realizations along the leading batch axis."""
        H = [[h[index] for h in row] for row in self.H]
        H_E = None if self.H_E is None else [h[index] for h in self.H_E]
        f_E = None if self.f_E is None else self.f_E[index]
        return ChannelRealization(H, self.config, H_E, f_E)

    def repeat(self, n):
        """Repeat each realization ``n`` times along a new trailing batch
        axis (used to pair every draw with ``n`` initializations)."""
        def rep(x):
            return np.repeat(x[..., None, :, :], n, axis=-3)
        H = [[rep(h) for h in row] for row in self.H]
        H_E = None if self.H_E is None else [rep(h) for h in self.H_E]
        f_E = None if self.f_E is None else np.repeat(self.f_E[..., None, :], n, axis=-2)
        return ChannelRealization(H, self.config, H_E, f_E)


@dataclass(frozen=True, eq=False)
class NoiseModel:
    """Noise covariance ``R[k]`` (N[k] x N[k], Hermitian PSD) per receiver."""
    R: List[np.ndarray] = field(default_factory=list)


def draw_realization(cfg, rng):
    """Draw every channel of the network.

    Entries are i.i.d. unit-variance complex Gaussian, drawn in the order
    ``H[0][0], H[0][1], ..., H[K-1][K-1]``, then ``H_E[0..K-1]``, then ``f_E``.

    Parameters
    ----------
    cfg : NetworkConfig
    rng : numpy.random.Generator or int
        Seed or generator; identical seeds give bit-identical draws.
    """
    rng = np.random.default_rng(rng)
    K = cfg.K
    H = [[complex_normal(rng, (cfg.N[k], cfg.M[l])) for l in range(K)] for k in range(K)]
    H_E = f_E = None
    if cfg.interferer is not None:
        m_e = cfg.interferer.n_antennas
        H_E = [complex_normal(rng, (cfg.N[k], m_e)) for k in range(K)]
        f = complex_normal(rng, (m_e,))
        f_E = f / np.linalg.norm(f)
    real = ChannelRealization(H, cfg, H_E, f_E)
    smin = min(np.linalg.svd(h, compute_uv=False)[-1] for row in H for h in row)
    assert smin > 0, "rank-deficient channel draw"
    return real


def stack_realizations(reals):
    """Stack single realizations (same config) along a new leading axis."""
    reals = list(reals)
    first = reals[0]
    K = first.K
    H = [[np.stack([r.H[k][l] for r in reals]) for l in range(K)] for k in range(K)]
    H_E = f_E = None
    if first.H_E is not None:
        H_E = [np.stack([r.H_E[k] for r in reals]) for k in range(K)]
        f_E = np.stack([r.f_E for r in reals])
    return ChannelRealization(H, first.config, H_E, f_E)


def effective_noise_cov(real):
    """Noise covariance at every receiver, including the rank-one
    uncoordinated interferer when present:
    ``R[k] = sigma2[k] I + alpha_E[k] rho_E (H_E[k] f_E)(H_E[k] f_E)*``.
    """
    cfg = real.config
    R = []
    for k in range(cfg.K):
        Rk = cfg.noise_sigma2[k] * np.broadcast_to(
            np.eye(cfg.N[k], dtype=complex), real.batch_shape + (cfg.N[k], cfg.N[k]))
        itf = cfg.interferer
        if itf is not None and real.H_E is not None:
            a = (real.H_E[k] @ real.f_E[..., None])
            Rk = Rk + itf.alpha_e[k] * itf.rho_e * (a @ herm(a))
        R.append(np.array(Rk))
    return NoiseModel(R)


def _check_precoders(cfg, F):
    if len(F) != cfg.K:
        raise ContractViolation(f"expected {cfg.K} precoders, got {len(F)}")
    for l, Fl in enumerate(F):
        if Fl.shape[-2:] != (cfg.M[l], cfg.S[l]):
            raise ContractViolation(
                f"precoder {l} has shape {Fl.shape[-2:]}, expected "
                f"{(cfg.M[l], cfg.S[l])}")


def interference_plus_noise_cov(real, F, k, noise=None):
    """Interference-plus-noise covariance at receiver ``k``:
    ``R[k] + sum_{l != k} alpha[k][l] H[k][l] F_l F_l* H[k][l]*``."""
    cfg = real.config
    _check_precoders(cfg, F)
    noise = real.noise if noise is None else noise
    out = noise.R[k]
    for l in range(cfg.K):
        if l == k:
            continue
        X = real.scaled[k][l] @ F[l]
        out = out + X @ herm(X)
    return out
