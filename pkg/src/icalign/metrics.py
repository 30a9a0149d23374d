"""
Closed-form objectives and sum rate.

All functions broadcast over leading batch axes of the channel and
transceiver arrays and return arrays of shape ``real.batch_shape``.
Logarithms are base 2.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from .linalg import herm, logdet_hpd
from .network import interference_plus_noise_cov

__all__ = [
    "MetricReport",
    "per_user_rates",
    "sum_rate",
    "leakage",
    "inl",
    "mse",
    "sinr_terms",
    "sinr_objective",
    "per_stream_sinr",
    "evaluate",
    "dof_slope",
]


def _fro2(X):
    return np.sum(np.abs(X) ** 2, axis=(-2, -1))


def per_user_rates(real, F, noise=None):
    """``log2 |I + Rhat_k^-1 alpha_kk H_kk F_k F_k* H_kk*|`` for each user,
    evaluated as ``log2|Rhat_k + S_k| - log2|Rhat_k|``."""
    rates = []
    for k in range(real.K):
        Rhat = interference_plus_noise_cov(real, F, k, noise)
        X = real.scaled[k][k] @ F[k]
        rates.append((logdet_hpd(Rhat + X @ herm(X)) - logdet_hpd(Rhat)) / np.log(2.0))
    return rates


def sum_rate(real, F, noise=None):
    """Instantaneous sum rate in bits per channel use, assuming ideal
    decoding with interference treated as noise."""
    return np.sum(per_user_rates(real, F, noise), axis=0)


def leakage(real, F, Phi):
    """Interference leakage ``sum_k sum_{l!=k} alpha_kl ||Phi_k* H_kl F_l||_F^2``."""
    total = 0.0
    for k in range(real.K):
        Pk = herm(Phi[k])
        for l in range(real.K):
            if l != k:
                total = total + _fro2(Pk @ real.scaled[k][l] @ F[l])
    return np.asarray(total, dtype=float)


def inl(real, F, Phi, noise=None):
    """Interference-plus-noise leakage: leakage plus
    ``sum_k tr(Phi_k* R_k Phi_k)``."""
    noise = real.noise if noise is None else noise
    total = leakage(real, F, Phi)
    for k in range(real.K):
        total = total + np.real(np.trace(herm(Phi[k]) @ noise.R[k] @ Phi[k],
                                         axis1=-2, axis2=-1))
    return total


def mse(real, F, G, noise=None):
    """Sum mean squared error ``sum_k E||G_k* y_k - s_k||^2``.

    The constant ``sum_k S_k`` dropped by the optimization is included, so
    the value is a true expected squared error (>= 0).
    """
    noise = real.noise if noise is None else noise
    total = 0.0
    for k in range(real.K):
        C = noise.R[k]
        for l in range(real.K):
            X = real.scaled[k][l] @ F[l]
            C = C + X @ herm(X)
        Gk = G[k]
        quad = np.real(np.trace(herm(Gk) @ C @ Gk, axis1=-2, axis2=-1))
        cross = np.real(np.trace(herm(Gk) @ real.scaled[k][k] @ F[k], axis1=-2, axis2=-1))
        total = total + quad - 2.0 * cross + real.config.S[k]
    return np.asarray(total, dtype=float)


def sinr_terms(real, F, G, noise=None):
    """Post-processing signal, interference and noise power per stream.

    Returns
    -------
    P, I, N : list of ndarray
        ``P[k][..., n]`` is ``|g_kn* H_kk f_kn|^2``; ``I[k]`` sums inter-user
        and inter-stream interference; ``N[k]`` is ``g_kn* R_k g_kn``.
    """
    noise = real.noise if noise is None else noise
    P, I, N = [], [], []
    for k in range(real.K):
        Gh = herm(G[k])
        D = Gh @ real.scaled[k][k] @ F[k]           # (..., S_k, S_k)
        d = np.abs(np.diagonal(D, axis1=-2, axis2=-1)) ** 2
        inter_stream = np.sum(np.abs(D) ** 2, axis=-1) - d
        inter_user = 0.0
        for l in range(real.K):
            if l != k:
                inter_user = inter_user + np.sum(np.abs(Gh @ real.scaled[k][l] @ F[l]) ** 2,
                                                 axis=-1)
        nk = np.real(np.einsum("...in,...ij,...jn->...n", np.conj(G[k]), noise.R[k], G[k]))
        P.append(d)
        I.append(inter_stream + inter_user)
        N.append(nk)
    return P, I, N


def sinr_objective(real, F, G, noise=None):
    """Network SINR: total post-processing signal power over total
    interference-plus-noise power, summed over every stream."""
    P, I, N = sinr_terms(real, F, G, noise)
    num = sum(np.sum(p, axis=-1) for p in P)
    den = sum(np.sum(i + n, axis=-1) for i, n in zip(I, N))
    return num / den


def per_stream_sinr(real, F, G, noise=None):
    P, I, N = sinr_terms(real, F, G, noise)
    return [p / (i + n) for p, i, n in zip(P, I, N)]


@dataclass
class MetricReport:
    """Every closed-form metric of one transceiver state.

    ``j_ia`` and ``j_inl`` use the receive matrices as the subspace bases
    ``Phi``; they are meaningful when those have orthonormal columns.
    """
    sum_rate_bits: np.ndarray
    j_ia: np.ndarray
    j_inl: np.ndarray
    j_mse: np.ndarray
    j_sinr: np.ndarray
    per_user_rate: List[np.ndarray]
    per_stream_sinr: List[np.ndarray]


def evaluate(real, F, RX, noise=None):
    rates = per_user_rates(real, F, noise)
    return MetricReport(
        sum_rate_bits=np.sum(rates, axis=0),
        j_ia=leakage(real, F, RX),
        j_inl=inl(real, F, RX, noise),
        j_mse=mse(real, F, RX, noise),
        j_sinr=sinr_objective(real, F, RX, noise),
        per_user_rate=rates,
        per_stream_sinr=per_stream_sinr(real, F, RX, noise),
    )


def dof_slope(rates, decade_db=10.0):
    """Estimate degrees of freedom from a high-SNR rate sweep.

    Least-squares slope of rate against ``log2(SNR)`` over the points within
    ``decade_db`` of the largest SNR, i.e. bits per 3 dB.

    Parameters
    ----------
    rates : mapping
        SNR in dB -> mean sum rate in bits.
    """
    keys = sorted(rates)
    if len(keys) < 2:
        raise ValueError("need at least two SNR points")
    snr_db = np.array(keys, dtype=float)
    y = np.array([rates[k] for k in keys], dtype=float)
    top = snr_db >= snr_db[-1] - decade_db - 1e-9
    if top.sum() < 2:
        top[-2:] = True
    x = snr_db[top] / (10.0 * np.log10(2.0))
    return float(np.polyfit(x, y[top], 1)[0])
