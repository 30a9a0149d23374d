"""
Single-block update rules of the alternating algorithms and the
non-iterative baselines.

Each function takes a :class:`~icalign.network.ChannelRealization` (whose
``config`` supplies powers, stream counts and path loss) plus the blocks held
fixed, and returns the new block as a list with one array per user. Arrays
may carry leading batch axes.
"""

import itertools
import logging

import numpy as np

from . import linalg
from .exceptions import ContractViolation, NumericFailure, SingularMatrixError
from .linalg import herm
from .network import complex_normal

logger = logging.getLogger(__name__)

__all__ = [
    "random_orthonormal_precoders",
    "ia_precoder_update",
    "ia_subspace_update",
    "inl_subspace_update",
    "mmse_receiver_update",
    "mmse_precoder_update",
    "maxsinr_precoder_column_update",
    "maxsinr_receiver_column_update",
    "maxsinr_sweep",
    "approx_maxsinr_receivers",
    "approx_maxsinr_precoders",
    "greedy_update",
    "random_beamforming",
    "closed_form_ia_3user",
    "closed_form_choices",
]


def _zeros(real, n):
    return np.zeros(real.batch_shape + (n, n), dtype=complex)


def _outer(x):
    return x[..., :, None] * np.conj(x[..., None, :])


def _power_scale(cfg, l):
    return np.sqrt(cfg.rho[l] / cfg.S[l])


def random_orthonormal_precoders(cfg, rng, batch_shape=()):
    """``F_l = sqrt(rho_l / S_l) * orthonormalize(Gaussian M_l x S_l)``."""
    rng = np.random.default_rng(rng)
    batch_shape = tuple(batch_shape)
    return [_power_scale(cfg, l) * linalg.orthonormalize(
                complex_normal(rng, batch_shape + (cfg.M[l], cfg.S[l])))
            for l in range(cfg.K)]


# -- subspace (IA / min-INL) -------------------------------------------------

def ia_precoder_update(real, Phi):
    """``F_l = sqrt(rho_l/S_l) nu_min^{S_l}(sum_{k!=l} H_kl* Phi_k Phi_k* H_kl)``.

    Shared by the IA and min-INL algorithms; precoders are independent of
    one another.
    """
    cfg = real.config
    F = []
    for l in range(cfg.K):
        Q = _zeros(real, cfg.M[l])
        for k in range(cfg.K):
            if k != l:
                X = herm(real.scaled[k][l]) @ Phi[k]
                Q = Q + X @ herm(X)
        F.append(_power_scale(cfg, l) * linalg.nu_min(Q, cfg.S[l]))
    return F


def _subspace_update(real, F, R):
    cfg = real.config
    Phi = []
    for k in range(cfg.K):
        Q = _zeros(real, cfg.N[k]) if R is None else R[k]
        for l in range(cfg.K):
            if l != k:
                X = real.scaled[k][l] @ F[l]
                Q = Q + X @ herm(X)
        Phi.append(linalg.nu_min(Q, cfg.S[k]))
    return Phi


def ia_subspace_update(real, F):
    """``Phi_k = nu_min^{S_k}(sum_{l!=k} H_kl F_l F_l* H_kl*)``."""
    return _subspace_update(real, F, None)


def inl_subspace_update(real, F, noise=None):
    """``Phi_k = nu_min^{S_k}(R_k + sum_{l!=k} H_kl F_l F_l* H_kl*)``."""
    noise = real.noise if noise is None else noise
    return _subspace_update(real, F, noise.R)


# -- joint MMSE ----------------------------------------------------------------

def mmse_receiver_update(real, F, noise=None):
    """Wiener receivers ``G_k = (sum_l H_kl F_l F_l* H_kl* + R_k)^-1 H_kk F_k``."""
    noise = real.noise if noise is None else noise
    cfg = real.config
    G = []
    for k in range(cfg.K):
        C = noise.R[k]
        for l in range(cfg.K):
            X = real.scaled[k][l] @ F[l]
            C = C + X @ herm(X)
        G.append(linalg.solve_hpd(C, real.scaled[k][k] @ F[k]))
    return G


def _precoder_norm2(w, lam, mu):
    return np.sum(w / (lam + mu[..., None]) ** 2, axis=-1)


def mmse_precoder_update(real, G, power_rtol=1e-13, max_halvings=200,
                         max_doublings=200, return_mu=False):
    """Power-constrained MMSE precoders.

    ``F_l = (mu_l I + sum_k H_kl* G_k G_k* H_kl)^+ H_ll* G_l`` where
    ``mu_l = 0`` if that already meets ``||F_l||_F^2 <= rho_l``; otherwise
    ``mu_l > 0`` is found by bisection on the monotonically decreasing
    ``||F_l(mu)||_F^2``. The bracket ``[0, mu_hi]`` grows ``mu_hi`` by doubling
    from 1. The feasible end of the final bracket is returned, so the power
    constraint always holds.

    Raises
    ------
    NumericFailure
        If no bracket is found within ``max_doublings``.
    """
    cfg = real.config
    F, mus = [], []
    for l in range(cfg.K):
        T = _zeros(real, cfg.M[l])
        for k in range(cfg.K):
            X = herm(real.scaled[k][l]) @ G[k]
            T = T + X @ herm(X)
        b0 = herm(real.scaled[l][l]) @ G[l]
        lam, U = np.linalg.eigh(0.5 * (T + herm(T)))
        b = herm(U) @ b0
        w = np.sum(np.abs(b) ** 2, axis=-1)
        # T^+ on its numerical range; b0 lies in range(T) by construction
        keep = lam > 1e-12 * np.maximum(lam[..., -1:], np.finfo(float).tiny)
        w = np.where(keep, w, 0.0)
        lam_safe = np.where(keep, lam, 1.0)
        rho = cfg.rho[l]

        mu = np.zeros(real.batch_shape)
        need = _precoder_norm2(w, lam_safe, mu) > rho
        if rho == 0.0:
            need = np.zeros_like(need)
        if np.any(need):
            hi = np.where(need, 1.0, 0.0)
            for _ in range(max_doublings):
                grow = need & (_precoder_norm2(w, lam_safe, hi) >= rho)
                if not np.any(grow):
                    break
                hi = np.where(grow, 2.0 * hi, hi)
            else:
                raise NumericFailure("mu bracket not found", user=l, mu_hi=np.max(hi))
            lo = np.zeros_like(hi)
            for _ in range(max_halvings):
                p_hi = _precoder_norm2(w, lam_safe, hi)
                active = need & (np.abs(p_hi - rho) > power_rtol * rho)
                if not np.any(active):
                    break
                mid = 0.5 * (lo + hi)
                over = _precoder_norm2(w, lam_safe, mid) > rho
                lo = np.where(active & over, mid, lo)
                hi = np.where(active & ~over, mid, hi)
            mu = np.where(need, hi, 0.0)
        coef = np.where(keep, 1.0 / (lam_safe + mu[..., None]), 0.0)
        Fl = U @ (coef[..., :, None] * b)
        if rho == 0.0:
            Fl = np.zeros_like(Fl)
        F.append(Fl)
        mus.append(mu)
    return (F, mus) if return_mu else F


# -- max-SINR -------------------------------------------------------------------

def _sinr_num_den(real, F, G, R):
    cfg = real.config
    num = 0.0
    den = 0.0
    for k in range(cfg.K):
        Gh = herm(G[k])
        D = np.abs(Gh @ real.scaled[k][k] @ F[k]) ** 2
        sig = np.sum(np.diagonal(D, axis1=-2, axis2=-1), axis=-1)
        num = num + sig
        den = den + np.sum(D, axis=(-2, -1)) - sig
        for l in range(cfg.K):
            if l != k:
                den = den + np.sum(np.abs(Gh @ real.scaled[k][l] @ F[l]) ** 2, axis=(-2, -1))
        den = den + np.real(np.einsum("...in,...ij,...jn->...", np.conj(G[k]), R[k], G[k]))
    return num, den


def _pd_floor(B, what):
    """Add ``1e-12 * trace`` to the diagonal where B is not numerically PD."""
    lam_min = np.linalg.eigvalsh(B)[..., 0]
    bad = lam_min <= 1e-12 * np.linalg.norm(B, axis=(-2, -1))
    if np.any(bad):
        logger.warning("%s denominator not positive definite in %d case(s); "
                       "regularizing", what, int(np.sum(bad)))
        tr = np.real(np.trace(B, axis1=-2, axis2=-1))
        load = np.where(bad, 1e-12 * np.maximum(tr, 1.0), 0.0)
        B = B + load[..., None, None] * np.eye(B.shape[-1])
    return B


def maxsinr_precoder_column_update(real, F, G, l, n, noise=None):
    """Maximize the network SINR over column ``n`` of precoder ``l``.

    With every other column and all receivers fixed, the network SINR on the
    sphere ``||f||^2 = rho_l/S_l`` is the generalized Rayleigh quotient of
    ``(C + (S_l r / rho_l) I, (S_l q / rho_l) I + A + B)``, where ``C`` is the
    own-signal term, ``A`` inter-stream leakage at receiver ``l``, ``B``
    leakage into other receivers, and ``r``/``q`` are the numerator and
    denominator parts that do not involve the column.

    Returns the new column, shape ``(..., M_l)``.
    """
    noise = real.noise if noise is None else noise
    cfg = real.config
    num, den = _sinr_num_den(real, F, G, noise.R)
    Hll_h = herm(real.scaled[l][l])
    c = (Hll_h @ G[l][..., :, n:n + 1])[..., 0]
    A = _zeros(real, cfg.M[l])
    for w in range(cfg.S[l]):
        if w != n:
            A = A + _outer((Hll_h @ G[l][..., :, w:w + 1])[..., 0])
    B = _zeros(real, cfg.M[l])
    for k in range(cfg.K):
        if k != l:
            X = herm(real.scaled[k][l]) @ G[k]
            B = B + X @ herm(X)
    f = F[l][..., :, n]
    r = num - np.abs(np.sum(np.conj(c) * f, axis=-1)) ** 2
    q = den - np.real(np.einsum("...i,...ij,...j->...", np.conj(f), A + B, f))
    s = cfg.S[l] / cfg.rho[l]
    eye = np.eye(cfg.M[l])
    num_mat = _outer(c) + (s * r)[..., None, None] * eye
    den_mat = _pd_floor((s * q)[..., None, None] * eye + A + B, "precoder")
    _, v = linalg.gen_herm_eig_max(num_mat, den_mat)
    return _power_scale(cfg, l) * v


def maxsinr_receiver_column_update(real, F, G, k, n, noise=None):
    """Maximize the network SINR over unit-norm receive column ``n`` of
    receiver ``k``; the noise term ``g* R_k g`` sits in the denominator
    matrix. Returns the new column, shape ``(..., N_k)``."""
    noise = real.noise if noise is None else noise
    cfg = real.config
    num, den = _sinr_num_den(real, F, G, noise.R)
    Hkk = real.scaled[k][k]
    c = (Hkk @ F[k][..., :, n:n + 1])[..., 0]
    A = noise.R[k]
    for w in range(cfg.S[k]):
        if w != n:
            A = A + _outer((Hkk @ F[k][..., :, w:w + 1])[..., 0])
    for l in range(cfg.K):
        if l != k:
            X = real.scaled[k][l] @ F[l]
            A = A + X @ herm(X)
    g = G[k][..., :, n]
    r = num - np.abs(np.sum(np.conj(g) * c, axis=-1)) ** 2
    q = den - np.real(np.einsum("...i,...ij,...j->...", np.conj(g), A, g))
    eye = np.eye(cfg.N[k])
    num_mat = _outer(c) + r[..., None, None] * eye
    den_mat = _pd_floor(q[..., None, None] * eye + A, "receiver")
    _, v = linalg.gen_herm_eig_max(num_mat, den_mat)
    return v


def _set_column(X, n, col):
    X = X.copy()
    X[..., :, n] = col
    return X


def maxsinr_sweep(real, F, G, noise=None):
    """One full sweep: receiver columns (k, then n ascending), then precoder
    columns (l, then n ascending), each using the latest values."""
    cfg = real.config
    F, G = list(F), list(G)
    for k in range(cfg.K):
        for n in range(cfg.S[k]):
            G[k] = _set_column(G[k], n, maxsinr_receiver_column_update(real, F, G, k, n, noise))
    for l in range(cfg.K):
        for n in range(cfg.S[l]):
            F[l] = _set_column(F[l], n, maxsinr_precoder_column_update(real, F, G, l, n, noise))
    return F, G


def _unit_columns(X):
    return X / np.linalg.norm(X, axis=-2, keepdims=True)


def approx_maxsinr_receivers(real, F, noise=None):
    """Per-stream max-SINR receivers:
    ``g_kn ∝ B_kn^-1 H_kk f_kn``, ``B_kn`` the covariance of everything at
    receiver ``k`` except stream ``n``, noise included."""
    noise = real.noise if noise is None else noise
    cfg = real.config
    G = []
    for k in range(cfg.K):
        C = noise.R[k]
        for l in range(cfg.K):
            X = real.scaled[k][l] @ F[l]
            C = C + X @ herm(X)
        Hf = real.scaled[k][k] @ F[k]
        cols = [linalg.solve_hpd(C - _outer(Hf[..., :, n]), Hf[..., :, n:n + 1])
                for n in range(cfg.S[k])]
        G.append(_unit_columns(np.concatenate(cols, axis=-1)))
    return G


def approx_maxsinr_precoders(real, G):
    """Per-stream max-SINR rule in the reciprocal network: receivers transmit
    with per-stream power ``rho_k/S_k`` over ``H_kl*``; transmitter ``l``
    sees white noise of variance ``sigma2_l``."""
    cfg = real.config
    F = []
    for l in range(cfg.K):
        C = cfg.noise_sigma2[l] * np.eye(cfg.M[l], dtype=complex)
        for k in range(cfg.K):
            X = herm(real.scaled[k][l]) @ G[k]
            C = C + (cfg.rho[k] / cfg.S[k]) * (X @ herm(X))
        Hg = herm(real.scaled[l][l]) @ G[l]
        own = cfg.rho[l] / cfg.S[l]
        cols = [linalg.solve_hpd(C - own * _outer(Hg[..., :, n]), Hg[..., :, n:n + 1])
                for n in range(cfg.S[l])]
        F.append(_power_scale(cfg, l) * _unit_columns(np.concatenate(cols, axis=-1)))
    return F


# -- baselines -------------------------------------------------------------------

def greedy_update(real, F, noise=None):
    """One sequential selfish sweep, ``l = 1..K``: whiten the direct channel
    by the interference-plus-noise covariance produced by the latest other
    precoders and beamform on its top ``S_l`` right singular vectors."""
    noise = real.noise if noise is None else noise
    cfg = real.config
    F = list(F)
    for l in range(cfg.K):
        Q = noise.R[l]
        for k in range(cfg.K):
            if k != l:
                X = real.scaled[l][k] @ F[k]
                Q = Q + X @ herm(X)
        W = linalg.inv_sqrtm_hpd(Q) @ real.scaled[l][l]
        _, _, V = linalg.svd(W)
        F[l] = _power_scale(cfg, l) * V[..., :, :cfg.S[l]]
    return F


def random_beamforming(cfg, rng, batch_shape=()):
    """``F_l = sqrt(rho_l/S_l) U^{(S_l)}`` with ``U`` the left singular
    vectors of an ``M_l x M_l`` complex Gaussian matrix."""
    rng = np.random.default_rng(rng)
    batch_shape = tuple(batch_shape)
    F = []
    for l in range(cfg.K):
        U, _, _ = linalg.svd(complex_normal(rng, batch_shape + (cfg.M[l], cfg.M[l])))
        F.append(_power_scale(cfg, l) * U[..., :, :cfg.S[l]])
    return F


def closed_form_choices(M, S):
    """Every admissible choice of ``S`` eigenvectors out of ``M``."""
    return list(itertools.combinations(range(M), S))


def _check_closed_form(cfg):
    M = cfg.M[0]
    if cfg.K != 3 or any(m != M for m in cfg.M + cfg.N) or M % 2 or \
            any(s != M // 2 for s in cfg.S):
        raise ContractViolation("closed-form alignment needs K=3, M_k=N_k=M even "
                                "and S_k=M/2")


def closed_form_ia_3user(real, choice=None):
    """Closed-form three-user alignment.

    ``F_1`` spans ``S`` eigenvectors of
    ``E = H31^-1 H32 H12^-1 H13 H23^-1 H21``, ``F_2 = H32^-1 H31 F_1`` and
    ``F_3 = H23^-1 H21 F_1``; each is column-orthonormalized and scaled to
    ``sqrt(rho/S)``.

    Parameters
    ----------
    choice : tuple of int, optional
        Indices of the eigenvectors of ``E`` (in LAPACK order) used for
        ``F_1``; defaults to the first ``S``.
    """
    cfg = real.config
    _check_closed_form(cfg)
    S = cfg.S[0]
    choice = tuple(range(S)) if choice is None else tuple(choice)
    H = real.H   # path loss cancels in E and in F_2, F_3

    def inv_times(A, B, name):
        try:
            return np.linalg.solve(A, B)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(f"channel {name} is singular", matrix=name) from exc

    E = inv_times(H[2][0], H[2][1], "H31") @ inv_times(H[0][1], H[0][2], "H12") \
        @ inv_times(H[1][2], H[1][0], "H23")
    _, V = np.linalg.eig(E)
    F1 = V[..., :, list(choice)]
    F2 = inv_times(H[2][1], H[2][0] @ F1, "H32")
    F3 = inv_times(H[1][2], H[1][0] @ F1, "H23")
    return [_power_scale(cfg, l) * linalg.orthonormalize(X)
            for l, X in enumerate((F1, F2, F3))]
