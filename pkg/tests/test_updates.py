import numpy as np
import pytest

from icalign import Interferer, NetworkConfig, draw_realization, linalg, metrics, updates
from icalign.exceptions import ContractViolation
from icalign.network import ChannelRealization, NoiseModel
from icalign.solvers import init_state

import oracle_checks
from conftest import make_instance, proj_dist


@pytest.mark.parametrize("check", oracle_checks.ALL_CHECKS, ids=lambda c: c.__name__)
@pytest.mark.parametrize("shape", [(3, 2, 1), (3, 3, 2), (2, 4, 2)])
def test_update_beats_random_candidates(check, shape):
    K, M, S = shape
    real = make_instance(K=K, M=M, S=S, rho_db=10, seed=sum(shape), interferer=True)
    for label, analytic, sampled, sense in check(real, np.random.default_rng(1)):
        assert oracle_checks.beats(analytic, sampled, sense), (label, analytic, sampled)


@pytest.mark.parametrize("rho_db", [-10, 10, 30])
def test_mmse_kkt_residual(rho_db):
    real = make_instance(K=3, M=3, S=2, rho_db=rho_db, seed=4, interferer=True)
    res, slack = oracle_checks.mmse_kkt(real, np.random.default_rng(0))
    assert res <= 1e-5
    assert slack <= 1e-8


def test_random_precoders_constraints_and_determinism():
    cfg = NetworkConfig.symmetric(K=3, M=4, N=4, S=2, rho_db=10)
    F = updates.random_orthonormal_precoders(cfg, 3)
    for f in F:
        np.testing.assert_allclose(f.conj().T @ f, 5 * np.eye(2), atol=1e-9)
    again = updates.random_orthonormal_precoders(cfg, 3)
    assert all(np.array_equal(a, b) for a, b in zip(F, again))
    other = updates.random_orthonormal_precoders(cfg, 4)
    assert proj_dist(F[0], other[0]) > 0


@pytest.mark.parametrize("draw", [updates.random_orthonormal_precoders,
                                  updates.random_beamforming])
def test_random_precoders_isotropic(draw):
    cfg = NetworkConfig.symmetric(K=1, M=3, N=3, S=2)
    F = draw(cfg, np.random.default_rng(0), (10_000,))[0]
    F = F / np.sqrt(cfg.rho[0] / cfg.S[0])
    P = np.mean(F @ np.conj(np.swapaxes(F, -1, -2)), axis=0)
    np.testing.assert_allclose(P, (2 / 3) * np.eye(3), atol=0.02)


def test_init_state_constraints():
    real = make_instance(K=3, M=3, S=2, rho_db=20, seed=1)
    state = init_state(real, 5)
    for f in state.F:
        np.testing.assert_allclose(f.conj().T @ f, 50 * np.eye(2), atol=1e-9)
    for p in state.RX:
        np.testing.assert_allclose(p.conj().T @ p, np.eye(2), atol=1e-9)
    same = init_state(real, 5)
    assert all(np.array_equal(a, b) for a, b in zip(state.F, same.F))


def test_ia_precoder_single_user_is_degenerate():
    real = make_instance(K=1, M=3, S=2)
    F = updates.ia_precoder_update(real, [np.eye(3)[:, :2]])
    np.testing.assert_allclose(F[0], np.sqrt(10 / 2) * np.eye(3)[:, :2])
    assert linalg.herm_eig(np.zeros((3, 3))).ties


def test_ia_updates_invariant_to_cross_path_loss():
    real = make_instance(K=3, M=3, S=1, seed=2)
    F = updates.random_orthonormal_precoders(real.config, 0)
    for beta in (1e-3, 0.3, 7.0):
        scaled = real.with_config(real.config.with_cross_alpha_db(10 * np.log10(beta)))
        Phi_a, Phi_b = updates.ia_subspace_update(real, F), updates.ia_subspace_update(scaled, F)
        Fa, Fb = updates.ia_precoder_update(real, Phi_a), updates.ia_precoder_update(scaled, Phi_b)
        for a, b in zip(Phi_a + Fa, Phi_b + Fb):
            assert proj_dist(a, b) < 1e-8


def test_inl_white_noise_matches_ia_subspace():
    real = make_instance(K=3, M=3, S=2, seed=3, sigma2=2.5)
    F = updates.random_orthonormal_precoders(real.config, 1)
    for a, b in zip(updates.ia_subspace_update(real, F), updates.inl_subspace_update(real, F)):
        assert proj_dist(a, b) < 1e-8


def test_inl_avoids_rank_one_interferer():
    cfg = NetworkConfig.symmetric(K=3, M=2, N=2, S=1, rho_db=0, alpha=0.0,
                                  interferer=Interferer(1e4, 1.0))
    real = draw_realization(cfg, 5)
    F = updates.random_orthonormal_precoders(cfg, 0)
    Phi = updates.inl_subspace_update(real, F)
    for k in range(3):
        a = real.H_E[k] @ real.f_E
        assert np.linalg.norm(Phi[k].conj().T @ a) < 1e-8


def test_mmse_receiver_scalar():
    cfg = NetworkConfig(K=1, M=1, N=1, S=1, rho=1.0, alpha=1.0, noise_sigma2=1.0)
    real = ChannelRealization([[np.ones((1, 1), dtype=complex)]], cfg)
    G = updates.mmse_receiver_update(real, [np.ones((1, 1))])
    np.testing.assert_allclose(G[0], [[0.5]])


def test_mmse_precoder_unconstrained_case():
    real = make_instance(K=3, M=2, S=1, rho_db=10, seed=1)
    # large receivers -> small unconstrained precoders (F scales as 1/G)
    G = [1e3 * np.ones((2, 1))] * 3
    F, mus = updates.mmse_precoder_update(real, G, return_mu=True)
    for f, mu in zip(F, mus):
        assert mu == 0.0
        assert np.sum(np.abs(f) ** 2) <= 10 + 1e-9
    # unconstrained solution: T F = H* G
    T = sum(real.H[k][0].conj().T @ G[k] @ G[k].conj().T @ real.H[k][0] for k in range(3))
    np.testing.assert_allclose(T @ F[0], real.H[0][0].conj().T @ G[0], atol=1e-12)


def test_mmse_precoder_power_constraint_active():
    real = make_instance(K=3, M=3, S=2, rho_db=20, seed=2)
    rng = np.random.default_rng(0)
    G = [1e-3 * (rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))) for _ in range(3)]
    F, mus = updates.mmse_precoder_update(real, G, return_mu=True)
    for f, mu in zip(F, mus):
        assert mu > 0
        assert np.sum(np.abs(f) ** 2) <= 100 * (1 + 1e-12)
        assert np.sum(np.abs(f) ** 2) == pytest.approx(100, rel=1e-9)


def test_mmse_precoder_point_to_point_colinear():
    """Cross channels removed: the precoder is the single-link MMSE precoder."""
    cfg = NetworkConfig.symmetric(K=2, M=3, N=3, S=1, rho_db=30, alpha=0.0)
    real = draw_realization(cfg, 8)
    G = [np.ones((3, 1), dtype=complex), np.ones((3, 1), dtype=complex)]
    F = updates.mmse_precoder_update(real, G)
    for l in range(2):
        H = real.H[l][l]
        d = H.conj().T @ G[l]
        T = d @ d.conj().T
        # single link: F ∝ (mu I + H* g g* H)^-1 H* g, which is ∝ H* g
        assert abs(abs(np.vdot(F[l][:, 0], d[:, 0]))
                   - np.linalg.norm(F[l]) * np.linalg.norm(d)) < 1e-9 * np.linalg.norm(d) * 40
        assert T.shape == (3, 3)


def test_maxsinr_column_norms():
    real = make_instance(K=3, M=3, S=2, rho_db=10, seed=5, interferer=True)
    F = updates.random_orthonormal_precoders(real.config, 0)
    G = updates.approx_maxsinr_receivers(real, F)
    F2, G2 = updates.maxsinr_sweep(real, F, G)
    for f in F2:
        np.testing.assert_allclose(np.sum(np.abs(f) ** 2, axis=0), 5.0, rtol=1e-9)
    for g in G2:
        np.testing.assert_allclose(np.linalg.norm(g, axis=0), 1.0, rtol=1e-9)


def test_maxsinr_sweep_matches_sequential_oracle():
    real = make_instance(K=3, M=3, S=2, rho_db=10, seed=6)
    F = updates.random_orthonormal_precoders(real.config, 1)
    G = updates.approx_maxsinr_receivers(real, F)
    F_sweep, G_sweep = updates.maxsinr_sweep(real, F, G)
    F_o, G_o = [f.copy() for f in F], [g.copy() for g in G]
    for k in range(3):
        for n in range(2):
            G_o[k][:, n] = updates.maxsinr_receiver_column_update(real, F_o, G_o, k, n)
    for l in range(3):
        for n in range(2):
            F_o[l][:, n] = updates.maxsinr_precoder_column_update(real, F_o, G_o, l, n)
    for a, b in zip(F_sweep + G_sweep, F_o + G_o):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_maxsinr_column_update_rayleigh_quotient_equals_objective():
    """On the power sphere the generalized quotient equals the network SINR."""
    real = make_instance(K=3, M=2, S=1, rho_db=13, seed=7, interferer=True)
    F = updates.random_orthonormal_precoders(real.config, 2)
    G = updates.approx_maxsinr_receivers(real, F)
    f = updates.maxsinr_precoder_column_update(real, F, G, 1, 0)
    F_new = [F[0], f[:, None], F[2]]
    before = metrics.sinr_objective(real, F, G)
    after = metrics.sinr_objective(real, F_new, G)
    assert after >= before - 1e-12


def test_approx_receivers_unit_norm_and_rayleigh():
    real = make_instance(K=3, M=3, S=2, rho_db=10, seed=8, interferer=True)
    F = updates.random_orthonormal_precoders(real.config, 0)
    G = updates.approx_maxsinr_receivers(real, F)
    k, n = 1, 1
    h = real.H[k][k] @ F[k][:, n]
    C = real.noise.R[k] + sum(real.H[k][l] @ F[l] @ F[l].conj().T @ real.H[k][l].conj().T
                              for l in range(3)) - np.outer(h, h.conj())
    lam, _ = linalg.gen_herm_eig_max(np.outer(h, h.conj()), C)
    assert metrics.per_stream_sinr(real, F, G)[k][n] == pytest.approx(lam, rel=1e-9)
    np.testing.assert_allclose(np.linalg.norm(G[k], axis=0), 1.0)


def test_greedy_uses_latest_precoders():
    real = make_instance(K=3, M=2, S=1, rho_db=20, seed=9)
    F = updates.random_orthonormal_precoders(real.config, 0)
    out = updates.greedy_update(real, F)
    # oracle: sequential recomputation with explicit whitening
    Fo = list(F)
    for l in range(3):
        Q = real.noise.R[l] + sum(real.H[l][k] @ Fo[k] @ Fo[k].conj().T @ real.H[l][k].conj().T
                                  for k in range(3) if k != l)
        w, U = np.linalg.eigh(Q)
        W = U @ np.diag(w ** -0.5) @ U.conj().T @ real.H[l][l]
        v = np.linalg.svd(W)[2].conj().T[:, :1]
        assert abs(abs(np.vdot(v[:, 0], out[l][:, 0])) - np.sqrt(100)) < 1e-8
        Fo[l] = out[l]


def test_closed_form_every_choice_aligns():
    cfg = NetworkConfig.symmetric(K=3, M=2, N=2, S=1, rho_db=0)
    for seed in range(5):
        real = draw_realization(cfg, seed)
        for choice in updates.closed_form_choices(2, 1):
            F = updates.closed_form_ia_3user(real, choice)
            Phi = updates.ia_subspace_update(real, F)
            assert metrics.leakage(real, F, Phi) < 1e-8


def test_closed_form_four_antennas_two_streams():
    cfg = NetworkConfig.symmetric(K=3, M=4, N=4, S=2, rho_db=0)
    real = draw_realization(cfg, 3)
    choices = updates.closed_form_choices(4, 2)
    assert len(choices) == 6
    for choice in choices:
        F = updates.closed_form_ia_3user(real, choice)
        assert metrics.leakage(real, F, updates.ia_subspace_update(real, F)) < 1e-8


def test_closed_form_invariant_to_cross_scaling():
    real = make_instance(seed=4)
    F = updates.closed_form_ia_3user(real)
    scaled = real.with_config(real.config.with_cross_alpha_db(-17))
    for a, b in zip(F, updates.closed_form_ia_3user(scaled)):
        assert proj_dist(a, b) < 1e-10


def test_closed_form_requires_square_three_user():
    with pytest.raises(ContractViolation):
        updates.closed_form_ia_3user(make_instance(K=2))
    with pytest.raises(ContractViolation):
        updates.closed_form_ia_3user(make_instance(K=3, M=3, S=1))


def test_precoder_update_respects_noise_override():
    real = make_instance(seed=10)
    F = updates.random_orthonormal_precoders(real.config, 0)
    loud = NoiseModel([100 * np.eye(2)] * 3)
    g_default = updates.mmse_receiver_update(real, F)
    g_loud = updates.mmse_receiver_update(real, F, loud)
    assert np.linalg.norm(g_loud[0]) < np.linalg.norm(g_default[0])
