"""Eigenbasis, transforms, operator powers, semigroup and phi_1."""

import numpy as np
import pytest

from chcook import (
    GridField,
    ParameterError,
    MeanComponentError,
    SpectralField,
    apply_A_power,
    build_spectrum,
    norm_alpha,
    phi1_apply,
    project_PN,
    project_mean_free,
    semigroup_apply,
    to_grid,
    to_spectral,
)
from chcook.spectral import coeffs_to_values, phi1_values, values_to_coeffs

from oracles import phi1_quadrature

PI2 = np.pi**2


def random_field(spectrum, rng, scale=1.0):
    return SpectralField(spectrum, scale * rng.standard_normal(spectrum.n_modes))


# ---------------------------------------------------------------------------
# spectrum construction

def test_eigenvalues_1d():
    sp = build_spectrum(1, 4)
    assert np.allclose(sp.lambdas, [0, PI2, 4 * PI2, 9 * PI2, 16 * PI2], rtol=0, atol=0)


def test_eigenvalues_2d_axis_sum():
    sp = build_spectrum(2, 1)
    assert sp.lambdas[0] == 0.0
    assert sorted(sp.lambdas) == pytest.approx([0.0, PI2, PI2, 2 * PI2])
    # axis-sum rule against the 1-d eigenvalues for every multi-index
    sp1 = build_spectrum(1, 1)
    for flat, multi in enumerate(sp.multi_indices):
        assert sp.lambdas[flat] == pytest.approx(sum(sp1.lambdas[m] for m in multi))


def test_zero_index_first_and_positive():
    for d in (1, 2, 3):
        sp = build_spectrum(d, 3)
        assert sp.multi_index(0) == (0,) * d
        assert sp.lambdas[0] == 0.0
        assert (sp.lambdas[1:] > 0).all()


def test_index_map_bijection():
    sp = build_spectrum(2, 3)
    for flat in range(sp.n_modes):
        assert sp.flat_index(sp.multi_index(flat)) == flat


def test_eigenvalue_growth_1d():
    sp = build_spectrum(1, 512)
    lam = np.sort(sp.lambdas)
    k = np.arange(len(lam))
    sel = k >= 50
    ratio = lam[sel] / (k[sel] ** 2)
    assert np.all(np.abs(ratio / PI2 - 1.0) < 1e-3)


def test_eigenvalue_growth_matches_finite_differences():
    # second-order Neumann Laplacian on a refining grid converges to pi^2
    for n in (64, 256, 1024):
        h = 1.0 / n
        main = np.full(n, 2.0)
        main[0] = main[-1] = 1.0
        A = (np.diag(main) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
        eig = np.sort(np.linalg.eigvalsh(A))
        assert eig[1] == pytest.approx(PI2, rel=5.0 / n)


def test_build_spectrum_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        build_spectrum(4, 8)
    with pytest.raises(ParameterError):
        build_spectrum(1, 0)


# ---------------------------------------------------------------------------
# transforms

def test_constant_mode_synthesis(sp8):
    f = SpectralField(sp8, np.eye(9)[0])
    g = to_grid(f, 16)
    assert np.allclose(g.values, 1.0, rtol=0, atol=1e-15)


def test_e1_synthesis_matches_basis_definition():
    sp = build_spectrum(1, 4)
    f = SpectralField(sp, np.eye(5)[1])
    g = to_grid(f, 8)
    x = (np.arange(8) + 0.5) / 8
    assert np.allclose(g.values, np.sqrt(2.0) * np.cos(np.pi * x), atol=1e-14)


def test_round_trip_exact_at_minimum_grid(sp8, rng):
    f = random_field(sp8, rng)
    back = to_spectral(to_grid(f, sp8.N + 1), sp8)
    assert np.allclose(back.coeffs, f.coeffs, rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("d,N,Mq", [(1, 8, 16), (2, 5, 8), (3, 3, 6)])
def test_round_trip_multidim(d, N, Mq, rng):
    sp = build_spectrum(d, N)
    f = random_field(sp, rng)
    back = to_spectral(to_grid(f, Mq), sp)
    assert np.allclose(back.coeffs, f.coeffs, rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("d,N,Mq", [(1, 8, 16), (2, 4, 10), (3, 2, 6)])
def test_fft_and_naive_transforms_agree(d, N, Mq, rng):
    sp = build_spectrum(d, N)
    f = random_field(sp, rng)
    g_fft = to_grid(f, Mq, method="fft")
    g_naive = to_grid(f, Mq, method="naive")
    assert np.allclose(g_fft.values, g_naive.values, rtol=1e-12, atol=1e-13)
    b_fft = to_spectral(g_fft, sp, method="fft")
    b_naive = to_spectral(g_fft, sp, method="naive")
    assert np.allclose(b_fft.coeffs, b_naive.coeffs, rtol=1e-12, atol=1e-14)


def test_parseval_grid_quadrature(sp32, rng):
    f = random_field(sp32, rng)
    g = to_grid(f, 2 * (sp32.N + 1))
    quad_norm_sq = np.mean(g.values**2)
    assert quad_norm_sq == pytest.approx(np.sum(f.coeffs**2), rel=1e-10)


def test_synthesis_rejects_undersized_grid(sp8):
    with pytest.raises(ParameterError):
        to_grid(SpectralField(sp8, np.zeros(9)), sp8.N)


def test_batched_transform_matches_loop(sp8, rng):
    batch = rng.standard_normal((4, 3, sp8.n_modes))
    vals = coeffs_to_values(batch, sp8, 16)
    back = values_to_coeffs(vals, sp8, 16)
    for i in range(4):
        for j in range(3):
            single = coeffs_to_values(batch[i, j], sp8, 16)
            assert np.allclose(vals[i, j], single, atol=1e-14)
    assert np.allclose(back, batch, atol=1e-12)


# ---------------------------------------------------------------------------
# operator powers and projections

def test_apply_A_power_eigenmode():
    sp = build_spectrum(1, 4)
    f = SpectralField(sp, np.eye(5)[1])
    out = apply_A_power(f, 1.0)
    assert out.coeffs[1] == pytest.approx(PI2)


def test_apply_A_power_kills_mean_mode(sp8):
    f = SpectralField(sp8, np.eye(9)[0])
    assert apply_A_power(f, 0.5).norm() == 0.0


def test_negative_power_requires_mean_free(sp8, rng):
    f = random_field(sp8, rng)
    with pytest.raises(MeanComponentError):
        apply_A_power(f, -0.5)
    g = project_mean_free(f)
    restored = apply_A_power(apply_A_power(g, -0.5), 0.5)
    assert np.allclose(restored.coeffs, g.coeffs, rtol=1e-14, atol=1e-16)


def test_projections(sp8, rng):
    f = random_field(sp8, rng)
    p = project_mean_free(f)
    assert p.mean == 0.0
    assert np.allclose(project_mean_free(p).coeffs, p.coeffs, atol=0)
    assert np.allclose(project_PN(f, sp8.N).coeffs, f.coeffs, atol=0)
    cut = project_PN(f, 3)
    assert np.all(cut.coeffs[4:] == 0.0)
    assert np.allclose(project_PN(cut, 3).coeffs, cut.coeffs, atol=0)


def test_projection_tail_bound(sp32, rng):
    # ||f - P_N f|| <= lambda_{N+1}^{-gamma/2} ||f||_gamma on a manufactured field
    gamma = 1.5
    f = random_field(sp32, rng)
    for n_sub in (4, 8, 16):
        tail = f.coeffs.copy()
        tail[: n_sub + 1] = 0.0
        lhs = np.sqrt(np.sum(tail**2))
        lam_next = PI2 * (n_sub + 1) ** 2
        rhs = lam_next ** (-gamma / 2.0) * norm_alpha(f, gamma)
        assert lhs <= rhs + 1e-12


def test_projection_2d_zeroes_cross_modes():
    sp = build_spectrum(2, 2)
    f = SpectralField(sp, np.arange(9.0) + 1.0)
    cut = project_PN(f, 1)
    for flat, multi in enumerate(sp.multi_indices):
        if max(multi) > 1:
            assert cut.coeffs[flat] == 0.0
        else:
            assert cut.coeffs[flat] == f.coeffs[flat]


# ---------------------------------------------------------------------------
# semigroup

def test_semigroup_identity_and_mean(sp8, rng):
    f = random_field(sp8, rng)
    assert np.allclose(semigroup_apply(f, 0.0).coeffs, f.coeffs, atol=0)
    e0 = SpectralField(sp8, np.eye(9)[0])
    assert np.allclose(semigroup_apply(e0, 3.7).coeffs, e0.coeffs, atol=0)


def test_semigroup_law(sp8, rng):
    f = random_field(sp8, rng)
    a = semigroup_apply(semigroup_apply(f, 0.37e-3), 0.91e-3)
    b = semigroup_apply(f, 0.37e-3 + 0.91e-3)
    assert np.allclose(a.coeffs, b.coeffs, rtol=1e-14, atol=1e-18)


def test_semigroup_contraction(sp8, rng):
    f = random_field(sp8, rng)
    for t in (1e-5, 1e-3, 0.1, 2.0):
        assert semigroup_apply(f, t).norm() <= f.norm() * (1 + 1e-15)
        p = project_mean_free(f)
        lam1 = sp8.lambdas[1]
        assert semigroup_apply(p, t).norm() <= np.exp(-t * lam1**2) * p.norm() * (1 + 1e-12)


def test_semigroup_rejects_negative_time(sp8):
    with pytest.raises(ParameterError):
        semigroup_apply(SpectralField(sp8, np.zeros(9)), -1e-9)


def test_semigroup_smoothing_inequality(sp32, rng):
    # |e^{-tA^2} P x|_alpha <= C t^{-alpha/4} |P x| with a fitted constant
    alpha = 2.0
    worst = 0.0
    for _ in range(20):
        f = project_mean_free(random_field(sp32, rng))
        for t in np.geomspace(1e-6, 1.0, 13):
            sm = semigroup_apply(f, t)
            ratio = norm_alpha(project_mean_free(sm), alpha) * t ** (alpha / 4.0) / f.norm()
            worst = max(worst, ratio)
    # sup_u u^{alpha/4} e^{-u} at alpha=2 is (1/2)/e^... bounded well below 1
    assert worst < 1.0


def test_semigroup_regularity_inequality(sp32, rng):
    # ||(e^{-tA^2} - I) x|| <= C_alpha t^{alpha/4} ||x||_alpha, C_4 = 1 per mode
    for alpha in (1.0, 2.0, 4.0):
        worst = 0.0
        for _ in range(10):
            f = random_field(sp32, rng)
            for t in np.geomspace(1e-8, 1.0, 9):
                diff = semigroup_apply(f, t).coeffs - f.coeffs
                lhs = np.sqrt(np.sum(diff**2))
                rhs = t ** (alpha / 4.0) * norm_alpha(project_mean_free(f), alpha)
                if rhs > 0:
                    worst = max(worst, lhs / rhs)
        assert worst <= (1.0 if alpha == 4.0 else 2.0)


# ---------------------------------------------------------------------------
# phi_1

def test_phi1_zero_mode_is_dt(sp8):
    dt = 0.37
    vals = phi1_values(sp8.lambdas, dt)
    assert vals[0] == dt


def test_phi1_saturation():
    lam = np.array([10.0])
    dt = 50.0 / lam[0] ** 2
    val = phi1_values(lam, dt)[0]
    assert val == pytest.approx(1.0 / lam[0] ** 2, rel=1e-15)


@pytest.mark.parametrize("u", [1e-10, 1e-8, 1e-5, 9.9e-5, 1.01e-4, 1e-2, 1.0, 50.0, 1e3])
def test_phi1_matches_quadrature(u):
    lam = 3.1
    dt = u / lam**2
    val = phi1_values(np.array([lam]), dt)[0]
    ref = phi1_quadrature(lam, dt)
    assert val == pytest.approx(ref, rel=1e-12)


def test_phi1_branch_agreement_at_cutoff():
    # evaluate both branches at the switch point and compare
    lam = np.array([1.0])
    u = 1e-4
    taylor = u * (1.0 - u / 2.0 + u**2 / 6.0 - u**3 / 24.0)
    expm1_val = -np.expm1(-u)
    assert taylor == pytest.approx(expm1_val, rel=1e-13)


def test_phi1_monotone_and_bounded(sp32):
    dt = 0.01
    vals = phi1_values(sp32.lambdas, dt)
    assert np.all(vals > 0.0)
    assert np.all(vals <= dt)
    assert np.all(np.diff(vals) <= 0.0)  # decreasing in lambda^2


def test_phi1_apply_rejects_bad_dt(sp8):
    with pytest.raises(ParameterError):
        phi1_apply(SpectralField(sp8, np.zeros(9)), 0.0)


# ---------------------------------------------------------------------------
# norms and adjointness

def test_norm_alpha_examples():
    sp = build_spectrum(1, 4)
    e1 = SpectralField(sp, np.eye(5)[1])
    assert norm_alpha(e1, 2.0) == pytest.approx(PI2)
    e0 = SpectralField(sp, np.eye(5)[0])
    for alpha in (0.0, 1.0, 3.0):
        assert norm_alpha(e0, alpha) == pytest.approx(1.0)


def test_norm_alpha_zero_is_l2(sp8, rng):
    f = random_field(sp8, rng)
    assert norm_alpha(f, 0.0) == pytest.approx(f.norm(), rel=1e-15)


def test_self_adjointness(sp8, rng):
    f = project_mean_free(random_field(sp8, rng))
    g = project_mean_free(random_field(sp8, rng))
    for alpha in (0.5, 1.0, 2.0):
        lhs = np.dot(apply_A_power(f, alpha).coeffs, g.coeffs)
        rhs = np.dot(f.coeffs, apply_A_power(g, alpha).coeffs)
        assert lhs == pytest.approx(rhs, rel=1e-13)
