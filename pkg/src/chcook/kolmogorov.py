"""Pathwise variational (tangent) processes along numerical trajectories and
Monte Carlo estimators of directional derivatives of u(t, x) = E_x phi(X(t)).

The first and second variations eta and zeta of the Galerkin flow solve
linear evolution equations driven by F'(X) and F''(X) along the trajectory
and carry no noise of their own.  They are discretised with the same
exponential Euler template as the state, with coefficients frozen at X_k:

    eta_{k+1}  = e^{-dt A^2} eta_k  - phi_1 A P_N (F'(X_k) eta_k)
    zeta_{k+1} = e^{-dt A^2} zeta_k - phi_1 A P_N (F'(X_k) zeta_k
                                                   + F''(X_k) eta1_k eta2_k)

With taming off these are the exact first and second derivatives of the
discrete flow map, which the finite-difference oracle tests rely on.

Estimators:
    Du(t, x).h        ~ mean of D phi(X_K) . eta_K
    D^2u(t, x).(h,h') ~ mean of D phi(X_K) . zeta_K + D^2 phi(X_K)(eta_K, eta'_K)

plus a common-random-number central-difference estimator used as an
independent cross-check, and the scaling diagnostic that probes the
t^(-alpha/2) regularity transfer of rough directions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidEstimateError, ParameterError, ShapeMismatchError
from .functionals import Functional
from .harness import LevelRow, RateReport, fit_loglog, SE_DOMINANCE
from .noise import sample_increment_block
from .nonlinearity import fprime_coeffs
from .scheme import BatchStepper, SchemeConfig
from .spectral import (
    OperatorSpectrum,
    SpectralField,
    coeffs_to_values,
    phi1_values,
    semigroup_values,
    values_to_coeffs,
)

__all__ = [
    "TangentState",
    "TangentStepper",
    "step_tangent",
    "step_second_tangent",
    "estimate_Du",
    "estimate_D2u",
    "estimate_Du_fd",
    "check_regularity_scaling",
]

MAX_EXCLUDED_FRACTION = 0.01


@dataclass
class TangentState:
    """First variation (and optionally a second direction and the second
    variation) advanced in lockstep with a trajectory."""

    eta: SpectralField
    eta2: SpectralField | None = None
    zeta: SpectralField | None = None


class TangentStepper:
    """Vectorised tangent updates; directions live on axis -2.

    ``step`` advances (B, D, n) tangents given the (B, n) state at the same
    time level; the state's grid values are synthesised once per call.
    """

    def __init__(self, spectrum: OperatorSpectrum, dt: float, M_q: int):
        self.spectrum = spectrum
        self.dt = dt
        self.M_q = M_q
        self.semi = semigroup_values(spectrum.lambdas, dt)
        self.drift_gain = -spectrum.lambdas * phi1_values(spectrum.lambdas, dt)

    def _fprime_weight(self, x: np.ndarray) -> np.ndarray:
        xv = coeffs_to_values(x, self.spectrum, self.M_q)
        return 3.0 * xv * xv - 1.0

    def step(self, eta: np.ndarray, x: np.ndarray) -> np.ndarray:
        w = self._fprime_weight(x)
        if eta.ndim > x.ndim:  # (B, D, n) tangents against a (B, n) state
            w = np.expand_dims(w, axis=-(self.spectrum.d + 1))
        ev = coeffs_to_values(eta, self.spectrum, self.M_q)
        lin = values_to_coeffs(w * ev, self.spectrum, self.M_q)
        return self.semi * eta + self.drift_gain * lin

    def step_second(
        self, zeta: np.ndarray, eta1: np.ndarray, eta2: np.ndarray, x: np.ndarray
    ) -> np.ndarray:
        w = self._fprime_weight(x)
        zv = coeffs_to_values(zeta, self.spectrum, self.M_q)
        e1v = coeffs_to_values(eta1, self.spectrum, self.M_q)
        e2v = coeffs_to_values(eta2, self.spectrum, self.M_q)
        src = values_to_coeffs(w * zv + 6.0 * coeffs_to_values(x, self.spectrum, self.M_q)
                               * e1v * e2v, self.spectrum, self.M_q)
        return self.semi * zeta + self.drift_gain * src


def step_tangent(
    eta_k: SpectralField, x_k: SpectralField, dt: float, M_q: int
) -> SpectralField:
    """One exponential Euler step of the first variational equation with the
    multiplier frozen at X_k."""
    if eta_k.spectrum.n_modes != x_k.spectrum.n_modes:
        raise ShapeMismatchError("tangent and state live on different spectra")
    st = TangentStepper(x_k.spectrum, dt, M_q)
    out = st.step(eta_k.coeffs[None, :], x_k.coeffs[None, :])
    return SpectralField(x_k.spectrum, out[0])


def step_second_tangent(
    zeta_k: SpectralField,
    eta1_k: SpectralField,
    eta2_k: SpectralField,
    x_k: SpectralField,
    dt: float,
    M_q: int,
) -> SpectralField:
    """One step of the second variational equation, zeta_0 = 0."""
    for f in (zeta_k, eta1_k, eta2_k):
        if f.spectrum.n_modes != x_k.spectrum.n_modes:
            raise ShapeMismatchError("tangent and state live on different spectra")
    st = TangentStepper(x_k.spectrum, dt, M_q)
    out = st.step_second(
        zeta_k.coeffs[None, :],
        eta1_k.coeffs[None, :],
        eta2_k.coeffs[None, :],
        x_k.coeffs[None, :],
    )
    return SpectralField(x_k.spectrum, out[0])


@dataclass
class DerivativeEstimate:
    value: float
    std_err: float
    excluded: int
    samples: int


def _check_exclusions(bad: np.ndarray, what: str) -> None:
    frac = bad.mean()
    if frac > MAX_EXCLUDED_FRACTION:
        raise InvalidEstimateError(
            f"{what}: {100 * frac:.1f}% of trajectories blew up (> 1% allowed)"
        )


def _mean_se(values: np.ndarray, ok: np.ndarray) -> tuple[float, float]:
    v = values[ok]
    n = max(v.size, 1)
    mean = float(v.sum() / n)
    var = float(np.maximum((v**2).sum() / n - mean**2, 0.0))
    return mean, float(np.sqrt(var / n))


def _block_ranges(total: int, block: int):
    edges = list(range(0, total, block)) + [total]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]


def estimate_Du(
    cfg: SchemeConfig,
    phi: Functional,
    x: SpectralField,
    h: SpectralField,
    samples: int,
    seed: int = 0,
    block_size: int = 2048,
) -> DerivativeEstimate:
    """Monte Carlo estimate of Du(T, x).h = E[D phi(X_K) . eta_K]."""
    stepper = BatchStepper(cfg.spectrum, cfg.dt, cfg.M_q,
                           taming=cfg.taming, drift=cfg.drift)
    tstep = TangentStepper(cfg.spectrum, cfg.dt, cfg.M_q)
    vals = np.empty(samples)
    bad_all = np.zeros(samples, dtype=bool)
    for lo, hi in _block_ranges(samples, block_size):
        B = hi - lo
        ids = np.arange(lo, hi, dtype=np.uint64)
        X = np.broadcast_to(x.coeffs, (B, x.coeffs.size)).copy()
        eta = np.broadcast_to(h.coeffs, (B, h.coeffs.size)).copy()
        bad = np.zeros(B, dtype=bool)
        for k in range(cfg.K):
            dw = sample_increment_block(cfg.noise, cfg.dt, seed, ids, k)
            if cfg.drift:
                eta = tstep.step(eta, X)
            else:
                eta = tstep.semi * eta
            X, b = stepper.step(X, dw)
            bad |= b
        vals[lo:hi] = phi.grad_dot(X, eta)
        bad_all[lo:hi] = bad
    _check_exclusions(bad_all, "estimate_Du")
    ok = ~bad_all
    mean, se = _mean_se(vals, ok)
    return DerivativeEstimate(mean, se, int(bad_all.sum()), samples)


def estimate_D2u(
    cfg: SchemeConfig,
    phi: Functional,
    x: SpectralField,
    h1: SpectralField,
    h2: SpectralField,
    samples: int,
    seed: int = 0,
    block_size: int = 2048,
) -> DerivativeEstimate:
    """Monte Carlo estimate of D2u(T, x).(h1, h2)."""
    stepper = BatchStepper(cfg.spectrum, cfg.dt, cfg.M_q,
                           taming=cfg.taming, drift=cfg.drift)
    tstep = TangentStepper(cfg.spectrum, cfg.dt, cfg.M_q)
    vals = np.empty(samples)
    bad_all = np.zeros(samples, dtype=bool)
    for lo, hi in _block_ranges(samples, block_size):
        B = hi - lo
        ids = np.arange(lo, hi, dtype=np.uint64)
        X = np.broadcast_to(x.coeffs, (B, x.coeffs.size)).copy()
        e1 = np.broadcast_to(h1.coeffs, (B, h1.coeffs.size)).copy()
        e2 = np.broadcast_to(h2.coeffs, (B, h2.coeffs.size)).copy()
        zeta = np.zeros_like(e1)
        bad = np.zeros(B, dtype=bool)
        for k in range(cfg.K):
            dw = sample_increment_block(cfg.noise, cfg.dt, seed, ids, k)
            if cfg.drift:
                zeta = tstep.step_second(zeta, e1, e2, X)
                e1 = tstep.step(e1, X)
                e2 = tstep.step(e2, X)
            else:
                zeta = tstep.semi * zeta
                e1 = tstep.semi * e1
                e2 = tstep.semi * e2
            X, b = stepper.step(X, dw)
            bad |= b
        vals[lo:hi] = phi.grad_dot(X, zeta) + phi.hess_quad(X, e1, e2)
        bad_all[lo:hi] = bad
    _check_exclusions(bad_all, "estimate_D2u")
    ok = ~bad_all
    mean, se = _mean_se(vals, ok)
    return DerivativeEstimate(mean, se, int(bad_all.sum()), samples)


def estimate_Du_fd(
    cfg: SchemeConfig,
    phi: Functional,
    x: SpectralField,
    h: SpectralField,
    eps: float,
    samples: int,
    seed: int = 0,
    block_size: int = 2048,
) -> DerivativeEstimate:
    """Central-difference estimate (E phi(X_K(x + eps h)) - E phi(X_K(x - eps h)))
    / (2 eps) with common random numbers across the pair."""
    if eps <= 0.0:
        raise ParameterError(f"eps must be > 0, got {eps}")
    stepper = BatchStepper(cfg.spectrum, cfg.dt, cfg.M_q,
                           taming=cfg.taming, drift=cfg.drift)
    vals = np.empty(samples)
    bad_all = np.zeros(samples, dtype=bool)
    for lo, hi in _block_ranges(samples, block_size):
        B = hi - lo
        ids = np.arange(lo, hi, dtype=np.uint64)
        Xp = np.broadcast_to(x.coeffs + eps * h.coeffs, (B, x.coeffs.size)).copy()
        Xm = np.broadcast_to(x.coeffs - eps * h.coeffs, (B, x.coeffs.size)).copy()
        bad = np.zeros(B, dtype=bool)
        for k in range(cfg.K):
            dw = sample_increment_block(cfg.noise, cfg.dt, seed, ids, k)
            Xp, b1 = stepper.step(Xp, dw)
            Xm, b2 = stepper.step(Xm, dw)
            bad |= b1 | b2
        vals[lo:hi] = (phi.value(Xp) - phi.value(Xm)) / (2.0 * eps)
        bad_all[lo:hi] = bad
    _check_exclusions(bad_all, "estimate_Du_fd")
    mean, se = _mean_se(vals, ~bad_all)
    return DerivativeEstimate(mean, se, int(bad_all.sum()), samples)


def check_regularity_scaling(
    cfg: SchemeConfig,
    phi: Functional,
    alpha: float,
    direction_modes,
    t_grid,
    samples: int,
    seed: int = 0,
    block_size: int = 2048,
) -> RateReport:
    """Scaling diagnostic for |Du(t, x).h| against t^(-alpha/2) singularities.

    Directions are h = lambda_j^alpha e_j for j in ``direction_modes``, which
    have unit negative-power norm, so the reported per-t value is

        sup_j |Du(t, x).e_j| lambda_j^alpha t^(alpha/2).

    The fitted slope of log(sup ratio) against log(t) should not be
    significantly negative if the singularity exponent is honest.
    """
    if not 0.0 <= alpha < 2.0:
        raise ParameterError(f"alpha must be in [0, 2), got {alpha}")
    direction_modes = [int(j) for j in direction_modes]
    if any(j < 1 or j > cfg.spectrum.N for j in direction_modes):
        raise ParameterError("direction modes must be mean-free retained modes")
    t_grid = sorted(float(t) for t in t_grid)
    dt = cfg.dt
    steps = []
    for t in t_grid:
        k = round(t / dt)
        if abs(k * dt - t) > 1e-12 * max(1.0, t) or k < 1 or k > cfg.K:
            raise ParameterError(f"t = {t} is not a step multiple within (0, T]")
        steps.append(k)

    D = len(direction_modes)
    dirs = np.zeros((D, cfg.spectrum.n_modes))
    lam_dirs = np.empty(D)
    for i, j in enumerate(direction_modes):
        idx = cfg.spectrum.flat_index((j,) + (0,) * (cfg.spectrum.d - 1))
        dirs[i, idx] = 1.0
        lam_dirs[i] = cfg.spectrum.lambdas[idx]

    stepper = BatchStepper(cfg.spectrum, cfg.dt, cfg.M_q,
                           taming=cfg.taming, drift=cfg.drift)
    tstep = TangentStepper(cfg.spectrum, cfg.dt, cfg.M_q)
    n_t = len(t_grid)
    sum_v = np.zeros((n_t, D))
    sum_v2 = np.zeros((n_t, D))
    n_ok = 0
    for lo, hi in _block_ranges(samples, block_size):
        B = hi - lo
        ids = np.arange(lo, hi, dtype=np.uint64)
        X = np.broadcast_to(cfg.x0.coeffs, (B, cfg.spectrum.n_modes)).copy()
        eta = np.broadcast_to(dirs, (B, D, cfg.spectrum.n_modes)).copy()
        bad = np.zeros(B, dtype=bool)
        snapshots = np.empty((n_t, B, D))
        step_to_slot = {k: i for i, k in enumerate(steps)}
        for k in range(max(steps)):
            dw = sample_increment_block(cfg.noise, cfg.dt, seed, ids, k)
            if cfg.drift:
                eta = tstep.step(eta, X)
            else:
                eta = tstep.semi * eta
            X, b = stepper.step(X, dw)
            bad |= b
            slot = step_to_slot.get(k + 1)
            if slot is not None:
                snapshots[slot] = phi.grad_dot(X[:, None, :], eta)
        ok = ~bad
        n_ok += int(ok.sum())
        sum_v += snapshots[:, ok, :].sum(axis=1)
        sum_v2 += (snapshots[:, ok, :] ** 2).sum(axis=1)

    n = max(n_ok, 1)
    mean = sum_v / n
    var = np.maximum(sum_v2 / n - mean**2, 0.0)
    se = np.sqrt(var / n)

    rows = []
    pts = []
    for i, t in enumerate(t_grid):
        ratios = np.abs(mean[i]) * lam_dirs**alpha * t ** (alpha / 2.0)
        jstar = int(np.argmax(ratios))
        ratio = float(ratios[jstar])
        ratio_se = float(se[i, jstar] * lam_dirs[jstar] ** alpha * t ** (alpha / 2.0))
        rows.append(
            LevelRow(
                N=cfg.spectrum.N,
                K=cfg.K,
                dt=t,
                lambda_N=float(lam_dirs[jstar]),
                error=ratio,
                std_err=ratio_se,
                used_in_fit=ratio > SE_DOMINANCE * ratio_se,
                excluded=samples - n_ok,
            )
        )
        if rows[-1].used_in_fit:
            pts.append((t, ratio, ratio_se))
    slope = half_width = None
    fitted = False
    if len(pts) >= 3:
        slope, half_width = fit_loglog(pts)
        fitted = True
    return RateReport(
        kind="kolmogorov-scaling",
        rows=rows,
        slope=slope,
        half_width=half_width,
        fitted=fitted,
        insufficient=not fitted,
        seed=seed,
        functional=phi.name,
        extras={"alpha": alpha, "directions": direction_modes},
    )
