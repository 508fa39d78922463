"""Coupled Monte Carlo estimation of strong and weak discretization errors.

All levels of an experiment ride on one noise realisation per sample: the
increments are drawn at the reference resolution (finest step, largest mode
cutoff) from the counter-based generator, coarser time levels receive sums
of consecutive fine increments, and coarser mode cutoffs receive the
projection of the reference increment.  Strong errors are pathwise norms of
the terminal difference against the reference run; weak errors are
common-random-number differences of a functional of the terminal state.

Samples are processed in fixed-size blocks.  Each block is a pure function
of (plan, block range), blocks may be evaluated on any number of threads,
and block partials are reduced in block order, so every report is
bit-reproducible across thread counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InsufficientLevelsError, ParameterError
from .functionals import make_functional
from .noise import sample_increment_block, trace_class, white_noise
from .scheme import BatchStepper, default_x0
from .spectral import build_spectrum, norm_alpha_sq_values, projection_mask

__all__ = [
    "ExperimentPlan",
    "LevelRow",
    "RateReport",
    "fit_loglog",
    "strong_error_temporal",
    "strong_error_spatial",
    "weak_error_temporal",
    "weak_error_spatial",
    "moment_stability",
]

SE_DOMINANCE = 3.0  # a level enters the fit only if |error| > 3 * std_err


@dataclass
class ExperimentPlan:
    """A coupled multi-level experiment specification."""

    d: int
    T: float
    noise_kind: str
    levels: list
    ref: tuple
    samples: int
    gamma: float
    noise_s: float | None = None
    q0_zero: bool = True
    m: int = 2
    functionals: tuple = ()
    x0_preset: str = "cosine"
    Mq_factor: int = 4
    seed: int = 0
    threads: int = 1
    block_size: int = 1024
    taming: bool = True
    drift: bool = True

    def __post_init__(self):
        self.levels = [(int(n), int(k)) for n, k in self.levels]
        self.ref = (int(self.ref[0]), int(self.ref[1]))
        N_ref, K_ref = self.ref
        for N, K in self.levels:
            if N > N_ref:
                raise ConfigError(
                    "level_inconsistency", f"level N = {N} above reference N = {N_ref}"
                )
            if K_ref % K != 0:
                raise ConfigError(
                    "level_inconsistency",
                    f"level K = {K} does not divide reference K = {K_ref}",
                )
        if self.noise_kind == "white" and self.d != 1:
            raise ConfigError("noise_dimension", "white noise requires d = 1")
        if self.samples < 1:
            raise ConfigError("bad_value", f"samples must be >= 1, got {self.samples}")


class _Bundle:
    """Prebuilt spectra, noise, steppers and masks for one plan."""

    def __init__(self, plan: ExperimentPlan, track_sup: bool):
        self.plan = plan
        N_ref, K_ref = plan.ref
        self.spectrum = build_spectrum(plan.d, N_ref)
        if plan.noise_kind == "white":
            self.noise = white_noise(self.spectrum, q0_zero=plan.q0_zero)
        else:
            self.noise = trace_class(self.spectrum, plan.noise_s, q0_zero=plan.q0_zero)
        if not (self.noise.gamma_floor < plan.gamma < self.noise.gamma_max):
            raise ConfigError(
                "gamma_range",
                f"gamma = {plan.gamma} outside "
                f"({self.noise.gamma_floor}, {self.noise.gamma_max})",
            )
        self.dt_ref = plan.T / K_ref
        self.K_ref = K_ref
        Mq = plan.Mq_factor * (N_ref + 1)
        self.ref_stepper = BatchStepper(
            self.spectrum, self.dt_ref, Mq, taming=plan.taming, drift=plan.drift
        )
        self.x0_ref = default_x0(self.spectrum, plan.x0_preset).coeffs
        self.track_sup = track_sup
        self.functionals = [make_functional(n, self.spectrum) for n in plan.functionals]
        self.levels = []
        for N, K in plan.levels:
            spec = build_spectrum(plan.d, N)
            mask = projection_mask(self.spectrum, N)
            cols = np.nonzero(mask)[0]
            self.levels.append(
                {
                    "N": N,
                    "K": K,
                    "dt": plan.T / K,
                    "ratio": K_ref // K,
                    "spectrum": spec,
                    "cols": cols,
                    "stepper": BatchStepper(
                        spec,
                        plan.T / K,
                        plan.Mq_factor * (N + 1),
                        taming=plan.taming,
                        drift=plan.drift,
                    ),
                    "x0": self.x0_ref[cols].copy(),
                }
            )


@dataclass
class _Partial:
    """Per-block accumulators, one row per level."""

    usable: np.ndarray
    sum_dm: np.ndarray
    sum_d2m: np.ndarray
    sum_phi: np.ndarray
    sum_phi2: np.ndarray
    sum_sup2: np.ndarray
    sum_sup4: np.ndarray

    def __iadd__(self, other):
        for name in (
            "usable", "sum_dm", "sum_d2m", "sum_phi", "sum_phi2", "sum_sup2", "sum_sup4"
        ):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        return self


def _run_block(bundle: _Bundle, lo: int, hi: int) -> _Partial:
    plan = bundle.plan
    B = hi - lo
    samples = np.arange(lo, hi, dtype=np.uint64)
    n_lv = len(bundle.levels)
    n_fn = len(bundle.functionals)

    X = np.broadcast_to(bundle.x0_ref, (B, bundle.x0_ref.size)).copy()
    bad_ref = np.zeros(B, dtype=bool)
    states, bufs, bads, sups = [], [], [], []
    for lv in bundle.levels:
        states.append(np.broadcast_to(lv["x0"], (B, lv["x0"].size)).copy())
        bufs.append(np.zeros((B, lv["x0"].size)))
        bads.append(np.zeros(B, dtype=bool))
        sups.append(
            norm_alpha_sq_values(states[-1], lv["spectrum"].lambdas, plan.gamma)
            if bundle.track_sup
            else None
        )

    for k in range(bundle.K_ref):
        dw = sample_increment_block(
            bundle.noise, bundle.dt_ref, plan.seed, samples, k
        )
        X, bad = bundle.ref_stepper.step(X, dw)
        bad_ref |= bad
        for i, lv in enumerate(bundle.levels):
            bufs[i] += dw[:, lv["cols"]]
            if (k + 1) % lv["ratio"] == 0:
                states[i], bad = lv["stepper"].step(states[i], bufs[i])
                bads[i] |= bad
                bufs[i][:] = 0.0
                if bundle.track_sup:
                    sups[i] = np.maximum(
                        sups[i],
                        norm_alpha_sq_values(
                            states[i], lv["spectrum"].lambdas, plan.gamma
                        ),
                    )

    usable = np.empty(n_lv, dtype=np.int64)
    sum_dm = np.zeros(n_lv)
    sum_d2m = np.zeros(n_lv)
    sum_phi = np.zeros((n_lv, max(n_fn, 1)))
    sum_phi2 = np.zeros((n_lv, max(n_fn, 1)))
    sum_sup2 = np.zeros(n_lv)
    sum_sup4 = np.zeros(n_lv)
    m = plan.m
    for i, lv in enumerate(bundle.levels):
        ok = ~(bad_ref | bads[i])
        usable[i] = int(ok.sum())
        emb = np.zeros_like(X)
        emb[:, lv["cols"]] = states[i]
        diff_sq = np.sum((emb - X) ** 2, axis=-1)
        dm = diff_sq ** (m / 2.0)
        sum_dm[i] = dm[ok].sum()
        sum_d2m[i] = (dm[ok] ** 2).sum()
        for j, fn in enumerate(bundle.functionals):
            delta = fn.value(emb) - fn.value(X)
            sum_phi[i, j] = delta[ok].sum()
            sum_phi2[i, j] = (delta[ok] ** 2).sum()
        if bundle.track_sup:
            sum_sup2[i] = sups[i][ok].sum()
            sum_sup4[i] = (sups[i][ok] ** 2).sum()
    return _Partial(usable, sum_dm, sum_d2m, sum_phi, sum_phi2, sum_sup2, sum_sup4)


def _run_coupled(plan: ExperimentPlan, track_sup: bool = False):
    bundle = _Bundle(plan, track_sup)
    edges = list(range(0, plan.samples, plan.block_size)) + [plan.samples]
    blocks = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    if plan.threads > 1:
        with ThreadPoolExecutor(max_workers=plan.threads) as ex:
            partials = list(ex.map(lambda b: _run_block(bundle, *b), blocks))
    else:
        partials = [_run_block(bundle, *b) for b in blocks]
    total = partials[0]
    for p in partials[1:]:
        total += p
    return bundle, total


@dataclass
class LevelRow:
    N: int
    K: int
    dt: float
    lambda_N: float
    error: float
    std_err: float
    used_in_fit: bool = False
    excluded: int = 0


@dataclass
class RateReport:
    """Per-level error estimates plus the fitted log-log slope."""

    kind: str
    rows: list
    slope: float | None
    half_width: float | None
    fitted: bool
    insufficient: bool
    seed: int
    m: int | None = None
    functional: str | None = None
    extras: dict = field(default_factory=dict)

    @property
    def excluded_total(self) -> int:
        return int(sum(r.excluded for r in self.rows))


def fit_loglog(points) -> tuple[float, float]:
    """Least squares slope of log(err) against log(h).

    ``points`` is a sequence of (h, err, se) triples; the half width is a
    ~95% bound propagated to first order from the per-point standard errors.
    """
    pts = [(float(h), float(e), float(s)) for h, e, s in points]
    if len(pts) < 3:
        raise InsufficientLevelsError(f"need >= 3 points for a slope, got {len(pts)}")
    if any(e <= 0.0 or h <= 0.0 for h, e, _ in pts):
        raise ParameterError("log-log fit requires positive h and err")
    lh = np.log([p[0] for p in pts])
    le = np.log([p[1] for p in pts])
    if np.ptp(lh) < 1e-12:
        raise ParameterError("degenerate spread in h")
    xbar = lh.mean()
    sxx = np.sum((lh - xbar) ** 2)
    w = (lh - xbar) / sxx
    slope = float(np.sum(w * le))
    sigma_log = np.array([s / e for _, e, s in pts])
    half_width = float(2.0 * np.sqrt(np.sum((w * sigma_log) ** 2)))
    return slope, half_width


def _finalize(kind, plan, bundle, total, errors, ses, h_values, m=None, functional=None,
              extras=None) -> RateReport:
    rows = []
    for i, lv in enumerate(bundle.levels):
        rows.append(
            LevelRow(
                N=lv["N"],
                K=lv["K"],
                dt=lv["dt"],
                lambda_N=float(np.pi**2 * plan.d * lv["N"] ** 2),
                error=float(errors[i]),
                std_err=float(ses[i]),
                excluded=int(plan.samples - total.usable[i]),
            )
        )
    usable_pts = []
    for row, h in zip(rows, h_values):
        if row.error > SE_DOMINANCE * row.std_err and row.error > 0.0:
            row.used_in_fit = True
            usable_pts.append((h, row.error, row.std_err))
    slope = half_width = None
    fitted = False
    insufficient = False
    if len(usable_pts) >= 3:
        slope, half_width = fit_loglog(usable_pts)
        fitted = True
    else:
        insufficient = True
    return RateReport(
        kind=kind,
        rows=rows,
        slope=slope,
        half_width=half_width,
        fitted=fitted,
        insufficient=insufficient,
        seed=plan.seed,
        m=m,
        functional=functional,
        extras=extras or {},
    )


def _strong_stats(plan, total):
    """(E ||D||^m)^(1/m) and its delta-method standard error, per level."""
    n = np.maximum(total.usable, 1)
    mean = total.sum_dm / n
    var = np.maximum(total.sum_d2m / n - mean**2, 0.0)
    se_mean = np.sqrt(var / n)
    m = plan.m
    err = mean ** (1.0 / m)
    with np.errstate(divide="ignore", invalid="ignore"):
        se = np.where(mean > 0.0, se_mean / (m * mean ** (1.0 - 1.0 / m)), 0.0)
    return err, se


def strong_error_temporal(plan: ExperimentPlan) -> RateReport:
    """Pathwise error against the fine-step reference, per time level."""
    bundle, total = _run_coupled(plan)
    err, se = _strong_stats(plan, total)
    hs = [lv["dt"] for lv in bundle.levels]
    return _finalize("strong-time", plan, bundle, total, err, se, hs, m=plan.m)


def strong_error_spatial(plan: ExperimentPlan) -> RateReport:
    """Pathwise error against the large-cutoff reference, per mode level.

    The fit abscissa is lambda_N, so the reported slope is the exponent of
    lambda_N^(-slope)."""
    bundle, total = _run_coupled(plan)
    err, se = _strong_stats(plan, total)
    hs = [1.0 / (np.pi**2 * plan.d * lv["N"] ** 2) for lv in bundle.levels]
    return _finalize("strong-space", plan, bundle, total, err, se, hs, m=plan.m)


def _weak_report(kind, plan, hs_fn) -> RateReport:
    if not plan.functionals:
        raise ParameterError("weak error estimation needs at least one functional")
    bundle, total = _run_coupled(plan)
    n = np.maximum(total.usable, 1)
    mean = total.sum_phi[:, 0] / n
    var = np.maximum(total.sum_phi2[:, 0] / n - mean**2, 0.0)
    se = np.sqrt(var / n)
    err = np.abs(mean)
    hs = hs_fn(bundle)
    return _finalize(
        kind, plan, bundle, total, err, se, hs, functional=plan.functionals[0]
    )


def weak_error_temporal(plan: ExperimentPlan) -> RateReport:
    """|E phi(X_level) - E phi(X_ref)| under CRN coupling, per time level."""
    return _weak_report(
        "weak-time", plan, lambda b: [lv["dt"] for lv in b.levels]
    )


def weak_error_spatial(plan: ExperimentPlan) -> RateReport:
    """|E phi(X_level) - E phi(X_ref)| under CRN coupling, per mode level."""
    return _weak_report(
        "weak-space",
        plan,
        lambda b: [1.0 / (np.pi**2 * plan.d * lv["N"] ** 2) for lv in b.levels],
    )


def moment_stability(plan: ExperimentPlan) -> RateReport:
    """E sup_k ||X_{N,k}||_gamma^2 per level, with standard errors.

    The 'error' column holds the moment estimate itself; stability across
    levels (bounded variation) is the quantity of interest, not a decay
    slope, so the report is returned unfitted unless a fit is possible.
    """
    bundle, total = _run_coupled(plan, track_sup=True)
    n = np.maximum(total.usable, 1)
    mean = total.sum_sup2 / n
    var = np.maximum(total.sum_sup4 / n - mean**2, 0.0)
    se = np.sqrt(var / n)
    hs = [lv["dt"] for lv in bundle.levels]
    return _finalize("moments", plan, bundle, total, mean, se, hs, m=2)
