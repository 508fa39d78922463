"""Double-well nonlinearity F(x) = x^3 - x, its Galerkin projection, its
derivatives as multiplication operators, and the energy functional.

F is always evaluated pseudo-spectrally: synthesize on a midpoint grid,
apply the pointwise polynomial, analyse back, truncate.  A cubic of a
degree-N cosine series has degree 3N; with M_q >= 2(N+1) midpoints per axis
every alias image of the product falls outside the retained range (or
cancels), so the projected coefficients are exact up to rounding.  The
conservative default used by the steppers is M_q = 4(N+1).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError, ShapeMismatchError
from .spectral import (
    GridField,
    OperatorSpectrum,
    SpectralField,
    coeffs_to_values,
    norm_alpha_sq_values,
    values_to_coeffs,
)

__all__ = [
    "eval_F_grid",
    "galerkin_F",
    "apply_Fprime",
    "apply_Fsecond",
    "eval_energy",
    "dealias_min_Mq",
    "galerkin_F_coeffs",
    "fprime_coeffs",
]


def dealias_min_Mq(N: int) -> int:
    """Smallest per-axis midpoint count that dealiases the cubic exactly."""
    return 2 * (N + 1)


def _check_dealias(spectrum: OperatorSpectrum, M_q: int) -> None:
    need = dealias_min_Mq(spectrum.N)
    if M_q < need:
        raise ParameterError(
            f"M_q = {M_q} below the cubic dealiasing threshold {need} for N = {spectrum.N}"
        )


def eval_F_grid(g: GridField) -> GridField:
    """Pointwise double-well drift v -> v^3 - v."""
    v = g.values
    return GridField(d=g.d, M_q=g.M_q, values=v * v * v - v)


def galerkin_F_coeffs(coeffs: np.ndarray, spectrum: OperatorSpectrum, M_q: int) -> np.ndarray:
    """P_N F(x) on raw coefficient arrays (batched over leading axes)."""
    _check_dealias(spectrum, M_q)
    v = coeffs_to_values(coeffs, spectrum, M_q)
    return values_to_coeffs(v * v * v - v, spectrum, M_q)


def galerkin_F(x: SpectralField, M_q: int) -> SpectralField:
    """Exact Galerkin projection of the cubic drift at dealiased quadrature."""
    return SpectralField(x.spectrum, galerkin_F_coeffs(x.coeffs, x.spectrum, M_q))


def _require_shared_spectrum(*fields: SpectralField) -> None:
    s0 = fields[0].spectrum
    for f in fields[1:]:
        if f.spectrum.n_modes != s0.n_modes or f.spectrum.d != s0.d:
            raise ShapeMismatchError("fields must share one spectrum")


def fprime_coeffs(
    x_coeffs: np.ndarray, h_coeffs: np.ndarray, spectrum: OperatorSpectrum, M_q: int
) -> np.ndarray:
    """P_N (F'(x) h) = P_N ((3 x^2 - 1) h) on raw coefficient arrays."""
    _check_dealias(spectrum, M_q)
    xv = coeffs_to_values(x_coeffs, spectrum, M_q)
    hv = coeffs_to_values(h_coeffs, spectrum, M_q)
    return values_to_coeffs((3.0 * xv * xv - 1.0) * hv, spectrum, M_q)


def apply_Fprime(x: SpectralField, h: SpectralField, M_q: int) -> SpectralField:
    """First derivative of F at x acting on h, projected back to the cutoff."""
    _require_shared_spectrum(x, h)
    return SpectralField(x.spectrum, fprime_coeffs(x.coeffs, h.coeffs, x.spectrum, M_q))


def apply_Fsecond(
    x: SpectralField, h: SpectralField, k: SpectralField, M_q: int
) -> SpectralField:
    """Second derivative of F at x: P_N (6 x h k)."""
    _require_shared_spectrum(x, h, k)
    _check_dealias(x.spectrum, M_q)
    sp = x.spectrum
    xv = coeffs_to_values(x.coeffs, sp, M_q)
    hv = coeffs_to_values(h.coeffs, sp, M_q)
    kv = coeffs_to_values(k.coeffs, sp, M_q)
    return SpectralField(sp, values_to_coeffs(6.0 * xv * hv * kv, sp, M_q))


def energy_values(coeffs: np.ndarray, spectrum: OperatorSpectrum, M_q: int) -> np.ndarray:
    """J(x) = 1/2 ||x||_{H^1}^2 + 1/4 ||x||_{L^4}^4 - 1/2 ||x||^2 over a batch.

    ||x||_{H^1}^2 = ||x||^2 + |Px|_1^2 is evaluated from the coefficients,
    the quartic term by midpoint quadrature.
    """
    _check_dealias(spectrum, M_q)
    c = np.asarray(coeffs, dtype=float)
    l2_sq = np.sum(c**2, axis=-1)
    h1_semi_sq = norm_alpha_sq_values(c, spectrum.lambdas, 1.0) - c[..., 0] ** 2
    v = coeffs_to_values(c, spectrum, M_q)
    axes = tuple(range(v.ndim - spectrum.d, v.ndim))
    l4_quartic = np.mean(v**4, axis=axes)
    return 0.5 * (l2_sq + h1_semi_sq) + 0.25 * l4_quartic - 0.5 * l2_sq


def eval_energy(x: SpectralField, M_q: int) -> float:
    """Energy functional of a single field."""
    return float(energy_values(x.coeffs, x.spectrum, M_q))
