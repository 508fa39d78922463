"""Q-Wiener increment sampling in the eigenbasis, and the discrete
stochastic-convolution diagnostic.

Two covariance families are built in, mirroring the two admissible noise
regimes: space-time white noise (Q = I, dimension 1 only, Gamma = 3/2) and a
trace-class diagonal family q_j = (1 + lambda_j)^(-s) with s > d/2
(Gamma = 2).  Q is diagonal in the operator eigenbasis; each retained mode
receives an independent N(0, q_j dt) increment.  Setting ``q0_zero`` removes
the variance of the constant mode, which makes the spatial mean of solutions
an exact invariant of the dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .errors import ParameterError, ShapeMismatchError
from .spectral import OperatorSpectrum, SpectralField, semigroup_values

__all__ = [
    "NoiseModel",
    "RngStream",
    "white_noise",
    "trace_class",
    "sample_increment",
    "sample_increment_block",
    "step_Ztilde",
]

WHITE = "white"
TRACE_CLASS = "trace-class"


@dataclass(frozen=True)
class NoiseModel:
    """Diagonal covariance of the driving Q-Wiener process.

    ``q`` holds one variance weight per retained multi-index of ``spectrum``;
    ``gamma_max`` / ``gamma_floor`` are the regularity ceiling and floor of
    the corresponding noise regime, and the admissible reporting exponents
    are gamma in (gamma_floor, gamma_max).
    """

    spectrum: OperatorSpectrum
    kind: str
    q: np.ndarray
    gamma_max: float
    gamma_floor: float
    q0_zero: bool
    s: float | None = None

    def trace(self) -> float:
        return float(self.q.sum())

    def restricted(self, spectrum: OperatorSpectrum) -> "NoiseModel":
        """The same model on a coarser spectrum (leading modes in d = 1)."""
        if spectrum.d != self.spectrum.d or spectrum.N > self.spectrum.N:
            raise ShapeMismatchError("restriction requires a coarser spectrum of equal dimension")
        if self.spectrum.d != 1:
            raise ParameterError("restriction by truncation is implemented for d = 1")
        return replace(self, spectrum=spectrum, q=self.q[: spectrum.n_modes])


def _apply_q0(q: np.ndarray, q0_zero: bool) -> np.ndarray:
    if q0_zero:
        q = q.copy()
        q[0] = 0.0
    return q


def white_noise(spectrum: OperatorSpectrum, q0_zero: bool = False) -> NoiseModel:
    """Space-time white noise Q = I; admissible only on the interval (d=1)."""
    if spectrum.d != 1:
        raise ParameterError("white noise requires d = 1")
    q = _apply_q0(np.ones(spectrum.n_modes), q0_zero)
    return NoiseModel(
        spectrum=spectrum, kind=WHITE, q=q,
        gamma_max=1.5, gamma_floor=1.0, q0_zero=q0_zero,
    )


def trace_class(spectrum: OperatorSpectrum, s: float, q0_zero: bool = False) -> NoiseModel:
    """Diagonal trace-class covariance q_j = (1 + lambda_j)^(-s), s > d/2."""
    if s <= spectrum.d / 2.0:
        raise ParameterError(
            f"trace-class decay needs s > d/2 = {spectrum.d / 2}, got s = {s}"
        )
    q = _apply_q0((1.0 + spectrum.lambdas) ** (-s), q0_zero)
    return NoiseModel(
        spectrum=spectrum, kind=TRACE_CLASS, q=q,
        gamma_max=2.0, gamma_floor=1.0 + spectrum.d / 4.0, q0_zero=q0_zero, s=s,
    )


@dataclass(frozen=True)
class RngStream:
    """Address of one increment stream: (master seed, sample id, step id).

    Identical addresses reproduce identical increments regardless of
    execution order or thread count.
    """

    master_seed: int
    sample: int = 0
    step: int = 0

    def at(self, sample: int | None = None, step: int | None = None) -> "RngStream":
        return RngStream(
            master_seed=self.master_seed,
            sample=self.sample if sample is None else sample,
            step=self.step if step is None else step,
        )


def sample_increment_block(
    model: NoiseModel, dt: float, seed: int, samples, step: int
) -> np.ndarray:
    """Increments P_N Delta W^Q for a batch of sample ids, shape (B, n_modes)."""
    if dt <= 0.0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    z = rng.normal_block(seed, samples, step, model.spectrum.n_modes)
    return z * np.sqrt(model.q * dt)


def sample_increment(
    model: NoiseModel, spectrum: OperatorSpectrum, dt: float, stream: RngStream
) -> SpectralField:
    """One Galerkin-projected Q-Wiener increment over a step of length dt."""
    if spectrum is not model.spectrum and spectrum.n_modes != model.spectrum.n_modes:
        raise ShapeMismatchError("noise model and target spectrum disagree")
    c = sample_increment_block(model, dt, stream.master_seed, [stream.sample], stream.step)
    return SpectralField(spectrum, c[0])


def step_Ztilde(z: SpectralField, dW: SpectralField, dt: float) -> SpectralField:
    """One update of the discrete stochastic convolution:
    Z_{k+1} = exp(-dt A^2) (Z_k + Delta W_k), Z_0 = 0."""
    if z.spectrum.n_modes != dW.spectrum.n_modes or z.spectrum.d != dW.spectrum.d:
        raise ShapeMismatchError("state and increment live on different spectra")
    mult = semigroup_values(z.spectrum.lambdas, dt)
    return SpectralField(z.spectrum, mult * (z.coeffs + dW.coeffs))
