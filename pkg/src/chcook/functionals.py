"""Smooth test functionals with analytic first and second derivatives.

Each functional exposes batched evaluation plus the actions of its gradient
and Hessian, which is what the weak-error estimators and the variational
derivative estimators consume.  All built-ins have bounded first and second
derivatives on the relevant range.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .spectral import OperatorSpectrum

__all__ = ["Functional", "LinearFunctional", "GaussianFunctional", "SineFunctional",
           "make_functional", "FUNCTIONAL_NAMES"]


class Functional:
    """Interface: value(x), grad_dot(x, h), hess_quad(x, h1, h2), batched over
    leading axes (h may carry extra leading axes broadcast against x)."""

    name = "abstract"

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def grad_dot(self, x: np.ndarray, h: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hess_quad(self, x: np.ndarray, h1: np.ndarray, h2: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def _default_direction(spectrum: OperatorSpectrum) -> np.ndarray:
    """A fixed unit-norm probe vector with slowly decaying mode weights."""
    g = (1.0 + spectrum.lambdas) ** -0.5
    return g / np.linalg.norm(g)


class LinearFunctional(Functional):
    """phi(x) = <g, x>; gradient g, Hessian 0."""

    name = "linear"

    def __init__(self, g: np.ndarray):
        self.g = np.asarray(g, dtype=float)

    def value(self, x):
        return np.asarray(x) @ self.g

    def grad_dot(self, x, h):
        return np.asarray(h) @ self.g

    def hess_quad(self, x, h1, h2):
        shape = np.broadcast_shapes(np.shape(h1)[:-1], np.shape(h2)[:-1])
        return np.zeros(shape)


class GaussianFunctional(Functional):
    """phi(x) = exp(-||x||^2)."""

    name = "gauss"

    def value(self, x):
        x = np.asarray(x)
        return np.exp(-np.sum(x * x, axis=-1))

    def grad_dot(self, x, h):
        x = np.asarray(x)
        v = np.exp(-np.sum(x * x, axis=-1))
        return -2.0 * v * np.sum(x * h, axis=-1)

    def hess_quad(self, x, h1, h2):
        x = np.asarray(x)
        v = np.exp(-np.sum(x * x, axis=-1))
        return v * (4.0 * np.sum(x * h1, axis=-1) * np.sum(x * h2, axis=-1)
                    - 2.0 * np.sum(h1 * h2, axis=-1))


class SineFunctional(Functional):
    """phi(x) = sin(<g, x>)."""

    name = "sin"

    def __init__(self, g: np.ndarray):
        self.g = np.asarray(g, dtype=float)

    def value(self, x):
        return np.sin(np.asarray(x) @ self.g)

    def grad_dot(self, x, h):
        return np.cos(np.asarray(x) @ self.g) * (np.asarray(h) @ self.g)

    def hess_quad(self, x, h1, h2):
        return (-np.sin(np.asarray(x) @ self.g)
                * (np.asarray(h1) @ self.g) * (np.asarray(h2) @ self.g))


FUNCTIONAL_NAMES = ("linear", "gauss", "sin")


def make_functional(name: str, spectrum: OperatorSpectrum) -> Functional:
    """Built-in functionals keyed by name; g-based ones use a fixed probe."""
    if name == "linear":
        return LinearFunctional(_default_direction(spectrum))
    if name == "gauss":
        return GaussianFunctional()
    if name == "sin":
        return SineFunctional(_default_direction(spectrum))
    raise ParameterError(f"unknown functional {name!r} (choose from {FUNCTIONAL_NAMES})")
