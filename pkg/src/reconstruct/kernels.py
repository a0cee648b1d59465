"""Stationary correlation functions and the matrices built from them.

Inputs are assumed pre-scaled to the unit hypercube; kernels never rescale.
The Gaussian family carries one rate per coordinate, the Matern family a
shared (nu, phi) pair with nu restricted to {1/2, 3/2, 5/2} so that the
modified Bessel function collapses to a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, UnsupportedNu
from .numerics import SpdFactorization, spd_factor

DEFAULT_GAUSSIAN_RATE = 12.5

_SUPPORTED_NU = (0.5, 1.5, 2.5)


@dataclass(frozen=True)
class KernelSpec:
    """A stationary correlation family with its parameters.

    Parameters
    ----------
    family : {"gaussian", "matern"}
    theta : tuple of float, optional
        Per-coordinate decay rates of the Gaussian family,
        R(h) = exp(-sum_j theta_j * h_j**2).
    nu, phi : float, optional
        Smoothness and range of the Matern family, applied as a product
        over coordinates with z = 2*sqrt(nu)*|h_j|/phi.
    """

    family: str
    theta: tuple[float, ...] | None = None
    nu: float | None = None
    phi: float | None = None

    def __post_init__(self):
        if self.family == "gaussian":
            if not self.theta or any(t <= 0 for t in self.theta):
                raise ValueError("gaussian kernel needs strictly positive theta values")
        elif self.family == "matern":
            if self.nu is None or self.phi is None or self.phi <= 0:
                raise ValueError("matern kernel needs nu and a positive phi")
            if self.nu not in _SUPPORTED_NU:
                raise UnsupportedNu(
                    f"matern nu={self.nu} unsupported; choose one of {_SUPPORTED_NU}"
                )
        else:
            raise ValueError(f"unknown kernel family {self.family!r}")

    @property
    def d(self) -> int | None:
        """Input dimension implied by the parameters (None for Matern)."""
        return len(self.theta) if self.family == "gaussian" else None


def gaussian_kernel(theta) -> KernelSpec:
    """Gaussian correlation with per-coordinate rates."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return KernelSpec(family="gaussian", theta=tuple(float(t) for t in theta))


def default_gaussian(d: int) -> KernelSpec:
    """The package default: Gaussian with every rate set to 12.5."""
    return gaussian_kernel(np.full(d, DEFAULT_GAUSSIAN_RATE))


def matern_kernel(nu: float, phi: float) -> KernelSpec:
    """Matern correlation with half-integer smoothness."""
    return KernelSpec(family="matern", nu=float(nu), phi=float(phi))


def _matern_1d(z: np.ndarray, nu: float) -> np.ndarray:
    # closed forms of the half-integer Matern profile; z >= 0
    if nu == 0.5:
        return np.exp(-z)
    if nu == 1.5:
        return (1.0 + z) * np.exp(-z)
    if nu == 2.5:
        return (1.0 + z + z**2 / 3.0) * np.exp(-z)
    raise UnsupportedNu(f"matern nu={nu} unsupported")


def kernel_value(spec: KernelSpec, h) -> float:
    """Correlation R(h) for a single lag vector h."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if spec.family == "gaussian":
        if h.shape[0] != len(spec.theta):
            raise DimensionMismatch(
                f"lag has {h.shape[0]} coordinates, kernel expects {len(spec.theta)}"
            )
        return float(np.exp(-np.sum(np.asarray(spec.theta) * h**2)))
    z = 2.0 * math.sqrt(spec.nu) * np.abs(h) / spec.phi
    return float(np.prod(_matern_1d(z, spec.nu)))


def kernel_matrix(spec: KernelSpec, P, Q) -> np.ndarray:
    """Cross-correlation matrix with entries R(p_i - q_j).

    Parameters
    ----------
    P : (k, d) array
    Q : (l, d) array

    Returns
    -------
    (k, l) array; symmetric with unit diagonal when P is Q.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if P.size == 0 or Q.size == 0:
        raise DimensionMismatch("point sets must be nonempty")
    if P.shape[1] != Q.shape[1]:
        raise DimensionMismatch(
            f"point sets have {P.shape[1]} and {Q.shape[1]} columns"
        )
    d = P.shape[1]
    if spec.family == "gaussian":
        if d != len(spec.theta):
            raise DimensionMismatch(
                f"points have {d} coordinates, kernel expects {len(spec.theta)}"
            )
        acc = np.zeros((P.shape[0], Q.shape[0]))
        for j in range(d):
            acc += spec.theta[j] * (P[:, j, None] - Q[None, :, j]) ** 2
        np.exp(-acc, out=acc)
        return acc
    out = np.ones((P.shape[0], Q.shape[0]))
    c = 2.0 * math.sqrt(spec.nu) / spec.phi
    for j in range(d):
        z = c * np.abs(P[:, j, None] - Q[None, :, j])
        out *= _matern_1d(z, spec.nu)
    return out


def correlation_matrix_factored(spec: KernelSpec, A) -> SpdFactorization:
    """Factorization of the knot correlation matrix, jitter ladder applied."""
    points = getattr(A, "points", A)
    R = kernel_matrix(spec, points, points)
    return spd_factor(R)


def spec_to_json(spec: KernelSpec) -> dict:
    if spec.family == "gaussian":
        return {"family": "gaussian", "theta": [float(t) for t in spec.theta]}
    return {"family": "matern", "nu": float(spec.nu), "phi": float(spec.phi)}


def spec_from_json(obj: dict) -> KernelSpec:
    family = obj.get("family")
    if family == "gaussian":
        return gaussian_kernel(obj["theta"])
    if family == "matern":
        return matern_kernel(obj["nu"], obj["phi"])
    raise ValueError(f"unknown kernel family {family!r}")
