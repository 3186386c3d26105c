"""Closed-form covariance kernels of the three architectures.

Each kernel splits exactly as ``K = K_b + K_W`` with a constant bias part
``K_b = sigma_b_sq`` and a weight part ``K_W``; only ``K_W`` ever enters
interaction integrals.  These kernels equal the ensemble 2-pt function at
every width, not just asymptotically, which the sampling tests verify by
Monte Carlo.

All evaluators broadcast: the two arguments may be single points of shape
``(d_in,)`` or stacks ``(..., d_in)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ArchitectureSpec, InputGrid
from .errors import DegenerateInputError, KernelDomainError

#: How far outside [-1, 1] an inverse-trig argument may stray before it is
#: treated as a genuine domain violation rather than roundoff.
CLAMP_TOL = 1e-9


def _points(x, d_in: int) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 0:
        if d_in != 1:
            raise KernelDomainError(f"scalar input given but d_in={d_in}")
        arr = arr.reshape(1)
    if arr.shape[-1] != d_in:
        raise KernelDomainError(f"point dimension {arr.shape[-1]} != d_in {d_in}")
    return arr


def _dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * b, axis=-1)


def _clamp(arg: np.ndarray, what: str) -> np.ndarray:
    worst = float(np.max(np.abs(arg))) if arg.size else 0.0
    if worst > 1.0 + CLAMP_TOL:
        raise KernelDomainError(
            f"{what} argument {worst} outside [-1, 1] beyond tolerance {CLAMP_TOL}"
        )
    return np.clip(arg, -1.0, 1.0)


def kernel_w_erf(x, xp, spec: ArchitectureSpec):
    x = _points(x, spec.d_in)
    xp = _points(xp, spec.d_in)
    c = spec.sigma_w_sq / spec.d_in
    sb = spec.sigma_b_sq
    num = 2.0 * (sb + c * _dot(x, xp))
    den = np.sqrt((1.0 + 2.0 * (sb + c * _dot(x, x))) * (1.0 + 2.0 * (sb + c * _dot(xp, xp))))
    arg = _clamp(num / den, "arcsin")
    return spec.sigma_w_sq * (2.0 / math.pi) * np.arcsin(arg)


def kernel_w_relu(x, xp, spec: ArchitectureSpec):
    x = _points(x, spec.d_in)
    xp = _points(xp, spec.d_in)
    c = spec.sigma_w_sq / spec.d_in
    sb = spec.sigma_b_sq
    k_xx = sb + c * _dot(x, x)
    k_pp = sb + c * _dot(xp, xp)
    if np.any(k_xx <= 0) or np.any(k_pp <= 0):
        raise DegenerateInputError("relu kernel undefined where the first-layer variance vanishes")
    norm = np.sqrt(k_xx * k_pp)
    cos = _clamp((sb + c * _dot(x, xp)) / norm, "arccos")
    theta = np.arccos(cos)
    angular = np.sin(theta) + (math.pi - theta) * np.cos(theta)
    # anti-aligned inputs: the angular factor vanishes identically, but
    # sin(arccos(-1)) leaves roundoff behind
    angular = np.where(cos == -1.0, 0.0, angular)
    return spec.sigma_w_sq / (2.0 * math.pi) * norm * angular


def kernel_w_gauss(x, xp, spec: ArchitectureSpec):
    x = _points(x, spec.d_in)
    xp = _points(xp, spec.d_in)
    d2 = _dot(x - xp, x - xp)
    return spec.sigma_w_sq * np.exp(-spec.sigma_w_sq * d2 / (2.0 * spec.d_in))


_KERNEL_W = {"erf": kernel_w_erf, "relu": kernel_w_relu, "gauss": kernel_w_gauss}


def kernel_w(x, xp, spec: ArchitectureSpec):
    """Weight part of the kernel, K_W = K - sigma_b_sq."""
    return _KERNEL_W[spec.activation](x, xp, spec)


def kernel_erf(x, xp, spec: ArchitectureSpec):
    return spec.sigma_b_sq + kernel_w_erf(x, xp, spec)


def kernel_relu(x, xp, spec: ArchitectureSpec):
    return spec.sigma_b_sq + kernel_w_relu(x, xp, spec)


def kernel_gauss(x, xp, spec: ArchitectureSpec):
    return spec.sigma_b_sq + kernel_w_gauss(x, xp, spec)


def kernel(x, xp, spec: ArchitectureSpec):
    """Full kernel K(x, x') for the spec's activation."""
    return spec.sigma_b_sq + kernel_w(x, xp, spec)


@dataclass(frozen=True)
class KernelModel:
    """Kernel of one architecture with its bias/weight decomposition."""

    spec: ArchitectureSpec

    @property
    def k_b(self) -> float:
        return self.spec.sigma_b_sq

    def k(self, x, xp):
        return kernel(x, xp, self.spec)

    def k_w(self, x, xp):
        return kernel_w(x, xp, self.spec)

    def gram(self, grid: InputGrid) -> np.ndarray:
        """Full-kernel Gram matrix over a grid."""
        pts = grid.points
        return np.asarray(self.k(pts[:, None, :], pts[None, :, :]), dtype=np.float64)

    def gram_w(self, grid: InputGrid) -> np.ndarray:
        pts = grid.points
        return np.asarray(self.k_w(pts[:, None, :], pts[None, :, :]), dtype=np.float64)

    def k_w_grid(self, grid: InputGrid, ys: np.ndarray) -> np.ndarray:
        """K_W between every grid point and every row of ``ys``; shape (g, m)."""
        pts = grid.points
        return np.asarray(self.k_w(pts[:, None, :], ys[None, :, :]), dtype=np.float64)


def kernel_model(spec: ArchitectureSpec) -> KernelModel:
    if spec.activation not in _KERNEL_W:
        raise KernelDomainError(f"no kernel for activation {spec.activation!r}")
    return KernelModel(spec=spec)
