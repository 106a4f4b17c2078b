"""Polynomially weighted Sobolev and graph norms.

Two scales share one weight rho = (1 + r^2)^(1/2): the plain scale uses
rho^s for every derivative order, the stronger scale raises the exponent
by one per derivative.  Partial derivatives are spectral; the weight is
applied in position space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .fields import FormField, norm
from .spectral import coderivative_delta, exterior_d, fourier, fourier_inverse

DEFAULT_MAX_ORDER = 3

ROMAN = "roman"   # weight rho^s for all |alpha| <= m
BOLD = "bold"     # weight rho^(s+|alpha|)


def rho(grid) -> np.ndarray:
    """(1 + |x|^2)^(1/2) on the grid, >= 1 everywhere."""
    return np.sqrt(1.0 + grid.radius_sq())


def rho_power(grid, exponent: float) -> np.ndarray:
    return (1.0 + grid.radius_sq()) ** (exponent / 2.0)


@dataclass(frozen=True)
class NormSpec:
    """Order m, weight exponent s and scale selector for weighted norms."""

    order: int
    weight: float
    scale: str = ROMAN

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("derivative order must be >= 0")
        if self.scale not in (ROMAN, BOLD):
            raise ValueError(f"scale must be '{ROMAN}' or '{BOLD}'")

    def exponent(self, alpha_order: int) -> float:
        return self.weight + alpha_order if self.scale == BOLD else self.weight


def _derivative_orders(dim: int, max_order: int):
    for alpha in product(range(max_order + 1), repeat=dim):
        if sum(alpha) <= max_order:
            yield alpha


def weighted_sobolev_norm(e: FormField, spec: NormSpec,
                          max_order: int = DEFAULT_MAX_ORDER) -> float:
    """sqrt of sum over |alpha| <= m of ||rho^w(alpha) d^alpha E||^2."""
    if e.spectral:
        raise ValueError("weighted norms act on position-space fields")
    if spec.order > max_order:
        raise ValueError(
            f"derivative order m={spec.order} exceeds the supported band-limit "
            f"order {max_order}; raise max_order explicitly if the grid resolves it")
    hat = fourier(e)
    freqs = e.grid.freq_fields()
    total = 0.0
    for alpha in _derivative_orders(e.grid.dim, spec.order):
        k = sum(alpha)
        symbol = np.ones((), np.complex128)
        for ax, a in enumerate(alpha):
            if a:
                symbol = symbol * (1j * freqs[ax]) ** a
        if k == 0:
            deriv = e
        else:
            deriv = fourier_inverse(hat.with_data(symbol * hat.data))
        total += norm(deriv, spec.exponent(k)) ** 2
    return math.sqrt(total)


def graph_norm(e: FormField, kind: str, weight: float, scale: str = ROMAN,
               eps=None) -> float:
    """Graph norm of the d- or delta-type weighted space.

    kind "D": sqrt(||E||_{L_s}^2 + ||dE||^2) with the derivative weighted
    by s (plain scale) or s+1 (strong scale).  kind "Delta" uses
    delta(eps E) instead of dE.
    """
    if kind not in ("D", "Delta"):
        raise ValueError("kind must be 'D' or 'Delta'")
    if scale not in (ROMAN, BOLD):
        raise ValueError(f"scale must be '{ROMAN}' or '{BOLD}'")
    d_weight = weight + 1 if scale == BOLD else weight
    base = norm(e, weight) ** 2
    if kind == "D":
        if e.rank >= e.grid.dim:
            raise ValueError("D-type graph norm needs rank < N")
        deriv = exterior_d(e)
    else:
        if e.rank < 1:
            raise ValueError("Delta-type graph norm needs rank >= 1")
        inner = e if eps is None else eps.apply(e)
        deriv = coderivative_delta(inner)
    return math.sqrt(base + norm(deriv, d_weight) ** 2)


def annulus_split_bound(f: FormField, weight: float, tau: float,
                        theta: float) -> dict:
    """Numbers entering the annulus splitting estimate.

    The left side is ||F||^2 with weight exponent s+1-tau; the right side
    is c_theta ||F||_s^2 + (1+theta^2)^(-tau) ||F||_{s+1}^2 where c_theta
    bounds (1+r^2)^(1-tau) on the inner ball.
    """
    if tau <= 0:
        raise ValueError("annulus splitting requires tau > 0")
    c_theta = max((1.0 + theta ** 2) ** (1.0 - tau), 1.0)
    lhs = norm(f, weight + 1.0 - tau) ** 2
    rhs = c_theta * norm(f, weight) ** 2 \
        + (1.0 + theta ** 2) ** (-tau) * norm(f, weight + 1.0) ** 2
    return {"lhs": lhs, "rhs": rhs, "c_theta": c_theta,
            "theta": theta, "tau": tau, "holds": bool(lhs <= rhs * (1 + 1e-12))}
