"""Grids, multi-indices and the pointwise algebra of alternating forms.

A rank-q form on an N-dimensional periodic box is stored as a stack of
C(N, q) complex scalar fields, one per strictly increasing multi-index,
in lexicographic multi-index order.  All sign conventions (wedge splits,
Hodge star, coordinate insertion) funnel through the permutation-sign
helpers below so that every operator shares one source of truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

MultiIndex = tuple  # strictly increasing tuple of axis labels in {1, .., N}


# ---------------------------------------------------------------------------
# multi-index bookkeeping and permutation signs
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def multi_indices(dim: int, rank: int) -> tuple:
    """All strictly increasing rank-tuples from {1, .., dim}, lex order.

    Ranks above the dimension have no indices (the zero space), mirroring
    C(dim, rank) = 0; that case shows up for traces of top-rank forms.
    """
    if rank < 0:
        raise ValueError(f"negative rank {rank}")
    return tuple(combinations(range(1, dim + 1), rank))


@lru_cache(maxsize=None)
def _index_positions(dim: int, rank: int) -> dict:
    return {mi: pos for pos, mi in enumerate(multi_indices(dim, rank))}


def index_position(dim: int, mi: MultiIndex) -> int:
    """Position of a multi-index in the lexicographic component order."""
    return _index_positions(dim, len(mi))[tuple(mi)]


def validate_multi_index(mi, dim: int) -> tuple:
    mi = tuple(int(i) for i in mi)
    if any(b <= a for a, b in zip(mi, mi[1:])):
        raise ValueError(f"multi-index {mi} is not strictly increasing")
    if mi and not (1 <= mi[0] and mi[-1] <= dim):
        raise ValueError(f"multi-index {mi} outside 1..{dim}")
    return mi


def n_components(dim: int, rank: int) -> int:
    return math.comb(dim, rank)


def insertion_sign(j: int, mi: MultiIndex) -> int:
    """Sign of dx^j wedged in front of dx^mi, i.e. (-1)^#{i in mi : i < j}."""
    below = sum(1 for i in mi if i < j)
    return -1 if below % 2 else 1


def merge_sign(left: MultiIndex, right: MultiIndex):
    """Merge two disjoint increasing tuples.

    Returns (merged, sign) where sign is the parity of the permutation
    sorting left+right, or None when the tuples overlap.
    """
    if set(left) & set(right):
        return None
    inversions = sum(1 for a in left for b in right if a > b)
    merged = tuple(sorted(left + right))
    return merged, (-1 if inversions % 2 else 1)


def complement_index(mi: MultiIndex, dim: int) -> tuple:
    others = [i for i in range(1, dim + 1) if i not in mi]
    return tuple(others)


def star_sign(mi: MultiIndex, dim: int) -> int:
    """Sign of the permutation (mi, complement) of (1, .., dim)."""
    merged = merge_sign(tuple(mi), complement_index(mi, dim))
    return merged[1]


# ---------------------------------------------------------------------------
# grid geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic box [-L, L)^N with n points per axis."""

    dim: int
    half_length: float
    points: int
    periodic: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.half_length <= 0:
            raise ValueError("half-length must be positive")
        if self.points < 2 or self.points % 2:
            raise ValueError("points per axis must be even and >= 2")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.points

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    def axis_coords(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.points)

    def coord_field(self, axis: int) -> np.ndarray:
        """Coordinate x_axis broadcastable over the grid (axis is 1-based)."""
        shape = [1] * self.dim
        shape[axis - 1] = self.points
        return self.axis_coords().reshape(shape)

    def coord_fields(self) -> tuple:
        return tuple(self.coord_field(j) for j in range(1, self.dim + 1))

    def axis_freqs(self) -> np.ndarray:
        """Derivative frequencies pi*k/L with the Nyquist entry zeroed."""
        xi = 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)
        xi[self.points // 2] = 0.0
        return xi

    def freq_field(self, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis - 1] = self.points
        return self.axis_freqs().reshape(shape)

    def freq_fields(self) -> tuple:
        return tuple(self.freq_field(j) for j in range(1, self.dim + 1))

    def radius_sq(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for c in self.coord_fields():
            r2 = r2 + c * c
        return r2

    def freq_radius_sq(self) -> np.ndarray:
        r2 = np.zeros(self.shape)
        for c in self.freq_fields():
            r2 = r2 + c * c
        return r2


@dataclass(frozen=True)
class Region:
    """Sub-region of a grid: full box, ball, lower half-space or annulus."""

    grid: GridSpec
    kind: str
    radius: float = 0.0
    outer_radius: float = 0.0

    KINDS = ("full", "ball", "halfspace_lower", "annulus")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown region kind {self.kind!r}")
        if self.kind == "ball" and self.radius <= 0:
            raise ValueError("ball region needs a positive radius")
        if self.kind == "annulus" and not 0 <= self.radius < self.outer_radius:
            raise ValueError("annulus needs 0 <= inner < outer radius")

    def mask(self) -> np.ndarray:
        if self.kind == "full":
            return np.ones(self.grid.shape, dtype=bool)
        if self.kind == "halfspace_lower":
            xn = self.grid.coord_field(self.grid.dim)
            return np.broadcast_to(xn < 0, self.grid.shape)
        r2 = self.grid.radius_sq()
        if self.kind == "ball":
            return r2 < self.radius ** 2
        return (self.radius ** 2 < r2) & (r2 < self.outer_radius ** 2)


# ---------------------------------------------------------------------------
# form fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FormField:
    """Rank-q alternating form sampled on a grid (complex components).

    ``data`` has shape (C(N, q), n, .., n); component ``k`` belongs to the
    k-th multi-index of ``multi_indices(N, q)``.  ``spectral`` marks fields
    living on the discrete frequency grid instead of the position grid.
    """

    grid: GridSpec
    rank: int
    data: np.ndarray = field(repr=False)
    spectral: bool = False

    def __post_init__(self):
        nc = n_components(self.grid.dim, self.rank)
        expected = (nc,) + self.grid.shape
        if self.data.shape != expected:
            raise ValueError(f"component array has shape {self.data.shape}, "
                             f"expected {expected}")
        if self.data.dtype != np.complex128:
            object.__setattr__(self, "data",
                               np.ascontiguousarray(self.data, np.complex128))
        self.data.flags.writeable = False

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, grid: GridSpec, rank: int, spectral: bool = False) -> "FormField":
        nc = n_components(grid.dim, rank)
        return cls(grid, rank, np.zeros((nc,) + grid.shape, np.complex128), spectral)

    @classmethod
    def from_components(cls, grid: GridSpec, rank: int, comps: dict,
                        spectral: bool = False) -> "FormField":
        """Build from a {multi-index: scalar field} mapping; missing = 0."""
        out = np.zeros((n_components(grid.dim, rank),) + grid.shape, np.complex128)
        for mi, values in comps.items():
            mi = validate_multi_index(mi, grid.dim)
            if len(mi) != rank:
                raise ValueError(f"multi-index {mi} has wrong length for rank {rank}")
            out[index_position(grid.dim, mi)] = np.broadcast_to(values, grid.shape)
        return cls(grid, rank, out, spectral)

    # -- accessors ----------------------------------------------------------

    @property
    def indices(self) -> tuple:
        return multi_indices(self.grid.dim, self.rank)

    def component(self, mi: MultiIndex) -> np.ndarray:
        return self.data[index_position(self.grid.dim, tuple(mi))]

    def with_data(self, data: np.ndarray, rank=None, spectral=None) -> "FormField":
        return FormField(self.grid,
                         self.rank if rank is None else rank,
                         data,
                         self.spectral if spectral is None else spectral)

    # -- linear structure ---------------------------------------------------

    def __add__(self, other: "FormField") -> "FormField":
        _check_compatible(self, other)
        return self.with_data(self.data + other.data)

    def __sub__(self, other: "FormField") -> "FormField":
        _check_compatible(self, other)
        return self.with_data(self.data - other.data)

    def __mul__(self, factor) -> "FormField":
        return self.with_data(self.data * factor)

    __rmul__ = __mul__

    def __neg__(self) -> "FormField":
        return self.with_data(-self.data)

    def scale_pointwise(self, weight: np.ndarray) -> "FormField":
        """Multiply every component by a scalar field on the grid."""
        return self.with_data(self.data * weight)


def _check_compatible(a: FormField, b: FormField, same_rank: bool = True):
    if a.grid != b.grid:
        raise ValueError("grid mismatch between form fields")
    if a.spectral != b.spectral:
        raise ValueError("cannot mix position-space and frequency-space fields")
    if same_rank and a.rank != b.rank:
        raise ValueError(f"rank mismatch: {a.rank} vs {b.rank}")


# ---------------------------------------------------------------------------
# pointwise operator algebra
# ---------------------------------------------------------------------------

def wedge(e: FormField, f: FormField) -> FormField:
    """Exterior product of a rank-p and a rank-q form.

    Splits of each output index are accumulated in a canonical order that
    pairs the two orientations of equal-size splits, which makes the graded
    anticommutation rule hold exactly in floating point.
    """
    _check_compatible(e, f, same_rank=False)
    p, q = e.rank, f.rank
    dim = e.grid.dim
    if p + q > dim:
        raise ValueError(f"rank overflow: {p} + {q} > {dim}")
    out = np.zeros((n_components(dim, p + q),) + e.grid.shape, np.complex128)
    for k_pos, k_mi in enumerate(multi_indices(dim, p + q)):
        acc = out[k_pos]
        if p < q:
            for d_mi in combinations(k_mi, p):
                rest = tuple(i for i in k_mi if i not in d_mi)
                _, sign = merge_sign(d_mi, rest)
                acc += sign * (e.component(d_mi) * f.component(rest))
        elif q < p:
            for d_mi in combinations(k_mi, q):
                rest = tuple(i for i in k_mi if i not in d_mi)
                _, sign = merge_sign(rest, d_mi)
                acc += sign * (e.component(rest) * f.component(d_mi))
        else:
            if p == 0:
                acc += e.data[0] * f.data[0]
                continue
            low = k_mi[0]
            for d_mi in combinations(k_mi, p):
                if low not in d_mi:
                    continue
                rest = tuple(i for i in k_mi if i not in d_mi)
                _, sign = merge_sign(d_mi, rest)
                term = sign * (e.component(d_mi) * f.component(rest))
                if rest:
                    _, csign = merge_sign(rest, d_mi)
                    term = term + csign * (e.component(rest) * f.component(d_mi))
                acc += term
    return FormField(e.grid, p + q, out, e.spectral)


def hodge_star(e: FormField) -> FormField:
    """Euclidean Hodge star: (star E)_{I^c} = sign(I, I^c) E_I."""
    dim = e.grid.dim
    out = np.empty((n_components(dim, dim - e.rank),) + e.grid.shape, np.complex128)
    for mi in multi_indices(dim, e.rank):
        comp = complement_index(mi, dim)
        out[index_position(dim, comp)] = star_sign(mi, dim) * e.component(mi)
    return FormField(e.grid, dim - e.rank, out, e.spectral)


def _coordinate_fields(grid: GridSpec, coords: str) -> tuple:
    if coords == "position":
        return grid.coord_fields()
    if coords == "frequency":
        return grid.freq_fields()
    raise ValueError(f"coords must be 'position' or 'frequency', got {coords!r}")


def default_coords(e: FormField) -> str:
    return "frequency" if e.spectral else "position"


def apply_R(e: FormField, coords: str | None = None) -> FormField:
    """Multiplication operator sum_n c_n dx^n wedge E with c the coordinates."""
    if coords is None:
        coords = default_coords(e)
    dim = e.grid.dim
    if e.rank >= dim:
        raise ValueError("rank overflow: R on a top-rank form")
    cfields = _coordinate_fields(e.grid, coords)
    out = np.zeros((n_components(dim, e.rank + 1),) + e.grid.shape, np.complex128)
    for mi in multi_indices(dim, e.rank):
        comp = e.component(mi)
        for n in range(1, dim + 1):
            if n in mi:
                continue
            merged, sign = merge_sign((n,), mi)
            out[index_position(dim, merged)] += sign * (cfields[n - 1] * comp)
    return FormField(e.grid, e.rank + 1, out, e.spectral)


def apply_T(e: FormField, coords: str | None = None) -> FormField:
    """Star-dual of R on rank-q forms: (-1)^((q-1) N) star R star."""
    if e.rank < 1:
        raise ValueError("rank underflow: T on a rank-0 form")
    dim = e.grid.dim
    sign = -1 if ((e.rank - 1) * dim) % 2 else 1
    result = hodge_star(apply_R(hodge_star(e), coords))
    return result if sign == 1 else -result


def split_tangential_normal(e: FormField) -> tuple:
    """Pointwise orthogonal split by whether the last axis is in the index."""
    dim = e.grid.dim
    tau = np.array(e.data, copy=True)
    rho = np.array(e.data, copy=True)
    for pos, mi in enumerate(multi_indices(dim, e.rank)):
        if dim in mi:
            tau[pos] = 0.0
        else:
            rho[pos] = 0.0
    return e.with_data(tau), e.with_data(rho)


# ---------------------------------------------------------------------------
# inner products
# ---------------------------------------------------------------------------

def l2_inner(e: FormField, h: FormField, weight_exponent: float = 0.0) -> complex:
    """Grid quadrature of rho^(2s) sum_I E_I conj(H_I).

    The periodic box uses the plain sum times h^N, exact for band-limited
    integrands.  Polynomial weights apply to position-space fields only.
    """
    _check_compatible(e, h)
    if weight_exponent == 0.0:
        total = np.vdot(h.data, e.data)  # conjugates the second argument
    else:
        if e.spectral:
            raise ValueError("polynomial weights apply to position-space fields")
        w = (1.0 + e.grid.radius_sq()) ** weight_exponent
        total = np.sum(w * (e.data * np.conj(h.data)))
    return complex(total * e.grid.cell_volume)


def norm(e: FormField, weight_exponent: float = 0.0) -> float:
    return math.sqrt(max(l2_inner(e, e, weight_exponent).real, 0.0))


def fiber_inner(e: FormField, h: FormField) -> np.ndarray:
    """Pointwise scalar product sum_I E_I conj(H_I) as a field."""
    _check_compatible(e, h)
    return np.sum(e.data * np.conj(h.data), axis=0)
