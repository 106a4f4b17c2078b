"""Manufactured form fields with closed-form derivatives.

Components come in three families, each closed under differentiation or
explicitly derivative-limited: trigonometric polynomials (band-limited,
spectrally exact), polynomial-times-Gaussian bumps (analytic, any
derivative order via the polynomial recurrence) and the classical
compactly supported radial bump (value and first partials).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iter_product

import numpy as np

from .fields import (FormField, GridSpec, Region, insertion_sign,
                     multi_indices, n_components)

BAND_LIMIT_FRACTION = 4  # random band-limited fields use |k| <= n/4


# ---------------------------------------------------------------------------
# component families
# ---------------------------------------------------------------------------

class TrigPoly:
    """Finite Fourier sum  sum_k c_k exp(i pi k.x / L)  on the box."""

    def __init__(self, dim: int, half_length: float, coeffs: dict):
        self.dim = dim
        self.half_length = half_length
        self.coeffs = {tuple(k): complex(c) for k, c in coeffs.items() if c != 0}

    def eval(self, grid: GridSpec) -> np.ndarray:
        if grid.dim != self.dim or grid.half_length != self.half_length:
            raise ValueError("grid does not match the component geometry")
        out = np.zeros(grid.shape, np.complex128)
        coords = grid.coord_fields()
        for k, c in sorted(self.coeffs.items()):
            phase = np.zeros(grid.shape)
            for ax, kj in enumerate(k):
                if kj:
                    phase = phase + kj * coords[ax]
            out += c * np.exp(1j * np.pi / self.half_length * phase)
        return out

    def partial(self, axis: int) -> "TrigPoly":
        factor = 1j * np.pi / self.half_length
        return TrigPoly(self.dim, self.half_length,
                        {k: c * factor * k[axis - 1]
                         for k, c in self.coeffs.items()})

    def scaled(self, factor: complex) -> "TrigPoly":
        return TrigPoly(self.dim, self.half_length,
                        {k: c * factor for k, c in self.coeffs.items()})

    def max_mode(self) -> int:
        return max((max(abs(kj) for kj in k) for k in self.coeffs), default=0)


class PolyGauss:
    """Multivariate polynomial times exp(-decay |x - center|^2)."""

    def __init__(self, dim: int, decay: float, center: tuple, poly: dict):
        self.dim = dim
        self.decay = float(decay)
        self.center = tuple(center)
        self.poly = {tuple(a): complex(c) for a, c in poly.items() if c != 0}

    def eval(self, grid: GridSpec) -> np.ndarray:
        coords = [c - c0 for c, c0 in zip(grid.coord_fields(), self.center)]
        r2 = np.zeros(grid.shape)
        for c in coords:
            r2 = r2 + c * c
        envelope = np.exp(-self.decay * r2)
        out = np.zeros(grid.shape, np.complex128)
        for alpha, c in sorted(self.poly.items()):
            term = np.full(grid.shape, c)
            for ax, a in enumerate(alpha):
                if a:
                    term = term * coords[ax] ** a
            out += term
        return out * envelope

    def partial(self, axis: int) -> "PolyGauss":
        ax = axis - 1
        new = {}
        for alpha, c in self.poly.items():
            if alpha[ax] > 0:
                down = list(alpha)
                down[ax] -= 1
                key = tuple(down)
                new[key] = new.get(key, 0.0) + c * alpha[ax]
            up = list(alpha)
            up[ax] += 1
            key = tuple(up)
            new[key] = new.get(key, 0.0) - 2.0 * self.decay * c
        return PolyGauss(self.dim, self.decay, self.center, new)

    def scaled(self, factor: complex) -> "PolyGauss":
        return PolyGauss(self.dim, self.decay, self.center,
                         {a: c * factor for a, c in self.poly.items()})


class RadialBump:
    """amplitude * exp(1 - 1/(1 - (r/radius)^2)) inside the ball, 0 outside.

    Vanishes identically (true zeros on grid nodes) outside the ball and
    with all derivatives at its edge; differentiable here only to first
    order (sufficient for d/delta of bump-built forms).
    """

    def __init__(self, dim: int, radius: float, amplitude: complex = 1.0,
                 gradient_axis: int = 0, center: tuple | None = None):
        self.dim = dim
        self.radius = float(radius)
        self.amplitude = complex(amplitude)
        self.gradient_axis = gradient_axis  # 0 = plain bump, j>0 = d_j bump
        self.center = tuple(center) if center is not None else (0.0,) * dim

    def _base(self, grid: GridSpec):
        r2 = np.zeros(grid.shape)
        for c, c0 in zip(grid.coord_fields(), self.center):
            r2 = r2 + (c - c0) ** 2
        u = r2 / self.radius ** 2
        inside = u < 1.0
        safe = np.where(inside, 1.0 - u, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            values = np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)
        return values, u, inside

    def eval(self, grid: GridSpec) -> np.ndarray:
        values, u, inside = self._base(grid)
        if self.gradient_axis == 0:
            return self.amplitude * values.astype(np.complex128)
        x = np.broadcast_to(grid.coord_field(self.gradient_axis)
                            - self.center[self.gradient_axis - 1], grid.shape)
        safe = np.where(inside, (1.0 - u) ** 2, 1.0)
        deriv = np.where(inside,
                         -2.0 * x / self.radius ** 2 / safe * values, 0.0)
        return self.amplitude * deriv.astype(np.complex128)

    def partial(self, axis: int) -> "RadialBump":
        if self.gradient_axis != 0:
            raise NotImplementedError("radial bump supports first derivatives "
                                      "only; use Gaussian bumps for higher order")
        return RadialBump(self.dim, self.radius, self.amplitude, axis,
                          self.center)

    def scaled(self, factor: complex) -> "RadialBump":
        return RadialBump(self.dim, self.radius, self.amplitude * factor,
                          self.gradient_axis, self.center)


class ComponentSum:
    """Formal sum of components of one family (or mixed)."""

    def __init__(self, terms):
        self.terms = [t for t in terms if t is not None]

    def eval(self, grid: GridSpec) -> np.ndarray:
        out = np.zeros(grid.shape, np.complex128)
        for t in self.terms:
            out += t.eval(grid)
        return out

    def partial(self, axis: int) -> "ComponentSum":
        return ComponentSum([t.partial(axis) for t in self.terms])

    def scaled(self, factor: complex) -> "ComponentSum":
        return ComponentSum([t.scaled(factor) for t in self.terms])


# ---------------------------------------------------------------------------
# manufactured forms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManufacturedForm:
    """Form whose components carry their own closed-form calculus."""

    grid: GridSpec
    rank: int
    comps: dict = field(repr=False)   # multi-index -> component object

    def field(self) -> FormField:
        data = np.zeros((n_components(self.grid.dim, self.rank),)
                        + self.grid.shape, np.complex128)
        for pos, mi in enumerate(multi_indices(self.grid.dim, self.rank)):
            comp = self.comps.get(mi)
            if comp is not None:
                data[pos] = comp.eval(self.grid)
        return FormField(self.grid, self.rank, data)

    def partial(self, axis: int) -> "ManufacturedForm":
        return ManufacturedForm(self.grid, self.rank,
                                {mi: c.partial(axis)
                                 for mi, c in self.comps.items()})

    def partials(self) -> dict:
        return {j: self.partial(j).field()
                for j in range(1, self.grid.dim + 1)}

    def d(self) -> "ManufacturedForm":
        """Closed-form exterior derivative."""
        if self.rank >= self.grid.dim:
            raise ValueError("rank overflow")
        parts = {j: self.partial(j) for j in range(1, self.grid.dim + 1)}
        out = {}
        for k_mi in multi_indices(self.grid.dim, self.rank + 1):
            terms = []
            for j in k_mi:
                rest = tuple(i for i in k_mi if i != j)
                comp = parts[j].comps.get(rest)
                if comp is not None:
                    terms.append(comp.scaled(insertion_sign(j, rest)))
            if terms:
                out[k_mi] = ComponentSum(terms)
        return ManufacturedForm(self.grid, self.rank + 1, out)

    def delta(self) -> "ManufacturedForm":
        """Closed-form co-derivative."""
        if self.rank < 1:
            raise ValueError("rank underflow")
        parts = {j: self.partial(j) for j in range(1, self.grid.dim + 1)}
        out = {}
        for j_mi in multi_indices(self.grid.dim, self.rank - 1):
            terms = []
            for j in range(1, self.grid.dim + 1):
                if j in j_mi:
                    continue
                merged = tuple(sorted(j_mi + (j,)))
                comp = parts[j].comps.get(merged)
                if comp is not None:
                    terms.append(comp.scaled(insertion_sign(j, j_mi)))
            if terms:
                out[j_mi] = ComponentSum(terms)
        return ManufacturedForm(self.grid, self.rank - 1, out)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _check_support(grid: GridSpec, support: Region):
    if support.kind == "ball" and support.radius > grid.half_length / 2:
        raise ValueError(f"support radius {support.radius} exceeds the inner "
                         f"half of the box (L/2 = {grid.half_length / 2}); "
                         "wrap-around would pollute the samples")


def generate_manufactured(kind: str, grid: GridSpec, rank: int,
                          support: Region | None = None,
                          seed: int = 0, index: int = 0) -> ManufacturedForm:
    """Manufactured test forms: bump, band-limited-random or trig-catalog."""
    support = support or Region(grid, "full")
    if kind == "bump":
        _check_support(grid, support)
        radius = support.radius if support.kind == "ball" else grid.half_length / 2
        rng = np.random.default_rng(seed)
        comps = {}
        for mi in multi_indices(grid.dim, rank):
            amp = complex(round(rng.uniform(-1.0, 1.0), 6))
            comps[mi] = RadialBump(grid.dim, radius, amp)
        return ManufacturedForm(grid, rank, comps)
    if kind == "band-limited-random":
        kmax = max(grid.points // BAND_LIMIT_FRACTION, 1)
        rng = np.random.default_rng(seed)
        comps = {}
        for mi in multi_indices(grid.dim, rank):
            comps[mi] = _random_trig(grid, rng, kmax, terms=6)
        return ManufacturedForm(grid, rank, comps)
    if kind == "trig-catalog":
        return trig_catalog_entry(grid, rank, index)
    raise ValueError(f"unknown manufactured kind {kind!r}")


def _random_trig(grid: GridSpec, rng, kmax: int, terms: int) -> TrigPoly:
    coeffs = {}
    for _ in range(terms):
        k = tuple(int(rng.integers(-kmax, kmax + 1)) for _ in range(grid.dim))
        c = complex(rng.standard_normal(), rng.standard_normal())
        coeffs[k] = coeffs.get(k, 0.0) + c
        kneg = tuple(-kj for kj in k)
        coeffs[kneg] = coeffs.get(kneg, 0.0) + np.conj(c)  # keep it real
    return TrigPoly(grid.dim, grid.half_length, coeffs)


def trig_catalog_entry(grid: GridSpec, rank: int, index: int) -> ManufacturedForm:
    """Small deterministic catalog of band-limited forms with known calculus."""
    comps = {}
    for pos, mi in enumerate(multi_indices(grid.dim, rank)):
        k1 = [0] * grid.dim
        k1[(pos + index) % grid.dim] = 1 + (index % 2)
        k2 = [0] * grid.dim
        k2[(pos + index + 1) % grid.dim] = 1
        amp = 1.0 / (1.0 + index + pos)
        neg1 = tuple(-v for v in k1)
        neg2 = tuple(-v for v in k2)
        coeffs = {tuple(k1): 0.5 * amp, neg1: 0.5 * amp,
                  tuple(k2): -0.5j * amp, neg2: 0.5j * amp}
        comps[mi] = TrigPoly(grid.dim, grid.half_length, coeffs)
    return ManufacturedForm(grid, rank, comps)


def gaussian_form(grid: GridSpec, rank: int, seed: int, decay: float = 3.0,
                  poly_degree: int = 1,
                  center: tuple | None = None) -> ManufacturedForm:
    """Random polynomial-times-Gaussian form, analytic to every order."""
    rng = np.random.default_rng(seed)
    center = center if center is not None else (0.0,) * grid.dim
    comps = {}
    for mi in multi_indices(grid.dim, rank):
        poly = {}
        for alpha in iter_product(range(poly_degree + 1), repeat=grid.dim):
            if sum(alpha) <= poly_degree:
                poly[alpha] = complex(round(rng.uniform(-1, 1), 6))
        comps[mi] = PolyGauss(grid.dim, decay, center, poly)
    return ManufacturedForm(grid, rank, comps)


def random_dense_media(grid: GridSpec, rank: int, seed: int,
                       amplitude: float = 0.4, kmax: int = 2):
    """Random admissible dense media with band-limited smooth entries.

    Entries are real trigonometric polynomials, so spectral entry
    derivatives are exact; symmetry is built in and the amplitude keeps
    the perturbation safely positive definite.
    """
    from .media import DECAY_NONE, make_transformation
    rng = np.random.default_rng(seed)
    nc = n_components(grid.dim, rank)
    polys = {}
    for i in range(nc):
        for j in range(i, nc):
            polys[(i, j)] = _random_trig(grid, rng, kmax, terms=3)
    scale = amplitude / nc
    hat = np.zeros((nc, nc) + grid.shape)
    partials = {ax: np.zeros((nc, nc) + grid.shape)
                for ax in range(1, grid.dim + 1)}
    for (i, j), poly in polys.items():
        values = poly.eval(grid).real
        peak = max(float(np.abs(values).max()), 1e-300)
        hat[i, j] = hat[j, i] = scale * values / peak
        for ax in range(1, grid.dim + 1):
            dval = poly.partial(ax).eval(grid).real
            partials[ax][i, j] = partials[ax][j, i] = scale * dval / peak
    return make_transformation(grid, rank, "dense", hat=hat,
                               decay_kind=DECAY_NONE, smoothness=1,
                               hat_partials=partials)


# ---------------------------------------------------------------------------
# fast array-space random fields
# ---------------------------------------------------------------------------

def random_band_limited(grid: GridSpec, rank: int, seed: int,
                        kmax: int | None = None, real: bool = True) -> FormField:
    """Seeded band-limited random field, grid-independent as a function.

    The Fourier coefficients live on the fixed index cube |k|_inf <= kmax
    drawn from the seed alone, so refining the grid reproduces the same
    continuum field.
    """
    if kmax is None:
        kmax = max(grid.points // BAND_LIMIT_FRACTION, 1)
    if kmax >= grid.points // 2:
        raise ValueError("band limit exceeds the grid Nyquist index")
    rng = np.random.default_rng(seed)
    nc = n_components(grid.dim, rank)
    side = 2 * kmax + 1
    cube = rng.standard_normal((nc,) + (side,) * grid.dim) \
        + 1j * rng.standard_normal((nc,) + (side,) * grid.dim)
    data = np.zeros((nc,) + grid.shape, np.complex128)
    n = grid.points
    scale = grid.points ** (grid.dim / 2.0)
    offsets = np.arange(-kmax, kmax + 1)
    target = np.ix_(*([offsets % n] * grid.dim))
    phase_1d = (-1.0) ** np.abs(offsets)
    phases = phase_1d
    for _ in range(grid.dim - 1):
        phases = np.multiply.outer(phases, phase_1d)
    for c in range(nc):
        data[c][target] = scale * phases * cube[c]
    field_ = FormField(grid, rank, np.fft.ifftn(data, axes=tuple(range(1, grid.dim + 1)),
                                                norm="ortho"))
    if real:
        field_ = field_.with_data(field_.data.real.astype(np.complex128))
    return field_


def random_dyadic(grid: GridSpec, rank: int, seed: int,
                  bits: int = 16) -> FormField:
    """Random integer-valued field: floating-point arithmetic on it is exact.

    Used by the exactness tests of the operator algebra; the identities
    under test are algebraic, and integer data keeps every product and sum
    inside the 53-bit mantissa.
    """
    rng = np.random.default_rng(seed)
    nc = n_components(grid.dim, rank)
    lo, hi = -(2 ** bits), 2 ** bits
    re = rng.integers(lo, hi, size=(nc,) + grid.shape).astype(float)
    im = rng.integers(lo, hi, size=(nc,) + grid.shape).astype(float)
    return FormField(grid, rank, re + 1j * im)


def mean_free(e: FormField) -> FormField:
    """Remove the discrete harmonic modes (zero derivative symbol)."""
    from .spectral import fourier, fourier_inverse
    hat = fourier(e)
    mask = e.grid.freq_radius_sq() == 0.0
    return fourier_inverse(hat.with_data(np.where(mask, 0.0, hat.data)))


def random_coclosed(grid: GridSpec, rank: int, seed: int,
                    kmax: int | None = None) -> FormField:
    """Random co-closed zero-mean field (a T-range projection)."""
    from .decompose import hodge_decompose
    base = random_band_limited(grid, rank, seed, kmax)
    return hodge_decompose(base).coexact_part


def _flip_last_axis(values: np.ndarray) -> np.ndarray:
    n = values.shape[-1]
    idx = (-np.arange(n)) % n
    return values[..., idx]


def parity_symmetrized(e: FormField, parity: str) -> FormField:
    """Symmetrize components in x_N.

    "mirror": even where N is absent, odd where present (extension of the
    d-mirror); "trace-free": the opposite parity, which forces a vanishing
    tangential trace.
    """
    if parity not in ("mirror", "trace-free"):
        raise ValueError("parity must be 'mirror' or 'trace-free'")
    out = np.empty_like(e.data)
    for pos, mi in enumerate(multi_indices(e.grid.dim, e.rank)):
        has_n = e.grid.dim in mi
        odd = has_n if parity == "mirror" else not has_n
        flipped = _flip_last_axis(e.data[pos])
        out[pos] = 0.5 * (e.data[pos] - flipped) if odd \
            else 0.5 * (e.data[pos] + flipped)
    return e.with_data(out)


def halfspace_member(grid: GridSpec, rank: int, seed: int,
                     envelope_decay: float = 1.0,
                     kmax: int | None = None) -> FormField:
    """Smooth periodic form with vanishing tangential trace at x_N = 0.

    Built by trace-free parity symmetrization of a band-limited field and
    an even Gaussian envelope confining the support to the inner region.
    The band limit stays at n/8 so the envelope product remains resolved.
    """
    if kmax is None:
        kmax = max(grid.points // 8, 2)
    base = parity_symmetrized(random_band_limited(grid, rank, seed, kmax),
                              "trace-free")
    envelope = np.exp(-envelope_decay * grid.radius_sq())
    return base.scale_pointwise(envelope)
