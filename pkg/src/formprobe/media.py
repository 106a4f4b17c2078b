"""Admissible material transformations on form fibers.

A transformation acts nodewise on the component vector of a rank-q form
through a real symmetric uniformly positive-definite matrix.  It is kept
as identity-plus-perturbation; the perturbation carries the declared
smoothness and decay class.  Construction verifies symmetry and
positivity and rejects violations with the worst node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product as iter_product

import numpy as np

from .fields import (FormField, GridSpec, complement_index, index_position,
                     multi_indices, n_components, star_sign)

IDENTITY = "identity"
SCALAR = "scalar"
DENSE = "dense"

DECAY_NONE = "none"
DECAY_FIRST = "first-kind"
DECAY_SECOND = "second-kind"


class AdmissibilityError(ValueError):
    """Raised when a candidate transformation fails symmetry or positivity."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class AdmissibilityReport:
    symmetric: bool
    min_rayleigh: float
    worst_node: tuple
    sup_entry: float
    decay: dict | None = None


class RhoPolynomial:
    """Sum of terms poly(x) * (1 + r^2)^p, closed under differentiation."""

    def __init__(self, dim: int, terms: dict):
        # terms: {exponent p: {multi-exponent alpha: coefficient}}
        self.dim = dim
        self.terms = {float(p): {tuple(a): float(c) for a, c in poly.items()
                                 if c != 0.0}
                      for p, poly in terms.items()}

    def eval(self, grid: GridSpec) -> np.ndarray:
        coords = grid.coord_fields()
        rho2 = 1.0 + grid.radius_sq()
        out = np.zeros(grid.shape)
        for p, poly in sorted(self.terms.items()):
            acc = np.zeros(grid.shape)
            for alpha, c in sorted(poly.items()):
                term = np.full(grid.shape, c)
                for ax, a in enumerate(alpha):
                    if a:
                        term = term * coords[ax] ** a
                acc += term
            out += acc * rho2 ** p
        return out

    def partial(self, axis: int) -> "RhoPolynomial":
        ax = axis - 1
        new: dict = {}
        for p, poly in self.terms.items():
            for alpha, c in poly.items():
                if alpha[ax] > 0:
                    down = list(alpha)
                    down[ax] -= 1
                    new.setdefault(p, {})
                    key = tuple(down)
                    new[p][key] = new[p].get(key, 0.0) + c * alpha[ax]
                up = list(alpha)
                up[ax] += 1
                new.setdefault(p - 1.0, {})
                key = tuple(up)
                new[p - 1.0][key] = new[p - 1.0].get(key, 0.0) + 2.0 * p * c
        return RhoPolynomial(self.dim, new)


@dataclass(frozen=True)
class Transformation:
    """Nodewise symmetric positive-definite map on rank-q fibers.

    ``hat`` stores only the perturbation: full matrices are id + hat.
    Scalar transformations hold a single field mu_hat and act on any rank.
    ``hat_calculus`` optionally carries closed-form entry objects (with
    eval/partial) used by the decay verification.
    """

    grid: GridSpec
    rank: int | None
    kind: str
    hat: np.ndarray | None = field(default=None, repr=False)
    tau: float = 0.0
    decay_kind: str = DECAY_NONE
    smoothness: int = 0
    hat_partials: dict | None = field(default=None, repr=False)
    report: AdmissibilityReport | None = None
    hat_calculus: tuple | None = field(default=None, repr=False)

    # -- basic queries -------------------------------------------------------

    def is_identity(self) -> bool:
        return self.kind == IDENTITY

    def fiber_dim(self, rank: int) -> int:
        return n_components(self.grid.dim, rank)

    def _check_field(self, e: FormField):
        if e.grid != self.grid:
            raise ValueError("grid mismatch between transformation and field")
        if e.spectral:
            raise ValueError("transformations act on position-space fields")
        if self.rank is not None and e.rank != self.rank:
            raise ValueError(f"transformation is bound to rank {self.rank}, "
                             f"got rank {e.rank}")

    def scalar_field(self) -> np.ndarray:
        """Full scalar coefficient 1 + mu_hat (scalar kind only)."""
        if self.kind != SCALAR:
            raise ValueError("not a scalar transformation")
        return 1.0 + self.hat

    def dense_matrices(self) -> np.ndarray:
        """Full matrices id + hat with shape (nc, nc) + grid.shape."""
        if self.kind != DENSE:
            raise ValueError("not a dense transformation")
        nc = self.hat.shape[0]
        full = self.hat.copy()
        idx = np.arange(nc)
        full[idx, idx] += 1.0
        return full

    # -- action on fields ----------------------------------------------------

    def apply(self, e: FormField) -> FormField:
        self._check_field(e)
        if self.kind == IDENTITY:
            return e
        if self.kind == SCALAR:
            return e.scale_pointwise(self.scalar_field())
        out = e.data + np.einsum("ij...,j...->i...", self.hat, e.data)
        return e.with_data(out)

    def apply_inverse(self, e: FormField) -> FormField:
        self._check_field(e)
        if self.kind == IDENTITY:
            return e
        if self.kind == SCALAR:
            return e.scale_pointwise(1.0 / self.scalar_field())
        mats = np.moveaxis(self.dense_matrices(), (0, 1), (-2, -1))
        vec = np.moveaxis(e.data, 0, -1)[..., None]
        sol = np.linalg.solve(mats, vec)[..., 0]
        return e.with_data(np.moveaxis(sol, -1, 0))

    def partial_array(self, axis: int) -> np.ndarray | None:
        """d_axis of the perturbation entries: stored closed form if
        available, otherwise spectral (exact for band-limited entries)."""
        if self.kind == IDENTITY:
            return None
        if self.hat_partials is not None and axis in self.hat_partials:
            return self.hat_partials[axis]
        alpha = tuple(1 if ax == axis - 1 else 0 for ax in range(self.grid.dim))
        if self.kind == SCALAR:
            return _spectral_partial_scalar(self.grid, self.hat, alpha).real
        nc = self.hat.shape[0]
        out = np.empty_like(self.hat)
        for i in range(nc):
            for j in range(nc):
                out[i, j] = _spectral_partial_scalar(self.grid,
                                                     self.hat[i, j], alpha).real
        return out

    def apply_partial(self, axis: int, e: FormField) -> FormField:
        """(d_axis eps) E, from stored or spectral entry derivatives."""
        self._check_field(e)
        if self.kind == IDENTITY:
            return FormField.zeros(self.grid, e.rank)
        part = self.partial_array(axis)
        if self.kind == SCALAR:
            return e.scale_pointwise(part)
        return e.with_data(np.einsum("ij...,j...->i...", part, e.data))

    # -- the normal-block solve of the split reconstruction -------------------

    def solve_rho_block(self, rhs: FormField) -> FormField:
        """Solve eps^(rho,rho) X^rho = rhs^rho nodewise; rhs must be normal."""
        self._check_field(rhs)
        dim = self.grid.dim
        rho_pos = [p for p, mi in enumerate(multi_indices(dim, rhs.rank))
                   if dim in mi]
        out = np.zeros_like(rhs.data)
        if not rho_pos:
            return rhs.with_data(out)
        if self.kind == IDENTITY:
            out[rho_pos] = rhs.data[rho_pos]
            return rhs.with_data(out)
        if self.kind == SCALAR:
            out[rho_pos] = rhs.data[rho_pos] / self.scalar_field()
            return rhs.with_data(out)
        block = self.dense_matrices()[np.ix_(rho_pos, rho_pos)]
        mats = np.moveaxis(block, (0, 1), (-2, -1))
        eig = np.linalg.eigvalsh(mats)
        worst = float(eig.min())
        if worst < 1e-12:
            node = np.unravel_index(int(np.argmin(eig.min(axis=-1))),
                                    self.grid.shape)
            raise AdmissibilityError(
                f"normal block numerically singular (min eigenvalue {worst:.3e} "
                f"at node {node}); transformation violates admissibility")
        vec = np.moveaxis(rhs.data[rho_pos], 0, -1)[..., None]
        sol = np.linalg.solve(mats, vec)[..., 0]
        out[rho_pos] = np.moveaxis(sol, -1, 0)
        return rhs.with_data(out)


# ---------------------------------------------------------------------------
# construction and verification
# ---------------------------------------------------------------------------

def _verify_scalar(grid, mu_hat) -> AdmissibilityReport:
    values = 1.0 + mu_hat
    worst = float(values.min())
    node = np.unravel_index(int(np.argmin(values)), grid.shape)
    return AdmissibilityReport(True, worst, node, float(np.abs(mu_hat).max()))


def _verify_dense(grid, hat) -> AdmissibilityReport:
    nc = hat.shape[0]
    sym_gap = float(np.abs(hat - np.swapaxes(hat, 0, 1)).max())
    scale = max(float(np.abs(hat).max()), 1.0)
    symmetric = sym_gap <= 1e-12 * scale
    full = hat.copy()
    idx = np.arange(nc)
    full[idx, idx] += 1.0
    mats = np.moveaxis(full, (0, 1), (-2, -1))
    eig = np.linalg.eigvalsh(mats)
    node_min = eig.min(axis=-1)
    worst = float(node_min.min())
    node = np.unravel_index(int(np.argmin(node_min)), grid.shape)
    return AdmissibilityReport(symmetric, worst, node, float(np.abs(hat).max()))


def make_transformation(grid: GridSpec, rank: int | None = None,
                        kind: str = IDENTITY, *, mu_hat=None, hat=None,
                        tau: float = 0.0, decay_kind: str = DECAY_NONE,
                        smoothness: int = 0, hat_partials: dict | None = None,
                        hat_calculus: tuple | None = None,
                        positivity_floor: float = 1e-10) -> Transformation:
    """Build and verify a transformation.

    kind "identity" needs nothing; "scalar" takes the perturbation field
    mu_hat (full coefficient is 1 + mu_hat); "dense" takes the perturbation
    matrices hat of shape (nc, nc) + grid.shape for the given rank.
    Non-symmetric or non-positive inputs are rejected with the worst node
    and Rayleigh quotient in the error.
    """
    if kind == IDENTITY:
        return Transformation(grid, rank, IDENTITY, None, tau, decay_kind,
                              smoothness, None,
                              AdmissibilityReport(True, 1.0, (), 0.0))

    if kind == SCALAR:
        mu_hat = np.broadcast_to(np.asarray(mu_hat, float), grid.shape).copy()
        report = _verify_scalar(grid, mu_hat)
        if report.min_rayleigh < positivity_floor:
            raise AdmissibilityError(
                f"positivity violation: coefficient {report.min_rayleigh:.6g} "
                f"at node {report.worst_node}", report)
        return Transformation(grid, rank, SCALAR, mu_hat, tau, decay_kind,
                              smoothness, hat_partials, report, hat_calculus)
    if kind == DENSE:
        if rank is None:
            raise ValueError("dense transformations need a rank")
        hat = np.asarray(hat, float)
        nc = n_components(grid.dim, rank)
        if hat.shape != (nc, nc) + grid.shape:
            raise ValueError(f"perturbation matrices must have shape "
                             f"{(nc, nc) + grid.shape}, got {hat.shape}")
        report = _verify_dense(grid, hat)
        if not report.symmetric:
            raise AdmissibilityError("symmetry violation in perturbation "
                                     "matrices", report)
        if report.min_rayleigh < positivity_floor:
            raise AdmissibilityError(
                f"positivity violation: Rayleigh quotient "
                f"{report.min_rayleigh:.6g} at node {report.worst_node}", report)
        return Transformation(grid, rank, DENSE, hat, tau, decay_kind,
                              smoothness, hat_partials, report, hat_calculus)
    raise ValueError(f"unknown transformation kind {kind!r}")


# ---------------------------------------------------------------------------
# scalar catalog (closed-form coefficients with analytic partials)
# ---------------------------------------------------------------------------

def scalar_catalog(grid: GridSpec, tag: str, *, amplitude: float = 1.0,
                   width: float = 1.0, tau: float = 1.0) -> Transformation:
    """Fixed catalog of smooth scalar media.

    "gauss_well": 1 + a exp(-b r^2), decays faster than any power.
    "radial_power": 1 + a (1+r^2)^(-tau/2), second-kind decay of order tau.
    """
    from .manufactured import PolyGauss
    r2 = grid.radius_sq()
    coords = grid.coord_fields()
    zero_alpha = (0,) * grid.dim
    if tag == "gauss_well":
        hat = amplitude * np.exp(-width * r2)
        partials = {j + 1: -2.0 * width * coords[j] * hat
                    for j in range(grid.dim)}
        entry = PolyGauss(grid.dim, width, (0.0,) * grid.dim,
                          {zero_alpha: amplitude})
        return make_transformation(grid, None, SCALAR, mu_hat=hat, tau=tau,
                                   decay_kind=DECAY_SECOND, smoothness=3,
                                   hat_partials=partials,
                                   hat_calculus=(entry,))
    if tag == "radial_power":
        base = (1.0 + r2) ** (-tau / 2.0)
        hat = amplitude * base
        partials = {j + 1: -amplitude * tau * coords[j]
                    * (1.0 + r2) ** (-tau / 2.0 - 1.0)
                    for j in range(grid.dim)}
        entry = RhoPolynomial(grid.dim, {-tau / 2.0: {zero_alpha: amplitude}})
        return make_transformation(grid, None, SCALAR, mu_hat=hat, tau=tau,
                                   decay_kind=DECAY_SECOND, smoothness=3,
                                   hat_partials=partials,
                                   hat_calculus=(entry,))
    raise ValueError(f"unknown scalar catalog tag {tag!r}")


SCALAR_CATALOG_TAGS = ("gauss_well", "radial_power")


# ---------------------------------------------------------------------------
# split reconstruction (normal block inversion)
# ---------------------------------------------------------------------------

def reconstruct_from_split(e_tau: FormField, g_rho: FormField,
                           eps: Transformation) -> FormField:
    """Recover E from its tangential part and the normal part of eps E.

    Solves eps^(rho,rho) E^rho = G^rho - (eps E^tau)^rho nodewise and
    returns E = E^tau + E^rho.
    """
    if e_tau.grid != g_rho.grid or e_tau.rank != g_rho.rank:
        raise ValueError("tangential part and normal data must match")
    dim = e_tau.grid.dim
    rho_pos = [p for p, mi in enumerate(multi_indices(dim, e_tau.rank))
               if dim in mi]
    eps_etau = eps.apply(e_tau)
    rhs = np.zeros_like(g_rho.data)
    rhs[rho_pos] = g_rho.data[rho_pos] - eps_etau.data[rho_pos]
    e_rho = eps.solve_rho_block(g_rho.with_data(rhs))
    return e_tau + e_rho


# ---------------------------------------------------------------------------
# transport under the reflection and other signed-permutation isometries
# ---------------------------------------------------------------------------

def _flip_axis_periodic(values: np.ndarray, axis: int) -> np.ndarray:
    """Index map k -> (n-k) mod n, the grid action of x -> -x on one axis."""
    n = values.shape[axis]
    idx = (-np.arange(n)) % n
    return np.take(values, idx, axis=axis)


def pullback_grid_map(values: np.ndarray, sigma: tuple, flips: tuple,
                      offset: int = 0) -> np.ndarray:
    """Evaluate a scalar field at tau(x) for tau_i(x) = flips_i * x_sigma(i).

    ``offset`` counts leading non-grid axes (e.g. matrix axes) left alone.
    """
    out = values
    for j, s in enumerate(flips):
        if s < 0:
            out = _flip_axis_periodic(out, offset + j)
    dim = len(sigma)
    inverse = [0] * dim
    for i, s in enumerate(sigma):
        inverse[s - 1] = i
    lead = tuple(range(offset))
    return np.transpose(out, lead + tuple(offset + i for i in inverse))


def _pullback_component_matrix(dim: int, rank: int, sigma: tuple,
                               flips: tuple) -> np.ndarray:
    """Matrix of tau^* on rank-q components for a signed permutation tau."""
    nc = n_components(dim, rank)
    mat = np.zeros((nc, nc))
    for pos, mi in enumerate(multi_indices(dim, rank)):
        image = tuple(sigma[i - 1] for i in mi)
        sign = 1
        for i in mi:
            if flips[i - 1] < 0:
                sign = -sign
        # parity of sorting the image tuple
        perm = sorted(range(len(image)), key=lambda k: image[k])
        inv = sum(1 for a in range(len(perm)) for b in range(a + 1, len(perm))
                  if perm[a] > perm[b])
        if inv % 2:
            sign = -sign
        target = tuple(sorted(image))
        mat[index_position(dim, target), pos] = sign
    return mat


def _star_matrix(dim: int, rank: int) -> np.ndarray:
    rows = n_components(dim, dim - rank)
    cols = n_components(dim, rank)
    mat = np.zeros((rows, cols))
    for pos, mi in enumerate(multi_indices(dim, rank)):
        comp = complement_index(mi, dim)
        mat[index_position(dim, comp), pos] = star_sign(mi, dim)
    return mat


def transported_transform(eps: Transformation, rank: int, sigma: tuple,
                          flips: tuple) -> Transformation:
    """Transport eps under an orthogonal signed-permutation change of chart.

    The identity transports to the identity; admissibility is re-verified
    on the result.
    """
    dim = eps.grid.dim
    sigma = tuple(sigma)
    flips = tuple(flips)
    if sorted(sigma) != list(range(1, dim + 1)) or len(flips) != dim:
        raise ValueError("sigma must permute 1..N and flips must have length N")
    if eps.kind == IDENTITY:
        return eps
    if eps.kind == SCALAR:
        moved = pullback_grid_map(eps.hat, sigma, flips)
        parts = None
        if eps.hat_partials is not None:
            # chain rule for tau_i = flips_i x_sigma(i):
            # d_i (mu o tau)(x) = flips_i (d_sigma(i) mu)(tau x)
            parts = {}
            for i in range(1, dim + 1):
                src = eps.hat_partials.get(sigma[i - 1])
                if src is None:
                    parts = None
                    break
                parts[i] = flips[i - 1] * pullback_grid_map(src, sigma, flips)
        return make_transformation(eps.grid, eps.rank, SCALAR, mu_hat=moved,
                                   tau=eps.tau, decay_kind=eps.decay_kind,
                                   smoothness=eps.smoothness,
                                   hat_partials=parts)
    # dense: eps_tau(x) = det * (-1)^(q(N-q)) H_(N-q) P_(N-q) H_q eps(tau x) P_q^(-1)
    inv_sigma = tuple(sigma.index(i) + 1 for i in range(1, dim + 1))
    inv_flips = tuple(flips[inv_sigma[i - 1] - 1] for i in range(1, dim + 1))
    p_inv = _pullback_component_matrix(dim, rank, inv_sigma, inv_flips)
    p_dual = _pullback_component_matrix(dim, dim - rank, sigma, flips)
    h_q = _star_matrix(dim, rank)
    h_dual = _star_matrix(dim, dim - rank)
    perm_parity = sum(1 for a in range(dim) for b in range(a + 1, dim)
                      if sigma[a] > sigma[b])
    det = (-1 if perm_parity % 2 else 1) * math.prod(flips)
    scale = det * (-1 if (rank * (dim - rank)) % 2 else 1)
    left = scale * (h_dual @ p_dual @ h_q)
    full = eps.dense_matrices()
    moved = pullback_grid_map(full, sigma, flips, offset=2)
    new_full = np.einsum("ij,jk...,kl->il...", left, moved, p_inv)
    nc = new_full.shape[0]
    idx = np.arange(nc)
    new_hat = new_full.copy()
    new_hat[idx, idx] -= 1.0
    return make_transformation(eps.grid, rank, DENSE, hat=new_hat, tau=eps.tau,
                               decay_kind=eps.decay_kind,
                               smoothness=eps.smoothness)


def reflected_transform(eps: Transformation, rank: int | None = None) -> Transformation:
    """Transport under the boundary reflection (x', x_N) -> (x', -x_N)."""
    dim = eps.grid.dim
    sigma = tuple(range(1, dim + 1))
    flips = (1,) * (dim - 1) + (-1,)
    use_rank = eps.rank if rank is None else rank
    if eps.kind == DENSE and use_rank is None:
        raise ValueError("dense transformations need a rank to transport")
    return transported_transform(eps, use_rank if use_rank is not None else 0,
                                 sigma, flips)


# ---------------------------------------------------------------------------
# decay-class verification on annulus samples
# ---------------------------------------------------------------------------

def _spectral_partial_scalar(grid: GridSpec, values: np.ndarray,
                             alpha: tuple) -> np.ndarray:
    hat = np.fft.fftn(values.astype(np.complex128), norm="ortho")
    for ax, a in enumerate(alpha):
        if a:
            hat = hat * (1j * grid.freq_field(ax + 1)) ** a
    return np.fft.ifftn(hat, norm="ortho")


def _smooth_radial_window(grid: GridSpec, flat_radius: float,
                          zero_radius: float) -> np.ndarray:
    """C^inf window, 1 inside flat_radius and 0 beyond zero_radius."""
    r = np.sqrt(grid.radius_sq())
    t = np.clip((r - flat_radius) / (zero_radius - flat_radius), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f_rise = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        f_fall = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return f_fall / (f_rise + f_fall)


def verify_decay(eps: Transformation, inner: tuple = None,
                 outer: tuple = None, growth_slack: float = 1.75) -> dict:
    """Sample |d^alpha hat| rho^power over two annuli and compare.

    power is tau for first-kind decay and tau + |alpha| for second kind;
    the weight is rho = (1+r^2)^(1/2), which keeps a perturbation exactly
    at the decay boundary flat instead of pre-asymptotically rising.  The
    class is consistent when the weighted sup does not grow from the inner
    annulus to the outer one beyond the slack factor.  Derivatives are
    spectral; since the perturbation is not box-periodic, a smooth radial
    window (identically 1 on the sampled annuli) is applied first so the
    wrap-around kink cannot pollute the samples.
    """
    if eps.kind == IDENTITY:
        return {"kind": eps.decay_kind, "tau": eps.tau, "orders": {},
                "consistent": True}
    grid = eps.grid
    L = grid.half_length
    if eps.hat_calculus is not None:
        # exact derivatives everywhere: sample out to the box corners
        inner = inner or (0.50 * L, 0.80 * L)
        outer = outer or (0.90 * L, 1.30 * L)
        window = None
    else:
        # spectral derivatives need the wrap-free windowed region
        inner = inner or (0.30 * L, 0.45 * L)
        outer = outer or (0.45 * L, 0.62 * L)
        window = _smooth_radial_window(grid, 0.65 * L, 0.95 * L)
    r = np.sqrt(grid.radius_sq())
    weight_base = np.sqrt(1.0 + grid.radius_sq())
    masks = {"inner": (inner[0] < r) & (r < inner[1]),
             "outer": (outer[0] < r) & (r < outer[1])}
    if eps.hat_calculus is not None:
        def derive(alpha):
            fields = []
            for entry in eps.hat_calculus:
                obj = entry
                for ax, a in enumerate(alpha):
                    for _ in range(a):
                        obj = obj.partial(ax + 1)
                fields.append(np.abs(np.asarray(obj.eval(grid))))
            return fields
    else:
        if eps.kind == SCALAR:
            raw = [window * eps.hat]
        else:
            nc = eps.hat.shape[0]
            raw = [window * eps.hat[i, j]
                   for i in range(nc) for j in range(i, nc)]

        def derive(alpha):
            return [np.abs(_spectral_partial_scalar(grid, entry, alpha))
                    for entry in raw]

    orders = {}
    consistent = True
    for total in range(eps.smoothness + 1):
        for alpha in iter_product(range(total + 1), repeat=grid.dim):
            if sum(alpha) != total:
                continue
            power = eps.tau + (total if eps.decay_kind == DECAY_SECOND else 0.0)
            derivs = derive(alpha)
            sups = {}
            for name, mask in masks.items():
                worst = 0.0
                for deriv in derivs:
                    worst = max(worst,
                                float((deriv * weight_base ** power)[mask].max()))
                sups[name] = worst
            ok = sups["outer"] <= growth_slack * max(sups["inner"], 1e-300)
            consistent = consistent and ok
            orders[alpha] = {"inner": sups["inner"], "outer": sups["outer"],
                             "bounded": ok}
    return {"kind": eps.decay_kind, "tau": eps.tau, "orders": orders,
            "consistent": consistent}
