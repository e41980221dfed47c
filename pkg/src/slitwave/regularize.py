"""Slit geometry and the epsilon-parametrized regularization families.

A barrier that is infinitesimally thin in x and impenetrably high in y
outside the open slit set S is modeled by the tensor product

    V_eps(x, y) = delta_eps(x) * barrier_eps(y)

where ``delta_eps`` is an approximate identity supported in [-c_eps, c_eps]
and ``barrier_eps`` grows like its sup norm H_eps away from the slits while
vanishing inside them.  Two families are provided:

* ``box``: sharp indicator profiles, delta_eps = chi(x/c_eps)/(2 c_eps) and
  barrier height H_eps = 1/eps;
* ``mollified``: the same scaling laws built from the standard compactly
  supported bump, with smooth slit transitions, plus the ``power`` height
  law H_eps = eps^(-alpha) with alpha < 1/2 whose product
  H_eps * sqrt(c_eps) decays (the regime the decay studies require).

Sharp profiles are sampled with half-weight boundary nodes so that grid sums
are trapezoid rules: the sampled delta then carries unit discrete mass and
the exact plateau height at the same time.  All samplers renormalize after
sampling so that grid quadrature error cannot contaminate convergence rates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ConfigurationError, ResolutionError, UsageError
from .fields import ComplexField2D, Grid2D

# Fixed mollifier shape: the standard bump exp(-1/(1-s^2)) on |s| < 1.
# _BUMP_MASS is its integral, computed once by 96-node Gauss-Legendre
# (verified against adaptive quadrature in the tests).
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def bump(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def _bump_integral_up_to(s: np.ndarray) -> np.ndarray:
    """integral of bump over [-1, min(s, 1)], Gauss-Legendre per target."""
    s = np.clip(np.asarray(s, dtype=float), -1.0, 1.0)
    half = (s + 1.0) / 2.0
    nodes = -1.0 + half[..., None] * (_GL_NODES + 1.0)
    return np.sum(bump(nodes) * _GL_WEIGHTS, axis=-1) * half


_BUMP_MASS = float(_bump_integral_up_to(np.array(1.0)))


def smoothstep(s: np.ndarray) -> np.ndarray:
    """C-infinity monotone ramp: 0 for s <= -1, 1 for s >= 1, 1/2 at 0."""
    return _bump_integral_up_to(s) / _BUMP_MASS


@dataclass(frozen=True)
class SlitConfig:
    """The open slit set S as an ordered union of disjoint intervals."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in iv:
            if not a < b:
                raise ConfigurationError(f"empty slit interval ({a}, {b})")
        for (_, b0), (a1, _) in zip(iv, iv[1:]):
            if not b0 < a1:
                raise ConfigurationError(
                    f"slit intervals must be disjoint and increasing, got end {b0} "
                    f"before start {a1}")
        object.__setattr__(self, "intervals", iv)

    @classmethod
    def single_slit(cls, d: float) -> "SlitConfig":
        if not d > 0:
            raise ConfigurationError(f"slit half-width must be positive, got {d}")
        return cls(((-d, d),))

    @classmethod
    def double_slit(cls, a: float, d: float) -> "SlitConfig":
        if not (a > 0 and d > 0 and d < a):
            raise ConfigurationError(
                f"double slit needs 0 < d < a, got a={a}, d={d}")
        return cls(((-a - d, -a + d), (a - d, a + d)))

    @property
    def boundary_points(self) -> np.ndarray:
        return np.array([v for iv in self.intervals for v in iv])

    @property
    def min_width(self) -> float:
        return min(b - a for a, b in self.intervals) if self.intervals else np.inf

    def indicator(self, ys: np.ndarray, boundary_value: float = 0.5) -> np.ndarray:
        """1_S sampled on ys; nodes landing on a slit edge get boundary_value."""
        ys = np.asarray(ys, dtype=float)
        out = np.zeros_like(ys)
        for a, b in self.intervals:
            out[(ys > a) & (ys < b)] = 1.0
            out[np.isclose(ys, a) | np.isclose(ys, b)] = boundary_value
        return out

    def distance_to_boundary(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        if not self.intervals:
            return np.full_like(ys, np.inf)
        return np.min(np.abs(ys[:, None] - self.boundary_points[None, :]), axis=1)


@dataclass(frozen=True)
class RegFamily:
    """Scaling laws defining the regularization families at any eps.

    Parameters
    ----------
    kind : 'box' or 'mollified'
        Profile shape for the potential factors and the packet envelopes.
    barrier_law : 'inverse' or 'power'
        H_eps = 1/eps, or H_eps = eps^(-alpha) with alpha in (0, 1/2); only
        the power law keeps H_eps * sqrt(c_eps) decaying.
    c_scale : float
        Support law of the thin direction, c_eps = c_scale * eps.
    rho_width_law : 'const' or 'inverse'
        Width of the transversal envelope rho_eps: rho_width, or
        rho_width / eps (the spread-out limit used by the sharp family).
    phi_width, packet_center : float
        Half-width and center of the longitudinal envelope phi_eps; its
        support must stay inside (-inf, -1].
    """

    kind: Literal["box", "mollified"] = "mollified"
    barrier_law: Literal["inverse", "power"] = "inverse"
    alpha: float = 0.4
    c_scale: float = 1.0
    rho_width_law: Literal["const", "inverse"] = "const"
    rho_width: float = 1.0
    phi_width: float = 1.0
    packet_center: float = -6.0

    def __post_init__(self):
        problems = []
        if self.kind not in ("box", "mollified"):
            problems.append(f"unknown kind {self.kind!r}")
        if self.barrier_law not in ("inverse", "power"):
            problems.append(f"unknown barrier law {self.barrier_law!r}")
        if self.barrier_law == "power" and not 0.0 < self.alpha < 0.5:
            problems.append(f"power barrier law needs alpha in (0, 1/2), got {self.alpha}")
        if not self.c_scale > 0:
            problems.append(f"c_scale must be positive, got {self.c_scale}")
        if not (self.rho_width > 0 and self.phi_width > 0):
            problems.append("packet widths must be positive")
        if not self.packet_center <= -1.0 - self.phi_width:
            problems.append(
                f"packet center {self.packet_center} with half-width {self.phi_width} "
                "leaks out of (-inf, -1]")
        if problems:
            raise ConfigurationError("invalid family: " + "; ".join(problems), problems)

    def c_eps(self, eps: float) -> float:
        return self.c_scale * eps

    def barrier_height(self, eps: float) -> float:
        if self.barrier_law == "inverse":
            return 1.0 / eps
        return eps ** (-self.alpha)

    def plateau_halfwidth(self, eps: float) -> float:
        return 1.0 / eps

    def transition_width(self, eps: float, slits: SlitConfig) -> float:
        return eps * slits.min_width / 4.0

    def rho_width_at(self, eps: float) -> float:
        if self.rho_width_law == "const":
            return self.rho_width
        return self.rho_width / eps

    def decay_predictor(self, eps: float) -> float:
        """H_eps * sqrt(c_eps), the quantity that must vanish for decay."""
        return self.barrier_height(eps) * np.sqrt(self.c_eps(eps))

    def hypothesis_satisfied(self, schedule) -> bool:
        """True when the decay predictor strictly decreases along the schedule."""
        preds = [self.decay_predictor(e) for e in schedule]
        return all(b < a for a, b in zip(preds, preds[1:]))

    def validate_schedule(self, schedule) -> None:
        eps = list(schedule)
        if any(e <= 0 for e in eps):
            raise ConfigurationError("eps schedule must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigurationError("eps schedule must be strictly decreasing")
        heights = [self.barrier_height(e) for e in eps]
        supports = [self.c_eps(e) for e in eps]
        if any(b <= a for a, b in zip(heights, heights[1:])):
            raise ConfigurationError("barrier height must grow along the schedule")
        if any(b >= a for a, b in zip(supports, supports[1:])):
            raise ConfigurationError("delta support must shrink along the schedule")


def _sharp_profile(xs: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Indicator of [lo, hi] with half-weight nodes on the edges."""
    out = np.where((xs > lo) & (xs < hi), 1.0, 0.0)
    out[np.isclose(xs, lo) | np.isclose(xs, hi)] = 0.5
    return out


def sample_delta(family: RegFamily, eps: float, grid: Grid2D) -> np.ndarray:
    """Approximate-identity samples over the x lattice.

    Nonnegative, supported in [-c_eps, c_eps], discrete integral renormalized
    to 1.  Requires c_eps >= 2 dx; the error names the minimal resolving grid.
    """
    if not eps > 0:
        raise UsageError(f"eps must be positive, got {eps}")
    c = family.c_eps(eps)
    if c < 2.0 * grid.dx:
        need = int(2 ** np.ceil(np.log2(grid.lx * 2.0 / c)))
        raise ResolutionError(
            f"delta support c_eps = {c:g} needs c_eps >= 2 dx = {2 * grid.dx:g}; "
            f"the smallest resolving grid for this box has nx = {need}")
    if family.kind == "box":
        vals = _sharp_profile(grid.xs, -c, c) / (2.0 * c)
    else:
        vals = bump(grid.xs / c) / (c * _BUMP_MASS)
    mass = np.sum(vals) * grid.dx
    return vals / mass


def sample_barrier(family: RegFamily, slits: SlitConfig, eps: float,
                   grid: Grid2D) -> np.ndarray:
    """Barrier height profile over the y lattice.

    Zero deep inside the slits, equal to H_eps on the blocking plateau, with
    compact support imposed by a plateau cutoff of half-width 1/eps.  The
    mollified variant transitions smoothly over width eps*(slit width)/4 at
    each slit edge and over a fixed unit width at the plateau edge.
    """
    if not eps > 0:
        raise UsageError(f"eps must be positive, got {eps}")
    if slits.intervals and slits.min_width < 4.0 * grid.dy:
        raise ResolutionError(
            f"narrowest slit width {slits.min_width:g} is under-resolved: "
            f"needs >= 4 dy = {4 * grid.dy:g}")
    h = family.barrier_height(eps)
    p = family.plateau_halfwidth(eps)
    ys = grid.ys
    if family.kind == "box":
        open_frac = slits.indicator(ys, boundary_value=0.5)
        plateau = _sharp_profile(ys, -p, p)
    else:
        w = family.transition_width(eps, slits)
        gaps = [a1 - b0 for (_, b0), (a1, _) in
                zip(slits.intervals, slits.intervals[1:])]
        if any(g < 2 * w for g in gaps):
            raise ResolutionError(
                f"slit transitions of width {w:g} overlap between intervals")
        open_frac = np.zeros_like(ys)
        for a, b in slits.intervals:
            open_frac += smoothstep((ys - a) / w) * smoothstep((b - ys) / w)
        plateau = smoothstep(ys + p) * smoothstep(p - ys)
    return h * (1.0 - open_frac) * plateau


def sample_transmission(family: RegFamily, slits: SlitConfig, eps: float,
                        grid: Grid2D) -> np.ndarray:
    """Transmission profile 1 - barrier/H_eps, converging pointwise to 1_S."""
    h = sample_barrier(family, slits, eps, grid)
    return 1.0 - h / family.barrier_height(eps)


def barrier_droop(family: RegFamily, slits: SlitConfig, eps: float,
                  grid: Grid2D) -> float:
    """Measured constant c in barrier >= H_eps - c on the blocking plateau.

    Evaluated over samples farther than twice the transition width from the
    slit edges and inside the plateau interior (one cutoff width in from its
    edge); reported per eps by the sweep studies.
    """
    h = sample_barrier(family, slits, eps, grid)
    height = family.barrier_height(eps)
    margin = 2.0 * family.transition_width(eps, slits) if family.kind == "mollified" else 2.0 * grid.dy
    interior = family.plateau_halfwidth(eps) - (1.0 if family.kind == "mollified" else grid.dy)
    mask = ((slits.indicator(grid.ys) == 0.0)
            & (slits.distance_to_boundary(grid.ys) > margin)
            & (np.abs(grid.ys) < interior))
    if not np.any(mask):
        return float("nan")
    return float(height - np.min(h[mask]))


def sample_potential(family: RegFamily, slits: SlitConfig, eps: float,
                     grid: Grid2D) -> ComplexField2D:
    """Tensor-product barrier potential delta_eps(x) * barrier_eps(y)."""
    dx_profile = sample_delta(family, eps, grid)
    hy_profile = sample_barrier(family, slits, eps, grid)
    return ComplexField2D(grid, np.outer(dx_profile, hy_profile).astype(complex))


def sample_initial(family: RegFamily, eps: float, p0: float,
                   grid: Grid2D) -> ComplexField2D:
    """Initial packet rho_eps(y) phi_eps(x) e^{i p0 x}, unit L2 norm.

    Both envelopes are nonnegative with compact support; the longitudinal
    one sits inside (-inf, -1].  The sampled field is renormalized, so the
    unit-norm contract holds exactly on the grid.
    """
    if not eps > 0:
        raise UsageError(f"eps must be positive, got {eps}")
    wr = family.rho_width_at(eps)
    wp = family.phi_width
    xc = family.packet_center
    margin = 4
    if (xc - wp < grid.xs[0] + margin * grid.dx
            or xc + wp > grid.xs[-1] - margin * grid.dx):
        raise ConfigurationError(
            f"longitudinal envelope [{xc - wp:g}, {xc + wp:g}] does not fit the "
            f"box x-range with a {margin}-cell margin")
    if wr > grid.ly / 2.0 - margin * grid.dy:
        raise ConfigurationError(
            f"transversal envelope half-width {wr:g} does not fit the box "
            f"y-range with a {margin}-cell margin")
    if family.kind == "box":
        rho = _sharp_profile(grid.ys, -wr, wr)
        phi = _sharp_profile(grid.xs, xc - wp, xc + wp)
    else:
        rho = bump(grid.ys / wr)
        phi = bump((grid.xs - xc) / wp)
    vals = np.outer(phi * np.exp(1j * p0 * grid.xs), rho)
    norm = np.sqrt(np.sum(np.abs(vals) ** 2) * grid.cell_area)
    if norm == 0.0:
        raise ConfigurationError("initial packet vanished after sampling")
    return ComplexField2D(grid, vals / norm)


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares slope of log(value) against log(1/eps)."""

    exponent: float
    max_residual: float

    def negligible_compatible(self, q: float) -> bool:
        return self.exponent < -q


def estimate_asymptotic_order(samples) -> PowerLawFit:
    """Fit value ~ eps^(-N) on a decreasing eps schedule.

    ``samples`` is a sequence of (eps, value) pairs with positive values, at
    least four of them.  Returns the fitted exponent N and the largest
    absolute residual of log(value) around the fit.
    """
    pts = [(float(e), float(v)) for e, v in samples]
    if len(pts) < 4:
        raise UsageError(f"need at least 4 samples for a rate fit, got {len(pts)}")
    eps = np.array([p[0] for p in pts])
    vals = np.array([p[1] for p in pts])
    if np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise UsageError("eps values must be positive and strictly decreasing")
    if np.any(vals <= 0):
        raise UsageError("rate fit requires positive values")
    x = np.log(1.0 / eps)
    y = np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.max(np.abs(y - (slope * x + intercept))))
    return PowerLawFit(float(slope), residual)
