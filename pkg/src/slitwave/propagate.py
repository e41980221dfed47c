"""Time evolution: unitary split-step solver, exact free flight, and the
Duhamel source machinery.

The equation integrated is  d_t u = i Lap u - i V u  with a static real
potential.  The kinetic flow is an exact spectral multiplier
exp(-i t |theta|^2); the potential flow is an exact phase exp(-i V t).
Strang composition (half potential, full kinetic, half potential) makes
every substep unitary, so norm conservation is a hard invariant of the
solver rather than a tolerance, and the splitting error is second order
in the step.

The inhomogeneous problem  d_t w = i Lap w - i F, w(0) = f  is solved in
spectral space by

    w_hat(t) = e^{-i t |theta|^2} f_hat - i (L F)_hat(t),

where L is the retarded time integral of the freely propagated source.  L is
evaluated on a recorded time slab by composite trapezoid quadrature, in a
recurrent form that keeps all phases local to one step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import NumericalError, UsageError
from .fields import (ComplexField2D, Grid2D, POSITION, SPECTRAL, fft_workers,
                     l2_norm, to_position, to_spectral)


@dataclass(frozen=True)
class EvolutionPlan:
    """Discretization of one evolution run.

    ``absorb`` switches on a real cosine-ramp mask of the given per-step
    strength over ``absorb_width`` frame cells; the run is then declared
    non-unitary and norm-conservation checks are skipped.
    """

    dt: float
    n_steps: int
    scheme: str = "strang"
    potential: ComplexField2D | None = None
    boundary_monitor_width: int = 8
    absorb: float = 0.0
    absorb_width: int = 24
    record_stride: int | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise UsageError(f"dt must be positive, got {self.dt}")
        if self.n_steps < 1:
            raise UsageError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.scheme not in ("strang", "lie"):
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.record_stride is not None:
            if self.record_stride < 1 or self.n_steps % self.record_stride:
                raise UsageError(
                    f"record stride {self.record_stride} must divide n_steps "
                    f"{self.n_steps}")
        if not 0.0 <= self.absorb < 1.0:
            raise UsageError(f"absorb strength must be in [0, 1), got {self.absorb}")

    @property
    def unitary(self) -> bool:
        return self.absorb == 0.0


@dataclass(frozen=True)
class TimeSlabSpectral:
    """Spectral snapshots on a uniform time lattice."""

    grid: Grid2D
    times: np.ndarray
    snapshots: np.ndarray  # (len(times), nx, ny) complex

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.snapshots, dtype=np.complex128)
        if t.ndim != 1 or len(t) < 2:
            raise UsageError("time slab needs at least two snapshot times")
        steps = np.diff(t)
        if np.any(steps <= 0) or np.max(np.abs(steps - steps[0])) > 1e-12 * steps[0]:
            raise UsageError("slab times must be strictly increasing and uniform")
        if s.shape != (len(t),) + self.grid.shape:
            raise UsageError(f"slab shape {s.shape} inconsistent with times/grid")
        t.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "snapshots", s)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def field_at(self, index: int) -> ComplexField2D:
        return ComplexField2D(self.grid, self.snapshots[index], SPECTRAL)


@dataclass(frozen=True)
class EvolveResult:
    final: ComplexField2D
    slab: TimeSlabSpectral | None
    norm_drift: float
    boundary_trace: tuple[tuple[float, float], ...]
    energy_trace: tuple[tuple[float, float], ...]
    unitary: bool


def _fft2(a):
    return scipy.fft.fft2(a, norm="ortho", workers=fft_workers())


def _ifft2(a):
    return scipy.fft.ifft2(a, norm="ortho", workers=fft_workers())


def free_propagate(f: ComplexField2D, t: float) -> ComplexField2D:
    """Exact free flight: multiply by e^{-i t |theta|^2} on the lattice.

    Returns a field in the representation the input came in; the L2 norm is
    preserved to roundoff and flights compose exactly.
    """
    fh = to_spectral(f)
    out = fh.values * np.exp(-1j * t * f.grid.theta_squared())
    result = ComplexField2D(f.grid, out, SPECTRAL)
    return to_position(result) if f.rep == POSITION else result


def _absorb_mask(grid: Grid2D, strength: float, width: int) -> np.ndarray:
    """Cosine-ramp real mask: 1 in the interior, 1 - strength at the frame."""
    def ramp(n):
        d = np.minimum(np.arange(n), np.arange(n)[::-1]).astype(float)
        r = np.ones(n)
        edge = d < width
        r[edge] = 1.0 - strength * np.cos(np.pi * d[edge] / (2.0 * width)) ** 2
        return r
    return np.minimum.outer(ramp(grid.nx), ramp(grid.ny))


def _frame_mask(grid: Grid2D, width: int) -> np.ndarray:
    m = np.zeros(grid.shape, dtype=bool)
    m[:width, :] = True
    m[-width:, :] = True
    m[:, :width] = True
    m[:, -width:] = True
    return m


def boundary_mass(f: ComplexField2D, width_cells: int) -> float:
    """Fraction of the total |f|^2 mass inside the outer frame."""
    if width_cells < 1:
        raise UsageError(f"frame width must be >= 1 cell, got {width_cells}")
    v = np.abs(to_position(f).values) ** 2
    total = np.sum(v)
    if total == 0.0:
        return 0.0
    return float(np.sum(v[_frame_mask(f.grid, width_cells)]) / total)


def evolve(g: ComplexField2D, plan: EvolutionPlan) -> EvolveResult:
    """Split-step integration of g under the plan's potential.

    Records a spectral slab every ``record_stride`` steps when requested,
    monitors norm drift, frame mass and the energy quadratic form, and
    aborts with the step index if non-finite values appear.
    """
    grid = g.grid
    if plan.potential is not None:
        if plan.potential.grid != grid:
            raise UsageError("potential sampled on a different grid")
        if np.max(np.abs(plan.potential.values.imag)) > 0.0:
            raise UsageError("potential must be real-valued")
        v = plan.potential.values.real
        vmax = float(np.max(np.abs(v)))
        if plan.dt * vmax >= 10.0:
            raise UsageError(
                f"dt*max|V| = {plan.dt * vmax:.3g} >= 10 risks phase wrap across "
                "one step; reduce dt")
    else:
        v = None

    kinetic = np.exp(-1j * plan.dt * grid.theta_squared())
    if v is not None:
        pot_half = np.exp(-0.5j * plan.dt * v)
        pot_full = pot_half * pot_half
    mask = _absorb_mask(grid, plan.absorb, plan.absorb_width) if plan.absorb else None
    frame = _frame_mask(grid, plan.boundary_monitor_width)

    u = to_position(g).values.copy()
    norm0 = l2_norm(g)
    area = grid.cell_area
    theta2 = grid.theta_squared()

    stride = plan.record_stride
    if stride:
        n_rec = plan.n_steps // stride + 1
        snaps = np.empty((n_rec, grid.nx, grid.ny), dtype=np.complex128)
        times = plan.dt * stride * np.arange(n_rec)
    else:
        snaps = None
    observe_every = stride if stride else max(1, plan.n_steps // 64)

    norm_drift = 0.0
    boundary_trace = []
    energy_trace = []

    def observe(step, uh=None):
        nonlocal norm_drift
        t = step * plan.dt
        if uh is None:
            uh = _fft2(u)
        dens = np.abs(u) ** 2
        norm = np.sqrt(np.sum(dens) * area)
        if plan.unitary:
            norm_drift = max(norm_drift, abs(norm - norm0) / norm0)
        energy = float(np.sum(theta2 * np.abs(uh) ** 2) * area)
        if v is not None:
            energy += float(np.sum(v * dens) * area)
        total = np.sum(dens)
        frac = float(np.sum(dens[frame]) / total) if total > 0 else 0.0
        boundary_trace.append((float(t), frac))
        energy_trace.append((float(t), energy))
        return uh

    uh0 = observe(0)
    if snaps is not None:
        snaps[0] = uh0

    for step in range(1, plan.n_steps + 1):
        if v is not None:
            if plan.scheme == "strang":
                u *= pot_half
                u = _ifft2(_fft2(u) * kinetic)
                u *= pot_half
            else:
                u *= pot_full
                u = _ifft2(_fft2(u) * kinetic)
        else:
            u = _ifft2(_fft2(u) * kinetic)
        if mask is not None:
            u *= mask
        if step % 100 == 0 and not np.all(np.isfinite(u)):
            raise NumericalError(f"non-finite field values at step {step}")
        if step % observe_every == 0 or step == plan.n_steps:
            uh = observe(step)
            if snaps is not None and stride and step % stride == 0:
                snaps[step // stride] = uh

    if not np.all(np.isfinite(u)):
        raise NumericalError(f"non-finite field values at step {plan.n_steps}")

    slab = TimeSlabSpectral(grid, times, snaps) if snaps is not None else None
    return EvolveResult(
        final=ComplexField2D(grid, u, POSITION),
        slab=slab,
        norm_drift=norm_drift,
        boundary_trace=tuple(boundary_trace),
        energy_trace=tuple(energy_trace),
        unitary=plan.unitary,
    )


def multiply_slab_by_potential(slab: TimeSlabSpectral,
                               potential: ComplexField2D) -> TimeSlabSpectral:
    """Pointwise potential times slab, computed through position space."""
    if potential.grid != slab.grid:
        raise UsageError("potential sampled on a different grid")
    v = potential.values
    out = np.empty_like(slab.snapshots)
    for m in range(len(slab.times)):
        out[m] = _fft2(v * _ifft2(slab.snapshots[m]))
    return TimeSlabSpectral(slab.grid, slab.times.copy(), out)


def duhamel_integral(source: TimeSlabSpectral, t: float) -> ComplexField2D:
    """(L F)(t): retarded free propagation of the source, trapezoid in time.

    ``t`` must be the slab's final time; the slab spacing is the quadrature
    step.
    """
    if abs(t - source.times[-1]) > 1e-12 * max(1.0, abs(t)):
        raise UsageError(
            f"t = {t} must equal the slab's final time {source.times[-1]}")
    return _duhamel_running(source, upto=len(source.times) - 1)[1]


def _duhamel_running(source: TimeSlabSpectral, upto: int):
    """Trapezoid prefix integrals I_m = (L F)(tau_m) by one-step recurrence.

    I_{m+1} = e^{-i dtau |theta|^2} I_m
              + dtau/2 (e^{-i dtau |theta|^2} F_m + F_{m+1}).
    Yields (m, field) pairs lazily up to the requested node.
    """
    dtau = source.dt
    step_phase = np.exp(-1j * dtau * source.grid.theta_squared())
    acc = np.zeros(source.grid.shape, dtype=np.complex128)
    results = [(0, ComplexField2D(source.grid, acc, SPECTRAL))]
    for m in range(upto):
        acc = step_phase * acc + 0.5 * dtau * (step_phase * source.snapshots[m]
                                               + source.snapshots[m + 1])
        results.append((m + 1, ComplexField2D(source.grid, acc, SPECTRAL)))
    return results[upto]


def duhamel_integral_slab(source: TimeSlabSpectral) -> TimeSlabSpectral:
    """(L F) evaluated at every slab node, same recurrence as above."""
    dtau = source.dt
    step_phase = np.exp(-1j * dtau * source.grid.theta_squared())
    out = np.empty_like(source.snapshots)
    acc = np.zeros(source.grid.shape, dtype=np.complex128)
    out[0] = acc
    for m in range(len(source.times) - 1):
        acc = step_phase * acc + 0.5 * dtau * (step_phase * source.snapshots[m]
                                               + source.snapshots[m + 1])
        out[m + 1] = acc
    return TimeSlabSpectral(source.grid, source.times.copy(), out)


def solve_with_source(f: ComplexField2D | None, source: TimeSlabSpectral,
                      t: float) -> ComplexField2D:
    """Spectral solution w_hat(t) = e^{-it|theta|^2} f_hat - i (L F)(t)."""
    lf = duhamel_integral(source, t)
    out = -1j * lf.values
    if f is not None:
        if f.grid != source.grid:
            raise UsageError("initial value lives on a different grid")
        fh = to_spectral(f)
        out = out + fh.values * np.exp(-1j * t * source.grid.theta_squared())
    return ComplexField2D(source.grid, out, SPECTRAL)
