"""Closed-form reference objects: fundamental solution, point-source wave,
slit-filtered wave and the screen intensity law.

The free fundamental solution is

    E(t; x, y) = exp(i (x^2 + y^2) / 4t) / (4 pi i t),

and filtering a point-source wave through the slit set S at passage time t0
gives, after writing out the convolution,

    w1(t, x, y) = -e^{(i/4)((x^2+y^2)/(t-t0) + x0^2/t0)} / (16 pi^2 (t-t0) t0)
                  * integral_S e^{i chirp(t) s^2} e^{-i s y / 2(t-t0)} ds,

with quadratic chirp coefficient chirp(t) = t / (4 t0 (t - t0)), obtained by
collecting the s^2/4t0 and s^2/4(t-t0) phases of the two fundamental-solution
factors.  The screen intensity at t = t0 + T is then proportional to the
squared modulus of the chirped slit transform at frequency y/2T.

The oscillatory slit transform is evaluated by oversampled discrete
transforms (Bluestein zoom FFT over each slit interval with composite
Simpson weights) guarded by a per-sample phase bound, rather than by
stationary-phase asymptotics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.fft
import scipy.signal

from .errors import ResolutionError, UsageError
from .fields import Grid2D, SPECTRAL, fft_workers
from .propagate import TimeSlabSpectral
from .regularize import SlitConfig

# per-sample phase budget of the oscillatory quadratures; 8x oversampling on
# top of it puts the composite-Simpson relative error near (pi/32)^4/180
_PHASE_BUDGET = np.pi / 4.0
_OVERSAMPLE = 8
_MIN_NODES = 65


def sinc(z):
    """sin(z)/z with the removable singularity at 0."""
    return np.sinc(np.asarray(z) / np.pi)


@dataclass(frozen=True)
class PhysicsScenario:
    """Geometry of one diffraction experiment.

    The source sits at (-x0, 0), passes the plane x = 0 at time t0, and the
    screen at distance x1 is read out after a further flight time T.
    """

    x0: float
    t0: float
    T: float
    x1: float
    slits: SlitConfig

    def __post_init__(self):
        for name in ("x0", "t0", "T", "x1"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def t1(self) -> float:
        return self.t0 + self.T

    def chirp(self, t: float) -> float:
        """Quadratic phase coefficient of the slit transform at time t."""
        return t / (4.0 * self.t0 * (t - self.t0))

    @property
    def chirp0(self) -> float:
        return self.chirp(self.t1)

    def chirp_phase_range(self) -> float:
        """Largest chirp phase variation across a single slit at readout.

        Controls how far the intensity is from its chirp-free reduction;
        fringe minima stay sharp while this is well below a radian.
        """
        return max(abs(self.chirp0) * abs(b * b - a * a)
                   for a, b in self.slits.intervals) if self.slits.intervals else 0.0


def fundamental_solution(t, x, y):
    """E(t; x, y), the free fundamental solution; singular at t = 0."""
    t = float(t)
    if t == 0.0:
        raise UsageError("the fundamental solution is distributional at t = 0")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.exp(1j * (x**2 + y**2) / (4.0 * t)) / (4j * np.pi * t)


def point_source_wave(scenario: PhysicsScenario, t, x, y):
    """Free wave of a particle emitted at (-x0, 0): E(t, x + x0, y)."""
    if not t > 0:
        raise UsageError(f"point-source wave needs t > 0, got {t}")
    return fundamental_solution(t, np.asarray(x) + scenario.x0, y)


def _simpson_weights(n: int, ds: float) -> np.ndarray:
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (ds / 3.0)


def _nodes_for(interval, chirp, k_max, n_samples):
    a, b = interval
    slope = 2.0 * abs(chirp) * max(abs(a), abs(b)) + k_max
    n_guard = int(np.ceil((b - a) * slope / _PHASE_BUDGET)) + 2
    if n_samples is not None:
        n = int(n_samples) | 1
        if n < n_guard:
            raise ResolutionError(
                f"chirped transform on [{a}, {b}] needs at least {n_guard} "
                f"samples for the pi/4 per-sample phase budget, got {n}")
        return n
    return max(_OVERSAMPLE * n_guard, _MIN_NODES) | 1


def _uniform_spacing(k: np.ndarray):
    if len(k) < 16:
        return None
    dk = np.diff(k)
    if dk[0] <= 0 or np.max(np.abs(dk - dk[0])) > 1e-9 * abs(dk[0]):
        return None
    return float(dk[0])


def _oscillatory_sum(coeffs: np.ndarray, s0: float, ds: float,
                     k: np.ndarray) -> np.ndarray:
    """sum_j coeffs_j e^{-i k (s0 + j ds)} for every k, zoom FFT when uniform."""
    dk = _uniform_spacing(k)
    if dk is not None:
        m = len(k)
        f1 = k[0] * ds / (2.0 * np.pi)
        df = dk * ds / (2.0 * np.pi)
        vals = scipy.signal.zoom_fft(coeffs, [f1, f1 + m * df], m=m, fs=1,
                                     endpoint=False)
        return vals * np.exp(-1j * k * s0)
    out = np.empty(len(k), dtype=np.complex128)
    s = s0 + ds * np.arange(len(coeffs))
    for lo in range(0, len(k), 512):
        blk = k[lo:lo + 512]
        out[lo:lo + 512] = np.exp(-1j * np.outer(blk, s)) @ coeffs
    return out


def chirped_slit_transform(slits: SlitConfig, chirp: float, k,
                           n_samples: int | None = None) -> np.ndarray:
    """integral_S e^{i chirp s^2} e^{-i k s} ds, per-interval Simpson sums.

    Exactly additive over disjoint slit intervals.  Node counts follow the
    per-sample phase budget; passing an insufficient ``n_samples`` raises a
    resolution error naming the required count.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    out = np.zeros(k.shape, dtype=np.complex128)
    k_max = float(np.max(np.abs(k))) if k.size else 0.0
    for interval in slits.intervals:
        a, b = interval
        n = _nodes_for(interval, chirp, k_max, n_samples)
        s = np.linspace(a, b, n)
        coeffs = _simpson_weights(n, s[1] - s[0]) * np.exp(1j * chirp * s**2)
        out += _oscillatory_sum(coeffs, a, s[1] - s[0], k)
    return out


def w1_closed_form(scenario: PhysicsScenario, t: float, x: float,
                   y_samples, n_samples: int | None = None) -> np.ndarray:
    """Slit-filtered wave profile over y at fixed (t, x), t > t0."""
    if not t > scenario.t0:
        raise UsageError(f"w1 is defined for t > t0 = {scenario.t0}, got t = {t}")
    y = np.atleast_1d(np.asarray(y_samples, dtype=float))
    lag = t - scenario.t0
    k = y / (2.0 * lag)
    transform = chirped_slit_transform(scenario.slits, scenario.chirp(t), k,
                                       n_samples=n_samples)
    prefactor = (-np.exp(0.25j * ((x**2 + y**2) / lag + scenario.x0**2 / scenario.t0))
                 / (16.0 * np.pi**2 * lag * scenario.t0))
    return prefactor * transform


def intensity_analytic(scenario: PhysicsScenario, y_samples,
                       n_samples: int | None = None) -> np.ndarray:
    """Screen intensity law |transform(chirp0, y/2T)|^2.

    Normalized by 16^2 pi^4 T^2 t0^2 times the squared slit-filtered wave, so
    profiles are comparable across scenarios; independent of the screen
    distance, whose phase drops under the modulus.
    """
    y = np.atleast_1d(np.asarray(y_samples, dtype=float))
    k = y / (2.0 * scenario.T)
    vals = chirped_slit_transform(scenario.slits, scenario.chirp0, k,
                                  n_samples=n_samples)
    return np.abs(vals) ** 2


def fresnel_convolution_profile(q: np.ndarray, s_values: np.ndarray,
                                t_flight: float, y_targets) -> np.ndarray:
    """1D free convolution (E1(T) * q)(y) of a sampled compact profile.

    E1 is the 1D fundamental factor e^{i y^2/4T}/sqrt(4 pi i T); the samples
    q live on a uniform s lattice and are trapezoid-summed.  The per-sample
    phase budget guards both the quadratic and the kernel phase.
    """
    q = np.asarray(q, dtype=np.complex128)
    s = np.asarray(s_values, dtype=float)
    y = np.atleast_1d(np.asarray(y_targets, dtype=float))
    if q.shape != s.shape or q.ndim != 1:
        raise UsageError("profile and lattice shapes differ")
    nz = np.nonzero(np.abs(q))[0]
    if len(nz) == 0:
        return np.zeros(y.shape, dtype=np.complex128)
    q, s = q[nz[0]:nz[-1] + 1], s[nz[0]:nz[-1] + 1]
    if len(s) > 1:
        ds = s[1] - s[0]
        s_max = np.max(np.abs(s))
        slope = (s_max + np.max(np.abs(y))) / (2.0 * t_flight)
        if ds * slope >= _PHASE_BUDGET:
            need = ds * slope / _PHASE_BUDGET
            raise ResolutionError(
                f"slit-plane trace under-resolved for the Fresnel kernel: "
                f"lattice step {ds:g} exceeds the phase budget by x{need:.2f}")
    else:
        ds = 1.0
    weights = np.full(len(s), ds)
    weights[0] = weights[-1] = 0.5 * ds
    coeffs = weights * q * np.exp(1j * s**2 / (4.0 * t_flight))
    k = y / (2.0 * t_flight)
    osc = _oscillatory_sum(coeffs, float(s[0]), float(ds) if len(s) > 1 else 1.0, k)
    return np.exp(1j * y**2 / (4.0 * t_flight)) / np.sqrt(4j * np.pi * t_flight) * osc


def tilde_w1_source(scenario: PhysicsScenario, grid: Grid2D,
                    time_lattice) -> TimeSlabSpectral:
    """Discrete kick source: delta at time t0, thin column at x = 0, profile
    b0(y) E(t0, x0, y) across the slits.

    Solving the source problem with zero initial value yields the
    Heaviside-switched slit wave -i H(t - t0) w1; the output vanishes
    identically before t0 by construction.
    """
    times = np.asarray(time_lattice, dtype=float)
    if times.ndim != 1 or len(times) < 3:
        raise UsageError("time lattice needs at least three nodes")
    dt = times[1] - times[0]
    m0_float = (scenario.t0 - times[0]) / dt
    m0 = int(round(m0_float))
    if abs(m0_float - m0) > 1e-9:
        raise UsageError(
            f"t0 = {scenario.t0} is not on the time lattice (spacing {dt:g})")
    if m0 < 1 or m0 > len(times) - 2:
        raise UsageError("t0 must be an interior node of the time lattice")
    j0 = grid.nearest_x_index(0.0)
    trace = (scenario.slits.indicator(grid.ys, boundary_value=0.5)
             * point_source_wave(scenario, scenario.t0, 0.0, grid.ys))
    spatial = np.zeros(grid.shape, dtype=np.complex128)
    spatial[j0, :] = trace / grid.dx
    snaps = np.zeros((len(times),) + grid.shape, dtype=np.complex128)
    snaps[m0] = scipy.fft.fft2(spatial / dt, norm="ortho", workers=fft_workers())
    return TimeSlabSpectral(grid, times, snaps)


def closed_form_spectra(eps: float, p0: float, d: float, grid: Grid2D) -> dict:
    """Sinc-form transforms of the sharp-family profiles on the grid lattice.

    Returns the transversal spectral profile of the initial packet,
    sqrt(2/eps) sinc(eta/eps), and the 2D potential transform
    (1/eps) sinc(eps xi) (delta_0(eta) - 2 d sinc(d eta)) with the delta
    realized as the eta = 0 lattice row weighted 1/dy.
    """
    if not (eps > 0 and d > 0):
        raise UsageError("eps and d must be positive")
    g_eta = np.sqrt(2.0 / eps) * sinc(grid.eta / eps)
    delta_row = np.zeros_like(grid.eta)
    delta_row[0] = 1.0 / grid.dy
    v_hat = (1.0 / eps) * np.outer(sinc(eps * grid.xi),
                                   delta_row - 2.0 * d * sinc(d * grid.eta))
    return {"g_eta": g_eta, "v_hat": v_hat, "p0": p0}
