"""Grids, discrete transforms, norms and observables for 2D complex fields.

Conventions fixed here and relied on by every other module:

* the computational domain is a periodic box ``[x0_min, x0_min + lx) x
  [y0_min, y0_min + ly)`` sampled on an ``nx x ny`` lattice, values stored
  row-major with the x index first;
* the discrete Fourier transform is unitary (``norm="ortho"``), so the
  discrete L2 norm with quadrature weight ``dx*dy`` is identical in both
  representations (Parseval with no extra factors);
* wavenumbers are the standard signed periodic lattice, integer multiples
  of ``2*pi/lx`` and ``2*pi/ly``;
* derivatives are always spectral, never finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import ConfigurationError, UsageError

POSITION = "position"
SPECTRAL = "spectral"

_MAGIC = b"SLW1"

# scipy.fft worker count used by every transform in the package; set once
# from the CLI --threads flag.
_workers = 1


def set_fft_workers(n: int) -> None:
    global _workers
    if n < 1:
        raise UsageError(f"worker count must be >= 1, got {n}")
    _workers = int(n)


def fft_workers() -> int:
    return _workers


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Periodic computational box with its spectral lattice.

    Attributes
    ----------
    nx, ny : int
        Sample counts (powers of two).
    lx, ly : float
        Box side lengths.
    x0_min, y0_min : float
        Coordinates of the lower corner.
    """

    nx: int
    ny: int
    lx: float
    ly: float
    x0_min: float
    y0_min: float
    xs: np.ndarray = field(init=False, repr=False, compare=False)
    ys: np.ndarray = field(init=False, repr=False, compare=False)
    xi: np.ndarray = field(init=False, repr=False, compare=False)
    eta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = self.x0_min + self.dx * np.arange(self.nx)
        ys = self.y0_min + self.dy * np.arange(self.ny)
        xi = 2.0 * np.pi * scipy.fft.fftfreq(self.nx, d=self.dx)
        eta = 2.0 * np.pi * scipy.fft.fftfreq(self.ny, d=self.dy)
        for name, arr in (("xs", xs), ("ys", ys), ("xi", xi), ("eta", eta)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def theta_squared(self) -> np.ndarray:
        """|theta|^2 = xi^2 + eta^2 on the spectral lattice, shape (nx, ny)."""
        return self.xi[:, None] ** 2 + self.eta[None, :] ** 2

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    def nearest_x_index(self, x: float) -> int:
        j = int(round((x - self.x0_min) / self.dx))
        if j < 0 or j >= self.nx:
            raise UsageError(f"x = {x} outside box [{self.x0_min}, {self.x0_min + self.lx})")
        return j

    def nearest_y_index(self, y: float) -> int:
        k = int(round((y - self.y0_min) / self.dy))
        if k < 0 or k >= self.ny:
            raise UsageError(f"y = {y} outside box [{self.y0_min}, {self.y0_min + self.ly})")
        return k


def make_grid(nx: int, ny: int, lx: float, ly: float,
              x0_min: float, y0_min: float) -> Grid2D:
    """Build a grid, rejecting shapes the spectral kernels cannot use.

    Sample counts must be powers of two (>= 8) and extents positive.
    """
    problems = []
    for name, n in (("nx", nx), ("ny", ny)):
        if not isinstance(n, (int, np.integer)) or n < 8 or not _is_power_of_two(int(n)):
            problems.append(f"{name} must be a power of two >= 8, got {n!r}")
    for name, l in (("lx", lx), ("ly", ly)):
        if not l > 0:
            problems.append(f"{name} must be positive, got {l!r}")
    if problems:
        raise ConfigurationError("invalid grid: " + "; ".join(problems), problems)
    return Grid2D(int(nx), int(ny), float(lx), float(ly), float(x0_min), float(y0_min))


@dataclass(frozen=True)
class ComplexField2D:
    """Complex samples on a grid, tagged position or spectral."""

    grid: Grid2D
    values: np.ndarray
    rep: str = POSITION

    def __post_init__(self):
        if self.rep not in (POSITION, SPECTRAL):
            raise UsageError(f"unknown representation {self.rep!r}")
        v = np.ascontiguousarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            raise UsageError(
                f"field shape {v.shape} does not match grid {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray, rep: str | None = None) -> "ComplexField2D":
        return ComplexField2D(self.grid, values, self.rep if rep is None else rep)


@dataclass(frozen=True)
class StripRegion:
    """Vertical strip [x_lo, x_hi] x R, truncated to the box."""

    x_lo: float
    x_hi: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise UsageError(f"strip needs x_lo < x_hi, got [{self.x_lo}, {self.x_hi}]")


def transform(f: ComplexField2D, direction: str = "forward") -> ComplexField2D:
    """Unitary DFT between representations; round-trip is the identity.

    ``forward`` requires a position field, ``inverse`` a spectral one.
    """
    if direction == "forward":
        if f.rep != POSITION:
            raise UsageError("forward transform requires a position-representation field")
        out = scipy.fft.fft2(f.values, norm="ortho", workers=_workers)
        return ComplexField2D(f.grid, out, SPECTRAL)
    if direction == "inverse":
        if f.rep != SPECTRAL:
            raise UsageError("inverse transform requires a spectral-representation field")
        out = scipy.fft.ifft2(f.values, norm="ortho", workers=_workers)
        return ComplexField2D(f.grid, out, POSITION)
    raise UsageError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def to_position(f: ComplexField2D) -> ComplexField2D:
    return f if f.rep == POSITION else transform(f, "inverse")


def to_spectral(f: ComplexField2D) -> ComplexField2D:
    return f if f.rep == SPECTRAL else transform(f, "forward")


def l2_norm(f: ComplexField2D) -> float:
    """Discrete L2 norm; identical in both representations (Parseval)."""
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2) * f.grid.cell_area))


def inner(f: ComplexField2D, g: ComplexField2D) -> complex:
    """<f, g> = sum conj(f) g dx dy, conjugate-linear in the first slot."""
    if f.grid != g.grid:
        raise UsageError("inner product requires fields on the same grid")
    if f.rep != g.rep:
        raise UsageError("inner product requires matching representations")
    return complex(np.vdot(f.values, g.values) * f.grid.cell_area)


def h1_norm(f: ComplexField2D) -> float:
    """H1 norm computed spectrally with (1 + |theta|^2) weights."""
    fh = to_spectral(f)
    w = 1.0 + f.grid.theta_squared()
    return float(np.sqrt(np.sum(w * np.abs(fh.values) ** 2) * f.grid.cell_area))


def momentum_expectation(f: ComplexField2D, axis: str) -> float:
    """Re <f, -i d_axis f> for a unit-norm position field, evaluated spectrally.

    Equals sum theta_axis |fhat|^2 dx dy, real by construction.
    """
    if f.rep != POSITION:
        raise UsageError("momentum expectation expects a position-representation field")
    n = l2_norm(f)
    if abs(n - 1.0) > 1e-6:
        raise UsageError(f"field must be L2-normalized within 1e-6, norm = {n}")
    fh = to_spectral(f)
    if axis == "x":
        theta = f.grid.xi[:, None]
    elif axis == "y":
        theta = f.grid.eta[None, :]
    else:
        raise UsageError(f"axis must be 'x' or 'y', got {axis!r}")
    return float(np.sum(theta * np.abs(fh.values) ** 2) * f.grid.cell_area)


def spectral_gradient(f: ComplexField2D) -> tuple[np.ndarray, np.ndarray]:
    """(d_x f, d_y f) position samples via multiplication by i theta."""
    fh = to_spectral(f).values
    g = f.grid
    gx = scipy.fft.ifft2(1j * g.xi[:, None] * fh, norm="ortho", workers=_workers)
    gy = scipy.fft.ifft2(1j * g.eta[None, :] * fh, norm="ortho", workers=_workers)
    return gx, gy


def strip_h1_norm(f: ComplexField2D, region: StripRegion) -> float:
    """H1 norm restricted to a vertical strip.

    The gradient is spectral on the full box; the quadrature then runs over
    the sample columns with x_lo <= x_j <= x_hi (full cell weight each).
    """
    f = to_position(f)
    g = f.grid
    if region.x_hi < g.xs[0] or region.x_lo > g.xs[-1]:
        raise UsageError(
            f"strip [{region.x_lo}, {region.x_hi}] lies outside the box x-range "
            f"[{g.xs[0]}, {g.xs[-1]}]")
    mask = (g.xs >= region.x_lo) & (g.xs <= region.x_hi)
    if not np.any(mask):
        raise UsageError("strip contains no sample columns")
    gx, gy = spectral_gradient(f)
    density = (np.abs(f.values[mask, :]) ** 2
               + np.abs(gx[mask, :]) ** 2
               + np.abs(gy[mask, :]) ** 2)
    return float(np.sqrt(np.sum(density) * g.cell_area))


def continuum_ft(f: ComplexField2D) -> np.ndarray:
    """Continuum-convention Fourier samples F(theta) = integral f e^{-i theta.x}.

    Converts the unitary DFT to the quadrature approximation of the integral
    transform on the spectral lattice (phase-corrected for the box corner).
    Used when comparing grid transforms against closed-form transforms.
    """
    g = f.grid
    fh = to_spectral(f).values
    phase = np.exp(-1j * (g.xi[:, None] * g.x0_min + g.eta[None, :] * g.y0_min))
    return fh * phase * (g.cell_area * np.sqrt(g.nx * g.ny))


# -- binary field dump (SLW1) -------------------------------------------------

_HEADER = struct.Struct("<4sII4dB")
_REP_TAGS = {POSITION: 0, SPECTRAL: 1}
_TAG_REPS = {v: k for k, v in _REP_TAGS.items()}


def write_field(path, f: ComplexField2D) -> None:
    """Write the little-endian SLW1 dump: header plus interleaved re/im pairs."""
    g = f.grid
    header = _HEADER.pack(_MAGIC, g.nx, g.ny, g.lx, g.ly, g.x0_min, g.y0_min,
                          _REP_TAGS[f.rep])
    payload = np.empty((g.nx, g.ny, 2), dtype="<f8")
    payload[:, :, 0] = f.values.real
    payload[:, :, 1] = f.values.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_field(path) -> ComplexField2D:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) != _HEADER.size:
            raise UsageError(f"{path}: truncated SLW1 header")
        magic, nx, ny, lx, ly, x0_min, y0_min, tag = _HEADER.unpack(raw)
        if magic != _MAGIC:
            raise UsageError(f"{path}: bad magic {magic!r}, expected {_MAGIC!r}")
        if tag not in _TAG_REPS:
            raise UsageError(f"{path}: unknown representation tag {tag}")
        data = np.frombuffer(fh.read(nx * ny * 16), dtype="<f8")
        if data.size != nx * ny * 2:
            raise UsageError(f"{path}: truncated SLW1 payload")
    grid = make_grid(nx, ny, lx, ly, x0_min, y0_min)
    pairs = data.reshape(nx, ny, 2)
    values = pairs[:, :, 0] + 1j * pairs[:, :, 1]
    return ComplexField2D(grid, values, _TAG_REPS[tag])
