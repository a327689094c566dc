"""Uniform periodic grids, sampled spectra and Fourier-domain convolution.

The grid covers ``[-L/2, L/2)`` with ``n`` points. Transforms follow the
continuum convention: the forward transform multiplies by ``dx`` and the
inverse by ``1/L``, so that

    sum(|f|**2) * dx == sum(|F|**2) * dw / (2*pi)

and discrete norms approximate L2 norms on the real line directly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, MeasurementError, ParameterDomainError
from .kernels import KernelSpec, fourier_symbol, real_space


@dataclass(frozen=True)
class Grid:
    n: int = 4096
    length: float = 64.0

    def __post_init__(self):
        n = int(self.n)
        if n != self.n or n < 8 or n & (n - 1):
            raise ParameterDomainError(f"grid size must be a power of two >= 8, got {self.n!r}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ParameterDomainError(f"grid length must be positive, got {self.length!r}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def domega(self) -> float:
        return 2 * math.pi / self.length

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.n)

    @property
    def omega(self) -> np.ndarray:
        """Angular frequencies in FFT order."""
        return 2 * math.pi * np.fft.fftfreq(self.n, self.dx)

    @property
    def nyquist(self) -> float:
        return math.pi / self.dx

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= -0.5 * self.length) & (x < 0.5 * self.length)))

    def to_json(self) -> dict:
        return {"n": self.n, "length": self.length}

    @classmethod
    def from_json(cls, obj: dict) -> "Grid":
        unknown = set(obj) - {"n", "length"}
        if unknown:
            raise ConfigurationError(f"unknown grid fields: {sorted(unknown)}")
        return cls(n=obj["n"], length=obj["length"])

    # transforms; the (-1)**m factor moves the origin from index 0 to n/2

    def _sign(self) -> np.ndarray:
        m = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
        return np.where(m % 2 == 0, 1.0, -1.0)

    def forward(self, values) -> np.ndarray:
        return self.dx * self._sign() * np.fft.fft(values)

    def inverse(self, spectrum) -> np.ndarray:
        """Inverse transform; returns the real part."""
        return np.fft.ifft(self._sign() * np.asarray(spectrum)).real / self.dx

    def inverse_complex(self, spectrum) -> np.ndarray:
        return np.fft.ifft(self._sign() * np.asarray(spectrum)) / self.dx


@dataclass(frozen=True, eq=False)
class SampledSpectrum:
    """Real function values on a :class:`Grid`; immutable."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != (self.grid.n,):
            raise ConfigurationError(f"expected {self.grid.n} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("spectrum values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.grid.dx))

    def fourier(self) -> np.ndarray:
        return self.grid.forward(self.values)

    @classmethod
    def from_fourier(cls, grid: Grid, spectrum) -> "SampledSpectrum":
        return cls(grid, grid.inverse(spectrum))

    def _check(self, other: "SampledSpectrum"):
        if other.grid != self.grid:
            raise ConfigurationError("spectra live on different grids")

    def __add__(self, other):
        self._check(other)
        return SampledSpectrum(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return SampledSpectrum(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return SampledSpectrum(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    # CSV: header x,value with 17 significant digits

    def to_csv(self, path=None) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "value"])
        for xi, vi in zip(self.x, self.values):
            w.writerow([f"{xi:.17g}", f"{vi:.17g}"])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text

    @classmethod
    def from_csv(cls, source) -> "SampledSpectrum":
        """Read a spectrum written by :meth:`to_csv` (path or text).

        The grid is reconstructed from the point count and spacing.
        """
        if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
            text = Path(source).read_text(encoding="utf-8")
        else:
            text = source
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["x", "value"]:
            raise ConfigurationError("spectrum CSV must start with header 'x,value'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        n = len(data)
        if n < 2:
            raise ConfigurationError("spectrum CSV has too few rows")
        dx = (data[-1, 0] - data[0, 0]) / (n - 1)
        grid = Grid(n=n, length=dx * n)
        if not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-9 * grid.length):
            raise ConfigurationError("spectrum CSV x column is not a centred uniform grid")
        return cls(grid, data[:, 1])


@dataclass(frozen=True)
class LineSpectrum:
    """Discrete line list: sorted, distinct locations with intensities."""

    locations: tuple
    intensities: tuple

    def __post_init__(self):
        loc = tuple(float(v) for v in self.locations)
        inten = tuple(float(v) for v in self.intensities)
        if len(loc) != len(inten):
            raise ConfigurationError("locations and intensities differ in length")
        if any(b <= a for a, b in zip(loc, loc[1:])):
            raise ConfigurationError("line locations must be strictly increasing")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "intensities", inten)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Sequence[float]]) -> "LineSpectrum":
        pairs = sorted((float(a), float(b)) for a, b in pairs)
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    def pairs(self) -> list:
        return list(zip(self.locations, self.intensities))

    def __len__(self):
        return len(self.locations)

    def to_json(self) -> list:
        return [list(p) for p in self.pairs()]

    def to_csv(self, path=None) -> str:
        text = "location,intensity\n" + "".join(
            f"{a:.17g},{b:.17g}\n" for a, b in self.pairs()
        )
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        return text


def symbol_on_grid(kernel, grid: Grid) -> np.ndarray:
    """Symbol values at the grid frequencies.

    ``kernel`` may be a :class:`KernelSpec` or an array of symbol values
    already laid out in FFT order.
    """
    if isinstance(kernel, KernelSpec):
        return np.asarray(fourier_symbol(kernel, grid.omega), dtype=float)
    arr = np.asarray(kernel)
    if arr.shape != (grid.n,):
        raise ConfigurationError("symbol array does not match the grid")
    return arr


def sample_kernel(kernel, grid: Grid) -> SampledSpectrum:
    """The kernel centred at x = 0, by inverse transform of its symbol."""
    return SampledSpectrum.from_fourier(grid, symbol_on_grid(kernel, grid))


def _phases(lines: LineSpectrum, grid: Grid) -> np.ndarray:
    w = grid.omega
    out = np.zeros(grid.n, dtype=complex)
    for xi, ui in lines.pairs():
        out += ui * np.exp(-1j * w * xi)
    return out


def broaden(lines: LineSpectrum, kernel, grid: Grid) -> SampledSpectrum:
    """Sum of kernel copies translated to each line, via Fourier phase shifts."""
    if len(lines) and not grid.contains(lines.locations):
        raise ParameterDomainError("line location outside the grid domain")
    return SampledSpectrum.from_fourier(grid, _phases(lines, grid) * symbol_on_grid(kernel, grid))


def broaden_direct(lines: LineSpectrum, kernel: KernelSpec, grid: Grid) -> SampledSpectrum:
    """Real-space summation of closed-form kernels (no periodization)."""
    x = grid.x
    vals = np.zeros(grid.n)
    for xi, ui in lines.pairs():
        vals += ui * real_space(kernel, x - xi)
    return SampledSpectrum(grid, vals)


def convolve(f: SampledSpectrum, kernel) -> SampledSpectrum:
    """Circular convolution with a kernel, done in the Fourier domain."""
    grid = f.grid
    return SampledSpectrum.from_fourier(grid, f.fourier() * symbol_on_grid(kernel, grid))


def add_noise(g: SampledSpectrum, level: float, seed: int) -> SampledSpectrum:
    """Add Gaussian white noise scaled to relative norm ``level`` exactly."""
    if not level > 0:
        raise ParameterDomainError("noise level must be positive")
    gnorm = g.norm()
    if gnorm == 0:
        raise MeasurementError("cannot scale relative noise on a zero signal")
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(g.grid.n)
    e *= level * gnorm / np.sqrt(np.sum(e**2) * g.grid.dx)
    return SampledSpectrum(g.grid, g.values + e)


def fwhm(g: SampledSpectrum) -> float:
    """Full width at half maximum of the peak around the global maximum.

    Only the connected region above half height is measured, so negative or
    positive side bands do not contribute. Crossings are linearly
    interpolated.
    """
    y = g.values
    i = int(np.argmax(y))
    peak = y[i]
    if not peak > 0:
        raise MeasurementError("spectrum has no positive maximum")
    half = 0.5 * peak
    below = np.nonzero(y[:i] < half)[0]
    above = np.nonzero(y[i + 1:] < half)[0]
    if below.size == 0 or above.size == 0:
        raise MeasurementError("half-height crossing not found inside the grid")
    l = below[-1]
    r = i + 1 + above[0]
    dx = g.grid.dx
    x = g.x
    xl = x[l] + (half - y[l]) / (y[l + 1] - y[l]) * dx
    xr = x[r - 1] + (y[r - 1] - half) / (y[r - 1] - y[r]) * dx
    return float(xr - xl)


def write_grid_json(grid: Grid, path) -> None:
    Path(path).write_text(json.dumps(grid.to_json()) + "\n", encoding="utf-8")
