"""Variable projection fitting of line locations and intensities.

For fixed locations the intensities solve a linear least squares problem;
the locations are found by Gauss-Newton on the projected residual
``||A(x) A(x)^+ g - g||``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sl

from .errors import ConfigurationError, RankDeficiencyError
from .grid import Grid, SampledSpectrum, symbol_on_grid
from .kernels import KernelSpec

log = logging.getLogger(__name__)

RANK_RTOL = 1e-10


@dataclass(frozen=True)
class FitProblem:
    data: SampledSpectrum
    kernel: object  # KernelSpec, or symbol values on the data grid
    n_lines: int
    initial_locations: tuple

    def __post_init__(self):
        locs = tuple(float(v) for v in self.initial_locations)
        if self.n_lines < 1 or len(locs) != self.n_lines:
            raise ConfigurationError("need one initial location per line")
        object.__setattr__(self, "initial_locations", locs)
        _check_separation(np.array(locs), self.data.grid)

    def to_json(self, data_path: Optional[str] = None) -> dict:
        if not isinstance(self.kernel, KernelSpec):
            raise ConfigurationError("only KernelSpec line shapes serialize to JSON")
        return {
            "data": data_path,
            "kernel": self.kernel.to_json(),
            "n_lines": self.n_lines,
            "initial_locations": list(self.initial_locations),
        }


@dataclass
class FitResult:
    locations: np.ndarray
    intensities: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    condition_estimate: float
    history: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "locations": [float(v) for v in self.locations],
            "intensities": [float(v) for v in self.intensities],
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "condition_estimate": self.condition_estimate,
        }


def _check_separation(locs: np.ndarray, grid: Grid):
    if len(locs) < 2:
        return
    order = np.argsort(locs)
    gaps = np.diff(locs[order])
    j = int(np.argmin(gaps))
    if gaps[j] < 2 * grid.dx:
        pair = (int(order[j]), int(order[j + 1]))
        raise RankDeficiencyError(
            f"line locations {locs[pair[0]]:.6g} and {locs[pair[1]]:.6g} are closer than 2*dx", pair
        )


def design_matrix(grid: Grid, symbol: np.ndarray, locations) -> np.ndarray:
    """Columns are the line shape translated to each location (grid units, L2 scaled)."""
    w = grid.omega
    cols = [grid.inverse(symbol * np.exp(-1j * w * x)) for x in np.atleast_1d(locations)]
    return np.column_stack(cols)


def _lstsq(A: np.ndarray, b: np.ndarray, locations):
    Q, R, perm = sl.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_RTOL * diag[0])) if diag.size else 0
    if rank < A.shape[1]:
        locs = np.asarray(locations, dtype=float)
        order = np.argsort(locs)
        j = int(np.argmin(np.diff(locs[order]))) if len(locs) > 1 else 0
        pair = (int(order[j]), int(order[min(j + 1, len(locs) - 1)]))
        raise RankDeficiencyError(
            f"design matrix has rank {rank} < {A.shape[1]}; near-coincident lines at "
            f"{locs[pair[0]]:.6g} and {locs[pair[1]]:.6g}",
            pair,
        )
    coef = np.empty(A.shape[1])
    coef[perm] = sl.solve_triangular(R, Q.T @ b)
    return coef


def solve_intensities(data: SampledSpectrum, kernel, locations):
    """Least-squares intensities for fixed locations.

    Returns ``(intensities, residual_norm)`` with the residual in the L2 norm.
    """
    grid = data.grid
    locations = np.atleast_1d(np.asarray(locations, dtype=float))
    _check_separation(locations, grid)
    A = design_matrix(grid, symbol_on_grid(kernel, grid), locations)
    u = _lstsq(A, data.values, locations)
    r = A @ u - data.values
    return u, float(np.sqrt(np.sum(r**2) * grid.dx))


def _projected_residual(data, symbol, locations):
    grid = data.grid
    A = design_matrix(grid, symbol, locations)
    u = _lstsq(A, data.values, locations)
    return (A @ u - data.values) * math.sqrt(grid.dx), u, A


def varpro_fit(
    problem: FitProblem,
    max_iter: int = 50,
    gtol: float = 1e-8,
    xtol: float = 1e-10,
    damped: bool = True,
) -> FitResult:
    """Gauss-Newton on the variable projection functional.

    The Jacobian of the projected residual is taken by central differences
    in the locations with step ``max(1e-6, dx/10)``. With ``damped=True``
    the step is halved until the residual decreases; ``damped=False`` takes
    plain Gauss-Newton steps.
    """
    data = problem.data
    grid = data.grid
    symbol = symbol_on_grid(problem.kernel, grid)
    h = max(1e-6, grid.dx / 10)
    x = np.array(problem.initial_locations, dtype=float)

    r, u, A = _projected_residual(data, symbol, x)
    rnorm = float(np.linalg.norm(r))
    history = [rnorm]
    converged = False
    it = 0
    try:
        for it in range(max_iter + 1):
            J = np.empty((r.size, x.size))
            for i in range(x.size):
                e = np.zeros_like(x)
                e[i] = h
                rp = _projected_residual(data, symbol, x + e)[0]
                rm = _projected_residual(data, symbol, x - e)[0]
                J[:, i] = (rp - rm) / (2 * h)
            grad = J.T @ r
            if np.linalg.norm(grad) < gtol:
                converged = True
                break
            if it == max_iter:
                break
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
            t = 1.0
            accepted = False
            blocked = hit_guard = False
            for _ in range(40 if damped else 1):
                x_new = x + t * step
                try:
                    _check_separation(x_new, grid)
                    r_new, u_new, A_new = _projected_residual(data, symbol, x_new)
                except RankDeficiencyError as exc:
                    if not damped:
                        raise
                    blocked = hit_guard = True
                    last_exc = exc
                    t *= 0.5
                    continue
                blocked = False
                if not damped or np.linalg.norm(r_new) < rnorm:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                if blocked:
                    # pinned against the separation safeguard: the lines want to merge
                    raise last_exc
                converged = bool(np.linalg.norm(t * step) < xtol or rnorm == 0.0)
                break
            moved = float(np.linalg.norm(x_new - x))
            x, r, u, A = x_new, r_new, u_new, A_new
            rnorm = float(np.linalg.norm(r))
            history.append(rnorm)
            if moved < xtol * (1 + float(np.linalg.norm(x))):
                it += 1
                if hit_guard:
                    # stalled against the separation safeguard, not at a minimum
                    raise last_exc
                converged = True
                break
    except RankDeficiencyError as exc:
        log.warning("variable projection aborted: %s", exc)
        converged = False
    s = np.linalg.svd(A, compute_uv=False)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
    order = np.argsort(x)
    return FitResult(x[order], u[order], rnorm, converged, it, cond, history)
