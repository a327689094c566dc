"""Regularized Fourier deconvolution for the enhancement equation ``B f = g``."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    ConfigurationError,
    DataIncompatibleError,
    ParameterDomainError,
    SingularInversionError,
)
from .grid import SampledSpectrum, symbol_on_grid
from .kernels import KernelSpec

log = logging.getLogger(__name__)

ALPHA_MIN = 1e-16
ALPHA_MAX = 1e4


class Method(str, enum.Enum):
    TIKHONOV = "Tikhonov"
    SPECTRAL_CUTOFF = "SpectralCutoff"


@dataclass(frozen=True)
class RegularizationConfig:
    """Filter family, regularization parameter and discrepancy factor.

    ``alpha=None`` asks callers that support it to pick the parameter by
    the discrepancy principle.
    """

    method: Method = Method.TIKHONOV
    alpha: Optional[float] = 0.0
    tau: float = 1.1

    def __post_init__(self):
        try:
            object.__setattr__(self, "method", Method(self.method))
        except ValueError as exc:
            raise ConfigurationError(f"unknown regularization method {self.method!r}") from exc
        if self.alpha is not None:
            if not (self.alpha >= 0 and math.isfinite(self.alpha)):
                raise ParameterDomainError(f"alpha must be a finite non-negative number, got {self.alpha!r}")
            object.__setattr__(self, "alpha", float(self.alpha))
        if not self.tau > 1:
            raise ParameterDomainError(f"tau must exceed 1, got {self.tau!r}")

    @property
    def unregularized(self) -> bool:
        return self.alpha == 0.0

    def with_alpha(self, alpha: float) -> "RegularizationConfig":
        return RegularizationConfig(self.method, alpha, self.tau)

    def to_json(self) -> dict:
        return {"method": self.method.value, "alpha": self.alpha, "tau": self.tau}

    @classmethod
    def from_json(cls, obj: dict) -> "RegularizationConfig":
        unknown = set(obj) - {"method", "alpha", "tau"}
        if unknown:
            raise ConfigurationError(f"unknown regularization fields: {sorted(unknown)}")
        return cls(obj.get("method", "Tikhonov"), obj.get("alpha", 0.0), obj.get("tau", 1.1))


@dataclass(frozen=True)
class EnhancementResult:
    f_alpha: SampledSpectrum
    alpha: float
    residual_epsilon: float
    psi_norm_Bf: Optional[float] = None
    bound: Optional[float] = None

    def to_json(self) -> dict:
        def finite(v):
            return v if v is not None and math.isfinite(v) else None

        return {
            "alpha": self.alpha,
            "residual": self.residual_epsilon,
            "psi_norm": finite(self.psi_norm_Bf),
            "bound": finite(self.bound),
        }


def filter_factors(symbol: np.ndarray, method: Method, alpha: float) -> np.ndarray:
    """Multiplier taking the data transform to the solution transform."""
    b = np.asarray(symbol, dtype=float)
    if alpha == 0.0 and np.any(b == 0.0):
        raise SingularInversionError("symbol underflows to zero; unregularized inversion is singular")
    if method is Method.TIKHONOV:
        return b / (b * b + alpha)
    keep = b * b >= alpha
    out = np.zeros_like(b)
    out[keep] = 1.0 / b[keep]
    return out


def _solve(g: SampledSpectrum, symbol: np.ndarray, method: Method, alpha: float):
    ghat = g.fourier()
    fhat = filter_factors(symbol, method, alpha) * ghat
    f = SampledSpectrum.from_fourier(g.grid, fhat)
    bf = SampledSpectrum.from_fourier(g.grid, f.fourier() * symbol)
    return f, bf


def deconvolve(
    g: SampledSpectrum,
    kernel,
    reg: RegularizationConfig,
    condition=None,
    reference: Optional[SampledSpectrum] = None,
) -> EnhancementResult:
    """Regularized solution of ``B f = g`` for the convolution ``B`` given by ``kernel``.

    Parameters
    ----------
    g : SampledSpectrum
        Observed (possibly noisy) spectrum.
    kernel : KernelSpec or ndarray
        Enhancement kernel, or its symbol on the grid.
    reg : RegularizationConfig
        Filter family and a fixed ``alpha``.
    condition : SourceCondition, optional
        When given, the psi-norm of ``B f_alpha`` and the interpolation bound
        are reported as well.
    reference : SampledSpectrum, optional
        Exact data used for the bound's residual and psi-norm of ``g``.
        Defaults to ``g`` itself.

    Returns
    -------
    EnhancementResult
        ``residual_epsilon`` is always measured against ``g``.
    """
    if reg.alpha is None:
        raise ConfigurationError("deconvolve needs a fixed alpha; use choose_alpha_discrepancy first")
    if reg.unregularized:
        log.warning("alpha = 0: unregularized inversion amplifies data errors without limit")
    symbol = symbol_on_grid(kernel, g.grid)
    f, bf = _solve(g, symbol, reg.method, reg.alpha)
    residual = (bf - g).norm()

    psi_bf = bound = None
    if condition is not None:
        from .bounds import psi_norm, theorem1_bound

        psi_bf = psi_norm(bf, condition, kernel)
        ref = g if reference is None else reference
        psi_g = psi_norm(ref, condition, kernel)
        eps = (bf - ref).norm()
        if math.isfinite(psi_bf) and math.isfinite(psi_g) and eps > 0:
            bound = theorem1_bound(eps, psi_bf + psi_g, condition)
    return EnhancementResult(f, reg.alpha, residual, psi_bf, bound)


def eddington_correct(g: SampledSpectrum, k: int, reg: RegularizationConfig, **kwargs) -> EnhancementResult:
    """Order-``k`` Eddington correction ``sum_j (-1)**j g^(2j) / (2**j j!)``.

    Carried out as a deconvolution with the kernel whose inverse symbol is
    ``t_k(w**2/2)``; with ``alpha = 0`` this is the truncated derivative
    series exactly.
    """
    return deconvolve(g, KernelSpec.eddington(k), reg, **kwargs)


def choose_alpha_discrepancy(
    g_delta: SampledSpectrum,
    kernel,
    delta: float,
    method=Method.TIKHONOV,
    tau: float = 1.1,
    rtol: float = 0.01,
    max_iter: int = 200,
) -> float:
    """Pick ``alpha`` so that ``||B f_alpha - g_delta||`` is about ``tau * delta``.

    Bisection on ``log(alpha)`` over ``[1e-16, 1e4]``. The residual grows
    with ``alpha``. For Tikhonov the search stops once the residual is
    within ``rtol`` of the target. The spectral cutoff residual is piecewise
    constant, so there the largest ``alpha`` whose residual does not exceed
    the target is returned.
    """
    method = Method(method)
    if not delta > 0:
        raise ParameterDomainError("delta must be positive")
    if not tau > 1:
        raise ParameterDomainError("tau must exceed 1")
    if delta >= g_delta.norm():
        raise ConfigurationError("noise level is not smaller than the data norm")
    symbol = symbol_on_grid(kernel, g_delta.grid)
    ghat = g_delta.fourier()
    dw = g_delta.grid.domega
    target = tau * delta

    # residual in the Fourier domain, by Parseval
    def residual(alpha):
        r = (symbol * filter_factors(symbol, method, alpha) - 1.0) * ghat
        return math.sqrt(np.sum(np.abs(r) ** 2) * dw / (2 * math.pi))

    lo, hi = math.log(ALPHA_MIN), math.log(ALPHA_MAX)
    r_lo = residual(ALPHA_MIN)
    if r_lo > target:
        raise DataIncompatibleError(
            f"residual {r_lo:.3g} at alpha={ALPHA_MIN:g} already exceeds tau*delta={target:.3g}"
        )
    if residual(ALPHA_MAX) <= target:
        return ALPHA_MAX
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r = residual(math.exp(mid))
        if method is Method.TIKHONOV and abs(r - target) <= rtol * target:
            return math.exp(mid)
        if r > target:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-13:
            break
    return math.exp(lo)
