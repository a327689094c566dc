"""Source conditions, psi-norms and variable Hilbert scale error bounds.

A source condition pairs an increasing function ``psi`` with its inverse
``Psi``. A spectrum ``g`` satisfies it when

    ||g||_psi**2 = (g, psi((B B*)^-1) g)

is finite. For a stably enhanced spectrum with residual ``eps`` the error is
then at most ``eps * sqrt(Psi((C + ||g||_psi)**2 / eps**2))`` provided
``Psi`` is concave there.

Everything is evaluated through logarithms: ``psi`` grows like
``exp(log(lam)**2)`` and overflows long before its argument does.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .errors import (
    BoundInvalidError,
    ConfigurationError,
    EnhancementTooAggressiveError,
    ParameterDomainError,
    RangeOverflowError,
)
from .grid import SampledSpectrum
from .kernels import Family, KernelSpec, log_symbol, taylor_eval, taylor_inverse

log = logging.getLogger(__name__)

LOG_MAX = math.log(np.finfo(float).max)
SQRT2 = math.sqrt(2.0)

# Fourier coefficients below these fractions of the largest one are treated
# as round-off. Comparing the two truncations exposes divergent sums.
FLOOR = 1e-13
FLOOR_CHECK = 1e-11
DIVERGENCE_RATIO = 2.0


class Kind(str, enum.Enum):
    EDDINGTON_GAUSSIAN = "EddingtonGaussian"
    LORENTZ_ON_GAUSSIAN = "LorentzOnGaussian"
    LORENTZ_ON_VOIGT = "LorentzOnVoigt"
    STOKES_GAUSSIAN = "StokesGaussian"


@dataclass(frozen=True)
class ConcavityRegion:
    unconditional: bool
    eta_threshold: Optional[float] = None

    def contains(self, eta: float) -> bool:
        return self.unconditional or eta >= self.eta_threshold


@dataclass(frozen=True)
class SourceCondition:
    """Smoothness of a broadened spectrum relative to an enhancement kernel.

    ``EddingtonGaussian(k)``
        Gaussian spectrum, Eddington correction of order ``k``.
    ``LorentzOnGaussian(kappa)``
        Gaussian spectrum, Lorentz kernel ``exp(-kappa*|w|)``.
    ``LorentzOnVoigt(kappa, theta)``
        Voigt spectrum with Gaussian fraction ``theta``, Lorentz kernel.
    ``StokesGaussian(kappa)``
        Gaussian spectrum, Gaussian kernel of width ``kappa <= 1``.
    """

    kind: Kind
    kappa: Optional[float] = None
    theta: Optional[float] = None
    k: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        kind = self.kind
        if kind is Kind.EDDINGTON_GAUSSIAN:
            if self.k is None or int(self.k) != self.k or self.k < 1:
                raise ParameterDomainError("EddingtonGaussian needs an integer order k >= 1")
            object.__setattr__(self, "k", int(self.k))
            return
        if self.kappa is None or not self.kappa > 0:
            raise ParameterDomainError(f"{kind.value} needs kappa > 0")
        object.__setattr__(self, "kappa", float(self.kappa))
        if kind is Kind.STOKES_GAUSSIAN and self.kappa > 1:
            raise ParameterDomainError("StokesGaussian needs kappa <= 1")
        if kind is Kind.LORENTZ_ON_VOIGT:
            if self.theta is None or not (0 < self.theta <= 1):
                raise ParameterDomainError("LorentzOnVoigt needs 0 < theta <= 1")
            object.__setattr__(self, "theta", float(self.theta))

    @classmethod
    def eddington(cls, k: int) -> "SourceCondition":
        return cls(Kind.EDDINGTON_GAUSSIAN, k=k)

    @classmethod
    def lorentz_on_gaussian(cls, kappa: float) -> "SourceCondition":
        return cls(Kind.LORENTZ_ON_GAUSSIAN, kappa=kappa)

    @classmethod
    def lorentz_on_voigt(cls, kappa: float, theta: float) -> "SourceCondition":
        return cls(Kind.LORENTZ_ON_VOIGT, kappa=kappa, theta=theta)

    @classmethod
    def stokes_gaussian(cls, kappa: float) -> "SourceCondition":
        return cls(Kind.STOKES_GAUSSIAN, kappa=kappa)

    @classmethod
    def for_kernels(cls, broadening: KernelSpec, enhancement: KernelSpec) -> Optional["SourceCondition"]:
        """The condition linking a unit-line broadening to an enhancement, if one is known."""
        gauss = broadening.family is Family.GAUSSIAN_UNIT
        voigt = broadening.family is Family.VOIGT
        efam = enhancement.family
        if efam is Family.EDDINGTON_INVERSE and gauss and enhancement.k >= 1:
            return cls.eddington(enhancement.k)
        if enhancement.lorentz_width is not None:
            if gauss:
                return cls.lorentz_on_gaussian(enhancement.lorentz_width)
            if voigt:
                return cls.lorentz_on_voigt(enhancement.lorentz_width, broadening.theta)
        if enhancement.gaussian_width is not None and gauss and enhancement.gaussian_width <= 1:
            return cls.stokes_gaussian(enhancement.gaussian_width)
        return None

    def broadening_kernel(self) -> KernelSpec:
        if self.kind is Kind.LORENTZ_ON_VOIGT:
            return KernelSpec.voigt(self.theta)
        return KernelSpec.gaussian()

    def enhancement_kernel(self) -> KernelSpec:
        if self.kind is Kind.EDDINGTON_GAUSSIAN:
            return KernelSpec.eddington(self.k)
        if self.kind is Kind.STOKES_GAUSSIAN:
            return KernelSpec.gaussian(self.kappa)
        return KernelSpec.lorentz(self.kappa)

    def matches(self, kernel: KernelSpec) -> bool:
        if self.kind is Kind.EDDINGTON_GAUSSIAN:
            return kernel.family is Family.EDDINGTON_INVERSE and kernel.k == self.k
        if self.kind is Kind.STOKES_GAUSSIAN:
            w = kernel.gaussian_width
        else:
            w = kernel.lorentz_width
        return w is not None and math.isclose(w, self.kappa, rel_tol=1e-12)

    def to_json(self) -> dict:
        out = {"kind": self.kind.value}
        for name in ("kappa", "theta", "k"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SourceCondition":
        unknown = set(obj) - {"kind", "kappa", "theta", "k"}
        if unknown:
            raise ConfigurationError(f"unknown condition fields: {sorted(unknown)}")
        try:
            kind = Kind(obj["kind"])
        except (KeyError, ValueError) as exc:
            raise ConfigurationError(f"bad source condition kind in {obj!r}") from exc
        return cls(kind, kappa=obj.get("kappa"), theta=obj.get("theta"), k=obj.get("k"))

    # log-space forms; lam = exp(log_lam), eta = exp(log_eta)

    def log_psi(self, log_lam):
        L = np.asarray(log_lam, dtype=float)
        kind = self.kind
        if kind is Kind.EDDINGTON_GAUSSIAN:
            out = 2.0 * np.asarray(taylor_inverse(self.k, np.exp(0.5 * L)))
        elif kind is Kind.STOKES_GAUSSIAN:
            out = L / self.kappa**2
        else:
            s = L / (2.0 * self.kappa)
            theta = 1.0 if kind is Kind.LORENTZ_ON_GAUSSIAN else self.theta
            out = theta * s**2 + 2.0 * SQRT2 * (1.0 - theta) * s
        return out if out.ndim else float(out)

    def log_Psi(self, log_eta):
        L = np.asarray(log_eta, dtype=float)
        kind = self.kind
        if kind is Kind.EDDINGTON_GAUSSIAN:
            out = 2.0 * np.log(taylor_eval(self.k, 0.5 * L))
        elif kind is Kind.STOKES_GAUSSIAN:
            out = self.kappa**2 * L
        elif kind is Kind.LORENTZ_ON_GAUSSIAN:
            out = 2.0 * self.kappa * np.sqrt(L)
        else:
            th = self.theta
            c = SQRT2 * (1.0 - th)
            out = (2.0 * self.kappa / th) * (np.sqrt(c * c + th * L) - c)
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)


def _exp_checked(logv, what):
    arr = np.asarray(logv, dtype=float)
    if np.any(arr > LOG_MAX):
        worst = float(np.max(arr))
        raise RangeOverflowError(f"{what} overflows (log value {worst:.6g})", worst)
    out = np.exp(arr)
    return out if out.ndim else float(out)


def psi_eval(cond: SourceCondition, lam):
    """``psi(lam)`` for ``lam >= 1``; raises :class:`RangeOverflowError` past double range."""
    lam = np.asarray(lam, dtype=float)
    if np.any(~(lam >= 1.0)):
        raise ParameterDomainError("psi is defined for lambda >= 1")
    return _exp_checked(cond.log_psi(np.log(lam)), "psi")


def Psi_eval(cond: SourceCondition, eta):
    """The inverse ``Psi = psi^-1`` for ``eta >= 1``."""
    eta = np.asarray(eta, dtype=float)
    if np.any(~(eta >= 1.0)):
        raise ParameterDomainError("Psi is defined for eta >= 1")
    return _exp_checked(cond.log_Psi(np.log(eta)), "Psi")


psi_inverse_eval = Psi_eval


def concavity_region(cond: SourceCondition) -> ConcavityRegion:
    """Where ``Psi`` is concave on ``[1, inf)``.

    For the Lorentz conditions write ``Psi = c*exp(A*z)`` with
    ``z = sqrt(log(eta) + b)``. The sign of the second derivative is that of
    ``-(2 z**2 - A z + 1)``, so ``Psi`` is concave everywhere when
    ``A**2 <= 8`` and otherwise beyond the larger root in ``z``.
    """
    if cond.kind in (Kind.EDDINGTON_GAUSSIAN, Kind.STOKES_GAUSSIAN):
        return ConcavityRegion(True)
    theta = 1.0 if cond.kind is Kind.LORENTZ_ON_GAUSSIAN else cond.theta
    A = 2.0 * cond.kappa / math.sqrt(theta)
    b = 2.0 * (1.0 - theta) ** 2 / theta
    disc = A * A - 8.0
    if disc <= 1e-12:  # kappa = sqrt(2) lands here up to rounding
        return ConcavityRegion(True)
    z_hi = (A + math.sqrt(disc)) / 4.0
    if b >= z_hi**2:
        return ConcavityRegion(True)
    # Psi is concave again below the smaller root; only the unbounded part is reported
    return ConcavityRegion(False, math.exp(z_hi**2 - b))


def psi_norm(g: SampledSpectrum, cond: SourceCondition, enhancement_kernel: KernelSpec) -> float:
    """``||g||_psi`` from the discrete Parseval sum.

    Returns ``inf`` when the sum is not finite at the grid's precision:
    either it overflows, or it is dominated by coefficients that sit at
    the round-off floor (checked by comparing two truncation levels).
    """
    if not isinstance(enhancement_kernel, KernelSpec) or not cond.matches(enhancement_kernel):
        raise ConfigurationError(f"condition {cond.to_json()} does not belong to kernel {enhancement_kernel!r}")
    grid = g.grid
    G = np.abs(g.fourier())
    gmax = G.max()
    if gmax == 0:
        return 0.0
    log_lam = -2.0 * np.asarray(log_symbol(enhancement_kernel, grid.omega))
    log_scale = math.log(grid.domega / (2 * math.pi))

    def log_sum(floor):
        keep = G > floor * gmax
        terms = cond.log_psi(log_lam[keep]) + 2.0 * np.log(G[keep])
        return float(logsumexp(terms)) + log_scale

    s = log_sum(FLOOR)
    s_check = log_sum(FLOOR_CHECK)
    if abs(s - s_check) > math.log(DIVERGENCE_RATIO):
        log.info("psi-norm sum grows into the round-off floor: not in H_psi at this grid")
        return math.inf
    if 0.5 * s > LOG_MAX:
        log.info("psi-norm overflows (log value %.6g)", 0.5 * s)
        return math.inf
    return math.exp(0.5 * s)


def theorem1_bound(epsilon: float, C_plus_gpsi: float, cond: SourceCondition) -> float:
    """``eps * sqrt(Psi((C + ||g||_psi)**2 / eps**2))``.

    Raises :class:`BoundInvalidError` when the argument of ``Psi`` is below 1
    or outside the concavity region.
    """
    if not (epsilon > 0 and C_plus_gpsi > 0):
        raise ParameterDomainError("epsilon and C + ||g||_psi must be positive")
    if math.isinf(C_plus_gpsi):
        return math.inf
    log_eta = 2.0 * (math.log(C_plus_gpsi) - math.log(epsilon))
    if log_eta < 0:
        raise BoundInvalidError(f"Psi argument {math.exp(log_eta):.6g} is below 1")
    region = concavity_region(cond)
    if not region.unconditional and log_eta < math.log(region.eta_threshold):
        raise BoundInvalidError(
            f"Psi argument exp({log_eta:.6g}) lies below the concavity threshold {region.eta_threshold:.6g}"
        )
    return math.exp(math.log(epsilon) + 0.5 * cond.log_Psi(log_eta))


def eta_exponent(cond: SourceCondition, epsilon: float, strict: bool = True) -> float:
    """Exponent deficit ``eta(eps)``: the bound behaves like ``eps**(1 - eta)``.

    With ``strict=False`` deficits of one or more are returned instead of
    raising :class:`EnhancementTooAggressiveError`.
    """
    if not (0 < epsilon <= math.exp(-1) * (1 + 1e-15)):
        raise ParameterDomainError("epsilon must lie in (0, 1/e]")
    a = abs(math.log(epsilon))
    kind = cond.kind
    if kind is Kind.EDDINGTON_GAUSSIAN:
        deficit = cond.k * math.log(a) / a
    elif kind is Kind.LORENTZ_ON_GAUSSIAN:
        deficit = 2.0 * cond.kappa / math.sqrt(a)
    elif kind is Kind.LORENTZ_ON_VOIGT:
        deficit = 2.0 * cond.kappa / math.sqrt(cond.theta * a + (1.0 - cond.theta) ** 2)
    else:
        deficit = cond.kappa**2
    if strict and deficit >= 1:
        raise EnhancementTooAggressiveError(f"exponent deficit {deficit:.6g} >= 1: the bound is vacuous")
    return deficit
