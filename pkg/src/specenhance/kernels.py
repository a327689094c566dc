"""Broadening and enhancement kernels.

Every kernel is a unit-mass convolution kernel described by its Fourier
symbol. Normalizations are fixed: the unit Gaussian has standard deviation 1
(symbol ``exp(-w**2/2)``) and the unit Lorentzian has half width ``sqrt(2)``
(symbol ``exp(-sqrt(2)*|w|)``). All other widths are multiples of these.

The Eddington correction of order ``k`` is the deconvolution whose inverse
symbol is the Taylor polynomial ``t_k(w**2/2)`` of the exponential.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterDomainError, UnsupportedFormError

SQRT2 = math.sqrt(2.0)


class Family(str, enum.Enum):
    GAUSSIAN_UNIT = "GaussianUnit"
    GAUSSIAN_WIDTH = "GaussianWidth"
    LORENTZ_UNIT = "LorentzUnit"
    LORENTZ_WIDTH = "LorentzWidth"
    VOIGT = "Voigt"
    EDDINGTON_INVERSE = "EddingtonInverse"


@dataclass(frozen=True)
class KernelSpec:
    """A convolution kernel identified by family and parameters.

    Use the classmethod constructors rather than building instances by hand.
    ``kappa`` is used by the width families, ``theta`` by ``Voigt`` and ``k``
    by ``EddingtonInverse``.
    """

    family: Family
    kappa: Optional[float] = None
    theta: Optional[float] = None
    k: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        fam = self.family
        if fam in (Family.GAUSSIAN_WIDTH, Family.LORENTZ_WIDTH):
            if self.kappa is None or not math.isfinite(self.kappa) or self.kappa <= 0:
                raise ParameterDomainError(f"{fam.value} requires kappa > 0, got {self.kappa!r}")
            object.__setattr__(self, "kappa", float(self.kappa))
        elif fam is Family.VOIGT:
            if self.theta is None or not (0.0 < self.theta <= 1.0):
                raise ParameterDomainError(f"Voigt requires 0 < theta <= 1, got {self.theta!r}")
            object.__setattr__(self, "theta", float(self.theta))
        elif fam is Family.EDDINGTON_INVERSE:
            if self.k is None or int(self.k) != self.k or self.k < 0:
                raise ParameterDomainError(f"EddingtonInverse requires integer k >= 0, got {self.k!r}")
            object.__setattr__(self, "k", int(self.k))

    # constructors

    @classmethod
    def gaussian(cls, kappa: Optional[float] = None) -> "KernelSpec":
        if kappa is None:
            return cls(Family.GAUSSIAN_UNIT)
        return cls(Family.GAUSSIAN_WIDTH, kappa=kappa)

    @classmethod
    def lorentz(cls, kappa: Optional[float] = None) -> "KernelSpec":
        if kappa is None:
            return cls(Family.LORENTZ_UNIT)
        return cls(Family.LORENTZ_WIDTH, kappa=kappa)

    @classmethod
    def voigt(cls, theta: float) -> "KernelSpec":
        return cls(Family.VOIGT, theta=theta)

    @classmethod
    def eddington(cls, k: int) -> "KernelSpec":
        return cls(Family.EDDINGTON_INVERSE, k=k)

    # derived parameters

    @property
    def gaussian_width(self) -> Optional[float]:
        """Standard deviation for Gaussian families, else None."""
        if self.family is Family.GAUSSIAN_UNIT:
            return 1.0
        if self.family is Family.GAUSSIAN_WIDTH:
            return self.kappa
        return None

    @property
    def lorentz_width(self) -> Optional[float]:
        """Decay rate of the symbol ``exp(-kappa*|w|)`` for Lorentz families."""
        if self.family is Family.LORENTZ_UNIT:
            return SQRT2
        if self.family is Family.LORENTZ_WIDTH:
            return self.kappa
        return None

    def to_json(self) -> dict:
        out = {"family": self.family.value}
        if self.kappa is not None:
            out["kappa"] = self.kappa
        if self.theta is not None:
            out["theta"] = self.theta
        if self.k is not None:
            out["k"] = self.k
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "KernelSpec":
        unknown = set(obj) - {"family", "kappa", "theta", "k"}
        if unknown:
            raise ParameterDomainError(f"unknown kernel fields: {sorted(unknown)}")
        try:
            family = Family(obj["family"])
        except (KeyError, ValueError) as exc:
            raise ParameterDomainError(f"bad kernel family in {obj!r}") from exc
        return cls(family, kappa=obj.get("kappa"), theta=obj.get("theta"), k=obj.get("k"))


def taylor_eval(k: int, x):
    """Evaluate ``t_k(x) = sum_{j<=k} x**j / j!`` by Horner's rule.

    Accepts scalars or arrays; ``x`` must be non-negative.
    """
    if k < 0:
        raise ParameterDomainError("Taylor order must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ParameterDomainError("taylor_eval requires x >= 0")
    t = np.ones_like(x)
    for j in range(k, 0, -1):
        t = 1.0 + t * x / j
    return t if t.ndim else float(t)


def taylor_inverse(k: int, y, bisect_steps: int = 100, newton_steps: int = 6):
    """Solve ``t_k(x) = y`` for ``x >= 0``.

    ``t_k`` is strictly increasing on ``[0, inf)`` so the root is bracketed
    by ``[0, max(1, y)]``. The bracket is narrowed with ``x**k/k! <= y`` and
    bisected, and the result is polished with Newton steps using
    ``t_k' = t_{k-1}``.
    """
    if k == 0:
        raise ParameterDomainError("t_0 is constant and has no inverse")
    if k < 0:
        raise ParameterDomainError("Taylor order must be non-negative")
    y = np.asarray(y, dtype=float)
    if np.any(~(y >= 1.0)):
        raise ParameterDomainError("taylor_inverse requires y >= 1")

    lo = np.zeros_like(y)
    hi = np.maximum(1.0, y)
    with np.errstate(over="ignore"):
        cap = (math.factorial(k) * y) ** (1.0 / k)
    hi = np.where(np.isfinite(cap), np.minimum(hi, cap * (1 + 1e-12) + 1e-300), hi)
    for _ in range(bisect_steps):
        mid = 0.5 * (lo + hi)
        above = np.asarray(taylor_eval(k, mid)) > y
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    x = 0.5 * (lo + hi)
    for _ in range(newton_steps):
        step = (np.asarray(taylor_eval(k, x)) - y) / np.asarray(taylor_eval(k - 1, x))
        x = np.clip(x - step, lo, hi)
    x = np.where(y == 1.0, 0.0, x)
    return x if x.ndim else float(x)


def log_symbol(kernel: KernelSpec, omega):
    """Natural log of the Fourier symbol, exact even where the symbol underflows."""
    w = np.abs(np.asarray(omega, dtype=float))
    fam = kernel.family
    if fam in (Family.GAUSSIAN_UNIT, Family.GAUSSIAN_WIDTH):
        s = kernel.gaussian_width
        out = -0.5 * (s * w) ** 2
    elif fam in (Family.LORENTZ_UNIT, Family.LORENTZ_WIDTH):
        out = -kernel.lorentz_width * w
    elif fam is Family.VOIGT:
        th = kernel.theta
        out = -0.5 * th * w**2 - SQRT2 * (1.0 - th) * w
    elif fam is Family.EDDINGTON_INVERSE:
        out = -np.log(taylor_eval(kernel.k, 0.5 * w**2))
    else:  # pragma: no cover
        raise ParameterDomainError(f"unknown family {fam}")
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def fourier_symbol(kernel: KernelSpec, omega):
    """Fourier symbol of ``kernel`` at angular frequency ``omega``.

    The symbol is real, even, equal to 1 at the origin and bounded by 1.
    """
    out = np.exp(log_symbol(kernel, omega))
    return out if np.ndim(out) else float(out)


def real_space(kernel: KernelSpec, x):
    """Closed-form kernel value at offset ``x``.

    Available for the Gaussian and Lorentz families and for the Eddington
    kernel of order at most one. Voigt and higher Eddington kernels have to
    be sampled numerically (see :func:`specenhance.grid.sample_kernel`).
    """
    x = np.asarray(x, dtype=float)
    fam = kernel.family
    if fam in (Family.GAUSSIAN_UNIT, Family.GAUSSIAN_WIDTH):
        s = kernel.gaussian_width
        out = np.exp(-0.5 * (x / s) ** 2) / (math.sqrt(2 * math.pi) * s)
    elif fam in (Family.LORENTZ_UNIT, Family.LORENTZ_WIDTH):
        c = kernel.lorentz_width
        out = c / (math.pi * (c * c + x * x))
    elif fam is Family.EDDINGTON_INVERSE and kernel.k == 1:
        out = np.exp(-SQRT2 * np.abs(x)) / SQRT2
    else:
        raise UnsupportedFormError(
            f"no closed real-space form for {kernel.to_json()}; sample it on a grid instead"
        )
    return out if out.ndim else float(out)
