"""Spectral resolution enhancement by regularized deconvolution.

Kernels and their Fourier symbols live in :mod:`specenhance.kernels`, grid
sampling and convolution in :mod:`specenhance.grid`, the regularized
solvers in :mod:`specenhance.enhance`, source conditions and error bounds in
:mod:`specenhance.bounds` and variable projection line fitting in
:mod:`specenhance.fitting`.
"""

from .bounds import (
    ConcavityRegion,
    SourceCondition,
    Psi_eval,
    concavity_region,
    eta_exponent,
    psi_eval,
    psi_norm,
    theorem1_bound,
)
from .enhance import (
    EnhancementResult,
    Method,
    RegularizationConfig,
    choose_alpha_discrepancy,
    deconvolve,
    eddington_correct,
)
from .fitting import FitProblem, FitResult, solve_intensities, varpro_fit
from .grid import (
    Grid,
    LineSpectrum,
    SampledSpectrum,
    add_noise,
    broaden,
    convolve,
    fwhm,
    sample_kernel,
)
from .kernels import (
    Family,
    KernelSpec,
    fourier_symbol,
    real_space,
    taylor_eval,
    taylor_inverse,
)

__version__ = "0.1.0"
