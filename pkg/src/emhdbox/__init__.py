"""Periodic-box electron-MHD with fractional dissipation: simulation and analysis.

The library is organized around one state type, the divergence-free spectral
vector field, and pure functions over it:

* :mod:`emhdbox.spectral` -- grids, transforms, multipliers, products, norms;
* :mod:`emhdbox.littlewood_paley` -- dyadic shells, paraproducts, commutators;
* :mod:`emhdbox.gevrey` -- exponential frequency weights and radius norms;
* :mod:`emhdbox.dynamics` -- model parameters and the Hall right-hand side;
* :mod:`emhdbox.solvers` -- exact semigroup, exponential integrators,
  successive substitution, the regularized mild solve;
* :mod:`emhdbox.diagnostics` -- energy balance, radius and decay fits,
  dilation symmetry, stability, smallness sweeps;
* :mod:`emhdbox.verify` -- the end-to-end invariant suite behind
  ``emhdbox verify``.
"""

from .config import SimConfig, default_config, load_config, parse_config, serialize_config
from .diagnostics import (
    DecayFit,
    GevreyFit,
    XTNorm,
    decay_fit,
    energy_balance,
    gevrey_radius_fit,
    gevrey_rate_check,
    scaling_symmetry_check,
    smallness_sweep,
    stability_check,
    xt_norm,
)
from .dynamics import ModelParams, check_admissible, critical_exponent, hall_nonlinearity, rhs
from .gevrey import GevreyParams, e_operator_apply, gevrey_apply, gevrey_norm
from .initial_data import beltrami, power_law_spectrum, random_band
from .littlewood_paley import (
    ShellSpectrum,
    bernstein_check,
    bony_decompose,
    chi_eval,
    commutator_curl,
    commutator_scalar,
    dyadic_sobolev_norm,
    low_pass,
    lp_project,
    phi_eval,
    shell_spectrum,
    tilde_block,
    write_shell_csv,
)
from .records import (
    NormSeries,
    RunRecord,
    TrajectorySeries,
    load_checkpoint,
    load_run,
    save_checkpoint,
    save_run,
)
from .solvers import (
    BlowUpError,
    ConvergenceTrace,
    PicardConfig,
    PicardDivergenceError,
    StepperConfig,
    WindowTooLongError,
    etd_step,
    evolve,
    heat_semigroup,
    linear_mild_solve,
    picard_solve,
)
from .spectral import (
    Grid3,
    PhysicalVectorField,
    SpectralVectorField,
    cross_product,
    curl,
    dealias,
    divergence,
    forward_transform,
    fractional_laplacian,
    inverse_transform,
    leray_project,
    sobolev_norm,
)

__version__ = "0.1.0"
