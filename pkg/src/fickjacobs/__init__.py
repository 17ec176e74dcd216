"""Exact and numerical solvers for diffusion in channels of varying cross-section."""

from .errors import (
    ConfigError,
    ConvergenceFailureError,
    FickJacobsError,
    GridMismatchError,
    GridTooSmallError,
    IntegrityError,
    NegativeCurvatureError,
    NonPositiveAreaError,
    NonPositiveTimeError,
    OutOfDomainError,
    OutOfRangeError,
    QuadratureFailureError,
    SingularSystemError,
)
from .geometry import (
    ChannelProfile,
    ConicalProfile,
    ConstantDiffusion,
    DiffusionModel,
    GaussianAreaProfile,
    RegueraRubiDiffusion,
    SinusoidalProfile,
    TabulatedDiffusion,
    TabulatedProfile,
    ThroatProfile,
    area_derivs,
    diffusion_coefficient,
    entropic_potential,
)
from .mapping import (
    SchrodingerMap,
    SusyPair,
    apply_fj_generator,
    build_schrodinger_map,
    invert_coordinate,
    susy_partner_potentials,
    transform_coordinate,
)
from .analytic import (
    EigenmodeInit,
    GaussianInit,
    conical_solution,
    gaussian_channel_solution,
    heat_kernel,
    hermite_function,
    oscillator_eigenfunction,
    sinusoidal_solution,
    stationary_profile,
    throat_solution,
)
from .fdsolver import (
    BoundaryCondition,
    ConcentrationField,
    SolverConfig,
    error_norms,
    evolve,
    step,
    total_mass,
    write_snapshot_csv,
)
from .spectral import (
    SpectralBasis,
    build_basis,
    choose_n_modes,
    project_initial,
    propagate,
)

__version__ = "0.1.0"
