"""Quasi-joint-spectral distributions of non-commuting observables."""

from .errors import QJSDError
from .phase_space import (
    CohenKernel,
    PhaseSpaceGrid,
    WavefunctionGrid,
    cohen_kernel,
    cohen_transform,
    glauber_sudarshan,
    husimi,
    weyl_quantise_grid,
    wigner,
)
from .qjsd import (
    DiscreteQJSD,
    HashingSpec,
    QJPDistribution,
    alpha_hashing,
    build_qjsd,
    characteristic_function,
    conjugate_qjsd,
    hashing_preset,
    is_real_qjsd,
    kappa_hashing,
    marginal_qjsd,
    trotter_characteristic,
)
from .spectral import (
    DensityOperator,
    HermitianOperator,
    JointSpectralMeasure,
    SpectralMeasure,
    born_distribution,
    eigendecompose,
    functional_calculus,
    joint_spectral_measure,
    strongly_commutes,
)
from .stats import (
    ConditionalExpectation,
    conditional_expectation,
    quantum_covariance,
    quasi_correlation,
    two_state_value,
    verify_correlation_preservation,
    weak_value,
)
from .transform import (
    affine_transform,
    convolve_distribution,
    faithfulness_rank,
    quantise,
    quasi_classicalise,
    verify_adjointness,
)

__version__ = "0.1.0"
