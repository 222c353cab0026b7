"""Adaptive channel estimation with asymmetric stabilizer codes.

The package simulates stabilizer error correction against biased unital
noise whose parameters are unknown: syndrome statistics feed a Bayesian
estimator of the channel, and the codespace is counter-rotated to keep the
dominant error type on the axis the code corrects best. Modules:

- ``geom3``: 3x3 rotations, symmetric eigendecompositions, Haar sampling.
- ``channel``: oriented Pauli and dephasing channel models, twirled rates.
- ``codes``: asymmetric-code combinatorics and uncorrectable-error rates.
- ``angle_estimator``: discretized posterior over a dephasing angle.
- ``grid_estimator``: randomized-grid posterior over channel matrices.
- ``simulation``: Monte Carlo trial engines and the seeded ensemble runner.
- ``analysis``: lifetime statistics, fits, and orientation-gain integrals.
- ``cli``: the ``aqec`` command-line front end.
"""

from .analysis import (
    CoptEstimate,
    FitResult,
    GridSpacingRow,
    LifetimeSummary,
    c_opt_numeric,
    expected_code_performance,
    grid_coverage_bound,
    grid_spacing_study,
    haar_average_coefficient,
    haar_lifetime_bound_closed,
    lifetime_stats,
    optimal_lifetime_coefficient,
    power_law_fit,
)
from .angle_estimator import AngleGrid, DegenerateGridError, DriftModel, recommended_cells
from .channel import (
    DephasingChannel,
    Eccentricities,
    OrientedPauliChannel,
    PauliRates,
    bloch_matrix,
    effective_rates,
    optimal_control,
    twirl_dephasing,
    validate_unital,
)
from .codes import (
    AsymmetricCode,
    WeightTriple,
    catalog,
    code_by_name,
    correctable,
    multinomial,
    p_fail_exact,
    p_fail_leading,
)
from .geom3 import frobenius_distance, haar_rotation, sphere_uniform, sym_eig
from .grid_estimator import ChannelGrid, GridExhaustedError
from .simulation import (
    DephasingTrialConfig,
    TrialResult,
    UnitalTrialConfig,
    mix64,
    run_dephasing_trial,
    run_dephasing_trial_fast,
    run_ensemble,
    run_trial,
    run_unital_trial,
    sample_syndrome,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
