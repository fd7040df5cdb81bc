"""Exact quantum-gain engine for one-axis-twisted collective spin states."""

from .dicke import (
    BandOverflowError,
    BandedDensity,
    BandedOperator,
    DickeVector,
    apply_diagonal_phase,
    band_anticommutator,
    band_commutator,
    band_commutator_i,
    band_linear_combination,
    band_product,
    coherent_state_x,
    expectation,
    spin_operators,
)
from .channels import (
    NoiseKernel,
    PreparationSpec,
    ballistic_kernel,
    ballistic_mc_oracle,
    diffusive_kernel,
    mai_effective_observable_noisy,
    mai_observable,
    no_noise,
    oat_state,
    prepare_noisy,
)
from .moments import (
    GramData,
    ObservableBasis,
    build_basis,
    dense_oracle,
    gram_data,
)
from .gain import (
    GainResult,
    optimize_axis,
    optimize_time,
    qfi_pure,
    rayleigh_gain,
    strategy_gain,
    sweep_echo_time,
)
from .asymptotics import (
    ScalingLaw,
    critical_alpha,
    optimize_unified,
    predicted_gain,
    unified_gain,
)
from .sweep import ScalingFit, SweepRecord, figure_data, fit_exponent, sweep_n

__version__ = "0.1.0"
