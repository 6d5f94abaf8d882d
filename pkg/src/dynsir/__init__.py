"""Multi-type SIR epidemics on dynamic networks.

Exact finite-population simulators, branching-process growth and extinction
numerics, and the deterministic large-population limit curves they converge
to, with a CLI harness for convergence experiments.
"""

from dynsir.branching import (
    BranchingSummary,
    branching_summary,
    extinction_probabilities,
    m_star,
    malthusian_from,
    perron_vectors,
    spectral_radius,
)
from dynsir.contact import (
    BoxKernel,
    FiniteNKernel,
    HomogeneousKernel,
    IppParams,
    Kernel,
    SixBKernel,
    excess_cdf,
    excess_pdf,
    finite_kernel,
    ipp_params,
    laplace_ml,
    laplace_ml_hat,
    limit_kernel,
    limit_kernels,
    limit_r0,
    mean_interarrival,
    ml_hat_matrix,
    ml_matrix,
    r0_n,
    sample_excess,
    sample_excess_truncated,
)
from dynsir.config import load_config
from dynsir.errors import (
    AlignmentError,
    ConditioningError,
    ConfigError,
    DynsirError,
    NumericalError,
)
from dynsir.harness import (
    ConvergenceReport,
    ExperimentConfig,
    SizeStats,
    align_trajectory,
    aligned_ensemble,
    pinned_limit,
    run_convergence,
    write_convergence_csvs,
    write_report_text,
)
from dynsir.limits import (
    DeterministicPeriod,
    ExponentialPeriod,
    FinalSize,
    LimitCurves,
    PsiCurves,
    final_size,
    i_max_closed_form,
    ode_mixed,
    ode_strong_multi,
    ode_strong_single,
    ode_weak,
    peak_thresholds,
    psi_fixed_point,
    psi_from_spec,
    renewal_from_spec,
    renewal_solve,
    sup_gap_after_shift,
    write_curves_csv,
)
from dynsir.rng import binomial_draw, derive_seed, np_substream, substream
from dynsir.simulate import (
    Trajectory,
    condition_on_outbreak,
    curves_at,
    simulate_model1,
    simulate_model2,
    simulate_model3,
    write_events_csv,
)
from dynsir.params import (
    ModelSpec,
    PairRegime,
    RealizedRates,
    RegimeReport,
    classify_regime,
    largest_remainder_counts,
    limit_r0_matrix,
    realize_rates,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "BoxKernel",
    "BranchingSummary",
    "ConditioningError",
    "ConfigError",
    "ConvergenceReport",
    "DeterministicPeriod",
    "DynsirError",
    "ExperimentConfig",
    "ExponentialPeriod",
    "FinalSize",
    "FiniteNKernel",
    "HomogeneousKernel",
    "IppParams",
    "Kernel",
    "LimitCurves",
    "ModelSpec",
    "NumericalError",
    "PairRegime",
    "PsiCurves",
    "RealizedRates",
    "RegimeReport",
    "SixBKernel",
    "SizeStats",
    "Trajectory",
    "align_trajectory",
    "aligned_ensemble",
    "binomial_draw",
    "branching_summary",
    "classify_regime",
    "condition_on_outbreak",
    "curves_at",
    "derive_seed",
    "excess_cdf",
    "excess_pdf",
    "extinction_probabilities",
    "final_size",
    "finite_kernel",
    "i_max_closed_form",
    "ipp_params",
    "laplace_ml",
    "laplace_ml_hat",
    "largest_remainder_counts",
    "limit_kernel",
    "limit_kernels",
    "limit_r0",
    "limit_r0_matrix",
    "load_config",
    "m_star",
    "malthusian_from",
    "mean_interarrival",
    "ml_hat_matrix",
    "ml_matrix",
    "np_substream",
    "ode_mixed",
    "ode_strong_multi",
    "ode_strong_single",
    "ode_weak",
    "peak_thresholds",
    "perron_vectors",
    "pinned_limit",
    "psi_fixed_point",
    "psi_from_spec",
    "r0_n",
    "realize_rates",
    "renewal_from_spec",
    "renewal_solve",
    "run_convergence",
    "sample_excess",
    "sample_excess_truncated",
    "simulate_model1",
    "simulate_model2",
    "simulate_model3",
    "spectral_radius",
    "substream",
    "sup_gap_after_shift",
    "write_convergence_csvs",
    "write_curves_csv",
    "write_events_csv",
    "write_report_text",
    "__version__",
]
