"""Iterative matrix inversion and least-squares estimation via factored
matrix power series, with an instrumented multiplication cost model."""

from .matrix_core import (
    MulCounter,
    Norms,
    SpectralRadiusError,
    fro_norm,
    identity,
    inf_norm,
    load_matrix,
    load_vector,
    mat_mul,
    mat_pow,
    mat_pow_counted,
    mat_vec,
    norms,
    save_matrix,
    save_vector,
    spectral_radius,
    square_matrix,
    vector,
)
from .splitting import (
    NotSDDError,
    NotSPDError,
    Splitting,
    check_two_s_minus_a,
    is_positive_definite,
    split_diagonal,
    split_scalar,
    with_measured_rho,
)
from .series_toolkit import (
    FactorPlan,
    Horner,
    PrimeWrap,
    Split,
    TableForm,
    efficiency_index,
    factored_eval,
    factored_mmm,
    geometric_apply,
    horner_eval,
    make_plan,
    nested_eval,
    order45_plan,
    plan_order,
    plan_str,
    split_candidates,
    table_plans,
)
from .newton_schulz import (
    CompositeSpec,
    DoubleNsState,
    NsState,
    additive_correction_step,
    additive_exponents,
    classical_exponent,
    composite_exponent,
    composite_step,
    constant_rates,
    converged,
    double_exponent,
    double_ns_step,
    initial_double,
    initial_series,
    ns_step,
    power_rates,
    residual_exponent,
    run_until_converged,
)
from .richardson import (
    RichardsonState,
    TransientModel,
    cumulative_exponent,
    cumulative_exponent_closed,
    initial_richardson,
    richardson_recursive_step,
    richardson_step,
    step_exponent_general,
    step_exponent_qn,
    transient_model,
)
from .harness import (
    HarmonicRegressorSpec,
    MethodSpec,
    RunRecord,
    condition_number,
    emit_exponent_surface,
    emit_mmm_surface,
    gen_harmonic_matrix,
    parse_exponent_surface,
    parse_mmm_surface,
    parse_run_records,
    records_to_csv,
    run_comparison,
    toolkit_check,
)

__version__ = "0.1.0"
