"""Infinite iterated function systems on [0,1] as digit number systems."""

from .cantor import (
    ConstructionParams,
    ConstructionState,
    build_layers,
    check_delta,
    choose_Nj,
    choose_rk,
    in_survivor_set,
    run_construction,
    sample_member,
    verify_equations,
    verify_mass,
    verify_separation,
)
from .core import (
    Branch,
    FundamentalInterval,
    IifsSystem,
    XiSequence,
    compose_map,
    digits_of,
    estimate_distortion,
    fit_regularity,
    fundamental_interval,
    natural_projection,
    verify_contraction,
)
from .dimension import (
    bound_constraint,
    cover_sum,
    critical_exponent,
    digits_constraint,
    fixed_digits,
    slow_growth_sweep,
    window_constraint,
)
from .errors import (
    AmbiguousPointError,
    HorizonError,
    IifsError,
    InfeasibleError,
    InvalidInputError,
    PrecisionError,
    UndefinedRatioError,
)
from .exponent import (
    DigitSet,
    ExponentEstimate,
    arithmetic_digits,
    cube_digits,
    digits_from_file,
    full_digits,
    parse_digit_set,
    power_digits,
    prime_digits,
    s0_estimate,
    square_digits,
    tau_estimate,
)
from .growth import (
    GrowthFn,
    affine_growth,
    constant_growth,
    growth_from_file,
    iterated_log_growth,
    log_growth,
    loglog_growth,
    parse_growth,
)
from .product_sets import (
    PowerValue,
    ProductSpec,
    ZetaTable,
    build_zeta,
    m_index,
    membership_P,
    r_index,
    strictify,
    subset_chain_check,
    zeta_report,
)
from .systems import (
    GlsSpec,
    dyadic_gls_spec,
    gauss_system,
    gls_spec_from_file,
    gls_system,
    luroth_system,
    parse_system,
    quadratic_gauss_system,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousPointError",
    "Branch",
    "ConstructionParams",
    "ConstructionState",
    "DigitSet",
    "ExponentEstimate",
    "FundamentalInterval",
    "GlsSpec",
    "GrowthFn",
    "HorizonError",
    "IifsError",
    "IifsSystem",
    "InfeasibleError",
    "InvalidInputError",
    "PowerValue",
    "PrecisionError",
    "ProductSpec",
    "UndefinedRatioError",
    "XiSequence",
    "ZetaTable",
    "affine_growth",
    "arithmetic_digits",
    "bound_constraint",
    "build_layers",
    "build_zeta",
    "check_delta",
    "choose_Nj",
    "choose_rk",
    "compose_map",
    "constant_growth",
    "cover_sum",
    "critical_exponent",
    "cube_digits",
    "digits_constraint",
    "digits_from_file",
    "digits_of",
    "dyadic_gls_spec",
    "estimate_distortion",
    "fit_regularity",
    "fixed_digits",
    "full_digits",
    "fundamental_interval",
    "gauss_system",
    "gls_spec_from_file",
    "gls_system",
    "growth_from_file",
    "in_survivor_set",
    "iterated_log_growth",
    "log_growth",
    "loglog_growth",
    "luroth_system",
    "m_index",
    "membership_P",
    "natural_projection",
    "parse_digit_set",
    "parse_growth",
    "parse_system",
    "power_digits",
    "prime_digits",
    "quadratic_gauss_system",
    "r_index",
    "run_construction",
    "s0_estimate",
    "sample_member",
    "slow_growth_sweep",
    "square_digits",
    "strictify",
    "subset_chain_check",
    "tau_estimate",
    "verify_contraction",
    "verify_equations",
    "verify_mass",
    "verify_separation",
    "window_constraint",
    "zeta_report",
]
