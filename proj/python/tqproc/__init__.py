"""Time dependent empirical and quantile processes of fBm ensembles."""

from ._core import (
    ConfigError,
    DataError,
    DomainError,
    Ensemble,
    NumericError,
    __version__,
    bivariate_normal_cdf,
    classical_bk_sup,
    density_quantile,
    fbm_covariance,
    kernel_row,
    lil_constants,
    limit_kernel_G,
    loglog_fit,
    marginal_cdf,
    modulus_gauge,
    parse_config,
    quantile_kernel_K,
    rate_exponents,
    run_config,
    sample_path,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
    swanson_kernel,
    thresholds,
    tie_bound_m,
    true_quantile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
