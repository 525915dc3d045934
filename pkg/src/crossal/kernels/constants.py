N_FEATURES = 24

FEATURE_NAMES = (
    "mean",
    "std",
    "min",
    "max",
    "skewness",
    "kurtosis",
    "acf_lag1",
    "acf_lag2",
    "acf_lag3",
    "acf_first_zero",
    "mean_crossings",
    "longest_run_above_mean",
    "longest_run_below_mean",
    "trend_slope",
    "trend_residual_std",
    "frac_diff_positive",
    "mean_abs_diff",
    "max_abs_diff",
    "p10",
    "p90",
    "iqr",
    "spectral_centroid",
    "low_freq_power_frac",
    "histogram_entropy",
)

assert len(FEATURE_NAMES) == N_FEATURES
