"""Centralized tolerances and defaults shared by the CLI and the test suite."""

# Goodness-of-fit thresholds
KS_TOLERANCE = 0.06          # supercritical fluctuation statistic vs N(0,1)
KS_TOLERANCE_CRITICAL = 0.10  # critical statistic vs the two-lognormal law
TV_TOLERANCE = 0.05          # discrete laws vs their Poisson references
SE_MULTIPLIER = 4.0          # Monte Carlo comparisons against closed forms

# Window of defect sizes around mu carrying nearly all mass
WINDOW_EXPONENT = 0.6

# Lognormal-sum CDF quadrature accuracy target
LOGNORMAL_CDF_ABS_TOL = 1e-6
