"""Published Monte Carlo summaries (10^4 replications) used as acceptance targets.

Keys are (covariates, outcome); rows are (method, or_spec, ps_spec, values).
"""

# bias (mu1, mu0, delta) then SD (mu1, mu0, delta)
BIAS_SD = {
    ('one', 'binary'): [
        ('rct_only', None, None, (0.0, 0.001, -0.001, 0.049, 0.071, 0.085)),
        ('augmentation', 'correct', None, (0.0, 0.001, -0.001, 0.048, 0.069, 0.082)),
        ('augmentation', 'incorrect', None, (-0.001, 0.0, -0.001, 0.049, 0.071, 0.085)),
        ('unadjusted', None, None, (0.0, 0.044, -0.044, 0.049, 0.043, 0.064)),
        ('ps_weighting', None, 'correct', (0.0, 0.001, -0.001, 0.049, 0.046, 0.066)),
        ('ps_weighting', None, 'incorrect', (0.0, 0.05, -0.05, 0.049, 0.044, 0.065)),
        ('g_computation', 'correct', None, (0.0, 0.001, -0.001, 0.048, 0.046, 0.065)),
        ('g_computation', 'incorrect', None, (-0.001, 0.041, -0.042, 0.049, 0.045, 0.066)),
        ('weighted_regression', 'correct', 'correct', (0.0, 0.0, 0.0, 0.048, 0.045, 0.065)),
        ('weighted_regression', 'correct', 'incorrect', (0.0, 0.0, 0.0, 0.048, 0.046, 0.065)),
        ('weighted_regression', 'incorrect', 'correct', (0.0, -0.001, 0.001, 0.049, 0.046, 0.067)),
        ('weighted_regression', 'incorrect', 'incorrect', (0.0, 0.041, -0.042, 0.049, 0.045, 0.066)),
    ],
    ('one', 'continuous'): [
        ('rct_only', None, None, (0.002, -0.001, 0.002, 0.124, 0.18, 0.219)),
        ('augmentation', 'correct', None, (0.001, 0.001, 0.0, 0.117, 0.155, 0.173)),
        ('augmentation', 'incorrect', None, (-0.002, -0.004, 0.002, 0.124, 0.183, 0.219)),
        ('unadjusted', None, None, (0.002, 0.3, -0.299, 0.124, 0.131, 0.18)),
        ('ps_weighting', None, 'correct', (0.002, -0.001, 0.003, 0.124, 0.119, 0.161)),
        ('ps_weighting', None, 'incorrect', (0.002, 0.359, -0.357, 0.124, 0.183, 0.221)),
        ('g_computation', 'correct', None, (0.001, 0.0, 0.0, 0.117, 0.11, 0.135)),
        ('g_computation', 'incorrect', None, (-0.002, 0.269, -0.271, 0.124, 0.14, 0.186)),
        ('weighted_regression', 'correct', 'correct', (0.001, 0.0, 0.0, 0.117, 0.11, 0.134)),
        ('weighted_regression', 'correct', 'incorrect', (0.001, 0.0, 0.001, 0.117, 0.111, 0.135)),
        ('weighted_regression', 'incorrect', 'correct', (-0.002, -0.005, 0.003, 0.124, 0.117, 0.158)),
        ('weighted_regression', 'incorrect', 'incorrect', (-0.002, 0.292, -0.294, 0.124, 0.14, 0.184)),
    ],
    ('two', 'binary'): [
        ('rct_only', None, None, (0.001, 0.0, 0.0, 0.049, 0.072, 0.088)),
        ('augmentation', 'correct', None, (0.001, 0.0, 0.0, 0.048, 0.068, 0.082)),
        ('augmentation', 'incorrect', None, (0.0, 0.0, 0.0, 0.049, 0.071, 0.086)),
        ('unadjusted', None, None, (0.001, 0.015, -0.014, 0.049, 0.044, 0.066)),
        ('ps_weighting', None, 'correct', (0.001, 0.0, 0.001, 0.049, 0.05, 0.069)),
        ('ps_weighting', None, 'incorrect', (0.001, 0.057, -0.057, 0.049, 0.048, 0.068)),
        ('g_computation', 'correct', None, (0.001, 0.0, 0.0, 0.048, 0.048, 0.066)),
        ('g_computation', 'incorrect', None, (0.0, 0.039, -0.039, 0.049, 0.047, 0.067)),
        ('weighted_regression', 'correct', 'correct', (-0.001, 0.001, -0.001, 0.048, 0.049, 0.065)),
        ('weighted_regression', 'correct', 'incorrect', (-0.001, 0.001, -0.002, 0.048, 0.049, 0.065)),
        ('weighted_regression', 'incorrect', 'correct', (-0.001, -0.001, -0.001, 0.048, 0.049, 0.067)),
        ('weighted_regression', 'incorrect', 'incorrect', (-0.001, 0.04, -0.042, 0.048, 0.046, 0.065)),
    ],
    ('two', 'continuous'): [
        ('rct_only', None, None, (0.0, 0.001, -0.001, 0.133, 0.193, 0.234)),
        ('augmentation', 'correct', None, (0.0, 0.001, -0.001, 0.123, 0.159, 0.172)),
        ('augmentation', 'incorrect', None, (-0.004, -0.001, -0.002, 0.131, 0.185, 0.219)),
        ('unadjusted', None, None, (0.0, 0.171, -0.171, 0.133, 0.147, 0.199)),
        ('ps_weighting', None, 'correct', (0.0, -0.002, 0.002, 0.133, 0.134, 0.175)),
        ('ps_weighting', None, 'incorrect', (0.0, 0.401, -0.401, 0.133, 0.198, 0.234)),
        ('g_computation', 'correct', None, (0.0, 0.0, 0.0, 0.123, 0.119, 0.136)),
        ('g_computation', 'incorrect', None, (-0.004, 0.271, -0.275, 0.131, 0.15, 0.191)),
        ('weighted_regression', 'correct', 'correct', (0.0, 0.0, 0.0, 0.123, 0.122, 0.138)),
        ('weighted_regression', 'correct', 'incorrect', (0.0, 0.0, 0.0, 0.123, 0.12, 0.137)),
        ('weighted_regression', 'incorrect', 'correct', (-0.004, -0.005, 0.001, 0.131, 0.129, 0.165)),
        ('weighted_regression', 'incorrect', 'incorrect', (-0.004, 0.295, -0.298, 0.131, 0.156, 0.195)),
    ],
}

# Wald coverage (mu1, mu0, delta)
COVERAGE = {
    ('one', 'binary'): [
        ('augmentation', 'correct', None, (0.944, 0.94, 0.947)),
        ('augmentation', 'incorrect', None, (0.947, 0.94, 0.947)),
        ('g_computation', 'correct', None, (0.944, 0.947, 0.95)),
        ('g_computation', 'incorrect', None, (0.947, 0.845, 0.904)),
        ('weighted_regression', 'correct', 'correct', (0.944, 0.948, 0.947)),
        ('weighted_regression', 'correct', 'incorrect', (0.944, 0.944, 0.947)),
        ('weighted_regression', 'incorrect', 'correct', (0.945, 0.944, 0.948)),
        ('weighted_regression', 'incorrect', 'incorrect', (0.945, 0.846, 0.903)),
    ],
    ('one', 'continuous'): [
        ('augmentation', 'correct', None, (0.946, 0.946, 0.945)),
        ('augmentation', 'incorrect', None, (0.946, 0.94, 0.946)),
        ('g_computation', 'correct', None, (0.946, 0.948, 0.948)),
        ('g_computation', 'incorrect', None, (0.946, 0.507, 0.687)),
        ('weighted_regression', 'correct', 'correct', (0.946, 0.949, 0.947)),
        ('weighted_regression', 'correct', 'incorrect', (0.946, 0.948, 0.949)),
        ('weighted_regression', 'incorrect', 'correct', (0.946, 0.931, 0.957)),
        ('weighted_regression', 'incorrect', 'incorrect', (0.946, 0.428, 0.639)),
    ],
    ('two', 'binary'): [
        ('augmentation', 'correct', None, (0.945, 0.94, 0.939)),
        ('augmentation', 'incorrect', None, (0.946, 0.94, 0.942)),
        ('g_computation', 'correct', None, (0.945, 0.945, 0.943)),
        ('g_computation', 'incorrect', None, (0.946, 0.858, 0.905)),
        ('weighted_regression', 'correct', 'correct', (0.944, 0.946, 0.95)),
        ('weighted_regression', 'correct', 'incorrect', (0.944, 0.945, 0.951)),
        ('weighted_regression', 'incorrect', 'correct', (0.945, 0.943, 0.95)),
        ('weighted_regression', 'incorrect', 'incorrect', (0.945, 0.851, 0.906)),
    ],
    ('two', 'continuous'): [
        ('augmentation', 'correct', None, (0.945, 0.944, 0.947)),
        ('augmentation', 'incorrect', None, (0.946, 0.945, 0.947)),
        ('g_computation', 'correct', None, (0.945, 0.952, 0.949)),
        ('g_computation', 'incorrect', None, (0.946, 0.552, 0.696)),
        ('weighted_regression', 'correct', 'correct', (0.945, 0.951, 0.951)),
        ('weighted_regression', 'correct', 'incorrect', (0.945, 0.952, 0.949)),
        ('weighted_regression', 'incorrect', 'correct', (0.946, 0.938, 0.957)),
        ('weighted_regression', 'incorrect', 'incorrect', (0.946, 0.5, 0.651)),
    ],
}
