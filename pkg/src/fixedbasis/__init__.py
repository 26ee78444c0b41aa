"""Frequency estimation for a qubit measured repeatedly in one fixed basis.

The unknown ``w`` of ``H = w sigma_z / 2`` is learned from +/- outcomes
after waiting ``m`` multiples of ``pi / omega0``.  Posteriors are exact
finite cosine series; waiting times come from fixed, greedy-adaptive or
offline greedy (LONA) schedules; a Fourier peak estimator is the baseline.
"""
__version__ = "0.1.0"

from .posterior import (  # noqa: E402
    DegenerateUpdateError,
    PosteriorCosineSeries,
    bayes_update,
    expected_posterior_variance,
    expected_posterior_variances,
    mean,
    uniform_prior,
    update_with_evidence,
    variance,
)
from .schemes import (  # noqa: E402
    BranchLimitError,
    ConfigurationError,
    MeasurementRecord,
    SchemeKind,
    SchemeSpec,
    generate_lona_sequence,
    next_waiting_multiple,
)
from .fourier import build_signal, estimate_omega_fourier  # noqa: E402
from .simulator import (  # noqa: E402
    Ensemble,
    TrialConfig,
    TrialResult,
    run_ensemble,
    run_trial,
    sample_outcome,
    sample_true_omega,
    trial_rng,
)
from .analysis import Model, ScalingFit, fit_scaling, mse_curve, steps_to_threshold  # noqa: E402
from .experiments import best_fourier_mse  # noqa: E402
