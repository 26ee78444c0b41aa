"""Ground truth and the trial loop.

Every trial owns an independent random stream derived from
``(seed, trial_index)``: the true frequency is drawn first, then one uniform
variate per measurement.  Outcome ``+`` occurs when the variate falls below
``cos^2(pi w m / (2 omega0))``.  Because the stream never depends on how trials
are grouped, ensembles are reproducible regardless of batching or workers,
and a run of N steps is an exact prefix of a longer run with the same
non-Fourier scheme.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .fourier import spectral_peak
from .posterior import moments_full, multiply_likelihood, expected_variance_full
from .schemes import (
    MeasurementRecord,
    SchemeKind,
    SchemeSpec,
    argmin_smallest,
)

__all__ = [
    "TrialConfig",
    "TrialResult",
    "Ensemble",
    "TrialError",
    "trial_rng",
    "sample_true_omega",
    "sample_outcome",
    "run_trial",
    "run_ensemble",
]

# elements of the (trials x coefficients) block updated at once
_BATCH_ELEMENTS = 4_000_000


class TrialError(RuntimeError):
    def __init__(self, trial_index, step, cause):
        super().__init__(f"trial {trial_index} failed at step {step}: {cause}")
        self.trial_index = trial_index
        self.step = step


@dataclass(frozen=True)
class TrialConfig:
    scheme: SchemeSpec
    N: int
    omega0: float = 1.0
    seed: int = 0
    trial_index: int = 0
    # Fourier peak options, see estimate_omega_fourier
    interpolate: bool = False
    exclude_dc: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if self.seed < 0 or self.trial_index < 0:
            raise ValueError("seed and trial_index must be non-negative")


@dataclass(eq=False)
class TrialResult:
    true_omega: float
    estimate: float
    squared_error: float
    variance_trace: np.ndarray
    record: MeasurementRecord
    estimate_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    trial_index: int = 0
    degenerate: bool = False

    def truncated(self, N: int) -> "TrialResult":
        """The result the same trial would have produced with only N steps."""
        if not self.variance_trace.size:
            raise ValueError("Fourier trials depend on N as a whole and cannot be truncated")
        if not 1 <= N <= len(self.record):
            raise ValueError(f"N must be in 1..{len(self.record)}")
        est = float(self.estimate_trace[N - 1])
        return TrialResult(
            self.true_omega,
            est,
            (est - self.true_omega) ** 2,
            self.variance_trace[:N],
            self.record[:N],
            self.estimate_trace[:N],
            self.trial_index,
        )

    def to_dict(self) -> dict:
        return {
            "trial_index": self.trial_index,
            "true_omega": self.true_omega,
            "estimate": self.estimate,
            "squared_error": self.squared_error,
            "variance_trace": self.variance_trace.tolist(),
            "record": [[int(m), int(r)] for m, r in zip(self.record.m, self.record.r)],
        }

    def __eq__(self, other):
        if not isinstance(other, TrialResult):
            return NotImplemented
        return (
            self.trial_index == other.trial_index
            and self.true_omega == other.true_omega
            and self.estimate == other.estimate
            and self.squared_error == other.squared_error
            and np.array_equal(self.variance_trace, other.variance_trace)
            and np.array_equal(self.estimate_trace, other.estimate_trace)
            and self.record == other.record
        )


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(trial_index)]))


def sample_true_omega(rng: np.random.Generator, omega0: float = 1.0) -> float:
    return float(rng.uniform(0.0, omega0))


def plus_probability(omega, m, omega0=1.0):
    return np.cos(np.pi * np.asarray(omega) * np.asarray(m) / (2 * omega0)) ** 2


def sample_outcome(true_omega: float, m: int, omega0: float, rng: np.random.Generator) -> int:
    return 1 if rng.random() < plus_probability(true_omega, m, omega0) else -1


def _draws(config: TrialConfig, trial_index: int):
    rng = trial_rng(config.seed, trial_index)
    omega = sample_true_omega(rng, config.omega0)
    return omega, rng.random(config.N)


def _outcomes(omega, u, m, omega0):
    return np.where(u < plus_probability(omega, m, omega0), 1, -1).astype(np.int8)


def _fourier_batch(config: TrialConfig, indices) -> list:
    spec = config.scheme
    schedule = np.asarray(spec.fixed_schedule(config.N), dtype=np.int64)
    draws = [_draws(config, i) for i in indices]
    omegas = np.array([d[0] for d in draws])
    u = np.stack([d[1] for d in draws])
    r = _outcomes(omegas[:, None], u, schedule[None, :], config.omega0)
    M = config.N // spec.n
    # schedule is 1,..,1,2,..,2,...: each multiple occupies n consecutive slots
    signals = (r == 1).reshape(len(indices), M, spec.n).mean(axis=2) - 0.5
    est, degenerate = spectral_peak(
        signals, config.omega0, config.interpolate, config.exclude_dc
    )
    return [
        TrialResult(
            float(omegas[b]), float(est[b]), float((est[b] - omegas[b]) ** 2),
            np.zeros(0), MeasurementRecord(schedule, r[b]),
            trial_index=int(idx), degenerate=bool(degenerate[b]),
        )
        for b, idx in enumerate(indices)
    ]


def _adaptive_trial(config: TrialConfig, trial_index: int) -> TrialResult:
    omega0 = config.omega0
    m_max = config.scheme.m_max
    omega, u = _draws(config, trial_index)
    a = np.array([1.0 / omega0])
    ms = np.empty(config.N, dtype=np.int64)
    rs = np.empty(config.N, dtype=np.int8)
    var = np.empty(config.N)
    est = np.empty(config.N)
    for k in range(config.N):
        try:
            m = argmin_smallest(expected_variance_full(a, omega0, m_max)) + 1
            r = 1 if u[k] < plus_probability(omega, m, omega0) else -1
            a = multiply_likelihood(a, m, r)
            z = omega0 * a[0]
            if not z > 0:
                raise ValueError("posterior mass vanished")
            a = a / z
        except Exception as exc:
            raise TrialError(trial_index, k + 1, exc) from exc
        ms[k], rs[k] = m, r
        est[k], var[k] = moments_full(a, omega0)
    return TrialResult(
        omega, float(est[-1]), float((est[-1] - omega) ** 2), var,
        MeasurementRecord(ms, rs), est, trial_index,
    )


def _fixed_schedule_batch(config: TrialConfig, indices) -> list:
    """Non-adaptive Bayesian trials, updated together as rows of one array."""
    omega0 = config.omega0
    schedule = np.asarray(config.scheme.fixed_schedule(config.N), dtype=np.int64)
    B = len(indices)
    draws = [_draws(config, i) for i in indices]
    omegas = np.array([d[0] for d in draws])
    u = np.stack([d[1] for d in draws])
    r = _outcomes(omegas[:, None], u, schedule[None, :], omega0)
    a = np.full((B, 1), 1.0 / omega0)
    var = np.empty((B, config.N))
    est = np.empty((B, config.N))
    for k, m in enumerate(schedule):
        a = multiply_likelihood(a, int(m), r[:, k])
        z = omega0 * a[:, 0]
        bad = ~(z > 0)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise TrialError(indices[i], k + 1, "posterior mass vanished")
        a /= z[:, None]
        est[:, k], var[:, k] = moments_full(a, omega0)
    out = []
    for b, idx in enumerate(indices):
        out.append(TrialResult(
            float(omegas[b]), float(est[b, -1]), float((est[b, -1] - omegas[b]) ** 2),
            var[b].copy(), MeasurementRecord(schedule, r[b]), est[b].copy(), int(idx),
        ))
    return out


def run_trial(config: TrialConfig) -> TrialResult:
    """Simulate one trial; deterministic in ``(seed, trial_index)``."""
    return _run_indices(config, [config.trial_index])[0]


def _run_indices(config: TrialConfig, indices) -> list:
    kind = config.scheme.kind
    config.scheme.check_length(config.N)
    if kind is SchemeKind.FOURIER_PARTITION:
        if config.N // config.scheme.n < 2:
            raise ValueError("Fourier partition needs at least 2 distinct waiting times")
        chunk = max(1, _BATCH_ELEMENTS // config.N)
        return [t for lo in range(0, len(indices), chunk)
                for t in _fourier_batch(config, indices[lo : lo + chunk])]
    if kind is SchemeKind.BAYES_ADAPTIVE:
        return [_adaptive_trial(config, i) for i in indices]
    K_final = int(sum(config.scheme.fixed_schedule(config.N)))
    chunk = max(1, _BATCH_ELEMENTS // (K_final + 1))
    out = []
    for lo in range(0, len(indices), chunk):
        out.extend(_fixed_schedule_batch(config, indices[lo : lo + chunk]))
    return out


@dataclass(eq=False)
class Ensemble:
    config: TrialConfig
    results: list

    @property
    def trials(self) -> int:
        return len(self.results)

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def squared_errors(self) -> np.ndarray:
        return np.array([t.squared_error for t in self.results])

    @property
    def final_variances(self) -> np.ndarray:
        return np.array([t.variance_trace[-1] for t in self.results])

    @property
    def mse(self) -> float:
        return float(self.squared_errors.mean())

    @property
    def mse_se(self) -> float:
        return _se(self.squared_errors)

    @property
    def squared_error_std(self) -> float:
        return float(self.squared_errors.std(ddof=1)) if self.trials > 1 else float("nan")

    def batch_mean_std(self, batches: int = 10) -> float:
        """Spread of the MSE across equal-size batches of trials."""
        groups = np.array_split(self.squared_errors, batches)
        return float(np.std([g.mean() for g in groups if g.size], ddof=1))

    @property
    def mean_variance(self) -> float:
        return float(self.final_variances.mean())

    @property
    def mean_variance_se(self) -> float:
        return _se(self.final_variances)

    @property
    def variance_traces(self) -> np.ndarray:
        return np.stack([t.variance_trace for t in self.results])

    @property
    def mean_variance_trace(self) -> np.ndarray:
        return self.variance_traces.mean(axis=0)

    @property
    def mse_trace(self) -> np.ndarray:
        """Across-trial MSE of the posterior-mean estimate after each step."""
        est = np.stack([t.estimate_trace for t in self.results])
        truth = np.array([t.true_omega for t in self.results])
        return ((est - truth[:, None]) ** 2).mean(axis=0)

    def truncated(self, N: int) -> "Ensemble":
        return Ensemble(replace(self.config, N=N), [t.truncated(N) for t in self.results])

    def dump_jsonl(self, fh, extra: Optional[dict] = None) -> None:
        for t in self.results:
            row = dict(extra or {})
            row.update(t.to_dict())
            fh.write(json.dumps(row) + "\n")


def _se(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float("nan")
    return float(x.std(ddof=1) / np.sqrt(x.size))


def run_ensemble(base: TrialConfig, trials: int, start: int = 0) -> Ensemble:
    """Run ``trials`` trials with indices ``start, start+1, ...``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    indices = list(range(start, start + trials))
    return Ensemble(base, _run_indices(base, indices))


def merge_ensembles(parts: Iterable[Ensemble]) -> Ensemble:
    parts = list(parts)
    results = sorted((t for p in parts for t in p.results), key=lambda t: t.trial_index)
    return Ensemble(parts[0].config, results)
