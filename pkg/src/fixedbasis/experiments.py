"""Sweeps that tie the simulator to the analysis: MSE curves and the steps table."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence


from .analysis import CurvePoint, curve_from_ensemble, steps_to_threshold
from .schemes import SchemeKind, SchemeSpec
from .simulator import Ensemble, TrialConfig, run_ensemble

__all__ = [
    "TABLE_OMEGA0",
    "fourier_partition_mses",
    "best_fourier_mse",
    "best_fourier_curve",
    "scheme_curve",
    "calibration",
    "TableRow",
    "steps_table",
]

# The steps table uses absolute variance thresholds; its rows are reproduced with
# p(+) = cos^2(m w), i.e. omega0 = pi / 2.
TABLE_OMEGA0 = math.pi / 2


def fourier_partition_mses(N: int, trials: int, seed: int, omega0: float = 1.0,
                           n_set: Sequence[int] = (1, 2, 3), **peak) -> dict:
    """``{n: Ensemble}`` for every partition in ``n_set`` that divides N."""
    out = {}
    for n in n_set:
        if N % n or N // n < 2:
            continue
        cfg = TrialConfig(SchemeSpec(SchemeKind.FOURIER_PARTITION, n=n), N, omega0, seed, **peak)
        out[n] = run_ensemble(cfg, trials)
    if not out:
        raise ValueError(f"no partition in {tuple(n_set)} fits N={N}")
    return out


def best_fourier_mse(N: int, trials: int, seed: int, omega0: float = 1.0,
                     n_set: Sequence[int] = (1, 2, 3), **peak) -> float:
    """Smallest empirical MSE over the partitions ``n`` that divide N."""
    return min(e.mse for e in fourier_partition_mses(N, trials, seed, omega0, n_set, **peak).values())


def best_fourier_curve(Ns: Sequence[int], trials: int, seed: int, omega0: float = 1.0,
                       n_set: Sequence[int] = (1, 2, 3), **peak):
    """Best-partition MSE at each N; returns ``(curve, chosen_n)``."""
    rows, chosen = [], []
    for N in Ns:
        parts = fourier_partition_mses(N, trials, seed, omega0, n_set, **peak)
        n, ens = min(parts.items(), key=lambda kv: kv[1].mse)
        rows.append(CurvePoint(int(N), ens.mse, ens.mse_se, trials, "fourier", seed))
        chosen.append(n)
    return rows, chosen


def scheme_curve(spec: SchemeSpec, Ns: Sequence[int], trials: int, seed: int,
                 omega0: float = 1.0, statistic: str = "mse", **peak):
    """MSE curve of one scheme at the requested N.

    Non-Fourier schemes do not look ahead, so a single ensemble at max(Ns)
    yields every smaller N exactly.  Returns ``(curve, ensemble_or_None)``.
    """
    Ns = sorted(set(int(N) for N in Ns))
    if spec.kind is SchemeKind.FOURIER_PARTITION:
        rows = []
        for N in Ns:
            ens = run_ensemble(TrialConfig(spec, N, omega0, seed, **peak), trials)
            rows.append(CurvePoint(N, ens.mse, ens.mse_se, trials, spec.label(), seed))
        return rows, None
    ens = run_ensemble(TrialConfig(spec, Ns[-1], omega0, seed), trials)
    return curve_from_ensemble(ens, Ns, spec.label(), statistic), ens


@dataclass(frozen=True)
class Calibration:
    N: int
    mse: float
    mse_se: float
    mean_variance: float
    variance_se: float

    @property
    def z(self) -> float:
        return abs(self.mse - self.mean_variance) / math.hypot(self.mse_se, self.variance_se)

    def ok(self, k: float = 3.0) -> bool:
        return self.z <= k


def calibration(ensemble: Ensemble, Ns: Optional[Sequence[int]] = None) -> list:
    """MSE against mean posterior variance at each N of a Bayesian ensemble."""
    mse = curve_from_ensemble(ensemble, Ns, statistic="mse")
    var = curve_from_ensemble(ensemble, Ns, statistic="variance")
    return [Calibration(a.N, a.mse, a.standard_error, b.mse, b.standard_error)
            for a, b in zip(mse, var)]


@dataclass(frozen=True)
class TableRow:
    scheme: str
    threshold: float
    steps: Optional[int]
    N_max: int
    trials: int
    seed: int

    @property
    def display(self) -> str:
        return str(self.steps) if self.steps is not None else f">{self.N_max}"


TABLE_SCHEMES = ("bayes-m1", "fourier", "bayes-n1", "lona", "adaptive")

# longest N simulated per scheme; (10^-3 only, with 10^-5)
DEFAULT_CAPS = {
    "bayes-m1": (600, 600),
    "fourier": (90, 300),
    "bayes-n1": (60, 90),
    "lona": (None, None),
    "adaptive": (40, 60),
}


def steps_table(trials: int, seed: int, lona_sequence: Sequence[int], omega0: float = TABLE_OMEGA0,
                thresholds: Sequence[float] = (1e-3,), deep: bool = False, m_max: int = 1000,
                caps: Optional[dict] = None, schemes: Sequence[str] = TABLE_SCHEMES,
                statistic: str = "mse", fourier_step: int = 1, **peak) -> list:
    """Steps needed by each scheme to bring the MSE below each threshold."""
    caps = dict(DEFAULT_CAPS, **(caps or {}))
    rows = []
    for name in schemes:
        cap = caps[name][1 if deep else 0]
        if name == "fourier":
            Ns = list(range(2, cap + 1, fourier_step))
            curve, _ = best_fourier_curve(Ns, trials, seed, omega0, **peak)
        else:
            spec = {
                "bayes-m1": SchemeSpec(SchemeKind.BAYES_FIXED_M1, m_max=m_max),
                "bayes-n1": SchemeSpec(SchemeKind.BAYES_UNIFORM, n=1, m_max=m_max),
                "adaptive": SchemeSpec(SchemeKind.BAYES_ADAPTIVE, m_max=m_max),
                "lona": SchemeSpec(SchemeKind.LONA, m_max=m_max, lona_sequence=tuple(lona_sequence)),
            }[name]
            if name == "lona":
                cap = len(lona_sequence) if cap is None else min(cap, len(lona_sequence))
            curve, _ = scheme_curve(spec, range(1, cap + 1), trials, seed, omega0, statistic)
        for th in thresholds:
            rows.append(TableRow(name, th, steps_to_threshold(curve, th), cap, trials, seed))
    return rows
