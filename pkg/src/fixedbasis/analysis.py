"""MSE curves, scaling fits and steps-to-threshold tables."""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy import stats

__all__ = [
    "Model",
    "ScalingFit",
    "CurvePoint",
    "mse_curve",
    "curve_from_ensemble",
    "fit_scaling",
    "steps_to_threshold",
    "write_curve_csv",
    "read_curve_csv",
    "CSV_COLUMNS",
]

CSV_COLUMNS = ("N", "mse", "standard_error", "trials", "scheme", "seed")


class Model(str, enum.Enum):
    POWER = "power"
    EXPONENTIAL = "exp"


@dataclass(frozen=True)
class CurvePoint:
    N: int
    mse: float
    standard_error: float
    trials: int = 0
    scheme: str = ""
    seed: int = 0

    def __iter__(self):
        # unpacks as the (N, mse, se) triple
        return iter((self.N, self.mse, self.standard_error))


@dataclass(frozen=True)
class ScalingFit:
    model: Model
    coefficient: float
    rate: float
    ci_low: float
    ci_high: float
    r_squared: float
    fit_range: tuple

    def predict(self, N):
        N = np.asarray(N, dtype=float)
        if self.model is Model.POWER:
            return self.coefficient * N ** (-self.rate)
        return self.coefficient * np.exp(-self.rate * N)

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "rate": self.rate,
            "coefficient": self.coefficient,
            "ci": [self.ci_low, self.ci_high],
            "r_squared": self.r_squared,
            "range": list(self.fit_range),
        }


def _point_stats(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("empty ensemble")
    se = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else float("nan")
    return float(values.mean()), se


def mse_curve(ensembles: Mapping[int, Sequence], scheme: str = "", seed: int = 0,
              statistic: str = "mse") -> list:
    """One point per N: mean of the chosen per-trial statistic and its standard error.

    ``statistic`` is ``"mse"`` (squared error) or ``"variance"`` (final
    posterior variance, Bayesian schemes only).
    """
    rows = []
    for N in sorted(ensembles):
        results = list(ensembles[N])
        if statistic == "mse":
            vals = [t.squared_error for t in results]
        elif statistic == "variance":
            vals = [t.variance_trace[-1] for t in results]
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
        mu, se = _point_stats(vals)
        rows.append(CurvePoint(int(N), mu, se, len(results), scheme, seed))
    return rows


def curve_from_ensemble(ensemble, Ns: Optional[Sequence[int]] = None, scheme: str = "",
                        statistic: str = "mse") -> list:
    """Curve over several N from one long non-Fourier ensemble, via exact prefixes."""
    N_max = ensemble.N
    Ns = range(1, N_max + 1) if Ns is None else Ns
    truth = np.array([t.true_omega for t in ensemble.results])
    est = np.stack([t.estimate_trace for t in ensemble.results])
    var = ensemble.variance_traces
    rows = []
    for N in Ns:
        if not 1 <= N <= N_max:
            raise ValueError(f"N={N} outside 1..{N_max}")
        if statistic == "mse":
            vals = (est[:, N - 1] - truth) ** 2
        elif statistic == "variance":
            vals = var[:, N - 1]
        else:
            raise ValueError(f"unknown statistic {statistic!r}")
        mu, se = _point_stats(vals)
        rows.append(CurvePoint(int(N), mu, se, ensemble.trials, scheme, ensemble.config.seed))
    return rows


def fit_scaling(curve, model="power", fit_range: Optional[tuple] = None,
                weighted: bool = False) -> ScalingFit:
    """Least-squares fit of ``log mse`` against ``log N`` (power) or ``N`` (exp).

    The rate is minus the slope; its 95% interval uses the t quantile with
    ``n - 2`` degrees of freedom.
    """
    model = Model(model)
    pts = [tuple(p)[:3] for p in curve]
    if fit_range is not None:
        lo, hi = fit_range
        pts = [p for p in pts if lo <= p[0] <= hi]
    if len(pts) < 3:
        raise ValueError("need at least 3 points in range")
    N = np.array([p[0] for p in pts], dtype=float)
    y = np.array([p[1] for p in pts], dtype=float)
    if np.any(~(y > 0)):
        raise ValueError("mse must be positive in the fit range")
    x = np.log(N) if model is Model.POWER else N
    ly = np.log(y)
    if weighted:
        se = np.array([p[2] for p in pts], dtype=float)
        w = (y / se) ** 2  # var(log y) ~ (se / y)**2
        slope, intercept, slope_se, r2 = _wls(x, ly, w)
    else:
        res = stats.linregress(x, ly)
        slope, intercept, slope_se, r2 = res.slope, res.intercept, res.stderr, res.rvalue**2
    t = stats.t.ppf(0.975, len(x) - 2)
    rate = -slope
    return ScalingFit(
        model, float(np.exp(intercept)), float(rate),
        float(rate - t * slope_se), float(rate + t * slope_se),
        float(min(max(r2, 0.0), 1.0)),
        (int(N.min()), int(N.max())),
    )


def _wls(x, y, w):
    X = np.column_stack([np.ones_like(x), x])
    W = w / w.sum()
    XtW = X.T * W
    beta = np.linalg.solve(XtW @ X, XtW @ y)
    resid = y - X @ beta
    dof = len(x) - 2
    s2 = (W * resid**2).sum() * len(x) / dof
    cov = np.linalg.inv(XtW @ X) * s2 / len(x)
    ybar = (W * y).sum()
    r2 = 1 - (W * resid**2).sum() / (W * (y - ybar) ** 2).sum()
    return beta[1], beta[0], float(np.sqrt(cov[1, 1])), r2


def steps_to_threshold(curve, threshold: float) -> Optional[int]:
    """Smallest sampled N whose value is at or below ``threshold``; None if never."""
    for p in sorted(curve, key=lambda p: tuple(p)[0]):
        N, mse, _ = tuple(p)[:3]
        if mse <= threshold:
            return int(N)
    return None


# ---------------------------------------------------------------------------
# CSV / JSON interchange


def format_curve_csv(rows, comments: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in rows:
        se = "" if np.isnan(p.standard_error) else repr(float(p.standard_error))
        w.writerow([p.N, repr(float(p.mse)), se, p.trials, p.scheme, p.seed])
    return buf.getvalue()


def write_curve_csv(path, rows, comments: Sequence[str] = ()) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_curve_csv(rows, comments))


def read_curve_csv(path) -> list:
    """Parse a curve CSV; ``#`` lines are comments."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    missing = set(CSV_COLUMNS[:3]) - set(reader.fieldnames or ())
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    rows = []
    for rec in reader:
        se = rec.get("standard_error") or "nan"
        rows.append(CurvePoint(
            int(rec["N"]), float(rec["mse"]), float(se),
            int(rec.get("trials") or 0), rec.get("scheme") or "", int(rec.get("seed") or 0),
        ))
    return rows


def fit_report_json(fit: ScalingFit) -> str:
    return json.dumps(fit.to_dict(), indent=2) + "\n"
