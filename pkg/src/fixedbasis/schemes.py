"""Waiting-time policies: which multiple ``m_k`` of the base interval to wait next."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .posterior import (
    PosteriorCosineSeries,
    expected_posterior_variances,
    expected_variance_full,
    multiply_likelihood,
    to_full,
)

__all__ = [
    "SchemeKind",
    "SchemeSpec",
    "Step",
    "MeasurementRecord",
    "ConfigurationError",
    "BranchLimitError",
    "next_waiting_multiple",
    "argmin_smallest",
    "generate_lona_sequence",
    "write_lona_file",
    "read_lona_file",
]

TIE_TOL = 1e-12
DEFAULT_M_MAX = 1000
DEFAULT_PRUNE = 1e-6
DEFAULT_BRANCH_CAP = 2**20


class ConfigurationError(ValueError):
    pass


class BranchLimitError(RuntimeError):
    """LONA generation needed more branches than the configured cap."""

    def __init__(self, depth, branches, cap):
        super().__init__(
            f"LONA branch count {branches} exceeds cap {cap} at step {depth}"
        )
        self.depth = depth
        self.branches = branches
        self.cap = cap


class SchemeKind(str, enum.Enum):
    FOURIER_PARTITION = "fourier"
    BAYES_FIXED_M1 = "bayes-m1"
    BAYES_UNIFORM = "bayes-uniform"
    BAYES_ADAPTIVE = "adaptive"
    LONA = "lona"

    @property
    def bayesian(self) -> bool:
        return self is not SchemeKind.FOURIER_PARTITION

    @property
    def adaptive(self) -> bool:
        return self is SchemeKind.BAYES_ADAPTIVE


@dataclass(frozen=True)
class SchemeSpec:
    kind: SchemeKind
    n: int = 1
    m_max: int = DEFAULT_M_MAX
    lona_sequence: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.m_max < 1:
            raise ConfigurationError(f"m_max must be >= 1, got {self.m_max}")
        if self.lona_sequence is not None:
            seq = tuple(int(m) for m in self.lona_sequence)
            if any(m < 1 for m in seq):
                raise ConfigurationError("LONA sequence entries must be >= 1")
            object.__setattr__(self, "lona_sequence", seq)
        elif self.kind is SchemeKind.LONA:
            raise ConfigurationError("LONA scheme needs a lona_sequence")

    def check_length(self, N: int) -> None:
        if self.kind is SchemeKind.LONA and len(self.lona_sequence) < N:
            raise ConfigurationError(
                f"LONA sequence has {len(self.lona_sequence)} entries, run needs {N}"
            )
        if self.kind is SchemeKind.FOURIER_PARTITION and N % self.n:
            raise ConfigurationError(f"N={N} is not divisible by n={self.n}")

    def fixed_schedule(self, N: int) -> Optional[list]:
        """Waiting multiples for all N steps, or None for the adaptive policy."""
        if self.kind.adaptive:
            return None
        self.check_length(N)
        return [next_waiting_multiple(self, k) for k in range(N)]

    def label(self) -> str:
        if self.kind in (SchemeKind.FOURIER_PARTITION, SchemeKind.BAYES_UNIFORM):
            return f"{self.kind.value}(n={self.n})"
        return self.kind.value


class Step(NamedTuple):
    m: int
    r: int


class MeasurementRecord:
    """Ordered ``(m_k, r_k)`` pairs, stored as two integer arrays."""

    __slots__ = ("m", "r")

    def __init__(self, m=(), r=()):
        m = np.asarray(m, dtype=np.int64).reshape(-1)
        r = np.asarray(r, dtype=np.int8).reshape(-1)
        if m.shape != r.shape:
            raise ValueError("multiples and outcomes must have the same length")
        if np.any(m < 1):
            raise ValueError("waiting multiples must be >= 1")
        if np.any((r != 1) & (r != -1)):
            raise ValueError("outcomes must be +1 or -1")
        self.m = m
        self.r = r

    @classmethod
    def from_pairs(cls, pairs) -> "MeasurementRecord":
        pairs = list(pairs)
        if not pairs:
            return cls()
        m, r = zip(*pairs)
        return cls(m, r)

    def append(self, m: int, r: int) -> "MeasurementRecord":
        """Return a new record with one more step."""
        return MeasurementRecord(np.append(self.m, m), np.append(self.r, r))

    @property
    def steps(self) -> list:
        return [Step(int(m), int(r)) for m, r in zip(self.m, self.r)]

    def __len__(self):
        return self.m.size

    def __iter__(self):
        return iter(self.steps)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return MeasurementRecord(self.m[key], self.r[key])
        return Step(int(self.m[key]), int(self.r[key]))

    def __eq__(self, other):
        if not isinstance(other, MeasurementRecord):
            return NotImplemented
        return np.array_equal(self.m, other.m) and np.array_equal(self.r, other.r)

    def __repr__(self):
        return f"MeasurementRecord({self.steps!r})"


def argmin_smallest(values, tol: float = TIE_TOL) -> int:
    """Index of the minimum; among entries within ``tol`` of it, the first."""
    values = np.asarray(values)
    best = values.min()
    return int(np.flatnonzero(values <= best + tol)[0])


def next_waiting_multiple(
    spec: SchemeSpec,
    history,
    posterior: Optional[PosteriorCosineSeries] = None,
) -> int:
    """Waiting multiple for the upcoming measurement.

    ``history`` is a MeasurementRecord or simply the number of measurements
    already made.  Only the adaptive policy looks at ``posterior``.
    """
    done = history if isinstance(history, int) else len(history)
    k = done + 1
    kind = spec.kind
    if kind is SchemeKind.BAYES_FIXED_M1:
        return 1
    if kind in (SchemeKind.BAYES_UNIFORM, SchemeKind.FOURIER_PARTITION):
        return -(-k // spec.n)
    if kind is SchemeKind.LONA:
        if k > len(spec.lona_sequence):
            raise ConfigurationError(
                f"LONA sequence exhausted at step {k} (length {len(spec.lona_sequence)})"
            )
        return spec.lona_sequence[k - 1]
    if posterior is None:
        raise ValueError("adaptive policy needs the current posterior")
    return argmin_smallest(expected_posterior_variances(posterior, spec.m_max)) + 1


_CHUNK_ELEMENTS = 2_000_000


def _weighted_expected_variance(a, weights, omega0, m_max):
    # chunked over branches to bound the convolution workspace
    width = a.shape[1] + 2 * m_max
    chunk = max(1, _CHUNK_ELEMENTS // width)
    score = np.zeros(m_max)
    for lo in range(0, len(a), chunk):
        score += weights[lo : lo + chunk] @ expected_variance_full(a[lo : lo + chunk], omega0, m_max)
    return score


def generate_lona_sequence(
    omega0: float = 1.0,
    steps: int = 20,
    m_max: int = DEFAULT_M_MAX,
    prune_threshold: float = DEFAULT_PRUNE,
    branch_cap: int = DEFAULT_BRANCH_CAP,
    return_diagnostics: bool = False,
):
    """Offline locally optimal non-adaptive waiting-time sequence.

    Keeps every posterior reachable from the chosen multiples, weighted by
    its marginal probability, and at each step picks the multiple that
    minimizes the weighted expected posterior variance.  Outcome strings that
    only differ in order give identical posteriors, so they are merged and
    tracked by their count of "+" results per distinct multiple.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if prune_threshold < 0:
        raise ValueError("prune_threshold must be >= 0")

    a = to_full(np.array([[2.0 / omega0]]))  # (branches, K+1)
    weights = np.array([1.0])
    counts = np.zeros((1, 0), dtype=np.int64)  # "+" count per distinct m
    distinct: list = []
    seq: list = []
    diag = []

    for depth in range(1, steps + 1):
        score = _weighted_expected_variance(a, weights, omega0, m_max)
        m = argmin_smallest(score) + 1
        seq.append(m)

        if m in distinct:
            col = distinct.index(m)
        else:
            distinct.append(m)
            col = len(distinct) - 1
            counts = np.hstack([counts, np.zeros((len(counts), 1), dtype=np.int64)])

        # child masses follow from two coefficients: Z_r = omega0 (a[0] + r a[m] / 2)
        B, width = a.shape
        parent = np.concatenate([np.arange(B), np.arange(B)])
        r = np.repeat([1.0, -1.0], B)
        am = a[:, m] if m < width else np.zeros(B)
        z = omega0 * (a[parent, 0] + 0.5 * r * am[parent])
        w = weights[parent] * z / 2
        c = counts[parent]
        c[:B, col] += 1
        live = z > 0
        parent, r, z, w, c = parent[live], r[live], z[live], w[live], c[live]

        # merge identical posteriors (same "+" count for every distinct m)
        _, first, inverse = np.unique(c, axis=0, return_index=True, return_inverse=True)
        w = np.bincount(inverse.reshape(-1), weights=w, minlength=len(first))
        parent, r, z, c = parent[first], r[first], z[first], c[first]
        if prune_threshold > 0:
            keep = w >= prune_threshold
            parent, r, z, c, w = parent[keep], r[keep], z[keep], c[keep], w[keep]
        if len(w) > branch_cap:
            raise BranchLimitError(depth, len(w), branch_cap)

        child = np.empty((len(w), width + m))
        rows = max(1, _CHUNK_ELEMENTS // (width + m))
        for lo in range(0, len(w), rows):
            sl = slice(lo, lo + rows)
            child[sl] = multiply_likelihood(a[parent[sl]], m, r[sl]) / z[sl, None]
        a, counts = child, c
        weights = w / w.sum()

        diag.append({"step": depth, "m": m, "branches": len(weights), "score": float(score[m - 1])})

    if return_diagnostics:
        return seq, diag
    return seq


def write_lona_file(path, sequence: Sequence[int], omega0=1.0, m_max=DEFAULT_M_MAX,
                    prune_threshold=DEFAULT_PRUNE) -> None:
    doc = {
        "omega0": float(omega0),
        "m_max": int(m_max),
        "prune_threshold": float(prune_threshold),
        "sequence": [int(m) for m in sequence],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def read_lona_file(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if "sequence" not in doc or not isinstance(doc["sequence"], list):
        raise ConfigurationError(f"{path}: missing 'sequence' list")
    return doc
