"""Exact Bayesian posterior over the qubit frequency as a finite cosine series.

With the flat prior on ``[0, omega0]`` and outcome likelihoods
``(1 + r cos(m pi w / omega0)) / 2``, every posterior is a finite cosine
polynomial in ``theta = pi w / omega0``.  The public coefficients follow the
half-weight convention::

    P(w) = c[0] / 2 + sum_{q=1..K} c[q] cos(q theta)

Internally all arithmetic uses the "full" form ``a[0] = c[0] / 2``,
``a[q] = c[q]``, so that ``P = sum_q a[q] cos(q theta)``.  The helpers working
on full-form arrays accept a leading batch axis; the simulator and the LONA
generator use that to update many posteriors at once.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import signal

__all__ = [
    "DegenerateUpdateError",
    "PosteriorCosineSeries",
    "uniform_prior",
    "bayes_update",
    "update_with_evidence",
    "mean",
    "variance",
    "expected_posterior_variance",
    "expected_posterior_variances",
    "clamp_count",
]

# tiny negative variances below this (in units of omega0**2) are rounding
_NEG_VAR_SLACK = 1e-12

_clamps = 0


class DegenerateUpdateError(ValueError):
    """The observed outcome has zero probability under the current posterior."""


def clamp_count() -> int:
    """Number of negative variances clamped to zero so far in this process."""
    return _clamps


def _clamp(v):
    global _clamps
    v = np.asarray(v, dtype=float)
    neg = v < 0
    if np.any(neg):
        _clamps += int(np.count_nonzero(neg))
        v = np.where(neg, 0.0, v)
    return v


@dataclass(frozen=True, eq=False)
class PosteriorCosineSeries:
    """Normalized posterior density ``P(w)`` on ``[0, omega0]``.

    ``coeffs`` holds ``c[0..K]`` in the half-weight convention; after
    normalization ``c[0] == 2 / omega0``.
    """

    omega0: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.float64)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-d array")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "omega0", float(self.omega0))

    @property
    def K(self) -> int:
        return self.coeffs.size - 1

    @property
    def full(self) -> np.ndarray:
        """Coefficients in full form (``a[0] = c[0] / 2``)."""
        return to_full(self.coeffs)

    def density(self, omega):
        """Evaluate ``P(omega)``; accepts scalars or arrays."""
        omega = np.asarray(omega, dtype=float)
        theta = np.pi * omega / self.omega0
        q = np.arange(self.K + 1)
        return np.cos(np.multiply.outer(theta, q)) @ self.full

    def normalized(self) -> "PosteriorCosineSeries":
        a = self.full
        return PosteriorCosineSeries(self.omega0, from_full(a / (self.omega0 * a[0])))

    @property
    def mean(self) -> float:
        return mean(self)

    @property
    def variance(self) -> float:
        return variance(self)

    def to_json(self) -> str:
        return json.dumps({"omega0": self.omega0, "coeffs": self.coeffs.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "PosteriorCosineSeries":
        d = json.loads(text)
        return cls(d["omega0"], np.asarray(d["coeffs"], dtype=float))

    def __eq__(self, other):
        if not isinstance(other, PosteriorCosineSeries):
            return NotImplemented
        return self.omega0 == other.omega0 and np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"PosteriorCosineSeries(omega0={self.omega0!r}, K={self.K})"


def to_full(c):
    a = np.array(c, dtype=np.float64)
    a[..., 0] *= 0.5
    return a


def from_full(a):
    c = np.array(a, dtype=np.float64)
    c[..., 0] *= 2.0
    return c


# ---------------------------------------------------------------------------
# full-form kernels (batch-aware along leading axes)


def multiply_likelihood(a, m, r):
    """Multiply full-form series ``a`` by ``1 + r cos(m theta)``; no normalization.

    ``r`` is a scalar or an array broadcastable to ``a.shape[:-1]``.
    Returns an array with ``K + m + 1`` coefficients.
    """
    a = np.asarray(a, dtype=np.float64)
    K = a.shape[-1] - 1
    out = np.zeros(a.shape[:-1] + (K + m + 1,))
    out[..., : K + 1] = a
    half = 0.5 * np.asarray(r, dtype=np.float64)[..., None] * a
    # cos(q) cos(m) = (cos(q+m) + cos(|q-m|)) / 2
    out[..., m : m + K + 1] += half
    if K >= m:
        out[..., : K - m + 1] += half[..., m:]
    j = min(m, K + 1)
    out[..., m - j + 1 : m + 1] += half[..., j - 1 :: -1]
    return out


def first_moment_weights(K, omega0):
    """``I1[q] = integral of w cos(q pi w / omega0) over [0, omega0]``."""
    q = np.arange(1, K + 1, dtype=float)
    w = np.empty(K + 1)
    w[0] = omega0**2 / 2
    w[1:] = omega0**2 * (np.where(q % 2 == 0, 1.0, -1.0) - 1.0) / (q * np.pi) ** 2
    return w


def second_moment_weights(K, omega0):
    """``I2[q] = integral of w**2 cos(q pi w / omega0) over [0, omega0]``."""
    q = np.arange(1, K + 1, dtype=float)
    w = np.empty(K + 1)
    w[0] = omega0**3 / 3
    w[1:] = 2 * omega0**3 * np.where(q % 2 == 0, 1.0, -1.0) / (q * np.pi) ** 2
    return w


def _dot(a, w):
    # row-wise reduction that does not depend on batch shape
    return (a * w).sum(axis=-1)


def raw_moments(a, omega0):
    """Mass, first and second raw moments of full-form series (unnormalized)."""
    K = a.shape[-1] - 1
    z = omega0 * a[..., 0]
    m1 = _dot(a, first_moment_weights(K, omega0))
    m2 = _dot(a, second_moment_weights(K, omega0))
    return z, m1, m2


def moments_full(a, omega0):
    """``(mean, variance)`` of full-form series, batch-aware."""
    z, m1, m2 = raw_moments(a, omega0)
    mu = m1 / z
    return mu, _clamp(m2 / z - mu * mu)


def _cos_lag_moments(a, omega0, m_max):
    """For each m in 1..m_max, integrals of P cos(m theta) times 1, w, w**2.

    Uses ``int P cos(m) k = 1/2 sum_q a[q] (Ik(q+m) + Ik(|q-m|))`` and
    evaluates the sums for all m with one convolution per moment.
    """
    K = a.shape[-1] - 1
    L = K + m_max
    lags = np.abs(np.arange(-L, m_max + 1))
    i1 = first_moment_weights(L, omega0)[lags]
    i2 = second_moment_weights(L, omega0)[lags]
    m = np.arange(1, m_max + 1)
    if a.ndim == 1:
        s1 = signal.convolve(a, i1, mode="full")
        s2 = signal.convolve(a, i2, mode="full")
    else:
        s1 = signal.fftconvolve(a, i1[None, :], mode="full", axes=-1)
        s2 = signal.fftconvolve(a, i2[None, :], mode="full", axes=-1)
    # output index of lag n is n + L
    c1 = 0.5 * (s1[..., L + m] + s1[..., L - m])
    c2 = 0.5 * (s2[..., L + m] + s2[..., L - m])
    c0 = np.zeros(a.shape[:-1] + (m_max,))
    top = min(K, m_max)
    c0[..., :top] = 0.5 * omega0 * a[..., 1 : top + 1]
    return c0, c1, c2


def expected_variance_full(a, omega0, m_max):
    """Expected posterior variance after one more measurement, for m = 1..m_max.

    Returns shape ``a.shape[:-1] + (m_max,)``.  With normalized moments
    ``mu1, mu2`` and lag integrals ``C0, C1`` the outcome-averaged variance is
    ``mu2 - 1/2 sum_r (mu1 + r C1)**2 / (1 + r C0)``.
    """
    z, m1, m2 = raw_moments(a, omega0)
    c0, c1, _ = _cos_lag_moments(a, omega0, m_max)
    z = z[..., None]
    mu1 = (m1 / z[..., 0])[..., None]
    mu2 = (m2 / z[..., 0])[..., None]
    c0 = c0 / z
    c1 = c1 / z
    total = 0.0
    for r in (1.0, -1.0):
        den = 1.0 + r * c0
        num = (mu1 + r * c1) ** 2
        ok = den > 1e-300
        total = total + np.where(ok, num / np.where(ok, den, 1.0), 0.0)
    return _clamp(mu2 - 0.5 * total)


# ---------------------------------------------------------------------------
# public operations on PosteriorCosineSeries


def uniform_prior(omega0: float = 1.0) -> PosteriorCosineSeries:
    """Flat prior ``1 / omega0`` on ``[0, omega0]``."""
    if not omega0 > 0:
        raise ValueError(f"omega0 must be positive, got {omega0!r}")
    return PosteriorCosineSeries(omega0, np.array([2.0 / omega0]))


def _check_update(m, r):
    if int(m) != m or m < 1:
        raise ValueError(f"waiting multiple must be a positive integer, got {m!r}")
    if r not in (1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {r!r}")


def update_with_evidence(prior: PosteriorCosineSeries, m: int, r: int):
    """Bayes update returning ``(posterior, Z)``.

    ``Z`` is the mass of ``P(w) (1 + r cos(m theta))`` before renormalization,
    i.e. twice the predictive probability of outcome ``r``.
    """
    _check_update(m, r)
    a = multiply_likelihood(prior.full, int(m), r)
    z = prior.omega0 * a[0]
    if not z > 0:
        raise DegenerateUpdateError(f"outcome {r:+d} at m={m} has zero probability")
    return PosteriorCosineSeries(prior.omega0, from_full(a / z)), float(z)


def bayes_update(prior: PosteriorCosineSeries, m: int, r: int) -> PosteriorCosineSeries:
    """Posterior after observing outcome ``r`` (+1 or -1) at waiting multiple ``m``."""
    return update_with_evidence(prior, m, r)[0]


def mean(p: PosteriorCosineSeries) -> float:
    return float(moments_full(p.full, p.omega0)[0])


def variance(p: PosteriorCosineSeries) -> float:
    return float(moments_full(p.full, p.omega0)[1])


def expected_posterior_variances(p: PosteriorCosineSeries, m_max: int) -> np.ndarray:
    """``E[V | m]`` for every m in ``1..m_max`` (index 0 is m = 1)."""
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    return expected_variance_full(p.full, p.omega0, int(m_max))


def expected_posterior_variance(p: PosteriorCosineSeries, m: int) -> float:
    """Outcome-averaged posterior variance after measuring at multiple ``m``.

    Computed from the two branch updates and their pre-normalization
    masses, which are proportional to the outcome probabilities.
    """
    if int(m) != m or m < 1:
        raise ValueError(f"waiting multiple must be a positive integer, got {m!r}")
    a = p.full
    num = 0.0
    den = 0.0
    for r in (1, -1):
        branch = multiply_likelihood(a, int(m), r)
        c0 = branch[0]
        if c0 <= 0:
            continue
        num += c0 * float(moments_full(branch, p.omega0)[1])
        den += c0
    return num / den
