"""Spectral-peak baseline: average repeated shots, DFT, read the frequency off the peak."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

__all__ = ["FourierEstimate", "build_signal", "estimate_omega_fourier", "spectral_peak"]


class FourierEstimate(NamedTuple):
    omega: float
    degenerate: bool = False


def build_signal(record, n: int) -> np.ndarray:
    """De-meaned "+" frequency at each waiting multiple m = 1..M.

    ``record`` is a MeasurementRecord (or iterable of ``(m, r)`` pairs) taken
    on the partition schedule, so waiting multiple ``j`` appears ``n`` times.
    The expectation of entry ``j - 1`` is ``cos(pi w j / omega0) / 2``.
    """
    pairs = [(int(m), int(r)) for m, r in record]
    N = len(pairs)
    if n < 1 or N % n:
        raise ValueError(f"record length {N} is not divisible by n={n}")
    M = N // n
    plus = np.zeros(M)
    seen = np.zeros(M, dtype=int)
    for m, r in pairs:
        if not 1 <= m <= M:
            raise ValueError(f"waiting multiple {m} outside partition range 1..{M}")
        plus[m - 1] += r == 1
        seen[m - 1] += 1
    if np.any(seen != n):
        raise ValueError(f"each multiple 1..{M} must appear exactly {n} times")
    return plus / n - 0.5


def estimate_omega_fourier(signal, omega0: float = 1.0, interpolate: bool = False,
                           exclude_dc: bool = False) -> FourierEstimate:
    """Frequency at the magnitude-spectrum peak of a length-M signal.

    Bin ``j`` corresponds to ``w = 2 omega0 j / M``; the peak is searched over
    ``j = 0..M//2``.  The signal is de-meaned with the known 1/2 rather than
    its sample mean, so energy in bin 0 is genuine signal from small ``w``;
    ``exclude_dc`` drops that bin anyway.  With ``interpolate`` the peak is
    refined by a parabola through the three magnitudes around it.

    An all-zero signal carries no information and yields the prior mean
    ``omega0 / 2`` with ``degenerate=True``.
    """
    s = np.asarray(signal, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("signal needs at least 2 samples")
    omega, degenerate = spectral_peak(s[None, :], omega0, interpolate, exclude_dc)
    return FourierEstimate(float(omega[0]), bool(degenerate[0]))


def spectral_peak(signals, omega0=1.0, interpolate=False, exclude_dc=False):
    """Row-wise version of :func:`estimate_omega_fourier`.

    Returns ``(omega, degenerate)`` arrays, one entry per row of ``signals``.
    """
    S = np.asarray(signals, dtype=float)
    B, M = S.shape
    if M < 2:
        raise ValueError("signal needs at least 2 samples")
    mag = np.abs(np.fft.fft(S, axis=1))
    lo = 1 if exclude_dc else 0
    j = lo + np.argmax(mag[:, lo : M // 2 + 1], axis=1)
    jt = j.astype(float)
    if interpolate:
        rows = np.arange(B)
        left, mid, right = mag[rows, (j - 1) % M], mag[rows, j], mag[rows, (j + 1) % M]
        den = left - 2 * mid + right
        curved = den < 0
        jt += np.where(curved, 0.5 * (left - right) / np.where(curved, den, -1.0), 0.0)
    omega = np.clip(2 * omega0 * jt / M, 0.0, omega0)
    degenerate = ~np.any(S, axis=1)
    omega[degenerate] = omega0 / 2
    return omega, degenerate
