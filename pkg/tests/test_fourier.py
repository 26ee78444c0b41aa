import numpy as np
import pytest

from fixedbasis.experiments import best_fourier_mse, fourier_partition_mses
from fixedbasis.fourier import build_signal, estimate_omega_fourier, spectral_peak
from fixedbasis.schemes import MeasurementRecord


def noiseless(omega, M, omega0=1.0):
    j = np.arange(1, M + 1)
    return 0.5 * np.cos(np.pi * omega * j / omega0)


@pytest.mark.parametrize("M,j", [(16, 3), (32, 5), (20, 7), (64, 1)])
def test_on_bin_frequency_is_exact(M, j):
    omega = 2 * j / M
    assert estimate_omega_fourier(noiseless(omega, M), 1.0).omega == pytest.approx(omega)


@pytest.mark.parametrize("interpolate", [False, True])
def test_noiseless_within_one_bin(interpolate):
    rng = np.random.default_rng(0)
    for _ in range(200):
        M = int(rng.integers(8, 200))
        omega = rng.uniform(0.05, 0.95)
        est = estimate_omega_fourier(noiseless(omega, M), 1.0, interpolate=interpolate).omega
        assert abs(est - omega) <= 2.0 / M + 1e-12


def test_interpolation_helps_off_bin():
    M = 64
    errs = {}
    for interp in (False, True):
        omegas = np.linspace(0.2, 0.8, 61)
        errs[interp] = np.mean([
            (estimate_omega_fourier(noiseless(w, M), interpolate=interp).omega - w) ** 2
            for w in omegas
        ])
    assert errs[True] < errs[False]


def test_scales_with_omega0():
    M, omega0 = 40, np.pi / 2
    omega = 2 * 6 / M * omega0
    assert estimate_omega_fourier(noiseless(omega, M, omega0), omega0).omega == pytest.approx(omega)


def test_exclude_dc_skips_bin_zero():
    s = np.full(16, 0.3)
    assert estimate_omega_fourier(s).omega == 0.0
    assert estimate_omega_fourier(s, exclude_dc=True).omega > 0.0


def test_all_zero_signal_is_degenerate():
    est = estimate_omega_fourier(np.zeros(10), omega0=2.0)
    assert est.degenerate and est.omega == 1.0


def test_build_signal_averages_repeats():
    rec = MeasurementRecord.from_pairs([(1, 1), (1, 1), (2, 1), (2, -1), (3, -1), (3, -1)])
    np.testing.assert_allclose(build_signal(rec, 2), [0.5, 0.0, -0.5])


def test_build_signal_order_invariant():
    pairs = [(1, 1), (2, -1), (1, -1), (3, 1), (2, 1), (3, 1)]
    a = build_signal(MeasurementRecord.from_pairs(pairs), 2)
    b = build_signal(MeasurementRecord.from_pairs(pairs[::-1]), 2)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("pairs,n", [
    ([(1, 1), (1, 1), (2, 1)], 2),           # length not divisible
    ([(1, 1), (1, 1), (1, 1), (2, 1)], 2),   # unbalanced repeats
    ([(1, 1), (5, 1)], 1),                   # multiple outside 1..M
])
def test_build_signal_rejects(pairs, n):
    with pytest.raises(ValueError):
        build_signal(MeasurementRecord.from_pairs(pairs), n)


def test_too_short_signal():
    with pytest.raises(ValueError):
        estimate_omega_fourier([0.1])


def test_batched_peak_matches_single():
    rng = np.random.default_rng(5)
    S = rng.normal(size=(7, 30))
    omegas, _ = spectral_peak(S, 1.0, True, False)
    single = [estimate_omega_fourier(s, 1.0, True, False).omega for s in S]
    np.testing.assert_array_equal(omegas, single)


def test_best_fourier_is_minimum_over_partitions():
    parts = fourier_partition_mses(12, 300, 1)
    assert set(parts) == {1, 2, 3}
    assert best_fourier_mse(12, 300, 1) == min(e.mse for e in parts.values())
    # 10 is not divisible by 3
    assert set(fourier_partition_mses(10, 50, 1)) == {1, 2}
