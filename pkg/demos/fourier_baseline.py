"""
Spectral-peak baseline
======================

Repeat each waiting time n times, average the outcomes and read the
frequency off the peak of the discrete Fourier transform.
"""
import numpy as np

from fixedbasis import estimate_omega_fourier
from fixedbasis.experiments import fourier_partition_mses

##############################################################################
# A noiseless signal sitting on a DFT bin is recovered exactly.
M, omega = 32, 0.3125
signal = 0.5 * np.cos(np.pi * omega * np.arange(1, M + 1))
print("on-bin estimate:", estimate_omega_fourier(signal).omega)

##############################################################################
# With projection noise, the best split of N shots depends on N.
for N in (12, 48, 192):
    parts = fourier_partition_mses(N, trials=1000, seed=1)
    print(N, {n: f"{e.mse:.2e}" for n, e in parts.items()})
