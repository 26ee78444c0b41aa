"""
How fast does each scheme learn?
================================

Simulate a few hundred trials per scheme, then fit a power law or an
exponential to the MSE as a function of the number of measurements.
"""
from fixedbasis import SchemeSpec, fit_scaling
from fixedbasis.experiments import best_fourier_curve, scheme_curve

trials, seed = 300, 7

curves = {
    "fixed m=1": scheme_curve(SchemeSpec("bayes-m1"), range(20, 201), trials, seed)[0],
    "uniform n=1": scheme_curve(SchemeSpec("bayes-uniform"), range(20, 201), trials, seed)[0],
    "adaptive": scheme_curve(SchemeSpec("adaptive", m_max=300), range(5, 31), trials, seed)[0],
}
curves["best Fourier"] = best_fourier_curve(range(36, 241, 6), trials, seed)[0]

for name, curve in curves.items():
    power = fit_scaling(curve, "power")
    expo = fit_scaling(curve, "exp")
    print(f"{name:13s} power {power.rate:5.2f} (R2 {power.r_squared:.3f})   "
          f"exp {expo.rate:5.3f} (R2 {expo.r_squared:.3f})")
