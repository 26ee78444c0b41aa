"""Acceptance suite: one printed PASS/FAIL line per criterion (see the terminal summary).

Heavy ensembles are built once per module and shared between criteria.
Runtime is about fifteen minutes on one CPU.
"""
import numpy as np
import pytest

from fixedbasis.analysis import fit_scaling, steps_to_threshold
from fixedbasis.cli import main as cli_main
from fixedbasis.experiments import TABLE_OMEGA0, best_fourier_curve, calibration, scheme_curve
from fixedbasis.posterior import (
    bayes_update,
    expected_posterior_variances,
    mean,
    uniform_prior,
    update_with_evidence,
    variance,
)
from fixedbasis.schemes import SchemeSpec, generate_lona_sequence
from oracles import grid_density, grid_moments, random_trail

SEED = 20240601
RESULTS = {}  # criterion -> list of (ok, detail); read by conftest's summary hook


def record(criterion, ok, detail):
    RESULTS.setdefault(criterion, []).append((bool(ok), detail))
    assert ok, f"criterion {criterion}: {detail}"


def posterior_from(trail, omega0=1.0):
    p = uniform_prior(omega0)
    for m, r in trail:
        p = bayes_update(p, m, r)
    return p


# ---------------------------------------------------------------------------
# shared ensembles


@pytest.fixture(scope="module")
def n1_run():
    # omega0 = 1; fit range 20..200 read off exact prefixes of N = 200
    return scheme_curve(SchemeSpec("bayes-uniform", n=1), range(20, 201), 5000, SEED)


@pytest.fixture(scope="module")
def m1_run():
    return scheme_curve(SchemeSpec("bayes-m1"), range(50, 1001), 2000, SEED)


@pytest.fixture(scope="module")
def lona_sequence():
    return generate_lona_sequence(TABLE_OMEGA0, 30, 1000, 1e-6)


@pytest.fixture(scope="module")
def table_runs(lona_sequence):
    """Steps-table ensembles at the table's omega0, 2000 trials each."""
    runs = {
        "adaptive": scheme_curve(SchemeSpec("adaptive"), range(1, 61), 2000, SEED, TABLE_OMEGA0),
        "lona": scheme_curve(SchemeSpec("lona", lona_sequence=lona_sequence), range(1, 31),
                             2000, SEED, TABLE_OMEGA0),
        "bayes-n1": scheme_curve(SchemeSpec("bayes-uniform", n=1), range(1, 91), 2000, SEED,
                                 TABLE_OMEGA0),
        "bayes-m1": scheme_curve(SchemeSpec("bayes-m1"), range(1, 601), 2000, SEED, TABLE_OMEGA0),
    }
    fourier, _ = best_fourier_curve(range(2, 121), 2000, SEED, TABLE_OMEGA0)
    runs["fourier"] = (fourier, None)
    return runs


# ---------------------------------------------------------------------------
# 1-3: exact engine properties


def test_c1_lona_five_steps(capsys):
    assert cli_main(["lona", "--steps", "5"]) == 0
    out = capsys.readouterr().out.strip()
    record(1, out == "[1, 1, 2, 1, 3]", f"lona --steps 5 -> {out}")


def test_c2_posterior_matches_quadrature():
    rng = np.random.default_rng(SEED)
    worst = np.zeros(3)
    for _ in range(200):
        trail = random_trail(rng, max_len=10, max_m=20)
        p = posterior_from(trail)
        w, d = grid_density(trail, 1.0, 100_001)
        mu, var = grid_moments(w, d)
        worst = np.maximum(worst, [np.abs(p.density(w) - d).max(),
                                   abs(mean(p) - mu), abs(variance(p) - var)])
    record(2, worst.max() <= 1e-8,
           f"200 trails, max |diff| density {worst[0]:.1e}, mean {worst[1]:.1e}, "
           f"variance {worst[2]:.1e} (tol 1e-8)")


def test_c3_expected_variance_consistency():
    rng = np.random.default_rng(SEED + 1)
    worst, above = 0.0, 0
    for _ in range(100):
        p = posterior_from(random_trail(rng, max_len=10, max_m=20))
        ev = expected_posterior_variances(p, 50)
        for m in range(1, 51):
            (pp, zp), (pm, zm) = update_with_evidence(p, m, 1), update_with_evidence(p, m, -1)
            branch = (zp * variance(pp) + zm * variance(pm)) / (zp + zm)
            worst = max(worst, abs(ev[m - 1] - branch))
            above += ev[m - 1] > variance(p) + 1e-12
    record(3, worst <= 1e-10 and above == 0,
           f"100 posteriors x m=1..50, max |diff| {worst:.1e} (tol 1e-10), "
           f"{above} above prior variance")


# ---------------------------------------------------------------------------
# 4-7: scaling fits


def test_c4_uniform_n1_power_law(n1_run):
    fit = fit_scaling(n1_run[0], "power", (20, 200))
    record(4, 2.6 <= fit.rate <= 3.4 and fit.r_squared > 0.98,
           f"bayes n=1 power {fit.rate:.4f} CI ({fit.ci_low:.4f}, {fit.ci_high:.4f}) "
           f"R2 {fit.r_squared:.4f} (want [2.6, 3.4], R2 > 0.98)")


def test_uniform_n1_asymptotic_power(n1_run):
    # past the disambiguation transient (N < ~60) the decay is a clean power law;
    # a supplement to criterion 4, not a replacement for it
    fit = fit_scaling(n1_run[0], "power", (60, 200))
    assert 2.6 <= fit.rate <= 3.4 and fit.r_squared > 0.98, fit


def test_c5_fixed_m1_power_law(m1_run):
    fit = fit_scaling(m1_run[0], "power", (50, 1000))
    record(5, 0.85 <= fit.rate <= 1.15 and fit.r_squared > 0.99,
           f"bayes m=1 power {fit.rate:.4f} CI ({fit.ci_low:.4f}, {fit.ci_high:.4f}) "
           f"R2 {fit.r_squared:.4f} (want [0.85, 1.15], R2 > 0.99)")


def test_c6_best_fourier_power_law():
    # multiples of 6 so that n = 1, 2, 3 all partition N
    curve, chosen = best_fourier_curve(range(36, 1000, 6), 2000, SEED)
    fit = fit_scaling(curve, "power", (36, 1000))
    record(6, 1.7 <= fit.rate <= 2.4 and fit.r_squared > 0.9,
           f"best Fourier power {fit.rate:.4f} CI ({fit.ci_low:.4f}, {fit.ci_high:.4f}) "
           f"R2 {fit.r_squared:.4f} over {len(curve)} N (want [1.7, 2.4], R2 > 0.9)")


def test_c7_adaptive_exponential(table_runs):
    # the adaptive policy and outcome law depend on w / omega0 only, so the
    # table ensemble is an exact rescaling of one at omega0 = 1
    curve = table_runs["adaptive"][0]
    exp_fit = fit_scaling(curve, "exp", (5, 50))
    pow_fit = fit_scaling(curve, "power", (5, 50))
    record(7, 0.20 <= exp_fit.rate <= 0.40 and exp_fit.r_squared > pow_fit.r_squared,
           f"adaptive exp rate {exp_fit.rate:.4f} CI ({exp_fit.ci_low:.4f}, {exp_fit.ci_high:.4f}) "
           f"R2 exp {exp_fit.r_squared:.4f} vs power {pow_fit.r_squared:.4f} "
           f"(want [0.20, 0.40], exp > power)")


# ---------------------------------------------------------------------------
# 8: steps to reach 1e-3 (and 1e-5 for adaptive)

TARGETS = {
    "adaptive": (20, 5),
    "lona": (24, 6),
    "bayes-n1": (29, 7),
    "fourier": (33, 8),
    "bayes-m1": (242, 60),
}


@pytest.mark.parametrize("scheme", list(TARGETS))
def test_c8_steps_to_1e3(table_runs, scheme):
    steps = steps_to_threshold(table_runs[scheme][0], 1e-3)
    target, tol = TARGETS[scheme]
    ok = steps is not None and abs(steps - target) <= tol
    record(8, ok, f"{scheme} {steps} (want {target} +/- {tol})")


def test_c8_ordering(table_runs):
    s = {k: steps_to_threshold(v[0], 1e-3) for k, v in table_runs.items()}
    ok = None not in s.values() and (
        s["adaptive"] < s["lona"] < s["bayes-n1"] <= s["fourier"] < s["bayes-m1"])
    record(8, ok, "ordering adaptive < lona < bayes-n1 <= fourier < bayes-m1: "
           + " ".join(f"{k}={v}" for k, v in s.items()))


def test_c8_adaptive_deep(table_runs):
    steps = steps_to_threshold(table_runs["adaptive"][0], 1e-5)
    record(8, steps is not None and abs(steps - 35) <= 8, f"adaptive at 1e-5 {steps} (want 35 +/- 8)")


# ---------------------------------------------------------------------------
# 9: byte-identical reruns


def test_c9_cli_determinism(tmp_path):
    lona = tmp_path / "lona.json"
    commands = [
        ["lona", "--steps", "8", "--out", "{d}/lona.json"],
        ["run", "--scheme", "adaptive", "--n-range", "1:10", "--trials", "30", "--seed", "3",
         "--out", "{d}/a.csv", "--dump-trials", "{d}/a.jsonl"],
        ["run", "--scheme", "fourier", "--n-list", "12,24", "--trials", "50", "--out", "{d}/f.csv"],
        ["run", "--scheme", "bayes-uniform", "--n-rep", "2", "--n-range", "2:12:2", "--trials", "40",
         "--out", "{d}/u.csv"],
        ["run", "--scheme", "lona", "--lona-file", str(lona), "--n-range", "1:8", "--trials", "40",
         "--out", "{d}/l.csv"],
        ["fit", "--input", "{d}/u.csv", "--model", "power", "--report", "{d}/fit.json"],
        ["table1", "--trials", "20", "--lona-file", str(lona), "--m-max", "100", "--out", "{d}/t.csv"],
    ]
    outputs = {}
    cli_main(["lona", "--steps", "8", "--out", str(lona)])
    for rep in ("x", "y"):
        d = tmp_path / rep
        d.mkdir()
        for cmd in commands:
            assert cli_main([c.format(d=d) for c in cmd]) == 0
        outputs[rep] = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
    same = outputs["x"] == outputs["y"]
    record(9, same, f"{len(outputs['x'])} output files from {len(commands)} commands, "
           f"{'byte-identical' if same else 'DIFFER'} across reruns")


# ---------------------------------------------------------------------------
# 10: MSE equals mean posterior variance


def test_c10_calibration(n1_run, m1_run, table_runs):
    checks = {
        "bayes-n1 w0=1": (n1_run[1], range(20, 201)),
        "bayes-m1 w0=1": (m1_run[1], range(50, 1001)),
    }
    for k in ("adaptive", "lona", "bayes-n1", "bayes-m1"):
        ens = table_runs[k][1]
        checks[f"{k} table"] = (ens, range(1, ens.N + 1))
    worst, failures, total = {}, 0, 0
    for name, (ens, Ns) in checks.items():
        cal = calibration(ens, Ns)
        z = np.array([c.z for c in cal])
        worst[name] = float(z.max())
        failures += int((z > 3).sum())
        total += z.size
    detail = ", ".join(f"{k} {v:.2f}" for k, v in worst.items())
    record(10, failures == 0,
           f"{failures}/{total} grid points beyond 3 combined SE; max z: {detail}")
