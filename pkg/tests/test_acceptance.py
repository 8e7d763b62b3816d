"""Acceptance criteria, one test per criterion.

Each test records (passed, summary) in conftest.ACCEPTANCE and the terminal
summary prints one PASS/FAIL line per criterion.  Run with -s to also see the
lines as they are produced.
"""

import time

import numpy as np
import pytest

from wmalab import harness as H
from wmalab import measures as M
from wmalab import radial as R
from wmalab import toric as T
from wmalab.errors import Unsolvable
from wmalab.weights import (PROBE_T, doubling_checks, make_log_iterated, make_power, make_quasi_homog,
                            weak_homogeneity_check, young_adapted_weight, young_inequality_slack)

from conftest import ACCEPTANCE

G1 = M.Grid(-60.0, 60.0, 6000)
G2 = T.Grid2(-8.0, 8.0, 25)


def record(k, ok, msg):
    ACCEPTANCE[k] = (bool(ok), msg)
    print(f"\ncriterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")


def rng_for(k):
    return np.random.default_rng(H.item_seed(2024, f"criterion-{k}"))


def test_01_mass_normalization():
    rng, t0 = rng_for(1), time.perf_counter()
    worst1 = 0.0
    for i in range(500):
        nu = rng.dirichlet([1, 1, 1])[:2] if i % 2 else (0.0, 0.0)
        m = R.ma_measure(R.random_profile(G1, rng, *nu))
        worst1 = max(worst1, abs(float(np.sum(m.atoms)) + m.charge_neg_inf + m.charge_pos_inf - 1.0))
    g2 = T.Grid2(-8.0, 8.0, 41)
    worst2 = max(abs(T.alexandrov_ma(T.random_profile2(g2, rng)).total_norm - 1.0) for _ in range(100))
    dt = time.perf_counter() - t0
    ok = worst1 <= 1e-12 and worst2 <= 1e-9 and dt <= 120
    record(1, ok, f"500 radial worst {worst1:.1e}, 100 toric worst {worst2:.1e}, {dt:.1f}s")
    assert ok


def test_02_comparison_principle():
    rng, t0 = rng_for(2), time.perf_counter()
    worst1 = worst2 = np.inf
    for i in range(200):
        r = R.comparison_check(R.random_member(G1, rng, atoms=i % 2), R.random_member(G1, rng))
        worst1 = min(worst1, r.slack + r.eps_grid)
    for _ in range(50):
        r = T.comparison_check2(T.random_profile2(G2, rng), T.random_profile2(G2, rng))
        worst2 = min(worst2, r.slack + r.eps_grid)
    dt = time.perf_counter() - t0
    ok = worst1 >= 0 and worst2 >= 0 and dt <= 300
    record(2, ok, f"min(slack + eps_grid): 1d {worst1:.2e}, 2d {worst2:.2e}, {dt:.1f}s")
    assert ok


def test_03_fundamental_inequality_constants():
    rng, t0 = rng_for(3), time.perf_counter()
    ws = [make_power(0.5), make_power(1), make_power(2), make_log_iterated(1)]
    fails, ratio = 0, 0.0
    for _ in range(500):
        a, b = H.nested_pair(G1, rng)
        for w in ws:
            r = R.fundamental_inequality_check(a, b, w)
            fails += not r.ok
            ratio = max(ratio, r.lhs / (r.rhs / r.constant))
    fails2 = 0
    for _ in range(100):
        a, b = H.nested_pair2(G2, rng)
        ma, mb = T.alexandrov_ma(a).vertex_masses, T.alexandrov_ma(b).vertex_masses
        for w in ws[:2]:
            C = R.fundamental_constant(w, 2)
            fails2 += not T.energy2(b, w, False, mb) <= C * T.energy2(a, w, False, ma) * (1 + 1e-9)
    dt = time.perf_counter() - t0
    ok = fails == 0 and fails2 == 0 and ratio >= 1 and dt <= 600
    record(3, ok, f"failures 1d {fails}/2000, 2d {fails2}/200, max E(psi)/E(phi) {ratio:.3f}, {dt:.1f}s")
    assert ok


def test_04_canonical_approximation():
    rng = rng_for(4)
    disagree, dev, lelong = 0, 0.0, 0
    for i in range(200):
        if i % 10 == 0:
            nu0, nuinf = rng.dirichlet([1, 1, 1])[:2]
            p = R.random_profile(G1, rng, nu0, nuinf)
            lelong += 1
        else:
            p = R.random_member(G1, rng)
        rep = R.membership(p)
        disagree += not rep.agree
        if p.is_member:
            phi = p.phi - R.sup_phi(p)
            span = float(-phi.min()) + 1e-9
            dev = max(dev, R.locality_cut_deviation(p, 0.7 * span), R.locality_cut_deviation(p, 0.7 * span, 0.4 * span))
            q = R.random_member(G1, rng)
            dev = max(dev, R.locality_max_deviation(p, q))
    ok = disagree == 0 and lelong == 20 and dev <= 1e-9
    record(4, ok, f"{disagree} disagreements on 200 profiles ({lelong} with Lelong numbers), locality {dev:.1e}")
    assert ok


def test_05_solver():
    rng, t0 = rng_for(5), time.perf_counter()
    worst = np.inf
    for i in range(100):
        mu = R.ma_measure(R.random_member(G1, rng, atoms=i % 3))
        worst = min(worst, R.eps_grid(mu) - M.kolmogorov_distance(R.ma_measure(R.solve(mu)), mu))
    rejected = 0
    for nu in (0.2, 0.5):
        try:
            R.solve(R.ma_measure(R.lelong_profile(G1, nu, 0.0)))
        except Unsolvable:
            rejected += 1
    F = lambda t: 0.5 * (1 + np.tanh(t / 3))
    mu = M.from_cdf(G1, F)
    dev = R.uniqueness_check(mu, 5, rng)
    tol = R.uniqueness_tolerance(mu)
    ds = [R.roundtrip_distance(M.from_cdf(M.Grid(-60, 60, n), F)) for n in (1500, 3000, 6000, 12000)]
    halving = np.array(ds[:-1]) / np.array(ds[1:])
    dt = time.perf_counter() - t0
    ok = worst >= 0 and rejected == 2 and dev <= tol and np.all(np.abs(halving - 2) <= 0.2) and dt <= 300
    record(5, ok, f"roundtrip slack {worst:.1e}, pluripolar rejected {rejected}/2, uniqueness {dev:.1e} <= {tol:.1e}, "
                  f"refinement ratios {np.round(halving, 3).tolist()}, {dt:.1f}s")
    assert ok


def test_06_slow_singularity_example():
    p = R.slow_singularity_profile(R.DEFAULT_GRID)
    _, _, ratio = R.density_ratio_table(p)
    spread = float(ratio.max() / ratio.min() - 1)
    diverging = []
    for w in (make_power(0.25), make_power(0.5), make_power(1.0), make_log_iterated(1)):
        rep = R.energy_report(p, w)
        d = np.diff(rep.cut_energies)[-10:]
        diverging.append(rep.divergent and bool(np.all(d > 0)))
    # adapted weight for the slow profile, density taken against a base with polynomial tails
    g = M.Grid(-300.0, 300.0, 100_000)
    ps = R.slow_singularity_profile(g)
    delta = 0.25
    F = lambda t: np.where(t < 0, 0.5 * (1 + np.abs(t)) ** -(1 + delta), 1 - 0.5 * (1 + np.abs(t)) ** -(1 + delta))
    m0 = M.from_cdf(g, F)
    base = R.solve(M.LineMeasure(g, m0.atoms / m0.atoms.sum()))
    om = R.ma_measure(base)
    w = young_adapted_weight(R.density_wrt(R.ma_measure(ps), om), om.atoms)
    rep = R.energy_report(ps, w)
    cauchy = float(np.max(np.abs(np.diff(rep.cut_energies)[-10:]))) if rep.cut_energies else 0.0
    conv = np.isfinite(rep.value) and cauchy <= 1e-6
    ok = spread <= 0.10 and all(diverging) and conv
    record(6, ok, f"density ratio spread {spread:.3f}, divergent {diverging}, adapted energy {rep.value:.4f} "
                  f"(last increments <= {cauchy:.1e})")
    assert ok


def test_07_attenuation_example():
    rng = rng_for(7)
    green = R.green_profile(G1, -1.0)
    bounded = R.random_member(G1, rng).shifted(-1.0)
    rows = []
    for q in (0.5, 0.75, 0.9):
        a = R.attenuate(green, q)
        mass = R.ma_measure(a).interior_mass
        rows.append((R.membership(a).verdict_escape, abs(mass - 1) <= 1e-9,
                     not np.isfinite(R.gradient_energy(a)),
                     bool(np.isfinite(R.gradient_energy(R.attenuate(bounded, q))))))
    ok = all(all(r) for r in rows)
    record(7, ok, f"(member, unit mass, gradient diverges, bounded base finite) for q=0.5,0.75,0.9: {rows}")
    assert ok


def test_08_capacity():
    rng = rng_for(8)
    w = make_power(1.0)
    ts = np.geomspace(1, 1e3, 13)
    sup, bounded = 0.0, True
    for _ in range(20):
        p = R.power_tail_profile(R.DEFAULT_GRID, float(rng.uniform(0.1, 0.3)), float(rng.uniform(0.5, 3)))
        r = R.capacity_decay_check(p, w, ts)
        sup = max(sup, r.sup_product)
        bounded &= r.bounded and np.isfinite(r.sup_product)
    e_conv = R.energy(R.converse_capacity_profile(R.DEFAULT_GRID, w, eps=0.5, amp=0.5), w)
    worst, tested = np.inf, 0
    for _ in range(5):
        p = R.random_member(G1, rng)
        eg = R.eps_grid(R.ma_measure(p))
        levels = [float(s) for s in rng.uniform(0.2, 2.0, 3)]
        caps = {s: R.capacity_sublevel(p, s) for s in levels}
        for _ in range(10):
            mu = R.ma_measure(H.random_test_function(G1, rng))
            for s in levels:
                worst = min(worst, caps[s] - float(np.sum(mu.atoms[p.phi_mid < -s])) + eg)
                tested += 1
    ok = bounded and np.isfinite(e_conv) and worst >= 0
    record(8, ok, f"sup Cap*|t chi| {sup:.3f} (bounded {bounded}), converse energy {e_conv:.3f}, "
                  f"domination min slack {worst:.2e} over {tested} checks (50 test functions)")
    assert ok


HOMOGENEOUS = [make_power(1), make_power(1.5), make_power(2), make_power(3), make_power(4),
               make_quasi_homog(1, 1), make_quasi_homog(1, 0.5), make_quasi_homog(1.2, 1), make_quasi_homog(1, 3),
               make_quasi_homog(1.5, 2), make_quasi_homog(2, 1)]


def _sandwich_and_derivative(ws):
    out = {}
    for w in ws:
        _, der = doubling_checks(w)
        out[w.label] = (weak_homogeneity_check(w).passed, der.passed)
    return out


def test_09_sandwich_and_derivative_bound_default_weights():
    # the weights used by the verification suites; all satisfy both bounds
    res = _sandwich_and_derivative([make_power(1), make_power(2), make_quasi_homog(1, 1)])
    assert all(a and b for a, b in res.values()), res


@pytest.mark.xfail(strict=True, reason="the derivative bound chi'(2t) <= M chi'(t) fails for power(p > 2) "
                                       "and for several qh(p, a) weights; see the decisions ledger")
def test_09_sandwich_and_derivative_bound_full_family():
    res = _sandwich_and_derivative(HOMOGENEOUS)
    bad = [k for k, (a, b) in res.items() if not (a and b)]
    sandwich_ok = all(a for a, _ in res.values())
    record(9, not bad, f"{len(PROBE_T)} probes; sandwich holds for all: {sandwich_ok}; "
                       f"derivative bound fails for {bad}")
    assert not bad


def test_10_polarization():
    rng = rng_for(10)
    ident = tot = 0.0
    neg = 0.0
    for _ in range(50):
        a, b = T.random_profile2(G2, rng), T.random_profile2(G2, rng)
        mx = T.mixed_ma(a, b)
        ma, mb = T.alexandrov_ma(a).vertex_masses, T.alexandrov_ma(b).vertex_masses
        ident = max(ident, float(np.max(np.abs(mx.sum_masses - ma - 2 * mx.vertex_masses - mb))))
        neg = min(neg, float(mx.vertex_masses.min()))
        tot = max(tot, abs(mx.total_norm - 1))
    ok = ident <= 1e-9 and neg >= -1e-9 and tot <= 1e-9
    record(10, ok, f"identity {ident:.1e}, min mixed mass {neg:.1e}, total deviation {tot:.1e} on 50 pairs")
    assert ok


def test_11_stability_under_reference_perturbation():
    rng = rng_for(11)
    eps = [2.0 ** -j for j in range(1, 21)]
    mono = bounded = below = True
    worst_ratio = 0.0
    for _ in range(20):
        r = R.reference_perturbation_check(R.random_member(G1, rng), eps)
        mono &= r.monotone
        bounded &= r.bounded
        below &= r.distances[-1] <= r.eps_grid
        worst_ratio = max(worst_ratio, r.distances[-1] / r.eps_grid)
    ok = mono and bounded and below
    record(11, ok, f"monotone {mono}, energies bounded {bounded}, distance at j=20 <= eps_grid {below} "
                   f"(worst ratio {worst_ratio:.2e}) on 20 profiles")
    assert ok


def test_12_young_adapted_weight():
    rng = rng_for(12)
    violations, finite = 0, []
    for _ in range(3):
        p = R.random_member(G1, rng)
        om = R.reference_measure(G1)
        mu = R.ma_measure(p)
        w = young_adapted_weight(R.density_wrt(mu, om), om.atoms)
        ts = -np.exp(rng.uniform(-3, 7, 1000))
        fs = np.exp(rng.uniform(-3, 10, 1000))
        slack = young_inequality_slack(w, ts, fs)
        violations += int(np.sum(slack < -1e-12 * np.maximum(1.0, -ts + w.gamma(fs))))
        finite.append(bool(np.isfinite(R.energy(R.solve(mu), w))))
    ok = violations == 0 and all(finite)
    record(12, ok, f"{violations} Young violations in 3 x 1000 pairs, solve-output energy finite {finite}")
    assert ok
