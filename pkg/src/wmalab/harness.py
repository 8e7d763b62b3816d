"""Verification suites, example tables and their configuration.

Every suite item is a pure function of (config, rng) returning check records.
Per-item generators are seeded from (master seed, item name) through a fixed
hash, so items can run in any order or in parallel with identical results.
"""

import hashlib
import json
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import scipy

from . import measures as M
from . import radial as R
from . import toric as T
from .errors import InvalidInput, LabError
from .weights import (CONCAVE_HIGH, doubling_checks, make_log_iterated, make_power, make_quasi_homog,
                      parse_weight, validate, weak_homogeneity_check, young_adapted_weight,
                      young_inequality_slack)

DEFAULT_WEIGHTS = "power:p=0.5;power:p=1;power:p=2;logiter:m=1;qh:p=1,a=1"


@dataclass
class SuiteConfig:
    seed: int = 0
    grid: str = "-60:60:6000"
    grid2: str = "-8:8:25"
    weights: str = DEFAULT_WEIGHTS
    trials: int = 20
    tolerance: float = 1.0  # multiplier on every eps_grid-type tolerance
    out: str = "results"
    workers: int = 1

    def __post_init__(self):
        self.seed = int(self.seed)
        self.trials = int(self.trials)
        self.tolerance = float(self.tolerance)
        self.workers = int(self.workers)
        if self.trials < 1 or self.workers < 1:
            raise InvalidInput("trial and worker counts must be >= 1")
        if self.tolerance < 0:
            raise InvalidInput("tolerance multiplier must be >= 0")

    @property
    def grid1(self):
        return M.Grid.parse(self.grid)

    @property
    def grid_2(self):
        return T.Grid2.parse(self.grid2)

    @property
    def weight_list(self):
        return [parse_weight(s.strip()) for s in self.weights.split(";") if s.strip()]

    def to_dict(self):
        return asdict(self)


def read_config(path):
    """Flat key=value file; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInput(f"config line without '=': {line!r}")
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    known = {f.name for f in fields(SuiteConfig)}
    bad = set(out) - known
    if bad:
        raise InvalidInput(f"unknown config keys: {sorted(bad)}")
    return out


def make_config(file_values=None, **overrides):
    """File values first, explicit (non-None) overrides win."""
    vals = dict(file_values or {})
    vals.update({k: v for k, v in overrides.items() if v is not None})
    return SuiteConfig(**vals)


def item_seed(master, name):
    h = hashlib.blake2b(f"{int(master)}:{name}".encode(), digest_size=8).digest()
    return int.from_bytes(h, "little")


@dataclass
class Record:
    name: str
    anchor: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        for k in ("lhs", "rhs", "slack"):
            v = d[k]
            d[k] = v if np.isfinite(v) else str(v)
        return d


def _rec(name, anchor, lhs, rhs, slack=None, passed=None, **detail):
    lhs, rhs = float(lhs), float(rhs)
    slack = rhs - lhs if slack is None else float(slack)
    passed = bool(slack >= 0) if passed is None else bool(passed)
    return Record(name, anchor, lhs, rhs, slack, passed, detail)


# ---------------------------------------------------------------- suite items

def _mass_normalization(cfg, rng):
    g = cfg.grid1
    worst = 0.0
    for i in range(cfg.trials):
        nu = rng.dirichlet([1, 1, 1])[:2] if i % 2 else (0.0, 0.0)
        m = R.ma_measure(R.random_profile(g, rng, *nu))
        worst = max(worst, abs(m.total - 1.0))
    out = [_rec("mass-normalization-1d", "total Monge-Ampere mass equals the volume", worst, 1e-12)]
    g2 = cfg.grid_2
    worst2 = 0.0
    for _ in range(max(1, cfg.trials // 4)):
        worst2 = max(worst2, abs(T.alexandrov_ma(T.random_profile2(g2, rng)).total_norm - 1.0))
    out.append(_rec("mass-normalization-2d", "total Monge-Ampere mass equals the volume", worst2, 1e-9))
    return out


def _comparison(cfg, rng):
    g = cfg.grid1
    worst, eg = np.inf, 0.0
    for i in range(cfg.trials):
        a, b = R.random_member(g, rng, atoms=i % 2), R.random_member(g, rng)
        r = R.comparison_check(a, b)
        s = r.slack + cfg.tolerance * r.eps_grid
        if s < worst:
            worst, eg = s, r.eps_grid
    out = [_rec("comparison-1d", "comparison principle for full-mass functions", -worst, 0.0, worst, eps_grid=eg)]
    g2 = cfg.grid_2
    worst2 = np.inf
    for _ in range(max(1, cfg.trials // 4)):
        r = T.comparison_check2(T.random_profile2(g2, rng), T.random_profile2(g2, rng))
        worst2 = min(worst2, r.slack + cfg.tolerance * r.eps_grid)
    out.append(_rec("comparison-2d", "comparison principle for full-mass functions", -worst2, 0.0, worst2))
    return out


def nested_pair(g, rng):
    """phi_a <= phi_b <= 0, both members."""
    b = R.random_member(g, rng)
    r = R.random_member(g, rng)
    a = r.shifted(-float(np.max(r.psi - b.psi)) - float(rng.uniform(0, 1)))
    return a, b


def nested_pair2(g2, rng):
    b = T.random_profile2(g2, rng)
    r = T.random_profile2(g2, rng)
    a = r.shifted(-float(np.max(r.psi - b.psi)) - float(rng.uniform(0, 1)))
    return a, b


def _fundamental(cfg, rng):
    g = cfg.grid1
    out = []
    pairs = [nested_pair(g, rng) for _ in range(cfg.trials)]
    for w in cfg.weight_list:
        worst = np.inf
        ratio = 0.0
        for a, b in pairs:
            r = R.fundamental_inequality_check(a, b, w)
            worst = min(worst, (r.rhs - r.lhs) / max(r.rhs, 1e-300))
            ea = r.rhs / r.constant
            ratio = max(ratio, r.lhs / ea if ea > 0 else 1.0)
        out.append(_rec(f"fundamental-1d[{w.label}]", "fundamental inequality E(psi) <= C^n E(phi)",
                        -worst, 0.0, worst, max_ratio=ratio))
    g2 = cfg.grid_2
    pairs2 = [nested_pair2(g2, rng) for _ in range(max(1, cfg.trials // 4))]
    masses = [(T.alexandrov_ma(a).vertex_masses, T.alexandrov_ma(b).vertex_masses) for a, b in pairs2]
    for w in cfg.weight_list[:2]:
        worst = np.inf
        C = R.fundamental_constant(w, 2)
        for (a, b), (ma, mb) in zip(pairs2, masses):
            lhs = T.energy2(b, w, False, mb)
            rhs = C * T.energy2(a, w, False, ma)
            worst = min(worst, (rhs - lhs) / max(rhs, 1e-300))
        out.append(_rec(f"fundamental-2d[{w.label}]", "fundamental inequality E(psi) <= C^n E(phi)", -worst, 0.0, worst))
    return out


def _canonical(cfg, rng):
    g = cfg.grid1
    dev = 0.0
    disagree = 0
    for i in range(cfg.trials):
        if i % 3 == 0:
            p = R.random_profile(g, rng, *rng.dirichlet([1, 1, 1])[:2])
        else:
            p = R.random_member(g, rng)
        r = R.membership(p)
        disagree += int(not r.agree)
        if p.is_member:
            phi = p.phi - R.sup_phi(p)
            span = float(-phi.min()) + 1e-9
            j, k = 0.7 * span, 0.4 * span
            dev = max(dev, R.locality_cut_deviation(p, j), R.locality_cut_deviation(p, j, k))
    return [_rec("membership-verdict", "full-mass membership iff no mass escapes along the canonical cuts",
                 disagree, 0, -disagree),
            _rec("cut-locality", "cuts agree with the function on the plurifine open set {phi > -j}", dev, 1e-9)]


def _solver(cfg, rng):
    g = cfg.grid1
    worst = np.inf
    for i in range(cfg.trials):
        mu = R.ma_measure(R.random_member(g, rng, atoms=i % 3))
        d = M.kolmogorov_distance(R.ma_measure(R.solve(mu)), mu)
        worst = min(worst, cfg.tolerance * R.eps_grid(mu) - d)
    out = [_rec("solver-roundtrip", "MA equation solvable for non-pluripolar targets", -worst, 0.0, worst)]
    mu = R.ma_measure(R.lelong_profile(g, 0.2, 0.0))
    try:
        R.solve(mu)
        rejected = False
    except LabError:
        rejected = True
    out.append(_rec("solver-rejects-pluripolar", "targets charging pluripolar sets have no full-mass solution",
                    0, 0, 0, rejected))
    F = lambda t: 0.5 * (1 + np.tanh(t / 3))
    mu = M.from_cdf(g, F)
    dev = R.uniqueness_check(mu, 5, rng)
    out.append(_rec("solver-uniqueness", "full-mass solutions are unique up to constants",
                    dev, cfg.tolerance * R.uniqueness_tolerance(mu)))
    ds = [R.roundtrip_distance(M.from_cdf(M.Grid(g.tmin, g.tmax, n), F)) for n in (g.n // 4, g.n // 2, g.n)]
    ratios = np.array(ds[:-1]) / np.array(ds[1:])
    out.append(_rec("solver-first-order", "plumbing", float(np.min(ratios)), 1.8, float(np.min(ratios)) - 1.8,
                    ratios=ratios.tolist()))
    return out


def _slow_example(cfg, rng):
    p = R.slow_singularity_profile(R.DEFAULT_GRID)
    _, _, ratio = R.density_ratio_table(p)
    spread = float(ratio.max() / ratio.min() - 1)
    out = [_rec("slow-density-ratio", "full-mass function with arbitrarily slow energy", spread, 0.10)]
    for w in (make_power(0.25), make_power(0.5), make_power(1.0), make_log_iterated(1)):
        e = R.energy(p, w)
        out.append(_rec(f"slow-energy-diverges[{w.label}]", "full-mass function with arbitrarily slow energy",
                        0, 0, 0, not np.isfinite(e)))
    return out


def _attenuation(cfg, rng):
    g = cfg.grid1
    out = []
    green = R.green_profile(g, -1.0)
    bounded = R.random_member(g, rng).shifted(-1.0)
    for q in (0.5, 0.75, 0.9):
        a = R.attenuate(green, q)
        mass = R.ma_measure(a).interior_mass
        mem = R.membership(a).verdict_escape
        out.append(_rec(f"attenuation[q={q}]", "attenuated pole is full-mass with infinite gradient energy",
                        abs(mass - 1), 1e-9, passed=mem and abs(mass - 1) <= 1e-9
                        and not np.isfinite(R.gradient_energy(a))
                        and np.isfinite(R.gradient_energy(R.attenuate(bounded, q)))))
    return out


def _capacity(cfg, rng):
    g = cfg.grid1
    w = make_power(1.0)
    ts = np.geomspace(1, 1e3, 13)
    sup = 0.0
    ok = True
    for _ in range(max(1, cfg.trials // 4)):
        p = R.power_tail_profile(g, float(rng.uniform(0.1, 0.3)), float(rng.uniform(0.5, 3)))
        r = R.capacity_decay_check(p, w, ts)
        sup = max(sup, r.sup_product)
        ok &= r.bounded
    out = [_rec("capacity-decay", "capacity of sublevel sets decays like 1/|t chi(-t)|", sup, np.inf, passed=ok)]
    conv = R.converse_capacity_profile(R.DEFAULT_GRID, w, eps=0.5, amp=0.5)
    e = R.energy(conv, w)
    out.append(_rec("capacity-converse", "fast capacity decay implies finite energy", e, np.inf,
                    passed=np.isfinite(e)))
    worst = np.inf
    for _ in range(max(1, cfg.trials // 4)):
        p = R.random_member(g, rng)
        s = float(rng.uniform(0.2, 2.0))
        cap = R.capacity_sublevel(p, s)
        cells = p.phi_mid < -s
        eg = R.eps_grid(R.ma_measure(p))
        for _ in range(10):
            u = random_test_function(g, rng)
            m = float(np.sum(R.ma_measure(u).atoms[cells]))
            worst = min(worst, cap - m + cfg.tolerance * eg)
    out.append(_rec("capacity-envelope-domination", "capacity is attained by the relative extremal function",
                    -worst, 0.0, worst))
    return out


def random_test_function(g, rng):
    """Admissible capacity competitor: -1 <= u <= 0, omega-sh."""
    r = R.random_member(g, rng)
    phi = r.phi - R.sup_phi(r)
    c = max(1.0, float(-phi.min()) * float(rng.uniform(0.3, 2.0)))
    u = np.maximum(phi / c, -1.0)
    return R.RadialProfile(g, R.fs_potential(g.points) + u, 0.0, 1.0)


def _weights(cfg, rng):
    out = []
    for w in cfg.weight_list:
        rep = validate(w)
        out.append(_rec(f"weight-valid[{w.label}]", "weight class axioms", 0, 0, 0, rep.passed))
        if w.kind == CONCAVE_HIGH:
            d = doubling_checks(w)
            for c in d:
                out.append(_rec(f"{c.name}[{w.label}]", "derivative growth for homogeneous weights",
                                -c.slack, 0.0, c.slack))
            h = weak_homogeneity_check(w)
            out.append(_rec(f"sandwich[{w.label}]", "weak homogeneity sandwich", -h.slack, 0.0, h.slack))
    return out


def _polarization(cfg, rng):
    g2 = cfg.grid_2
    ident = neg = tot = 0.0
    for _ in range(max(1, cfg.trials // 4)):
        a, b = T.random_profile2(g2, rng), T.random_profile2(g2, rng)
        mx = T.mixed_ma(a, b)
        ma, mb = T.alexandrov_ma(a).vertex_masses, T.alexandrov_ma(b).vertex_masses
        ident = max(ident, float(np.max(np.abs(mx.sum_masses - ma - 2 * mx.vertex_masses - mb))))
        neg = min(neg, float(mx.vertex_masses.min()))
        tot = max(tot, abs(mx.total_norm - 1))
    return [_rec("polarization-identity", "plumbing", ident, 1e-9),
            _rec("mixed-nonnegative", "mixed Monge-Ampere measures are positive", -neg, 1e-9),
            _rec("mixed-total", "mixed Monge-Ampere measures have the volume as mass", tot, 1e-9)]


def _stability(cfg, rng):
    g = cfg.grid1
    eps = [2.0 ** -j for j in range(1, 21)]
    ok = True
    worst = np.inf
    for _ in range(max(1, cfg.trials // 4)):
        r = R.reference_perturbation_check(R.random_member(g, rng), eps)
        ok &= r.monotone and r.bounded
        worst = min(worst, cfg.tolerance * r.eps_grid - r.distances[-1])
    return [_rec("reference-perturbation", "stability under decreasing reference forms", -worst, 0.0, worst,
                 passed=ok and worst >= 0)]


def _young(cfg, rng):
    g = cfg.grid1
    p = R.random_member(g, rng)
    om = R.reference_measure(g)
    f = R.density_wrt(R.ma_measure(p), om)
    w = young_adapted_weight(f, om.atoms)
    ts = -np.exp(rng.uniform(-3, 7, 1000))
    fs = np.exp(rng.uniform(-3, 10, 1000))
    slack = float(np.min(young_inequality_slack(w, ts, fs)))
    sol = R.solve(R.ma_measure(p))
    e = R.energy(sol, w)
    return [_rec("young-inequality", "adapted weight satisfies the pointwise Young inequality", -slack, 0.0, slack),
            _rec("adapted-weight-energy", "every non-pluripolar measure has a weight with finite energy",
                 e, np.inf, passed=np.isfinite(e))]


SUITE = {
    "mass-normalization": _mass_normalization,
    "comparison": _comparison,
    "fundamental": _fundamental,
    "canonical": _canonical,
    "solver": _solver,
    "slow-example": _slow_example,
    "attenuation": _attenuation,
    "capacity": _capacity,
    "weights": _weights,
    "polarization": _polarization,
    "stability": _stability,
    "young": _young,
}


def _run_item(args):
    name, cfg_dict = args
    cfg = SuiteConfig(**cfg_dict)
    rng = np.random.default_rng(item_seed(cfg.seed, name))
    try:
        return name, [r.to_dict() for r in SUITE[name](cfg, rng)]
    except LabError as exc:
        return name, [Record(name, "plumbing", 0, 0, -1, False, {"error": str(exc)}).to_dict()]


def fingerprint():
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "platform": platform.platform()}


def run_suite(cfg, items=None):
    names = sorted(SUITE) if items is None else list(items)
    t0 = time.perf_counter()
    jobs = [(n, cfg.to_dict()) for n in names]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            results = dict(ex.map(_run_item, jobs))
    else:
        results = dict(map(_run_item, jobs))
    records = [r for n in names for r in results[n]]
    return {"config": cfg.to_dict(), "records": records, "passed": all(r["passed"] for r in records),
            "environment": fingerprint(), "wall_clock_s": round(time.perf_counter() - t0, 3)}


def write_json(obj, path):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- tables

def capacity_curve_rows(p, w, ts):
    q = p.shifted(-R.sup_phi(p))
    rows = []
    for t in ts:
        cap = R.capacity_sublevel(q, t)
        inv = 1.0 / abs(t * float(w(-t)))
        rows.append((float(t), cap, inv, cap / inv))
    return rows


def slow_density_rows(grid=R.DEFAULT_GRID):
    p = R.slow_singularity_profile(grid)
    ts, dens, ratio = R.density_ratio_table(p)
    return [(float(t), float(d), float(r)) for t, d, r in zip(ts, dens, ratio)]


def attenuation_rows(grid=R.DEFAULT_GRID, qs=tuple(np.round(np.arange(0.1, 1.0, 0.1), 1))):
    green = R.green_profile(grid, -1.0)
    rows = []
    for q in qs:
        a = R.attenuate(green, float(q))
        m = R.ma_measure(a)
        rows.append((float(q), m.interior_mass, m.charge_neg_inf, bool(R.membership(a).verdict_escape),
                     R.gradient_energy(a)))
    return rows


def log_composition_rows(grid=R.DEFAULT_GRID, ts=np.arange(0.5, 6.01, 0.5)):
    p = R.log_compose(R.green_profile(grid, -1.0))
    return [(float(t), R.capacity_sublevel(p, float(t))) for t in ts]
