"""S^1-invariant omega-psh functions on P^1 as convex profiles on the log-line.

With t = log|z| an invariant function phi corresponds to psi = g + phi, where
g(t) = 1/2 log(1 + e^{2t}) is the Fubini-Study potential.  phi is omega-sh iff
psi is convex with slopes in [0, 1].  The Monge-Ampere measure is the
Stieltjes measure of psi'; the slope deficits at the two ends are the Lelong
numbers at z = 0 and z = infinity, i.e. the pluripolar part.

Discretization: psi is sampled at grid points t_0..t_n and interpolated
linearly.  The jump of psi' at t_k is stored as the atom of cell k (the cell
whose left end is t_k); the jump at t_n goes to the last cell.  Jumps beyond
the grid (between the edge slopes and the asymptotic slopes) land in the edge
cells, so the non-pluripolar mass is exact.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import ConvexHull
from scipy.special import expi

from . import measures as M
from .errors import (GridTooNarrow, InvalidInput, InvalidParameter, ModelViolation,
                     NormalizationError, PreconditionViolation, Unsolvable)
from .measures import Grid, LineMeasure
from .weights import make_power

DEFAULT_GRID = Grid(-600.0, 600.0, 200_000)

_CONVEX_TOL = 1e-12
_SLOPE_TOL = 1e-12
_LELONG_TOL = 1e-12


def fs_potential(t):
    """g(t) = 1/2 log(1 + e^{2t}), overflow-safe."""
    out = 0.5 * np.logaddexp(0.0, 2.0 * np.asarray(t, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def fs_slope(t):
    """g'(t) = e^{2t} / (1 + e^{2t})."""
    out = 0.5 * (1.0 + np.tanh(np.asarray(t, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class RadialProfile:
    grid: Grid
    psi: np.ndarray
    slope_neg: float
    slope_pos: float
    scale: float = 1.0  # reference form scale*omega; 1 except in perturbation studies

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        if psi.shape != (self.grid.n + 1,):
            raise InvalidInput(f"psi needs {self.grid.n + 1} values, got {psi.shape}")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "slope_neg", float(self.slope_neg))
        object.__setattr__(self, "slope_pos", float(self.slope_pos))

    @property
    def t(self):
        return self.grid.points

    @property
    def g(self):
        return self.scale * fs_potential(self.grid.points)

    @property
    def phi(self):
        return self.psi - self.g

    @property
    def phi_mid(self):
        tm = self.grid.midpoints
        return 0.5 * (self.psi[1:] + self.psi[:-1]) - self.scale * fs_potential(tm)

    @property
    def cell_slopes(self):
        return np.diff(self.psi) / self.grid.dt

    @property
    def lelong(self):
        """(nu_0, nu_inf) = (s_-, scale - s_+)."""
        return self.slope_neg, self.scale - self.slope_pos

    @property
    def is_member(self):
        n0, ninf = self.lelong
        return n0 <= _LELONG_TOL and ninf <= _LELONG_TOL

    def shifted(self, c):
        return RadialProfile(self.grid, self.psi + c, self.slope_neg, self.slope_pos, self.scale)

    def to_dict(self):
        d = {"grid": self.grid.to_dict(), "psi": self.psi.tolist(),
             "slope_neg": self.slope_neg, "slope_pos": self.slope_pos}
        if self.scale != 1.0:
            d["scale"] = self.scale
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(Grid.from_dict(d["grid"]), np.asarray(d["psi"], dtype=float),
                   d["slope_neg"], d["slope_pos"], d.get("scale", 1.0))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def validate_profile(p, tol=_CONVEX_TOL):
    """Raise ModelViolation (with witness) unless p is a convex profile with admissible slopes."""
    s_neg, s_pos = p.slope_neg, p.slope_pos
    if not (-_SLOPE_TOL <= s_neg <= s_pos + _SLOPE_TOL and s_pos <= p.scale + _SLOPE_TOL):
        raise ModelViolation("asymptotic slopes must satisfy 0 <= s- <= s+ <= 1",
                             {"slope_neg": s_neg, "slope_pos": s_pos})
    scale = max(1.0, float(np.max(np.abs(p.psi))))
    d2 = p.psi[:-2] - 2 * p.psi[1:-1] + p.psi[2:]
    if len(d2) and d2.min() < -tol * scale:
        k = int(np.argmin(d2)) + 1
        raise ModelViolation("profile is not convex", {"t": float(p.t[k]), "second_difference": float(d2.min())})
    sl = p.cell_slopes
    # slope noise from sampling psi at magnitude |psi| is ~ eps*|psi|/dt
    stol = _SLOPE_TOL + 4e-16 * scale / p.grid.dt
    if sl[0] < s_neg - stol or sl[-1] > s_pos + stol:
        raise ModelViolation("edge slopes inconsistent with asymptotic slopes",
                             {"first": float(sl[0]), "last": float(sl[-1]), "slope_neg": s_neg, "slope_pos": s_pos})
    return p


def from_slopes(grid, sigma, slope_neg=0.0, slope_pos=1.0, psi0=0.0, scale=1.0):
    """Profile whose cell slopes are sigma (nondecreasing, inside [slope_neg, slope_pos])."""
    sigma = np.asarray(sigma, dtype=float)
    psi = np.empty(grid.n + 1)
    psi[0] = psi0
    psi[1:] = psi0 + np.cumsum(sigma) * grid.dt
    return RadialProfile(grid, psi, slope_neg, slope_pos, scale)


def from_phi(grid, phi_fn, slope_neg=0.0, slope_pos=1.0, check=True):
    t = grid.points
    p = RadialProfile(grid, fs_potential(t) + phi_fn(t), slope_neg, slope_pos)
    return validate_profile(p) if check else p


def reference_profile(grid=DEFAULT_GRID):
    """phi = 0."""
    return RadialProfile(grid, fs_potential(grid.points), 0.0, 1.0)


def reference_measure(grid=DEFAULT_GRID):
    """omega on the grid, with cell masses kept accurate on both tails.

    Same point-jump convention as ma_measure(reference_profile(grid)), but the
    right half uses 1 - g' = 1/(1 + e^{2t}) so the masses do not round to 0.
    """
    t = grid.points
    dt = grid.dt
    g = fs_potential(t)
    sig = np.diff(g) / dt                            # accurate where small
    co = np.diff(-0.5 * np.log1p(np.exp(-2.0 * np.maximum(t, -300.0)))) / dt  # 1 - sig, accurate where small
    co = np.where(t[:-1] > -300, co, 1.0 - sig)
    J = np.empty(grid.n + 1)
    J[0] = sig[0]
    J[-1] = co[-1]
    J[1:-1] = np.where(t[1:-1] < 0, np.diff(sig), -np.diff(co))
    J = np.maximum(J, 0.0)
    return LineMeasure(grid, _atoms_from_jumps(J))


def green_profile(grid=DEFAULT_GRID, shift=0.0):
    """psi(t) = t + shift, i.e. phi = log|z| - g + shift: full Lelong number 1 at z = 0."""
    return RadialProfile(grid, grid.points + shift, 1.0, 1.0)


def lelong_profile(grid, nu0, nuinf, center=0.0, width=1.0, shift=0.0):
    """Slopes run from nu0 to 1 - nuinf along a logistic ramp centred at `center`."""
    lo, hi = nu0, 1.0 - nuinf
    if not (0 <= lo <= hi <= 1):
        raise InvalidParameter("need 0 <= nu0 and nu0 + nuinf <= 1")
    tm = grid.midpoints
    sigma = lo + (hi - lo) * 0.5 * (1 + np.tanh((tm - center) / width))
    return from_slopes(grid, sigma, lo, hi, shift)


def clamp_profile(grid):
    """psi' = clamp(t, 0, 1): MA measure uniform on [0, 1]."""
    t = grid.points
    psi = np.where(t <= 0, 0.0, np.where(t >= 1, t - 0.5, 0.5 * t * t))
    return RadialProfile(grid, psi, 0.0, 1.0)


# ---------------------------------------------------------------- Monge-Ampere measure

def _monotone_slopes(p):
    # running max removes sampling noise of size eps*|psi|/dt so jumps are exactly >= 0
    s = np.maximum.accumulate(p.cell_slopes)
    return np.clip(s, p.slope_neg, p.slope_pos)


def point_jumps(p):
    """Jumps of psi' at t_0..t_n, edge jumps including the slope deficit beyond the grid."""
    s = _monotone_slopes(p)
    J = np.empty(p.grid.n + 1)
    J[0] = s[0] - p.slope_neg
    J[1:-1] = np.diff(s)
    J[-1] = p.slope_pos - s[-1]
    return J


def _atoms_from_jumps(J):
    atoms = J[:-1].copy()
    atoms[-1] += J[-1]
    return atoms


def ma_measure(p):
    """Non-pluripolar MA measure; the Lelong numbers become the charges at -inf/+inf."""
    J = point_jumps(p)
    nu0, nuinf = p.lelong
    return LineMeasure(p.grid, _atoms_from_jumps(J), max(nu0, 0.0), max(nuinf, 0.0))


def eps_grid(*measures):
    """2 x the largest single-cell mass involved."""
    return 2.0 * max(m.max_cell_mass for m in measures)


# ---------------------------------------------------------------- canonical approximation

def canonical_cut(p, j):
    """Profile of max(phi, -j)."""
    if not j > 0:
        raise InvalidParameter(f"cut level must be positive, got {j}")
    psi = np.maximum(p.psi, p.g - j)
    return RadialProfile(p.grid, psi, 0.0, p.scale, p.scale)


def max_profiles(a, b):
    """Profile of max(phi_a, phi_b)."""
    if a.grid != b.grid or a.scale != b.scale:
        raise InvalidInput("max_profiles needs profiles on the same grid")
    out = RadialProfile(a.grid, np.maximum(a.psi, b.psi), max(a.slope_neg, b.slope_neg),
                        max(a.slope_pos, b.slope_pos), a.scale)
    return validate_profile(out)


def _interior_cells(mask_points):
    """Cells k (atom at t_k) whose stencil t_{k-1}, t_k, t_{k+1} lies in the point set."""
    m = np.asarray(mask_points, dtype=bool)
    cells = np.zeros(len(m) - 1, dtype=bool)
    cells[1:-1] = m[:-3] & m[1:-2] & m[2:-1]
    return cells


def locality_cut_deviation(p, j, k=None):
    """max |ma(cut_j) - ma(target)| over cells inside {phi > -k} at grid resolution.

    target is p itself when k is None (cut vs function), otherwise cut_k with k <= j.
    """
    if k is None:
        other, level = p, j
    else:
        if k > j:
            raise InvalidParameter("need k <= j")
        other, level = canonical_cut(p, k), k
    cells = _interior_cells(p.phi > -level)
    a = ma_measure(canonical_cut(p, j)).atoms
    b = ma_measure(other).atoms
    return float(np.max(np.abs(a - b)[cells])) if cells.any() else 0.0


def locality_max_deviation(a, b):
    """max |ma(max(a,b)) - ma(a)| over cells inside {phi_a > phi_b}."""
    cells = _interior_cells(a.phi > b.phi)
    mm = ma_measure(max_profiles(a, b)).atoms
    ma = ma_measure(a).atoms
    return float(np.max(np.abs(mm - ma)[cells])) if cells.any() else 0.0


@dataclass
class MembershipReport:
    js: list
    escaping_mass: list
    limit: float
    verdict_escape: bool
    verdict_lelong: bool
    agree: bool

    def to_dict(self):
        return asdict(self)


def _phi_range(p):
    return float(np.max(p.phi) - np.min(p.phi))


def default_cut_levels(p, count=40):
    """Geometric cut levels that run past the range of phi on the grid."""
    top = 2.0 * (_phi_range(p) + 1.0)
    return np.geomspace(min(1.0, top / 4), top, count)


def membership(p, js=None, tol=1e-9):
    """Mass escape m_j = ma(cut_j)(phi <= -j) versus the exact criterion nu_0 = nu_inf = 0.

    The closed sublevel set is dilated by one cell so the kink of the cut is
    counted whichever side of the cell boundary it falls.  Beyond the grid,
    phi is taken as -inf at an end carrying a positive Lelong number.
    """
    js = default_cut_levels(p) if js is None else np.asarray(js, dtype=float)
    nu0, nuinf = p.lelong
    phi = p.phi
    n = p.grid.n
    ext = np.empty(n + 3)
    ext[1:-1] = phi
    ext[0] = -np.inf if nu0 > _LELONG_TOL else phi[0]
    ext[-1] = -np.inf if nuinf > _LELONG_TOL else phi[-1]
    # cell k spans points k, k+1 -> ext indices k+1, k+2; dilate by one point each side
    win = np.minimum.reduce([ext[0:n], ext[1:n + 1], ext[2:n + 2], ext[3:n + 3]])
    masses = []
    for j in js:
        atoms = ma_measure(canonical_cut(p, j)).atoms
        masses.append(float(np.sum(atoms[win <= -j])))
    limit = masses[-1]
    v_esc = limit <= tol
    v_lel = p.is_member
    return MembershipReport([float(j) for j in js], masses, limit, v_esc, v_lel, v_esc == v_lel)


def weighted_mass_convergence(p, js=None):
    """Nondecreasing masses ma(cut_j)(phi > -j) along the canonical sequence.

    The open set is taken at grid resolution: cells whose whole stencil lies in
    {phi > -j}, so the kink of the cut (on {phi = -j}) is never counted.
    """
    js = default_cut_levels(p) if js is None else np.asarray(js, dtype=float)
    out = []
    for j in js:
        cells = _interior_cells(p.phi > -j)
        out.append(float(np.sum(ma_measure(canonical_cut(p, j)).atoms[cells])))
    return np.asarray(js), np.asarray(out)


# ---------------------------------------------------------------- energies

def sup_phi(p, tol=1e-6):
    """sup of phi over the grid and both asymptotic ends (upper bounds from the edge slopes)."""
    phi = p.phi
    t0, tn = p.t[0], p.t[-1]
    gmax = float(np.max(phi))
    s = p.scale
    left = phi[0] if p.slope_neg >= s * fs_slope(t0) else phi[0] + s * fs_potential(t0)
    right = phi[-1] if p.slope_pos <= s * fs_slope(tn) else phi[-1] + s * (fs_potential(tn) - tn)
    bound = max(gmax, left, right)
    if bound - gmax > tol * max(1.0, abs(gmax)):
        raise GridTooNarrow("sup of phi may be attained beyond the grid",
                            {"grid_max": gmax, "tail_bound": bound})
    return bound


def _energy_sum(phi, J, w):
    return float(np.sum(np.abs(w(np.minimum(phi, 0.0))) * J))


def _tail_drop(sigma, excess, dt):
    """Extrapolated drop of phi beyond one grid edge, assuming the slope excess keeps
    decaying at its local exponential rate near that edge (infinite if it does not)."""
    L = max(2, len(sigma) // 20)
    e0 = excess
    e1 = sigma[L] - sigma[0]
    if e0 <= 1e-12:
        return 0.0
    # excess at distance L*dt inward
    inner = e0 + e1
    if inner <= e0 * (1 + 1e-9):
        return np.inf
    rate = np.log(inner / e0) / (L * dt)
    return e0 / rate


def _has_tail(p, phi, J, rel=1e-3):
    """phi keeps dropping beyond a grid edge by a non-negligible amount."""
    s = _monotone_slopes(p)
    span = max(1.0, float(phi.max() - phi.min()))
    left = _tail_drop(s - p.slope_neg, J[0], p.grid.dt)
    right = _tail_drop(p.slope_pos - s[::-1], J[-1], p.grid.dt)
    return bool(left > rel * span or right > rel * span)


def diverges(js, values, window=10, min_decay=-0.35, cap=1e12, cauchy=1e-6):
    """Divergence verdict for a monotone cut sequence on geometric levels.

    Divergent if some value exceeds `cap`, or the last `window` increments are
    all positive, larger than `cauchy`, and decay no faster than j^{min_decay}.
    Increments of log-type divergence (1/log j) fit exponents around -0.2;
    convergent power tails used in the checks sit below -0.5.
    """
    values = np.asarray(values, dtype=float)
    if np.any(~np.isfinite(values)) or np.any(values > cap):
        return True
    if len(values) < window + 1:
        return False
    d = np.diff(values)[-window:]
    if np.max(np.abs(d)) <= cauchy or np.any(d <= 0):
        return False
    x = np.log(np.asarray(js, dtype=float)[-window:])
    slope = np.polyfit(x, np.log(d), 1)[0]
    return bool(slope >= min_decay)


@dataclass
class EnergyReport:
    value: float
    direct_sum: float
    tail: bool
    js: list
    cut_energies: list
    divergent: bool

    def to_dict(self):
        return asdict(self)


def energy_report(p, w, normalize=True, count=40):
    nu0, nuinf = p.lelong
    phi = p.phi - (sup_phi(p) if normalize else 0.0)
    if not normalize and phi.max() > 1e-9 * max(1.0, abs(phi.min())):
        raise PreconditionViolation("unnormalized energy needs phi <= 0")
    J = point_jumps(p)
    direct = _energy_sum(phi, J, w)
    tail = _has_tail(p, phi, J)
    js, seq, div = [], [], False
    if nu0 > _LELONG_TOL or nuinf > _LELONG_TOL or tail:
        R = -phi.min()
        if R > 0:
            js = np.geomspace(R / 100, 0.98 * R, count)
            shift = p.psi - phi  # g + sup
            for j in js:
                pc = RadialProfile(p.grid, np.maximum(p.psi, shift - j), 0.0, p.scale, p.scale)
                seq.append(_energy_sum(np.maximum(phi, -j), point_jumps(pc), w))
            div = diverges(js, seq)
        if nu0 > _LELONG_TOL or nuinf > _LELONG_TOL:
            div = True
    value = np.inf if div else direct
    return EnergyReport(value, direct, bool(tail), [float(j) for j in js], seq, bool(div))


def energy(p, w, normalize=True):
    """E_chi(phi) = sum (-chi)(phi - sup phi) * atoms, or +inf when the cut sequence diverges."""
    return energy_report(p, w, normalize).value


def tail_exponents(p):
    """Log-log slope of |phi'| against |t| over the outer half of each side of the grid."""
    tm = p.grid.midpoints
    dphi = np.abs(_monotone_slopes(p) - p.scale * fs_slope(tm))
    out = []
    for side in (tm < 0, tm > 0):
        x = np.abs(tm[side])
        y = dphi[side]
        sel = (x >= 0.5 * x.max()) & (y > 0)
        if x.max() < 10 or sel.sum() < 10:
            out.append(np.nan)
            continue
        out.append(float(np.polyfit(np.log(x[sel]), np.log(y[sel]), 1)[0]))
    return tuple(out)


def gradient_energy_report(p, count=40, critical=-0.5, margin=0.01):
    """int phi'(t)^2 dt over the grid; +inf when a tail of phi' decays no faster than |t|^{-1/2}.

    The cut sequence is reported alongside for inspection.
    """
    nu0, nuinf = p.lelong
    if nu0 > _LELONG_TOL or nuinf > _LELONG_TOL:
        return EnergyReport(np.inf, np.inf, True, [], [], True)
    dt = p.grid.dt

    def grad(psi, g):
        d = np.diff(psi) / dt - np.diff(g) / dt
        return float(np.sum(d * d) * dt)

    g = p.g
    phi = p.phi
    direct = grad(p.psi, g)
    J = point_jumps(p)
    tail = _has_tail(p, phi, J)
    js, seq, div = [], [], False
    if tail:
        R = float(phi.max() - phi.min())
        js = np.geomspace(R / 100, 0.98 * R, count)
        top = phi.max()
        seq = [grad(np.maximum(p.psi, g + top - j), g) for j in js]
        ex = np.array(tail_exponents(p))
        div = bool(np.any(ex[np.isfinite(ex)] >= critical - margin))
    return EnergyReport(np.inf if div else direct, direct, bool(tail), [float(j) for j in js], seq, bool(div))


def gradient_energy(p):
    return gradient_energy_report(p).value


# ---------------------------------------------------------------- comparison principle

@dataclass
class ComparisonReport:
    lhs: float
    rhs: float
    slack: float
    eps_grid: float
    ok: bool

    def to_dict(self):
        return asdict(self)


def _require_member(*ps):
    for p in ps:
        if not p.is_member:
            raise PreconditionViolation("the comparison principle is stated for members of the full-mass class",
                                        {"lelong": p.lelong})


def comparison_check(a, b):
    """Masses of ma(b) and ma(a) over the open cell set {phi_a < phi_b}."""
    _require_member(a, b)
    cells = a.phi_mid < b.phi_mid
    ma_a, ma_b = ma_measure(a), ma_measure(b)
    lhs = float(np.sum(ma_b.atoms[cells]))
    rhs = float(np.sum(ma_a.atoms[cells]))
    eg = eps_grid(ma_a, ma_b)
    return ComparisonReport(lhs, rhs, rhs - lhs, eg, rhs - lhs >= -eg)


def max_domination_slack(a, b):
    """min over cells of ma(max(a,b)) - min(ma(a), ma(b)), and the eps_grid scale."""
    mm = ma_measure(max_profiles(a, b))
    ma_a, ma_b = ma_measure(a), ma_measure(b)
    target = np.minimum(ma_a.atoms, ma_b.atoms)
    return float(np.min(mm.atoms - target)), eps_grid(ma_a, ma_b, mm)


# ---------------------------------------------------------------- capacity

def _lower_envelope(t, o):
    """Largest convex minorant of the points (t, o) with slopes clamped to [0, 1]."""
    pts = np.column_stack([t, o])
    # anchor points far below remove nothing from the lower hull but make qhull robust
    hull = ConvexHull(pts)
    v = np.sort(np.unique(hull.vertices))
    # keep the lower chain: vertices lying on or below the chord interpolation of the hull
    lower = [v[0]]
    for idx in v[1:]:
        lower.append(idx)
        while len(lower) >= 3:
            i0, i1, i2 = lower[-3], lower[-2], lower[-1]
            cross = (t[i1] - t[i0]) * (o[i2] - o[i0]) - (o[i1] - o[i0]) * (t[i2] - t[i0])
            if cross <= 0:
                lower.pop(-2)
            else:
                break
    lower = np.asarray(lower)
    env = np.interp(t, t[lower], o[lower])
    # clamp slopes: flat left of the minimum, slope 1 right of the last admissible point
    sl = np.diff(env) / np.diff(t)
    k = int(np.argmin(env))
    env[:k] = env[k]
    over = np.nonzero(sl[k:] > 1.0)[0]
    if len(over):
        r = k + over[0]
        env[r:] = env[r] + (t[r:] - t[r])
    return env


def capacity_sublevel(p, s, return_envelope=False):
    """Capacity of E = {phi < -s} via the relative extremal envelope of g - 1_E.

    Returns the MA mass of the envelope on the closure of E (cells whose
    midpoint satisfies the strict inequality, together with their end points).
    """
    cells = p.phi_mid < -s
    if not cells.any():
        return (0.0, None) if return_envelope else 0.0
    pts = np.zeros(p.grid.n + 1, dtype=bool)
    pts[:-1] |= cells
    pts[1:] |= cells
    g = fs_potential(p.t)
    o = g - pts.astype(float)
    env = _lower_envelope(p.t, o)
    q = RadialProfile(p.grid, env, 0.0, 1.0)
    J = point_jumps(q)
    cap = float(np.sum(J[pts]))
    return (cap, q) if return_envelope else cap


@dataclass
class DecayReport:
    ts: list
    capacities: list
    products: list
    sup_product: float
    bounded: bool

    def to_dict(self):
        return asdict(self)


def capacity_decay_check(p, w, ts):
    """sup_t Cap(phi < -t) |t chi(-t)| over ts (normalized phi, sup = 0)."""
    q = p.shifted(-sup_phi(p))
    ts = np.asarray(ts, dtype=float)
    caps = np.array([capacity_sublevel(q, t) for t in ts])
    prods = caps * np.abs(ts * w(-ts))
    sup = float(np.max(prods)) if len(prods) else 0.0
    half = max(1, len(prods) // 2)
    bounded = bool(np.isfinite(sup) and np.max(prods[half:], initial=0.0) <= 2.0 * np.max(prods[:half], initial=0.0) + 1e-12)
    return DecayReport(ts.tolist(), caps.tolist(), prods.tolist(), sup, bounded)


def power_tail_profile(grid, beta, amp=1.0, shift=0.0, c=1e-2):
    """Member with phi ~ -amp |t|^beta at -inf (0 < beta < 1): mass of {phi < -s} ~ s^{-(1-beta)/beta}.

    The left slope of phi is amp*beta*(c + |t|)^(beta-1); the small offset c keeps
    the power law clean over the whole grid.
    """
    if not 0 < beta < 1:
        raise InvalidParameter("need 0 < beta < 1")
    tm = grid.midpoints
    x = np.maximum(-tm, 0.0)
    gs = fs_slope(tm)
    left = amp * beta * (c + x) ** (beta - 1)
    sigma = np.where(tm < 0, np.minimum(left, 1.0) * (1 - gs) + gs, gs)
    sigma = np.maximum.accumulate(np.clip(sigma, 0, 1))
    return from_slopes(grid, sigma, 0.0, 1.0, shift)


def converse_capacity_profile(grid, w, eps=0.5, amp=1.0):
    """Profile whose sublevel capacities satisfy Cap(phi < -t) <~ t^{-(1+eps)} |chi(-t)|^{-1}.

    For chi = power(p) the capacity of {phi < -s} behaves like 1/|t(s)| where
    phi(t(s)) = -s, so phi ~ -|t|^beta with beta = 1/(1 + eps + p) does it.
    Other weights use the power bound p = 1 (which dominates them).
    """
    p = w.params.get("p", 1.0) if w.family == "power" else 1.0
    beta = 1.0 / (1.0 + eps + p)
    return power_tail_profile(grid, beta, amp)


# ---------------------------------------------------------------- solver

def solve(mu, mass_tol=1e-10):
    """psi' = CDF of mu at the grid points, integrated by the trapezoid rule; sup phi = 0."""
    if mu.charge_neg_inf > 0 or mu.charge_pos_inf > 0:
        raise Unsolvable("target charges a pluripolar set (mass at z = 0 or z = infinity)",
                         {"charge_neg_inf": mu.charge_neg_inf, "charge_pos_inf": mu.charge_pos_inf})
    if abs(mu.total - 1.0) > mass_tol:
        raise NormalizationError(f"target mass {mu.total} is not 1")
    F = np.clip(mu.cdf_points() / mu.total, 0.0, 1.0)
    sigma = 0.5 * (F[:-1] + F[1:])
    p = from_slopes(mu.grid, sigma, 0.0, 1.0)
    return p.shifted(-sup_phi(p))


def roundtrip_distance(mu):
    return M.kolmogorov_distance(ma_measure(solve(mu)), mu)


def _regrid(mu, grid):
    """Transfer mu to another grid through its piecewise-linear CDF."""
    F = mu.cdf_points()
    pts = mu.grid.points

    def cdf(t):
        return np.interp(t, pts, F, left=F[0], right=F[-1])

    atoms = np.maximum(np.diff(cdf(grid.points)), 0.0)
    atoms[0] += cdf(grid.points[0]) - mu.charge_neg_inf
    atoms[-1] += F[-1] - cdf(grid.points[-1])
    return LineMeasure(grid, atoms, mu.charge_neg_inf, mu.charge_pos_inf)


def uniqueness_check(mu, trials=5, rng=None):
    """Solve on randomly offset/refined grids; max sup-deviation of mean-aligned phi."""
    rng = np.random.default_rng(0) if rng is None else rng
    g0 = mu.grid
    ref = solve(mu)
    lo, hi = g0.tmin + 2 * g0.dt, g0.tmax - 2 * g0.dt
    inner = (ref.t >= lo) & (ref.t <= hi)
    x = ref.t[inner]
    base = ref.phi[inner]
    base = base - base.mean()
    dev = 0.0
    for _ in range(trials):
        refine = int(rng.integers(1, 3))
        off = float(rng.uniform(-0.5, 0.5)) * g0.dt
        grid = Grid(g0.tmin + off, g0.tmax + off, g0.n * refine)
        sol = solve(_regrid(mu, grid))
        y = np.interp(x, sol.t, sol.phi)
        y = y - y.mean()
        dev = max(dev, float(np.max(np.abs(y - base))))
    return dev


def uniqueness_tolerance(mu, lipschitz=1.0):
    """4 x cell width x Lipschitz bound of phi (|phi'| <= 1)."""
    return 4.0 * mu.grid.dt * lipschitz


# ---------------------------------------------------------------- attenuation / examples

def attenuate(p, q):
    """Profile of -(-phi)^q for phi <= -1, 0 < q < 1."""
    if not 0 < q < 1:
        raise InvalidParameter("need 0 < q < 1")
    phi = p.phi
    if sup_phi(p) > -1 + 1e-12:
        raise PreconditionViolation("attenuation needs sup phi <= -1; shift the profile first")
    new_phi = -np.power(-phi, q)
    out = RadialProfile(p.grid, p.g + new_phi, 0.0, p.scale, p.scale)
    return validate_profile(out)


def log_compose(p):
    """Profile of -log(1 - phi) for phi <= 0: singularities become logarithmically mild."""
    phi = np.minimum(p.phi, 0.0)
    out = RadialProfile(p.grid, p.g - np.log1p(-phi), 0.0, p.scale, p.scale)
    return validate_profile(out)


def literal_slow_h(t):
    """h(t) = t log(1 - t), taken verbatim; concave with h'(-inf) = +inf."""
    t = np.asarray(t, dtype=float)
    return t * np.log1p(-t)


def slow_h(t):
    """h(t) = int_0^t ds / log(e - s): convex, h(0) = 0, h' = 1/log(e - t) -> 0 at -inf.

    h'' ~ 1/(|t| log^2|t|), which produces the density |z|^-2 (-log|z|^2)^-1 (log(-log|z|^2))^-2 near 0.
    Closed form via the exponential integral: h(t) = -(Ei(log(e - t)) - Ei(1)).
    """
    t = np.asarray(t, dtype=float)
    return -(expi(np.log(np.e - t)) - expi(1.0))


def slow_singularity_profile(grid=DEFAULT_GRID, h=slow_h):
    """psi = g + h(t - g - 1): a function in the full-mass class with arbitrarily slow energy growth."""
    t = grid.points
    g = fs_potential(t)
    psi = g + h(t - g - 1.0)
    p = RadialProfile(grid, psi, 0.0, 1.0)
    sl = p.cell_slopes
    if np.any(sl > 1 + 1e-9) or np.any(sl < -1e-9):
        k = int(np.argmax(np.abs(np.clip(sl, 0, 1) - sl)))
        raise ModelViolation("composed profile leaves the slope range [0, 1]",
                             {"t": float(grid.midpoints[k]), "slope": float(sl[k])})
    return validate_profile(p)


def density_ratio_table(p, zlog_window=(-400.0, -100.0), samples=31):
    """f(z)|z|^2 (-log|z|^2) [log(-log|z|^2)]^2 along log|z| in the window (f up to a constant)."""
    J = point_jumps(p)
    dens = J / p.grid.dt
    ts = np.linspace(zlog_window[0], zlog_window[1], samples)
    idx = np.clip(np.round((ts - p.grid.tmin) / p.grid.dt).astype(int), 0, p.grid.n)
    # smooth over a few cells to remove sampling noise
    k = 25
    smooth = np.array([dens[max(i - k, 0):i + k + 1].mean() for i in idx])
    x = -2.0 * ts
    ratio = smooth * x * np.log(x) ** 2
    return ts, smooth, ratio


# ---------------------------------------------------------------- convergence theorems

@dataclass
class ConvergenceReport:
    js: list
    mass_deviation: list
    weighted_deviation: list
    eps_grid: float
    monotone: bool
    ok: bool

    def to_dict(self):
        return asdict(self)


def _sup_over_unions(d):
    # sup over cell unions of |<d, 1_B>|
    return float(max(np.sum(d[d > 0]), -np.sum(d[d < 0])))


def decreasing_convergence_check(p, w, w_small, js=None):
    """Cut sequence phi_j decreasing to phi: measures and w_small-weighted measures converge."""
    from .weights import LITTLE_O, growth_dominates
    if not np.isfinite(energy(p, w)):
        raise PreconditionViolation("needs finite energy for w")
    if growth_dominates(w_small, w) != LITTLE_O:
        raise PreconditionViolation("w_small must be o(w)")
    js = default_cut_levels(p) if js is None else np.asarray(js, dtype=float)
    top = sup_phi(p)
    q = p.shifted(-top)
    base = ma_measure(q).atoms
    Jb = point_jumps(q)
    wb = np.abs(w_small(np.minimum(q.phi, 0))) * Jb
    mdev, wdev = [], []
    for j in js:
        c = canonical_cut(q, j)
        a = ma_measure(c).atoms
        mdev.append(_sup_over_unions(a - base))
        wc = np.abs(w_small(np.minimum(c.phi, 0))) * point_jumps(c)
        wdev.append(_sup_over_unions(wc - wb))
    eg = eps_grid(ma_measure(q))
    mono = bool(np.all(np.diff(mdev) <= 1e-12) and np.all(np.diff(wdev) <= 1e-12 * max(1, max(wdev))))
    ok = mdev[-1] <= eg and wdev[-1] <= eg
    return ConvergenceReport([float(j) for j in js], mdev, wdev, eg, mono, bool(ok))


@dataclass
class InequalityReport:
    lhs: float
    rhs: float
    ok: bool
    constant: float

    def to_dict(self):
        return asdict(self)


def fundamental_constant(w, n=1):
    return float((2.0 if w.kind == "ConvexLow" else w.M + 1.0) ** n)


def fundamental_inequality_check(a, b, w, rtol=1e-9):
    """E(b) <= C^n E(a) for phi_a <= phi_b <= 0 (raw energies, no renormalization)."""
    if np.any(a.phi > b.phi + 1e-10) or np.any(b.phi > 1e-10):
        raise PreconditionViolation("needs phi_a <= phi_b <= 0 on the grid")
    C = fundamental_constant(w)
    lhs = energy(b, w, normalize=False)
    rhs = C * energy(a, w, normalize=False)
    return InequalityReport(lhs, rhs, bool(lhs <= rhs * (1 + rtol) + 1e-300), C)


@dataclass
class DominationReport:
    ratios: list
    empirical_C: float
    alpha: float
    A: float
    bounded: bool

    def to_dict(self):
        return asdict(self)


def domination_check(mu, p_exp, family, levels=(0.5, 1, 2, 4, 8)):
    """Empirical constant of int(-phi)^p dmu <= C E_p(phi)^{p/(p+1)}, and a fit mu(E) ~ A Cap(E)^alpha."""
    if not mu.non_pluripolar:
        raise PreconditionViolation("domination is tested against non-pluripolar measures")
    w = make_power(p_exp)
    ratios, caps, mus = [], [], []
    for q in family:
        phi_m = q.phi_mid
        lhs = float(np.sum(np.power(np.maximum(-phi_m, 0.0), p_exp) * mu.atoms))
        e = energy(q, w, normalize=False)
        ratios.append(lhs / e ** (p_exp / (p_exp + 1)) if e > 0 and np.isfinite(e) else np.inf)
        for s in levels:
            cells = phi_m < -s
            if cells.any():
                c = capacity_sublevel(q, s)
                m = float(np.sum(mu.atoms[cells]))
                if c > 0 and m > 0:
                    caps.append(c)
                    mus.append(m)
    if len(caps) >= 2 and np.ptp(np.log(caps)) > 0:
        alpha, logA = np.polyfit(np.log(caps), np.log(mus), 1)
        A = float(np.exp(logA))
    else:
        alpha, A = np.nan, np.nan
    C = float(np.max(ratios)) if ratios else 0.0
    return DominationReport(ratios, C, float(alpha), A, bool(np.isfinite(C)))


@dataclass
class StabilityReport:
    eps: list
    distances: list
    energies: list
    eps_grid: float
    monotone: bool
    bounded: bool
    ok: bool

    def to_dict(self):
        return asdict(self)


def perturbed_profile(p, eps):
    """phi_eps = phi + eps (max(g, 1) - g) in the class of (1 + eps) omega; decreases to phi as eps -> 0."""
    g = fs_potential(p.t)
    psi = p.psi + eps * np.maximum(g, 1.0)
    return RadialProfile(p.grid, psi, p.slope_neg, p.slope_pos + eps, p.scale + eps)


def reference_perturbation_check(p, eps, w=None):
    """MA measures of the perturbed profiles converge (CDF distance) and energies stay bounded."""
    w = make_power(1.0) if w is None else w
    base = ma_measure(p)
    e0 = energy(p, w)
    if not np.isfinite(e0):
        raise PreconditionViolation("needs finite energy")
    dists, ens = [], []
    for e in eps:
        q = perturbed_profile(p, e)
        dists.append(M.kolmogorov_distance(ma_measure(q), base))
        ens.append(energy(q, w))
    eg = eps_grid(base)
    mono = bool(np.all(np.diff(dists) <= 1e-15))
    bounded = bool(np.all(np.isfinite(ens)) and max(ens, default=0.0) <= 2 * e0 + 10.0)
    return StabilityReport(list(map(float, eps)), dists, ens, eg, mono, bounded,
                           bool(mono and bounded and dists[-1] <= eg))


# ---------------------------------------------------------------- random profiles

def random_member(grid, rng, bounded=True, atoms=0):
    """Random profile in the full-mass class: psi' is the CDF of a random mixture."""
    tm = grid.points
    span = min(grid.tmax - grid.tmin, 60.0)
    k = int(rng.integers(1, 4))
    centers = rng.uniform(-span / 3, span / 3, k)
    widths = rng.uniform(0.3, span / 10, k)
    wts = rng.dirichlet(np.ones(k + atoms))
    F = np.zeros_like(tm)
    for c, s, a in zip(centers, widths, wts[:k]):
        F += a * 0.5 * (1 + np.tanh((tm - c) / s))
    for a in wts[k:]:
        F += a * (tm >= rng.uniform(-span / 3, span / 3))
    sigma = 0.5 * (F[:-1] + F[1:])
    p = from_slopes(grid, np.maximum.accumulate(np.clip(sigma, 0, 1)), 0.0, 1.0)
    return p.shifted(-sup_phi(p) - float(rng.uniform(0, 2)))


def random_profile(grid, rng, nu0=0.0, nuinf=0.0):
    """Random profile with prescribed Lelong numbers."""
    q = random_member(grid, rng)
    lo, hi = nu0, 1.0 - nuinf
    sigma = lo + (hi - lo) * _monotone_slopes(q)
    return from_slopes(grid, sigma, lo, hi, float(q.psi[0]))


def density_wrt(mu, base, tol=1e-12):
    """Cellwise density f = mu / base; cells where both vanish get f = 0."""
    zero = base.atoms <= 0
    if np.sum(mu.atoms[zero]) > tol:
        raise InvalidInput("mu charges cells where the base measure vanishes",
                           {"mass": float(np.sum(mu.atoms[zero]))})
    return np.where(zero, 0.0, mu.atoms / np.where(zero, 1.0, base.atoms))


def adapted_weight_for(p, base=None):
    """Young-adapted weight for ma(p) with density taken against ma(base) (default: omega)."""
    from .weights import young_adapted_weight
    om = reference_measure(p.grid) if base is None else ma_measure(base)
    return young_adapted_weight(density_wrt(ma_measure(p), om), om.atoms)
