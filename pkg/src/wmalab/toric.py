"""Torus-invariant omega-psh functions on P^2 as convex functions on R^2.

In log-coordinates t = (log|z1|, log|z2|) a torus-invariant phi corresponds to
psi = g2 + phi with g2 = 1/2 log(1 + e^{2 t1} + e^{2 t2}); psi is convex with
gradient in the simplex D = {x >= 0, x1 + x2 <= 1}.  The Monge-Ampere measure
is the Alexandrov measure: the mass at a vertex is the area of its
subgradient cell (inside D) divided by area(D) = 1/2.

Cells are computed from the lower convex hull of the graph points: the cell of
a hull vertex v is cut out of D by the half-planes s.(w - v) <= psi(w) - psi(v)
for its hull neighbours w.  Neighbours in the hull triangulation give the same
polygon as all grid points, because a locally convex triangulated surface is
convex.  Points strictly above the hull (or merged into a flat facet) have
empty or degenerate cells.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import InvalidInput, NumericalFailure, PreconditionViolation, Unsolvable
from .measures import Grid, LineMeasure, PlanarMeasure
from . import radial

SIMPLEX = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
SIMPLEX_AREA = 0.5
_HULL_TOL = 1e-9


@dataclass(frozen=True)
class Grid2:
    """Square vertex grid: n x n vertices on [tmin, tmax]^2."""

    tmin: float
    tmax: float
    n: int

    def __post_init__(self):
        if not (self.tmax > self.tmin) or int(self.n) < 3:
            raise InvalidInput(f"bad grid {self}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tmin", float(self.tmin))
        object.__setattr__(self, "tmax", float(self.tmax))

    @property
    def axis(self):
        return np.linspace(self.tmin, self.tmax, self.n)

    @property
    def h(self):
        return (self.tmax - self.tmin) / (self.n - 1)

    def mesh(self):
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    def to_dict(self):
        return {"tmin": self.tmin, "tmax": self.tmax, "n": self.n}

    @classmethod
    def from_dict(cls, d):
        return cls(d["tmin"], d["tmax"], d["n"])

    @classmethod
    def parse(cls, spec):
        try:
            a, b, n = spec.split(":")
            return cls(float(a), float(b), int(float(n)))
        except ValueError as exc:
            raise InvalidInput(f"grid spec must be tmin:tmax:n, got {spec!r}") from exc


DEFAULT_GRID2 = Grid2(-40.0, 40.0, 200)


def fs_potential2(t1, t2):
    """g2 = 1/2 log(1 + e^{2 t1} + e^{2 t2}), overflow-safe."""
    a = np.stack(np.broadcast_arrays(np.zeros_like(np.asarray(t1, float)), 2.0 * np.asarray(t1, float),
                                     2.0 * np.asarray(t2, float)))
    m = a.max(axis=0)
    return 0.5 * (m + np.log(np.exp(a - m).sum(axis=0)))


@dataclass(frozen=True)
class ToricProfile:
    grid2: Grid2
    psi: np.ndarray

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        n = self.grid2.n
        if psi.size != n * n:
            raise InvalidInput(f"psi needs {n}x{n} values")
        object.__setattr__(self, "psi", psi.reshape(n, n))

    @property
    def g(self):
        return fs_potential2(*self.grid2.mesh())

    @property
    def phi(self):
        return self.psi - self.g

    def shifted(self, c):
        return ToricProfile(self.grid2, self.psi + c)

    def to_dict(self):
        return {"grid2": self.grid2.to_dict(), "psi": self.psi.ravel().tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(Grid2.from_dict(d["grid2"]), np.asarray(d["psi"], dtype=float))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def reference_profile2(grid2=DEFAULT_GRID2):
    return ToricProfile(grid2, fs_potential2(*grid2.mesh()))


def max_affine_profile(grid2, slopes, offsets):
    """psi = max_k (s_k . t + b_k)."""
    T1, T2 = grid2.mesh()
    slopes = np.asarray(slopes, float)
    vals = [s[0] * T1 + s[1] * T2 + b for s, b in zip(slopes, offsets)]
    return ToricProfile(grid2, np.max(vals, axis=0))


def separable_profile(grid2, psi1, psi2):
    """psi(t1, t2) = psi1(t1) + psi2(t2), both given at the axis points."""
    return ToricProfile(grid2, np.add.outer(np.asarray(psi1, float), np.asarray(psi2, float)))


# ---------------------------------------------------------------- hull and cells

class _Hull:
    """Lower hull of the graph of psi over the grid, with vertex adjacency."""

    def __init__(self, grid2, psi):
        T1, T2 = grid2.mesh()
        pts = np.column_stack([T1.ravel(), T2.ravel(), psi.ravel()])
        self.pts = pts
        hull = ConvexHull(pts)
        eq = hull.equations
        lower = eq[:, 2] < -1e-12
        simp = hull.simplices[lower]
        self.simplices = simp
        self.equations = eq[lower]
        edges = np.concatenate([simp[:, [0, 1]], simp[:, [1, 2]], simp[:, [0, 2]]])
        edges = np.concatenate([edges, edges[:, ::-1]])
        edges = np.unique(edges, axis=0)
        self.edge_src = edges[:, 0]
        self.edge_dst = edges[:, 1]
        self.starts = np.searchsorted(self.edge_src, np.arange(len(pts) + 1))
        self.on_hull = np.zeros(len(pts), dtype=bool)
        self.on_hull[np.unique(simp)] = True

    def neighbours(self, v):
        return self.edge_dst[self.starts[v]:self.starts[v + 1]]

    def envelope_at(self, idx):
        """Value of the lower envelope at the given point indices (slow path, few points)."""
        eq = self.equations
        out = []
        for i in np.atleast_1d(idx):
            x, y, _ = self.pts[i]
            # plane: nx x + ny y + nz z + off = 0  ->  z = -(nx x + ny y + off)/nz
            z = -(eq[:, 0] * x + eq[:, 1] * y + eq[:, 3]) / eq[:, 2]
            out.append(z.max())
        return np.asarray(out)


def _clip(poly, a, b, c):
    """Keep the part of poly (list of (x, y)) with a x + b y <= c."""
    out = []
    m = len(poly)
    if m == 0:
        return out
    for i in range(m):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % m]
        d1 = a * x1 + b * y1 - c
        d2 = a * x2 + b * y2 - c
        if d1 <= 0:
            out.append((x1, y1))
        if (d1 < 0 < d2) or (d2 < 0 < d1):
            r = d1 / (d1 - d2)
            out.append((x1 + r * (x2 - x1), y1 + r * (y2 - y1)))
    return out


def _area(poly):
    if len(poly) < 3:
        return 0.0
    p = np.asarray(poly)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def cell_areas(grid2, psi, region=SIMPLEX, hull=None):
    """Area of each vertex's subgradient cell inside the convex polygon `region`."""
    hull = _Hull(grid2, psi) if hull is None else hull
    pts = hull.pts
    z = pts[:, 2]
    base = [tuple(map(float, q)) for q in region]
    areas = np.zeros(len(pts))
    for v in np.nonzero(hull.on_hull)[0]:
        poly = base
        xv, yv, zv = pts[v]
        for w in hull.neighbours(v):
            poly = _clip(poly, pts[w, 0] - xv, pts[w, 1] - yv, z[w] - zv)
            if not poly:
                break
        areas[v] = _area(poly)
    return areas.reshape(grid2.n, grid2.n)


def convexity_slack(p, hull=None):
    """max over vertices of psi(v) - envelope(v); 0 for a valid profile."""
    hull = _Hull(p.grid2, p.psi) if hull is None else hull
    off = np.nonzero(~hull.on_hull)[0]
    if len(off) == 0:
        return 0.0, None
    vals = hull.envelope_at(off[:200])
    gaps = hull.pts[off[:200], 2] - vals
    k = int(np.argmax(gaps))
    return float(gaps[k]), int(off[k])


def validate_profile2(p, tol=_HULL_TOL):
    hull = _Hull(p.grid2, p.psi)
    gap, v = convexity_slack(p, hull)
    scale = max(1.0, float(np.max(np.abs(p.psi))))
    if gap > tol * scale:
        i, j = divmod(v, p.grid2.n)
        raise PreconditionViolation("profile is not its own convex envelope", {"vertex": [i, j], "gap": gap})
    return hull


def alexandrov_ma(p, region=SIMPLEX, check=True):
    """Vertex masses area(cell inside D) / area(D); cells of a valid profile tile D."""
    hull = validate_profile2(p) if check else None
    areas = cell_areas(p.grid2, p.psi, region, hull)
    g = p.grid2
    return PlanarMeasure(g.tmin, g.tmax, g.n, areas / SIMPLEX_AREA)


def mixed_ma(a, b, tol=1e-9):
    """1/2 [MA(a + b) - MA(a) - MA(b)]; the sum has gradients in 2D, masses normalized by area(D)."""
    if a.grid2 != b.grid2:
        raise InvalidInput("mixed_ma needs profiles on the same grid")
    g = a.grid2
    ma_a = alexandrov_ma(a).vertex_masses
    ma_b = alexandrov_ma(b).vertex_masses
    s = ToricProfile(g, a.psi + b.psi)
    hull = validate_profile2(s)
    ma_s = cell_areas(g, s.psi, 2.0 * SIMPLEX, hull) / SIMPLEX_AREA
    mixed = 0.5 * (ma_s - ma_a - ma_b)
    lo = float(mixed.min())
    if lo < -tol:
        i, j = np.unravel_index(int(np.argmin(mixed)), mixed.shape)
        raise NumericalFailure("negative mixed mass beyond tolerance", {"vertex": [int(i), int(j)], "mass": lo})
    out = PlanarMeasure(g.tmin, g.tmax, g.n, mixed)
    object.__setattr__(out, "sum_masses", ma_s)
    return out


def energy2(p, w, normalize=True, masses=None):
    """sum_v (-chi)(phi(v) - sup phi) mass(v)."""
    m = alexandrov_ma(p).vertex_masses if masses is None else masses
    phi = p.phi
    if normalize:
        phi = phi - phi.max()
    elif phi.max() > 1e-10:
        raise PreconditionViolation("unnormalized energy needs phi <= 0")
    return float(np.sum(np.abs(w(np.minimum(phi, 0.0))) * m))


# ---------------------------------------------------------------- checks

@dataclass
class BoundReport:
    lhs: float
    bound: float
    ratio: float
    constant: float
    ok: bool

    def to_dict(self):
        return asdict(self)


def mixed_bound_constant(pexp, n=2):
    eps = (4 * n) ** (-1.0 / pexp) / 2
    return 4 * n / (eps ** n * (1 - 2 * n * eps ** pexp))


def mixed_energy_bound_check(ps, pexp):
    """int (-phi0)^p d mixed(phi1, phi2) against C_p max_j int (-phi_j)^p MA(phi_j)."""
    from .weights import make_power
    if len(ps) != 3:
        raise InvalidInput("need three profiles")
    for q in ps:
        if q.phi.max() > 1e-10:
            raise PreconditionViolation("profiles must satisfy phi <= 0")
    w = make_power(pexp)
    mixed = mixed_ma(ps[1], ps[2]).vertex_masses
    lhs = float(np.sum(np.power(np.maximum(-ps[0].phi, 0.0), pexp) * mixed))
    C = mixed_bound_constant(pexp)
    emax = max(energy2(q, w, normalize=False) for q in ps)
    bound = C * emax
    ratio = lhs / emax if emax > 0 else (0.0 if lhs == 0 else np.inf)
    return BoundReport(lhs, bound, float(ratio), C, bool(lhs <= bound))


@dataclass
class ComparisonReport2:
    lhs: float
    rhs: float
    slack: float
    eps_grid: float
    ok: bool

    def to_dict(self):
        return asdict(self)


def comparison_check2(a, b):
    """Masses of MA(b) and MA(a) on the vertex set {phi_a < phi_b}."""
    ma_a = alexandrov_ma(a).vertex_masses
    ma_b = alexandrov_ma(b).vertex_masses
    U = a.phi < b.phi
    lhs = float(ma_b[U].sum())
    rhs = float(ma_a[U].sum())
    eg = 2.0 * max(ma_a.max(), ma_b.max())
    return ComparisonReport2(lhs, rhs, rhs - lhs, eg, rhs - lhs >= -eg)


def fundamental_inequality_check2(a, b, w):
    """E(b) <= C^2 E(a) for phi_a <= phi_b <= 0 (raw energies)."""
    if np.any(a.phi > b.phi + 1e-10) or b.phi.max() > 1e-10:
        raise PreconditionViolation("needs phi_a <= phi_b <= 0")
    C = radial.fundamental_constant(w, n=2)
    lhs = energy2(b, w, normalize=False)
    rhs = C * energy2(a, w, normalize=False)
    return radial.InequalityReport(lhs, rhs, bool(lhs <= rhs * (1 + 1e-9)), C)


# ---------------------------------------------------------------- separable solver

def solve_separable(mu1, mu2, a=0.5):
    """psi = a psi_1(t1) + (1 - a) psi_2(t2) with psi_i' the CDF of mu_i (trapezoid rule).

    Factor slopes fill the rectangle [0, a] x [0, 1 - a] inside D; the rest of D
    sits in the subgradient of the far corner vertex.
    """
    if not 0 < a < 1:
        raise InvalidInput("need 0 < a < 1")
    for m in (mu1, mu2):
        if not m.non_pluripolar:
            raise Unsolvable("factor charges a pluripolar set",
                             {"charge_neg_inf": m.charge_neg_inf, "charge_pos_inf": m.charge_pos_inf})
        if m.total <= 0:
            raise InvalidInput("factor measure is zero")
    if mu1.grid != mu2.grid:
        raise InvalidInput("factors must share a grid")
    p1 = radial.solve(LineMeasure(mu1.grid, mu1.atoms / mu1.total))
    p2 = radial.solve(LineMeasure(mu2.grid, mu2.atoms / mu2.total))
    g = Grid2(mu1.grid.tmin, mu1.grid.tmax, mu1.grid.n + 1)
    return separable_profile(g, a * p1.psi, (1 - a) * p2.psi)


def rectangle(a):
    return np.array([[0.0, 0.0], [a, 0.0], [a, 1 - a], [0.0, 1 - a]])


def separable_marginals(p, a=0.5):
    """Marginals of the Alexandrov measure restricted to the factor rectangle, as 1D measures."""
    areas = cell_areas(p.grid2, p.psi, rectangle(a)) / (a * (1 - a))
    g = p.grid2
    grid = Grid(g.tmin, g.tmax, g.n - 1)
    # vertex k carries the jump at t_k: cell k, with the last vertex folded into the last cell
    def fold(v):
        out = v[:-1].copy()
        out[-1] += v[-1]
        return LineMeasure(grid, np.maximum(out, 0.0))
    return fold(areas.sum(axis=1)), fold(areas.sum(axis=0))


# ---------------------------------------------------------------- random profiles

def random_profile2(grid2, rng, pieces=None):
    """Bounded-type profile: max of a random log-sum-exp over slopes in D and a few affine pieces."""
    T1, T2 = grid2.mesh()
    k = int(rng.integers(1, 4))
    S = np.vstack([SIMPLEX, rng.dirichlet(np.ones(3), k)[:, :2]])
    c = rng.uniform(-3, 3, len(S))
    z = 2.0 * (S[:, 0, None, None] * T1 + S[:, 1, None, None] * T2) + c[:, None, None]
    m = z.max(axis=0)
    psi = 0.5 * (m + np.log(np.exp(z - m).sum(axis=0)))
    npieces = int(rng.integers(0, 3)) if pieces is None else pieces
    for _ in range(npieces):
        s = rng.dirichlet(np.ones(3))[:2]
        b = rng.uniform(-2, 4)
        psi = np.maximum(psi, s[0] * T1 + s[1] * T2 + b)
    p = ToricProfile(grid2, psi)
    return p.shifted(-p.phi.max() - float(rng.uniform(0, 2)))
