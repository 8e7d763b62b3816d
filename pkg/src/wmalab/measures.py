"""Positive measures on the extended log-line and on planar vertex grids.

A LineMeasure stores one atom per cell midpoint of a uniform grid plus the
charges sitting at t = -inf (the point z = 0) and t = +inf (z = infinity).
Those two points are the only polar sets an S^1-invariant measure can see.
"""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTruncation, InvalidInput, OutOfRange, PreconditionViolation


@dataclass(frozen=True)
class Grid:
    """Uniform grid t_0 < ... < t_n on [tmin, tmax] with n cells."""

    tmin: float
    tmax: float
    n: int

    def __post_init__(self):
        if not (self.tmax > self.tmin) or int(self.n) < 2:
            raise InvalidInput(f"bad grid {self}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "tmin", float(self.tmin))
        object.__setattr__(self, "tmax", float(self.tmax))

    @property
    def dt(self):
        return (self.tmax - self.tmin) / self.n

    @property
    def points(self):
        return np.linspace(self.tmin, self.tmax, self.n + 1)

    @property
    def midpoints(self):
        return self.tmin + (np.arange(self.n) + 0.5) * self.dt

    def to_dict(self):
        return {"tmin": self.tmin, "tmax": self.tmax, "n": self.n}

    @classmethod
    def from_dict(cls, d):
        return cls(d["tmin"], d["tmax"], d["n"])

    @classmethod
    def parse(cls, spec):
        """'tmin:tmax:n' -> Grid."""
        try:
            a, b, n = spec.split(":")
            return cls(float(a), float(b), int(float(n)))
        except ValueError as exc:
            raise InvalidInput(f"grid spec must be tmin:tmax:n, got {spec!r}") from exc


@dataclass(frozen=True)
class LineMeasure:
    grid: Grid
    atoms: np.ndarray
    charge_neg_inf: float = 0.0
    charge_pos_inf: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.shape != (self.grid.n,):
            raise InvalidInput(f"expected {self.grid.n} atoms, got shape {atoms.shape}")
        if np.any(atoms < 0) or self.charge_neg_inf < 0 or self.charge_pos_inf < 0:
            raise InvalidInput("measure masses must be nonnegative")
        object.__setattr__(self, "atoms", atoms)

    @property
    def total(self):
        return float(np.sum(self.atoms)) + self.charge_neg_inf + self.charge_pos_inf

    @property
    def interior_mass(self):
        return float(np.sum(self.atoms))

    @property
    def non_pluripolar(self):
        return self.charge_neg_inf == 0 and self.charge_pos_inf == 0

    @property
    def max_cell_mass(self):
        return float(np.max(self.atoms)) if self.grid.n else 0.0

    def cdf_points(self):
        """CDF at every grid point t_0..t_n."""
        out = np.empty(self.grid.n + 1)
        out[0] = self.charge_neg_inf
        out[1:] = self.charge_neg_inf + np.cumsum(self.atoms)
        return out

    def to_dict(self):
        return {"grid": self.grid.to_dict(), "atoms": self.atoms.tolist(),
                "charge_neg_inf": self.charge_neg_inf, "charge_pos_inf": self.charge_pos_inf}

    @classmethod
    def from_dict(cls, d):
        return cls(Grid.from_dict(d["grid"]), np.asarray(d["atoms"], dtype=float),
                   float(d.get("charge_neg_inf", 0.0)), float(d.get("charge_pos_inf", 0.0)))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self):
        buf = io.StringIO()
        g = self.grid
        buf.write(f"# tmin={g.tmin!r} tmax={g.tmax!r} n={g.n} "
                  f"charge_neg_inf={self.charge_neg_inf!r} charge_pos_inf={self.charge_pos_inf!r}\n")
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t_midpoint", "mass"])
        for t, m in zip(g.midpoints, self.atoms):
            wr.writerow([repr(float(t)), repr(float(m))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        lines = text.splitlines()
        if not lines or not lines[0].startswith("#"):
            raise InvalidInput("measure CSV must start with a '# tmin=... ' header")
        head = dict(kv.split("=", 1) for kv in lines[0][1:].split())
        grid = Grid(float(head["tmin"]), float(head["tmax"]), int(head["n"]))
        rows = list(csv.DictReader(lines[1:]))
        atoms = np.array([float(r["mass"]) for r in rows])
        return cls(grid, atoms, float(head["charge_neg_inf"]), float(head["charge_pos_inf"]))


def from_density(grid, density, charge_neg_inf=0.0, charge_pos_inf=0.0):
    """Atoms = density(midpoint) * dt, i.e. midpoint-rule discretization."""
    return LineMeasure(grid, np.asarray(density(grid.midpoints), dtype=float) * grid.dt,
                       charge_neg_inf, charge_pos_inf)


def from_cdf(grid, F, charge_neg_inf=0.0, charge_pos_inf=0.0):
    """Atoms = F(t_{k+1}) - F(t_k): exact cell masses of an absolutely continuous law."""
    vals = np.asarray(F(grid.points), dtype=float)
    return LineMeasure(grid, np.maximum(np.diff(vals), 0.0), charge_neg_inf, charge_pos_inf)


def cdf(m, t):
    """charge_neg_inf + sum of atoms whose midpoint is <= t."""
    g = m.grid
    t_arr = np.asarray(t, dtype=float)
    tol = 1e-12 * max(1.0, abs(g.tmin), abs(g.tmax))
    if np.any(t_arr < g.tmin - tol) or np.any(t_arr > g.tmax + tol):
        raise OutOfRange(f"t outside [{g.tmin}, {g.tmax}]")
    # number of midpoints <= t
    k = np.clip(np.floor((t_arr - g.tmin) / g.dt - 0.5 + 1e-12).astype(int) + 1, 0, g.n)
    cum = np.concatenate([[0.0], np.cumsum(m.atoms)])
    out = m.charge_neg_inf + cum[k]
    return float(out) if out.ndim == 0 else out


def _same_grid(a, b):
    return a.tmin == b.tmin and a.tmax == b.tmax and a.n == b.n


def kolmogorov_distance(a, b):
    """sup_k |F_a(t_k) - F_b(t_k)| plus the charge differences at -inf and +inf."""
    if not _same_grid(a.grid, b.grid):
        raise InvalidInput("kolmogorov_distance needs measures on the same grid")
    d = np.max(np.abs(a.cdf_points() - b.cdf_points()))
    return float(d + abs(a.charge_neg_inf - b.charge_neg_inf) + abs(a.charge_pos_inf - b.charge_pos_inf))


def scale_min_density(m, f, j):
    """c_j min(f, j) m, with c_j chosen so the total equals that of f m."""
    if not m.non_pluripolar:
        raise PreconditionViolation("truncation is defined for non-pluripolar base measures")
    f = np.asarray(f, dtype=float)
    if f.shape != m.atoms.shape or np.any(f < 0):
        raise InvalidInput("f must be a nonnegative cellwise density")
    trunc = np.minimum(f, j) * m.atoms
    s = float(np.sum(trunc))
    if s <= 0:
        raise DegenerateTruncation("min(f, j) m vanishes identically")
    target = float(np.sum(f * m.atoms))
    c = target / s
    return LineMeasure(m.grid, c * trunc, 0.0, 0.0, {"c_j": c, "j": float(j)})


def reweight(m, f):
    """f m (no truncation)."""
    return LineMeasure(m.grid, np.asarray(f, dtype=float) * m.atoms, m.charge_neg_inf, m.charge_pos_inf)


@dataclass(frozen=True)
class PlanarMeasure:
    """Masses on the vertices of a square grid; total_norm is mass over Leb(simplex)."""

    tmin: float
    tmax: float
    n: int
    vertex_masses: np.ndarray

    @property
    def total_norm(self):
        return float(np.sum(self.vertex_masses))

    @property
    def axis(self):
        return np.linspace(self.tmin, self.tmax, self.n)

    def to_csv(self):
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["i", "j", "t1", "t2", "mass"])
        ax = self.axis
        for i in range(self.n):
            for j in range(self.n):
                wr.writerow([i, j, repr(float(ax[i])), repr(float(ax[j])), repr(float(self.vertex_masses[i, j]))])
        return buf.getvalue()

    def to_dict(self):
        return {"grid2": {"tmin": self.tmin, "tmax": self.tmax, "n": self.n},
                "vertex_masses": self.vertex_masses.ravel().tolist(), "total_norm": self.total_norm}
