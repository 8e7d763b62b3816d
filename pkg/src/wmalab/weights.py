"""Admissible weights chi: R^- -> R^- for weighted Monge-Ampere energies.

Two classes are modelled:

* ``ConvexLow``: convex increasing, chi(0) = 0, chi(-inf) = -inf.
* ``ConcaveHigh``: concave increasing with |t chi'(t)| <= M |chi(t)|.

Properties that the theory states for every t are checked on a logarithmic
probe grid t in {-1, ..., -1e6}.
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConstructionFailure, InvalidInput, InvalidParameter

CONVEX_LOW = "ConvexLow"
CONCAVE_HIGH = "ConcaveHigh"

LITTLE_O = "LittleO"
BIG_O = "BigO"
NEITHER = "Neither"

PROBE_T = -np.logspace(0, 6, 121)
LEMMA_EPS = np.linspace(0.1, 1.0, 10)
LEMMA_T = -np.logspace(np.log10(1.5), 6, 100)

_RTOL = 1e-12


@dataclass(frozen=True)
class Weight:
    kind: str
    fn: object = field(repr=False, compare=False)
    dfn: object = field(repr=False, compare=False)
    M: float = None
    quasi_homog: tuple = None
    label: str = ""
    params: dict = field(default_factory=dict, compare=False)
    family: str = "custom"

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = self.fn(np.minimum(t, 0.0))
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return self.evaluate(t)

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        out = self.dfn(np.minimum(t, 0.0))
        return float(out) if out.ndim == 0 else out

    def as_kind(self, kind, M=None):
        """Same function re-declared under another class tag."""
        if kind == CONCAVE_HIGH and M is None:
            M = self.M if self.M is not None else 1.0
        return Weight(kind, self.fn, self.dfn, M if kind == CONCAVE_HIGH else None,
                      self.quasi_homog, self.label, dict(self.params), self.family)

    def to_dict(self):
        return {"label": self.label, "kind": self.kind, "params": dict(self.params, family=self.family)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def custom_weight(fn, dfn, kind, M=None, label="custom"):
    if kind not in (CONVEX_LOW, CONCAVE_HIGH):
        raise InvalidParameter(f"unknown kind {kind!r}")
    if kind == CONCAVE_HIGH and (M is None or M <= 0):
        raise InvalidParameter("ConcaveHigh needs M > 0")
    return Weight(kind, lambda t: np.asarray(fn(t), dtype=float),
                  lambda t: np.asarray(dfn(t), dtype=float), M, None, label, {})


# ---------------------------------------------------------------- built-ins

def make_power(p):
    """chi(t) = -(-t)^p."""
    p = float(p)
    if not p > 0 or not np.isfinite(p):
        raise InvalidParameter(f"power weight needs p > 0, got {p}")

    def fn(t):
        return -np.power(-t, p)

    def dfn(t):
        with np.errstate(divide="ignore"):
            return p * np.power(-t, p - 1.0)

    label = f"power:p={p:g}"
    if p <= 1:
        return Weight(CONVEX_LOW, fn, dfn, None, None, label, {"p": p}, "power")
    return Weight(CONCAVE_HIGH, fn, dfn, p, (1.0, p, 0.0), label, {"p": p}, "power")


def _log_map(t):
    return -np.log1p(-t)


def make_log_iterated(m):
    """m-fold composition of L(t) = -log(1 - t)."""
    if int(m) != m or m < 1:
        raise InvalidParameter(f"log-iterated weight needs an integer m >= 1, got {m}")
    m = int(m)

    def fn(t):
        for _ in range(m):
            t = _log_map(t)
        return t

    def dfn(t):
        d = np.ones_like(t)
        for _ in range(m):
            d = d / (1.0 - t)
            t = _log_map(t)
        return d

    return Weight(CONVEX_LOW, fn, dfn, None, None, f"logiter:m={m}", {"m": m}, "logiter")


def _qh_log_slope_excess():
    # sup_x x / ((e + x) log(e + x)) over x > 0
    res = minimize_scalar(lambda u: -np.exp(u) / ((np.e + np.exp(u)) * np.log(np.e + np.exp(u))),
                          bounds=(-5.0, 10.0), method="bounded", options={"xatol": 1e-12})
    return -res.fun


def _qh_ratio(eps, x, p, a):
    # |chi(-eps x)| / |chi(-x)|
    return eps ** p * (np.log(np.e + eps * x) / np.log(np.e + x)) ** a


def make_quasi_homog(p, a):
    """chi(t) = -(-t)^p [log(e - t)]^a, a concave high-energy weight."""
    p, a = float(p), float(a)
    if not p >= 1 or not a > 0:
        raise InvalidParameter(f"quasi-homogeneous weight needs p >= 1 and a > 0, got p={p}, a={a}")

    def fn(t):
        return -np.power(-t, p) * np.power(np.log(np.e - t), a)

    def dfn(t):
        x = -t
        lg = np.log(np.e + x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = p * np.power(x, p - 1.0) * lg ** a + a * np.power(x, p) * lg ** (a - 1.0) / (np.e + x)
        return out

    # log-derivative t chi'/chi = p + a x/((e+x) log(e+x)) lies in [p, p + a*smax]
    smax = _qh_log_slope_excess()
    M = p + a * smax * (1 + 1e-12)
    if a * smax < 1:
        qh = (1.0, M, M - p)
    else:
        # trade a constant C > 1 for q = 1/2
        Mq, q = p + 0.5, 0.5
        e_grid = np.logspace(-8, 0, 400)[:, None]
        x_grid = np.logspace(0, 8, 400)[None, :]
        C = float(np.max(e_grid ** Mq / _qh_ratio(e_grid, x_grid, p, a))) * (1 + 1e-9)
        qh = (max(C, 1.0), Mq, q)

    w = Weight(CONCAVE_HIGH, fn, dfn, M, qh, f"qh:p={p:g},a={a:g}", {"p": p, "a": a}, "qh")
    witness = _sandwich_witness(w)
    if witness is not None:
        raise ConstructionFailure("quasi-homogeneity sandwich fails on the probe grid", witness)
    return w


def _sandwich_witness(w):
    C, M, q = w.quasi_homog
    eps = np.concatenate([np.logspace(-6, 0, 61)])[:, None]
    t = PROBE_T[None, :]
    mid = np.abs(w(eps * t))
    base = np.abs(w(t))
    lo = eps ** M * base / C
    hi = C * eps ** (M - q) * base
    bad = (lo > mid * (1 + _RTOL)) | (mid > hi * (1 + _RTOL))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        return (float(eps[i, 0]), float(t[0, j]))
    return None


# ---------------------------------------------------------------- validation

@dataclass
class CheckResult:
    name: str
    passed: bool
    slack: float
    witness: object = None


@dataclass
class ValidationReport:
    label: str
    kind: str
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def get(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"label": self.label, "kind": self.kind, "passed": self.passed,
                "checks": [{"name": c.name, "passed": c.passed, "slack": c.slack,
                            "witness": c.witness} for c in self.checks]}


def _check(name, slack, witness_t):
    slack = float(np.min(slack))
    return CheckResult(name, slack >= 0, slack, None if slack >= 0 else witness_t)


def validate(w):
    t = PROBE_T
    chi = w(t)
    dchi = w.derivative(t)
    abschi = np.abs(chi)
    # adapted weights carry central-difference derivatives, accurate to O(h)
    dtol = 1e-6 if w.family == "young" else _RTOL
    checks = []

    v0 = abs(w(0.0))
    checks.append(CheckResult("normalized", v0 <= 1e-15, -v0))

    inc = np.diff(abschi)
    i = int(np.argmin(inc))
    checks.append(_check("increasing", inc / np.maximum(abschi[1:], 1e-300), float(t[i + 1])))
    checks.append(CheckResult("unbounded-trend", bool(abschi[-1] > abschi[0] and dchi[-1] > 0),
                              float(abschi[-1] - abschi[0])))

    # divided differences of chi along increasing t
    ts = t[::-1]
    cs = chi[::-1]
    slopes = np.diff(cs) / np.diff(ts)
    ds = np.diff(slopes)
    scale = np.maximum(np.abs(slopes[1:]) + np.abs(slopes[:-1]), 1e-300)
    rel = ds / scale
    if w.kind == CONVEX_LOW:
        sl = rel + 1e-9
        i = int(np.argmin(sl))
        checks.append(_check("convexity", sl, float(ts[i + 1])))
        tchi = -t * dchi
        sl = np.minimum(tchi, abschi * (1 + dtol) - tchi) / np.maximum(abschi, 1e-300)
        i = int(np.argmin(sl))
        checks.append(_check("slope-bound", sl, float(t[i])))
    else:
        sl = 1e-9 - rel
        i = int(np.argmin(sl))
        checks.append(_check("concavity", sl, float(ts[i + 1])))
        tchi = np.abs(t * dchi)
        sl = (w.M * abschi * (1 + _RTOL) - tchi) / np.maximum(abschi, 1e-300)
        i = int(np.argmin(sl))
        checks.append(_check("growth-bound", sl, float(t[i])))
        checks.append(weak_homogeneity_check(w))
    return ValidationReport(w.label, w.kind, checks)


def _growth_M(w):
    # a convex low weight satisfies |t chi'| <= |chi|, i.e. the growth bound with M = 1
    return 1.0 if w.M is None else w.M


def weak_homogeneity_check(w, eps=LEMMA_EPS, ts=LEMMA_T):
    """eps^M |chi(t)| <= |chi(eps t)| <= eps |chi(t)| for eps in (0,1], t < -1."""
    e = np.asarray(eps, dtype=float)[:, None]
    t = np.asarray(ts, dtype=float)[None, :]
    base = np.abs(w(t))
    mid = np.abs(w(e * t))
    lo = e ** _growth_M(w) * base
    hi = e * base
    sl = np.minimum(mid * (1 + _RTOL) - lo, hi * (1 + _RTOL) - mid) / base
    k = np.unravel_index(np.argmin(sl), sl.shape)
    return _check("weak-homogeneity", sl, (float(e[k[0], 0]), float(t[0, k[1]])))


def doubling_checks(w, ts=PROBE_T):
    """Doubling relations of a concave weight on probes.

    Returns slacks of
      |chi(2t)| >= 2|chi(t)|        (concavity with chi(0)=0)
      chi'(2t) <= M chi'(t)         (derivative doubling bound)
    """
    t = np.asarray(ts, dtype=float)
    a2, a1 = np.abs(w(2 * t)), np.abs(w(t))
    d2, d1 = w.derivative(2 * t), w.derivative(t)
    s_val = (a2 * (1 + _RTOL) - 2 * a1) / a1
    s_der = (_growth_M(w) * d1 * (1 + _RTOL) - d2) / d1
    i, j = int(np.argmin(s_val)), int(np.argmin(s_der))
    return (_check("value-doubling", s_val, float(t[i])),
            _check("derivative-doubling", s_der, float(t[j])))


def growth_dominates(w1, w2):
    """Classify |w1/w2| at -inf: LittleO, BigO or Neither (probe-grid trend)."""
    r = np.abs(w1(PROBE_T)) / np.abs(w2(PROBE_T))
    lr = np.log(r)
    n = len(PROBE_T)
    dec = n // 6  # one decade
    tail = lr[-dec - 1:]
    d = tail[-1] - tail[0]
    if d < -1e-3 and np.all(np.diff(tail) <= 1e-12):
        return LITTLE_O
    if d <= 1e-3:
        return BIG_O
    return NEITHER


# ---------------------------------------------------------------- Young-adapted weights

class _PiecewiseGamma:
    """Convex piecewise-linear gamma with gamma(0)=0 and slope 2^k on [L_k, L_{k+1})."""

    def __init__(self, levels):
        self.L = np.asarray(levels, dtype=float)  # L[0] = 0
        self.slopes = 2.0 ** np.arange(len(self.L))
        vals = np.zeros(len(self.L))
        vals[1:] = np.cumsum(self.slopes[:-1] * np.diff(self.L))
        self.vals = vals

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        k = np.clip(np.searchsorted(self.L, y, side="right") - 1, 0, len(self.L) - 1)
        return self.vals[k] + self.slopes[k] * (y - self.L[k])

    def conjugate(self, z):
        # gamma*(z) = max_k (z L_k - gamma(L_k)); the optimum is L_k with 2^{k-1} <= z <= 2^k
        z = np.asarray(z, dtype=float)
        k = np.clip(np.ceil(np.log2(np.maximum(z, 1e-300))), 0, len(self.L) - 1).astype(int)
        k = np.where(z <= 1.0, 0, k)
        return np.maximum(z * self.L[k] - self.vals[k], 0.0)

    def conjugate_inverse(self, s):
        """sup{z : gamma*(z) <= s}, solved on the linear piece containing s."""
        s = np.asarray(s, dtype=float)
        knots = 2.0 ** np.arange(len(self.L))          # z-breakpoints 1, 2, 4, ...
        gk = knots * self.L - self.vals                  # gamma*(2^k), attained at L_k
        k = np.clip(np.searchsorted(gk, s, side="left"), 1, len(self.L) - 1)
        z = (s + self.vals[k]) / self.L[k]
        return np.where(s <= 0, 1.0, z)

    def conjugate_inverse_excess(self, s):
        """conjugate_inverse(s) - 1 without cancellation (the first piece has vals = L)."""
        s = np.asarray(s, dtype=float)
        knots = 2.0 ** np.arange(len(self.L))
        gk = knots * self.L - self.vals
        k = np.clip(np.searchsorted(gk, s, side="left"), 1, len(self.L) - 1)
        return np.where(s <= 0, 0.0, (s + (self.vals[k] - self.L[k])) / self.L[k])


def _tail_levels(f, w, nlev=400):
    f = np.asarray(f, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(f)[::-1]
    fs = f[order]
    mass = fs * w[order]
    tail = np.cumsum(mass)            # tail[i] = sum over f >= fs[i]
    total = tail[-1] if len(tail) else 0.0
    levels = [0.0]
    prev = 0.0
    for k in range(1, nlev):
        target = total * 4.0 ** (-k)
        # smallest y such that sum_{f > y} f w <= target
        if total > 0:
            i = np.searchsorted(tail, target, side="right")   # first i with tail[i] > target
            y = fs[i] if i < len(fs) else 0.0
        else:
            y = 0.0
        y = max(y, 2.0 * prev, 1.0 if k == 1 else 0.0)
        if y * 2.0 ** (k + 1) > 1e290:  # gamma values would overflow; the last slope continues
            break
        levels.append(y)
        prev = y
    return np.array(levels)


def young_adapted_weight(f_values, base_masses):
    """Weight chi with (-chi)(t) f <= -t + gamma(f) for t <= 0 and sum gamma(f) w < inf.

    gamma has slope 2^k between consecutive levels L_k, where L_k is the smallest
    level whose tail sum sum_{f > L_k} f w is at most 4^-k of the total; levels at
    least double so that gamma is superlinear beyond the data.
    """
    f = np.asarray(f_values, dtype=float)
    w = np.asarray(base_masses, dtype=float)
    if f.shape != w.shape:
        raise InvalidInput("f_values and base_masses differ in length")
    if np.any(~np.isfinite(f)) or np.any(~np.isfinite(w)):
        raise InvalidInput("f is not integrable against the base measure (non-finite values)")
    if np.any(f < 0) or np.any(w < 0):
        raise InvalidInput("densities and masses must be nonnegative")
    with np.errstate(over="ignore"):
        total = float(np.sum(f * w))
    if not np.isfinite(total):
        raise InvalidInput("f is not integrable against the base measure")

    gamma = _PiecewiseGamma(_tail_levels(f, w))
    # gamma*(z) = 0 on [0, 1], so chi = -(G - 1) with G the inverse of gamma*

    def fn(t):
        return -gamma.conjugate_inverse_excess(-t)

    def dfn(t):
        h = np.where(t == 0, 1e-6, 1e-6 * np.abs(t))
        return (fn(np.minimum(t + h, 0.0)) - fn(t - h)) / (np.minimum(t + h, 0.0) - (t - h))

    wt = Weight(CONVEX_LOW, fn, dfn, None, None, "young-adapted",
                {"levels": gamma.L[gamma.L < 1e300].tolist()}, "young")
    object.__setattr__(wt, "gamma", gamma)
    object.__setattr__(wt, "gamma_integral", float(np.sum(gamma(f) * w)))
    return wt


def young_inequality_slack(wt, t, f):
    """-t + gamma(f) - (-chi)(t) f, elementwise; nonnegative when the inequality holds."""
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    return -t + wt.gamma(f) - np.abs(wt(t)) * f


# ---------------------------------------------------------------- parsing / serialization

def parse_weight(spec):
    """Build a weight from 'power:p=0.5', 'logiter:m=2' or 'qh:p=1,a=1'."""
    try:
        fam, _, rest = spec.partition(":")
        kv = dict(item.split("=", 1) for item in rest.split(",") if item)
        fam = fam.strip().lower()
        if fam == "power":
            return make_power(float(kv["p"]))
        if fam == "logiter":
            return make_log_iterated(int(kv["m"]))
        if fam == "qh":
            return make_quasi_homog(float(kv["p"]), float(kv["a"]))
    except (KeyError, ValueError) as exc:
        if isinstance(exc, InvalidParameter | ConstructionFailure):
            raise
        raise InvalidParameter(f"cannot parse weight {spec!r}") from exc
    raise InvalidParameter(f"unknown weight family in {spec!r}")


def weight_from_dict(d):
    params = dict(d.get("params", {}))
    fam = params.pop("family", None)
    if fam == "power":
        return make_power(params["p"])
    if fam == "logiter":
        return make_log_iterated(params["m"])
    if fam == "qh":
        return make_quasi_homog(params["p"], params["a"])
    if fam == "young":
        gamma = _PiecewiseGamma(params["levels"])
        fn = lambda t: -gamma.conjugate_inverse_excess(-t)  # noqa: E731
        wt = Weight(CONVEX_LOW, fn, None, None, None, d.get("label", "young-adapted"),
                    {"levels": list(params["levels"])}, "young")
        h = lambda t: np.where(t == 0, 1e-6, 1e-6 * np.abs(t))  # noqa: E731
        object.__setattr__(wt, "dfn", lambda t: (fn(np.minimum(t + h(t), 0.0)) - fn(t - h(t)))
                           / (np.minimum(t + h(t), 0.0) - (t - h(t))))
        object.__setattr__(wt, "gamma", gamma)
        return wt
    raise InvalidInput(f"cannot rebuild weight from {d!r}")
