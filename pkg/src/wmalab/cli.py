"""Command line: wmalab [--seed --grid --out --config] COMMAND ...

Exit codes: 0 pass, 1 check failure (or a domain error such as an unsolvable
target), 2 usage, 3 I/O.
"""

import csv
import io
import json
import os
import sys

import click
import numpy as np

from . import harness as H
from . import measures as M
from . import radial as R
from . import toric as T
from .errors import LabError
from .weights import parse_weight

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class IOFailure(click.ClickException):
    exit_code = EXIT_IO


class CheckFailure(click.ClickException):
    exit_code = EXIT_FAIL


def _read_text(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror}")


def _write_text(path, text):
    if path in (None, "-"):
        click.echo(text, nl=False)
        return
    try:
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror}")


def load_profile(path):
    """Radial profile JSON {grid, psi, slope_neg, slope_pos} or toric JSON {grid2, psi}."""
    text = _read_text(path)
    try:
        d = json.loads(text)
        if "grid2" in d:
            return T.ToricProfile.from_dict(d)
        return R.validate_profile(R.RadialProfile.from_dict(d))
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, LabError):
            raise CheckFailure(str(exc))
        raise IOFailure(f"{path} is not a profile file: {exc}")


def load_measure(path):
    text = _read_text(path)
    try:
        if path.endswith(".csv"):
            return M.LineMeasure.from_csv(text)
        return M.LineMeasure.from_json(text)
    except (ValueError, KeyError, TypeError) as exc:
        raise IOFailure(f"{path} is not a measure file: {exc}")


def _csv(header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(header)
    for r in rows:
        wr.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _weight(spec):
    try:
        return parse_weight(spec)
    except LabError as exc:
        raise click.BadParameter(str(exc))


@click.group()
@click.option("--seed", type=int, default=None, help="Master seed (per-item seeds derive from it).")
@click.option("--grid", default=None, help="1D grid tmin:tmax:n.")
@click.option("--out", default=None, help="Output file or directory.")
@click.option("--config", "config_path", default=None, help="key=value config file; flags take precedence.")
@click.pass_context
def main(ctx, seed, grid, out, config_path):
    """Weighted Monge-Ampere energy laboratory."""
    file_vals = {}
    if config_path:
        if not os.path.exists(config_path):
            raise IOFailure(f"cannot read {config_path}")
        try:
            file_vals = H.read_config(config_path)
        except LabError as exc:
            raise click.UsageError(str(exc))
    ctx.obj = {"file": file_vals, "seed": seed, "grid": grid, "out": out}


def _config(ctx, **extra):
    o = ctx.obj
    try:
        return H.make_config(o["file"], seed=o["seed"], grid=o["grid"], out=o["out"], **extra)
    except (LabError, TypeError, ValueError) as exc:
        raise click.UsageError(str(exc))


@main.command()
@click.option("--trials", type=int, default=None)
@click.option("--tolerance", type=float, default=None, help="Multiplier on eps_grid tolerances.")
@click.option("--workers", type=int, default=None)
@click.option("--item", "items", multiple=True, help="Run only these suite items.")
@click.pass_context
def verify(ctx, trials, tolerance, workers, items):
    """Run the property suites; writes <out>/verify.json."""
    cfg = _config(ctx, trials=trials, tolerance=tolerance, workers=workers)
    bad = set(items) - set(H.SUITE)
    if bad:
        raise click.UsageError(f"unknown items {sorted(bad)}; choose from {sorted(H.SUITE)}")
    res = H.run_suite(cfg, items or None)
    path = cfg.out if cfg.out.endswith(".json") else os.path.join(cfg.out, "verify.json")
    try:
        H.write_json(res, path)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc.strerror}")
    for r in res["records"]:
        click.echo(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}  [{r['anchor']}]  slack={r['slack']}")
    ctx.exit(EXIT_OK if res["passed"] else EXIT_FAIL)


@main.command("capacity-curve")
@click.argument("profile_file")
@click.argument("weight")
@click.option("--tmin", type=float, default=1.0)
@click.option("--tmax", type=float, default=1e3)
@click.option("--count", type=int, default=25)
@click.pass_context
def capacity_curve(ctx, profile_file, weight, tmin, tmax, count):
    """CSV rows t, Cap(phi < -t), |t chi(-t)|^-1, product."""
    w = _weight(weight)
    p = load_profile(profile_file)
    if not isinstance(p, R.RadialProfile):
        raise click.UsageError("capacity curves are computed for radial profiles")
    if not 0 < tmin < tmax or count < 1:
        raise click.UsageError("need 0 < tmin < tmax and count >= 1")
    try:
        rows = H.capacity_curve_rows(p, w, np.geomspace(tmin, tmax, count))
    except LabError as exc:
        raise CheckFailure(str(exc))
    _write_text(ctx.obj["out"], _csv(["t", "capacity", "inverse_t_chi", "product"], rows))


@main.command()
@click.argument("measure_file")
@click.argument("out_profile")
def solve(measure_file, out_profile):
    """Solve MA(phi) = mu for a radial target; prints the round-trip distance."""
    mu = load_measure(measure_file)
    try:
        p = R.solve(mu)
    except LabError as exc:
        raise CheckFailure(f"{exc.code}: {exc}")
    d = M.kolmogorov_distance(R.ma_measure(p), mu)
    _write_text(out_profile, p.to_json())
    click.echo(f"roundtrip_kolmogorov={d!r} eps_grid={R.eps_grid(mu)!r}")


@main.command()
@click.pass_context
def examples(ctx):
    """Write the example tables (CSV) into --out (default: examples_out)."""
    out = ctx.obj["out"] or "examples_out"
    g = M.Grid.parse(ctx.obj["grid"]) if ctx.obj["grid"] else R.DEFAULT_GRID
    _write_text(os.path.join(out, "slow_singularity_density.csv"),
                _csv(["log_abs_z", "density", "normalized_ratio"], H.slow_density_rows(g)))
    _write_text(os.path.join(out, "attenuation.csv"),
                _csv(["q", "non_pluripolar_mass", "lelong_at_0", "member", "gradient_energy"],
                     H.attenuation_rows(g)))
    _write_text(os.path.join(out, "log_composition_capacity.csv"),
                _csv(["t", "capacity"], H.log_composition_rows(g)))
    click.echo(f"wrote 3 tables to {out}")


@main.command()
@click.argument("profile_file")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv")
@click.pass_context
def ma(ctx, profile_file, fmt):
    """Monge-Ampere measure of a radial or toric profile."""
    p = load_profile(profile_file)
    try:
        m = T.alexandrov_ma(p) if isinstance(p, T.ToricProfile) else R.ma_measure(p)
    except LabError as exc:
        raise CheckFailure(str(exc))
    text = m.to_csv() if fmt == "csv" else json.dumps(m.to_dict()) + "\n"
    _write_text(ctx.obj["out"], text)


@main.command()
@click.argument("profile_file")
@click.argument("weight")
def energy(profile_file, weight):
    """Weighted energy E_chi of a radial or toric profile (inf when divergent)."""
    w = _weight(weight)
    p = load_profile(profile_file)
    try:
        e = T.energy2(p, w) if isinstance(p, T.ToricProfile) else R.energy(p, w)
    except LabError as exc:
        raise CheckFailure(str(exc))
    click.echo(repr(float(e)))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
