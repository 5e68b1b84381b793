"""Command-line interface.

Subcommands:

* ``nsv run --config FILE``    -- single level: integrate and report.
* ``nsv sweep --config FILE``  -- multi-level sweep with Cauchy metrics.
* ``nsv check --traj FILE --phi SPEC`` -- diagnostics on a stored trajectory.
* ``nsv oracle --op NAME``     -- brute-force cross-checks of the fast paths.

Config files are YAML mirroring ``SweepPlan`` / ``SchemeParams`` fields.
"""

from __future__ import annotations

import json
import pathlib
import sys

import click
import numpy as np
import yaml

from . import __version__
from .diagnostics import TestFunction, build_report
from .harness import (
    DatumSpec,
    SweepPlan,
    generate_datum,
    run_plan,
    summary_table,
)
from .snapshots import read_trajectory, write_trajectory
from .stepper import DiscreteTrajectory, SchemeParams, run


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise click.ClickException(f"config {path} must be a mapping")
    return data


def _datum_from_config(cfg: dict) -> DatumSpec:
    datum = cfg.get("datum", {})
    return DatumSpec(
        kind=datum.get("kind", "taylor_green"),
        n=int(datum.get("n", 4)),
        seed=int(datum.get("seed", 0)),
        decay=float(datum.get("decay", 4.0)),
        amplitude=float(datum.get("amplitude", 1.0)),
    )


def _params_from_config(level: dict, defaults: dict) -> SchemeParams:
    merged = {**defaults, **level}
    return SchemeParams(
        n=int(merged["n"]),
        M=int(merged["M"]),
        T=float(merged.get("T", 0.5)),
        alpha=float(merged["alpha"]),
        picard_tol=float(merged.get("picard_tol", 1e-12)),
        picard_max_iter=int(merged.get("picard_max_iter", 200)),
    )


def _plan_from_config(cfg: dict) -> SweepPlan:
    defaults = {k: v for k, v in cfg.items() if k in ("T", "picard_tol", "picard_max_iter")}
    levels = tuple(_params_from_config(lv, defaults) for lv in cfg["levels"])
    phi_cfg = cfg.get("phi", {})
    return SweepPlan(
        datum=_datum_from_config(cfg),
        levels=levels,
        phi_amplitudes=tuple(phi_cfg.get("amplitudes", [0.5])),
        phi_support=tuple(phi_cfg.get("support", [0.1, 0.9])),
        gauss_order=int(cfg.get("gauss_order", 6)),
        output_dir=cfg.get("output_dir"),
    )


def _emit(out_dir: str | None, name: str, payload, binary: bool = False) -> None:
    if out_dir is None:
        if binary:
            return
        click.echo(payload)
        return
    path = pathlib.Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    mode = "wb" if binary else "w"
    with open(path / name, mode) as fh:
        fh.write(payload)
    click.echo(f"wrote {path / name}", err=True)


@click.group()
@click.version_option(__version__, prog_name="nsv")
def main() -> None:
    """Spectral solver and diagnostics for the periodic Voigt-regularized
    Navier-Stokes system."""


@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--output", "out_dir", default=None, help="Directory for reports/snapshots.")
def run_cmd(config_path: str, out_dir: str | None) -> None:
    """Integrate a single level and emit its diagnostics report."""
    cfg = _load_config(config_path)
    level_cfg = cfg["levels"][0] if "levels" in cfg else cfg
    defaults = {k: v for k, v in cfg.items() if k in ("T", "picard_tol", "picard_max_iter")}
    params = _params_from_config(level_cfg, defaults)
    datum = generate_datum(_datum_from_config(cfg), n=params.n)
    traj = run(datum, params)
    phis = [TestFunction.default(params.T)]
    report = build_report(traj, phis=phis)
    out_dir = out_dir or cfg.get("output_dir")
    _emit(out_dir, "report.json", report.to_json())
    if out_dir:
        _emit(out_dir, "ledger.csv", report.to_csv())
    _emit(out_dir, "trajectory.nsv1", write_trajectory(traj), binary=True)


@main.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--output", "out_dir", default=None)
def sweep_cmd(config_path: str, out_dir: str | None) -> None:
    """Run all levels of a sweep plan and emit the summary table."""
    cfg = _load_config(config_path)
    plan = _plan_from_config(cfg)
    result = run_plan(plan)
    out_dir = out_dir or plan.output_dir
    _emit(out_dir, "sweep.json", json.dumps(result.to_json_dict(), indent=2, sort_keys=True))
    _emit(out_dir, "summary.csv", summary_table(result))
    if out_dir:
        for lv in result.levels:
            _emit(
                out_dir,
                f"trajectory_n{lv.params.n}.nsv1",
                write_trajectory(lv.trajectory),
                binary=True,
            )
            _emit(out_dir, f"ledger_n{lv.params.n}.csv", lv.report.to_csv())


@main.command("check")
@click.option("--traj", "traj_path", required=True, type=click.Path(exists=True))
@click.option("--phi", "phi_spec", default="0.5:0.1:0.9",
              help="amplitude:t0_frac:t1_frac of the separable test function.")
def check_cmd(traj_path: str, phi_spec: str) -> None:
    """Recompute diagnostics on a stored trajectory snapshot stream."""
    from .pressure import solve_pressure

    with open(traj_path, "rb") as fh:
        snaps = read_trajectory(fh.read())
    first = snaps[0]
    params = SchemeParams(n=first.n, M=first.M, T=first.T, alpha=first.alpha)
    if len(snaps) != params.M + 1:
        raise click.ClickException(
            f"trajectory has {len(snaps)} states, expected M+1 = {params.M + 1}"
        )
    states = [s.state for s in snaps]
    traj = DiscreteTrajectory(
        params=params,
        states=states,
        pressures=[solve_pressure(s) for s in states[1:]],
    )
    parts = phi_spec.split(":")
    amp, lo, hi = (float(x) for x in (parts + ["0.1", "0.9"])[:3])
    phi = TestFunction.default(params.T, amplitude=amp, support=(lo, hi))
    report = build_report(traj, phis=[phi])
    click.echo(report.to_json())


_ORACLES = {}


def _oracle(name):
    def wrap(fn):
        _ORACLES[name] = fn
        return fn

    return wrap


@_oracle("convective")
def _oracle_convective() -> dict:
    """Padded-grid convective term against the direct O(n^6) convolution."""
    from .nonlinearity import convective, convective_direct

    u = generate_datum(DatumSpec(kind="random_hs", n=4, seed=11))
    fast = convective(u)
    slow = convective_direct(u)
    gap = float(np.abs(fast.coeffs - slow.coeffs).max())
    return {"max_coeff_gap": gap, "ok": gap < 1e-12}


@_oracle("pressure")
def _oracle_pressure() -> dict:
    """Recovered pressure against the closed-form Taylor-Green pressure."""
    from .harness import taylor_green
    from .pressure import solve_pressure

    p = solve_pressure(taylor_green())
    gap = max(
        abs(p.mode((2, 0, 0)) - (-0.125)),
        abs(p.mode((0, 2, 0)) - (-0.125)),
    )
    others = p.coeffs.copy()
    for k in ((2, 0, 0), (0, 2, 0), (-2, 0, 0), (0, -2, 0)):
        others[k[0] + p.kmax, k[1] + p.kmax, k[2] + p.kmax] = 0.0
    stray = float(np.abs(others).max())
    return {"mode_gap": float(gap), "stray_max": stray, "ok": gap < 1e-13 and stray < 1e-13}


@_oracle("lp_quadrature")
def _oracle_lp() -> dict:
    """Grid L^p quadrature against a separable closed form."""
    from math import pi

    from .fields import SpectralField
    from .pressure import lp_norm

    # f = cos(x1): ||f||_p^p = (2 pi)^2 * integral |cos|^p; for p = 2 this is
    # (2 pi)^3 / 2 exactly.
    f = SpectralField.from_modes(1, {(1, 0, 0): 0.5}, vector=False)
    val = lp_norm(f, 2.0, 16)
    ref = ((2 * pi) ** 3 / 2) ** 0.5
    gap = abs(val - ref) / ref
    return {"l2_via_lp": val, "closed_form": ref, "rel_gap": gap, "ok": gap < 1e-12}


@_oracle("shear_decay")
def _oracle_shear() -> dict:
    """Stepper against the closed-form geometric decay of the shear flow."""
    from .harness import shear
    from .fields import norms

    params = SchemeParams(n=2, M=20, T=1.0, alpha=0.3)
    traj = run(shear(), params)
    ratio = (1 + params.alpha**2) / (1 + params.alpha**2 + params.kappa)
    expected = norms(traj.states[0])["l2"] * ratio**params.M
    got = norms(traj.states[-1])["l2"]
    gap = abs(got - expected) / expected
    return {"final_l2": got, "closed_form": expected, "rel_gap": gap, "ok": gap < 1e-12}


@main.command("oracle")
@click.option("--op", "op_name", required=True, type=click.Choice(sorted(_ORACLES)))
def oracle_cmd(op_name: str) -> None:
    """Run one of the brute-force oracles and report the comparison."""
    result = _ORACLES[op_name]()
    click.echo(json.dumps({"oracle": op_name, **result}, indent=2, sort_keys=True))
    if not result.get("ok", False):
        sys.exit(1)


if __name__ == "__main__":
    main()
