"""Sweep harness: initial data, coupled parameter schedules, multi-level runs
with cross-level convergence metrics."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ScheduleViolation
from .fields import (
    SpectralField,
    ball_mask,
    k_squared,
    leray_project,
    norms,
)
from .diagnostics import (
    DiagnosticsReport,
    TestFunction,
    build_report,
)
from .stepper import DiscreteTrajectory, SchemeParams, run


# -- initial data -------------------------------------------------------------


@dataclass(frozen=True)
class DatumSpec:
    """Reproducible initial datum.

    ``kind`` is one of ``taylor_green``, ``shear``, ``random_hs``.  For
    ``random_hs`` the coefficients are complex Gaussian damped by
    ``|k|^{-decay}``, projected divergence-free, and rescaled to the target
    L^2 norm; the result is a deterministic function of ``seed``.
    """

    kind: str = "taylor_green"
    n: int = 4
    seed: int = 0
    decay: float = 4.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in ("taylor_green", "shear", "random_hs"):
            raise ValueError(f"unknown datum kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("datum support n must be positive")


def taylor_green(amplitude: float = 1.0) -> SpectralField:
    """``(cos x1 sin x2, -sin x1 cos x2, 0)`` scaled by ``amplitude``."""
    a = 0.25 * amplitude
    return SpectralField.from_modes(
        1,
        {
            (1, 1, 0): (-1j * a, 1j * a, 0.0),
            (1, -1, 0): (1j * a, 1j * a, 0.0),
        },
    )


def shear(amplitude: float = 1.0) -> SpectralField:
    """``(sin x2, 0, 0)`` scaled by ``amplitude``; has zero convective term."""
    a = amplitude / (2j)
    return SpectralField.from_modes(1, {(0, 1, 0): (a, 0.0, 0.0)})


def generate_datum(spec: DatumSpec, n: int | None = None) -> SpectralField:
    """Build the datum; ``n`` overrides the support ball for ``random_hs``."""
    if spec.kind == "taylor_green":
        return taylor_green(spec.amplitude)
    if spec.kind == "shear":
        return shear(spec.amplitude)
    n = n or spec.n
    rng = np.random.default_rng(spec.seed)
    size = 2 * n + 1
    shape = (3, size, size, size)
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    k2 = k_squared(n)
    c *= np.where(k2 > 0, np.maximum(k2, 1.0) ** (-spec.decay / 2.0), 0.0)
    c = np.where(ball_mask(n, n), c, 0.0)
    c = 0.5 * (c + np.conj(c[:, ::-1, ::-1, ::-1]))
    u = leray_project(SpectralField(c, validate=False))
    if spec.amplitude == 0.0:
        return SpectralField.zeros(n)
    scale = spec.amplitude / norms(u)["l2"]
    return SpectralField(u.coeffs * scale, validate=False)


# -- coupled schedules ---------------------------------------------------------


def default_schedule(n_list, epsilon: float = 1.0 / 12.0, horizon: float = 1.0):
    """Levels ``(n, M=n, alpha=n^{-2/3-epsilon})`` so that ``n alpha^3 -> 0``.

    ``epsilon > 0`` is required: at ``alpha = n^{-2/3}`` exactly, the coupling
    ``n alpha^3`` is constant instead of vanishing.
    """
    if epsilon <= 0:
        raise ScheduleViolation("epsilon must be positive")
    return [
        SchemeParams(n=n, M=n, T=horizon, alpha=float(n) ** (-(2.0 / 3.0 + epsilon)))
        for n in n_list
    ]


def validate_schedule(levels) -> None:
    """Enforce the level invariants: ``n`` strictly increasing, ``alpha``
    strictly decreasing, ``M`` monotone increasing, and the coupling
    ``n alpha^3`` strictly decreasing."""
    if not levels:
        raise ScheduleViolation("empty schedule")
    for prev, cur in zip(levels[:-1], levels[1:]):
        if cur.n <= prev.n:
            raise ScheduleViolation(f"n must increase: {prev.n} -> {cur.n}")
        if cur.alpha >= prev.alpha:
            raise ScheduleViolation(
                f"alpha must decrease: {prev.alpha:.6g} -> {cur.alpha:.6g}"
            )
        if cur.M < prev.M:
            raise ScheduleViolation(f"M must not decrease: {prev.M} -> {cur.M}")
        if cur.n * cur.alpha**3 >= prev.n * prev.alpha**3:
            raise ScheduleViolation(
                "coupling n*alpha^3 must decrease: "
                f"{prev.n * prev.alpha**3:.6g} -> {cur.n * cur.alpha**3:.6g}"
            )
        if abs(cur.T - prev.T) > 1e-14:
            raise ScheduleViolation("levels must share the time horizon T")


# -- cross-level metrics ---------------------------------------------------------


def _embedded_coeffs(u: SpectralField, kmax: int) -> np.ndarray:
    if u.kmax == kmax:
        return u.coeffs
    return u.resized(kmax).coeffs


def cross_level_distance(
    coarse: DiscreteTrajectory, fine: DiscreteTrajectory
) -> dict:
    """``L^2(0,T; X)`` distances between the piecewise-constant interpolants
    of two levels, with the coarse states zero-extended into the finer ball.

    Both interpolants are constant between merged net points, so the time
    integral is computed exactly.
    """
    if abs(coarse.params.T - fine.params.T) > 1e-14:
        raise ValueError("levels must share the time horizon")
    kmax = max(coarse.params.n, fine.params.n)
    merged = np.unique(np.concatenate([coarse.times, fine.times]))
    acc_l2 = 0.0
    acc_h1 = 0.0
    for lo, hi in zip(merged[:-1], merged[1:]):
        mid = 0.5 * (lo + hi)
        diff = SpectralField(
            _embedded_coeffs(coarse.state_at(mid), kmax)
            - _embedded_coeffs(fine.state_at(mid), kmax),
            validate=False,
        )
        nd = norms(diff)
        acc_l2 += (hi - lo) * nd["l2"] ** 2
        acc_h1 += (hi - lo) * nd["h1_seminorm"] ** 2
    return {"l2l2": float(np.sqrt(acc_l2)), "l2h1": float(np.sqrt(acc_h1))}


# -- sweep driver -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepPlan:
    """A validated multi-level sweep: datum, schedule, test functions."""

    datum: DatumSpec
    levels: tuple
    phi_amplitudes: tuple = (0.5,)
    phi_support: tuple = (0.1, 0.9)
    gauss_order: int = 6
    output_dir: str | None = None

    def __post_init__(self):
        validate_schedule(list(self.levels))

    @property
    def horizon(self) -> float:
        return self.levels[0].T

    def test_functions(self) -> list:
        from .diagnostics import TestFunction

        return [
            TestFunction.default(self.horizon, amplitude=a, support=self.phi_support)
            for a in self.phi_amplitudes
        ]


@dataclass
class SweepLevel:
    params: SchemeParams
    trajectory: DiscreteTrajectory
    report: DiagnosticsReport


@dataclass
class SweepResult:
    levels: list
    cauchy: list = dc_field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "schema": "nsv-report/1",
            "kind": "sweep",
            "levels": [lv.report.to_json_dict() for lv in self.levels],
            "cauchy": self.cauchy,
        }


def thread_count() -> int:
    """Worker count from ``NSV_THREADS`` (default 1)."""
    raw = os.environ.get("NSV_THREADS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"NSV_THREADS must be an integer, got {raw!r}") from exc
    return max(value, 1)


def run_sweep(
    datum_spec: DatumSpec,
    levels,
    phis: list | None = None,
    gauss_order: int = 6,
) -> SweepResult:
    """Run every level of a validated schedule and collect diagnostics plus
    consecutive-level Cauchy distances.

    Levels are independent given the datum, so they run on a thread pool
    sized by ``NSV_THREADS``; results are ordered by level regardless.
    """
    validate_schedule(levels)
    phis = phis if phis is not None else [TestFunction.default(levels[0].T)]

    def one_level(params: SchemeParams) -> SweepLevel:
        datum = generate_datum(datum_spec)
        traj = run(datum, params)
        report = build_report(traj, phis=phis, gauss_order=gauss_order)
        return SweepLevel(params=params, trajectory=traj, report=report)

    workers = thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one_level, levels))
    else:
        results = [one_level(p) for p in levels]

    cauchy = []
    for a, b in zip(results[:-1], results[1:]):
        dist = cross_level_distance(a.trajectory, b.trajectory)
        cauchy.append(
            {
                "coarse_n": a.params.n,
                "fine_n": b.params.n,
                **dist,
            }
        )
    return SweepResult(levels=results, cauchy=cauchy)


def run_plan(plan: SweepPlan) -> SweepResult:
    return run_sweep(
        plan.datum,
        list(plan.levels),
        phis=plan.test_functions(),
        gauss_order=plan.gauss_order,
    )


def summary_table(result: SweepResult) -> str:
    """One CSV row per level; deterministic bytes for a fixed plan and seed."""
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "n",
            "M",
            "alpha",
            "coupling",
            "energy_residual",
            "tdw",
            "tdw_grad",
            "twodw",
            "kappa_sum_p53",
            "uv_l2_sq",
            "uv_bound",
            "lei_residuals",
            "cauchy_l2l2_to_next",
        ]
    )
    for i, lv in enumerate(result.levels):
        rep = lv.report
        lei_res = ";".join(f"{entry['residual']:.17g}" for entry in rep.lei)
        next_cauchy = (
            f"{result.cauchy[i]['l2l2']:.17g}" if i < len(result.cauchy) else ""
        )
        writer.writerow(
            [
                lv.params.n,
                lv.params.M,
                f"{lv.params.alpha:.17g}",
                f"{lv.params.n * lv.params.alpha ** 3:.17g}",
                f"{rep.energy['max_residual']:.17g}",
                f"{rep.weighted['tdw']:.17g}",
                f"{rep.weighted['tdw_grad']:.17g}",
                f"{rep.weighted['twodw']:.17g}",
                f"{rep.pressure['kappa_sum_p53']:.17g}",
                f"{rep.uv_bound['uv_l2_sq']:.17g}",
                f"{rep.uv_bound['bound']:.17g}",
                lei_res,
                next_cauchy,
            ]
        )
    return buf.getvalue()
