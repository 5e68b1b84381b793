"""Acceptance gate: eleven numbered criteria, one pass/fail line each.

Each test prints ``ACCEPTANCE <k> PASS|FAIL: <summary>`` before asserting so
the verdict is visible even when an assertion trips.  Shared artifacts (the
reference trajectory and the three-level sweep) are module-scoped fixtures.
"""

import time

import numpy as np
import pytest

from nsv.diagnostics import (
    TestFunction,
    energy_ledger,
    interpolant_identities,
    lei_residual,
    pressure_ledger,
    uv_distance_bound,
    weighted_estimates,
)
from nsv.fields import TrigPolynomial, l2_inner, norms
from nsv.harness import (
    DatumSpec,
    cross_level_distance,
    generate_datum,
    run_sweep,
    shear,
    taylor_green,
)
from nsv.nonlinearity import (
    calibrate_qn_constant,
    convective,
    convective_direct,
    galerkin_nonlinearity,
    qn_tail_bound,
)
from nsv.pressure import pressure_gradient, solve_pressure
from nsv.stepper import SchemeParams, run

from conftest import random_velocity


def verdict(number: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}")


@pytest.fixture(scope="module")
def reference_traj():
    """Criterion-1 trajectory: random H^4-decay datum, n=4, M=8, a=0.5."""
    params = SchemeParams(n=4, M=8, T=0.5, alpha=0.5, picard_tol=1e-12)
    return run(generate_datum(DatumSpec(kind="random_hs", n=4, seed=7)), params)


@pytest.fixture(scope="module")
def sweep():
    """Criterion-8 sweep: Taylor-Green datum, n in {4,6,8}, alpha=n^{-3/4}, M=n."""
    levels = [
        SchemeParams(n=n, M=n, T=0.5, alpha=float(n) ** -0.75) for n in (4, 6, 8)
    ]
    start = time.monotonic()
    result = run_sweep(DatumSpec(kind="taylor_green"), levels)
    result.runtime = time.monotonic() - start
    return result


def test_criterion_01_discrete_energy_equality(reference_traj):
    start = time.monotonic()
    ledger = energy_ledger(reference_traj)
    elapsed = time.monotonic() - start
    worst = ledger["max_residual"]
    ok = worst <= 1e-10 and elapsed < 10.0
    verdict(1, ok, f"energy-equality residual {worst:.3e} (<=1e-10), ledger {elapsed:.2f}s")
    assert worst <= 1e-10
    assert elapsed < 10.0


def test_criterion_02_shear_closed_form_decay():
    start = time.monotonic()
    params = SchemeParams(n=2, M=20, T=1.0, alpha=0.3)
    traj = run(shear(), params, with_pressure=False)
    ratio = (1 + params.alpha**2) / (1 + params.alpha**2 + params.kappa)
    u0 = traj.states[0].coeffs
    scale = np.abs(u0).max()
    worst = max(
        float(np.abs(traj.states[m].coeffs - u0 * ratio**m).max()) / (scale * ratio**m)
        for m in range(len(traj.states))
    )
    elapsed = time.monotonic() - start
    ok = worst <= 1e-12 and elapsed < 1.0
    verdict(2, ok, f"per-mode decay error {worst:.3e} (<=1e-12) over M=20, {elapsed:.2f}s")
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_criterion_03_interpolant_identities(reference_traj):
    ident = interpolant_identities(reference_traj)
    worst = max(ident["rel_gap_l2"], ident["rel_gap_h1"])
    ok = worst <= 1e-13
    verdict(3, ok, f"interpolant identity gaps l2={ident['rel_gap_l2']:.3e}, "
                   f"h1={ident['rel_gap_h1']:.3e} (<=1e-13)")
    assert worst <= 1e-13


def test_criterion_04_convective_oracle_equivalence():
    start = time.monotonic()
    worst = 0.0
    for seed in range(20):
        u = random_velocity(4, seed=200 + seed)
        fast = convective(u)
        slow = convective_direct(u)
        scale = np.abs(slow.coeffs).max()
        worst = max(worst, float(np.abs(fast.coeffs - slow.coeffs).max()) / scale)
    elapsed = time.monotonic() - start
    ok = worst <= 1e-12 and elapsed < 30.0
    verdict(4, ok, f"padded vs direct convolution gap {worst:.3e} (<=1e-12) "
                   f"on 20 fields, {elapsed:.1f}s")
    assert worst <= 1e-12
    assert elapsed < 30.0


def test_criterion_05_energy_cancellation():
    worst = 0.0
    for seed in range(50):
        u = random_velocity(4, seed=300 + seed)
        term = galerkin_nonlinearity(u)
        nu = norms(u)
        worst = max(
            worst,
            abs(l2_inner(term.projected, u)) / (nu["l2"] * nu["h1_seminorm"]),
        )
    ok = worst <= 1e-11
    verdict(5, ok, f"|(P_n((u.grad)u), u)| <= {worst:.3e} * ||u|| ||grad u|| (<=1e-11), 50 fields")
    assert worst <= 1e-11


def test_criterion_06_pressure_consistency():
    worst_split = 0.0
    for seed in range(10):
        u = random_velocity(4, seed=400 + seed)
        grad_part = galerkin_nonlinearity(u).gradient_part()
        grad_p = pressure_gradient(solve_pressure(u))
        scale = np.abs(grad_part.coeffs).max()
        worst_split = max(
            worst_split, float(np.abs(grad_part.coeffs + grad_p.coeffs).max()) / scale
        )
    # Taylor-Green oracle: p = -(cos 2x1 + cos 2x2)/4
    p = solve_pressure(taylor_green())
    tg_gap = max(
        abs(p.mode((2, 0, 0)) - (-0.125)), abs(p.mode((0, 2, 0)) - (-0.125))
    )
    ok = worst_split <= 1e-11 and tg_gap <= 1e-12
    verdict(6, ok, f"Helmholtz split gap {worst_split:.3e} (<=1e-11), "
                   f"Taylor-Green pressure gap {tg_gap:.3e} (<=1e-12)")
    assert worst_split <= 1e-11
    assert tg_gap <= 1e-12


def test_criterion_07_gn_chain(reference_traj, sweep):
    ledgers = [pressure_ledger(reference_traj)]
    ledgers += [lv.report.pressure for lv in sweep.levels]
    rows = [row for ledger in ledgers for row in ledger["steps"]]
    ok = all(row["gn_holds"] for row in rows)
    worst = max(
        (row["u_103"] / row["gn_rhs"] for row in rows if row["gn_rhs"] > 0),
        default=0.0,
    )
    verdict(7, ok, f"interpolation inequality holds at {len(rows)} steps, "
                   f"max lhs/rhs {worst:.12f} (<=1+1e-9)")
    assert ok


def test_criterion_08_uniformity_regression(sweep):
    reports = [lv.report for lv in sweep.levels]
    calib = reports[0]
    sup_energy = []
    for lv in sweep.levels:
        a2 = lv.params.alpha**2
        sup_energy.append(
            max(
                norms(s)["l2"] ** 2 + a2 * norms(s)["h1_seminorm"] ** 2
                for s in lv.trajectory.states
            )
        )
    checks = {
        "tdw": [r.weighted["tdw"] for r in reports],
        "twodw": [r.weighted["twodw"] for r in reports],
        "kappa_sum_p53": [r.pressure["kappa_sum_p53"] for r in reports],
        "sup_energy": sup_energy,
    }
    ok = all(max(vals) <= 1.1 * vals[0] for vals in checks.values())
    ok = ok and sweep.runtime < 600.0
    summary = ", ".join(
        f"{name} x{max(vals) / vals[0]:.3f}" for name, vals in checks.items()
    )
    verdict(8, ok, f"uniformity vs n=4 calibration: {summary} (<=x1.1), "
                   f"sweep {sweep.runtime:.0f}s (<600s)")
    for name, vals in checks.items():
        assert max(vals) <= 1.1 * vals[0], name
    assert sweep.runtime < 600.0


def test_criterion_09_convergence_trend(sweep):
    uv = [lv.report.uv_bound for lv in sweep.levels]
    uv_vals = [entry["uv_l2_sq"] for entry in uv]
    uv_decreasing = all(b < a for a, b in zip(uv_vals[:-1], uv_vals[1:]))
    uv_bounded = all(entry["holds"] for entry in uv)
    cauchy = [entry["l2l2"] for entry in sweep.cauchy]
    cauchy_decreasing = all(b < a for a, b in zip(cauchy[:-1], cauchy[1:]))
    i5 = [abs(lv.report.lei[0]["terms"]["I5"]) for lv in sweep.levels]
    scale = [abs(lv.report.lei[0]["lhs"]) for lv in sweep.levels]
    # I5 vanishes identically for this datum; magnitudes at roundoff level
    # are treated as (non-strictly) decreasing
    floor = 1e-15 * max(scale)
    i5_decreasing = all(
        b <= max(a, floor) for a, b in zip(i5[:-1], i5[1:])
    )
    ok = uv_decreasing and uv_bounded and cauchy_decreasing and i5_decreasing
    verdict(9, ok, f"||u-v|| {['%.4f' % v for v in uv_vals]} decreasing={uv_decreasing} "
                   f"bounded={uv_bounded}; Cauchy {['%.4f' % c for c in cauchy]} "
                   f"decreasing={cauchy_decreasing}; |I5| {['%.1e' % v for v in i5]} "
                   f"decreasing={i5_decreasing}")
    assert uv_decreasing
    assert uv_bounded
    assert cauchy_decreasing
    assert i5_decreasing


def test_criterion_10_lei_bookkeeping(sweep):
    """The literal integration-by-parts rewrites of the transport and
    regularization terms drop the interval-endpoint jump contributions
    ``sum_m (|u^m - u^{m-1}|^2 / 2, psi) chi(t_{m-1})``, so their gap is
    O(kappa), not roundoff; with the endpoint correction added back both
    identities close to machine precision (reported below).  The 1e-10
    requirement on the uncorrected forms is therefore expected to fail."""
    i1_gaps, i21_gaps, i1_fixed, i21_fixed = [], [], [], []
    stability = []
    for lv in sweep.levels:
        entry = lv.report.lei[0]
        i1_gaps.append(entry["i1_gap"])
        i21_gaps.append(entry["i21_gap"])
        i1_fixed.append(entry["i1_corrected_gap"])
        i21_fixed.append(entry["i21_corrected_gap"])
        phi = TestFunction.default(lv.params.T)
        doubled = lei_residual(lv.trajectory, phi, gauss_order=12)
        base = lv.report.lei[0]
        scale = max(abs(base["lhs"]), 1.0)
        stability.append(
            max(
                abs(base["terms"][k] - doubled.terms[k]) / scale
                for k in base["terms"]
            )
        )
    literal_ok = max(i1_gaps) <= 1e-10 and max(i21_gaps) <= 1e-10
    stable_ok = max(stability) <= 1e-8
    ok = literal_ok and stable_ok
    verdict(10, ok, f"literal rewrite gaps I1 {max(i1_gaps):.3e}, I2,1 {max(i21_gaps):.3e} "
                    f"(required <=1e-10; O(kappa) defect, see note); with endpoint "
                    f"correction {max(i1_fixed):.1e}/{max(i21_fixed):.1e}; Gauss-order "
                    f"doubling stability {max(stability):.3e} (<=1e-8)")
    assert stable_ok
    # corrected identities close to machine precision
    assert max(i1_fixed) <= 1e-10
    assert max(i21_fixed) <= 1e-10
    # literal criterion text: expected to fail (documented defect)
    assert literal_ok, (
        "uncorrected rewrite identities differ by the O(kappa) endpoint terms"
    )


def test_criterion_11_tail_bound_fresh_seeds():
    phi = TrigPolynomial.product_cosine(0.5)
    calib_fields = [
        random_velocity(n, seed=s) for n in (8, 16) for s in range(1000, 1020)
    ]
    constant = calibrate_qn_constant(phi, calib_fields)
    failures = 0
    worst = 0.0
    for n in (8, 16):
        for seed in range(50):
            res = qn_tail_bound(random_velocity(n, seed=seed), phi, constant=constant)
            worst = max(worst, res["ratio"] / constant)
            if not res["holds"]:
                failures += 1
    ok = failures == 0
    verdict(11, ok, f"tail bound with calibrated c={constant:.4f} holds on "
                    f"100 fresh fields (n in {{8,16}}), worst ratio/c {worst:.3f}")
    assert failures == 0
