import numpy as np
import pytest

from nsv.errors import ScheduleViolation
from nsv.fields import VOLUME, k_squared, norms
from nsv.harness import (
    DatumSpec,
    SweepPlan,
    cross_level_distance,
    default_schedule,
    generate_datum,
    run_sweep,
    shear,
    summary_table,
    taylor_green,
    thread_count,
    validate_schedule,
)
from nsv.stepper import SchemeParams, run


def test_shear_datum_coefficients():
    u = generate_datum(DatumSpec(kind="shear"))
    assert abs(u.mode((0, 1, 0))[0] - 1.0 / 2j) < 1e-15
    assert abs(u.mode((0, -1, 0))[0] - (-1.0 / 2j)) < 1e-15


def test_taylor_green_datum_coefficients():
    u = generate_datum(DatumSpec(kind="taylor_green"))
    assert np.allclose(u.mode((1, 1, 0)), [-0.25j, 0.25j, 0.0], atol=1e-15)
    assert np.allclose(u.mode((1, -1, 0)), [0.25j, 0.25j, 0.0], atol=1e-15)
    assert u.is_divergence_free()


def test_random_datum_deterministic_and_valid():
    spec = DatumSpec(kind="random_hs", n=4, seed=3, decay=4.0, amplitude=2.0)
    a = generate_datum(spec)
    b = generate_datum(spec)
    assert np.array_equal(a.coeffs, b.coeffs)
    assert a.is_divergence_free()
    assert a.hermitian_defect() < 1e-14
    assert norms(a)["l2"] == pytest.approx(2.0)
    # H^2 proxy is finite on the truncated support by construction
    mag2 = (np.abs(a.coeffs) ** 2).sum(axis=0)
    assert np.isfinite(VOLUME * (k_squared(4) ** 2 * mag2).sum())


def test_unknown_datum_kind():
    with pytest.raises(ValueError):
        DatumSpec(kind="vortex")


def test_default_schedule_coupling():
    levels = default_schedule([4, 8, 16])
    couplings = [lv.n * lv.alpha**3 for lv in levels]
    # alpha = n^{-3/4} gives coupling n * n^{-9/4} = n^{-5/4}
    assert couplings == pytest.approx([4 ** -1.25, 8 ** -1.25, 16 ** -1.25])
    assert couplings[0] > couplings[1] > couplings[2]
    validate_schedule(levels)
    with pytest.raises(ScheduleViolation):
        default_schedule([4, 8], epsilon=0.0)


def test_schedule_violations():
    ok = SchemeParams(n=4, M=4, T=0.5, alpha=0.4)
    const_alpha = SchemeParams(n=8, M=8, T=0.5, alpha=0.4)
    with pytest.raises(ScheduleViolation):
        validate_schedule([ok, const_alpha])
    shrinking_m = SchemeParams(n=8, M=2, T=0.5, alpha=0.2)
    with pytest.raises(ScheduleViolation):
        validate_schedule([ok, shrinking_m])
    with pytest.raises(ScheduleViolation):
        validate_schedule([])
    # alpha = n^{-1/2} gives coupling n^{-1/2}: valid
    validate_schedule(
        [SchemeParams(n=n, M=n, T=0.5, alpha=n**-0.5) for n in (4, 8, 16)]
    )


def test_sweep_plan_validates_on_construction():
    with pytest.raises(ScheduleViolation):
        SweepPlan(
            datum=DatumSpec(),
            levels=(
                SchemeParams(n=4, M=4, T=0.5, alpha=0.4),
                SchemeParams(n=8, M=8, T=0.5, alpha=0.4),
            ),
        )


def test_cross_level_distance_shear_closed_form():
    # linear decay: per-interval constants are known geometric sequences
    p1 = SchemeParams(n=2, M=2, T=0.5, alpha=0.5)
    p2 = SchemeParams(n=4, M=4, T=0.5, alpha=0.4)
    t1 = run(shear(), p1, with_pressure=False)
    t2 = run(shear(), p2, with_pressure=False)
    dist = cross_level_distance(t1, t2)

    def ratio(p):
        return (1 + p.alpha**2) / (1 + p.alpha**2 + p.kappa)

    e0 = norms(t1.states[0])["l2"] ** 2
    acc = 0.0
    net = np.unique(np.concatenate([t1.times, t2.times]))
    for lo, hi in zip(net[:-1], net[1:]):
        mid = 0.5 * (lo + hi)
        m1 = int(np.floor(mid / p1.kappa)) + 1
        m2 = int(np.floor(mid / p2.kappa)) + 1
        acc += (hi - lo) * e0 * (ratio(p1) ** m1 - ratio(p2) ** m2) ** 2
    assert dist["l2l2"] == pytest.approx(np.sqrt(acc), rel=1e-12)


def test_sweep_zero_datum_all_zero():
    spec = DatumSpec(kind="random_hs", n=2, seed=0, amplitude=0.0)
    levels = [SchemeParams(n=2, M=2, T=0.5, alpha=0.5)]
    result = run_sweep(spec, levels)
    rep = result.levels[0].report
    assert rep.energy["rhs_projected"] == 0.0
    assert rep.pressure["kappa_sum_p53"] == 0.0
    assert rep.uv_bound["uv_l2_sq"] == 0.0
    assert all(entry["lhs"] == 0.0 for entry in rep.lei)


def test_sweep_deterministic_summary_bytes():
    spec = DatumSpec(kind="random_hs", n=2, seed=9)
    levels = [
        SchemeParams(n=2, M=2, T=0.5, alpha=0.5),
        SchemeParams(n=3, M=3, T=0.5, alpha=0.4),
    ]
    a = summary_table(run_sweep(spec, levels))
    b = summary_table(run_sweep(spec, levels))
    assert a.encode() == b.encode()


def test_thread_count_env(monkeypatch):
    monkeypatch.delenv("NSV_THREADS", raising=False)
    assert thread_count() == 1
    monkeypatch.setenv("NSV_THREADS", "4")
    assert thread_count() == 4
    monkeypatch.setenv("NSV_THREADS", "zero")
    with pytest.raises(ValueError):
        thread_count()


def test_sweep_parallel_matches_serial(monkeypatch):
    spec = DatumSpec(kind="taylor_green")
    levels = [
        SchemeParams(n=2, M=2, T=0.5, alpha=0.5),
        SchemeParams(n=3, M=3, T=0.5, alpha=0.4),
    ]
    monkeypatch.delenv("NSV_THREADS", raising=False)
    serial = summary_table(run_sweep(spec, levels))
    monkeypatch.setenv("NSV_THREADS", "2")
    parallel = summary_table(run_sweep(spec, levels))
    assert serial == parallel
