"""Acceptance gate: sixteen numbered criteria, one test and one line each.

Criteria 1 to 10 are exact or near-exact algebraic checks driven by the
brute-force verification suites.  Criteria 11 to 16 train small models and
hold them to absolute error budgets; epoch counts were chosen so each lands
well inside its budget on a desktop-class machine.  Run with ``pytest -v``
to get the per-criterion pass/fail listing.
"""

import time

from reynet.data import TASKS, generate
from reynet.train import (
    RunConfig,
    dataset_seed,
    evaluate_mse,
    model_for_eval,
    run_config,
)
from reynet.verify import run_suite

_CACHE = {}


def _suite(name, **kw):
    key = (name, tuple(sorted(kw.items())))
    if key not in _CACHE:
        t0 = time.perf_counter()
        res = run_suite(name, **kw)
        _CACHE[key] = (res, time.perf_counter() - t0)
    return _CACHE[key]


def _report(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d}: {detail}"
    print(line)
    assert ok, line


def _rows(result, needle):
    rows = [c for c in result.checks if needle in c.name]
    assert rows, f"no {needle!r} rows in suite {result.suite}"
    return rows


def _train_mean(**kw):
    cfg = RunConfig(**kw)
    t0 = time.perf_counter()
    records, bundles = run_config(cfg)
    elapsed = time.perf_counter() - t0
    test = [r.mse for r in records if r.split == "test"]
    return sum(test) / len(test), test, elapsed, bundles


# --- exact checks -------------------------------------------------------------


def test_criterion_01_tableau_bijection_round_trip():
    res, dt = _suite("bijection", max_n=5)
    ok = res.passed and dt < 1.0
    _report(1, ok, f"index/tableau round trip n<=5 m<=3, {len(res.checks)} checks, {dt:.2f}s < 1s")


def test_criterion_02_design_normalizer_uniqueness():
    res, dt = _suite("normalize", max_n=6)
    ok = res.passed and dt < 5.0
    _report(2, ok, f"normalizer unique in design n<=6 D<=3, {dt:.2f}s < 5s")


def test_criterion_03_group_average_equivariance():
    res, dt = _suite("equivariance", max_n=5, trials=20)
    rows = _rows(res, "operator average")
    gap = max(c.gap for c in rows)
    ok = all(c.passed for c in rows) and gap <= 1e-9 and dt < 30.0
    _report(3, ok, f"20 random operators equivariant, max gap {gap:.2e} <= 1e-9, {dt:.1f}s < 30s")


def test_criterion_04_design_average_equals_group_average():
    res, dt = _suite("design", max_n=6)
    rows = _rows(res, "design average exact")
    gap = max(c.gap for c in rows)
    ok = all(c.passed for c in rows) and gap <= 1e-12 and dt < 60.0
    _report(4, ok, f"stabilizer-fixed maps n in 4..6 D in 1..2, max gap {gap:.2e} <= 1e-12, {dt:.1f}s < 60s")


def test_criterion_05_restricted_model_exact_equivariance():
    res, _ = _suite("equivariance", max_n=5, trials=20)
    rows = _rows(res, "restricted model exact")
    gap = max(c.gap for c in rows)
    ok = all(c.passed for c in rows) and gap <= 1e-9
    _report(5, ok, f"restricted models exactly equivariant n<=5, max gap {gap:.2e} <= 1e-9")


def test_criterion_06_forward_matches_literal_reconstruction():
    res, _ = _suite("equivariance", max_n=5, trials=20)
    rows = _rows(res, "reconstruction")
    gap = max(c.gap for c in rows)
    ok = all(c.passed for c in rows) and gap <= 1e-12
    _report(6, ok, f"forward equals literal design average n<=4, max gap {gap:.2e} <= 1e-12")


def test_criterion_07_orbit_sums_match_group_sums():
    res, _ = _suite("orbitsum", max_n=4)
    gap = res.max_gap
    ok = res.passed and gap <= 1e-12
    _report(7, ok, f"orbit pooling vs literal group sums n<=4, max gap {gap:.2e} <= 1e-12")


def test_criterion_08_invariant_decomposition_and_power_sums():
    dec, _ = _suite("decomposition", max_n=6)
    pow_, _ = _suite("powersum", max_n=6)
    gap = pow_.max_gap
    ok = dec.passed and pow_.passed and gap <= 1e-12
    _report(8, ok, f"staged averages and power-sum generators n<=6, max gap {gap:.2e} <= 1e-12")


def test_criterion_09_gradients_match_finite_differences():
    res, _ = _suite("gradcheck")
    gap = res.max_gap
    ok = res.passed and gap <= 1e-6
    _report(9, ok, f"full-sweep central differences, max rel err {gap:.2e} <= 1e-6")


def test_criterion_10_quadratic_evaluation_count():
    res, _ = _suite("count", max_n=20)
    names = " ".join(c.name.rsplit("=", 1)[-1] for c in res.checks)
    ok = res.passed and len(res.checks) == 4 and res.max_gap == 0.0
    _report(10, ok, f"exactly n^2 component evaluations per sample, n in {{{names}}}")


# --- trained-model budgets ----------------------------------------------------


def test_criterion_11_symmetry_n5():
    mean, per, dt, _ = _train_mean(task="symmetry", model="red-reynet", n=5, epochs=150)
    per_seed = dt / len(per)
    ok = mean <= 1e-3 and per_seed < 600.0
    _report(11, ok, f"symmetry n=5 mean test mse {mean:.2e} <= 1e-3 over {len(per)} seeds, {per_seed:.0f}s/seed < 600s")


def test_criterion_12_diagonal_n10():
    mean, per, _, _ = _train_mean(task="diagonal", model="red-reynet", n=10, epochs=200)
    ok = mean <= 1e-3
    _report(12, ok, f"diagonal n=10 mean test mse {mean:.2e} <= 1e-3 over {len(per)} seeds")


def test_criterion_13_elementwise_power_n5():
    mean, per, _, _ = _train_mean(task="power", model="red-reynet", n=5, epochs=400)
    ok = mean <= 1.5
    _report(13, ok, f"power n=5 mean test mse {mean:.2e} <= 1.5 over {len(per)} seeds")


def test_criterion_14_trace_n3_invariant():
    # red-reynet on an invariant task builds the pooled model with the
    # max-over-diagonal/off-diagonal head
    mean, per, _, _ = _train_mean(task="trace", model="red-reynet", n=3, epochs=200)
    ok = mean <= 1e-2
    _report(14, ok, f"trace n=3 mean test mse {mean:.2e} <= 1e-2 over {len(per)} seeds")


def test_criterion_15_corner_loss_matches_full_loss_n10():
    full_mean, per, _, _ = _train_mean(task="symmetry", model="red-reynet", n=10, epochs=200)
    corner_mean, cper, _, _ = _train_mean(
        task="symmetry", model="red-reynet", n=10, epochs=400, loss="corner"
    )
    ok = full_mean <= 1e-3 and corner_mean <= 1e-3
    _report(
        15,
        ok,
        f"symmetry n=10 full-tensor test mse: standard {full_mean:.2e}, "
        f"corner-trained {corner_mean:.2e}, both <= 1e-3 ({len(per)}+{len(cper)} seeds)",
    )


def test_criterion_16_train_small_evaluate_large():
    _, _, _, bundles = _train_mean(task="symmetry", model="red-reynet", n=3, epochs=150, seeds=(0,))
    bundle = bundles[0]
    task = TASKS["symmetry"]
    mses = {}
    for n in (3, 20):
        ds = generate(task, n, 1000, dataset_seed(task, n, "test"))
        mses[n] = evaluate_mse(model_for_eval(bundle, n), ds)
    ok = mses[20] <= 10.0 * mses[3]
    _report(16, ok, f"symmetry trained at n=3 (mse {mses[3]:.2e}) scores {mses[20]:.2e} at n=20, within 10x")
