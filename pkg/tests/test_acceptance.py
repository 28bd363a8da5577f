"""End-to-end acceptance checks; each records a PASS/FAIL line for the summary."""
import io
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import ACCEPTANCE_RESULTS
from convexity.cli import run
from convexity.field import builtin, from_expression
from convexity.hessian import analytic_hessian, hessian_fd_batch
from convexity.indices import index_of_increase_1d, indices_batch
from convexity.quadrature import Square, global_convexity_index, sweep_conv_a
from convexity.risk import UNIFORM01, LineSpec, average_value_at_risk, line_total_loss, value_at_risk
from convexity.symcore import canonical_split, nuclear_distance_to_psd_oracle, trace_bound_check

pytestmark = pytest.mark.acceptance

H_COS = builtin("h_cos")
CENTERS = [(0.25, 0.25), (0.5, 0.5), (0.75, 0.75)]


def record(label, ok, detail):
    ACCEPTANCE_RESULTS[label] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    assert ok, f"{label}: {detail}"


def hcos_reduction(a):
    k = int(a // (math.pi / 2))
    pts = [j * math.pi / 2 for j in range(1, k + 1) if j * math.pi / 2 < a] or None
    pos = quad(lambda t: max(math.cos(t), 0.0), 0, a, points=pts, limit=200)[0]
    tot = quad(lambda t: abs(math.cos(t)), 0, a, points=pts, limit=200)[0]
    return pos / tot


def test_01_hcos_convex_regime():
    worst, slowest = 0.0, 0.0
    for a in (0.5, 1.0, 1.5, math.pi / 2):
        t = time.perf_counter()
        v = global_convexity_index(H_COS, Square((0.0, 0.0), a).rect(), 201).value
        slowest = max(slowest, time.perf_counter() - t)
        worst = max(worst, abs(v - 1.0))
    record("1 h_cos CONV(a)=1 for a<=pi/2", worst <= 1e-6 and slowest < 10.0,
           f"max |CONV-1| = {worst:.3e}, slowest {slowest:.2f}s")


def test_02_hcos_mixed_regime():
    errs = {}
    for a in (math.pi, 2 * math.pi):
        errs[a] = abs(global_convexity_index(H_COS, Square((0.0, 0.0), a).rect(), 201).value - 0.5)
    track = max(abs(global_convexity_index(H_COS, Square((0.0, 0.0), a).rect(), 201).value
                    - hcos_reduction(a)) for a in (1.0, 2.0, 3.0, 4.0, 5.0))
    ok = max(errs.values()) <= 2e-3 and track <= 2e-3
    record("2 h_cos CONV(pi), CONV(2pi) = 0.5; tracks 1-D reduction", ok,
           f"max |CONV-0.5| = {max(errs.values()):.3e}, max reduction gap = {track:.3e}")


def test_03_oracle_equivalence():
    rng = np.random.default_rng(3)
    t = time.perf_counter()
    fails, worst = 0, 0.0
    for _ in range(200):
        h = rng.uniform(-1.0, 1.0, (2, 2))
        h = np.triu(h) + np.triu(h, 1).T
        lops = canonical_split(h).nuclear_minus
        d = nuclear_distance_to_psd_oracle(h)
        worst = max(worst, lops - d)
        if not lops - 1e-3 <= d <= lops + 1e-12:
            fails += 1
    elapsed = time.perf_counter() - t
    record("3 oracle distance = ||H-||* on 200 matrices", fails == 0 and elapsed < 60.0,
           f"{200 - fails}/200 within band, max lops-dist = {worst:.2e}, {elapsed:.1f}s")


def test_04_trace_bound():
    rng = np.random.default_rng(4)
    passed = 0
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        a = rng.standard_normal((d, d))
        b = rng.standard_normal((d, d))
        passed += bool(trace_bound_check(a.T @ a, b.T @ b, tol=1e-9))
    record("4 trace bound on 1000 PSD pairs", passed == 1000, f"{passed}/1000")


def test_05_hessian_accuracy():
    pts = np.random.default_rng(5).uniform(-4.0, 4.0, (200, 2))
    fd = hessian_fd_batch(H_COS, pts)
    exact = np.stack([analytic_hessian("h_cos", p).entries for p in pts])
    err = float(np.max(np.abs(fd - exact)))
    record("5 FD Hessian of h_cos within 1e-5", err <= 1e-5, f"max entry error = {err:.3e}")


def _risk_sweep(beta, center, a_values):
    f = builtin("h_beta", beta=beta)
    return np.array([global_convexity_index(f, Square(center, a).rect(), 201).value for a in a_values])


def test_06a_risk_near_one():
    a_values = np.round(np.arange(1, 21) * 0.01, 10)
    lows = {beta: float(_risk_sweep(beta, (0.25, 0.75), a_values).min()) for beta in (2.0, 1.0)}
    record("6a h_beta beta in {2,1}: CONV(a) >= 0.99 for a <= 0.2", min(lows.values()) >= 0.99,
           ", ".join(f"beta={b:g} min {v:.5f}" for b, v in lows.items()))


def test_06b_risk_ordering():
    a_values = (0.05, 0.10, 0.15, 0.20)
    curves = np.stack([_risk_sweep(-1.0, c, a_values) for c in CENTERS])
    diffs = np.diff(curves, axis=0)
    ordered = bool(np.all(diffs > 0) or np.all(diffs < 0))
    starts = [float(_risk_sweep(-1.0, c, (0.01,))[0]) for c in CENTERS]
    ok = ordered and max(starts) < 0.9
    record("6b h_beta beta=-1: diagonal curves ordered, start below 0.9", ok,
           f"ordered={ordered}, starts={[round(s, 4) for s in starts]}")


def test_06c_risk_absorption():
    early, late = _risk_sweep(-1.0, (0.25, 0.75), (0.05, 0.24))
    record("6c h_beta beta=-1 at (0.25,0.75): CONV(0.05) > CONV(0.24)", early > late,
           f"CONV(0.05) = {early:.5f}, CONV(0.24) = {late:.5f}")


def _random_fields(rng, n):
    corpus = [(H_COS, -4.0, 4.0), (from_expression("sin(x)*cos(y) + x*y/3", 2), -3.0, 3.0),
              (builtin("h_beta", beta=-1.0), 0.05, 0.95), (builtin("h_beta", beta=2.0), 0.05, 0.95),
              (builtin("cubic_1d"), -1.0, 1.0), (builtin("g_risk"), 0.05, 0.95)]
    for k in range(n):
        if k % 2 == 0:
            d = int(rng.integers(1, 5))
            a = rng.uniform(-2, 2, (d, d))
            yield builtin("quadratic", matrix=a + a.T), rng.uniform(-3, 3, (1, d))
        else:
            f, lo, hi = corpus[(k // 2) % len(corpus)]
            yield f, rng.uniform(lo, hi, (1, f.dimension))


def test_07_pointwise_invariants():
    rng = np.random.default_rng(7)
    sum_err = dual_err = 0.0
    loc_ok = True
    for f, x in _random_fields(rng, 1000):
        r = indices_batch(f, x)
        n = indices_batch(-f, x)
        if not r.degenerate[0]:
            sum_err = max(sum_err, abs(r.nloc[0] + r.conv[0] - 1.0))
            dual_err = max(dual_err, abs(r.conv[0] - n.nloc[0]))
        loc_ok &= bool((r.loc[0] == 0.0) == bool(np.all(r.eigenvalues[0] >= 0)))
    ok = sum_err <= 1e-12 and dual_err <= 1e-10 and loc_ok
    record("7 pointwise invariants on 1000 fields", ok,
           f"max |nloc+conv-1| = {sum_err:.1e}, max duality gap = {dual_err:.1e}, loc=0 iff PSD: {loc_ok}")


def test_08_increase_1d():
    cubic = index_of_increase_1d(builtin("cubic_1d"), (-1.0, 1.0)).value
    negcos = index_of_increase_1d(builtin("neg_cos_1d"), (0.0, math.pi)).value
    square = index_of_increase_1d(from_expression("x^2", 1), (-1.0, 1.0)).value
    ok = abs(cubic - 0.5) <= 1e-6 and abs(negcos - 0.5) <= 1e-4 and abs(square - 1.0) <= 1e-12
    record("8 1-D index: x^3, -cos, x^2", ok,
           f"x^3 {cubic:.10f}, -cos {negcos:.8f}, x^2 {square!r}")


def test_09_risk_closed_forms():
    var = value_at_risk(UNIFORM01, 0.99)
    avar = average_value_at_risk(UNIFORM01, 0.99)
    xs = np.arange(0, 100001) * 1e-5
    vals = line_total_loss(LineSpec(UNIFORM01, p=0.99), xs)
    gap = abs(float(vals.min()) - 0.01 * avar)
    ok = var == 0.99 and abs(avar - 0.995) <= 1e-12 and gap <= 1e-6
    record("9 uniform VaR/AVaR and line-loss minimum", ok,
           f"VaR {var!r}, AVaR {avar!r}, min gap {gap:.1e}")


DETERMINISM_RUNS = [
    ["pointwise", "--builtin", "h_cos", "--at", "0.3,1.7"],
    ["increase", "--fn", "x^3", "--interval=-1,1"],
    ["global", "--builtin", "h_cos", "--center", "0,0", "--a", "3"],
    ["sweep", "--builtin", "h_beta", "--beta", "2", "--center", "0.25,0.75", "--amax", "0.24",
     "--steps", "6"],
    ["map", "--builtin", "h_cos", "--lo=-4,-4", "--hi", "4,4", "--grid", "101"],
    ["verify", "--trials", "5", "--seed", "11"],
    ["risk-demo", "--beta=-1", "--steps", "4"],
]


def test_10_determinism(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("2,1,0\n1,-3,0.5\n0,0.5,1\n")
    runs = DETERMINISM_RUNS + [["psd", "--matrix", str(m)]]
    bad = []
    for argv in runs:
        outs = []
        for threads in (1, 4, 1, 2):
            buf = io.StringIO()
            code = run(argv + ["--threads", str(threads)], stdout=buf)
            outs.append((code, buf.getvalue().encode()))
        if len(set(outs)) != 1 or outs[0][0] != 0:
            bad.append(argv[0])
    record("10 byte-identical output across runs and thread counts", not bad,
           f"{len(runs) - len(bad)}/{len(runs)} subcommands identical" + (f"; differing: {bad}" if bad else ""))
