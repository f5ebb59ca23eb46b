"""Acceptance gate: criteria 1-10, each with its tolerance and time budget.

Every criterion is a plain function returning ``(passed, detail)``; the
pytest wrappers record the outcome and ``conftest.py`` prints one PASS/FAIL
line per criterion at the end of the session.  Running this file directly
prints the same lines without pytest.
"""
import io
import json
import math
import time

import numpy as np
import pytest

from oracles import eigenvalues_oracle, min_period_bound_oracle, min_return_distance
from shiftcalc.circle import (ineffectivity_kernel, lift_action, make_action, newman_check,
                              zid_circle)
from shiftcalc.cli import run
from shiftcalc.flows import FLOW_NAMES, check_flow_axioms, make_flow, random_axiom_samples
from shiftcalc.linear_flow import default_tol, min_period_bound, point_period
from shiftcalc.matrix_core import (assemble_real_jordan, blueprint_exp, mat_exp, random_blueprint,
                                   rotation_block)
from shiftcalc.orbits import Grid, classify_orbit, fixed_set_probe
from shiftcalc.shifts import (apply_phi, ball_samples, bump, constant, example61_mu,
                              invert_by_bisection, invert_param_mapping, make_fmap,
                              sigma_compose, sigma_inverse)
from shiftcalc.zid import (EvaluationHom, classify_zid, reconstruct_alpha, zid_membership)

RESULTS = {}


def _mu(X):
    X = np.atleast_2d(X)
    return 1.0 / (1.0 + np.sum(X * X, axis=1))


def _block_diag(*blocks):
    n = sum(b.shape[0] for b in blocks)
    A = np.zeros((n, n))
    i = 0
    for b in blocks:
        A[i:i + b.shape[0], i:i + b.shape[0]] = b
        i += b.shape[0]
    return A


# ---------------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    out = io.StringIO()
    code = run(["demo", "example61"], out, io.StringIO())
    elapsed = time.perf_counter() - t0
    res = json.loads(out.getvalue())["result"]
    got = {c["radius"]: c["mu"] for c in res["generator_checks"]}
    want = {0.0: 1.0, 0.5: 0.8, 1.0: 0.5, 2.0: 0.2}
    err = max(abs(got[r] - v) if got[r] is not None else math.inf for r, v in want.items())
    psi_tangent = res["psi"]["evidence"].get("trivial_tangent_points")
    ok = (code == 0 and res["phi"]["case"] == "infinite_cyclic" and res["psi"]["case"] == "trivial"
          and err < 1e-5 and bool(psi_tangent) and elapsed < 10)
    return ok, (f"Phi {res['phi']['case']}, Psi {res['psi']['case']} (identity tangent flow at "
                f"{psi_tangent}), generator error {err:.2e}, {elapsed:.1f}s")


def criterion_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    periodic, worst_gap = 0, math.inf
    for _ in range(100):
        A = assemble_real_jordan(random_blueprint(rng, 6, require_imaginary=True))
        bound = min_period_bound(A)
        if bound is None:
            return False, "a blueprint with imaginary eigenvalues has no bound"
        for _ in range(3):
            x0 = rng.normal(size=A.shape[0]) * (rng.random(A.shape[0]) < 0.6)
            v = point_period(A, x0, horizon=1e3)
            if v.kind == "periodic":
                periodic += 1
                worst_gap = min(worst_gap, v.period - bound)
    oracle_err, compared = 0.0, 0
    for _ in range(100):
        A = assemble_real_jordan(random_blueprint(rng, 4, require_imaginary=True))
        perm = rng.permutation(A.shape[0])
        A = A[np.ix_(perm, perm)]
        want = min_period_bound_oracle(eigenvalues_oracle(A), default_tol(A))
        oracle_err = max(oracle_err, abs(min_period_bound(A) - want))
        compared += 1
    elapsed = time.perf_counter() - t0
    ok = worst_gap >= -1e-6 and periodic > 0 and oracle_err < 1e-8 and elapsed < 30
    return ok, (f"{periodic} periodic verdicts, min(period - bound) = {worst_gap:.3g}; "
                f"oracle error {oracle_err:.2e} over {compared} matrices, {elapsed:.1f}s")


def criterion_3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        bp = random_blueprint(rng, 8)
        t = rng.uniform(-5, 5)
        worst = max(worst, float(np.abs(mat_exp(assemble_real_jordan(bp) * t)
                                        - blueprint_exp(bp, t)).max()))
    elapsed = time.perf_counter() - t0
    return worst < 1e-9 and elapsed < 5, f"max |difference| {worst:.2e}, {elapsed:.2f}s"


def criterion_4():
    rng = np.random.default_rng(4)
    scales = (2.0, 10.0, 100.0, 1000.0)
    worst, monotone = 0.0, True
    for _ in range(20):
        A = assemble_real_jordan(random_blueprint(rng, 6, require_imaginary=True))
        b = min_period_bound(A)
        seq = [min_period_bound(A / s) for s in scales]
        worst = max(worst, max(abs(v - s * b) / (s * b) for v, s in zip(seq, scales)))
        monotone &= all(x < y for x, y in zip([b] + seq, seq))
    return worst < 1e-9 and monotone, f"max relative error {worst:.2e}, strictly increasing: {monotone}"


def criterion_5():
    flows = ["translation", "translation", "translation:dim=2", "example61-phi", "example61-psi",
             "rigid-rotation", "translation", "example61-phi", "example61-psi", "rigid-rotation"]
    worst_c, worst_i = 0.0, 0.0
    for seed, name in enumerate(flows):
        rng = np.random.default_rng(100 + seed)
        flow = make_flow(name)
        n = flow.dim
        X = ball_samples(np.zeros(n), 1.5, 50, seed)
        # on the rotating flows a small bump keeps phi(alpha) injective
        amp = 0.3 if name.startswith("translation") else 0.01
        alpha = bump(rng.uniform(-1, 1, n), rng.uniform(0.8, 2.0), rng.uniform(-amp, amp))
        beta = bump(rng.uniform(-1, 1, n), rng.uniform(0.8, 2.0), rng.uniform(-0.3, 0.3))
        beta = beta + constant(rng.uniform(-0.5, 0.5)) if seed % 2 else beta
        g = apply_phi(flow, beta)
        s = sigma_compose(alpha, beta, g, flow)
        worst_c = max(worst_c, float(np.abs(apply_phi(flow, s)(X) - apply_phi(flow, alpha)(g(X))).max()))
        h = apply_phi(flow, alpha)
        h_inv = invert_by_bisection(h) if n == 1 else invert_param_mapping(h, 1.0)
        sigma = sigma_inverse(alpha, h, h_inv)
        Y = h(X)
        worst_i = max(worst_i, float(np.abs(apply_phi(flow, sigma)(Y) - X).max()))
    ok = worst_c < 1e-8 and worst_i < 1e-8
    return ok, f"composition error {worst_c:.2e}, inversion error {worst_i:.2e} over 10 triples"


def criterion_6():
    phi = make_flow("example61-phi")
    fmap = make_fmap(phi, "identity")
    worst, worst_zero = 0.0, 0.0
    for r in (0.5, 1.0, 1.5):
        for ang in (0.0, 2.0):
            y = np.array([r * math.cos(ang), r * math.sin(ang)])
            rec = reconstruct_alpha(phi, fmap, y, float(_mu(y)[0]), radius=0.2, n_samples=50)
            worst = max(worst, float(np.abs(rec.values - _mu(rec.points)).max()))
            rec0 = reconstruct_alpha(phi, fmap, y, 0.0, radius=0.2, n_samples=50)
            worst_zero = max(worst_zero, float(np.abs(rec0.values).max()))
    ok = worst < 1e-5 and worst_zero < 1e-8
    return ok, f"max |alpha - 1/(1+|x|^2)| {worst:.2e}; seed-0 max |alpha| {worst_zero:.2e}"


def criterion_7():
    phi, psi = make_flow("example61-phi"), make_flow("example61-psi")
    mu = example61_mu()
    X = ball_samples([0.0, 0.0], 2.0, 100, 7)
    checks = {}
    tol = 1e-8

    # subgroup
    ok = True
    for n1, n2 in [(1, 2), (-3, 1), (2, -2), (4, 3)]:
        m1, m2 = n1 * mu, n2 * mu
        if zid_membership(phi, m1, X, tol) and zid_membership(phi, m2, X, tol):
            ok &= bool(zid_membership(phi, m1 + m2, X, 2 * tol)) and bool(zid_membership(phi, -m1, X, 2 * tol))
        else:
            ok = False
    checks["group"] = ok

    # semigroup of im(phi)
    worst = 0.0
    rng = np.random.default_rng(77)
    for flow in (phi, psi):
        for _ in range(3):
            a = bump(rng.uniform(-1, 1, 2), 1.5, rng.uniform(-1, 1))
            b = bump(rng.uniform(-1, 1, 2), 1.5, rng.uniform(-1, 1))
            g = apply_phi(flow, b)
            worst = max(worst, float(np.abs(apply_phi(flow, sigma_compose(a, b, g))(X)
                                            - apply_phi(flow, a)(g(X))).max()))
    checks["semigroup"] = worst < 1e-8

    # interior-case sufficiency
    bflow = make_flow("bump-1d")
    inside = fixed_set_probe(bflow, "-1,4,101").interior_points[:, 0]
    line = np.linspace(-1, 4, 501)[:, None]
    ok = True
    for lo, hi in ((-1.0, 1.0), (2.0, 4.0)):
        part = inside[(inside >= lo) & (inside < hi)]
        c, r = (part.min() + part.max()) / 2, 0.9 * (part.max() - part.min()) / 2
        ok &= bool(zid_membership(bflow, bump([c], r, 2.0), line))
    checks["interior"] = ok

    # orbit constancy
    ok = True
    z = np.array([0.7, -0.9])
    theta = classify_orbit(phi, z, 2.0, tol).period
    orbit = phi(np.linspace(0, theta, 40), np.tile(z, (40, 1)))
    for n in (1, 2, -5):
        vals = (n * mu)(orbit)
        ratio = vals / theta
        ok &= (bool(zid_membership(phi, n * mu, orbit, tol)) and vals.max() - vals.min() < 1e-9
               and np.abs(ratio - np.round(ratio)).max() < 1e-6)
    checks["orbit_constancy"] = ok

    # local rigidity
    fmap = make_fmap(phi, "identity")
    y = np.array([1.1, 0.3])
    r1 = reconstruct_alpha(phi, fmap, y, float(_mu(y)[0]), radius=0.2, n_samples=20, seed=1)
    y2 = r1.points[3]
    r2 = reconstruct_alpha(phi, fmap, y2, float(r1.values[3]), radius=0.2, n_samples=20, seed=2)
    overlap = np.array([p for p in ball_samples(y, 0.2, 200, 5) if np.linalg.norm(p - y2) < 0.2])
    checks["rigidity"] = np.abs(r1.evaluate(overlap) - r2.evaluate(overlap)).max() < 1e-8

    # positivity
    zs = classify_zid(phi, "-2,2,9;-2,2,9")
    checks["positivity"] = zs.case == "infinite_cyclic" and all(v > 0 for _, v in zs.generator_samples)

    # evaluation homomorphism: additivity and injectivity from one point
    tau = EvaluationHom((0.4, 0.1))
    add = all(tau.defect(a, b) == 0.0 for a, b in [(mu, 2 * mu), (mu, bump([0, 0], 1, 0.3)), (-mu, mu)])
    nu = r1.as_shift()
    inj = (abs(nu(y) - mu(y)) < 1e-12 and bool(zid_membership(phi, nu, r1.points, tol))
           and np.abs(nu(r1.points) - mu(r1.points)).max() < 1e-6)
    checks["evaluation_hom"] = add and inj

    failed = [k for k, v in checks.items() if not v]
    return not failed, ("all 7 properties hold" if not failed else f"failed: {', '.join(failed)}")


def criterion_8():
    t0 = time.perf_counter()
    bad = []
    for k in (1, 2, 3, 5):
        action = make_action(f"k-fold-rotation:{k}")
        for steps in (33, 65):
            grid = Grid.parse(f"-2,2,{steps};-2,2,{steps}")
            kern = ineffectivity_kernel(action, grid)
            z = zid_circle(action, grid, kernel=kern)
            nr = newman_check(action, grid, kernel=kern)
            if not (kern.order == k and z.verdict == "constants-in-kernel" and z.order == k
                    and z.constancy_forced and len(z.constants) == k and nr.interior_empty):
                bad.append(f"k={k}@{steps}")
    prod = newman_check(make_action("product-rotation"), "-1,1,17;-1,1,17;-1,1,17")
    if not prod.interior_empty:
        bad.append("product")
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 20
    return ok, (f"kernels k=1,2,3,5 at 33^2 and 65^2, product action: "
                f"{'all consistent' if not bad else 'failed ' + ', '.join(bad)}; {elapsed:.1f}s")


def criterion_9():
    rng = np.random.default_rng(9)
    specs = list(FLOW_NAMES)
    worst = {}
    failures = []
    flows = []
    for name in specs:
        if name == "linear":
            flows.append(("linear(rotation)", make_flow("linear", matrix=rotation_block(0, 1)), 1e-7))
            bp = random_blueprint(rng, 6)
            flows.append(("linear(random)", make_flow("linear", matrix=assemble_real_jordan(bp)), 1e-7))
        elif name == "integrated":
            for field in ("example61-phi", "rotation"):
                flows.append((f"integrated:{field}", make_flow(f"integrated:field={field}"), 1e-5))
        else:
            f = make_flow(name)
            flows.append((name, f, 1e-5 if f.kind == "integrated" else 1e-7))
    for spec in ("k-fold-rotation:1", "k-fold-rotation:2", "k-fold-rotation:3", "k-fold-rotation:5",
                 "product-rotation", "trivial"):
        flows.append((f"lift({spec})", lift_action(make_action(spec)), 1e-7))
    for label, flow, tol in flows:
        rep = check_flow_axioms(flow, random_axiom_samples(flow, 1000, rng), tol)
        worst[label] = max(rep.max_identity_violation, rep.max_group_violation)
        if not rep.passed or rep.checked < 1000:
            failures.append(label)
    top = max(worst, key=worst.get)
    return not failures, (f"{len(flows)} flows, worst {top} at {worst[top]:.2e}"
                          + (f"; failed: {', '.join(failures)}" if failures else ""))


def criterion_10():
    A = _block_diag(rotation_block(0, 1), rotation_block(0, math.sqrt(2)))
    x0 = np.array([0.3, -1.1, 0.7, 0.4])
    v = point_period(A, x0, horizon=200)
    orbit = classify_orbit(make_flow("linear", matrix=A), x0, 200.0)
    gap = min_return_distance(A, x0, 200)
    ok = v.kind == "non_closed" and orbit.kind != "periodic"
    return ok, (f"point_period: {v.kind}; trajectory classifier: {orbit.kind}; "
                f"closest return over [0.5, 200] is {gap:.3f}")


CRITERIA = {n: globals()[f"criterion_{n}"] for n in range(1, 11)}


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n):
    ok, detail = CRITERIA[n]()
    RESULTS[n] = (ok, detail)
    assert ok, detail


if __name__ == "__main__":
    for n, fn in CRITERIA.items():
        ok, detail = fn()
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
