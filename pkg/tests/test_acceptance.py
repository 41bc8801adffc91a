"""Acceptance battery: eleven headline checks with pinned tolerances.

Each check prints a single pass/fail line on the real stdout so it shows up
in a captured pytest run, and enforces a wall-clock budget. Seeds are fixed,
so every statistical verdict here is reproducible.
"""

import math
import time

import numpy as np

from holoheis.group import GroupConfig, GroupElement, group_mul, bracket, k_omega
from holoheis.poly import Polynomial, parse_poly, lid, apply_L, heat_expectation
from holoheis.fock import (
    FockTensor,
    taylor,
    inverse_taylor,
    fock_norm_sq,
    j0_residual,
    grading_pullback,
    fejer_truncate,
)
from holoheis.projection import (
    Projection,
    pi_p,
    gamma_defect,
    compose_with_projection,
    kappa,
    pullback_taylor,
    projection_convergence,
)
from holoheis.geometry import distance_upper, c_factor, bargmann_check, gaussian_bound_check
from holoheis import mc, cli

SKEW = np.array([[[0.0, 1.0], [-1.0, 0.0]]], dtype=complex)
WORKERS = 4


def heis():
    return GroupConfig(2, 1, SKEW)


def random_config(k, d, rng):
    raw = rng.normal(size=(d, k, k)) + 1j * rng.normal(size=(d, k, k))
    return GroupConfig(k, d, raw - np.transpose(raw, (0, 2, 1)))


def random_holo(cfg, rng, terms=4, degree=4):
    out = Polynomial.zero(cfg)
    for _ in range(terms):
        key = [0] * (2 * cfg.n)
        budget = int(rng.integers(1, degree + 1))
        while budget > 0:
            if budget >= 2 and rng.random() < 0.4:
                key[cfg.k + int(rng.integers(0, cfg.d))] += 1
                budget -= 2
            else:
                key[int(rng.integers(0, cfg.k))] += 1
                budget -= 1
        out = out + Polynomial(cfg, {tuple(key): complex(rng.normal(), rng.normal())})
    return out


def rand_elem(cfg, rng, scale=0.7):
    w = scale * (rng.normal(size=cfg.k) + 1j * rng.normal(size=cfg.k))
    c = scale * (rng.normal(size=cfg.d) + 1j * rng.normal(size=cfg.d))
    return GroupElement(cfg, w, c)


def _report(capfd, num, label, ok, detail, started, budget):
    elapsed = time.monotonic() - started
    timed = elapsed < budget
    status = "PASS" if ok and timed else "FAIL"
    with capfd.disabled():
        print(
            f"\n[acceptance {num:02d}] {status} {label}: {detail} "
            f"({elapsed:.1f}s / {budget:.0f}s)",
            flush=True,
        )
    assert ok, f"{label}: {detail}"
    assert timed, f"{label} exceeded its {budget:.0f}s budget ({elapsed:.1f}s)"


def test_01_exact_taylor_isometry(capfd):
    started = time.monotonic()
    rng = np.random.default_rng(101)
    cases = [(heis(), 70), (random_config(3, 2, rng), 30)]
    worst = 0.0
    for cfg, count in cases:
        for _ in range(count):
            f = random_holo(cfg, rng, terms=4, degree=6)
            exact = heat_expectation(f.abs_sq(), 1.0).real
            fock = fock_norm_sq(taylor(f), 1.0)
            worst = max(worst, abs(exact - fock) / max(1.0, abs(exact)))
    _report(
        capfd,
        1,
        "exact norm identity, 100 random polynomials",
        worst <= 1e-9,
        f"worst relative gap {worst:.2e} (tol 1e-9)",
        started,
        10.0,
    )


def test_02_worked_value_three_routes(capfd):
    started = time.monotonic()
    cfg = heis()
    f = parse_poly(cfg, "c1")
    exact = heat_expectation(f.abs_sq(), 1.0).real
    fock = fock_norm_sq(taylor(f), 1.0)
    params = mc.MCParams(T=1.0, steps=1024, paths=100_000, seed=7)
    est = mc.heat_mc(cfg, f.abs_sq(), params, workers=WORKERS)
    ok = (
        abs(exact - 1.25) <= 1e-12
        and abs(fock - 1.25) <= 1e-12
        and est.within(1.25)
    )
    _report(
        capfd,
        2,
        "norm^2 of c1 equals 1.25 by three routes",
        ok,
        f"oracle {exact:.12f}, tensor {fock:.12f}, mc {est.mean.real:.5f}+-{est.stderr:.5f}",
        started,
        60.0,
    )


def test_03_mean_value_property(capfd):
    started = time.monotonic()
    cfg = heis()
    rng = np.random.default_rng(31)
    polys = [random_holo(cfg, rng, terms=4, degree=4) for _ in range(20)]
    params = mc.MCParams(T=1.0, steps=512, paths=20_000, seed=33)
    estimates = mc.heat_sweep(cfg, polys, params, workers=WORKERS)
    misses = sum(
        not est.within(f.constant_term()) for f, est in zip(polys, estimates)
    )
    _report(
        capfd,
        3,
        "holomorphic mean value at the identity, 20 polynomials",
        misses == 0,
        f"{20 - misses}/20 within 3 stderr",
        started,
        60.0,
    )


def test_04_skeleton_reproduction(capfd):
    started = time.monotonic()
    cfg = heis()
    rng = np.random.default_rng(41)
    polys = [random_holo(cfg, rng, terms=3, degree=3) for _ in range(5)]
    base = GroupElement(
        cfg, np.array([0.8, -0.3 + 0.5j]), np.array([0.4 - 0.2j])
    )
    grid = [
        GroupElement(cfg, t * base.w, t * base.c)
        for t in np.linspace(0.1, 1.0, 10)
    ]
    cases = [(f, h) for f in polys for h in grid]
    params = mc.MCParams(T=1.0, steps=256, paths=20_000, seed=43)
    estimates = mc.skeleton_sweep(cfg, cases, params, workers=WORKERS)
    misses = sum(
        not est.within(f.eval(h)) for (f, h), est in zip(cases, estimates)
    )
    _report(
        capfd,
        4,
        "translated averages reproduce point values on a 10-point grid",
        misses == 0,
        f"{50 - misses}/50 within 3 stderr",
        started,
        120.0,
    )


def test_05_ito_isometry_and_orthogonality(capfd):
    started = time.monotonic()
    cfg = heis()
    rng = np.random.default_rng(45)

    def pure(rank, entries):
        comps = [dict() for _ in range(rank + 1)]
        for _ in range(entries):
            key = tuple(int(rng.integers(0, cfg.n)) for _ in range(rank))
            comps[rank][key] = complex(rng.normal(), rng.normal())
        return FockTensor(cfg, comps)

    alphas = [pure(1, 2), pure(2, 3), pure(3, 4)]
    params = mc.MCParams(T=1.0, steps=512, paths=100_000, seed=48)
    ests, cov, cstd = mc.chaos_isometry_mc(cfg, alphas, params, workers=WORKERS)
    gaps = []
    ok = True
    for n, (alpha, est) in enumerate(zip(alphas, ests), start=1):
        target = params.T**n / math.factorial(n) * alpha.rank_norm_sq(n)
        gaps.append(abs(est.mean.real - target) / est.stderr)
        ok = ok and est.within(target)
    off = max(
        abs(cov[i, j]) / cstd[i, j] for i in range(3) for j in range(3) if i != j
    )
    ok = ok and off <= 3.0
    _report(
        capfd,
        5,
        "pairing isometry for ranks 1-3 plus cross-rank orthogonality",
        ok,
        "rank gaps/sigma " + ", ".join(f"{g:.2f}" for g in gaps) + f"; worst off-diag {off:.2f} sigma",
        started,
        120.0,
    )


def test_06_chaos_reconstruction(capfd):
    started = time.monotonic()
    cfg = heis()
    rng = np.random.default_rng(61)

    def w_degree(f):
        return max(
            (sum(key[: cfg.k]) for key in f.terms), default=0
        )

    polys = []
    while len(polys) < 5:
        f = random_holo(cfg, rng, terms=3, degree=4)
        if w_degree(f) >= 2:
            polys.append(f)

    ok = True
    details = []
    for idx, f in enumerate(polys):
        res = {}
        for steps in (256, 512, 1024, 2048):
            params = mc.MCParams(T=1.0, steps=steps, paths=4000, seed=63 + idx)
            res[steps] = mc.chaos_residual(cfg, f, params, workers=WORKERS).mean.real
        r1 = res[256] / res[512]
        r2 = res[512] / res[1024]
        rel = res[2048] / fock_norm_sq(taylor(f), 1.0)
        good = 1.4 <= r1 <= 2.8 and 1.4 <= r2 <= 2.8 and rel <= 0.01
        ok = ok and good
        details.append(f"ratios {r1:.2f}/{r2:.2f} tail {rel:.1e}")
    _report(
        capfd,
        6,
        "reconstruction residual halves per step-doubling, 5 polynomials",
        ok,
        "; ".join(details),
        started,
        300.0,
    )


def test_07_algebraic_identity_suite(capfd):
    started = time.monotonic()
    cfg = heis()
    rng = np.random.default_rng(71)
    tol = 1e-10
    ok = True

    # group axioms, with the explicit chart inverse (-w, -c)
    e = cfg.identity()
    for _ in range(30):
        g1, g2, g3 = (rand_elem(cfg, rng, 1.5) for _ in range(3))
        lhs = group_mul(group_mul(g1, g2), g3)
        rhs = group_mul(g1, group_mul(g2, g3))
        inv = GroupElement(cfg, -g1.w, -g1.c)
        back = group_mul(g1, inv)
        ok = ok and np.allclose(lhs.w, rhs.w, atol=tol) and np.allclose(lhs.c, rhs.c, atol=tol)
        ok = ok and np.allclose(group_mul(g1, e).w, g1.w, atol=tol)
        ok = ok and np.allclose(back.w, 0, atol=tol) and np.allclose(back.c, 0, atol=tol)

    # derivative commutator matches the bracket direction
    f = random_holo(cfg, rng, terms=4, degree=4)
    for _ in range(5):
        h, k = rand_elem(cfg, rng), rand_elem(cfg, rng)
        left = lid(lid(f, k), h) - lid(lid(f, h), k)
        ok = ok and left.close_to(lid(f, bracket(h, k)), tol)
        ok = ok and lid(f, h).is_holomorphic()

    # annihilator and the modulus identity
    for _ in range(5):
        g = random_holo(cfg, rng, terms=3, degree=4)
        ok = ok and apply_L(g).is_zero()
        rhs = Polynomial.zero(cfg)
        for j in range(cfg.n):
            rhs = rhs + 4 * lid(g, cfg.basis_direction(j)).abs_sq()
        ok = ok and apply_L(g.abs_sq()).close_to(rhs, tol)
        ok = ok and j0_residual(taylor(g)) <= tol
        ok = ok and inverse_taylor(taylor(g)).close_to(g, tol)

    # projection defect identity and the pullback two-route agreement
    proj = Projection(cfg, np.array([[0.6, 0.8j]]))
    for _ in range(10):
        g1, g2 = rand_elem(cfg, rng), rand_elem(cfg, rng)
        prod_then = pi_p(proj, group_mul(g1, g2))
        then_prod = group_mul(pi_p(proj, g1), pi_p(proj, g2))
        gap = prod_then.c - then_prod.c
        ok = ok and np.allclose(gap, gamma_defect(proj, g1.w, g2.w), atol=tol)
    for _ in range(2):
        g = random_holo(cfg, rng, terms=3, degree=3)
        pulled = pullback_taylor(proj, g)
        direct = taylor(compose_with_projection(proj, g), maxrank=pulled.maxrank)
        ok = ok and fock_norm_sq(pulled.sub(direct), 1.0) <= tol**2

    # rank-two correction in closed form for the coordinate line
    kap = kappa(Projection.coordinate(cfg, [0]), [cfg.basis_direction(1), cfg.basis_direction(0)])
    ok = ok and kap.to_records() == [(1, [2], [0.5, 0.0])]

    _report(
        capfd,
        7,
        "exact algebraic identity suite",
        ok,
        "axioms, commutator, annihilator, modulus, round trip, defect, corrections",
        started,
        10.0,
    )


def test_08_grading_and_fejer(capfd):
    started = time.monotonic()
    cfg = heis()
    rng = np.random.default_rng(81)
    f = random_holo(cfg, rng, terms=5, degree=5)
    alpha = taylor(f)
    base = fock_norm_sq(alpha, 1.0)
    ok = all(
        abs(fock_norm_sq(grading_pullback(alpha, theta), 1.0) - base) <= 1e-12 * base
        for theta in (0.0, math.pi / 7, 1.0, math.pi / 2, math.pi, 2.7)
    )
    for n in (1, 2, 3):
        cut = fejer_truncate(alpha, n)
        ok = ok and all(
            cut.rank_norm_sq(r) == 0.0 for r in range(n + 1, alpha.maxrank + 1)
        )
    errs = [
        fock_norm_sq(fejer_truncate(alpha, n).sub(alpha), 1.0) for n in (64, 256, 1024, 4096)
    ]
    ok = ok and all(a > b for a, b in zip(errs[:-1], errs[1:]))
    ok = ok and errs[-1] <= 1e-4 * base
    _report(
        capfd,
        8,
        "grading invariance and averaged truncation",
        ok,
        f"norm drift <=1e-12, truncation tail {errs[-1]:.2e} vs norm^2 {base:.2e}",
        started,
        5.0,
    )


def test_09_projection_convergence(capfd):
    started = time.monotonic()
    rng = np.random.default_rng(91)
    cfg = random_config(6, 1, rng)
    f = random_holo(cfg, rng, terms=3, degree=3) + parse_poly(cfg, "w6*w5 + w6*c1")
    rows = projection_convergence(cfg, f, T=1.0)
    totals = [r["total"] for r in rows]
    ok = (
        totals[0] > 1e-6
        and all(a >= b - 1e-12 for a, b in zip(totals[:-1], totals[1:]))
        and totals[-1] == 0.0
    )
    _report(
        capfd,
        9,
        "nested coordinate projections converge, k=6 random form",
        ok,
        "totals " + ", ".join(f"{t:.2e}" for t in totals),
        started,
        10.0,
    )


def test_10_bound_sweeps(capfd):
    started = time.monotonic()
    cfg = heis()
    rng = np.random.default_rng(17)
    violations = 0
    for i in range(100):
        f = random_holo(cfg, rng, terms=4, degree=4)
        h = rand_elem(cfg, rng)
        T = float(rng.choice([0.5, 1.0, 2.0]))
        d_up = distance_upper(cfg, h, segments=3, restarts=2, seed=i)
        b1 = bargmann_check(cfg, f, h, T, d_up=d_up)
        b2 = gaussian_bound_check(cfg, f, h, T, p=2.0, d_up=d_up)
        if not (b1["pass"] and b2["pass"]):
            violations += 1
    spot = abs(k_omega(cfg) + 1.0) <= 1e-12 and c_factor(0.0) == 1.0
    _report(
        capfd,
        10,
        "pointwise growth bounds over 100 random cases",
        violations == 0 and spot,
        f"{violations} violations; k_omega and c(0) spot values ok={spot}",
        started,
        120.0,
    )


def test_11_cli_reproducibility(capfd, tmp_path):
    started = time.monotonic()
    bodies = []
    codes = []
    for name, extra in [("a", []), ("b", []), ("c", ["--workers", "3"])]:
        out = tmp_path / f"{name}.csv"
        codes.append(
            cli.main(["verify-all", "--paths", "4000", "--out", str(out)] + extra)
        )
        text = out.read_text()
        bodies.append(
            "\n".join(l for l in text.splitlines() if not l.startswith("#"))
        )
    ok = codes == [0, 0, 0] and bodies[0] == bodies[1] == bodies[2]
    _report(
        capfd,
        11,
        "verify-all is byte-stable across reruns and worker counts",
        ok,
        f"exit codes {codes}, {len(bodies[0].splitlines()) - 1} battery rows",
        started,
        240.0,
    )
