"""Derivative tensors, the norm identity, annihilator residual, truncations."""

import math

import numpy as np
import pytest

from holoheis.group import GroupConfig
from holoheis.poly import Polynomial, parse_poly, heat_expectation
from holoheis.fock import (
    FockTensor,
    taylor,
    inverse_taylor,
    fock_norm_sq,
    fock_inner,
    j0_residual,
    grading_pullback,
    fejer_truncate,
)

SKEW = np.array([[[0.0, 1.0], [-1.0, 0.0]]], dtype=complex)


def heis():
    return GroupConfig(2, 1, SKEW)


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


def test_taylor_c1_reference_records():
    cfg = heis()
    alpha = taylor(parse_poly(cfg, "c1"))
    assert alpha.to_records() == [
        (1, [2], [1.0, 0.0]),
        (2, [0, 1], [0.5, 0.0]),
        (2, [1, 0], [-0.5, 0.0]),
    ]


def test_taylor_rejects_non_holomorphic():
    cfg = heis()
    with pytest.raises(ValueError):
        taylor(parse_poly(cfg, "w1*wbar1"))


def test_taylor_rank_bounded_by_graded_degree():
    cfg = heis()
    f = parse_poly(cfg, "w1^2*c1")  # graded degree 4
    alpha = taylor(f)
    assert alpha.nonzero_maxrank() == 4
    with pytest.raises(ValueError):
        taylor(f, maxrank=3)


def test_inverse_taylor_roundtrip():
    cfg = heis()
    rng = np.random.default_rng(0)
    for _ in range(8):
        f = random_holo(cfg, rng)
        assert inverse_taylor(taylor(f)).close_to(f, 1e-10)


def test_norm_identity_against_heat_oracle():
    cfg = heis()
    rng = np.random.default_rng(1)
    for _ in range(10):
        f = random_holo(cfg, rng)
        for T in (0.5, 1.0, 2.0):
            lhs = fock_norm_sq(taylor(f), T)
            rhs = heat_expectation(f.abs_sq(), T).real
            assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-12)


def test_fock_inner_polarizes_norm():
    cfg = heis()
    rng = np.random.default_rng(2)
    f, g = random_holo(cfg, rng), random_holo(cfg, rng)
    af, ag = taylor(f), taylor(g)
    T = 0.8
    # <a+b, a+b> = |a|^2 + |b|^2 + 2 Re <a, b>
    total = fock_norm_sq(af.add(ag), T)
    split = fock_norm_sq(af, T) + fock_norm_sq(ag, T) + 2 * fock_inner(af, ag, T).real
    assert total == pytest.approx(split, rel=1e-11)
    swapped = fock_inner(ag, af, T)
    assert fock_inner(af, ag, T) == pytest.approx(np.conj(swapped), rel=1e-11)


def test_j0_residual_reference_values():
    cfg = heis()
    assert j0_residual(taylor(parse_poly(cfg, "c1"))) == pytest.approx(0.0, abs=1e-12)
    anti = FockTensor(cfg, [{}, {}, {(0, 1): 0.5, (1, 0): -0.5}])
    sym = FockTensor(cfg, [{}, {}, {(0, 1): 0.5, (1, 0): 0.5}])
    assert j0_residual(anti) == pytest.approx(1.0, abs=1e-12)
    assert j0_residual(sym) == pytest.approx(0.0, abs=1e-12)


def test_j0_residual_vanishes_on_taylor_range():
    cfg = heis()
    rng = np.random.default_rng(3)
    for _ in range(6):
        assert j0_residual(taylor(random_holo(cfg, rng))) <= 1e-10


def test_grading_pullback_is_isometry():
    cfg = heis()
    rng = np.random.default_rng(4)
    f = random_holo(cfg, rng)
    alpha = taylor(f)
    for theta in (0.3, math.pi, 2.1):
        rotated = grading_pullback(alpha, theta)
        assert fock_norm_sq(rotated, 1.3) == pytest.approx(fock_norm_sq(alpha, 1.3), rel=1e-12)


def test_grading_pullback_phase_convention():
    cfg = heis()
    alpha = taylor(parse_poly(cfg, "c1"))
    # every entry of taylor(c1) has rank + central count = 2, so theta = pi fixes it
    assert grading_pullback(alpha, math.pi).close_to(alpha, 1e-12)
    # theta = pi/2 multiplies those entries by exp(i pi) = -1
    assert grading_pullback(alpha, math.pi / 2).close_to(alpha.scale(-1.0), 1e-12)


def test_fejer_truncate_reference_weights():
    cfg = heis()
    cut = fejer_truncate(taylor(parse_poly(cfg, "w1")), 2)
    assert cut.to_records() == [(1, [0], [0.5, 0.0])]


def test_fejer_truncate_kills_high_degrees():
    cfg = heis()
    alpha = taylor(parse_poly(cfg, "w1^3 + c1"))
    cut = fejer_truncate(alpha, 2)
    assert cut.rank_norm_sq(3) == 0.0
    # c1 contributes rank-1 entries of degree 2 (one central index): weight 0 at n = 2
    assert cut.entry((2,)) == 0.0
    with pytest.raises(ValueError):
        fejer_truncate(alpha, 0)


def test_fejer_weights_increase_to_one():
    cfg = heis()
    f = parse_poly(cfg, "w1^2 + c1*w2")
    alpha = taylor(f)
    for n in (4, 8, 16):
        cut = fejer_truncate(alpha, n)
        for r in range(alpha.maxrank + 1):
            assert cut.rank_norm_sq(r) <= alpha.rank_norm_sq(r) + 1e-15
    # exact weight: entry scales by 1 - degree/n, degree = rank + central count
    n = 16
    cut = fejer_truncate(alpha, n)
    assert cut.entry((0, 0)) == pytest.approx(alpha.entry((0, 0)) * (1 - 2 / n), rel=1e-12)
    assert cut.entry((2, 1)) == pytest.approx(alpha.entry((2, 1)) * (1 - 3 / n), rel=1e-12)


def test_records_roundtrip():
    cfg = heis()
    alpha = taylor(parse_poly(cfg, "w1*c1 + w2^2"))
    again = FockTensor.from_records(cfg, alpha.to_records())
    assert again.close_to(alpha, 1e-14)
