import math

import numpy as np
import pytest

from glucodelay.functions import constant, make_Fa
from glucodelay.intervalmap import (analyze_map, big_F, big_H, brute_force_regime,
                                    classify_de_solution, classify_regime, find_two_cycles,
                                    imbedded_intervals, iterate_difference_equation,
                                    iterate_phi, persistence_bounds, phi, phi_limits)
from glucodelay.model import ModelConfig, solve_equilibrium, translate_to_zero
from randomized import random_hill_configs


def test_big_F(canonical):
    assert big_F(canonical, 0.0) == 0.0
    vals = [big_F(canonical, g) for g in np.linspace(0, 50, 501)]
    assert np.all(np.diff(vals) > 0)
    f1 = canonical.f1(1.0)
    assert big_F(canonical, 1.0) == pytest.approx(1.5 + 0.5 * (2 + math.atan(f1)), abs=1e-15)


def test_big_H(canonical):
    a0 = canonical.f1(0.0)
    assert big_H(canonical, 0.0) == pytest.approx(1.0 + 4 / (1 + a0), abs=1e-15)
    vals = [big_H(canonical, g) for g in np.linspace(0, 50, 501)]
    assert np.all(np.diff(vals) < 0)
    # f5 has limit 0, so H tends to G_in from above
    assert big_H(canonical, 1e8) > 1.0
    assert big_H(canonical, 1e8) == pytest.approx(1.0 + 4 / 3.5, abs=1e-6)


def test_phi_fixed_point_and_limits(canonical):
    eq = solve_equilibrium(canonical)
    assert phi(canonical, eq.g_star) == pytest.approx(eq.g_star, abs=1e-10)
    phi0, _ = phi_limits(canonical)
    assert phi(canonical, 0.0) == pytest.approx(phi0, abs=1e-12)
    target = 1.0 + canonical.f5(canonical.f1(0.0))
    assert big_F(canonical, phi0) == pytest.approx(target, abs=1e-10)


@pytest.mark.parametrize("name", ["canonical", "a2", "msin_fa", "msin_fb"])
def test_phi_decreasing(name, request):
    cfg = request.getfixturevalue(name)
    lo, hi = phi_limits(cfg)[1], phi_limits(cfg)[0]
    xs = np.linspace(lo, hi, 300)
    vals = [phi(cfg, x) for x in xs]
    assert np.all(np.diff(vals) <= 0)


def test_iterate_phi(canonical, a2):
    g = solve_equilibrium(canonical).g_star
    orbit = iterate_phi(canonical, g, 10)
    assert max(abs(x - g) for x in orbit) < 1e-10
    orbit = iterate_phi(canonical, 0.1, 200)
    assert abs(orbit[-1] - g) < 1e-6
    orbit = np.array(iterate_phi(a2, 0.9, 40))
    even, odd = np.diff(orbit[0::2]), np.diff(orbit[1::2])
    assert np.all(even >= 0) or np.all(even <= 0)
    assert np.all(odd >= 0) or np.all(odd <= 0)


@pytest.mark.parametrize("name", ["canonical", "a2", "msin_fa", "msin_fb"])
def test_interval_nesting(name, request):
    ana = imbedded_intervals(request.getfixturevalue(name))
    phi0, phi_inf = phi_limits(request.getfixturevalue(name))
    assert ana.intervals[0] == (phi_inf, phi0)
    for (a, b), (c, d) in zip(ana.intervals, ana.intervals[1:]):
        assert a <= c <= d <= b
        assert d - c <= b - a


def test_a1_collapses(canonical):
    ana = analyze_map(canonical)
    assert ana.l_star[1] - ana.l_star[0] < 1e-8
    assert ana.two_cycles == []
    assert ana.regime == "A1"


def test_msin_fa_cycles(msin_fa):
    ana = analyze_map(msin_fa)
    alpha, beta = ana.l_star
    assert phi(msin_fa, alpha) == pytest.approx(beta, abs=1e-9)
    cycles = ana.two_cycles
    assert len(cycles) >= 2
    inner = [c for c in cycles if c.gamma > alpha + 1e-6]
    assert inner
    for c in inner:
        assert alpha < c.gamma < 0.0 < c.delta < beta
    assert [c.stability for c in cycles].count("attracting") == 2
    assert ana.regime == "A3"


def test_cycle_residuals(msin_fa, msin_fb, a2):
    for cfg in (msin_fa, msin_fb, a2):
        for c in find_two_cycles(cfg, tol=1e-10):
            assert max(abs(phi(cfg, c.gamma) - c.delta), abs(phi(cfg, c.delta) - c.gamma)) <= 1e-9
            assert c.gamma < solve_equilibrium(cfg).g_star < c.delta


def test_symmetric_odd_map():
    cfg = ModelConfig(variant="MSs", a1=1.0, a2=0.5, a4=0.0, f5=make_Fa(1, 2))
    cycles = find_two_cycles(cfg)
    assert cycles
    for c in cycles:
        assert c.delta == pytest.approx(-c.gamma, abs=1e-9)


def test_fb_is_a4(msin_fb):
    ana = analyze_map(msin_fb)
    assert abs(ana.slope_at_fixed_point) < 1e-6
    assert ana.regime == "A4"


def test_classify_regime_collapsed(canonical):
    ana = imbedded_intervals(canonical)
    assert classify_regime(ana) == "A1"


def test_persistence(canonical, a2):
    for cfg in (canonical, a2):
        pb = persistence_bounds(cfg)
        assert pb.m_I == pytest.approx(cfg.tau0 * cfg.f1(0.0), abs=0)
        assert pb.M_I == pytest.approx(cfg.tau0 * cfg.f1.limit_at_infinity)
        assert 0 < pb.m_I < pb.M_I and 0 < pb.m_G < pb.M_G
        c, d, al, be = pb.refined
        assert pb.m_I <= c <= d <= pb.M_I
        assert pb.m_G <= al <= be <= pb.M_G


def test_difference_equation_matches_map(a2, canonical):
    for cfg in (a2, canonical):
        de = iterate_difference_equation(cfg, 0.9, 100)
        ph = iterate_phi(cfg, 0.9, 100)
        assert np.max(np.abs(np.subtract(de, ph))) <= 2e-10
    g = solve_equilibrium(canonical).g_star
    assert np.ptp(iterate_difference_equation(canonical, g, 20)) < 1e-12
    tail = iterate_difference_equation(a2, 0.9, 200)[-6:]
    assert abs(tail[0] - tail[2]) < 1e-9 and abs(tail[0] - tail[1]) > 0.1


def test_classify_de_solution_examples():
    assert classify_de_solution([0.7] * 64) == "stable"
    assert classify_de_solution([0.5, 1.0] * 40) == "periodic2"
    slow = [(-0.99) ** n for n in range(100)]
    assert classify_de_solution(slow) == "undecided"
    with pytest.raises(ValueError):
        classify_de_solution([1.0] * 10)


def test_fixed_point_consistency_random():
    for cfg in random_hill_configs(10, seed=7):
        g = solve_equilibrium(cfg).g_star
        assert phi(cfg, g) == pytest.approx(g, abs=1e-9)


def test_regime_oracle_equivalence():
    expected = {"A1": "fixed", "A2": "cycle", "A3": "mixed"}
    for cfg in random_hill_configs(20):
        ana = analyze_map(cfg)
        assert ana.regime in expected
        assert brute_force_regime(cfg, n_seeds=50) == expected[ana.regime]


def test_translated_map_is_shifted(canonical):
    t = translate_to_zero(canonical)
    g = solve_equilibrium(canonical).g_star
    for x in (0.7, 0.9, 1.1):
        assert phi(t, x - g) == pytest.approx(phi(canonical, x) - g, abs=1e-9)
