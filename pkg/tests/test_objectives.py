import pytest

from d2dcache import (MetricConstants, ParameterError, RadioParams,
                      UtilityTriple, check_instance_ordering,
                      cost_objective, ee_weighted_objective, hitrate_objective,
                      throughput_objective, tradeoff_objective, weighted_objective)

MC = MetricConstants.from_radio(RadioParams())


def test_default_constants_from_radio():
    r_min = RadioParams().capacity_threshold
    assert MC.t_d == pytest.approx(20e6 * r_min)
    assert MC.t_b == pytest.approx(200e3 * r_min)
    assert MC.t_s == pytest.approx(2.0 * MC.t_d)
    assert MC.c_b == pytest.approx(10 ** ((26.0 - 30.0) / 10.0))
    assert MC.c_d == pytest.approx(0.1)
    assert MC.c_s == 0.0


def test_triple_ordering_validation():
    UtilityTriple(1.0, 1.0, 0.5)  # u_s below u_d is fine at triple level
    with pytest.raises(ParameterError):
        UtilityTriple(2.0, 1.0, 3.0)  # u_b > u_d never is
    with pytest.raises(ParameterError):
        MetricConstants(t_b=2.0, t_d=1.0, t_s=3.0, c_b=1.0, c_d=0.5)
    with pytest.raises(ParameterError):
        MetricConstants(t_b=1.0, t_d=2.0, t_s=3.0, c_b=0.1, c_d=0.5)


def test_named_objectives():
    thr = throughput_objective(MC)
    assert (thr.u_b, thr.u_d, thr.u_s) == (MC.t_b, MC.t_d, MC.t_s)
    cost = cost_objective(MC)
    assert (cost.u_b, cost.u_d, cost.u_s) == (-MC.c_b, -MC.c_d, -MC.c_s)
    hit = hitrate_objective(4)
    assert (hit.u_b, hit.u_d, hit.u_s) == (0.0, 1.0, 0.25)
    w = weighted_objective(MC, 1.0, 0.0)
    assert (w.u_b, w.u_d, w.u_s) == (MC.t_b, MC.t_d, MC.t_s)
    with pytest.raises(ParameterError):
        weighted_objective(MC, -1.0, 0.0)


def test_tradeoff_objective_scaling():
    import dataclasses
    mc = dataclasses.replace(MC, zeta=0.5)
    tri = tradeoff_objective(mc, 10)
    assert tri.u_b == MC.t_b
    assert tri.u_d == pytest.approx(MC.t_d * (1.0 + 0.5 * 10))
    assert tri.u_s == pytest.approx(MC.t_s + 0.5 * MC.t_d)
    # zeta = 0 degenerates to plain throughput
    zero = tradeoff_objective(MC, 10)
    assert (zero.u_b, zero.u_d, zero.u_s) == (MC.t_b, MC.t_d, MC.t_s)


def test_ee_surrogate_range():
    tri = ee_weighted_objective(MC, 0.0)
    assert (tri.u_b, tri.u_d, tri.u_s) == (MC.t_b, MC.t_d, MC.t_s)
    # cost ordering c_b >= c_d >= c_s keeps the surrogate ordered at any t
    for t in (1.0, 1e3, 1e9, 1e15):
        sur = ee_weighted_objective(MC, t)
        assert sur.u_b <= sur.u_d <= sur.u_s
    with pytest.raises(ParameterError):
        ee_weighted_objective(MC, -1.0)


def test_instance_ordering_check():
    check_instance_ordering(UtilityTriple(0.0, 1.0, 0.25), 4)
    with pytest.raises(ParameterError):
        check_instance_ordering(UtilityTriple(0.0, 1.0, 0.05), 4)
    # degenerate all-equal triple only passes for a single active user
    check_instance_ordering(UtilityTriple(1.0, 1.0, 1.0), 1)
