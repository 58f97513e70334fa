import math

import numpy as np
import pytest

from d2dcache import (DomainError, LinkProbabilityMatrix, ParameterError,
                      RadioParams, UserLayout, dbm_to_watts, link_prob_case1,
                      link_prob_case2, link_prob_case3, pathgain, power_control,
                      power_control_watts, square_distance_pdf, watts_to_dbm,
                      with_tx_power)

RP = RadioParams()


def test_db_conversions():
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(0.0) == pytest.approx(1e-3)
    assert watts_to_dbm(1.0) == pytest.approx(30.0)
    assert watts_to_dbm(0.0) == -math.inf


def test_pathgain_at_breakpoint_matches_free_space_constant():
    # 20 log10(4 pi d0 / lambda) at 2 GHz, d0 = 10 m
    gain = pathgain(10.0, RP)
    pl_db = -10.0 * math.log10(gain)
    assert pl_db == pytest.approx(58.4623720993283, abs=1e-9)
    assert gain == pytest.approx(1.424829144970376e-06, rel=1e-12)


def test_pathgain_clamped_below_breakpoint_and_monotone_beyond():
    assert pathgain(1.0, RP) == pathgain(10.0, RP)
    d = np.array([10.0, 20.0, 40.0, 80.0, 160.0])
    g = pathgain(d, RP)
    assert np.all(np.diff(g) < 0)
    # doubling distance costs 10 * alpha * log10(2) dB
    ratios_db = -10.0 * np.log10(g[1:] / g[:-1])
    assert np.allclose(ratios_db, 10.0 * RP.pathloss_exponent_alpha * math.log10(2.0))


def test_capacity_threshold_and_snr_gap():
    assert RP.snr_gap == pytest.approx(10 ** 0.5)
    assert RP.capacity_threshold == pytest.approx(math.log2(1.0 + 10 ** 0.5))


def test_case1_all_ones():
    link = link_prob_case1(5)
    assert np.array_equal(link.entries, np.ones((5, 5)))
    with pytest.raises(ParameterError):
        link_prob_case1(0)


def test_case2_matches_hand_computed_entry():
    layout = UserLayout(np.array([[0.0, 0.0], [30.0, 40.0]]), 80.0)
    shadow = np.ones((2, 2))
    link = link_prob_case2(layout, shadow, RP)
    e_d = dbm_to_watts(RP.d2d_tx_power_dbm)
    threshold = RP.d2d_noise_power_watts * RP.snr_gap
    expected = math.exp(-threshold / (e_d * pathgain(50.0, RP)))
    assert link.entries[0, 1] == pytest.approx(expected, rel=1e-12)
    assert link.entries[1, 0] == link.entries[0, 1]
    assert link.entries[0, 0] == 1.0


def test_case2_monotone_in_shadowing_and_power():
    layout = UserLayout(np.array([[0.0, 0.0], [60.0, 0.0]]), 80.0)
    weak = link_prob_case2(layout, np.full((2, 2), 0.5), RP).entries[0, 1]
    strong = link_prob_case2(layout, np.full((2, 2), 2.0), RP).entries[0, 1]
    assert weak < strong
    low = link_prob_case2(layout, np.ones((2, 2)), with_tx_power(RP, 10.0)).entries[0, 1]
    high = link_prob_case2(layout, np.ones((2, 2)), with_tx_power(RP, 30.0)).entries[0, 1]
    assert low < high


def test_square_distance_pdf_shape_and_moments():
    assert square_distance_pdf(0.0) == 0.0
    assert square_distance_pdf(math.sqrt(2.0)) == pytest.approx(0.0, abs=1e-9)
    assert square_distance_pdf(0.5) == pytest.approx(2 * 0.5 * (math.pi + 0.25 - 2.0))
    grid = np.linspace(0.0, math.sqrt(2.0), 200001)
    vals = square_distance_pdf(grid)
    mass = np.trapezoid(vals, grid)
    mean = np.trapezoid(grid * vals, grid)
    assert abs(mass - 1.0) < 1e-8
    assert mean == pytest.approx(0.5214054331516634, abs=1e-6)
    with pytest.raises(DomainError):
        square_distance_pdf(1.5)
    with pytest.raises(DomainError):
        square_distance_pdf(-0.1)


def test_case3_frozen_value_and_monotonicity():
    p80 = link_prob_case3(80.0, RP)
    assert p80 == pytest.approx(0.9962589186172577, abs=1e-5)
    assert 0.0 < p80 <= 1.0
    # smaller clusters at fixed power have stronger links, and vice versa
    assert link_prob_case3(40.0, RP) > p80 > link_prob_case3(160.0, RP)
    # lower transmit power weakens every link
    assert link_prob_case3(80.0, with_tx_power(RP, 10.0)) < p80


def test_case3_degenerate_shadowing_branch():
    rp0 = RadioParams(shadow_sigma_db=0.0)
    p = link_prob_case3(80.0, rp0)
    assert 0.0 < p <= 1.0
    # with sigma -> 0 the full integral approaches the degenerate branch
    rp_small = RadioParams(shadow_sigma_db=1e-3)
    assert link_prob_case3(80.0, rp_small) == pytest.approx(p, abs=1e-4)


def test_power_control_formula_and_edge_cases():
    watts = power_control_watts(90.0, RP, 16.0)
    alpha = RP.pathloss_exponent_alpha
    expected = (((math.sqrt(16.0) - 1.0) * 90.0 / 10.0) ** alpha
                * (4.0 * math.pi * 10.0 / RP.wavelength_m) ** 2
                * 2.0 ** (alpha / 2.0) * RP.d2d_noise_power_watts)
    assert watts == pytest.approx(expected, rel=1e-12)
    assert power_control(90.0, RP, 16.0) == pytest.approx(15.69, abs=0.05)
    assert power_control(90.0, RP, 1.0) == -math.inf
    with pytest.raises(ParameterError):
        power_control(90.0, RP, 0.5)
    with pytest.raises(ParameterError):
        power_control(-1.0, RP, 16.0)


def test_link_matrix_validation():
    with pytest.raises(ParameterError):
        LinkProbabilityMatrix(np.array([[1.0, 0.5], [0.5, 0.9]]))  # diag != 1
    with pytest.raises(ParameterError):
        LinkProbabilityMatrix(np.array([[1.0, 1.5], [1.5, 1.0]]))
    uni = LinkProbabilityMatrix.uniform(3, 0.7)
    assert uni.entries[0, 1] == 0.7 and uni.entries[1, 1] == 1.0


def test_layout_validation():
    with pytest.raises(ParameterError):
        UserLayout(np.array([[0.0, 90.0]]), 80.0)
    layout = UserLayout(np.array([[0.0, 0.0], [3.0, 4.0]]), 10.0)
    assert layout.pairwise_distances()[0, 1] == pytest.approx(5.0)
