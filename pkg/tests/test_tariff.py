import math

import numpy as np
import pytest

from bundleopt.errors import ConditionIVViolation, ContractViolation, ModelFormatError
from bundleopt.tariff import (QuantityInstance, TariffSchedule, brute_force_tariff, conditional_batch_volume,
                              construct_optimal_tariff, quality_root_instance, tariff_choice, tariff_profit)
from bundleopt.volumes import optimal_cutoff

FEE = 2 / math.sqrt(3)


def proportional(q, t):
    return q * np.asarray(t, dtype=float)


def mussa_rosen():
    levels = (1, 2, 3, 4)
    return QuantityInstance(levels, proportional, tuple(0.1 * q * q for q in levels))


def test_instance_validation():
    with pytest.raises(ModelFormatError):
        QuantityInstance((1, 2), proportional, (0.5, 0.2))
    with pytest.raises(ModelFormatError):
        QuantityInstance((2, 1), proportional)
    with pytest.raises(ModelFormatError):
        QuantityInstance((1, 2), proportional, (0.1,))


def test_market_view_uses_cost_increments():
    inst = mussa_rosen().as_market()
    assert inst.costs == pytest.approx((0.1, 0.3, 0.5, 0.7))


def test_batch_bundles():
    qi = mussa_rosen()
    b, held = qi.batch(2, 1)
    assert b.products == (2, 3)
    assert held.products == (1,)
    with pytest.raises(ContractViolation):
        qi.batch(4, 1)


def test_schedule_price_lookup():
    s = TariffSchedule((2, 5), (1.0, 1.5))
    assert [s.price(k) for k in range(7)] == [0.0, 1.0, 1.0, 1.5, 1.5, 1.5, math.inf]
    assert s.top == 5
    with pytest.raises(ContractViolation):
        TariffSchedule((3, 2), (1.0, 2.0))
    assert TariffSchedule.from_level_prices([1.0, 1.0, 2.0]) == TariffSchedule((2, 3), (1.0, 2.0))


def test_choice_examples():
    qi = quality_root_instance([1.0, 2.0])
    flat = TariffSchedule((2,), (FEE,))
    assert tariff_choice(qi, flat, 0.5) == 2
    assert tariff_choice(qi, flat, 0.2) == 0
    assert tariff_choice(qi, flat, 1 / 3) == 2  # indifferent, ties go up
    np.testing.assert_array_equal(tariff_choice(qi, flat, np.array([0.1, 0.9])), [0, 2])


def test_conditional_batch_volume_quality_root():
    qi = quality_root_instance([1.0, 2.0])
    s = conditional_batch_volume(qi, 2, 0)
    assert s.d_star == pytest.approx(2 / 3, abs=1e-6)
    assert s.t_star == pytest.approx(1 / 3, abs=1e-6)
    assert conditional_batch_volume(qi, 1, 0).d_star == pytest.approx(0.5, abs=1e-6)


def test_conditional_batch_volume_linear_units():
    qi = QuantityInstance((1, 2, 3), proportional)
    for q, given in ((1, 0), (2, 0), (1, 2), (2, 1)):
        assert conditional_batch_volume(qi, q, given).d_star == pytest.approx(0.5, abs=1e-6)


def test_flat_fee_on_quality_root():
    qi = quality_root_instance(np.linspace(0.25, 2.0, 8))
    s = construct_optimal_tariff(qi)
    assert s.breakpoints == (8,)
    assert s.tier_prices[0] == pytest.approx(FEE, abs=1e-6)
    assert s.cutoffs[0] == pytest.approx(1 / 3, abs=1e-6)
    assert tariff_profit(qi, s) == pytest.approx(2 / 3 * FEE, abs=1e-6)
    assert s.to_dict(qi)["quantities"] == [2.0]


def test_quality_root_jumps_from_nothing_to_top():
    qi = quality_root_instance(np.linspace(0.25, 2.0, 8))
    s = construct_optimal_tariff(qi)
    t = np.linspace(0, 1, 301)
    k = tariff_choice(qi, s, t)
    assert set(k.tolist()) == {0, 8}
    first = t[np.argmax(k > 0)]
    assert first == pytest.approx(1 / 3, abs=2 / 300)


def test_proportional_values_violate_uniqueness():
    with pytest.raises(ConditionIVViolation) as exc:
        construct_optimal_tariff(QuantityInstance((1, 2, 3), proportional))
    assert exc.value.tied == (1, 2, 3)
    assert "condition (iv)" in str(exc.value)


def test_mussa_rosen_fully_separates():
    qi = mussa_rosen()
    s = construct_optimal_tariff(qi)
    assert s.breakpoints == (1, 2, 3, 4)
    np.testing.assert_allclose(s.cutoffs, [0.55, 0.65, 0.75, 0.85], atol=1e-6)
    # cumulative tiers: each step adds the batch price k * t* for one more unit
    np.testing.assert_allclose(s.tier_prices, [0.55, 1.2, 1.95, 2.8], atol=1e-6)
    assert tariff_profit(qi, s) == pytest.approx(0.41, abs=1e-6)


def test_lowest_buyer_matches_first_volume():
    qi = mussa_rosen()
    s = construct_optimal_tariff(qi)
    t = np.linspace(0, 1, 2001)
    k = tariff_choice(qi, s, t)
    first = t[np.argmax(k > 0)]
    assert 1 - first == pytest.approx(conditional_batch_volume(qi, 1, 0).d_star, abs=1e-3)
    assert s.breakpoints[0] == 1


def test_profit_trivial_schedules():
    qi = quality_root_instance([1.0, 2.0])
    assert tariff_profit(qi, TariffSchedule((2,), (100.0,))) == pytest.approx(0.0)
    assert tariff_profit(qi, TariffSchedule((2,), (0.0,))) == pytest.approx(0.0)


def test_brute_force_single_level_is_monopoly_price():
    qi = quality_root_instance([2.0])
    r = brute_force_tariff(qi)
    sol = optimal_cutoff(qi.as_market(), qi.batch(1, 0)[0])
    assert r.profit == pytest.approx(sol.profit, rel=1e-4)
    assert r.level_prices[0] == pytest.approx(FEE, abs=5e-3)


def test_brute_force_close_to_flat_fee():
    qi = quality_root_instance([1.0, 2.0])
    constructed = tariff_profit(qi, construct_optimal_tariff(qi))
    r = brute_force_tariff(qi)
    assert abs(r.profit - constructed) <= 0.005 * constructed


def test_brute_force_separating_beats_pooling():
    qi = mussa_rosen()
    r = brute_force_tariff(qi)
    pooled = max(tariff_profit(qi, TariffSchedule((k,), (p,)))
                 for k in range(1, 5) for p in np.linspace(0.2, 3.0, 57))
    assert r.profit >= pooled
    assert r.profit == pytest.approx(0.41, abs=1e-3)
