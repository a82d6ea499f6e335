import numpy as np
import pytest

from bundleopt.core import AddOnModel, AdditiveModel, Bundle, MarketInstance
from bundleopt.errors import ContractViolation, PreconditionError
from bundleopt.oracle import (Classification, Strategy, all_menus, brute_force_best, classify_masses,
                              classify_outcome, consumer_choice, demand, evaluate_strategy, grid_plan,
                              optimize_prices, strategy_profit)
from bundleopt.volumes import optimal_cutoff

B1, B2, GRAND = Bundle.of(2, 1), Bundle.of(2, 2), Bundle.grand(2)


def addon(k2, k1=0.2):
    return MarketInstance(AddOnModel(k1, k2), (0.0, 0.0))


def test_strategy_validation():
    with pytest.raises(ContractViolation):
        Strategy((Bundle.empty(2),), (1.0,))
    with pytest.raises(ContractViolation):
        Strategy((B1, B1), (1.0, 2.0))
    with pytest.raises(ContractViolation):
        Strategy((B1,), (float("nan"),))
    with pytest.raises(ContractViolation):
        Strategy((B1,), (1.0, 2.0))
    s = Strategy.of({GRAND: 1.0, B1: 0.6})
    assert s.menu == (B1, GRAND)
    assert s.price(GRAND) == 1.0
    assert s.encoding == 0b101


def test_consumer_choice_high_type_takes_grand():
    s = Strategy((B1, GRAND), (0.6, 1.0))
    c = consumer_choice(addon(0.8), s, 0.9)
    assert c.union == GRAND
    assert c.basket == (GRAND,)
    assert c.surplus == pytest.approx(1.1 + 0.9 ** 0.8 - 1.0)
    assert c.surplus == pytest.approx(1.0192, abs=1e-4)


def test_consumer_choice_ties_go_to_seller():
    inst = addon(2 / 3)
    p = inst.model.value(GRAND, 0.4)
    c = consumer_choice(inst, Strategy((GRAND,), (p,)), 0.4)
    assert c.union == GRAND
    # buying {1} and {2} separately or the bundle costs the same; the seller earns the same too,
    # so the lower subset index wins
    s = Strategy((B1, B2, GRAND), (0.6, 0.0, 0.6))
    c = consumer_choice(inst, s, 0.9)
    assert c.union == GRAND
    assert c.basket == (B1, B2)


def test_batched_choice_matches_enumeration():
    inst = addon(0.8)
    s = Strategy((B1, B2, GRAND), (0.55, 0.3, 1.05))
    out = evaluate_strategy(inst, s, type_steps=201)
    knots = np.linspace(0, 1, 201)
    for i in range(0, 201, 7):
        assert out.knot_unions[i] == consumer_choice(inst, s, knots[i]).union.mask


def test_single_bundle_menu_matches_volumes():
    inst = addon(2 / 3)
    sol = optimal_cutoff(inst, GRAND)
    s = Strategy((GRAND,), (sol.p_star,))
    assert strategy_profit(inst, s) == pytest.approx(sol.profit, abs=1e-7)
    assert strategy_profit(inst, s) == pytest.approx(0.6857, abs=1e-4)
    assert demand(inst, s, GRAND) == pytest.approx(0.6, abs=1e-6)


def test_optimize_prices_single_bundle():
    opt = optimize_prices(addon(2 / 3), (GRAND,))
    assert opt.prices[0] == pytest.approx(1.1429, abs=3e-3)
    assert opt.profit == pytest.approx(0.6857, abs=1e-4)
    opt = optimize_prices(addon(0.5), (B1,))
    assert opt.prices[0] == pytest.approx(0.6, abs=3e-3)
    assert opt.profit == pytest.approx(0.36, abs=1e-4)


def test_worthless_bundle_earns_nothing():
    inst = addon(0.5)
    for p in (0.0, 0.3):
        assert strategy_profit(inst, Strategy((B2,), (p,))) == pytest.approx(0.0)
    assert optimize_prices(inst, (B2,)).profit == pytest.approx(0.0)


def test_prohibitive_prices_sell_nothing():
    inst = addon(0.8)
    cls, segs = classify_outcome(inst, Strategy((B1, GRAND), (5.0, 5.0)))
    assert cls is Classification.NO_SALE
    assert [s.union for s in segs] == [Bundle.empty(2)]


def test_grand_only_menu_is_pure_bundling():
    cls, segs = classify_outcome(addon(0.5), Strategy((GRAND,), (1.2,)))
    assert cls is Classification.PURE_BUNDLING
    assert [s.union for s in segs] == [Bundle.empty(2), GRAND]


def test_two_tier_menu_is_mixed():
    inst = addon(0.8)
    add = optimal_cutoff(inst, B2, B1)
    s = Strategy((B1, GRAND), (0.6, 0.6 + add.p_star))
    cls, segs = classify_outcome(inst, s)
    assert cls is Classification.MIXED
    assert [seg.union for seg in segs] == [Bundle.empty(2), B1, GRAND]
    assert segs[1].t_lo == pytest.approx(0.4, abs=1e-6)
    assert segs[2].t_lo == pytest.approx(add.t_star, abs=1e-6)
    assert segs[2].t_lo == pytest.approx(0.8 / 1.8, abs=1e-6)
    # and it beats pure bundling, as the partial bundle has the larger optimal volume
    pure = optimal_cutoff(inst, GRAND).profit
    assert strategy_profit(inst, s) > pure + 1e-4


def test_separate_purchase_collapses_to_bundle():
    # types buying {1} and {2} separately pay the same as for the collapsed bundle
    inst = addon(0.8)
    split = Strategy((B1, B2), (0.6, 0.45))
    merged = Strategy((B1, B2, GRAND), (0.6, 0.45, 1.05))
    a, b = evaluate_strategy(inst, split), evaluate_strategy(inst, merged)
    assert a.profit == pytest.approx(b.profit, abs=1e-12)
    np.testing.assert_array_equal(a.knot_unions, b.knot_unions)


def test_classify_masses():
    assert classify_masses({0: 1.0}, 2) is Classification.NO_SALE
    assert classify_masses({0: 0.4, 3: 0.6}, 2) is Classification.PURE_BUNDLING
    assert classify_masses({0: 0.4, 1: 0.1, 3: 0.5}, 2) is Classification.MIXED
    assert classify_masses({0: 0.4, 1: 0.6, 3: 1e-12}, 2) is Classification.PARTIAL_ONLY


def test_menus_and_grid_plan():
    assert len(all_menus(2)) == 7
    assert len(all_menus(3)) == 127
    assert all_menus(2)[0] == (B1,)
    assert grid_plan(1) == (201, 2)
    steps, passes = grid_plan(2)
    assert steps ** 2 <= 2048 and (steps - 1) * 2 ** (passes - 2) >= 200
    steps, passes = grid_plan(3)
    assert steps ** 3 <= 2048 and (steps - 1) * 2 ** (passes - 2) >= 200


def test_oracle_refuses_many_products():
    inst = MarketInstance(AdditiveModel([lambda t: t] * 4), (0.0,) * 4)
    with pytest.raises(PreconditionError, match="n <= 3"):
        brute_force_best(inst)


def test_oracle_pure_bundling_case():
    r = brute_force_best(addon(0.4), workers=1)
    assert r.classification is Classification.PURE_BUNDLING
    assert r.best_profit == pytest.approx(0.78515378, abs=1e-6)
    assert r.buyer_segments[0].union.is_empty
    assert r.buyer_segments[-1].union == GRAND
    assert len(r.candidates) == 7


def test_oracle_mixed_bundling_case():
    r = brute_force_best(addon(0.8), workers=1)
    assert r.classification is Classification.MIXED
    assert r.best_strategy.menu == (B1, GRAND)
    assert r.best_profit == pytest.approx(0.65038923, abs=1e-6)
    unions = [s.union for s in r.buyer_segments]
    assert unions == [Bundle.empty(2), B1, GRAND]
    assert r.buyer_segments[1].t_lo == pytest.approx(0.4, abs=5e-3)
    d = r.to_dict()
    assert d["classification"] == "Mixed"
    assert d["best_strategy"]["menu"] == ["01", "11"]


def test_oracle_is_deterministic_across_workers():
    inst = addon(0.7)
    a = brute_force_best(inst, price_steps=41, type_steps=2001, search_type_steps=501, workers=1)
    b = brute_force_best(inst, price_steps=41, type_steps=2001, search_type_steps=501, workers=3)
    assert a.best_strategy == b.best_strategy
    assert a.best_profit == b.best_profit
