"""Optimal bundling of products with non-additive values.

Decide whether selling only the grand bundle is optimal by comparing optimal
sales volumes of single bundles, check this against a brute-force search over
menus and prices, and build nonlinear tariffs by bundling along a chain.
"""

__version__ = "0.1.0"

from .assumptions import (AssumptionReport, check_assumptions, check_monotonicity, check_primitive_condition,
                          check_quasiconcavity, normalize_types)
from .characterize import (BundlingVerdict, Decision, additive_proportionality, additive_pure_bundling,
                           decide_pure_bundling, global_ratio_monotonicity, hazard, local_ratio_monotonicity,
                           sweep)
from .core import (AddOnModel, AdditiveModel, Bundle, CountValueModel, MarketInstance, PiecewiseLinear,
                   QualityRootModel, TabulatedCdf, TabulatedModel, Uniform01, all_bundles, bundle_complement,
                   bundle_cost, conditional_value, value)
from .errors import (BundleoptError, ConditionIVViolation, ContractViolation, DegenerateModelError,
                     InputDomainError, ModelFormatError, PreconditionError, QuasiConcavityError)
from .modelio import load_model, load_quantity_model, parse_model, parse_quantity_model
from .oracle import (Classification, Strategy, brute_force_best, classify_outcome, consumer_choice, demand,
                     evaluate_strategy, optimize_prices, strategy_profit)
from .tariff import (QuantityInstance, TariffSchedule, brute_force_tariff, conditional_batch_volume,
                     construct_optimal_tariff, quality_root_instance, tariff_choice, tariff_profit)
from .volumes import CutoffSolution, argmax_order, optimal_cutoff, optimal_volume, profit_at_cutoff
