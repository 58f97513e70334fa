"""Individual-preference-aware caching policy design for clustered D2D networks."""

from .baselines import (global_popularity_policy, homogeneous_model_instance,
                        selfish_policy)
from .channel import (LinkProbabilityMatrix, RadioParams, UserLayout,
                      db_to_linear, dbm_to_watts, link_prob_case1,
                      link_prob_case2, link_prob_case3, pathgain,
                      power_control, power_control_watts, square_distance_pdf,
                      watts_to_dbm, with_tx_power)
from .errors import (ConfigError, DomainError, NumericalError, ParameterError,
                     SurrogateRangeError)
from .objectives import (MetricConstants, UtilityTriple, check_instance_ordering,
                         cost_objective, ee_weighted_objective, hitrate_objective,
                         throughput_objective, tradeoff_objective,
                         weighted_objective)
from .optimizer import (CachingPolicy, ClusterInstance, OptimizerReport,
                        access_probabilities, best_response, default_order,
                        evaluate_metrics, expected_utility, optimize,
                        optimize_ee, utility_gradient)
from .preferences import (GeneratorParams, GlobalPopularity, PreferenceMatrix,
                          generate_preferences, global_popularity, homogenize)
from .simulator import (ClusterRealization, Estimate, ScenarioParams,
                        SimulationEstimate, realize_cluster, simulate_both_schedulers,
                        simulate_fixed, simulate_priority_push,
                        simulate_random_push)

__all__ = [name for name in dir() if not name.startswith("_")]
