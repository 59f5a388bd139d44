"""Online stopping rules when every item arrives more than once.

Submodules:

* :mod:`stopping_lab.arrivals` - random arrival streams
* :mod:`stopping_lab.secretary` - stopping policies and win-probability formulas
* :mod:`stopping_lab.oracle` - exhaustive enumeration for tiny instances
* :mod:`stopping_lab.matroids` - matroids and the returning matroid secretary
* :mod:`stopping_lab.matching` - returning bipartite edge-weighted matching
* :mod:`stopping_lab.harness` - seeded Monte Carlo engine and reports
"""

from .arrivals import (
    ArrivalEvent,
    ArrivalSequence,
    distinct_count_prefix,
    gen_permutation_sequence,
    gen_timed_sequence,
)
from .errors import BudgetExceeded, ConfigError, InvalidArgument
from .secretary import (
    PolicyOutcome,
    RankedInstance,
    asymptotic_win,
    k3_win_prob,
    no_wait_win_prob,
    optimize_mu,
    pairwise_dominance_prob,
    run_k_returning_no_wait,
    run_threshold_policy,
    run_time_policy,
    win_lower_bound,
)

__version__ = "0.1.0"

__all__ = [
    "ArrivalEvent",
    "ArrivalSequence",
    "BudgetExceeded",
    "ConfigError",
    "InvalidArgument",
    "PolicyOutcome",
    "RankedInstance",
    "asymptotic_win",
    "distinct_count_prefix",
    "gen_permutation_sequence",
    "gen_timed_sequence",
    "k3_win_prob",
    "no_wait_win_prob",
    "optimize_mu",
    "pairwise_dominance_prob",
    "run_k_returning_no_wait",
    "run_threshold_policy",
    "run_time_policy",
    "win_lower_bound",
]
