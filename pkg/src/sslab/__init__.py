"""Self-stabilization laboratory for the state model.

Simulates and model-checks guarded-rule algorithms on rings and regular
graphs, and builds ring instances on which a small-memory identifier-based
algorithm behaves anonymously and never stabilizes.
"""

__version__ = "0.1.0"

from .algorithm import Algorithm, Behavior, builtin_algorithm, evaluate, is_enabled  # noqa: E402
from .checker import model_check_distributed, model_check_synchronous, replay_witness, simulate  # noqa: E402
from .lowerbound import (behavior_cardinality, bucket_identifiers, extract_behavior,  # noqa: E402
                         find_uniform_id_set, homogeneity_trap, lower_bound_witness, min_guaranteed_size)
from .model import Configuration, IdAssignment, Topology, make_regular, make_ring  # noqa: E402
