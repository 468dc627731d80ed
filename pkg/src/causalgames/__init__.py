"""Exact solvers, queries and conversions for (structural) causal games."""

from .errors import CausalGameError
from .graph import Dag, Digraph, d_separated
from .io import dump_game, load_game, parse_game, save_game
from .model import GameModel
from .policy import DecisionRule, PolicyProfile
from .inference import expected_utilities, joint
from .equilibrium import behavioural_ne, pure_ne, solve, spe, thpe
from .query import Intervention, conditional, interventional, quantify
from .counterfactual import counterfactual
from .efg import efg2maid, maid2efg, verify_equivalence
from .analysis import blame, instrumental_control_incentive, intent, response_incentive

__version__ = "0.1.0"

__all__ = [
    "CausalGameError", "Dag", "Digraph", "d_separated", "dump_game", "load_game", "parse_game",
    "save_game", "GameModel", "DecisionRule", "PolicyProfile", "expected_utilities", "joint",
    "behavioural_ne", "pure_ne", "solve", "spe", "thpe", "Intervention", "conditional",
    "interventional", "quantify", "counterfactual", "efg2maid", "maid2efg", "verify_equivalence",
    "blame", "instrumental_control_incentive", "intent", "response_incentive",
]
