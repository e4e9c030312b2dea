"""Guaranteed bounds and estimates for factorized-model queries.

Oversized intermediate tables created during variable elimination are
replaced by LP-optimized decompositions over smaller scopes, yielding
one-sided bounds on belief, MPE and MAX-CSP queries.  Exact elimination,
a mini-buckets baseline, a brute-force oracle and a benchmark harness
round out the package.
"""

from .decompose import (DecomposeConstants, DecompositionRequest, Direction,
                        build_product_lp, product_decompose, sum_decompose)
from .elimination import eliminate_variable, variable_elimination
from .engine import AdConfig, BoundValue, ad_run, bound_conditional, estimate
from .errors import (AdboundError, ConfigError, InputError, ParseError,
                     ResourceLimitError, UndefinedConditionalError)
from .graph import (InteractionGraph, choose_elim_var, eliminate_node,
                    interaction_graph, maximal_cliques, moral_graph,
                    prune_new_edges, width)
from .harness import (BoundReport, ExperimentConfig, gen_random_maxcsp,
                      gen_random_network, run_experiment)
from .minibuckets import MbConfig, MbMode, mb_partition, mb_run
from .model import (BeliefNetwork, CombineOp, CspProblem, Factor, MarginalOp,
                    Task, combine, linear_index, marginalize_out,
                    restrict_evidence)
from .oracle import CostModelParams, brute_force, empirical_cost
from .simplex import (Constraint, LinearProgram, LpSolution, LpStatus,
                      Relation, solve)
from .uai import parse_evidence, parse_model, write_model

__version__ = "0.1.0"
