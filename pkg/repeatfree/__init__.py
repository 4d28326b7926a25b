# Version information
__version__ = "0.1.0"

from .errors import (
    RepeatFreeError,
    PatternSpecError,
    PreconditionError,
    ExactLimitError,
    SingularSystemError,
    FieldOverflowError,
    FormatError,
    BudgetExhausted,
    ResampleBudgetExhausted,
    RetryBudgetExhausted,
)
from .pattern import PatternGraph, AutomorphismGroup, ColouredCopy, parse_pattern, automorphisms, colour_signature, classify
from .field import PrimeFieldCtx, MultiPoly, eval_poly, sample_poly, solve_vandermonde3
from .colouring import EdgeColouring
from .constructors import (
    Family,
    rainbow_colouring,
    additive_colouring,
    extended_additive_colouring,
    quadratic_colouring,
    clique_matching_colouring,
    random_algebraic_cycle_colouring,
    random_algebraic_tree_colouring,
)
from .vizing import vizing_refine, pad_colours
from .lll import lll_colouring
from .verifier import (
    RepeatCertificate,
    check_proper,
    find_repeats,
    verify_certificate,
    star_incidence_check,
    repeat_multiplicity,
)
from .copies import signature_buckets
from .heuristic import tree_repeat_heuristic
from .search import SearchResult, is_avoidable, exact_f
from .bounds import BoundReport, bound_report, smallest_k_linear

# --- Register all construction families with the registry

Family.register("rainbow", rainbow_colouring, ["n"])
Family.register("additive", additive_colouring, ["n"])
Family.register("additive-ext", extended_additive_colouring, ["n"])
Family.register("quadratic", quadratic_colouring, ["n"])
Family.register("clique-matching", clique_matching_colouring, ["n", "m"])
Family.register("lll", lll_colouring, ["n", "pattern", "k", "seed", "gamma", "max_resamples", "max_backoffs"])
Family.register("alg-cycle", random_algebraic_cycle_colouring, ["n", "d", "seed", "max_retries"])
Family.register("alg-tree", random_algebraic_tree_colouring, ["n", "m", "d", "seed", "max_retries", "max_degree"])
