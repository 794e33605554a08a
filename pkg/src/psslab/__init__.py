"""Probabilistic sequential systems over prime fields: models, Markov analytics and homomorphisms."""

from .budget import BudgetExceeded
from .expr import PolyExpr, eval_expr, expr_support, parse_expr, to_text
from .field import FieldElement, FieldSpec, format_state, index_state, parse_state, state_index
from .formats import emit_pss_file, load_hom, load_pss, parse_pss_file
from .model import (
    PSS,
    Graph,
    LocalFunction,
    ModelError,
    Schedule,
    UpdateFunction,
    apply_update,
    build_pss,
    complement,
    enumerate_update_functions,
    sds_to_pss,
    sub_pss,
    validate_pss,
)
from .morphism import (
    HomCandidate,
    HomReport,
    check_pss_hom,
    classify,
    compose_homs,
    hom_search,
    identity_candidate,
    is_simulation,
    mt_power_diff,
)
from .statespace import build_state_space, recurrent_classes, sample_trajectory, stationary, transition_matrix

__version__ = "0.1.0"
