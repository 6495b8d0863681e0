"""Exact fair division of indivisible items.

Checkers for EF, PROP, EFX, EF1, EEFX and alpha-MMS over rational
valuations, the envy-cycle-elimination engine with path enumeration, the
two-agent randomized algorithms for goods and chores, and an exact
Fourier-Motzkin solver for ex-ante PROP lotteries.
"""

__version__ = "0.1.0"

from .audit import (
    FairnessVerdict,
    alpha_mms_check,
    is_eefx,
    is_ef,
    is_ef1,
    is_efx,
    is_prop,
    mms_profile,
    mms_value,
    run_audit,
)
from .ece import (
    ExecutionPath,
    LexicographicPolicy,
    RandomPolicy,
    Round,
    ScriptedPolicy,
    enumerate_ece_outcomes,
    envy_graph,
    replay,
    resolve_cycle,
    run_ece,
    run_ordered_ece,
)
from .errors import FairDivError, InputError, InvariantViolation, OracleLimitError, ParseError
from .exante import (
    find_exante_prop_lottery,
    is_exante_ef,
    is_exante_prop,
    lemma41_bounds,
    solve,
    variable_range,
)
from .generate import gen_random_instance
from .hard import HardParams, make_hard_instance, verify_all, verify_lemma41
from .model import Allocation, Instance, ItemKind, Lottery, validate_allocation
from .ordered import OrderedInstance, pick_by_seq, to_ordered
from .twoagent import bobw_chores, bobw_goods, ece_c_two, ece_g_two

__all__ = [name for name in dir() if not name.startswith("_")]
