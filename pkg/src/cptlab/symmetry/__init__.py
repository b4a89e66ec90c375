"""Systems of partial automorphisms, liftings, witness families and the support game."""
from .io import dump_system, load_system, load_witness, parse_system, parse_witness
from .lifting import (
    Lifting,
    LiftingError,
    check_lifting,
    full_successor,
    good_equiv,
    good_orbit,
    good_sets,
    lift_map,
    preservation_check,
    true_successor,
    zero_lifting,
)
from .maps import PartialMapFamily, SupportFamily
from .report import ClauseResult, Report
from .support_logic import (
    SAnd,
    SExists,
    SForall,
    SNot,
    SOr,
    SQF,
    support_game_equiv,
    support_logic_sat,
)
from .system import KSystem, check_dichotomy, check_k_system, check_super
from .witness import TransferResult, WitnessFamily, check_witness, compare_verdicts, transfer_verdict

__all__ = [
    "ClauseResult",
    "KSystem",
    "Lifting",
    "LiftingError",
    "PartialMapFamily",
    "Report",
    "SAnd",
    "SExists",
    "SForall",
    "SNot",
    "SOr",
    "SQF",
    "SupportFamily",
    "TransferResult",
    "WitnessFamily",
    "check_dichotomy",
    "check_k_system",
    "check_lifting",
    "check_super",
    "check_witness",
    "compare_verdicts",
    "dump_system",
    "full_successor",
    "good_equiv",
    "good_orbit",
    "good_sets",
    "lift_map",
    "load_system",
    "load_witness",
    "parse_system",
    "parse_witness",
    "preservation_check",
    "support_game_equiv",
    "support_logic_sat",
    "transfer_verdict",
    "true_successor",
    "zero_lifting",
]
