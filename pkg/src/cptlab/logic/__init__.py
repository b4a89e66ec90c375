"""Vocabularies, structures, formulas, parsing and evaluation."""
from .evaluate import Context, EvaluationError, World, context_for, defined_subset, evaluate, holds
from .formula import (
    DIALECTS,
    dynamic_indices,
    free_vars,
    is_quantifier_free,
    max_subformula_free_vars,
    quantifier_depth,
    rename_bound,
    to_text,
    uses_counting,
)
from .parser import FormulaSyntaxError, parse_formula
from .structure import (
    ModelFormatError,
    Structure,
    Vocabulary,
    cycle,
    graph,
    is_partial_isomorphism,
    load_structure,
    parse_structure,
    unary,
)

__all__ = [
    "DIALECTS",
    "Context",
    "EvaluationError",
    "FormulaSyntaxError",
    "ModelFormatError",
    "Structure",
    "Vocabulary",
    "World",
    "context_for",
    "cycle",
    "defined_subset",
    "dynamic_indices",
    "evaluate",
    "free_vars",
    "graph",
    "holds",
    "is_partial_isomorphism",
    "is_quantifier_free",
    "load_structure",
    "max_subformula_free_vars",
    "parse_formula",
    "parse_structure",
    "quantifier_depth",
    "rename_bound",
    "to_text",
    "unary",
    "uses_counting",
]
