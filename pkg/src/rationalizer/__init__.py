"""Exact rationalizability solvers for finite dynamic games with payoff uncertainty."""
from .conjectures import ConditionalProbabilitySystem, Frame, best_responses, validate_cps
from .epistemic import (
    SubjectiveModel,
    SubjectivePayoffStructure,
    TypeStructure,
    common_knowledge,
    consistent_types,
    higher_order_richness,
    make_type,
    model_distance,
    validate_hierarchy,
    validate_model,
)
from .forms import ExtensiveForm, HistorySet, Strategy, centipede_form, validate_extensive_form
from .kernel import Restriction, RestrictionSpec, ex_ante_justifiable, justifiable
from .payoffs import StandardPayoffStructure, canonicalize, hausdorff_distance, is_rich, structure_distance
from .scenario import Report, Scenario, ScenarioError, load_scenario, parse_scenario, run_scenario
from .solvers import (
    BudgetExceeded,
    SolutionTrace,
    backward,
    br_outcomes,
    efr,
    efr_outcomes,
    icr,
    reachable_under,
    solve,
    strict_efr,
)

__all__ = [
    "BudgetExceeded",
    "ConditionalProbabilitySystem",
    "ExtensiveForm",
    "Frame",
    "HistorySet",
    "Report",
    "Restriction",
    "RestrictionSpec",
    "Scenario",
    "ScenarioError",
    "SolutionTrace",
    "StandardPayoffStructure",
    "Strategy",
    "SubjectiveModel",
    "SubjectivePayoffStructure",
    "TypeStructure",
    "backward",
    "best_responses",
    "br_outcomes",
    "canonicalize",
    "centipede_form",
    "common_knowledge",
    "consistent_types",
    "efr",
    "efr_outcomes",
    "ex_ante_justifiable",
    "hausdorff_distance",
    "higher_order_richness",
    "icr",
    "is_rich",
    "justifiable",
    "load_scenario",
    "make_type",
    "model_distance",
    "parse_scenario",
    "reachable_under",
    "run_scenario",
    "solve",
    "strict_efr",
    "structure_distance",
    "validate_cps",
    "validate_extensive_form",
    "validate_hierarchy",
    "validate_model",
]
