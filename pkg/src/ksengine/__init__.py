"""A knowledge-space engine: semantic link networks with rule inference,
multi-dimensional classification spaces, concept networks grown from text,
a problem discovery loop, and canonical text persistence."""

from .concepts import (
    Concept,
    ConceptStore,
    Lexicon,
    ObservationScope,
    ReadTrace,
    Scale,
    enrich_concept,
    generalize_concepts,
    import_category_hierarchy,
    read_text,
)
from .discovery import (
    AbilityReport,
    AnalogyResult,
    AnomalyRule,
    Candidate,
    IncrementFragment,
    LinkCandidate,
    Problem,
    Recommendation,
    Verdict,
    ability_report,
    analogize,
    detect_co_occurrence,
    detect_limitation,
    find_problem,
    find_solution,
    generalize_problem,
    recommend,
    specialize_problem,
    trace_cause_effect,
    verify_knowledge,
)
from .errors import KsError, KsifError
from .fixtures import build_reference_network, build_reference_state
from .ksif import export_space_fragment, export_state, import_state
from .rules import (
    Explanation,
    PatternAtom,
    Rule,
    derive_fixpoint,
    explain,
    retract_with_maintenance,
    validate_rule,
    verify_explanation,
)
from .sln import (
    ClassRef,
    FileRef,
    LinkType,
    Network,
    QueryPattern,
    RepBundle,
    SemanticLink,
    SemanticNode,
    parse_pattern,
)
from .space import NormalFormReport, Space, can_hold, join_spaces
from .state import EngineState, new_state
from .taxonomy import CategoryTree

__version__ = "0.1.0"

__all__ = [
    "AbilityReport",
    "AnalogyResult",
    "AnomalyRule",
    "Candidate",
    "CategoryTree",
    "ClassRef",
    "Concept",
    "ConceptStore",
    "EngineState",
    "Explanation",
    "FileRef",
    "IncrementFragment",
    "KsError",
    "KsifError",
    "Lexicon",
    "LinkCandidate",
    "LinkType",
    "Network",
    "NormalFormReport",
    "ObservationScope",
    "PatternAtom",
    "Problem",
    "QueryPattern",
    "ReadTrace",
    "Recommendation",
    "RepBundle",
    "Rule",
    "Scale",
    "SemanticLink",
    "SemanticNode",
    "Space",
    "Verdict",
    "ability_report",
    "analogize",
    "build_reference_network",
    "build_reference_state",
    "can_hold",
    "derive_fixpoint",
    "detect_co_occurrence",
    "detect_limitation",
    "enrich_concept",
    "explain",
    "export_space_fragment",
    "export_state",
    "find_problem",
    "find_solution",
    "generalize_concepts",
    "generalize_problem",
    "import_category_hierarchy",
    "import_state",
    "join_spaces",
    "new_state",
    "parse_pattern",
    "read_text",
    "recommend",
    "retract_with_maintenance",
    "specialize_problem",
    "trace_cause_effect",
    "validate_rule",
    "verify_explanation",
    "verify_knowledge",
]
