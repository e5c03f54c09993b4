"""Type-checked relation chains and an edit memory for multi-hop QA under knowledge edits."""

from chaincheck.align import KERNEL, RepairResult, alignment_penalty, permutation_cost, repair_chain
from chaincheck.decompose import DecompositionResult, decompose
from chaincheck.editstore import EditHit, EditStore
from chaincheck.resolver import HopRecord, ResolutionTrace, answer
from chaincheck.typelib import TemplateLibrary, build_library, lookup_relation_types
from chaincheck.types import (
    EditTriple,
    EntityType,
    MultiHopQuestion,
    Permutation,
    RelationChain,
    TypeChain,
    TypeSet,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL",
    "DecompositionResult",
    "EditHit",
    "EditStore",
    "EditTriple",
    "EntityType",
    "HopRecord",
    "MultiHopQuestion",
    "Permutation",
    "RelationChain",
    "RepairResult",
    "ResolutionTrace",
    "TemplateLibrary",
    "TypeChain",
    "TypeSet",
    "alignment_penalty",
    "answer",
    "build_library",
    "decompose",
    "lookup_relation_types",
    "permutation_cost",
    "repair_chain",
]
