"""Model libraries, generation planning and synthetic sequence generation."""

from .generate import (
    ConditionResult,
    GeneratedSequence,
    GenerationRequest,
    Target,
    ar_for_law,
    condition_to_target,
    generate,
)
from .library import LibraryEntry, ModelRegistry, load_library, save_entry
from .plan import GenerationPlan, PlanStep, resolve_plan

__all__ = [
    "ConditionResult", "GeneratedSequence", "GenerationPlan", "GenerationRequest", "LibraryEntry",
    "ModelRegistry", "PlanStep", "Target", "ar_for_law", "condition_to_target", "generate",
    "load_library", "resolve_plan", "save_entry",
]
