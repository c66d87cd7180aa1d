"""Mirror-template dialog engine.

Templates are written once and used in both directions: compiled to
recognizers for understanding, and enumerated for generation.  A compiler
lowers a declarative rule model onto a small recurrent network whose one
synchronous step activates rules, picks successors by winner-takes-all, and
fans out actions; a session runtime drives the loop, including inner speech.
"""
from .compiler import (
    CompiledArtifacts,
    Diagnostic,
    compile_model,
    emit_artifacts,
    load_artifacts,
    lower_model,
    validate_model,
)
from .config import RunConfig, load_config
from .engine import Dictionary, EngineParams, RuleState, Stepper, WeightSet, engine_step
from .mirons import (
    MironDefinition,
    ProductionCriterion,
    RecognitionResult,
    Recognizer,
    SlotDecl,
    compile_recognizer,
    expand,
    export_training_data,
    make_definition,
    normalize,
    produce,
    recognize,
)
from .model import BehaviorModel, Branch, RuleDecl
from .model_parser import parse_model
from .oracle import RngTieChooser, oracle_step
from .runtime import (
    EmittedOutput,
    InternalActionRegistry,
    Session,
    StateSnapshot,
    create_session,
    default_registry,
)
from .simulator import Report, Scenario, load_scenario, run_scenario
from .templates import Template, parse_template

__all__ = [
    "BehaviorModel",
    "Branch",
    "CompiledArtifacts",
    "Diagnostic",
    "Dictionary",
    "EmittedOutput",
    "EngineParams",
    "InternalActionRegistry",
    "MironDefinition",
    "ProductionCriterion",
    "RecognitionResult",
    "Recognizer",
    "Report",
    "RngTieChooser",
    "RuleDecl",
    "RuleState",
    "RunConfig",
    "Scenario",
    "Session",
    "SlotDecl",
    "StateSnapshot",
    "Stepper",
    "Template",
    "WeightSet",
    "compile_model",
    "compile_recognizer",
    "create_session",
    "default_registry",
    "emit_artifacts",
    "engine_step",
    "expand",
    "export_training_data",
    "load_artifacts",
    "load_config",
    "load_scenario",
    "lower_model",
    "make_definition",
    "normalize",
    "oracle_step",
    "parse_model",
    "parse_template",
    "produce",
    "recognize",
    "run_scenario",
    "validate_model",
]
