"""Generate, compile, test, and automatically repair LLM-produced code."""

from .client import LlmRequest, LlmResponse, ProviderBinding, ProviderKind, Usage, UsageLedger, send
from .diagnostics import ExecutionOutcome, OutcomeKind, classify_outcome, distill_excerpt
from .extract import ExtractedArtifacts, extract_class_name, extract_tagged, unescape_content
from .loop import RunBudget, RunRecord, RunStatus, corrective_reextraction_prompt, run
from .prompts import (
    DEFAULT_PROTOCOL,
    PromptSpec,
    TagProtocol,
    TemplateVersion,
    build_initial_prompt,
    build_repair_prompt,
    lint_request_language,
)
from .store import HistoryStore, StoredRunSummary
from .toolchain import StepResult, ToolchainConfig, load_toolchain_config, materialize, run_tests

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PROTOCOL",
    "ExecutionOutcome",
    "ExtractedArtifacts",
    "HistoryStore",
    "LlmRequest",
    "LlmResponse",
    "OutcomeKind",
    "PromptSpec",
    "ProviderBinding",
    "ProviderKind",
    "RunBudget",
    "RunRecord",
    "RunStatus",
    "StepResult",
    "StoredRunSummary",
    "TagProtocol",
    "TemplateVersion",
    "ToolchainConfig",
    "Usage",
    "UsageLedger",
    "build_initial_prompt",
    "build_repair_prompt",
    "classify_outcome",
    "corrective_reextraction_prompt",
    "distill_excerpt",
    "extract_class_name",
    "extract_tagged",
    "lint_request_language",
    "load_toolchain_config",
    "materialize",
    "run",
    "run_tests",
    "send",
    "unescape_content",
]
