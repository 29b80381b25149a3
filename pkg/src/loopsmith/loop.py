"""The generate → extract → execute → classify → repair cycle.

One call to :func:`run` drives the whole conversation with the provider until
the tests pass or a budget runs out, and returns a complete record of every
iteration regardless of how the run ended. Nothing is raised past this
boundary; every failure mode is encoded in the record's final status.
"""

from __future__ import annotations

import re
import shutil
import tempfile
import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable

from . import toolchain
from .client import (
    ClientError,
    LlmRequest,
    LlmResponse,
    ProviderBinding,
    Usage,
    UsageLedger,
    send,
)
from .diagnostics import (
    DEFAULT_MAX_LINES,
    DistillRules,
    ExecutionOutcome,
    OutcomeKind,
    classify_outcome,
)
from .extract import ExtractedArtifacts, ExtractionError, MissingTag, extract_tagged, unescape_content
from .prompts import DEFAULT_PROTOCOL, PromptSpec, TagProtocol, build_initial_prompt, build_repair_prompt
from .toolchain import HarnessError, NameCollision, ToolchainConfig


class RunStatus(Enum):
    SUCCESS = "SUCCESS"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"
    EXTRACTION_FAILED = "EXTRACTION_FAILED"
    HARNESS_FAULT = "HARNESS_FAULT"
    PROVIDER_FAILED = "PROVIDER_FAILED"


@dataclass(frozen=True)
class RunBudget:
    """Caps that bound a run: iterations, wall clock, and extraction retries."""

    max_iterations: int = 5
    max_wall_clock: float = 600.0
    max_extraction_retries: int = 2

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.max_wall_clock <= 0:
            raise ValueError("max_wall_clock must be positive")
        if not 0 <= self.max_extraction_retries < self.max_iterations:
            raise ValueError("max_extraction_retries must be non-negative and below max_iterations")


@dataclass
class IterationRecord:
    """Everything observed during one loop iteration.

    ``response`` is absent only when the provider call itself failed;
    ``artifacts`` absent means extraction failed before execution, which
    implies ``outcome`` is absent too.
    """

    index: int
    request_prompt: str
    started_at: datetime
    finished_at: datetime
    response: LlmResponse | None = None
    artifacts: ExtractedArtifacts | None = None
    outcome: ExecutionOutcome | None = None
    note: str | None = None


@dataclass(frozen=True)
class RunRecord:
    """The persistent history of one full run."""

    run_id: str
    user_request: str
    created_at: datetime
    iterations: tuple[IterationRecord, ...]
    final_status: RunStatus
    loop_count: int
    usage_totals: Usage

    def __post_init__(self) -> None:
        if self.loop_count != len(self.iterations) or self.loop_count < 1:
            raise ValueError("loop_count must equal the number of iterations and be positive")
        last = self.iterations[-1]
        succeeded = last.outcome is not None and last.outcome.kind is OutcomeKind.SUCCESS
        if (self.final_status is RunStatus.SUCCESS) != succeeded:
            raise ValueError("final_status is SUCCESS exactly when the last outcome is SUCCESS")


def corrective_reextraction_prompt(
    previous_content: str, missing: str, protocol: TagProtocol = DEFAULT_PROTOCOL
) -> str:
    """Build the re-request sent when a reply was missing one of the markers.

    ``missing`` must be one of the active protocol's markers; calling this
    after a successful extraction is a contract violation.
    """
    if missing not in protocol.markers:
        raise ValueError(f"{missing!r} is not a marker of the active tag protocol")
    problem = f"The previous reply could not be processed because the {missing} tag was missing."
    return _reextraction_prompt(previous_content, problem, missing, protocol)


def _reextraction_prompt(
    previous_content: str, problem: str, reminder_marker: str | None, protocol: TagProtocol
) -> str:
    reminder = f" Be sure to add the {reminder_marker} tag." if reminder_marker else ""
    return (
        f"{problem}\n"
        "\n"
        "Previous reply:\n"
        f"{previous_content}\n"
        "\n"
        "Please reply again. Generate the code within the "
        f"{protocol.code_open}...{protocol.code_close} tag and the test code within the "
        f"{protocol.test_open}...{protocol.test_close} tag.{reminder}"
    )


def _now() -> datetime:
    return datetime.now(timezone.utc)


# Unconfigured dependencies show up as ordinary compile errors; the diagnostic
# shape below marks the iteration so an operator can spot the real cause.
_MISSING_DEPENDENCY_PATTERN = re.compile(
    r"package\s+[\w.]+\s+does not exist|cannot find symbol"
    r"|ClassNotFoundException|NoClassDefFoundError"
)


def run(
    spec: PromptSpec,
    binding: ProviderBinding,
    config: ToolchainConfig,
    budget: RunBudget | None = None,
    *,
    model_id: str = "gpt-4",
    temperature: float = 0.2,
    max_output_tokens: int = 4096,
    protocol: TagProtocol = DEFAULT_PROTOCOL,
    workspace_root: Path | str | None = None,
    keep_workspaces: bool = False,
    on_iteration: Callable[[IterationRecord], None] | None = None,
) -> RunRecord:
    """Run the full repair loop and return its record.

    Iteration 1 sends the assembled initial prompt; later iterations send a
    repair prompt built from the prior artifacts and error excerpt, or a
    corrective re-request when the prior reply could not be extracted. The
    loop stops at the first success, when a budget is exhausted, when
    extraction keeps failing, on a harness fault, or when the provider errors.
    """
    budget = budget or RunBudget()
    run_id = uuid.uuid4().hex
    created_at = _now()
    ledger = UsageLedger()
    iterations: list[IterationRecord] = []
    rules = DistillRules.from_config(config.diagnostics)
    max_lines = int(config.diagnostics.get("max_lines", DEFAULT_MAX_LINES))

    root_was_provided = workspace_root is not None
    root = Path(workspace_root) if workspace_root is not None else Path(tempfile.mkdtemp(prefix="loopsmith-run-"))

    consecutive_extraction_failures = 0
    final_status: RunStatus | None = None
    next_prompt = build_initial_prompt(spec)
    started_clock = time.monotonic()

    def finish(record: IterationRecord) -> None:
        record.finished_at = _now()
        iterations.append(record)
        if on_iteration is not None:
            on_iteration(record)

    for index in range(1, budget.max_iterations + 1):
        if iterations and time.monotonic() - started_clock > budget.max_wall_clock:
            final_status = RunStatus.BUDGET_EXHAUSTED
            break

        record = IterationRecord(
            index=index, request_prompt=next_prompt, started_at=_now(), finished_at=_now()
        )
        request = LlmRequest.for_prompt(
            model_id, next_prompt, temperature=temperature, max_output_tokens=max_output_tokens
        )
        try:
            response = send(binding, request)
        except ClientError as exc:
            record.note = f"provider error: {exc}"
            finish(record)
            final_status = RunStatus.PROVIDER_FAILED
            break
        record.response = response
        ledger.record_usage(index, response.usage)

        try:
            content = unescape_content(response.content)
        except ExtractionError as exc:
            content = response.content
            artifacts_error: ExtractionError | None = exc
        else:
            try:
                record.artifacts = extract_tagged(content, protocol)
                artifacts_error = None
            except ExtractionError as exc:
                artifacts_error = exc

        if artifacts_error is not None:
            consecutive_extraction_failures += 1
            record.note = f"extraction failed: {artifacts_error}"
            finish(record)
            if consecutive_extraction_failures > budget.max_extraction_retries:
                final_status = RunStatus.EXTRACTION_FAILED
                break
            if isinstance(artifacts_error, MissingTag):
                next_prompt = corrective_reextraction_prompt(content, artifacts_error.marker, protocol)
            else:
                next_prompt = _reextraction_prompt(
                    content,
                    f"The previous reply could not be processed: {artifacts_error}.",
                    None,
                    protocol,
                )
            continue
        consecutive_extraction_failures = 0
        artifacts = record.artifacts
        assert artifacts is not None

        try:
            workspace = toolchain.materialize(root, artifacts, config)
        except NameCollision as exc:
            record.note = f"name collision: {exc}"
            finish(record)
            next_prompt = build_repair_prompt(
                artifacts.code,
                artifacts.test_code,
                f"The code class and the test class are both named "
                f"{artifacts.code_class_name!r}; the test class must use a different name.",
                protocol,
            )
            continue
        except (HarnessError, OSError) as exc:
            record.outcome = ExecutionOutcome(OutcomeKind.HARNESS_FAULT, excerpt=str(exc))
            finish(record)
            final_status = RunStatus.HARNESS_FAULT
            break

        try:
            compile_result = toolchain.compile(workspace, config)
            test_result = (
                toolchain.run_tests(workspace, config, artifacts.test_class_name)
                if compile_result.exit_code == 0 and not compile_result.timed_out
                else None
            )
        except HarnessError as exc:
            record.outcome = ExecutionOutcome(OutcomeKind.HARNESS_FAULT, excerpt=str(exc))
            finish(record)
            final_status = RunStatus.HARNESS_FAULT
            break

        outcome = classify_outcome(
            compile_result,
            test_result,
            rules=rules,
            class_names=(artifacts.code_class_name, artifacts.test_class_name),
            max_lines=max_lines,
        )
        record.outcome = outcome
        if outcome.kind is OutcomeKind.COMPILE_ERROR and _MISSING_DEPENDENCY_PATTERN.search(
            outcome.excerpt
        ):
            record.note = (
                "compile diagnostic suggests a dependency artifact missing from the toolchain config"
            )
        finish(record)

        if outcome.kind is OutcomeKind.SUCCESS:
            if not keep_workspaces:
                shutil.rmtree(workspace, ignore_errors=True)
            final_status = RunStatus.SUCCESS
            break
        if outcome.kind is OutcomeKind.HARNESS_FAULT:
            final_status = RunStatus.HARNESS_FAULT
            break
        if time.monotonic() - started_clock > budget.max_wall_clock:
            final_status = RunStatus.BUDGET_EXHAUSTED
            break
        next_prompt = build_repair_prompt(artifacts.code, artifacts.test_code, outcome.excerpt, protocol)

    if final_status is None:
        final_status = RunStatus.BUDGET_EXHAUSTED
    if not root_was_provided and not keep_workspaces:
        try:
            root.rmdir()  # only removes the auto-created root when no failed workspace remains
        except OSError:
            pass

    return RunRecord(
        run_id=run_id,
        user_request=spec.user_request,
        created_at=created_at,
        iterations=tuple(iterations),
        final_status=final_status,
        loop_count=len(iterations),
        usage_totals=ledger.totals,
    )
