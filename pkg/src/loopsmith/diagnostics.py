"""Classify step results and distill the error excerpt fed back for repair.

Every run of the external toolchain lands in exactly one of four buckets:
compile error, test failure, success, or a fault of the harness itself. For
the two repairable buckets, the excerpt keeps only the lines a regeneration
request actually needs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

from .toolchain import Step, StepResult

DEFAULT_MAX_LINES = 40


class OutcomeKind(Enum):
    COMPILE_ERROR = "COMPILE_ERROR"
    TEST_FAILURE = "TEST_FAILURE"
    SUCCESS = "SUCCESS"
    HARNESS_FAULT = "HARNESS_FAULT"


@dataclass(frozen=True)
class TestCounts:
    __test__ = False  # not a pytest class, despite the name

    run: int
    failed: int


@dataclass(frozen=True)
class ExecutionOutcome:
    """The three-way verdict (plus harness faults) with its distilled excerpt.

    Harness faults signal operator or environment error and are never fed back
    to the model for repair.
    """

    kind: OutcomeKind
    excerpt: str = ""
    test_counts: TestCounts | None = None

    def __post_init__(self) -> None:
        if self.kind is OutcomeKind.SUCCESS:
            if self.excerpt:
                raise ValueError("a SUCCESS outcome carries no excerpt")
            if self.test_counts is not None and self.test_counts.failed != 0:
                raise ValueError("a SUCCESS outcome cannot report failed tests")
        else:
            if not self.excerpt:
                raise ValueError(f"a {self.kind.value} outcome needs a non-empty excerpt")
            if (
                self.kind is OutcomeKind.TEST_FAILURE
                and self.test_counts is not None
                and self.test_counts.failed < 1
            ):
                raise ValueError("a TEST_FAILURE outcome must report at least one failure")


_DEFAULT_KEEP = (
    r"(?i)\bfail(?:ed|ure|ures)?\b",
    r"✘",
    r"(?i)\bexpected\b",
    r"\b[A-Za-z_][\w.]*(?:Exception|Error)\b",
    r"\berror:",
)
_DEFAULT_FRAME = r"^\s+at\s+[\w.$]+\((?P<file>[\w$]+)\.\w+:\d+\)"
_DEFAULT_FRAME_DROP = (
    r"^\s+at\s+(?:org\.junit|org\.opentest4j|org\.gradle|org\.apiguardian|jdk\.|java\.|javax\.|sun\.|worker\.)",
)
_DEFAULT_RUN_COUNT = r"(\d+)\s+tests?\s+(?:completed|found|started|run)\b"
_DEFAULT_FAILED_COUNT = r"(\d+)\s+(?:tests?\s+)?failed\b"


@dataclass(frozen=True)
class DistillRules:
    """Line-keeping patterns; adapter configs may override any of them."""

    keep_patterns: tuple[re.Pattern[str], ...]
    frame_pattern: re.Pattern[str]
    frame_drop_patterns: tuple[re.Pattern[str], ...]
    run_count_pattern: re.Pattern[str]
    failed_count_pattern: re.Pattern[str]

    @classmethod
    def from_config(cls, document: Mapping[str, Any] | None = None) -> "DistillRules":
        document = document or {}
        keep = tuple(re.compile(p) for p in document.get("keep_patterns", _DEFAULT_KEEP))
        frame = re.compile(document.get("frame_pattern", _DEFAULT_FRAME))
        frame_drop = tuple(
            re.compile(p) for p in document.get("frame_drop_patterns", _DEFAULT_FRAME_DROP)
        )
        run_count = re.compile(document.get("run_count_pattern", _DEFAULT_RUN_COUNT))
        failed_count = re.compile(document.get("failed_count_pattern", _DEFAULT_FAILED_COUNT))
        return cls(keep, frame, frame_drop, run_count, failed_count)


DEFAULT_RULES = DistillRules.from_config()


def _keep_line(line: str, rules: DistillRules, class_names: Sequence[str]) -> bool:
    frame = rules.frame_pattern.search(line)
    if frame:
        stem = frame.groupdict().get("file")
        if class_names and stem is not None:
            return stem in class_names
        return not any(p.search(line) for p in rules.frame_drop_patterns)
    return any(p.search(line) for p in rules.keep_patterns)


def distill_excerpt(
    step: StepResult,
    max_lines: int = DEFAULT_MAX_LINES,
    *,
    rules: DistillRules | None = None,
    class_names: Sequence[str] = (),
) -> str:
    """Reduce a failing step's output to the lines worth sending back.

    Compile output is retained as-is (it is already the diagnostic); test
    output keeps failure headers, expected/actual lines, exception messages,
    and stack frames that reference the generated classes, in original order.
    When nothing matches, the last ``max_lines`` lines are returned verbatim
    so the caller is never left with nothing.
    """
    if max_lines < 1:
        raise ValueError("max_lines must be positive")
    rules = rules or DEFAULT_RULES
    if step.step is Step.COMPILE:
        text = step.stderr if step.stderr.strip() else step.stdout
        lines = text.splitlines()
        if len(lines) <= max_lines:
            return text
        kept = lines
    else:
        text = "\n".join(stream for stream in (step.stdout, step.stderr) if stream)
        lines = text.splitlines()
        kept = [line for line in lines if _keep_line(line, rules, class_names)]
        if not kept:
            return "\n".join(lines[-max_lines:])
    if len(kept) > max_lines:
        omitted = len(kept) - (max_lines - 1)
        kept = kept[: max_lines - 1] + [f"... [{omitted} more lines omitted]"]
    return "\n".join(kept)


def _parse_counts(text: str, rules: DistillRules) -> TestCounts | None:
    # summaries come last in runner output, so the last match wins
    failed_matches = list(rules.failed_count_pattern.finditer(text))
    if not failed_matches:
        return None
    failed = int(failed_matches[-1].group(1))
    run_matches = list(rules.run_count_pattern.finditer(text))
    run = int(run_matches[-1].group(1)) if run_matches else failed
    return TestCounts(run=max(run, failed), failed=failed)


def classify_outcome(
    compile_result: StepResult,
    test_result: StepResult | None = None,
    *,
    rules: DistillRules | None = None,
    class_names: Sequence[str] = (),
    max_lines: int = DEFAULT_MAX_LINES,
) -> ExecutionOutcome:
    """Map a compile result and optional test result onto one outcome.

    Callers run tests only after a clean compile, so ``test_result`` must be
    present exactly when the compile exit code is zero.
    """
    rules = rules or DEFAULT_RULES
    if compile_result.timed_out:
        return ExecutionOutcome(
            OutcomeKind.HARNESS_FAULT,
            excerpt=f"compile step exceeded its {compile_result.duration:.1f}s deadline and was killed",
        )
    if compile_result.exit_code != 0:
        if test_result is not None:
            raise ValueError("tests must not be run after a failed compile")
        excerpt = distill_excerpt(compile_result, max_lines, rules=rules, class_names=class_names)
        return ExecutionOutcome(
            OutcomeKind.COMPILE_ERROR,
            excerpt=excerpt
            or f"compile command exited with status {compile_result.exit_code} and produced no output",
        )
    if test_result is None:
        raise ValueError("a test result is required when the compile succeeded")
    if test_result.timed_out:
        return ExecutionOutcome(
            OutcomeKind.HARNESS_FAULT,
            excerpt=f"test step exceeded its {test_result.duration:.1f}s deadline and was killed",
        )
    counts = _parse_counts(test_result.stdout + "\n" + test_result.stderr, rules)
    if test_result.exit_code == 0 and (counts is None or counts.failed == 0):
        return ExecutionOutcome(OutcomeKind.SUCCESS, excerpt="", test_counts=counts)
    if counts is not None and counts.failed < 1:
        counts = None  # summary disagrees with the exit code; fall back to exit-code-only
    excerpt = distill_excerpt(test_result, max_lines, rules=rules, class_names=class_names)
    return ExecutionOutcome(
        OutcomeKind.TEST_FAILURE,
        excerpt=excerpt
        or f"test command exited with status {test_result.exit_code} and produced no output",
        test_counts=counts,
    )
