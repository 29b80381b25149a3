"""Shared fixtures, fixture-file builders, and the acceptance summary hook."""

from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from loopsmith.client import LlmResponse, Usage
from loopsmith.diagnostics import ExecutionOutcome, OutcomeKind, TestCounts
from loopsmith.extract import ExtractedArtifacts
from loopsmith.loop import IterationRecord, RunRecord, RunStatus
from loopsmith.resources import synthetic_toolchain_path
from loopsmith.toolchain import ToolchainConfig, load_toolchain_config


@pytest.fixture(scope="session")
def synthetic_config() -> ToolchainConfig:
    return load_toolchain_config(synthetic_toolchain_path())


def wire_escape(plain: str) -> str:
    """One JSON-string escaping pass, as assistant content arrives on the wire."""
    return json.dumps(plain, ensure_ascii=False)[1:-1]


def tagged_reply(code: str, test: str, preamble: str = "", trailer: str = "") -> str:
    parts = []
    if preamble:
        parts.append(preamble)
    parts.append(f"[CODE]\n{code}\n[/CODE]")
    parts.append(f"[TEST]\n{test}\n[/TEST]")
    if trailer:
        parts.append(trailer)
    return "\n".join(parts)


def reply_for_behavior(behavior: str, index: int) -> str:
    """A reply whose execution under the synthetic adapter shows ``behavior``."""
    code_name, test_name = f"Widget{index}", f"Widget{index}Test"
    if behavior == "missing_tag":
        return f"[CODE]\npublic class {code_name} {{}}\n[/CODE]\n[TEST]\npublic class {test_name} {{}}"
    if behavior == "compile_fail":
        code = f"public class {code_name} {{\n    // LOOPFAKE:compile-error ';' expected\n}}"
        test = f"public class {test_name} {{}}"
    elif behavior == "test_fail":
        code = f"public class {code_name} {{}}"
        test = (
            f"public class {test_name} {{\n"
            f"    // LOOPFAKE:fail testBehaviour{index} value {index} was wrong\n"
            "}"
        )
    elif behavior == "pass":
        code = f"public class {code_name} {{}}"
        test = f"public class {test_name} {{\n    // LOOPFAKE:pass testBehaviour{index}\n}}"
    else:
        raise ValueError(f"unknown behavior {behavior!r}")
    return tagged_reply(code, test)


def write_fixture(
    path: Path,
    replies: list[str],
    *,
    strict: bool = False,
    prompts: list[str] | None = None,
    usages: list[tuple[int, int]] | None = None,
) -> Path:
    """Write a replay fixture file whose contents are the given plain-text replies."""
    exchanges = []
    for position, reply in enumerate(replies):
        prompt_tokens, completion_tokens = (usages or [])[position] if usages else (100 + position, 50)
        exchange: dict = {
            "response": {
                "content": wire_escape(reply),
                "finish_reason": "stop",
                "usage": {
                    "prompt_tokens": prompt_tokens,
                    "completion_tokens": completion_tokens,
                    "total_tokens": prompt_tokens + completion_tokens,
                },
            }
        }
        if prompts is not None:
            exchange["request_prompt"] = prompts[position]
        exchanges.append(exchange)
    path.write_text(
        json.dumps({"strict": strict, "exchanges": exchanges}, ensure_ascii=False), encoding="utf-8"
    )
    return path


def behavior_fixture(path: Path, behaviors: list[str]) -> Path:
    return write_fixture(path, [reply_for_behavior(b, i) for i, b in enumerate(behaviors)])


def simulate_loop(behaviors: list[str], max_iterations: int, max_extraction_retries: int):
    """Hand-simulated state machine predicting (final_status, loop_count)."""
    consecutive_extraction_failures = 0
    for index in range(1, max_iterations + 1):
        if index - 1 >= len(behaviors):
            return RunStatus.PROVIDER_FAILED, index
        behavior = behaviors[index - 1]
        if behavior == "missing_tag":
            consecutive_extraction_failures += 1
            if consecutive_extraction_failures > max_extraction_retries:
                return RunStatus.EXTRACTION_FAILED, index
            continue
        consecutive_extraction_failures = 0
        if behavior == "pass":
            return RunStatus.SUCCESS, index
    return RunStatus.BUDGET_EXHAUSTED, max_iterations


_TEXT_ALPHABET = (
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    " _-+=./(){};:'\"\\\n\t"
    "äöüßλПривет漢字テスト🙂🚀"
)


def random_text(rng: random.Random, low: int = 0, high: int = 80) -> str:
    return "".join(rng.choice(_TEXT_ALPHABET) for _ in range(rng.randint(low, high)))


def random_usage(rng: random.Random) -> Usage:
    prompt_tokens = rng.randint(0, 5000)
    completion_tokens = rng.randint(0, 5000)
    return Usage(prompt_tokens, completion_tokens, prompt_tokens + completion_tokens)


def random_response(rng: random.Random) -> LlmResponse:
    content = wire_escape(random_text(rng, 1, 200))
    payload = {
        "id": f"r{rng.randint(0, 10**9)}",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
    }
    usage = random_usage(rng)
    return LlmResponse(
        content=content,
        finish_reason=rng.choice(["stop", "length", ""]),
        usage=usage,
        raw_payload=json.dumps(payload, ensure_ascii=False),
    )


def random_artifacts(rng: random.Random) -> ExtractedArtifacts:
    suffix = rng.randint(0, 10**6)
    return ExtractedArtifacts(
        code=f"public class Gen{suffix} {{\n{random_text(rng, 1, 400)}\n}}",
        test_code=f"public class Gen{suffix}Test {{\n{random_text(rng, 1, 400)}\n}}",
        code_class_name=f"Gen{suffix}",
        test_class_name=f"Gen{suffix}Test",
        preamble=random_text(rng, 1, 60) if rng.random() < 0.3 else None,
    )


def random_outcome(rng: random.Random, kind: OutcomeKind) -> ExecutionOutcome:
    if kind is OutcomeKind.SUCCESS:
        counts = TestCounts(run=rng.randint(0, 9), failed=0) if rng.random() < 0.7 else None
        return ExecutionOutcome(OutcomeKind.SUCCESS, "", counts)
    excerpt = random_text(rng, 1, 300) or "failure"
    if kind is OutcomeKind.TEST_FAILURE:
        failed = rng.randint(1, 5)
        counts = TestCounts(run=failed + rng.randint(0, 5), failed=failed) if rng.random() < 0.8 else None
        return ExecutionOutcome(kind, excerpt, counts)
    return ExecutionOutcome(kind, excerpt)


def random_record(rng: random.Random) -> RunRecord:
    loop_count = rng.randint(1, 4)
    base = datetime(2026, 1, 1, tzinfo=timezone.utc) + timedelta(
        seconds=rng.randint(0, 10**7), microseconds=rng.randint(0, 999999)
    )
    iterations: list[IterationRecord] = []
    final_status = rng.choice(
        [RunStatus.SUCCESS, RunStatus.BUDGET_EXHAUSTED, RunStatus.EXTRACTION_FAILED, RunStatus.PROVIDER_FAILED]
    )
    for index in range(1, loop_count + 1):
        started = base + timedelta(seconds=index * 3)
        finished = started + timedelta(milliseconds=rng.randint(1, 5000))
        last = index == loop_count
        record = IterationRecord(
            index=index,
            request_prompt=random_text(rng, 1, 300),
            started_at=started,
            finished_at=finished,
            note=random_text(rng, 1, 40) if rng.random() < 0.2 else None,
        )
        if last and final_status is RunStatus.PROVIDER_FAILED:
            iterations.append(record)
            continue
        record.response = random_response(rng)
        if last and final_status is RunStatus.EXTRACTION_FAILED:
            iterations.append(record)
            continue
        record.artifacts = random_artifacts(rng)
        if last and final_status is RunStatus.SUCCESS:
            record.outcome = random_outcome(rng, OutcomeKind.SUCCESS)
        else:
            record.outcome = random_outcome(
                rng, rng.choice([OutcomeKind.TEST_FAILURE, OutcomeKind.COMPILE_ERROR])
            )
        iterations.append(record)
    totals = Usage()
    for iteration in iterations:
        if iteration.response is not None:
            totals = totals + iteration.response.usage
    return RunRecord(
        run_id=f"{rng.getrandbits(64):016x}",
        user_request=random_text(rng, 1, 200),
        created_at=base,
        iterations=tuple(iterations),
        final_status=final_status,
        loop_count=loop_count,
        usage_totals=totals,
    )


_ACCEPTANCE_RESULTS: list[tuple[str, str, float]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    verdict = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
    _ACCEPTANCE_RESULTS.append((report.nodeid.split("::")[-1], verdict, report.duration))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict, duration in sorted(_ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{name}: {verdict} ({duration:.2f}s)")
