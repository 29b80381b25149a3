"""Durable run history in a single SQLite file.

Each run is stored as one row: projection columns for listing plus the full
record as a JSON document, so a save is one atomic insert and a crash can
never leave a torn record behind. The same JSON document doubles as the
export format.
"""

from __future__ import annotations

import json
import sqlite3
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable

from .client import LlmResponse, Usage
from .diagnostics import ExecutionOutcome, OutcomeKind, TestCounts
from .extract import ExtractedArtifacts
from .loop import IterationRecord, RunRecord, RunStatus

SCHEMA_VERSION = 1
SUMMARY_REQUEST_LIMIT = 120


class StorageError(Exception):
    """The underlying store misbehaved."""


class DuplicateRunId(StorageError):
    """A record with this run_id is already stored."""


class NotFound(StorageError):
    """No record with this run_id exists."""


@dataclass(frozen=True)
class StoredRunSummary:
    run_id: str
    user_request: str
    created_at: datetime
    loop_count: int
    final_status: RunStatus


def record_to_dict(record: RunRecord) -> dict[str, Any]:
    """Serialize a run record to the self-contained export document."""
    return {
        "schema_version": SCHEMA_VERSION,
        "run_id": record.run_id,
        "user_request": record.user_request,
        "created_at": record.created_at.isoformat(),
        "final_status": record.final_status.value,
        "loop_count": record.loop_count,
        "usage_totals": _usage_to_dict(record.usage_totals),
        "iterations": [_iteration_to_dict(it) for it in record.iterations],
    }


def record_from_dict(document: dict[str, Any]) -> RunRecord:
    return RunRecord(
        run_id=document["run_id"],
        user_request=document["user_request"],
        created_at=datetime.fromisoformat(document["created_at"]),
        iterations=tuple(_iteration_from_dict(it) for it in document["iterations"]),
        final_status=RunStatus(document["final_status"]),
        loop_count=document["loop_count"],
        usage_totals=_usage_from_dict(document["usage_totals"]),
    )


def _usage_to_dict(usage: Usage) -> dict[str, int]:
    return {
        "prompt_tokens": usage.prompt_tokens,
        "completion_tokens": usage.completion_tokens,
        "total_tokens": usage.total_tokens,
    }


def _usage_from_dict(document: dict[str, Any]) -> Usage:
    return Usage(
        prompt_tokens=document["prompt_tokens"],
        completion_tokens=document["completion_tokens"],
        total_tokens=document["total_tokens"],
    )


def _iteration_to_dict(iteration: IterationRecord) -> dict[str, Any]:
    response = iteration.response
    artifacts = iteration.artifacts
    outcome = iteration.outcome
    return {
        "index": iteration.index,
        "request_prompt": iteration.request_prompt,
        "started_at": iteration.started_at.isoformat(),
        "finished_at": iteration.finished_at.isoformat(),
        "note": iteration.note,
        "response": None
        if response is None
        else {
            "content": response.content,
            "finish_reason": response.finish_reason,
            "usage": _usage_to_dict(response.usage),
            "raw_payload": response.raw_payload,
        },
        "artifacts": None
        if artifacts is None
        else {
            "code": artifacts.code,
            "test_code": artifacts.test_code,
            "code_class_name": artifacts.code_class_name,
            "test_class_name": artifacts.test_class_name,
            "preamble": artifacts.preamble,
        },
        "outcome": None
        if outcome is None
        else {
            "kind": outcome.kind.value,
            "excerpt": outcome.excerpt,
            "test_counts": None
            if outcome.test_counts is None
            else {"run": outcome.test_counts.run, "failed": outcome.test_counts.failed},
        },
    }


def _iteration_from_dict(document: dict[str, Any]) -> IterationRecord:
    response_doc = document.get("response")
    artifacts_doc = document.get("artifacts")
    outcome_doc = document.get("outcome")
    response = None
    if response_doc is not None:
        response = LlmResponse(
            content=response_doc["content"],
            finish_reason=response_doc["finish_reason"],
            usage=_usage_from_dict(response_doc["usage"]),
            raw_payload=response_doc["raw_payload"],
        )
    artifacts = None
    if artifacts_doc is not None:
        artifacts = ExtractedArtifacts(
            code=artifacts_doc["code"],
            test_code=artifacts_doc["test_code"],
            code_class_name=artifacts_doc["code_class_name"],
            test_class_name=artifacts_doc["test_class_name"],
            preamble=artifacts_doc.get("preamble"),
        )
    outcome = None
    if outcome_doc is not None:
        counts_doc = outcome_doc.get("test_counts")
        outcome = ExecutionOutcome(
            kind=OutcomeKind(outcome_doc["kind"]),
            excerpt=outcome_doc["excerpt"],
            test_counts=None
            if counts_doc is None
            else TestCounts(run=counts_doc["run"], failed=counts_doc["failed"]),
        )
    return IterationRecord(
        index=document["index"],
        request_prompt=document["request_prompt"],
        started_at=datetime.fromisoformat(document["started_at"]),
        finished_at=datetime.fromisoformat(document["finished_at"]),
        response=response,
        artifacts=artifacts,
        outcome=outcome,
        note=document.get("note"),
    )


_CREATE_TABLES = """
CREATE TABLE IF NOT EXISTS meta (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS runs (
    run_id TEXT PRIMARY KEY,
    user_request TEXT NOT NULL,
    created_at TEXT NOT NULL,
    final_status TEXT NOT NULL,
    loop_count INTEGER NOT NULL,
    prompt_tokens INTEGER NOT NULL,
    completion_tokens INTEGER NOT NULL,
    total_tokens INTEGER NOT NULL,
    record TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS runs_created_at ON runs (created_at DESC, run_id DESC);
"""


class HistoryStore:
    """List/detail persistence of run records; safe for concurrent invocations."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._abort_hook: Callable[[], None] | None = None  # test seam: fires mid-save
        connection = self._connect()
        try:
            with connection:
                connection.executescript(_CREATE_TABLES)
                connection.execute(
                    "INSERT OR IGNORE INTO meta (key, value) VALUES ('schema_version', ?)",
                    (str(SCHEMA_VERSION),),
                )
        finally:
            connection.close()

    def _connect(self) -> sqlite3.Connection:
        connection = sqlite3.connect(self.path, timeout=10.0)
        connection.execute("PRAGMA busy_timeout = 10000")
        return connection

    def save_run(self, record: RunRecord) -> str:
        """Persist one record atomically; a crash mid-save leaves nothing behind."""
        # ensure_ascii keeps the stored column valid UTF-8 even if a degenerate
        # reply smuggled unencodable code points into a record field
        document = json.dumps(record_to_dict(record), ensure_ascii=True)
        connection = self._connect()
        try:
            with connection:
                connection.execute(
                    "INSERT INTO runs (run_id, user_request, created_at, final_status,"
                    " loop_count, prompt_tokens, completion_tokens, total_tokens, record)"
                    " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                    (
                        record.run_id,
                        record.user_request,
                        record.created_at.isoformat(),
                        record.final_status.value,
                        record.loop_count,
                        record.usage_totals.prompt_tokens,
                        record.usage_totals.completion_tokens,
                        record.usage_totals.total_tokens,
                        document,
                    ),
                )
                if self._abort_hook is not None:
                    self._abort_hook()
        except sqlite3.IntegrityError as exc:
            raise DuplicateRunId(f"run {record.run_id} is already stored") from exc
        except sqlite3.Error as exc:
            raise StorageError(str(exc)) from exc
        finally:
            connection.close()
        return record.run_id

    def list_runs(
        self,
        status: RunStatus | None = None,
        *,
        offset: int = 0,
        limit: int = 50,
    ) -> list[StoredRunSummary]:
        """Summaries, newest first; ties broken by run_id for stable pagination."""
        query = (
            "SELECT run_id, user_request, created_at, loop_count, final_status FROM runs"
        )
        parameters: list[Any] = []
        if status is not None:
            query += " WHERE final_status = ?"
            parameters.append(status.value)
        query += " ORDER BY created_at DESC, run_id DESC LIMIT ? OFFSET ?"
        parameters.extend([limit, offset])
        connection = self._connect()
        try:
            rows = connection.execute(query, parameters).fetchall()
        except sqlite3.Error as exc:
            raise StorageError(str(exc)) from exc
        finally:
            connection.close()
        return [
            StoredRunSummary(
                run_id=row[0],
                user_request=row[1][:SUMMARY_REQUEST_LIMIT],
                created_at=datetime.fromisoformat(row[2]),
                loop_count=row[3],
                final_status=RunStatus(row[4]),
            )
            for row in rows
        ]

    def get_run(self, run_id: str) -> RunRecord:
        return record_from_dict(self._load_document(run_id))

    def export_run(self, run_id: str) -> dict[str, Any]:
        """The stored record as a self-contained JSON-ready document."""
        return self._load_document(run_id)

    def _load_document(self, run_id: str) -> dict[str, Any]:
        connection = self._connect()
        try:
            row = connection.execute(
                "SELECT record FROM runs WHERE run_id = ?", (run_id,)
            ).fetchone()
        except sqlite3.Error as exc:
            raise StorageError(str(exc)) from exc
        finally:
            connection.close()
        if row is None:
            raise NotFound(f"no run with id {run_id!r}")
        return json.loads(row[0])
