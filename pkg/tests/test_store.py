from __future__ import annotations

import hashlib
import json
import random
from datetime import datetime, timedelta, timezone

import pytest

from loopsmith.diagnostics import ExecutionOutcome, OutcomeKind
from loopsmith.loop import IterationRecord, RunRecord, RunStatus
from loopsmith.store import (
    DuplicateRunId,
    HistoryStore,
    NotFound,
    record_from_dict,
    record_to_dict,
)

from conftest import random_artifacts, random_record, random_response


def simple_record(run_id: str = "run-1", created_at: datetime | None = None, status=RunStatus.SUCCESS) -> RunRecord:
    rng = random.Random(hash(run_id) & 0xFFFF)
    created = created_at or datetime(2026, 2, 1, 12, 0, tzinfo=timezone.utc)
    outcome = (
        ExecutionOutcome(OutcomeKind.SUCCESS)
        if status is RunStatus.SUCCESS
        else ExecutionOutcome(OutcomeKind.TEST_FAILURE, excerpt="boom")
    )
    iteration = IterationRecord(
        index=1,
        request_prompt="prompt",
        started_at=created,
        finished_at=created + timedelta(seconds=1),
        response=random_response(rng),
        artifacts=random_artifacts(rng),
        outcome=outcome,
    )
    return RunRecord(
        run_id=run_id,
        user_request="make a widget",
        created_at=created,
        iterations=(iteration,),
        final_status=status,
        loop_count=1,
        usage_totals=iteration.response.usage,
    )


def test_save_then_get_round_trips(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    record = simple_record()
    store.save_run(record)
    assert store.get_run("run-1") == record


def test_duplicate_run_id_rejected(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    store.save_run(simple_record())
    with pytest.raises(DuplicateRunId):
        store.save_run(simple_record())


def test_get_unknown_id(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    with pytest.raises(NotFound):
        store.get_run("deadbeef")


def test_empty_store_lists_nothing(tmp_path):
    assert HistoryStore(tmp_path / "h.sqlite3").list_runs() == []


def test_list_newest_first_with_run_id_tiebreak(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    base = datetime(2026, 3, 1, tzinfo=timezone.utc)
    store.save_run(simple_record("a-old", base))
    store.save_run(simple_record("b-new", base + timedelta(minutes=5)))
    store.save_run(simple_record("c-tied", base + timedelta(minutes=5)))
    listed = [s.run_id for s in store.list_runs()]
    assert listed == ["c-tied", "b-new", "a-old"]


def test_list_filter_by_status(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    store.save_run(simple_record("ok", status=RunStatus.SUCCESS))
    store.save_run(simple_record("worn", status=RunStatus.BUDGET_EXHAUSTED))
    only_success = store.list_runs(RunStatus.SUCCESS)
    assert [s.run_id for s in only_success] == ["ok"]
    assert only_success[0].final_status is RunStatus.SUCCESS


def test_list_pagination_is_stable(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    base = datetime(2026, 3, 1, tzinfo=timezone.utc)
    for i in range(7):
        store.save_run(simple_record(f"run-{i}", base + timedelta(seconds=i)))
    page_one = store.list_runs(offset=0, limit=3)
    page_two = store.list_runs(offset=3, limit=3)
    page_three = store.list_runs(offset=6, limit=3)
    ids = [s.run_id for s in page_one + page_two + page_three]
    assert ids == [f"run-{i}" for i in reversed(range(7))]


def test_summary_is_projection_of_record(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    long_request = "x" * 400
    record = simple_record("long")
    record = RunRecord(
        run_id="long",
        user_request=long_request,
        created_at=record.created_at,
        iterations=record.iterations,
        final_status=record.final_status,
        loop_count=record.loop_count,
        usage_totals=record.usage_totals,
    )
    store.save_run(record)
    summary = store.list_runs()[0]
    assert summary.user_request == long_request[:120]
    assert summary.created_at == record.created_at
    assert summary.loop_count == record.loop_count
    assert summary.final_status == record.final_status


def test_budget_exhausted_projection(tmp_path):
    rng = random.Random(5)
    while True:
        record = random_record(rng)
        if record.final_status is RunStatus.BUDGET_EXHAUSTED and record.loop_count >= 2:
            break
    store = HistoryStore(tmp_path / "h.sqlite3")
    store.save_run(record)
    summary = store.list_runs()[0]
    assert summary.loop_count == record.loop_count
    assert summary.final_status is RunStatus.BUDGET_EXHAUSTED


def test_multikilobyte_code_round_trips_byte_identical(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    record = simple_record("big")
    big_code = "public class Big {\n" + ("    // filler line with ünicode 🙂\n" * 400) + "}"
    artifacts = record.iterations[0].artifacts
    assert artifacts is not None
    patched = IterationRecord(
        index=1,
        request_prompt=record.iterations[0].request_prompt,
        started_at=record.iterations[0].started_at,
        finished_at=record.iterations[0].finished_at,
        response=record.iterations[0].response,
        artifacts=type(artifacts)(
            code=big_code,
            test_code=artifacts.test_code,
            code_class_name="Big",
            test_class_name=artifacts.test_class_name,
        ),
        outcome=record.iterations[0].outcome,
    )
    record = RunRecord(
        run_id="big",
        user_request=record.user_request,
        created_at=record.created_at,
        iterations=(patched,),
        final_status=record.final_status,
        loop_count=1,
        usage_totals=record.usage_totals,
    )
    before = hashlib.sha256(big_code.encode("utf-8")).hexdigest()
    store.save_run(record)
    loaded = store.get_run("big")
    assert loaded.iterations[0].artifacts is not None
    after = hashlib.sha256(loaded.iterations[0].artifacts.code.encode("utf-8")).hexdigest()
    assert before == after


def test_torn_write_leaves_no_partial_record(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")

    class Abort(RuntimeError):
        pass

    def bomb():
        raise Abort("simulated crash mid-save")

    store._abort_hook = bomb
    with pytest.raises(Abort):
        store.save_run(simple_record("doomed"))
    store._abort_hook = None
    assert store.list_runs() == []
    with pytest.raises(NotFound):
        store.get_run("doomed")
    # the store remains usable afterwards
    store.save_run(simple_record("doomed"))
    assert store.get_run("doomed").run_id == "doomed"


def test_hard_kill_mid_save_leaves_no_partial_record(tmp_path):
    """Process death inside the transaction (no Python rollback) must not tear the store."""
    import json
    import subprocess
    import sys

    store_path = tmp_path / "killed.sqlite3"
    HistoryStore(store_path)  # create the schema up front
    record_doc = json.dumps(record_to_dict(simple_record("victim")))
    script = (
        "import json, os, sys\n"
        "from loopsmith.store import HistoryStore, record_from_dict\n"
        "store = HistoryStore(sys.argv[1])\n"
        "store._abort_hook = lambda: os._exit(137)\n"
        "store.save_run(record_from_dict(json.loads(sys.stdin.read())))\n"
    )
    result = subprocess.run(
        [sys.executable, "-c", script, str(store_path)],
        input=record_doc,
        capture_output=True,
        text=True,
    )
    assert result.returncode == 137, result.stderr
    store = HistoryStore(store_path)
    assert store.list_runs() == []
    with pytest.raises(NotFound):
        store.get_run("victim")
    store.save_run(simple_record("victim"))  # journal recovery leaves the store usable
    assert store.get_run("victim").run_id == "victim"


def test_concurrent_store_handles(tmp_path):
    path = tmp_path / "h.sqlite3"
    first, second = HistoryStore(path), HistoryStore(path)
    first.save_run(simple_record("one"))
    second.save_run(simple_record("two", datetime(2026, 4, 1, tzinfo=timezone.utc)))
    assert {s.run_id for s in first.list_runs()} == {"one", "two"}


def test_export_matches_serializer(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    record = simple_record("exp")
    store.save_run(record)
    document = store.export_run("exp")
    assert document == record_to_dict(record)
    json.dumps(document)  # self-contained JSON document


def test_codec_round_trip_on_randomized_records():
    rng = random.Random(17)
    for _ in range(100):
        record = random_record(rng)
        assert record_from_dict(json.loads(json.dumps(record_to_dict(record)))) == record


def test_raw_payload_stored_verbatim(tmp_path):
    store = HistoryStore(tmp_path / "h.sqlite3")
    record = simple_record("payload")
    store.save_run(record)
    loaded = store.get_run("payload")
    assert loaded.iterations[0].response is not None
    assert record.iterations[0].response is not None
    assert loaded.iterations[0].response.raw_payload == record.iterations[0].response.raw_payload
