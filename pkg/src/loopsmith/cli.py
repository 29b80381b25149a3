"""Command-line entry point: run a loop, browse history, inspect templates."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import NoReturn

from .client import ProviderBinding
from .loop import IterationRecord, RunBudget, RunStatus, run
from .prompts import PromptSpec, TemplateVersion, lint_request_language, template_text
from .resources import synthetic_toolchain_path
from .store import HistoryStore, NotFound, record_to_dict
from .toolchain import load_toolchain_config

USAGE_ERROR = 64

EXIT_CODES = {
    RunStatus.SUCCESS: 0,
    RunStatus.BUDGET_EXHAUSTED: 2,
    RunStatus.EXTRACTION_FAILED: 3,
    RunStatus.HARNESS_FAULT: 4,
    RunStatus.PROVIDER_FAILED: 4,
}

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_CREDENTIAL_ENV = "OPENAI_API_KEY"


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 64."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def default_store_path() -> Path:
    env = os.environ.get("LOOPSMITH_STORE")
    if env:
        return Path(env)
    data_home = os.environ.get("XDG_DATA_HOME") or str(Path.home() / ".local" / "share")
    return Path(data_home) / "loopsmith" / "history.sqlite3"


def _build_parser() -> _Parser:
    parser = _Parser(prog="loopsmith", description="Generate, test, and auto-repair code via an LLM loop.")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="run one generation loop")
    prompt_group = run_parser.add_mutually_exclusive_group(required=True)
    prompt_group.add_argument("--prompt", help="the request text")
    prompt_group.add_argument("--prompt-file", help="file containing the request text")
    run_parser.add_argument(
        "--provider",
        default="live",
        help="'live' or 'replay:<fixture path>' (default: live)",
    )
    run_parser.add_argument("--model", default="gpt-4", help="model identifier (default: gpt-4)")
    run_parser.add_argument(
        "--template",
        default=TemplateVersion.V5_FINAL.name,
        choices=[v.name for v in TemplateVersion],
        help="prompt template version (default: V5_FINAL)",
    )
    run_parser.add_argument(
        "--toolchain",
        default=None,
        help="toolchain adapter config (default: the bundled synthetic adapter)",
    )
    run_parser.add_argument("--max-iter", type=int, default=5, help="iteration cap (default: 5)")
    run_parser.add_argument(
        "--wall-clock-secs", type=float, default=600.0, help="wall clock cap in seconds (default: 600)"
    )
    run_parser.add_argument("--temperature", type=float, default=0.2)
    run_parser.add_argument("--max-output-tokens", type=int, default=4096)
    run_parser.add_argument("--endpoint", default=DEFAULT_ENDPOINT, help="live endpoint URL")
    run_parser.add_argument(
        "--credential-env",
        default=DEFAULT_CREDENTIAL_ENV,
        help=f"environment variable holding the bearer token (default: {DEFAULT_CREDENTIAL_ENV})",
    )
    run_parser.add_argument("--store", default=None, help="history store path")
    run_parser.add_argument("--workspace-root", default=None, help="directory for per-iteration workspaces")
    run_parser.add_argument("--keep-workspace", action="store_true", help="retain workspaces even on success")
    run_parser.add_argument("--json", action="store_true", help="emit the run record as JSON on stdout")

    history_parser = commands.add_parser("history", help="browse stored runs")
    history_commands = history_parser.add_subparsers(dest="history_command", required=True)
    list_parser = history_commands.add_parser("list", help="list stored runs, newest first")
    list_parser.add_argument("--status", choices=[s.name for s in RunStatus], default=None)
    list_parser.add_argument("--limit", type=int, default=50)
    list_parser.add_argument("--offset", type=int, default=0)
    list_parser.add_argument("--store", default=None)
    list_parser.add_argument("--json", action="store_true")
    show_parser = history_commands.add_parser("show", help="show one run in detail")
    show_parser.add_argument("run_id")
    show_parser.add_argument("--store", default=None)
    show_parser.add_argument("--json", action="store_true")
    export_parser = history_commands.add_parser("export", help="emit one run as a JSON document")
    export_parser.add_argument("run_id")
    export_parser.add_argument("--store", default=None)

    templates_parser = commands.add_parser("templates", help="inspect prompt templates")
    templates_commands = templates_parser.add_subparsers(dest="templates_command", required=True)
    show_template = templates_commands.add_parser("show", help="print one template's exact text")
    show_template.add_argument("version", choices=[v.name for v in TemplateVersion])

    return parser


def _resolve_store(value: str | None) -> HistoryStore:
    return HistoryStore(Path(value) if value else default_store_path())


def _resolve_binding(parser: _Parser, args: argparse.Namespace) -> ProviderBinding:
    provider = args.provider
    if provider == "live":
        return ProviderBinding.live(args.endpoint, args.credential_env)
    if provider.startswith("replay:"):
        fixture = provider.split(":", 1)[1]
        try:
            return ProviderBinding.replay(fixture)
        except (ValueError, OSError) as exc:
            parser.error(f"cannot load replay fixture: {exc}")
    parser.error(f"unknown provider {provider!r}; expected 'live' or 'replay:<path>'")
    raise AssertionError("unreachable")


def _cmd_run(parser: _Parser, args: argparse.Namespace) -> int:
    if args.prompt_file is not None:
        try:
            prompt = Path(args.prompt_file).read_text(encoding="utf-8")
        except OSError as exc:
            parser.error(f"cannot read prompt file: {exc}")
    else:
        prompt = args.prompt
    if not prompt.strip():
        parser.error("the prompt must not be blank")

    for warning in lint_request_language(prompt):
        print(f"warning: {warning.message}", file=sys.stderr)

    binding = _resolve_binding(parser, args)
    toolchain_path = Path(args.toolchain) if args.toolchain else synthetic_toolchain_path()
    try:
        config = load_toolchain_config(toolchain_path)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        parser.error(f"cannot load toolchain config {toolchain_path}: {exc}")
    try:
        budget = RunBudget(
            max_iterations=args.max_iter,
            max_wall_clock=args.wall_clock_secs,
            max_extraction_retries=min(2, max(args.max_iter - 1, 0)),
        )
    except ValueError as exc:
        parser.error(str(exc))

    spec = PromptSpec(user_request=prompt, template_version=TemplateVersion[args.template])

    def progress(iteration: IterationRecord) -> None:
        duration = (iteration.finished_at - iteration.started_at).total_seconds()
        if iteration.outcome is not None:
            verdict = iteration.outcome.kind.value
        elif iteration.note:
            verdict = iteration.note
        else:
            verdict = "no outcome"
        usage = iteration.response.usage if iteration.response else None
        tokens = f", tokens {usage.prompt_tokens}+{usage.completion_tokens}" if usage else ""
        print(f"[iter {iteration.index}] {verdict} in {duration:.2f}s{tokens}", file=sys.stderr)

    record = run(
        spec,
        binding,
        config,
        budget,
        model_id=args.model,
        temperature=args.temperature,
        max_output_tokens=args.max_output_tokens,
        workspace_root=args.workspace_root,
        keep_workspaces=args.keep_workspace,
        on_iteration=progress,
    )
    store = _resolve_store(args.store)
    store.save_run(record)
    totals = record.usage_totals
    print(
        f"run {record.run_id}: {record.final_status.value} after {record.loop_count} iteration(s), "
        f"total tokens {totals.total_tokens}",
        file=sys.stderr,
    )

    if args.json:
        print(json.dumps(record_to_dict(record), indent=2, ensure_ascii=False))
    elif record.final_status is RunStatus.SUCCESS:
        artifacts = record.iterations[-1].artifacts
        assert artifacts is not None
        print(f"== Code ({artifacts.code_class_name}) ==")
        print(artifacts.code)
        print()
        print(f"== Test code ({artifacts.test_class_name}) ==")
        print(artifacts.test_code)
    return EXIT_CODES[record.final_status]


def _cmd_history(parser: _Parser, args: argparse.Namespace) -> int:
    store = _resolve_store(args.store)
    if args.history_command == "list":
        status = RunStatus[args.status] if args.status else None
        summaries = store.list_runs(status, offset=args.offset, limit=args.limit)
        if args.json:
            print(
                json.dumps(
                    [
                        {
                            "run_id": s.run_id,
                            "user_request": s.user_request,
                            "created_at": s.created_at.isoformat(),
                            "loop_count": s.loop_count,
                            "final_status": s.final_status.value,
                        }
                        for s in summaries
                    ],
                    indent=2,
                    ensure_ascii=False,
                )
            )
            return 0
        if not summaries:
            print("no stored runs")
            return 0
        print(f"{'run_id':<34} {'created_at':<33} {'loops':>5} {'status':<18} request")
        for summary in summaries:
            print(
                f"{summary.run_id:<34} {summary.created_at.isoformat():<33} "
                f"{summary.loop_count:>5} {summary.final_status.value:<18} {summary.user_request}"
            )
        return 0

    try:
        document = store.export_run(args.run_id)
    except NotFound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.history_command == "export" or getattr(args, "json", False):
        print(json.dumps(document, indent=2, ensure_ascii=False))
        return 0

    print(f"run {document['run_id']}")
    print(f"  request:    {document['user_request']}")
    print(f"  created_at: {document['created_at']}")
    print(f"  status:     {document['final_status']}")
    print(f"  loops:      {document['loop_count']}")
    totals = document["usage_totals"]
    print(
        f"  tokens:     {totals['prompt_tokens']} prompt + {totals['completion_tokens']} completion"
        f" = {totals['total_tokens']}"
    )
    for iteration in document["iterations"]:
        print(f"\n-- iteration {iteration['index']} --")
        outcome = iteration.get("outcome")
        if outcome:
            print(f"  outcome: {outcome['kind']}")
            if outcome["excerpt"]:
                print("  excerpt:")
                for line in outcome["excerpt"].splitlines():
                    print(f"    {line}")
        elif iteration.get("note"):
            print(f"  note: {iteration['note']}")
        artifacts = iteration.get("artifacts")
        if artifacts:
            print(f"  code ({artifacts['code_class_name']}):")
            for line in artifacts["code"].splitlines():
                print(f"    {line}")
            print(f"  test code ({artifacts['test_class_name']}):")
            for line in artifacts["test_code"].splitlines():
                print(f"    {line}")
    return 0


def _cmd_templates(args: argparse.Namespace) -> int:
    print(template_text(TemplateVersion[args.version]))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(parser, args)
        if args.command == "history":
            return _cmd_history(parser, args)
        return _cmd_templates(args)
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
