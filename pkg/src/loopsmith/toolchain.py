"""Materialize artifacts into a workspace and run external compile/test commands.

Commands are argument vectors with placeholder tokens, never shell strings, so
generated class names cannot inject into the command line. Each step runs
under a deadline and its output is captured up to a byte cap.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .extract import ExtractedArtifacts


class HarnessError(Exception):
    """The command could not be spawned at all; distinct from a nonzero exit."""


class NameCollision(Exception):
    """Code and test class names are identical and would clash on the classpath."""


class Step(Enum):
    COMPILE = "COMPILE"
    TEST = "TEST"


@dataclass(frozen=True)
class StepResult:
    step: Step
    exit_code: int
    stdout: str
    stderr: str
    duration: float
    timed_out: bool


@dataclass(frozen=True)
class ToolchainConfig:
    """One adapter: source layout, command templates, dependencies, limits.

    Command templates may use the placeholders ``{workspace}``, ``{classpath}``,
    ``{sources}`` (compile), ``{test_class}`` (test), and ``{python}`` (the
    running interpreter). A token that is exactly ``{sources}`` expands to one
    argument per discovered source file.
    """

    name: str
    compile_command: tuple[str, ...]
    test_command: tuple[str, ...]
    main_source_dir: str = "src/main/java"
    test_source_dir: str = "src/test/java"
    source_extension: str = ".java"
    dependency_artifacts: tuple[Path, ...] = ()
    per_step_timeout: float = 60.0
    output_byte_cap: int = 256 * 1024
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for label, command in (("compile_command", self.compile_command), ("test_command", self.test_command)):
            if not command:
                raise ValueError(f"{label} must not be empty")
            if not any("{workspace}" in token for token in command):
                raise ValueError(f"{label} must reference the {{workspace}} placeholder")
        for artifact in self.dependency_artifacts:
            if not Path(artifact).exists():
                raise ValueError(f"dependency artifact {artifact} does not exist")
        if self.per_step_timeout <= 0:
            raise ValueError("per_step_timeout must be positive")
        if self.output_byte_cap < 4096:
            raise ValueError("output_byte_cap must be at least 4096 bytes")


def load_toolchain_config(path: Path | str) -> ToolchainConfig:
    """Load an adapter config from a JSON file.

    Relative ``dependency_artifacts`` paths and the ``{config_dir}`` command
    placeholder resolve against the config file's directory, so adapter files
    stay relocatable.
    """
    path = Path(path)
    document = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(document, dict):
        raise ValueError(f"toolchain config {path}: top level must be an object")
    base = path.parent.resolve()

    def command(key: str) -> tuple[str, ...]:
        tokens = document.get(key)
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            raise ValueError(f"toolchain config {path}: {key} must be a list of strings")
        return tuple(t.replace("{config_dir}", str(base)) for t in tokens)

    artifacts = []
    for entry in document.get("dependency_artifacts", []):
        artifact = Path(entry)
        if not artifact.is_absolute():
            artifact = base / artifact
        artifacts.append(artifact)

    return ToolchainConfig(
        name=str(document.get("name", path.stem)),
        compile_command=command("compile_command"),
        test_command=command("test_command"),
        main_source_dir=str(document.get("main_source_dir", "src/main/java")),
        test_source_dir=str(document.get("test_source_dir", "src/test/java")),
        source_extension=str(document.get("source_extension", ".java")),
        dependency_artifacts=tuple(artifacts),
        per_step_timeout=float(document.get("per_step_timeout", 60.0)),
        output_byte_cap=int(document.get("output_byte_cap", 256 * 1024)),
        diagnostics=dict(document.get("diagnostics", {})),
    )


def materialize(
    workspace_root: Path | str, artifacts: ExtractedArtifacts, config: ToolchainConfig
) -> Path:
    """Write the artifacts into a fresh unique workspace and return its path.

    The code lands at ``{ws}/{main_source_dir}/{code_class_name}{ext}`` and the
    test code under the test source dir, named after their class names so the
    file name matches the declared type.
    """
    if artifacts.code_class_name == artifacts.test_class_name:
        raise NameCollision(
            f"code and test classes are both named {artifacts.code_class_name!r}"
        )
    root = Path(workspace_root)
    root.mkdir(parents=True, exist_ok=True)
    workspace = Path(tempfile.mkdtemp(prefix="ws-", dir=root))
    targets = (
        (workspace / config.main_source_dir / (artifacts.code_class_name + config.source_extension), artifacts.code),
        (workspace / config.test_source_dir / (artifacts.test_class_name + config.source_extension), artifacts.test_code),
    )
    for target, text in targets:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(text.encode("utf-8"))
    return workspace


def _discover_sources(workspace: Path, config: ToolchainConfig) -> list[str]:
    sources: list[str] = []
    for subdir in (config.main_source_dir, config.test_source_dir):
        directory = workspace / subdir
        if directory.is_dir():
            sources.extend(str(p) for p in sorted(directory.rglob(f"*{config.source_extension}")))
    return sources


def _classpath(config: ToolchainConfig) -> str:
    return os.pathsep.join(str(p) for p in config.dependency_artifacts)


def _expand(
    template: tuple[str, ...],
    *,
    workspace: Path,
    classpath: str,
    sources: list[str] | None = None,
    test_class: str | None = None,
) -> list[str]:
    substitutions = {
        "{workspace}": str(workspace),
        "{classpath}": classpath,
        "{python}": sys.executable,
    }
    if test_class is not None:
        substitutions["{test_class}"] = test_class
    argv: list[str] = []
    for token in template:
        if token == "{sources}" and sources is not None:
            argv.extend(sources)
            continue
        expanded = token
        for placeholder, value in substitutions.items():
            expanded = expanded.replace(placeholder, value)
        if sources is not None and "{sources}" in expanded:
            expanded = expanded.replace("{sources}", " ".join(sources))
        argv.append(expanded)
    return argv


def _truncate(data: bytes, cap: int) -> str:
    if len(data) <= cap:
        return data.decode("utf-8", errors="replace")
    note = f"\n[output truncated at {cap} bytes]"
    keep = max(0, cap - len(note.encode("utf-8")))
    return data[:keep].decode("utf-8", errors="replace") + note


def _execute(argv: list[str], step: Step, config: ToolchainConfig, cwd: Path) -> StepResult:
    start = time.monotonic()
    try:
        process = subprocess.Popen(
            argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE, cwd=str(cwd)
        )
    except (OSError, ValueError, IndexError) as exc:
        raise HarnessError(f"failed to spawn {argv[:1] or ['<empty>']}: {exc}") from exc
    timed_out = False
    try:
        out, err = process.communicate(timeout=config.per_step_timeout)
    except subprocess.TimeoutExpired:
        timed_out = True
        process.kill()
        out, err = process.communicate()
    duration = time.monotonic() - start
    return StepResult(
        step=step,
        exit_code=process.returncode,
        stdout=_truncate(out, config.output_byte_cap),
        stderr=_truncate(err, config.output_byte_cap),
        duration=duration,
        timed_out=timed_out,
    )


def compile(workspace: Path, config: ToolchainConfig) -> StepResult:  # noqa: A001 - module-scoped name
    """Run the adapter's compile command over the workspace sources."""
    argv = _expand(
        config.compile_command,
        workspace=workspace,
        classpath=_classpath(config),
        sources=_discover_sources(workspace, config),
    )
    return _execute(argv, Step.COMPILE, config, cwd=workspace)


def run_tests(workspace: Path, config: ToolchainConfig, test_class: str) -> StepResult:
    """Run the adapter's test command for one test class."""
    argv = _expand(
        config.test_command,
        workspace=workspace,
        classpath=_classpath(config),
        test_class=test_class,
    )
    return _execute(argv, Step.TEST, config, cwd=workspace)
