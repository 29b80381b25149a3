"""Paths to bundled data files (fixtures, synthetic adapter, prompt templates)."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def data_path(*parts: str) -> Path:
    """Absolute path of a file under the package's data directory."""
    return Path(str(resources.files("loopsmith").joinpath("data", *parts)))


def synthetic_toolchain_path() -> Path:
    return data_path("synthetic", "toolchain.json")


def weather_fixture_path() -> Path:
    return data_path("fixtures", "weather_two_loop.json")


def token_usage_fixture_path() -> Path:
    return data_path("fixtures", "token_usage.json")
