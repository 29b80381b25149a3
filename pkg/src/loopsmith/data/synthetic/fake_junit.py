#!/usr/bin/env python3
"""Scripted stand-in for a JUnit console runner, driven by LOOPFAKE directives.

Usage: fake_junit.py <workspace> <test_class>

Recognized directives (anywhere in any workspace source file):
    // LOOPFAKE:fail <testName> <message>   one failing test with that message
    // LOOPFAKE:pass <testName>             one passing test
    // LOOPFAKE:test-sleep=<seconds>        sleep before running

With no test directives at all, one implicit passing test is reported. Output
mimics a console test runner: per-test verdict lines, assertion info and stack
frames for failures, and a final "N tests completed, M failed" summary.
"""
import pathlib
import re
import sys
import time

FAIL_DIRECTIVE = re.compile(r"//\s*LOOPFAKE:fail\s+(\w+)\s+(.+)")
PASS_DIRECTIVE = re.compile(r"//\s*LOOPFAKE:pass\s+(\w+)")
SLEEP_DIRECTIVE = re.compile(r"//\s*LOOPFAKE:test-sleep=([0-9.]+)")


def main(argv):
    if len(argv) != 3:
        print("usage: fake_junit.py <workspace> <test_class>", file=sys.stderr)
        return 2
    workspace, test_class = pathlib.Path(argv[1]), argv[2]
    text = "\n".join(
        path.read_text(encoding="utf-8") for path in sorted(workspace.rglob("*.java"))
    )

    sleep = SLEEP_DIRECTIVE.search(text)
    if sleep:
        time.sleep(float(sleep.group(1)))

    failures = FAIL_DIRECTIVE.findall(text)
    passes = PASS_DIRECTIVE.findall(text)
    if not failures and not passes:
        passes = ["defaultBehaviour"]

    print(f"Scripted console runner for {test_class}")
    print()
    for name in passes:
        print(f"{test_class} > {name}() PASSED")
    for index, (name, message) in enumerate(failures):
        print(f"{test_class} > {name}() FAILED")
        print(f"    org.opentest4j.AssertionFailedError: {message}")
        print("        at org.junit.jupiter.api.AssertionUtils.fail(AssertionUtils.java:38)")
        print(f"        at {test_class}.{name}({test_class}.java:{10 + index})")
    print()
    total = len(passes) + len(failures)
    print(f"{total} tests completed, {len(failures)} failed")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
