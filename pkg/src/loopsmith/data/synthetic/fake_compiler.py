#!/usr/bin/env python3
"""Scripted stand-in for a compiler, driven by LOOPFAKE directives in the sources.

Usage: fake_compiler.py <workspace> <source>...

Recognized directives (anywhere in a source file):
    // LOOPFAKE:compile-error <message>   emit "<file>:<line>: error: <message>", exit 1
    // LOOPFAKE:compile-sleep=<seconds>   sleep before doing anything else
"""
import re
import sys
import time

ERROR_DIRECTIVE = re.compile(r"//\s*LOOPFAKE:compile-error\s+(.+)")
SLEEP_DIRECTIVE = re.compile(r"//\s*LOOPFAKE:compile-sleep=([0-9.]+)")


def main(argv):
    if len(argv) < 2:
        print("usage: fake_compiler.py <workspace> <source>...", file=sys.stderr)
        return 2
    sources = argv[2:]
    texts = {}
    for path in sources:
        with open(path, encoding="utf-8") as handle:
            texts[path] = handle.read()

    for text in texts.values():
        sleep = SLEEP_DIRECTIVE.search(text)
        if sleep:
            time.sleep(float(sleep.group(1)))

    diagnostics = []
    for path, text in texts.items():
        for lineno, line in enumerate(text.splitlines(), start=1):
            match = ERROR_DIRECTIVE.search(line)
            if match:
                diagnostics.append(f"{path}:{lineno}: error: {match.group(1)}")
    if diagnostics:
        for diagnostic in diagnostics:
            print(diagnostic, file=sys.stderr)
        plural = "s" if len(diagnostics) != 1 else ""
        print(f"{len(diagnostics)} error{plural}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
