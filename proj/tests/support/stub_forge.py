#!/usr/bin/env python3
"""Stand-in for `forge build` / `forge test` driven by a rules file.

Rules file: {"build": [rule...], "test": [rule...]}. A rule matches when every
string in "contains" occurs in test/PoC.t.sol and none in "absent" does. The
first match prints "output" (or the file named by "output_file", relative to
the rules file) and exits with "exit" (default 0). Placeholder markers and
unbalanced braces always fail the build.
"""

import argparse
import json
import os
import re
import sys


def strip_comments_and_strings(src):
    src = re.sub(r"//[^\n]*", "", src)
    src = re.sub(r"/\*.*?\*/", "", src, flags=re.S)
    return re.sub(r'"(\\.|[^"\\])*"', '""', src)


def builtin_errors(src):
    errors = []
    m = re.search(r"/\*<<(\w+)>>\*/", src)
    if m:
        line = src[: m.start()].count("\n") + 1
        errors.append((f"Error (7576): Undeclared identifier. Placeholder {m.group(1)} left in source", line))
    body = strip_comments_and_strings(src)
    depth = 0
    for i, ch in enumerate(body):
        depth += ch == "{"
        depth -= ch == "}"
        if depth < 0:
            errors.append(("Error (2314): Expected end of source but got '}'", body[:i].count("\n") + 1))
            break
    if depth > 0:
        errors.append(("Error (2314): Expected '}' but got end of source", body.count("\n") + 1))
    return errors


def matches(rule, src):
    def as_list(v):
        return [v] if isinstance(v, str) else list(v or [])

    return all(s in src for s in as_list(rule.get("contains"))) and not any(s in src for s in as_list(rule.get("absent")))


def emit(rule, base):
    text = rule.get("output", "")
    if "output_file" in rule:
        with open(os.path.join(base, rule["output_file"]), encoding="utf-8") as f:
            text = f.read()
    sys.stdout.write(text)
    if text and not text.endswith("\n"):
        sys.stdout.write("\n")
    return int(rule.get("exit", 0))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rules", required=True)
    ap.add_argument("command")
    args, _ = ap.parse_known_args()
    with open(args.rules, encoding="utf-8") as f:
        rules = json.load(f)
    base = os.path.dirname(os.path.abspath(args.rules))
    with open(os.path.join("test", "PoC.t.sol"), encoding="utf-8") as f:
        src = f.read()

    errors = builtin_errors(src)
    if errors:
        print("Compiling 1 files with Solc 0.8.23")
        print("Solc 0.8.23 finished in 12.34ms")
        print("Error: Compiler run failed:")
        for msg, line in errors:
            print(msg)
            print(f"  --> test/PoC.t.sol:{line}:1:")
        return 1

    phase = "build" if args.command == "build" else "test"
    if phase == "test":
        for rule in rules.get("build", []):
            if matches(rule, src) and int(rule.get("exit", 0)) != 0:
                return emit(rule, base)
    for rule in rules.get(phase, []):
        if matches(rule, src):
            return emit(rule, base)
    if phase == "build":
        print("Compiling 1 files with Solc 0.8.23")
        print("Compiler run successful!")
        return 0
    print("No tests match the provided pattern")
    return 1


if __name__ == "__main__":
    sys.exit(main())
