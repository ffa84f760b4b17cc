#!/usr/bin/env python3
"""End-to-end checks of the cfgeq command line: exit codes, output formats, schema."""

import json
import os
import subprocess
import sys
import tempfile

import jsonschema

CLI, DATA, SCHEMA = sys.argv[1:4]
failures = []


def run(*args):
    return subprocess.run([CLI, *args], capture_output=True, text=True, timeout=120)


def data(name):
    return os.path.join(DATA, name + ".cfg")


def check(name, ok, detail=""):
    print(("ok   " if ok else "FAIL ") + name + (": " + detail if detail and not ok else ""))
    if not ok:
        failures.append(name)


r = run("compare", data("g8"), data("g9"))
check("equivalent pair exits 0", r.returncode == 0, r.stdout + r.stderr)

r = run("compare", data("g8"), data("g10"))
check("different pair exits 1", r.returncode == 1, r.stdout + r.stderr)
check("different pair names the word", "cbabd" in r.stdout, r.stdout)

r = run("compare", data("g8"))
check("missing argument exits 64", r.returncode == 64, r.stderr)

r = run("compare", data("g8"), "--dims", "2", "--bogus")
check("unknown option exits 64", r.returncode == 64, r.stderr)

r = run("compare", data("g8"), os.path.join(DATA, "no_such_file.cfg"))
check("missing file is a usage or input error", r.returncode in (4, 64), r.stderr)

r = run("compare", data("g8"), "S -> A ; A -> ")
check("syntax error exits 4", r.returncode == 4, r.stderr)

r = run("enumerate", data("intro"), "--max-len", "5")
lines = r.stdout.strip().split("\n")
check("enumerate lists five words", r.returncode == 0 and len(lines) == 5, r.stdout)
check("enumerate ends with the longest word", lines[-1] == "acccb\t1", r.stdout)

r = run("distinguish", "--left", "aab,bab", "--right", "aba,bba")
check("condition P reported", "condition P: satisfied" in r.stdout, r.stdout)

r = run("compare", data("g8"), data("g10"), "--json", "--seed", "42")
check("JSON compare exits 1", r.returncode == 1, r.stderr)
doc = json.loads(r.stdout)
with open(SCHEMA) as f:
    schema = json.load(f)
try:
    jsonschema.validate(doc, schema)
    check("verdict validates against the schema", True)
except jsonschema.ValidationError as e:
    check("verdict validates against the schema", False, e.message)
check("JSON outcome", doc["outcome"] == "Different" and doc["exit_code"] == 1)
check("timestamp present by default", "timestamp" in doc and "wall_time_ms" in doc)

a = run("compare", data("g8"), data("g10"), "--json", "--seed", "42", "--no-timestamp")
b = run("compare", data("g8"), data("g10"), "--json", "--seed", "42", "--no-timestamp", "--threads", "1")
check("JSON output is byte-identical", a.stdout == b.stdout and a.stdout != "")
check("no timestamp when disabled", "timestamp" not in json.loads(a.stdout))

with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "verdict.json")
    with open(path, "w") as f:
        f.write(r.stdout)
    rep = run("replay", path, data("g8"), data("g10"))
    check("replay reproduces the verdict", rep.returncode == 0 and "replay: identical" in rep.stdout,
          rep.stdout + rep.stderr)
    rep = run("replay", path, data("g8"), data("g9"))
    check("replay rejects other grammars", rep.returncode == 4, rep.stdout + rep.stderr)

for name in ("g8", "intro", "big1"):
    r = run("classify", data(name), "--json")
    check("classify " + name, r.returncode == 0 and json.loads(r.stdout) is not None, r.stderr)

r = run("solve", data("intro"), "--scalar", "0.05", "--json")
check("solve at a scalar", r.returncode == 0 and json.loads(r.stdout)["status"] == "Converged", r.stdout + r.stderr)

print("%d failure(s)" % len(failures))
sys.exit(1 if failures else 0)
