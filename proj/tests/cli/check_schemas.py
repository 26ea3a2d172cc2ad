#!/usr/bin/env python3
"""Run the ttlnet binary and validate its JSON against docs/schemas.

usage: check_schemas.py TTLNET SCHEMA_DIR DATA_DIR
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def load(schema_dir, name):
    schema = json.loads((schema_dir / f"{name}.schema.json").read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def run(binary, *args, expect=0):
    proc = subprocess.run([binary, *args], capture_output=True, text=True, timeout=120)
    if proc.returncode != expect:
        raise AssertionError(f"{args}: exit {proc.returncode}, expected {expect}\n{proc.stderr}")
    return proc


def main():
    binary, schema_dir, data_dir = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    topology = load(schema_dir, "topology")
    analyze = load(schema_dir, "analyze")
    simulate = load(schema_dir, "simulate")
    table1 = load(schema_dir, "table1")
    error = load(schema_dir, "error")

    for cfg in sorted(data_dir.glob("*.json")):
        topology.validate(json.loads(cfg.read_text()))
        if cfg.name == "bad_split.json":
            proc = run(binary, "analyze", "--config", str(cfg), expect=2)
            error.validate(json.loads(proc.stderr))
            continue
        doc = json.loads(run(binary, "analyze", "--config", str(cfg)).stdout)
        analyze.validate(doc)
        simulate.validate(json.loads(run(binary, "simulate", "--config", str(cfg), "--events", "20000").stdout))

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "analysis.json"
        run(binary, "analyze", "--config", str(data_dir / "tree3.json"), "--out", str(out))
        doc = json.loads(run(binary, "simulate", "--config", str(data_dir / "tree3.json"),
                             "--events", "50000", "--against", str(out)).stdout)
        simulate.validate(doc)
        assert "comparison" in doc["results"][0]

    table1.validate(json.loads(run(binary, "table1", "--lambda", "0.5,2", "--mu", "1,3").stdout))
    proc = run(binary, "analyze", "--config", str(data_dir / "tree3.json"), "--budget", "4", expect=3)
    error.validate(json.loads(proc.stderr))
    print("all CLI documents match their schemas")


if __name__ == "__main__":
    main()
