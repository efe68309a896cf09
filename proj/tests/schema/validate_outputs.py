"""Run every dpp-lab subcommand that writes JSON and validate the output against schemas/."""

import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource


def main(binary: str, schema_dir: str) -> int:
    schemas = pathlib.Path(schema_dir)
    registry = Registry()
    loaded = {}
    for path in schemas.glob("*.json"):
        doc = json.loads(path.read_text())
        loaded[path.name] = doc
        registry = registry.with_resource(path.name, Resource.from_contents(doc))

    def check(doc_path: pathlib.Path, schema_name: str) -> None:
        validator = jsonschema.Draft202012Validator(loaded[schema_name], registry=registry)
        validator.validate(json.loads(doc_path.read_text()))
        print(f"ok {doc_path.name} against {schema_name}")

    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)
        cfg = out / "c.yaml"
        cfg.write_text("problem: server-scheduling-3x2\nV: 10\nT: 400\nbatch:\n  paths: 30\n")
        pooled = out / "p.yaml"
        pooled.write_text("problem: server-scheduling-3x2-pooled\nV: 10\nT: 400\nbatch:\n  paths: 30\n")

        subprocess.run([binary, "simulate", "--config", cfg, "--out", out], check=True, capture_output=True)
        check(out / "summary.json", "summary.schema.json")
        subprocess.run([binary, "bounds", "--config", cfg, "--out", out], check=True, capture_output=True)
        check(out / "bounds.json", "bounds.schema.json")
        subprocess.run([binary, "verify", "--config", pooled, "--out", out], check=True, capture_output=True)
        check(out / "batch_summary.json", "batch_summary.schema.json")
        chaos = subprocess.run([binary, "verify", "--config", cfg, "--out", out, "--paths", "2",
                                "--chaos", "skip-minimization"], capture_output=True)
        if chaos.returncode != 2:
            print(f"expected exit 2 under chaos, got {chaos.returncode}")
            return 1
        check(out / "batch_summary.json", "batch_summary.schema.json")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1], sys.argv[2]))
