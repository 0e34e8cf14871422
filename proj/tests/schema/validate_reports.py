"""Run every command of the CLI and validate each JSON document it emits
against schema/report.schema.json, error documents included."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def main() -> int:
    binary, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(Path(schema_path).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    failures = 0

    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        data = work / "data.csv"

        def run(name, args, expect_ok=True):
            nonlocal failures
            out = work / f"{name}.json"
            proc = subprocess.run([binary, *args, "--output", str(out)], capture_output=True, text=True)
            if expect_ok:
                if proc.returncode != 0:
                    print(f"FAIL {name}: exit {proc.returncode}: {proc.stderr.strip()}")
                    failures += 1
                    return
                doc = json.loads(out.read_text())
            else:
                if proc.returncode == 0:
                    print(f"FAIL {name}: expected a nonzero exit")
                    failures += 1
                    return
                doc = json.loads(proc.stderr.strip().splitlines()[-1])
            errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
            if errors:
                failures += 1
                for e in errors[:5]:
                    print(f"FAIL {name}: {'/'.join(map(str, e.path))}: {e.message}")
            else:
                print(f"ok   {name}")

        subprocess.run(
            [binary, "simulate", "--study", "dgp", "--n", "600", "--split-covariate", "--seed", "4",
             "--output", str(data)],
            check=True, capture_output=True)

        common = ["--input", str(data), "--covariate-cols", "g", "--bootstrap", "60"]
        run("analyze", ["analyze", *common, "--report", "prob-positive,quantile,iqr,cdf,bands",
                        "--tau", "0.25,0.5", "--v", "0,1.5", "--grid-size", "21"])
        run("analyze-variable", ["analyze", *common, "--group", "g=1", "--report", "cdf,bands",
                                 "--band", "variable", "--clip", "--grid-size", "21"])
        run("compare", ["compare", *common, "--group0", "g=0", "--group1", "g=1", "--grid-size", "21"])
        for study, extra in [
            ("table1", ["--reps", "5", "--bootstrap", "30"]),
            ("table2", ["--reps", "3", "--bootstrap", "30", "--n", "200"]),
            ("table3", ["--reps", "5", "--bootstrap", "30"]),
            ("table4", ["--reps", "3", "--bootstrap", "30", "--n", "200"]),
            ("figure1", ["--grid-size", "11"]),
            ("figure2", ["--reps", "30", "--n", "200"]),
            ("figure3", ["--reps", "30", "--n", "200"]),
            ("variance-check", ["--reps", "20", "--n", "200"]),
        ]:
            run(study, ["simulate", "--study", study, "--format", "json", *extra])
        run("oracle", ["oracle", "--tau", "0.5", "--v", "4", "--y", "2.25,6"])

        run("error-config", ["analyze", *common, "--alpha", "2"], expect_ok=False)
        run("error-ingest", ["analyze", "--input", str(work / "missing.csv")], expect_ok=False)
        run("error-compare", ["compare", *common, "--group0", "g=0", "--group1", "g<1"],
            expect_ok=False)

    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
