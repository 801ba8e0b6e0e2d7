"""The reproducible experiment runner.

Writes a config file, runs it twice through the CLI entry point, and
verifies the artifact bytes agree (timestamps live in run_info.json,
which is the single file excluded from the comparison).
"""

import json
from pathlib import Path

from inflap import cli

out = Path("demo_out")
out.mkdir(exist_ok=True)

config = {
    "experiment": "decay",
    "seed": 11,
    "domain": {"kind": "interval", "a": -1.0, "b": 1.0},
    "grid": {"h": 0.1, "T": 3.0, "time_levels": 61},
    "data": {"name": "eigen-profile", "params": {"R": 1.0, "m": 1.0}},
    "solver": {"variable": "phi", "summarize_residual": False},
}
cfg_path = out / "decay.json"
cfg_path.write_text(json.dumps(config, indent=1))
print(f"wrote {cfg_path}")

code_a = cli.run(cfg_path, out_dir=out / "run_a", seed=11)
code_b = cli.run(cfg_path, out_dir=out / "run_b", seed=11)
print(f"exit codes: {code_a}, {code_b}")

same = True
for p in sorted((out / "run_a").rglob("*")):
    if not p.is_file() or p.name == "run_info.json":
        continue
    q = out / "run_b" / p.relative_to(out / "run_a")
    same = same and q.exists() and p.read_bytes() == q.read_bytes()
print("artifact bytes identical across reruns:", same)

manifest = json.loads((out / "run_a" / "manifest.json").read_text())
print("manifest hashes cover:", sorted(manifest["artifact_sha256"]))
rep = json.loads((out / "run_a" / "reports" / "decay_rate.json").read_text())
print(f"decay report: slope {rep['details']['slope']:.5f}, "
      f"target {rep['details']['target']:.5f}, passed {rep['passed']}")
