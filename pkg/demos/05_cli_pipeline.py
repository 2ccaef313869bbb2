# The same pipeline through the command line, one subcommand per step.
# Every step communicates through files, and each output gets a manifest.
import json
import subprocess
import sys
import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp())


def csrecon(*args):
    cmd = [sys.executable, "-m", "csrecon.cli", *map(str, args)]
    print("$ csrecon", " ".join(map(str, args)))
    done = subprocess.run(cmd, capture_output=True, text=True)
    if done.stdout:
        print(done.stdout.rstrip())
    return done.returncode


csrecon("gen-filters", "--out", work / "filters.csv")
csrecon("simulate", "--scene", "synthetic:height=48,width=48,regions=6,seed=4",
        "--filters", work / "filters.csv", "--out", work / "clean.scub")
csrecon("add-noise", "--in", work / "clean.scub", "--level", 10, "--seed", 4,
        "--out", work / "noisy.scub")
csrecon("estimate-noise", "--in", work / "noisy.scub")
for method in ("wiener", "csr"):
    csrecon("reconstruct", "--in", work / "noisy.scub", "--filters", work / "clean.scub.filters.csv",
            "--method", method, "--threads", 1, "--out", work / f"{method}.scub")
    csrecon("evaluate", "--reference", work / "clean.scub.scene.scub",
            "--estimate", work / f"{method}.scub", "--report", work / f"{method}.txt")
csrecon("render", "--in", work / "csr.scub", "--band", 20, "--out", work / "csr20.pgm")

manifest = json.loads((work / "csr.scub.manifest.json").read_text())
print("csr manifest parameters:", manifest["parameters"])

# errors: bad flag value is a usage error (2), a missing file is a file error (1)
print("exit code, 50 channels on 49 bands:",
      csrecon("gen-filters", "--channels", 50, "--out", work / "x.csv"))
print("exit code, missing input:", csrecon("estimate-noise", "--in", work / "missing.scub"))
