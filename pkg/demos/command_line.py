"""
The command line, driven from a script
======================================

generate writes per-station CSVs plus a manifest under <out>/datasets,
train runs the federation and leaves every artifact in <out>, explain
attributes any CSV against any saved model snapshot, and report
summarises a finished run's metrics.  Each step below shells out
exactly as an operator would.
"""

import pathlib
import shutil
import subprocess
import sys

OUT = pathlib.Path("/tmp/xfedslice_demo")
shutil.rmtree(OUT, ignore_errors=True)
OUT.mkdir(parents=True)


def run(*args):
    cmd = [sys.executable, "-m", "xfedslice", *args]
    print("$ python3 -m xfedslice " + " ".join(args))
    out = subprocess.run(cmd, capture_output=True, text=True)
    if out.returncode != 0:
        print(out.stderr)
        raise SystemExit(out.returncode)
    print(out.stdout)
    return out.stdout


# A desk-profile config shrunk for the demo; same key = value format an
# operator would keep in version control.
config = OUT / "demo.cfg"
config.write_text(
    "clients = 4\n"
    "rounds = 5\n"
    "local_epochs = 8\n"
    "samples = 150\n"
    "seed = 1\n"
    f"out = {OUT / 'run'}\n"
)

run("generate", "--config", str(config))
run("train", "--config", str(config))

# The last round's embb snapshot, attributed over the station-0 CSV it
# never trained on directly (the split happened inside train).
run(
    "explain",
    "--model", str(OUT / "run" / "models" / "model_embb_4.xfsw"),
    "--data", str(OUT / "run" / "datasets" / "dataset_embb_k0.csv"),
    "--scaler", str(OUT / "run" / "scaler_embb.csv"),
    "--out", str(OUT / "attr_embb_k0.csv"),
    "--top-p", "0,33,66,100",
)

run("report", "--metrics", str(OUT / "run" / "metrics.csv"))
