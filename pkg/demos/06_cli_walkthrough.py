"""The command-line interface end to end, writing into a temporary directory.

Equivalent shell commands:
    lbelastic solve run.yaml --out out --residual-log
    lbelastic solve out/fields.csv --out again      # re-run from the recorded header
    lbelastic converge --case trig --variant standard --eps-list 16,24,32
    lbelastic stability-map --nu-range=-0.6,0.9 --E-range 0.02,0.5 --resolution 4,4
    lbelastic error-map --nu-range 0.5,0.9 --E-range 0.05,0.2 --resolution 3,3

Run: python demos/06_cli_walkthrough.py
"""
import pathlib
import tempfile

from lbelastic.cli import main

tmp = pathlib.Path(tempfile.mkdtemp(prefix="lbelastic-demo-"))
cfg = tmp / "run.yaml"
cfg.write_text("""\
material: {nu: 0.8, E_tilde: 0.11}
grid: {nx: 20}
run: {mode: tolerance, tol: 1.0e-9, log_interval: 500}
case: {id: trig, variant: standard}
""")


def run(*argv):
    print("\n$ lbelastic " + " ".join(argv))
    code = main(list(argv))
    print(f"(exit {code})")


run("solve", str(cfg), "--out", str(tmp / "out"), "--residual-log")
print((tmp / "out" / "residual.csv").read_text().splitlines()[-3:])
run("solve", str(tmp / "out" / "fields.csv"), "--out", str(tmp / "again"))
run("converge", "--case", "trig", "--variant", "standard", "--eps-list", "16,24,32", "--out", str(tmp / "conv.csv"))
run("stability-map", "--nu-range=-0.6,0.9", "--E-range", "0.02,0.5", "--resolution", "4,4", "--out", str(tmp / "stab.csv"))
run("error-map", "--nu-range", "0.5,0.9", "--E-range", "0.05,0.2", "--resolution", "3,3", "--out", str(tmp / "err.csv"))

bad = tmp / "bad.yaml"
bad.write_text("material: {nu: 1.0, E_tilde: 0.11}\ngrid: {nx: 8}\n")
run("solve", str(bad))
print(f"\noutputs in {tmp}")
