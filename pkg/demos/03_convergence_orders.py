"""Experimental orders of convergence of the Crank-Nicolson spline solver.

For the double-well problem with cubic splines the space error falls like
h^4 and the time error like dt^2.  This demo runs a short ladder; the full
ladders are run by `semiclassic run eoc_doublewell`.
"""
import tempfile

from semiclassic.harness import make_scenario, run_scenario
from semiclassic.harness import io

with tempfile.TemporaryDirectory() as out:
    s = make_scenario("eoc_doublewell", out=out, M_ladder=[35, 50, 70, 100], N_ladder=[80, 160, 320, 640])
    man = run_scenario(s)
    print(f"status: {man.status}")
    for row in io.read_csv(man.directory / "eoc_table.csv"):
        print("  " + ", ".join(f"{k}={v}" for k, v in row.items()))
    print(f"final space EOC {man.summary['eoc_space_final']:.3f} (cubic splines: 4)")
    print(f"final time EOC  {man.summary['eoc_time_final']:.3f} (Crank-Nicolson: 2)")
