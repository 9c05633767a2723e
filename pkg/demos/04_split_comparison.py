"""Quantum against classical observables for a packet split by a saddle.

A Gaussian WKB packet hits the top of V = (4 - |x|)/8 just below the
separatrix energy.  The packet splits in two; no interference occurs, so the
particle method started from the smoothed Wigner transform should reproduce
the quantum observables.  hbar = 0.05 keeps the run to a few minutes; the
acceptance suite uses hbar = 0.01.
"""
import tempfile

from semiclassic.harness import io, make_scenario, run_scenario

with tempfile.TemporaryDirectory() as out:
    man = run_scenario(make_scenario("split_noninterference", out=out, hbar=0.05, m=[0.9186, 1.0],
                                     tol=2e-2))
    print(f"status: {man.status}")
    for f in man.failures:
        print("  " + f)
    for row in io.read_csv(man.directory / "correlation.csv"):
        print(f"  {row['case']} {row['stage']:>5}: correlation {float(row['correlation']):.5f}"
              f" over {row['n']} observables")
    for row in io.read_csv(man.directory / "partition.csv"):
        total = sum(float(row[k]) for k in ("w_plus", "w_minus", "w_zero"))
        print(f"  m = {row['m']}: classical mass heading right {float(row['w_plus']) / total:.3f},"
              f" quantum right mass {float(row['quantum_right_mass']):.3f}")
