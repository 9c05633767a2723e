"""Classical trajectories through the singular saddle of V(x) = -|x|.

A particle started at x = 1 with wavenumber k = -1/(pi sqrt 2) climbs the cone
and arrives at the vertex with zero velocity at t = sqrt 2.  From there the
flow is not unique: it may stay, or leave to either side.  Neighbouring
initial data split apart by an O(1) distance, however close they start.
"""
import math

from semiclassic.core import cone_potential
from semiclassic.liouville import FlowSpec, trajectory

V = cone_potential(0.0, -1.0)
k_sep = -1 / (math.pi * math.sqrt(2))

x, k = trajectory(1.0, k_sep, math.sqrt(2), FlowSpec.closed_form(V))
print(f"at t = sqrt 2 the separatrix particle sits at (x, k) = ({float(x):.2e}, {float(k):.2e})")

t = math.sqrt(2) + 1
print(f"\ncontinuations one time unit after reaching the vertex (t = {t:.4f}):")
for policy in ("freeze", "left", "right"):
    xe, ke = trajectory(1.0, k_sep, t, FlowSpec.closed_form(V, policy))
    xr, _ = trajectory(1.0, k_sep, t, FlowSpec(V, policy=policy, step=1e-3))
    print(f"  {policy:>6}: x = {float(xe):+.6f}, k = {float(ke):+.6f}   (RK4: x = {float(xr):+.6f})")

print("\nsensitivity: launch at k_sep +/- delta, compare at t = 2 sqrt 2")
for delta in (1e-1, 1e-2, 1e-3, 1e-4, 1e-6):
    xa, _ = trajectory(1.0, k_sep + delta, 2 * math.sqrt(2), FlowSpec.closed_form(V))
    xb, _ = trajectory(1.0, k_sep - delta, 2 * math.sqrt(2), FlowSpec.closed_form(V))
    print(f"  delta = {delta:.0e}: separation {abs(float(xa - xb)):.4f}")
print("the separation does not shrink with delta: the Lyapunov exponent is infinite")
