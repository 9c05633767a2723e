"""Wigner, smoothed Wigner and Husimi transforms of a two-packet state.

The Wigner function of a superposition carries an oscillating interference
term with negative values between the packets.  Smoothing in phase space
damps it: the SWT with sigma = 2^(-1/2) is nearly positive and the Husimi
transform (sigma = 1) is nonnegative.  All three keep the total mass.
"""
import math

import numpy as np

from semiclassic.wigner import husimi, marginals, swt, wigner

h = 0.05


def packet(x, x0, p0, s=0.3):
    return (math.pi * s * s) ** -0.25 * np.exp(-(x - x0) ** 2 / (2 * s * s) + 1j * p0 * x / h)


def u(x):
    return (packet(x, -1.0, 0.6) + packet(x, 1.0, -0.6)) / math.sqrt(2)


dom = (-3.0, 3.0)
print(f"{'transform':>9}  {'mass':>8}  {'min / max':>10}")
for name, f in (("wigner", wigner(u, hbar=h, domain=dom)), ("swt", swt(u, hbar=h, domain=dom)),
                ("husimi", husimi(u, hbar=h, domain=dom))):
    print(f"{name:>9}  {f.total_mass():8.5f}  {f.values.min() / f.values.max():+10.2e}")

w = wigner(u, hbar=h, domain=dom)
rho_x, _ = marginals(w)
err = np.max(np.abs(rho_x - np.abs(u(w.x)) ** 2))
print(f"\nthe x-marginal of W equals |u|^2 to {err:.1e}")
print(f"||W||_L2 * sqrt(hbar) = {w.l2_norm() * math.sqrt(h):.6f} (unit-norm state: 1)")
