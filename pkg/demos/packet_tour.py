"""A short tour: build a packet, check its identities, apply the momentum operators.

Run with ``python3 demos/packet_tour.py``.
"""
import numpy as np

from ndwave import operators as O
from ndwave import transforms as T
from ndwave import wavepacket as W
from ndwave.fields import PacketParams
from ndwave.report import table

P = PacketParams(m=1.0, c=1.0, v=(0.0, 0.0, 0.3))
psi = W.make_packet(P)
print("packet terms:", psi)
print("value at the centre:", psi.limit_at_center(), "(expected p0 =", P.p0, ")")

# free equation, transport and the gauge-shifted Helmholtz form at a few times
reports = [W.schrodinger_residual(P, t=t) for t in (0.0, 1.0, 5.0)]
reports += [W.transport_residual(P, t=2.0), W.gauge_laplacian_residual(P, t=2.0)]
print(table(reports))

# the integral momentum operators have psi as a common eigenfunction; -i grad does not
pts = W.default_points(P, n=64)
base = psi.evaluate(pts)
for name, f in [("p3", O.apply_p_tilde(psi)[2]), ("p0", O.apply_p0_tilde(psi)), ("-i d_z", O.apply_pi(psi)[2])]:
    vals = f.evaluate(pts)
    lam = np.vdot(base, vals) / np.vdot(base, base)
    spread = np.linalg.norm(vals - lam * base) / np.linalg.norm(base)
    print(f"{name:7s} Rayleigh quotient {lam.real:+.12f}  eigen-residual {spread:.2e}")

# Hilbert pair acting on the packet, exactly
hp = T.hilbert_pm(+1, psi)
print("H+ psi at (0, 0, 1):", hp.evaluate(np.array([[0.0, 0.0, 1.0]]))[0])
