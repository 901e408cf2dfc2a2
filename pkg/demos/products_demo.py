"""Regularized inner products of packets with different velocities.

The standard product of two packets is finite only for distinct momenta and
tends to pi^2 / |p - p'|. The tapered values and their eps -> 0 extrapolation
are printed next to that value.
"""
import numpy as np

from ndwave import products as Pr
from ndwave.fields import PacketParams
from ndwave.wavepacket import make_packet

for v1, v2 in [((0, 0, 0.3), (0, 0, -0.3)), ((0, 0, 0.3), (0, 0, 0.0)), ((0.2, 0, 0), (0, 0.3, 0.2))]:
    a, b = PacketParams(1.0, 1.0, v1), PacketParams(1.0, 1.0, v2)
    res = Pr.standard_product_packets(a, b)
    print(f"v = {v1}, v' = {v2}")
    for eps, val in res.raw:
        print(f"   eps = {eps:.4f}   {val.real:.6f}")
    print(f"   extrapolated {res.value.real:.6f} +- {res.error:.1e}, pi^2/|dp| = {res.analytic_ref.real:.6f}, "
          f"rel. error {res.rel_error:.1e}")

P = PacketParams(1.0, 1.0, (0.0, 0.0, 0.3))
psi, psi_m = make_packet(P), make_packet(PacketParams(1.0, 1.0, (0.0, 0.0, -0.3)))
for eps in (0.08, 0.04, 0.02):
    off = Pr.s_product(psi_m, psi, eps=eps).value
    coef = Pr.s_delta_coefficient(psi, eps=eps)
    print(f"S-product, eps = {eps}: |<psi_-v|psi_v>_S| / diagonal = {abs(off) / (coef.value.real * Pr.tapered_volume(eps)):.2e},"
          f" diagonal coefficient {coef.value.real:.10f} (p0/2 = {P.p0 / 2:.10f})")

try:
    Pr.standard_product(psi, psi)
except Exception as e:
    print("equal velocities:", type(e).__name__)
