"""Free evolution of the packet and of a Gaussian on a periodic box.

Uses a smaller box than the default so it runs in a few seconds; pass
``--full`` for the L = 80, N = 256 configuration. Writes metrics.csv to the
current directory.
"""
import sys

from ndwave import propagate as Pg
from ndwave.report import table

if "--full" in sys.argv:
    cfg = Pg.PropagationConfig()
else:
    cfg = Pg.PropagationConfig(L=48.0, N=128, dt=0.1, steps=30, core_radius=6.0, snapshot_every=5)

res = Pg.propagate(cfg)
res.write_csv("metrics.csv")
print(f"{'t':>5s} {'shape_error':>12s} {'centroid_z':>11s}")
for m in res.metrics:
    print(f"{m.t:5.2f} {m.shape_error:12.3e} {m.centroid[2]:11.6f}")

reports = Pg.nondispersion_checks(res)
reports.append(Pg.dispersion_contrast(cfg, packet_result=res))
print(table(reports))
contrast = reports[-1].params
print("Gaussian width ratio:", [round(x, 4) for x in contrast["gaussian_width_ratio"]])
print("analytic ratio:      ", [round(x, 4) for x in contrast["analytic_ratio"]])
