"""Non-dispersive Schrodinger wavepackets and the radial operator calculus around them.

Submodules: fields (closed-form and sampled fields), transforms (ray Hilbert,
Fourier and dilation transforms), wavepacket (packets and their evolution
residuals), operators (operator expressions), verify (check suites),
products (S-product and standard product), propagate (free FFT evolution),
cli (the ``ndwave`` command).
"""
from .errors import NdwaveError
from .fields import CartesianField, ClosedFormField, PacketParams, RayField, RayGrid, sample
from .report import CheckReport, table
from .wavepacket import make_packet

__version__ = "0.1.0"

__all__ = [
    "NdwaveError", "CartesianField", "ClosedFormField", "PacketParams", "RayField", "RayGrid", "sample",
    "CheckReport", "table", "make_packet", "__version__",
]
