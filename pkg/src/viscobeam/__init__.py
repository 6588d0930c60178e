"""Viscoelastic thin-walled beam gradient flows.

Core pieces: 3D constitutive laws with exact derivatives (material),
effective quadratic forms and their reductions (quadforms), a conforming
1D beam discretization with energy and dissipation metric (beam1d), the
minimizing-movement flow engine (flow), and the 3D evaluation harness that
checks the thin-limit convergence statements (dimred).
"""

__version__ = "0.1.0"
