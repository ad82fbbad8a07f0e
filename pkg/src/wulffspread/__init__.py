"""Spreading sets of reaction-diffusion equations in periodic and multistable media.

Modules: ``model`` (coefficients, reactions, catalog), ``eigensolver``
(periodic principal eigenvalue and KPP critical speed), ``wulff``
(Freidlin-Gärtner radial function and Wulff shape), ``pdesim`` (monotone
explicit solver and front diagnostics), ``waves`` (1D travelling waves and bump
subsolutions), ``terrace`` (propagating terraces) and ``cli``.
"""

__version__ = "0.1.0"
