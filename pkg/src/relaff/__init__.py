"""relaff: abundant conformal structures <-> relative affine hypersurfaces.

A numerical toolkit that verifies abundant-structure equations on coordinate
charts, builds the associated relative hypersurface data (G, C, A), checks the
integrability conditions, reconstructs immersions by integrating the flat
connection, applies conformal rescalings on both sides of the correspondence,
and classifies the resulting normalizations.
"""

__version__ = "0.1.0"
