"""Numerical tolerances shared by the geometry and synthesis layers."""
import os

#: constraint satisfaction of LP solutions
TOL_LP = float(os.environ.get("OMEGAINV_LP_TOL", "1e-8"))
#: point membership
TOL_GEOM = 1e-7
#: emptiness depth of region-subtraction pieces
TOL_INCL = 1e-9

#: vertex enumeration / pairwise sum guard
VERTEX_CAP = 10**6
#: live pieces allowed during region subtraction
PIECE_CAP = 20000
