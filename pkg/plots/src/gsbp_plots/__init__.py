"""Static diagnostic figures for gsbp CSV artifacts.

A read-only consumer of the delimited exports written by the gsbp CLI:
trajectory files (t, q_i, p_i, H, F, mass, ...) and split-audit files
('# key=value' header block, then t, G, Gstar, rate and slack columns).
No science numbers are computed here beyond the interpolation-chord
formula needed to draw the envelope overlay.
"""

__version__ = "0.1.0"

from .figures import FigureSpec, compute_envelope, render
from .readers import MissingColumnError, read_split_csv, read_trajectory_csv
