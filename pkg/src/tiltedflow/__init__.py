"""tiltedflow: exact flows through tilted cylinders on the square lattice."""

__version__ = "0.1.0"

FIXED_POINT_SCALE = 1 << 20
