"""Numerical constants fixed by exhaustive computation.

C0: universal constant with |g| >= C0 * sqrt(vol(g)) for every lattice circuit.
``geometry.scan_c0(24)`` finds the minimum of |g| / sqrt(vol) over all circuits
with vol <= 24 to be 2, attained by the unit square (|g| = 4, vol = 4).  It
holds for all circuits since vol <= (|g|/4 + 1)^2.
"""

C0 = 2.0
C0_SCAN_MAX_VOL = 24
