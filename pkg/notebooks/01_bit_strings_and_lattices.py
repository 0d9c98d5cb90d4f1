"""
Bit strings and rational-cosine lattices
========================================

Builds the 1 x N and 2 x N bit strings for a small lattice and checks that
their averages are the lattice cosines, exactly.
"""
from fractions import Fraction

import numpy as np

from isetsim.bitstring import build_single, build_singlet, correlation_exact
from isetsim.geometry import allowed_cosines, nearest_allowed

N = 8

# the two lattices at N = 8
print("single:", [str(c) for c in allowed_cosines(N, "single")])
print("bell:  ", [str(c) for c in allowed_cosines(N, "bell")])

# one string per lattice index; its mean is the lattice cosine
for n in range(1, N // 2 + 1):
    s = build_single(N, n)
    print(n, s.to_text(), s.mean, s.cosine)

# singlet strings: row 1 is fixed, row 2 carries the correlation
for n in range(1, N // 2 + 1):
    pair = build_singlet(N, n)
    print(pair.to_text().replace("\n", " / "), "E =", correlation_exact(pair))

# a continuous cosine lands on the nearest lattice point
print(nearest_allowed(np.cos(np.radians(50)), 1024, "single"))

# exactness: sum of O1*O2 over columns, integer arithmetic only
big = build_singlet(2 ** 14, 3000)
prod = int(np.sum(big.row1.astype(np.int64) * big.row2))
assert Fraction(prod, 2 ** 14) == -(1 - Fraction(4 * 3000, 2 ** 14))
