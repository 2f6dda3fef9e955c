"""The airplane z^2 + c, c ~ -1.7549, has a superattracting 3-cycle through 0.
Its first-return map to a critical piece is a degree-2 polynomial-like map.

    python3 demos/airplane_renormalization.py
"""
from yoccoz import build_puzzle, fixed_points
from yoccoz.dynamics import airplane_parameter
from yoccoz.renorm import (build_first_return_plm, cantor_diagnostics, plm_orbit_check,
                           returns_to_critical_piece)
from yoccoz.tableau import marked_grid, recurrence_verdict

c = airplane_parameter()
print(f"airplane parameter c = {c!r}")
P = build_puzzle(fixed_points(c), 10)
print("verdict:", recurrence_verdict(marked_grid(P)))

g = build_first_return_plm(P)
print(f"\nV = V^{g.level}(0); returns of the critical orbit: {returns_to_critical_piece(P, g.level)}")
for p in g.pieces:
    print(f"  piece V^{p.level}, degree {p.degree}, return time {p.l}, area {p.mask.area:.5f}")
print("critical orbit of g stays in the domain for 100 steps:", plm_orbit_check(g, 100))

# a single degree-2 branch: K(g) is connected, so the preimages do not shrink to points
d = cantor_diagnostics(g, 4)
print("\nk   max diam   area of g^-k(V)")
for k, (dm, a) in enumerate(zip(d.max_diameter, d.area)):
    print(f"{k}   {dm:.4f}     {a:.5f}")
