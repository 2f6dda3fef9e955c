"""Build the puzzle of z^2 + i, then walk through pieces, tableau and areas.

    python3 demos/puzzle_tour.py [resolution]
"""
import sys

from yoccoz import build_puzzle, fixed_points
from yoccoz.measure import area_of_level, julia_area_upper_bound
from yoccoz.tableau import marked_grid, recurrence_verdict, tau_values

res = int(sys.argv[1]) if len(sys.argv) > 1 else 1024
param = fixed_points(1j)
print(f"c = i, alpha = {param.alpha:.6f}, multiplier |2 alpha| = {abs(param.alpha_multiplier):.4f}")

P = build_puzzle(param, 8, resolution=res)
print("alpha rays:", ", ".join(str(a) for a in P.ray_cycle))
print()
print("level  pieces  max diam   area")
for n in range(P.depth + 1):
    print(f"{n:5d}  {len(P.levels[n]):6d}  {P.diameter_stats(n)[0]:8.4f}  {area_of_level(P, n):8.4f}")

# the critical value -> -i -> i-1 -> -i is preperiodic, so the orbit only
# ever comes back to the top critical piece
grid = marked_grid(P)
print()
print("marked grid (row = level, column = orbit time):")
for row in grid.rows():
    print("  " + row)
print("tau:", tau_values(grid))
print("verdict:", recurrence_verdict(grid))

bound, slack = julia_area_upper_bound(P)
print(f"\narea of J inside G < 1 is at most {bound:.4f} (boundary pixels {slack:.4f})")
