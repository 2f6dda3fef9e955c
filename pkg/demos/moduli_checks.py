"""Numerical moduli against the closed forms: round annuli, the degree rule
under z^2, Grotzsch splitting and the isoperimetric bound.

    python3 demos/moduli_checks.py
"""
import math

from yoccoz.moduli import AnnularRegion, covering_check, isoperimetric_check, solve_modulus

print("R/r      mu (pixels)   log(R/r)/2pi")
for ratio in (1.5, math.e, 4, 10):
    mu = solve_modulus(AnnularRegion.round(1 / ratio, 1.0, n=512))
    print(f"{ratio:6.3f}   {mu:.6f}      {math.log(ratio) / (2 * math.pi):.6f}")

mu_a, mu_b, ratio = covering_check(AnnularRegion.round(0.3, 0.9, n=512), 2)
print(f"\nz^2 image of 0.3 < |z| < 0.9: mu {mu_a:.5f} -> {mu_b:.5f}, ratio {ratio:.4f}")

whole = solve_modulus(AnnularRegion.round(0.2, 1.0, n=512))
inner = solve_modulus(AnnularRegion.round(0.2, 0.5, n=512, margin=2.04))
outer = solve_modulus(AnnularRegion.round(0.5, 1.0, n=512))
# equality for concentric circles; the pixel solver lands within a fraction of a percent
gap = (whole - inner - outer) / whole
print(f"split at 0.5: {whole:.5f} vs {inner:.5f} + {outer:.5f} (relative gap {gap:+.2%})")

r = isoperimetric_check(AnnularRegion.round(1 / math.e, 1.0, n=512))
print(f"area ratio {r.lhs:.4f} >= 1 + 4 pi mu = {r.rhs:.4f}: {r.holds}")
