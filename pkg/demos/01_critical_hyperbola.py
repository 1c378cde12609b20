"""Tour of the critical-hyperbola parameter algebra.

The curve N/(p+1) + N/(q+1) = N-2 separates existence from nonexistence
for the Dirichlet system -Du = v^p, -Dv = u^q.  Everything downstream is
driven by the defect eps and the regime of p against N/(N-2).
"""

from nearcrit.hyperbola import (classify_regime, critical_q, qeps_from_eps,
                                system_params)

print("critical partners q(p) in N = 3:")
for p in (2.5, 3.0, 4.0, 5.0):
    print(f"  p = {p:4.2f} -> q = {critical_q(p, 3):8.4f}"
          f"   regime: {classify_regime(p, 3)}")

print("\nthe same curve at N = 5 includes the biharmonic point p = 1:")
for p in (1.0, 5.0 / 3.0, 7.0 / 3.0):
    print(f"  p = {p:6.4f} -> q = {critical_q(p, 5):8.4f}"
          f"   regime: {classify_regime(p, 5)}")

print("\nsubcritical exponents q_eps at p = 5, N = 3:")
for eps in (0.4, 0.2, 0.1, 0.05, 0.0):
    print(f"  eps = {eps:5.2f} -> q_eps = {qeps_from_eps(5, 3, eps):8.5f}")

sp = system_params(2.5, 3, 1.0 / 7.0)
print(f"\nfull parameter pack at (p, N, eps) = (2.5, 3, 1/7):")
for k, v in sp.as_dict().items():
    print(f"  {k:10s} = {v}")
