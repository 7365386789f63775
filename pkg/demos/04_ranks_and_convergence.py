"""Final ranks and residual history over growing networks.

Ranks stay small as d grows, and the residual falls geometrically at a rate
close to gamma / (1 + gamma).
"""
from sanmarginal import experiments as ex

ranks = ex.run_rank_study([6, 8, 10], [4], tol=1e-4, eps=1e-8, seed=0, samples=5)
for row in ranks.means():
    print(f"d={row['d']:2d}: mean r_max {row['r_max']:.1f}, mean r_eff {row['r_eff']:.1f}, "
          f"{row['iterations']:.0f} iterations")

conv = ex.run_convergence_study([6, 8], 4, tol=1e-6, seed=0, samples=5)
for d in (6, 8):
    curves = conv.for_d(d)
    rho = sum(c.theoretical_rate for c in curves) / len(curves)
    print(f"d={d}: observed rate {conv.mean_rate(d):.4f}, gamma/(1+gamma) {rho:.4f}")
