"""Step sizes and horizons for the three scalar error recursions.

For each recursion, pick valid constants, print the chosen step size,
contraction rate, predicted horizon and floor, then unroll the worst case
to confirm the horizon is met.
"""
from trontrain import recursion

bounds = [
    recursion.recurse_case1(b=1.0, c1=0.5, delta0=0.5, C=4.0, eps2=1e-4),
    recursion.recurse_case2(b=1.0, c1=2.0, c2=1.0, C=4.0, eps2=0.25),
    recursion.recurse_lemma6(b1=1.0, c1=2.0, c2=0.01, c3=0.005, delta1=4.0, eps2=0.1),
]

for b in bounds:
    seq = recursion.unroll_worst_case(b.alpha, b.beta, b.C, b.predicted_T, b.eps2)
    print(f"{b.lemma:7s} eta={b.eta:.4g} alpha={b.alpha:.4g} beta={b.beta:.3g} "
          f"T={b.predicted_T} floor={b.floor:.3g} D_T={seq.sequence[-1]:.3g} certified={seq.certified}")
