"""Walk through the symbolic derivation, from the score equation to the quantiles.

Run with ``python3 demos/derive_expansion.py``.  Everything printed here is
exact rational arithmetic; nothing is rounded.
"""
from mlexpand.edgeworth import symbolic_expansion
from mlexpand.mle_expansion import derive_Sn, residual_check, solve_order_by_order
from mlexpand.moments import xi_expectation

# The estimator is sought as theta = B1 eps + B2 eps^2 + ... with eps = n^(-1/2).
# Plugging that into the Taylor-expanded score and zeroing each power of eps
# gives the B_k one at a time.
sol = solve_order_by_order()
for name, b in sol.as_dict().items():
    print(f"{name} = {b}")

# Plugging the solution back in must leave nothing through eps^4.
print("\nscore residual after substitution:", residual_check(sol))

# sqrt(n) * theta_hat, truncated at eps^3
sn = derive_Sn()
print("\nS_n =")
print(sn)

# Moments of the xi sums reduce to the eta basis once the integration by
# parts identities are applied.  The eighth moment of xi1 is a good stress case.
print("\nE xi1^8 =")
print(xi_expectation("xi1^8"))

sym = symbolic_expansion()
print("\ncumulant corrections")
for m in range(1, 6):
    print(f"kappa{m}:", sym.cumulants.kappa(m))

print("\nEdgeworth polynomials")
for j, p in enumerate(sym.polys.p, 1):
    print(f"p{j}(x) =", p)

print("\nCornish-Fisher coefficients")
for name, c in zip("ABC", sym.cf):
    print(f"{name} =", c)
