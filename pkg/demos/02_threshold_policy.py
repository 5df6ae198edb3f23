# %% [markdown]
# # Optimal waiting: the parametric function p(lambda)
#
# For a fixed design the optimal average age is the root of the decreasing
# function p(lambda) = min_w E[Q] - lambda E[L].  Its minimiser is a threshold
# policy, and the root has a closed form.

# %%
import numpy as np

from harqage import (
    BscParams,
    HarqScheme,
    bsc_mds_probs,
    closed_form,
    epoch_moments,
    optimal_waits,
    p_of_lambda,
    solve_lambda_bisection,
)

for eps, m in ((0.1, 1), (0.4, 45)):
    scheme = HarqScheme(15, 20, m)
    probs = bsc_mds_probs(scheme, BscParams(eps))
    mo = epoch_moments(scheme, probs)
    sol = closed_form(scheme, probs)
    print(f"eps={eps} m={m}: q1={probs.q1:.4f} q2={probs.q2:.4f} E[X]={mo.mean_x:.3f}")
    print(f"  region boundaries: E[X]+n={mo.mean_x + 20:.3f}, E[X]+n+m={mo.mean_x + 20 + m:.3f}")
    print(f"  closed form lambda*={sol.lambda_star:.4f} ({sol.region}), waits={sol.policy}")
    print(f"  bisection   lambda*={solve_lambda_bisection(scheme, probs):.4f}")

    # %%
    grid = np.linspace(mo.mean_x, sol.lambda_star * 1.3, 7)
    for lam in grid:
        w = optimal_waits(lam, scheme, probs)
        print(f"    lam={lam:8.3f}  p={p_of_lambda(lam, scheme, probs):12.3f}  w1={w.w1:7.3f} w2={w.w2:7.3f}")

# %% [markdown]
# On the good channel the root falls in R1 and zero waiting is optimal.  On
# the bad channel with m = 45 the root falls in R2: after a first-attempt
# success the age is low, so the transmitter idles for w1 > 0 before sampling.
