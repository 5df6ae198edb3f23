# %% [markdown]
# # Monte Carlo check of the closed form
#
# The simulator draws each decoding attempt, applies the threshold policy and
# integrates the age sawtooth exactly.

# %%
from harqage import (
    BscParams,
    ExplicitWaits,
    HarqScheme,
    SimConfig,
    Threshold,
    bsc_mds_probs,
    closed_form,
    epoch_moments,
    run,
)

for eps, m in ((0.1, 1), (0.4, 45)):
    scheme = HarqScheme(15, 20, m)
    probs = bsc_mds_probs(scheme, BscParams(eps))
    sol = closed_form(scheme, probs)
    mo = epoch_moments(scheme, probs)
    opt = run(scheme, probs, SimConfig(1_000_000, seed=1, policy=Threshold(sol.lambda_star)))
    zero = run(scheme, probs, SimConfig(1_000_000, seed=1, policy=ExplicitWaits(0.0, 0.0)))
    z = (opt.avg_aoi - sol.lambda_star) / opt.stderr_avg_aoi
    print(f"eps={eps} m={m}: analytic {sol.lambda_star:.3f}, simulated {opt.avg_aoi:.3f}"
          f" +- {opt.stderr_avg_aoi:.3f} (z={z:+.2f}); zero-wait simulated {zero.avg_aoi:.3f}")
    print(f"  E[X] {mo.mean_x:.3f} vs {opt.mean_x_hat:.3f};  P(Y=n) {mo.prob_y_n:.4f} vs {opt.prob_y_n_hat:.4f}")
