# %% [markdown]
# # Decoding success over a BSC with punctured MDS codes
#
# The first attempt decodes an n-bit punctured codeword, the second the full
# (n + m)-bit word.  Each succeeds when at most floor((N - l) / 2) bits flip.

# %%
from harqage import BscParams, HarqScheme, binomial_cdf, bsc_mds_probs

l, n = 15, 20
for eps in (0.1, 0.4):
    print(f"eps = {eps}")
    for m in range(0, 9):
        p = bsc_mds_probs(HarqScheme(l, n, m), BscParams(eps))
        print(f"  m={m:2d}  q1={p.q1:.6f}  q2={p.q2:.6f}")

# %% [markdown]
# Odd and even m behave differently: an IR bit that does not raise the
# correction radius only exposes one more bit to the channel, so q2 drops.
# That is why the optimal IR length keeps (n + m - l) even.

# %%
print(binomial_cdf(2, 20, 0.1), binomial_cdf(3, 21, 0.1), binomial_cdf(3, 22, 0.1))

# %% [markdown]
# The error-free word counts as a decoding success by default.  Passing
# `include_zero_errors=False` drops that term:

# %%
s = HarqScheme(l, n, 1)
print(bsc_mds_probs(s, BscParams(0.1)), bsc_mds_probs(s, BscParams(0.1), include_zero_errors=False))
