# %% [markdown]
# # Choosing the IR length by grid search
#
# Fix l = 15, n = 20 and scan m.

# %%
from harqage import GridSpec, grid_search

for eps, m_max in ((0.1, 100), (0.4, 200)):
    res = grid_search(GridSpec(15, (20, 20), (0, m_max), eps))
    print(f"eps={eps}: best m={res.best_m}, lambda*={res.rho_star:.4f} ({res.best.region}),"
          f" best R1={res.lambda_bar_star:.3f}, best R2={res.lambda_underbar_star:.3f}")

# %% [markdown]
# At eps = 0.4 the m = 45 cell gives lambda = 174.97, but odd m keep
# improving up to m = 53 (172.97).  m = 45 is the grid optimum only if the scan
# stops at m = 45 or 46:

# %%
for m_max in (44, 45, 46, 47, 53, 200):
    res = grid_search(GridSpec(15, (20, 20), (0, m_max), 0.4))
    print(f"  m <= {m_max:3d}: best m={res.best_m}, lambda*={res.rho_star:.4f}")

# %% [markdown]
# Letting n vary as well:

# %%
res = grid_search(GridSpec.default(15, 0.4))
print(f"free n: n={res.best_n}, m={res.best_m}, lambda*={res.rho_star:.4f} ({res.best.region})")
