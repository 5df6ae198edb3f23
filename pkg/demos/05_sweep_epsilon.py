# %% [markdown]
# # Optimal age versus crossover probability
#
# Both n and m are optimised for every (l, eps).  The grid is
# n in [l, l + 60], m in [0, 200].

# %%
from harqage import sweep_epsilon

eps_grid = [round(0.05 * k, 2) for k in range(1, 10)]
rows = sweep_epsilon([10, 15, 20], eps_grid)

print("eps   " + "".join(f"  l={l:<8d}" for l in (10, 15, 20)))
table = {(r.l, r.eps): r for r in rows}
for eps in eps_grid:
    cells = "".join(f"  {table[(l, eps)].rho_star:9.3f} " for l in (10, 15, 20))
    print(f"{eps:4.2f} {cells}")

# %% [markdown]
# The age grows with eps, faster as eps approaches 1/2, and faster for longer
# messages.  To plot, write the CSV with `harqage sweep --csv sweep.csv` and
# load it with any plotting tool.
