# %% [markdown]
# # Large-p perturbation of the decadic toy
#
# After rescaling with sigma = p^(-1/3) the zero-order problem is a fixed
# 4 x 3 integer matrix with two real states. Each order of the series
# costs a 2 x 2 solve for the plet and a 2 x 2 restricted solve for the wave.

# %%
import numpy as np

from magyari import build_projectors, evaluate_series, recover_physical, rescale_decadic, run, solve_zero_order
from magyari.direct import newton_roots

np.set_printoptions(precision=6, suppress=True)

# %%
exp = rescale_decadic(0.0, 1.0, 1e4)
problem = exp.stack
states = solve_zero_order(problem)
for z in states:
    print("zero order", z.plet0.g, z.wave0.h)
    print("  left null basis rows:\n", z.left_basis)
    print("  reductions:", [(r.indices, r.rho.round(6).tolist()) for r in z.reductions])

# %% [markdown]
# First corrections of the (1, 1) state and the coupling matrix F.

# %%
z = next(s for s in states if s.plet0.g[0] > 0)
series = run(problem, z, 3)
print("F =\n", series.F)
for k, (plet, wave) in enumerate(zip(series.plets, series.waves), start=1):
    print(f"order {k}: plet {plet}, wave {wave}")
print("projector condition:", build_projectors(z).condition)

# %% [markdown]
# Partial sums against Newton at the same sigma, then back to physical
# couplings.

# %%
ref = min((g for g, *_ in newton_roots(problem.at(exp.sigma), problem.shifts)),
          key=lambda g: np.linalg.norm(g - np.asarray(z.plet0)))
for K in range(4):
    plet, wave = evaluate_series(series, z, exp.sigma, K)
    print(f"K={K}: error {np.max(np.abs(np.asarray(plet) - ref)):.3e}  (sigma^{K + 1} = {exp.sigma ** (K + 1):.3e})")
phys, wave = recover_physical(exp, *evaluate_series(series, z, exp.sigma))
print("physical E =", phys.energy, " g_1 =", phys.g[1])
