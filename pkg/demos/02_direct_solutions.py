# %% [markdown]
# # Direct solutions
#
# Closed forms exist for the harmonic oscillator, the sextic family and the
# single-term (N = 0) strings. Everything else goes to multistart Newton,
# and the closed forms double as its reference.

# %%
import numpy as np

from magyari import QuasiExactModel, WkbTail, build_system, solve_harmonic, solve_n0, solve_newton, solve_sextic
from magyari.verification import ode_residual, recurrence_residual_norm

# %%
for m in range(4):
    print(f"harmonic m={m}: E = {solve_harmonic(1.0, 0, m).energy}")

# %% [markdown]
# Sextic wells at N = 1 and f_0 = 0: V = x^6 - 7x^2 with E = +-2 sqrt 2.

# %%
for sol in solve_sextic(0.0, 1, 0):
    print(f"E = {sol.energy:+.12f}  h = {sol.wave.h}")

# %% [markdown]
# Newton reproduces the sextic spectrum at larger N.

# %%
model = QuasiExactModel.from_tail((0.3, 1.0), 6)
closed = [s.plet.g[0] for s in solve_sextic(0.3, 6, 0)]
newton = [s.plet.g[0] for s in solve_newton(build_system(model))]
print("max plet gap:", np.max(np.abs(np.array(closed) - newton)))

# %% [markdown]
# A genuinely two-component plet: the decadic toy, where energy and g_1
# are found together.

# %%
model = QuasiExactModel.from_tail((0.5, 2.0, 1.0), 2)
for sol in solve_newton(build_system(model)):
    print(
        f"plet = {np.round(sol.plet.g, 6)}  E = {sol.energy:.6f}  "
        f"rec = {recurrence_residual_norm(model, sol.plet, sol.wave):.1e}  "
        f"ode = {ode_residual(model, sol.plet, sol.wave):.1e}"
    )

# %%
print("N = 0, q = 3:", solve_n0(WkbTail((0.2, -0.1, 0.4, 1.0)), 1).plet.g)
