# %% [markdown]
# # Banded recurrence matrices
#
# A polynomial well V(x) = g_1 x^2 + ... + g_{2q+1} x^{4q+2} and the ansatz
# psi = exp(-P) * (h_0 x^p + ... + h_N x^{2N+p}) turn the Schroedinger
# equation into N+q linear rows in the N+1 unknowns h_n. The energy and
# the lower couplings g_0..g_{q-1} enter through one-diagonal shift matrices.

# %%
import numpy as np

from magyari import PotentialSpec, QuasiExactModel, build_system, solve_wkb_tail, tail_to_dominant

np.set_printoptions(precision=4, suppress=True)

# %% [markdown]
# Start from the dominant couplings of a decadic well and recover the
# exponent tail f_0..f_q.

# %%
spec = PotentialSpec((0.0, 0.0, 5.0, 4.0, 1.0))  # g_1..g_5, only g_3..g_5 matter here
tail = solve_wkb_tail(spec)
print("tail f_0..f_2:", tail.f)
print("back to g_3..g_5:", tail_to_dominant(tail))

# %% [markdown]
# Fixing N also fixes g_q. The matrix is 4 x 3 for q = N = 2, with one band
# below the subdiagonal whose entries fall linearly to zero at the
# would-be closing row.

# %%
model = QuasiExactModel.from_tail(tail.f, 2)
system = build_system(model)
print("g_q =", model.g_q)
print(system.H)
for xi, J in enumerate(system.shifts, start=1):
    print(f"J_{xi} ones at", np.argwhere(J).tolist())

# %% [markdown]
# q = 0 is the harmonic oscillator: an upper bidiagonal N x (N+1) matrix.

# %%
print(build_system(QuasiExactModel.from_tail((1.0,), 3)).H)
