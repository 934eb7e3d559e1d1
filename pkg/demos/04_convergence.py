# %% [markdown]
# # Empirical convergence orders
#
# Truncating the series after order K should leave an error of order
# sigma^(K+1). A log-log fit over three sigma values shows it.

# %%
from magyari import convergence_report, rescale_decadic, run, solve_zero_order

problem = rescale_decadic(1.0, 1.0, 1e3).stack
sigmas = [0.2, 0.1, 0.05]

# %%
for z in solve_zero_order(problem):
    report = convergence_report(problem, z, run(problem, z, 3), 3, sigmas)
    print("state", z.label)
    for row in report.rows():
        errs = "  ".join(f"{e:.2e}" for e in row["errors"])
        print(f"  K={row['K']}  errors {errs}  slope {row['slope']:.2f}")
