# %% [markdown]
# # Light-cone kernels and the retarded integral
#
# The field representation divides by `1 + omega.v`, which gets as small as
# `1/(2[p]^2)` when `omega` points against `p`.  The kernels are assembled
# from `1 - |v|` and `delta = 1 + cos(theta)` so that they stay accurate
# there.

# %%
import numpy as np

from rvm.lightcone import (BumpWave, KernelSample, QuadratureSpec, certify_bounds, kernel_ET,
                           manufactured_error)

# %% [markdown]
# At the exact antipode the naive denominator loses every digit once
# `|p|` is large.

# %%
for r in (1e2, 1e4, 1e8):
    smp = KernelSample.from_angles(np.array([[0.0, 0.0, r]]), np.zeros(1), np.zeros(1))
    naive = 1.0 - r / np.sqrt(1.0 + r * r)
    print(f"|p|={r:7.0e}  naive 1+omega.v={naive:.3e}  "
          f"|ET|={np.linalg.norm(kernel_ET(smp)[0]):.6e}")

# %% [markdown]
# Certify the kernel inequalities on a modest sample.  The ratio for
# `symblow` approaches one: that bound is sharp.

# %%
rep = certify_bounds(n_samples=50_000, p_max=1e3, seed=0, n_adversarial=5000)
for name, e in rep.entries.items():
    print(f"{name:>9s}  max ratio {e.max_ratio:.6f}   {e.description}")
print("identity error:", rep.identity_max_rel_error)

# %% [markdown]
# The retarded integral solves the wave equation with a source.  A
# manufactured solution gives the exact answer; the error falls quickly
# under refinement.

# %%
wave = BumpWave((0.3, 0.0, 0.0))
pts = (((0.0, 0.0, 0.0), 1.5), ((0.5, 0.2, 0.0), 2.0))
spec = QuadratureSpec()
for _ in range(3):
    print(spec, "relative error", f"{manufactured_error(wave, pts, spec):.3e}")
    spec = spec.refined()
