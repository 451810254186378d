# %% [markdown]
# # The damped force and its sign condition
#
# The radiation reaction force adds a friction term `-M K p` to the Lorentz
# force and switches the electric field off for small momenta.  Here we look
# at the cutoff, the radial component of the force and the inequality that
# makes the pointwise envelope of the distribution function decrease.

# %%
import numpy as np

from rvm.force import (FieldSample, ForceParams, chi, condA_residual,
                       min_admissible_A, one_minus_chi, total_force)

params = ForceParams()  # M = 3, R0 = 1, R1 = 2, A = 5
print(params)
print("smallest admissible A:", min_admissible_A(params.M, params.R0))

# %% [markdown]
# The cutoff is a quintic smoothstep.  `one_minus_chi` is computed directly,
# so it is exactly zero below `R0` and never suffers from `1 - 0.999...`.

# %%
r = np.array([0.0, 0.5, 1.0, 1.25, 1.5, 1.75, 2.0, 3.0])
for ri, c, o in zip(r, chi(r), one_minus_chi(r)):
    print(f"r={ri:5.2f}  chi={c:.6f}  1-chi={o:.6f}")

# %% [markdown]
# The radial force is negative as soon as `M|p|` beats the electric
# contribution, even when the electric field pushes along `p`.

# %%
p_dir = np.array([0.0, 0.0, 1.0])
r = np.geomspace(1e-3, 1e2, 9)
p = r[:, None] * p_dir
fs = FieldSample(np.broadcast_to([0.0, 0.0, 2.0], p.shape), np.broadcast_to([1.0, 0.0, 0.0], p.shape))
F = total_force(fs, p, params)
for ri, Fr in zip(r, F @ p_dir):
    print(f"|p|={ri:9.3g}  F.p_hat={Fr: .4e}")

# %% [markdown]
# The sign condition `(3/|p| + A) F.p_hat <= div_p F` is what keeps
# `|p|^3 f exp(A|p|)` from growing.  Sample it on random fields and momenta.

# %%
rng = np.random.default_rng(1)
n = 200_000
d = rng.normal(size=(n, 3))
d /= np.linalg.norm(d, axis=1, keepdims=True)
p = np.exp(rng.uniform(np.log(1e-6), np.log(1e3), n))[:, None] * d
fs = FieldSample(rng.normal(size=(n, 3)) * 10, rng.normal(size=(n, 3)) * 10)
res = condA_residual(fs, p, params)
print("max residual, A = 5:", res.max())
print("max residual, A = 1:", condA_residual(fs, p, params, A=1.0).max())

# %% [markdown]
# Random fields rarely hit the worst case.  That is an electric field against
# `p` inside the cutoff region.  There `-chi'(|p|) E.p_hat` lowers the
# divergence, so the density can grow while `|p|` shrinks.  The admissible
# rate is sufficient with room to spare; only much smaller `A` fail.

# %%
r = np.linspace(1.0, 2.0, 11)[1:-1]
p = r[:, None] * p_dir
fs = FieldSample(-np.broadcast_to(p_dir, p.shape) * 5.0, np.zeros_like(p))
for A in (0.05, 0.5, params.A_min):
    res = condA_residual(fs, p, params, A=A)
    print(f"A={A:<5g} residuals:", np.array2string(res, precision=2, max_line_width=120))
