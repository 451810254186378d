# %% [markdown]
# # Characteristics and the Lagrangian envelope
#
# Along a characteristic `x' = v`, `p' = F`, the density obeys
# `(log f)' = -div_p F`.  We trace a few characteristics in seeded smooth
# fields and watch the quantities that must not increase.

# %%
import numpy as np

from rvm.characteristics import CharacteristicState, envelope_series, trace
from rvm.fields import field_battery, uniform_B
from rvm.force import ForceParams

params = ForceParams()

# %% [markdown]
# In a pure magnetic field `v x B` is orthogonal to `p`, so only the friction
# acts radially: `|p(t)| = |p(0)| exp(-M K t)`.

# %%
init = CharacteristicState(np.zeros((1, 3)), np.array([[3.0, 0.0, 0.0]]), np.zeros(1))
tr = trace(init, uniform_B((0.0, 0.0, 0.5)), params, 2.0, 1e-3, record_every=500)
for t, r in zip(tr.t, tr.r[:, 0]):
    print(f"t={t:4.1f}  |p|={r:.10f}  exact={3.0 * np.exp(-1.5 * t):.10f}")

# %% [markdown]
# Now a battery: four random plane-wave fields, twenty characteristics each.
# The monitors are maxima over every integration step.

# %%
rng = np.random.default_rng(7)
fields = field_battery(np.random.SeedSequence(7).spawn(4), n_modes=3)
d = rng.normal(size=(4, 20, 3))
d /= np.linalg.norm(d, axis=-1, keepdims=True)
p0 = np.exp(rng.uniform(np.log(1e-3), np.log(10.0), (4, 20, 1))) * d
init = CharacteristicState(rng.uniform(-5, 5, (4, 20, 3)), p0, np.zeros((4, 20)))
tr = trace(init, fields, params, 3.0, 1e-3, record_every=100)
for key, val in tr.monitor.items():
    print(f"{key:>22s}: {val: .3e}")

# %% [markdown]
# `A|p| + 3 log|p| + log f` is the log of `|p|^3 f exp(A|p|)`.  It only
# decreases, so an envelope that holds at `t = 0` holds forever.

# %%
env = envelope_series(tr, params.A)
print("largest recorded increase:", np.diff(env, axis=0).max())
print("mean decrease over the run:", (env[0] - env[-1]).mean())
