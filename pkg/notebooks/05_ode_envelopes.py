# %% [markdown]
# # The doubly logarithmic system
#
# The gradient estimates close through
# `W' = C((log W) W + (log W)(log Z) Z)`, `Z' = C((log Z) Z + W)`.
# Integrated as an equality, this is the worst case.  It grows like a double
# exponential but never blows up.

# %%
import numpy as np

from rvm.ode_envelopes import (LogSysParams, blowup_ode, envelope_margin, integrate_WZ,
                               log_double_exp_envelope)

prm = LogSysParams(C=1.0, t_end=3.0)
ser = integrate_WZ(prm, 1e-3)
print("log W(3) =", ser.log_W[-1])
# at C = 2 the values no longer fit in a double; the state is kept in logs
print("C = 2 leaves the double range at t =", integrate_WZ(LogSysParams(C=2.0), 1e-3).overflow_time)

# %% [markdown]
# Compare `log(W + Z)` with two comparison envelopes.  With one log factor
# the envelope is overtaken early.  Counting both logarithmic terms,
# `Wbar' = C(log W + log Z + 1) Wbar <= C(2 log Wbar + 1) Wbar`, restores
# domination.

# %%
for t in (0.25, 0.5, 1.0, 2.0, 3.0):
    i = int(round(t / 1e-3))
    print(f"t={t:4.2f}  log(W+Z)={ser.log_sum[i]:12.4f}  "
          f"k=1: {log_double_exp_envelope(prm, t, 1.0):12.4f}  "
          f"k=2: {log_double_exp_envelope(prm, t, 2.0):12.4f}")
print("min margin k=1:", envelope_margin(ser, prm, 1.0, "sum"))
print("min margin k=2:", envelope_margin(ser, prm, 2.0, "wbar"))

# %% [markdown]
# Squaring the logarithm instead gives `Y' = Y (log Y)^2`, which blows up at
# `t = 1/log Y0`.

# %%
for u0 in (1.0, 2.0, 4.0):
    res = blowup_ode(log_Y0=u0)
    print(f"log Y0={u0}:  t*={res.blowup_time:.6f}  exact={1 / u0:.6f}")
