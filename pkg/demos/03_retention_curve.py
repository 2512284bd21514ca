# %% [markdown]
# # Retention: bit-error rate versus refresh interval
#
# Cell retention times are modelled as lognormal. The curve is pinned by two
# anchor points: 1e-4 at the relaxed interval and 4e-4 at the QO lifetime.

# %%
import numpy as np

from segmented_edram.retention import calibrate

curve = calibrate()
print(f"mu={curve.mu:.5f}  sigma={curve.sigma:.6f}")
for t in (45, 500, 1216, 1500, 2000, 5000):
    print(f"BER({t:>5} us) = {curve.ber_at(t):.3e}")

# %% [markdown]
# Inverting the curve gives the interval that meets a BER budget. A
# KV-only relaxation with a 2e-3 budget can stretch to about 1.97 ms.

# %%
for ber in (1e-9, 1e-4, 4e-4, 2e-3):
    print(f"BER {ber:.0e} -> {curve.interval_for_ber(ber):9.2f} us")

grid = np.linspace(0, 10_000, 1000)
print("monotone:", bool(np.all(np.diff([curve.ber_at(t) for t in grid]) >= 0)))
