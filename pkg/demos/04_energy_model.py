# %% [markdown]
# # Refresh power under three policies
#
# * baseline: every bit refreshed at 45 us
# * KV-only relaxation: all 16 bits of KV words at one relaxed interval
# * segmented: sign/exponent at 45 us, mantissa of KV words at 1216 us, mantissa
#   of transient QO words never refreshed
#
# Without leakage the segmented saving depends only on the KV fraction.

# %%
from fractions import Fraction

from segmented_edram import energy
from segmented_edram.energy import ArrayConstants, WorkspaceState

for kv in (0.0, 0.25, 0.5, 0.75, 1.0):
    print(f"kv fraction {kv:4.2f}: refresh reduction {energy.eta(WorkspaceState.from_ratio(kv)):.6f}")
print("exact at kv=1:", energy.eta_exact(Fraction(1), Fraction(45), Fraction(1216)))

# %% [markdown]
# With leakage the gain is capped. Calibrating the per-cycle refresh energy
# so that a half-KV workspace reaches 1.35x gives about 65 nJ.

# %%
e = energy.calibrate_refresh_energy(1.35, energy.EDRAM_LEAK_2MB_W, 45, 1216, 0.5)
c = ArrayConstants(energy.EDRAM_LEAK_2MB_W, e)
print(f"calibrated refresh energy: {e * 1e9:.2f} nJ")
t_kelle = 1968.947
for kv in (0.1, 0.5, 0.9):
    r = energy.evaluate(c, WorkspaceState.from_ratio(kv), 45, 1216, t_kelle)
    print(f"kv={kv}: gain segmented {r.gain_shield:.3f}, KV-only {r.gain_kelle:.3f}")

# %% [markdown]
# The KV-only policy relaxes sign/exponent bits too. Past a crossover KV
# fraction it saves more refresh power than the segmented scheme.

# %%
print(f"crossover KV fraction: {energy.kelle_crossover(45, 1216, t_kelle):.3f}")
