# %% [markdown]
# # Injecting retention faults into stored tensors
#
# Each element is selected with probability `rho`. A selected element is XOR-ed
# with a random 16-bit word restricted to the mask. Streams are counter-based,
# so the same seed always corrupts the same elements.

# %%
import numpy as np

from segmented_edram.bf16 import MANTISSA
from segmented_edram.faults import FaultSpec, LayerKind, binomial_band, changed_fraction, inject_by_layer, inject_tensor

rng = np.random.default_rng(0)
data = rng.integers(0, 1 << 16, 1_000_000, dtype=np.uint16)
out = inject_tensor(data, rho=0.25, mask=MANTISSA, seed=7)

# a selected element with an all-zero noise word stays unchanged
expected = 0.25 * (1 - 2**-7)
lo, hi = binomial_band(data.size, expected)
print(f"changed fraction {changed_fraction(data, out):.5f}, 4-sigma band [{lo:.5f}, {hi:.5f}]")
print("bits outside the mask touched:", int(np.count_nonzero((data ^ out) & ~np.uint16(MANTISSA))))

# %% [markdown]
# Same seed, same result. Slices of a stream can also be regenerated on their own.

# %%
again = inject_tensor(data, rho=0.25, mask=MANTISSA, seed=7)
print("reproducible:", np.array_equal(out, again))

# %% [markdown]
# Per-layer injection uses the KV rate for K/V projections and the QO rate
# elsewhere, with an independent stream for each layer kind.

# %%
spec = FaultSpec(rho_kv=1e-4, rho_qo=0.25, seed=3)
tensors = {kind: rng.integers(0, 1 << 16, 100_000, dtype=np.uint16) for kind in LayerKind}
faulty = inject_by_layer(tensors, spec)
for kind in LayerKind:
    print(f"{kind.value:>6}: {changed_fraction(tensors[kind], faulty[kind]):.5f}")
