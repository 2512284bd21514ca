# %% [markdown]
# # A toy attention layer running on faulty storage
#
# Q, K, V and O are held as BF16 words. In the faulty pass every word is
# read back through the fault injector: Q/O at the transient rate, K/V at
# the persistent rate. Only mantissa bits can flip.

# %%
import numpy as np

from segmented_edram import bf16
from segmented_edram.attention import AttentionWeights, attention_forward, reference_forward, run_with_faults
from segmented_edram.faults import FaultSpec

rng = np.random.default_rng(0)
x = bf16.from_float32(rng.standard_normal((64, 64)))
w = AttentionWeights.random(64, num_heads=4, seed=1)

clean = bf16.to_float32(attention_forward(x, w))
print("max |bf16 - float64 reference|:", float(np.abs(clean - reference_forward(x, w)).max()))

# %%
for rho_qo in (0.0, 0.01, 0.25):
    run = run_with_faults(x, w, FaultSpec(rho_kv=1e-4, rho_qo=rho_qo, seed=2))
    s = run.stats
    print(f"rho_qo={rho_qo:<5} changed outputs {s['output_changed_fraction']:.3f}  "
          f"max rel error {s['output_max_rel_error']:.4f}  cosine {s['output_cosine_similarity']:.6f}")
