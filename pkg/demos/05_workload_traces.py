# %% [markdown]
# # Prefill/decode traces and the cross-scenario table
#
# Step 1 holds the whole prompt. Each decode step adds one token of K/V,
# so the KV share of the workspace grows and the segmented saving drifts
# towards its full-KV value.

# %%
from segmented_edram.energy import destiny_constants
from segmented_edram.workload import (
    DEFAULT_SCENARIOS,
    LIFECYCLE_TRACE,
    RefreshIntervals,
    load_models,
    run_trace,
    scenario_table,
    series,
)

models = load_models()
constants = destiny_constants()
intervals = RefreshIntervals()
trace = run_trace(models["qwen3-8b"], LIFECYCLE_TRACE, constants, intervals)
kv = series(trace, "kv_ratio")
eta = series(trace, "eta_closed_form")
for i in (0, 1, 64, 128, 256):
    print(f"step {i + 1:>3}: kv fraction {kv[i]:.3f}  reduction {eta[i]:.4f}")

# %% [markdown]
# Whole-trace reductions, reported three ways.

# %%
for k in ("eta_refresh_only", "eta_leakage_inclusive", "eta_lifecycle_weighted"):
    print(f"{k:>24}: {trace.aggregate[k]:.4f}")
print("in headline band:", trace.aggregate["reductions_in_headline_band"])

# %%
rows = scenario_table({"qwen3-8b": models["qwen3-8b"]}, DEFAULT_SCENARIOS, constants, intervals)
for r in rows:
    print(f"{r['scenario']:>13} ({r['prefill_tokens']}/{r['decode_tokens']}): "
          f"segmented {r['gain_shield']:.3f}x  KV-only {r['gain_kelle']:.3f}x")
