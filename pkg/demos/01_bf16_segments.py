# %% [markdown]
# # BF16 words and their refresh segments
#
# A BF16 word keeps the top half of a float32: 1 sign bit, 8 exponent bits
# and 7 mantissa bits. The sign and exponent bits of every tensor stay on the
# standard refresh interval. Mantissa bits go to a relaxed segment.

# %%
import numpy as np

from segmented_edram import bf16

x = np.array([1.0, -2.5, 3.140625, 1e-3, 65504.0], dtype=np.float32)
words = bf16.from_float32(x)
for v, w in zip(x, words):
    s, e, m = bf16.decode(int(w))
    print(f"{v:>12g} -> 0x{int(w):04x}  sign={s} exp={e:3d} mantissa={m:3d}")

# %% [markdown]
# Splitting a word by the mantissa mask gives the part held in each segment.
# OR-ing the two halves back together restores the word exactly.

# %%
for w in words:
    relaxed, standard = bf16.apply_segment(int(w), bf16.MANTISSA)
    assert relaxed | standard == int(w)
    print(f"0x{int(w):04x} = relaxed 0x{relaxed:04x} | standard 0x{standard:04x}")

# %% [markdown]
# The worst thing a mantissa flip can do to a normal number is move it within
# a factor of two. This is the bound that makes relaxed mantissa refresh tolerable.

# %%
all_words = np.arange(1 << 16, dtype=np.uint32).astype(np.uint16)
normal = all_words[bf16.is_normal(all_words)]
base = bf16.to_float32(normal).astype(np.float64)
worst = max(
    np.abs(np.log2(np.abs(bf16.to_float32(normal ^ np.uint16(d)) / base))).max() for d in range(1, 128)
)
print(f"largest |log2(ratio)| over every normal word and mantissa flip: {worst:.4f} (< 1)")
