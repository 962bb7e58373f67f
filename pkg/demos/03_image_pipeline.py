# %% [markdown]
# # From a PPM file to class probabilities
#
# Decode, resize to 224x224 with half-pixel bilinear sampling, run the
# network, softmax. Weights are seeded random, so the probabilities are
# meaningless, but the plumbing is identical for trained weights stored in
# the same container.

# %%
import tempfile
from pathlib import Path

import numpy as np

from camnet.data import augment, load_image, split_dataset, write_ppm
from camnet.model import build_model, model_forward, softmax_classify
from camnet.weights_io import load_weights, save_weights

work = Path(tempfile.mkdtemp())
leaf = np.zeros((1, 3, 256, 256), np.float32)
leaf[:, 1] = np.linspace(0.2, 0.8, 256)[None, :]  # green gradient
write_ppm(work / "leaf.ppm", leaf)

x = load_image(work / "leaf.ppm")
print("input", x.shape, float(x.min()), float(x.max()))

# %%
g = build_model("small_ca", seed=42)
cls, probs = softmax_classify(model_forward(g, x))
print("predicted class", cls, "p =", probs[cls], "sum =", probs.sum())

# %% [markdown]
# Save and reload: logits are bit-identical.

# %%
save_weights(g, work / "small_ca.camn")
g2 = load_weights(work / "small_ca.camn", build_model("small_ca", seed=0))
print("bitwise equal logits:", np.array_equal(model_forward(g, x), model_forward(g2, x)))

# %% [markdown]
# Augmentation (shift + flip) and the 7:1:2 split used for evaluation.

# %%
aug = augment(x, seed=1, max_shift=0.1, flip_prob=0.5)
print("augmented changed pixels:", int((aug != x).sum()))
split = split_dataset([f"Apple___scab/{i}.ppm" for i in range(50)] + [f"Apple___healthy/{i}.ppm" for i in range(30)], seed=0)
print("train/val/test:", len(split.train), len(split.validation), len(split.test))
