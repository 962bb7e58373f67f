# %% [markdown]
# # SE versus Coordinate Attention on a toy feature map
#
# SE produces one gate per channel. CA produces a height gate and a width
# gate, so its rescaling can vary across the image.

# %%
import numpy as np

from camnet.attention import CAParams, SEParams, ca_forward, ca_gates, se_forward, se_gate
from camnet.nn_ops import ConvWeights, directional_avg_pool, global_avg_pool

rng = np.random.default_rng(0)
c, h, w = 8, 6, 9
x = rng.uniform(0, 1, (1, c, h, w)).astype(np.float32)
x[:, :, 1:3, 5:8] += 4.0  # a bright blob

# %% [markdown]
# Strip pooling: mean across width per row, and across height per column.
# Averaging either strip again gives the global mean.

# %%
zh, zw, z = directional_avg_pool(x, "h"), directional_avg_pool(x, "w"), global_avg_pool(x)
print("row means ch0:", np.round(zh[0, 0, :, 0], 2))
print("col means ch0:", np.round(zw[0, 0, 0], 2))
print("global ch0:", z[0, 0, 0, 0], "=", zh[0, 0].mean(), "=", zw[0, 0].mean())

# %%
se = SEParams(rng.normal(0, .5, (2, c)).astype(np.float32), np.zeros(2, np.float32),
              rng.normal(0, .5, (c, 2)).astype(np.float32), np.zeros(c, np.float32))
conv = lambda o, i: ConvWeights(rng.normal(0, .5, (o, i, 1, 1)).astype(np.float32), np.zeros(o, np.float32))
ca = CAParams(conv(8, c), conv(c, 8), conv(c, 8))

print("SE gate, one value per channel:", np.round(se_gate(x, se)[0, :, 0, 0], 3))
g_h, g_w = ca_gates(x, ca)
print("CA height gate ch0:", np.round(g_h[0, 0, :, 0], 3))
print("CA width gate ch0:", np.round(g_w[0, 0, 0], 3))

# %%
for name, out in (("SE", se_forward(x, se)), ("CA", ca_forward(x, ca))):
    print(name, "shape kept:", out.shape == x.shape, " never amplifies:", bool(np.all(np.abs(out) <= np.abs(x))))

print("SE params:", se.num_params, " CA params:", ca.num_params)
