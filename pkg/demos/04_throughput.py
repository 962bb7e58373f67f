# %% [markdown]
# # Images per second on this machine
#
# Forward pass only, batch 1, after untimed warm-up runs. Host CPU figures
# are not comparable with embedded-board numbers; the ordering is what
# carries over.

# %%
from camnet.harness import run_bench
from camnet.model import build_model

for variant in ("large", "large_ca", "small", "small_ca"):
    r = run_bench(build_model(variant, seed=0), batch=1, warmup=2, iters=10)
    print(f"{variant:<9} {r.images_per_second:6.1f} img/s  {r.latency_ms:6.1f} ms/img")
