# %% [markdown]
# # Parameter and FLOPs accounting for the four MobileNetV3 variants
#
# Builds each network at 38 classes and prints params, MACs and the
# container size, then reruns the sweep that pins down the two choices the
# architecture tables leave open.

# %%
from camnet.accounting import PUBLISHED, calibration_sweep, delta_report, report
from camnet.model import architecture, build_model

reports = {v: report(build_model(v, seed=0)) for v in PUBLISHED}
print(f"{'variant':<10} {'params':>10} {'published':>10} {'GFLOPs':>7} {'published':>9}")
for v, rep in reports.items():
    print(f"{v:<10} {rep.total_params:>10,} {PUBLISHED[v]['params']:>10,} {rep.gflops:>7.3f} {PUBLISHED[v]['gflops']:>9}")

# %% [markdown]
# Swapping SE for CA: fewer parameters, slightly more multiply-adds.

# %%
for base, ca in (("large", "large_ca"), ("small", "small_ca")):
    print(f"{base} -> {ca}: {delta_report(reports[base], reports[ca])}")

# %% [markdown]
# Where do the saved parameters come from? The 960-channel SE block alone
# holds 462,000 scalars; its CA replacement holds 88,350.

# %%
big_se = [l for l in reports["large"].layers if l.name.startswith("blocks.14.se")]
big_ca = [l for l in reports["large_ca"].layers if l.name.startswith("blocks.14.ca")]
print("SE @960:", sum(l.params for l in big_se), " CA @960:", sum(l.params for l in big_ca))

# %% [markdown]
# Calibration sweep: CA reduction, BN inside the CA bottleneck, 10 vs 11
# small rows, attention on large row 15. Only one combination is exact.

# %%
for row in calibration_sweep()[:6]:
    print(row.ca_reduction, row.ca_bn, row.small_rows, row.large_row15,
          f"{row.large_ca_params:,}", f"{row.small_ca_params:,}", "error", row.error)

# %%
for i, b in enumerate(architecture("large_ca").blocks, 1):
    print(i, b.kernel, b.exp_size, b.out_channels, b.attention.name, b.stride, b.activation)
