"""Scalar-loop reference implementations.

Deliberately naive and slow; used only as independent oracles for the
vectorised layers in tests and in ``camnet verify``. Nothing here imports
the layer code it checks.
"""

from __future__ import annotations

import math

import numpy as np


def hsig(v: float) -> float:
    return min(max(v + 3.0, 0.0), 6.0) / 6.0


def hswish(v: float) -> float:
    return v * hsig(v)


def conv2d_naive(x, kernel, bias=None, stride=1, pads=(0, 0, 0, 0), groups=1):
    """Direct convolution: seven nested loops, zero padding by bounds check."""
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    n, c, h, w = x.shape
    o, cpg, kh, kw = kernel.shape
    pt, pb, pl, pr = pads
    oh = (h + pt + pb - kh) // stride + 1
    ow = (w + pl + pr - kw) // stride + 1
    opg = o // groups
    out = np.zeros((n, o, oh, ow))
    for b in range(n):
        for oc in range(o):
            base = (oc // opg) * cpg
            for i in range(oh):
                for j in range(ow):
                    acc = 0.0 if bias is None else float(bias[oc])
                    for ci in range(cpg):
                        for ki in range(kh):
                            yy = i * stride - pt + ki
                            if yy < 0 or yy >= h:
                                continue
                            for kj in range(kw):
                                xx = j * stride - pl + kj
                                if 0 <= xx < w:
                                    acc += x[b, base + ci, yy, xx] * kernel[oc, ci, ki, kj]
                    out[b, oc, i, j] = acc
    return out


def batchnorm_naive(x, gamma, beta, mean, var, eps):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    n, c, h, w = x.shape
    for b in range(n):
        for ch in range(c):
            s = 1.0 / math.sqrt(float(var[ch]) + eps)
            for i in range(h):
                for j in range(w):
                    out[b, ch, i, j] = float(gamma[ch]) * (x[b, ch, i, j] - float(mean[ch])) * s + float(beta[ch])
    return out


def broadcast_mul_naive(x, a, b):
    x = np.asarray(x, dtype=np.float64)
    n, c, h, w = x.shape
    out = np.empty_like(x)
    for bb in range(n):
        for ch in range(c):
            for i in range(h):
                for j in range(w):
                    ai = a[bb, ch, i if a.shape[2] > 1 else 0, 0]
                    bj = b[bb, ch, 0, j if b.shape[3] > 1 else 0]
                    out[bb, ch, i, j] = x[bb, ch, i, j] * ai * bj
    return out


def dense_naive(v, weight, bias):
    return [sum(float(weight[o][i]) * float(v[i]) for i in range(len(v))) + float(bias[o])
            for o in range(len(weight))]


def se_naive(x, fc1_w, fc1_b, fc2_w, fc2_b):
    """Squeeze, excite through two FC layers, scale."""
    x = np.asarray(x, dtype=np.float64)
    n, c, h, w = x.shape
    out = np.empty_like(x)
    for b in range(n):
        z = [sum(x[b, ch, i, j] for i in range(h) for j in range(w)) / (h * w) for ch in range(c)]
        hidden = [max(0.0, v) for v in dense_naive(z, fc1_w, fc1_b)]
        s = [hsig(v) for v in dense_naive(hidden, fc2_w, fc2_b)]
        for ch in range(c):
            out[b, ch] = x[b, ch] * s[ch]
    return out


def ca_naive(x, conv1_w, conv1_b, convh_w, convh_b, convw_w, convw_b, bn=None):
    """Coordinate attention from strip means, one shared bottleneck, two gates."""
    x = np.asarray(x, dtype=np.float64)
    n, c, h, w = x.shape
    m = conv1_w.shape[0]
    out = np.empty_like(x)
    w1 = conv1_w.reshape(m, c)
    wh = convh_w.reshape(c, m)
    ww = convw_w.reshape(c, m)
    for b in range(n):
        zh = [[sum(x[b, ch, i, j] for j in range(w)) / w for i in range(h)] for ch in range(c)]
        zw = [[sum(x[b, ch, i, j] for i in range(h)) / h for j in range(w)] for ch in range(c)]
        strip = [[zh[ch][p] if p < h else zw[ch][p - h] for p in range(h + w)] for ch in range(c)]
        f = [[0.0] * (h + w) for _ in range(m)]
        for k in range(m):
            for p in range(h + w):
                v = sum(float(w1[k, ch]) * strip[ch][p] for ch in range(c)) + float(conv1_b[k])
                if bn is not None:
                    g, be, mu, var, eps = bn
                    v = float(g[k]) * (v - float(mu[k])) / math.sqrt(float(var[k]) + eps) + float(be[k])
                f[k][p] = hswish(v)
        gh = [[hsig(sum(float(wh[ch, k]) * f[k][i] for k in range(m)) + float(convh_b[ch])) for i in range(h)]
              for ch in range(c)]
        gw = [[hsig(sum(float(ww[ch, k]) * f[k][h + j] for k in range(m)) + float(convw_b[ch])) for j in range(w)]
              for ch in range(c)]
        for ch in range(c):
            for i in range(h):
                for j in range(w):
                    out[b, ch, i, j] = x[b, ch, i, j] * gh[ch][i] * gw[ch][j]
    return out


def softmax_naive(logits):
    mx = max(logits)
    e = [math.exp(v - mx) for v in logits]
    s = sum(e)
    return [v / s for v in e]
