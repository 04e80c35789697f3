"""Forward/backward pairs for the transformer building blocks.

Every ``*_fwd`` returns ``(out, cache)``; the matching ``*_bwd`` takes the
upstream gradient and the cache, adds parameter gradients into ``grads``
(a name -> ndarray dict) and returns the input gradient.
"""

import math

import numpy as np

LN_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)


def acc(grads, name, g):
    if name in grads:
        grads[name] += g
    else:
        grads[name] = g.copy() if isinstance(g, np.ndarray) else g


def _flat(x):
    return x.reshape(-1, x.shape[-1])


def linear_fwd(x, w, b):
    return x @ w + b


def linear_bwd(dy, x, w, grads, wname, bname):
    acc(grads, wname, _flat(x).T @ _flat(dy))
    acc(grads, bname, _flat(dy).sum(axis=0))
    return dy @ w.T


def layer_norm_fwd(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xh = xc * inv
    return xh * g + b, (xh, inv)


def layer_norm_bwd(dy, cache, g, grads, prefix):
    xh, inv = cache
    acc(grads, prefix + ".g", _flat(dy * xh).sum(axis=0))
    acc(grads, prefix + ".b", _flat(dy).sum(axis=0))
    dxh = dy * g
    return inv * (
        dxh - dxh.mean(axis=-1, keepdims=True) - xh * (dxh * xh).mean(axis=-1, keepdims=True)
    )


def gelu_fwd(x):
    t = np.tanh(_GELU_C * (x + 0.044715 * x**3))
    return 0.5 * x * (1.0 + t), t


def gelu_bwd(dy, x, t):
    du = _GELU_C * (1.0 + 3 * 0.044715 * x * x)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du)


def dropout_fwd(x, rate, rng):
    if rate <= 0.0 or rng is None:
        return x, None
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * keep, keep


def dropout_bwd(dy, keep):
    return dy if keep is None else dy * keep


def softmax(s, axis=-1):
    s = s - s.max(axis=axis, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=axis, keepdims=True)


def attention_fwd(P, pre, xq, xkv, allow, n_heads):
    """Multi-head scaled dot-product attention.

    ``allow`` is a boolean array broadcastable to [B, H, Tq, Tk]; disallowed
    scores get probability exactly 0.
    """
    B, Tq, D = xq.shape
    Tk = xkv.shape[1]
    dh = D // n_heads
    scale = 1.0 / math.sqrt(dh)

    def heads(x, T):
        return x.reshape(B, T, n_heads, dh).transpose(0, 2, 1, 3)

    q = heads(linear_fwd(xq, P[pre + ".wq"], P[pre + ".bq"]), Tq)
    k = heads(linear_fwd(xkv, P[pre + ".wk"], P[pre + ".bk"]), Tk)
    v = heads(linear_fwd(xkv, P[pre + ".wv"], P[pre + ".bv"]), Tk)
    s = (q @ k.transpose(0, 1, 3, 2)) * q.dtype.type(scale)
    s = np.where(allow, s, -np.inf)
    p = softmax(s)
    ctx = (p @ v).transpose(0, 2, 1, 3).reshape(B, Tq, D)
    out = linear_fwd(ctx, P[pre + ".wo"], P[pre + ".bo"])
    return out, (pre, xq, xkv, q, k, v, p, ctx, scale, n_heads)


def attention_bwd(dout, cache, P, grads, self_attn):
    pre, xq, xkv, q, k, v, p, ctx, scale, n_heads = cache
    B, Tq, D = xq.shape
    Tk = xkv.shape[1]
    dh = D // n_heads
    dctx = linear_bwd(dout, ctx, P[pre + ".wo"], grads, pre + ".wo", pre + ".bo")
    dctx = dctx.reshape(B, Tq, n_heads, dh).transpose(0, 2, 1, 3)
    dp = dctx @ v.transpose(0, 1, 3, 2)
    dv = p.transpose(0, 1, 3, 2) @ dctx
    ds = p * (dp - (dp * p).sum(axis=-1, keepdims=True)) * q.dtype.type(scale)
    dq = ds @ k
    dk = ds.transpose(0, 1, 3, 2) @ q

    def merge(x, T):
        return x.transpose(0, 2, 1, 3).reshape(B, T, D)

    dxq = linear_bwd(merge(dq, Tq), xq, P[pre + ".wq"], grads, pre + ".wq", pre + ".bq")
    dxkv = linear_bwd(merge(dk, Tk), xkv, P[pre + ".wk"], grads, pre + ".wk", pre + ".bk")
    dxkv = dxkv + linear_bwd(merge(dv, Tk), xkv, P[pre + ".wv"], grads, pre + ".wv", pre + ".bv")
    if self_attn:
        return dxq + dxkv, None
    return dxq, dxkv


def ffn_fwd(P, pre, x):
    h = linear_fwd(x, P[pre + ".w1"], P[pre + ".b1"])
    a, t = gelu_fwd(h)
    y = linear_fwd(a, P[pre + ".w2"], P[pre + ".b2"])
    return y, (x, h, t, a)


def ffn_bwd(dy, cache, P, pre, grads):
    x, h, t, a = cache
    da = linear_bwd(dy, a, P[pre + ".w2"], grads, pre + ".w2", pre + ".b2")
    dh = gelu_bwd(da, h, t)
    return linear_bwd(dh, x, P[pre + ".w1"], grads, pre + ".w1", pre + ".b1")
