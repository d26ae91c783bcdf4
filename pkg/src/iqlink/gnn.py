"""Trainable message-passing decoder on the Tanner graph.

One decoding round updates, in order: VN->CN edge messages, CN features,
CN->VN edge messages, VN features.  Each update is a two-layer ReLU MLP on
the concatenation of the endpoint features and a scalar attribute (the
incident variable node's channel LLR, rescaled to [-1, 1]).  After the
configured number of rounds a linear readout turns each VN feature vector
into one logit per code bit, in the package LLR convention (bit = 1 iff
logit > 0).

Message aggregation is the mean over incident edges, which makes the whole
pass permutation-equivariant, and the parameter count depends only on the
feature widths, never on the code size.
"""

import math
from dataclasses import dataclass

import numpy as np

from .modem import LLR_CLAMP
from .tanner import TannerGraph

__all__ = ["GnnConfig", "GnnParams", "init_params", "gnn_decode", "forward_with_cache", "backward"]


@dataclass(frozen=True)
class GnnConfig:
    vn_dim: int = 16
    cn_dim: int = 16
    msg_dim: int = 16
    hidden_dim: int = 32
    iters: int = 8
    share_weights_across_iters: bool = True

    def __post_init__(self):
        for name in ("vn_dim", "cn_dim", "msg_dim", "hidden_dim", "iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def mlp_shapes(self):
        """(name, fan_in, fan_out) for the four per-round MLPs."""
        return [
            ("v2c", self.vn_dim + self.cn_dim + 1, self.msg_dim),
            ("cn", self.cn_dim + self.msg_dim, self.cn_dim),
            ("c2v", self.cn_dim + self.vn_dim + 1, self.msg_dim),
            ("vn", self.vn_dim + self.msg_dim + 1, self.vn_dim),
        ]

    def round_prefixes(self):
        if self.share_weights_across_iters:
            return [""]
        return [f"r{t}." for t in range(self.iters)]


class GnnParams:
    """Named parameter tensors; iteration order is fixed for reproducibility."""

    def __init__(self, config, tensors):
        self.config = config
        self.tensors = dict(tensors)
        expected = set(tensor_shapes(config))
        if set(self.tensors) != expected:
            missing = expected - set(self.tensors)
            extra = set(self.tensors) - expected
            raise ValueError(f"parameter names mismatch: missing={missing} extra={extra}")
        for name, shape in tensor_shapes(config).items():
            if tuple(self.tensors[name].shape) != shape:
                raise ValueError(
                    f"tensor {name} has shape {self.tensors[name].shape}, expected {shape}"
                )

    def names(self):
        return list(tensor_shapes(self.config))

    def __getitem__(self, name):
        return self.tensors[name]

    def count(self):
        return sum(t.size for t in self.tensors.values())

    def copy(self):
        return GnnParams(self.config, {k: v.copy() for k, v in self.tensors.items()})


def tensor_shapes(config):
    """Ordered name -> shape map for every trainable tensor."""
    shapes = {"embed.w": (config.vn_dim, 1), "embed.b": (config.vn_dim,)}
    for prefix in config.round_prefixes():
        for name, fan_in, fan_out in config.mlp_shapes():
            shapes[f"{prefix}{name}.w1"] = (config.hidden_dim, fan_in)
            shapes[f"{prefix}{name}.b1"] = (config.hidden_dim,)
            shapes[f"{prefix}{name}.w2"] = (fan_out, config.hidden_dim)
            shapes[f"{prefix}{name}.b2"] = (fan_out,)
    shapes["readout.w"] = (1, config.vn_dim)
    shapes["readout.b"] = (1,)
    return shapes


def init_params(config, rng):
    """Glorot-uniform weights, zero biases, drawn in fixed name order."""
    tensors = {}
    for name, shape in tensor_shapes(config).items():
        if name.endswith(".b") or name.endswith(".b1") or name.endswith(".b2"):
            tensors[name] = np.zeros(shape)
        else:
            fan_out, fan_in = shape
            a = math.sqrt(6.0 / (fan_in + fan_out))
            tensors[name] = rng.uniform(-a, a, size=shape)
    return GnnParams(config, tensors)


def _mlp(x, params, name):
    h = x @ params[f"{name}.w1"].T + params[f"{name}.b1"]
    np.maximum(h, 0.0, out=h)
    return h @ params[f"{name}.w2"].T + params[f"{name}.b2"], h


def forward_with_cache(params, graph, llrs, want_cache=False):
    """Run the message-passing decoder; optionally keep per-round activations.

    Returns (logits, cache); cache is None unless requested.  Input LLRs may
    be (n,)-shaped or batched (B, n).
    """
    cfg = params.config
    llrs = np.asarray(llrs, dtype=np.float64)
    single = llrs.ndim == 1
    l = llrs[None, :] if single else llrs
    if l.shape[-1] != graph.num_vn:
        raise ValueError(f"got {l.shape[-1]} LLRs for {graph.num_vn} variable nodes")

    a = np.clip(l, -LLR_CLAMP, LLR_CLAMP) / LLR_CLAMP
    attr = a[:, graph.vn_of_edge]
    wv = a[..., None] * params["embed.w"][:, 0] + params["embed.b"]
    wf = np.zeros((l.shape[0], graph.num_cn, cfg.cn_dim))

    cache = {"a": a, "rounds": []} if want_cache else None
    vn_e, cn_e = graph.vn_of_edge, graph.cn_of_edge
    inv_deg_v = 1.0 / graph.vn_degree
    inv_deg_c = 1.0 / graph.cn_degree

    for t in range(cfg.iters):
        p = "" if cfg.share_weights_across_iters else f"r{t}."
        x1 = np.concatenate([wv[:, vn_e], wf[:, cn_e], attr[..., None]], axis=2)
        m1, h1 = _mlp(x1, params, f"{p}v2c")
        agg_c = graph.sum_per_cn(m1, axis=1) * inv_deg_c[:, None]
        xc = np.concatenate([wf, agg_c], axis=2)
        wf_new, hc = _mlp(xc, params, f"{p}cn")
        x2 = np.concatenate([wf_new[:, cn_e], wv[:, vn_e], attr[..., None]], axis=2)
        m2, h2 = _mlp(x2, params, f"{p}c2v")
        agg_v = graph.sum_per_vn(m2, axis=1) * inv_deg_v[:, None]
        xv = np.concatenate([wv, agg_v, a[..., None]], axis=2)
        wv_new, hv = _mlp(xv, params, f"{p}vn")
        if want_cache:
            cache["rounds"].append((x1, h1, xc, hc, x2, h2, xv, hv))
        wv, wf = wv_new, wf_new

    logits = wv @ params["readout.w"][0] + params["readout.b"][0]
    if want_cache:
        cache["wv_final"] = wv
        cache["single"] = single
    return (logits[0] if single else logits), cache


def gnn_decode(params, graph, llrs):
    """Decode LLRs to (logits, hard bits)."""
    logits, _ = forward_with_cache(params, graph, llrs)
    return logits, (logits > 0).astype(np.uint8)


def _mlp_backward(dY, x, h, params, grads, name):
    dY2 = dY.reshape(-1, dY.shape[-1])
    h2 = h.reshape(-1, h.shape[-1])
    x2 = x.reshape(-1, x.shape[-1])
    grads[f"{name}.w2"] += dY2.T @ h2
    grads[f"{name}.b2"] += dY2.sum(axis=0)
    dh = dY2 @ params[f"{name}.w2"]
    dh *= h2 > 0
    grads[f"{name}.w1"] += dh.T @ x2
    grads[f"{name}.b1"] += dh.sum(axis=0)
    return (dh @ params[f"{name}.w1"]).reshape(*x.shape[:-1], -1)


def backward(params, graph, cache, dlogits):
    """Reverse-mode gradients of the forward pass for every named tensor.

    ``dlogits`` is the loss gradient at the logits, shaped like the forward
    batch.  Returns a name -> array dict matching the parameter shapes.
    """
    cfg = params.config
    Dv, Dc, Dm = cfg.vn_dim, cfg.cn_dim, cfg.msg_dim
    if cache.get("single"):
        dlogits = np.asarray(dlogits)[None, :]
    a = cache["a"]
    grads = {name: np.zeros_like(params[name]) for name in params.names()}

    grads["readout.w"][0] = np.einsum("bn,bnd->d", dlogits, cache["wv_final"])
    grads["readout.b"][0] = dlogits.sum()
    d_wv = dlogits[..., None] * params["readout.w"][0]
    d_wf = np.zeros((a.shape[0], graph.num_cn, Dc))

    vn_e, cn_e = graph.vn_of_edge, graph.cn_of_edge
    inv_deg_v = 1.0 / graph.vn_degree
    inv_deg_c = 1.0 / graph.cn_degree

    for t in reversed(range(cfg.iters)):
        p = "" if cfg.share_weights_across_iters else f"r{t}."
        x1, h1, xc, hc, x2, h2, xv, hv = cache["rounds"][t]

        dxv = _mlp_backward(d_wv, xv, hv, params, grads, f"{p}vn")
        d_wv_prev = dxv[:, :, :Dv].copy()
        d_m2 = (dxv[:, :, Dv : Dv + Dm] * inv_deg_v[:, None])[:, vn_e]

        dx2 = _mlp_backward(d_m2, x2, h2, params, grads, f"{p}c2v")
        d_wf_cur = d_wf + graph.sum_per_cn(dx2[:, :, :Dc], axis=1)
        d_wv_prev += graph.sum_per_vn(dx2[:, :, Dc : Dc + Dv], axis=1)

        dxc = _mlp_backward(d_wf_cur, xc, hc, params, grads, f"{p}cn")
        d_wf_prev = dxc[:, :, :Dc].copy()
        d_m1 = (dxc[:, :, Dc:] * inv_deg_c[:, None])[:, cn_e]

        dx1 = _mlp_backward(d_m1, x1, h1, params, grads, f"{p}v2c")
        d_wv_prev += graph.sum_per_vn(dx1[:, :, :Dv], axis=1)
        d_wf_prev += graph.sum_per_cn(dx1[:, :, Dv : Dv + Dc], axis=1)

        d_wv, d_wf = d_wv_prev, d_wf_prev

    grads["embed.w"][:, 0] = np.einsum("bn,bnd->d", a, d_wv)
    grads["embed.b"] = d_wv.sum(axis=(0, 1))
    return grads
