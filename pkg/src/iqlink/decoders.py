"""Reference detectors: flooding sum-product BP and hard-decision bit flipping.

All decoders accept LLR input of shape (n,) or batched (B, n) and follow the
package-wide sign convention l = log Pr(1)/Pr(0).  Because that convention
puts "1" in the numerator, E[(-1)^c] = -tanh(l/2); the check-node rule keeps
the extra minus signs explicit so it stays exact on odd-degree checks.
"""

from typing import NamedTuple

import numpy as np

from .modem import LLR_CLAMP
from .tanner import TannerGraph

__all__ = ["BpWorkspace", "BpResult", "bp_decode", "hard_decision", "conventional_decode"]

# keep |product of tanh| away from 1 so atanh stays finite
_ATANH_GUARD = 1.0 - 1e-12


class BpWorkspace(NamedTuple):
    """Per-edge message state after some number of flooding iterations."""

    v2c: np.ndarray
    c2v: np.ndarray
    iters: int


class BpResult(NamedTuple):
    out_llrs: np.ndarray
    hard: np.ndarray
    workspace: BpWorkspace


def hard_decision(llrs):
    """bit = 1 iff LLR > 0; exact zeros decide 0."""
    return (np.asarray(llrs) > 0).astype(np.uint8)


def _check_node_update(graph, v2c, clamp):
    """Extrinsic CN->VN messages for all edges at once.

    Works in the mu = -tanh(l/2) domain (mu = E[(-1)^c]); the extrinsic
    product over a check's other edges is formed from per-segment sign
    parities and log-magnitude sums, then mapped back through
    -2*atanh(product).  Magnitudes are computed via log1p/expm1 so values
    near +/-1 lose no precision, and exact zeros propagate as zeros.
    """
    mu = -np.tanh(0.5 * np.clip(v2c, -clamp, clamp))
    mag = np.abs(mu)
    neg = mu < 0
    zero = mag == 0.0
    with np.errstate(divide="ignore"):
        logmag = np.where(zero, 0.0, np.log(np.where(zero, 1.0, mag)))

    seg_log = np.add.reduceat(logmag, graph.cn_offsets, axis=-1)
    seg_neg = np.add.reduceat(neg.astype(np.int64), graph.cn_offsets, axis=-1)
    seg_zero = np.add.reduceat(zero.astype(np.int64), graph.cn_offsets, axis=-1)

    e = graph.cn_of_edge
    others_log = seg_log[..., e] - logmag
    others_neg = seg_neg[..., e] - neg
    others_zero = seg_zero[..., e] - zero

    # ln((1+x)/(1-x)) = 2*atanh(x) for x = exp(others_log) in (0, 1)
    x_log = np.minimum(others_log, np.log(_ATANH_GUARD))
    x = np.exp(x_log)
    two_atanh = np.log1p(x) - np.log1p(-x)
    sign = 1.0 - 2.0 * (others_neg & 1)
    c2v = -sign * np.minimum(two_atanh, clamp)
    return np.where(others_zero > 0, 0.0, c2v)


def bp_decode(
    graph: TannerGraph,
    llrs,
    iters=20,
    *,
    early_exit=True,
    workspace=None,
    clamp=LLR_CLAMP,
):
    """Flooding sum-product decoding.

    Each iteration runs one VN->CN layer (extrinsic sums of channel LLR plus
    incoming messages) followed by one CN->VN layer (extrinsic tanh-product
    rule); the output LLR is channel LLR plus all incoming CN messages.

    With ``early_exit`` rows whose hard decision already satisfies every
    check are frozen; pass ``early_exit=False`` for fixed-iteration,
    paper-faithful comparison runs.  A previous result's ``workspace``
    continues decoding where it stopped, so iters=a then iters=b equals
    iters=a+b (with early_exit=False).

    Returns BpResult(out_llrs, hard, workspace) with shapes matching the
    input.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    single = llrs.ndim == 1
    l = llrs[None, :] if single else llrs
    if l.shape[-1] != graph.num_vn:
        raise ValueError(f"got {l.shape[-1]} LLRs for {graph.num_vn} variable nodes")
    if iters < 1:
        raise ValueError("iters must be >= 1")

    B = l.shape[0]
    l_edge = l[:, graph.vn_of_edge]
    if workspace is None:
        c2v = np.zeros((B, graph.num_edges))
        v2c = np.zeros((B, graph.num_edges))
        done_iters = 0
    else:
        v2c = np.array(workspace.v2c, dtype=np.float64, copy=True).reshape(B, -1)
        c2v = np.array(workspace.c2v, dtype=np.float64, copy=True).reshape(B, -1)
        done_iters = workspace.iters

    active = np.arange(B)
    dense = None
    if early_exit:
        dense = _dense_checks(graph)
    out = np.empty_like(l)
    hard = np.empty(l.shape, dtype=np.uint8)

    for _ in range(iters):
        la = l[active]
        totals = graph.sum_per_vn(c2v[active])
        v2c_a = np.clip(la[:, graph.vn_of_edge] + totals[:, graph.vn_of_edge] - c2v[active], -clamp, clamp)
        c2v_a = _check_node_update(graph, v2c_a, clamp)
        v2c[active] = v2c_a
        c2v[active] = c2v_a
        if early_exit:
            totals = graph.sum_per_vn(c2v_a)
            out_a = la + totals
            hard_a = hard_decision(out_a)
            out[active] = out_a
            hard[active] = hard_a
            syn = (hard_a.astype(np.int32) @ dense.T) % 2
            still = syn.any(axis=-1)
            active = active[still]
            if active.size == 0:
                break

    remaining = active
    totals = graph.sum_per_vn(c2v[remaining])
    out[remaining] = l[remaining] + totals
    hard[remaining] = hard_decision(out[remaining])

    ws = BpWorkspace(v2c=v2c, c2v=c2v, iters=done_iters + iters)
    if single:
        return BpResult(out[0], hard[0], ws)
    return BpResult(out, hard, ws)


def _dense_checks(graph):
    H = np.zeros((graph.num_cn, graph.num_vn), dtype=np.int32)
    H[graph.cn_of_edge, graph.vn_of_edge] = 1
    return H


def conventional_decode(graph: TannerGraph, llrs, max_iters=20):
    """Hard-decision Gallager-B bit flipping.

    The channel LLRs are sliced to hard bits once; each iteration flips every
    bit whose unsatisfied-check count strictly exceeds half its degree (ties
    leave the bit alone) and stops early once all checks hold.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    single = llrs.ndim == 1
    l = llrs[None, :] if single else llrs
    if l.shape[-1] != graph.num_vn:
        raise ValueError(f"got {l.shape[-1]} LLRs for {graph.num_vn} variable nodes")

    bits = hard_decision(l).astype(np.int32)
    dense = _dense_checks(graph)
    half_degree = graph.vn_degree / 2.0
    for _ in range(max_iters):
        syn = (bits @ dense.T) % 2
        if not syn.any():
            break
        unsat = graph.sum_per_vn(syn[:, graph.cn_of_edge].astype(np.float64))
        flip = unsat > half_degree
        bits ^= flip.astype(np.int32)
    result = bits.astype(np.uint8)
    return result[0] if single else result
