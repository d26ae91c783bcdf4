"""Gray-mapped square-QAM modulation and exact soft demapping.

LLR sign convention throughout the package: l = log Pr(bit=1 | r) /
Pr(bit=0 | r), so a hard decision is bit = 1 iff l > 0.  LLRs are natural-log
and clamped to +/- LLR_CLAMP; the check-node tanh rule is only consistent
with natural-log ratios.
"""

import math

import numpy as np

__all__ = ["LLR_CLAMP", "qam_map", "qam_demap_llr", "pam_levels"]

# magnitude bound for every LLR in the system; far above any decision-relevant
# confidence while keeping tanh/exp in safe IEEE range
LLR_CLAMP = 30.0


def pam_levels(bits_per_axis):
    """Gray-ordered PAM amplitudes for one axis, unit average symbol energy.

    Index = axis bit pattern (MSB first); bit 0 of a single-bit axis maps to
    +1/sqrt(2) and bit 1 to -1/sqrt(2), matching the QPSK convention.
    """
    L = 1 << bits_per_axis
    # natural PAM levels, then label position j with Gray code g(j) so that
    # adjacent amplitudes differ in exactly one bit
    amp = np.arange(L - 1, -L, -2, dtype=np.float64)
    mean_sq = np.mean(amp**2)
    amp = amp / math.sqrt(2.0 * mean_sq)  # two axes share the energy budget
    levels = np.empty(L, dtype=np.float64)
    for j in range(L):
        levels[j ^ (j >> 1)] = amp[j]
    return levels


def _split_axes(bits, bits_per_symbol):
    """Group a bit word into per-symbol (I-pattern, Q-pattern) integers."""
    if bits.shape[-1] % bits_per_symbol != 0:
        raise ValueError(
            f"bit count {bits.shape[-1]} not divisible by {bits_per_symbol} bits/symbol"
        )
    half = bits_per_symbol // 2
    grouped = bits.reshape(*bits.shape[:-1], -1, bits_per_symbol)
    weights = 1 << np.arange(half - 1, -1, -1)
    i_pat = (grouped[..., :half] * weights).sum(axis=-1)
    q_pat = (grouped[..., half:] * weights).sum(axis=-1)
    return i_pat, q_pat


def qam_map(c, bits_per_symbol=2):
    """Map coded bits to unit-energy square-QAM symbols.

    For QPSK each bit pair (c_2m, c_2m+1) becomes one symbol: the first bit
    drives the in-phase axis, the second the quadrature axis, with 0 -> +1/sqrt(2)
    and 1 -> -1/sqrt(2).
    """
    bits_per_symbol = int(bits_per_symbol)
    if bits_per_symbol < 2 or bits_per_symbol % 2 != 0:
        raise ValueError("bits_per_symbol must be an even count >= 2 for square QAM")
    c = np.asarray(c).astype(np.int64)
    levels = pam_levels(bits_per_symbol // 2)
    i_pat, q_pat = _split_axes(c, bits_per_symbol)
    return levels[i_pat] + 1j * levels[q_pat]


def qam_demap_llr(r, h, noise_var, bits_per_symbol=2, clamp=LLR_CLAMP):
    """Exact per-bit LLRs for r = h*x + CN(0, noise_var).

    Computes the true-sum ratio over the constellation; square QAM with
    per-axis Gray labels factorizes exactly into two PAM problems, so each
    axis is demapped independently.  For QPSK this reduces to a linear
    function of Re(r) / Im(r).  The demapper assumes the ideal channel model
    (no IQ-imbalance compensation) with h and noise_var known.

    Returns one LLR per bit, interleaved (I bits then Q bits per symbol),
    clamped to +/- clamp.
    """
    noise_var = np.asarray(noise_var, dtype=np.float64)
    if (noise_var <= 0).any():
        raise ValueError("noise_var must be positive")
    bits_per_symbol = int(bits_per_symbol)
    half = bits_per_symbol // 2
    r = np.asarray(r, dtype=np.complex128)
    levels = pam_levels(half)

    def axis_llrs(u):
        # per-axis noise variance is noise_var / 2
        # metric[..., s] = -(u - h*level_s)^2 / noise_var
        metric = -((u[..., None] - h * levels) ** 2) / noise_var[..., None]
        out = np.empty((*u.shape, half), dtype=np.float64)
        for b in range(half):
            bitmask = (np.arange(levels.size) >> (half - 1 - b)) & 1
            m1 = _logsumexp(metric[..., bitmask == 1])
            m0 = _logsumexp(metric[..., bitmask == 0])
            out[..., b] = m1 - m0
        return out

    li = axis_llrs(r.real)
    lq = axis_llrs(r.imag)
    per_symbol = np.concatenate([li, lq], axis=-1)
    flat = per_symbol.reshape(*r.shape[:-1], r.shape[-1] * bits_per_symbol)
    return np.clip(flat, -clamp, clamp)


def _logsumexp(a):
    amax = a.max(axis=-1)
    return amax + np.log(np.exp(a - amax[..., None]).sum(axis=-1))
