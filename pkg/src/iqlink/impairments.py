"""TX/RX IQ-imbalance model, scalar AWGN channel, and IRR/SDNR analytics.

An imbalanced mixer turns a baseband signal x into k1*x + k2*conj(x).  The
coefficient pair derives from an amplitude mismatch g and a phase mismatch
theta; the TX and RX sides use opposite phase sign conventions:

    TX: k1 = (1 + g e^{+j theta}) / 2,  k2 = (1 - g e^{-j theta}) / 2
    RX: k1 = (1 + g e^{-j theta}) / 2,  k2 = (1 - g e^{+j theta}) / 2

so the TX pair satisfies k1 = 1 - conj(k2).  An ideal front end (g=1,
theta=0) has k1=1, k2=0 and infinite image rejection.
"""

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IqiParams",
    "ChannelConfig",
    "iqi_coeffs",
    "irr",
    "irr_db",
    "g_from_irr",
    "apply_iqi",
    "awgn",
    "transmit_chain",
    "sdnr",
]


@dataclass(frozen=True)
class IqiParams:
    """Mixer imbalance for one side of the link."""

    g: float
    theta: float  # radians
    side: str  # "tx" or "rx"
    k1: complex = field(init=False)
    k2: complex = field(init=False)

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError(f"amplitude mismatch g must be positive, got {self.g}")
        if self.side not in ("tx", "rx"):
            raise ValueError(f"side must be 'tx' or 'rx', got {self.side!r}")
        phase = 1j * self.theta if self.side == "tx" else -1j * self.theta
        object.__setattr__(self, "k1", (1 + self.g * cmath.exp(phase)) / 2)
        object.__setattr__(self, "k2", (1 - self.g * cmath.exp(-phase)) / 2)

    @property
    def is_ideal(self):
        return self.g == 1.0 and self.theta == 0.0

    @classmethod
    def ideal(cls, side):
        return cls(1.0, 0.0, side)


def iqi_coeffs(g, theta, side):
    """Build IqiParams from amplitude/phase mismatch; theta in radians."""
    return IqiParams(float(g), float(theta), side)


def irr(p):
    """Image rejection ratio |k1|^2/|k2|^2 (linear); +inf for an ideal mixer."""
    denom = abs(p.k2) ** 2
    if denom == 0.0:
        return math.inf
    return abs(p.k1) ** 2 / denom


def irr_db(p):
    r = irr(p)
    return math.inf if math.isinf(r) else 10.0 * math.log10(r)


def g_from_irr(target_irr_db, theta, side, tol=1e-12):
    """Amplitude mismatch g >= 1 whose IRR matches target_irr_db at this theta.

    IRR decreases monotonically in g on the g >= 1 branch, so the target is
    bisected there.  An infinite target returns the ideal g=1 (requires
    theta=0).  For fixed nonzero theta the IRR is maximized at g=1, where it
    equals cot^2(theta/2); targets above that supremum raise, reporting it.
    """
    if math.isinf(target_irr_db):
        if theta != 0.0:
            sup = irr_db(iqi_coeffs(1.0, theta, side))
            raise ValueError(
                f"infinite IRR is unreachable with theta={theta!r} rad; "
                f"supremum is {sup:.4f} dB at g=1"
            )
        return 1.0
    at_g1 = irr_db(iqi_coeffs(1.0, theta, side))
    if target_irr_db > at_g1:
        raise ValueError(
            f"IRR {target_irr_db} dB is not achievable for theta="
            f"{math.degrees(theta):.3f} deg; supremum is {at_g1:.4f} dB at g=1"
        )
    target = 10.0 ** (target_irr_db / 10.0)
    lo, hi = 1.0, 2.0
    while irr(iqi_coeffs(hi, theta, side)) > target:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError(f"IRR {target_irr_db} dB not reachable for theta={theta!r}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if irr(iqi_coeffs(mid, theta, side)) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * lo:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ChannelConfig:
    """Deterministic path gain h plus AWGN level, tied by rho = h^2 / n0.

    The constellation has unit average energy, so specifying the SNR in dB
    fixes n0 (and vice versa).
    """

    h: float = 1.0
    snr_db: float = 0.0
    n0: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "n0", self.h**2 / 10.0 ** (self.snr_db / 10.0))

    @classmethod
    def from_n0(cls, n0, h=1.0):
        if n0 <= 0:
            raise ValueError("n0 must be positive")
        return cls(h=h, snr_db=10.0 * math.log10(h**2 / n0))

    @property
    def rho(self):
        return 10.0 ** (self.snr_db / 10.0)


def apply_iqi(x, p):
    """Elementwise k1*x + k2*conj(x)."""
    x = np.asarray(x, dtype=np.complex128)
    return p.k1 * x + p.k2 * np.conj(x)


def awgn(s, ch, rng, n0=None):
    """h*s plus circularly-symmetric complex Gaussian noise of total variance n0.

    Noise is drawn as one standard-normal block of shape (*s.shape, 2) so the
    consumption from ``rng`` is a fixed function of the input shape.  ``n0``
    overrides ch.n0 and may be an array broadcastable against s (used for
    per-row SNR during training).
    """
    s = np.asarray(s, dtype=np.complex128)
    n0 = ch.n0 if n0 is None else np.asarray(n0, dtype=np.float64)
    if (np.asarray(n0) <= 0).any():
        raise ValueError("noise variance must be positive")
    z = rng.standard_normal((*s.shape, 2))
    noise = (z[..., 0] + 1j * z[..., 1]) * np.sqrt(n0 / 2.0)
    return ch.h * s + noise


def transmit_chain(x, tx, rx, ch, rng, n0=None):
    """Full impairment chain: TX IQI, scalar AWGN channel, RX IQI."""
    return apply_iqi(awgn(apply_iqi(x, tx), ch, rng, n0=n0), rx)


def sdnr(tx, rx, rho, conjugate_consistent=True):
    """Signal-to-distortion-plus-noise ratio after both mixers.

    With ``conjugate_consistent`` the coefficients of x and conj(x) come from
    expanding the exact composition rx(h*tx(x) + n):

        signal: k1r*k1t + k2r*conj(k2t),   image: k1r*k2t + k2r*conj(k1t)

    With ``conjugate_consistent=False`` the TX conjugations are dropped,
    which reproduces the commonly quoted closed form; both variants agree
    whenever the TX coefficients are real (theta_t = 0).
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if conjugate_consistent:
        sig = tx.k1 * rx.k1 + rx.k2 * tx.k2.conjugate()
        img = rx.k1 * tx.k2 + rx.k2 * tx.k1.conjugate()
    else:
        sig = rx.k1 * tx.k1 + rx.k2 * tx.k2
        img = rx.k1 * tx.k2 + rx.k2 * tx.k1
    num = abs(sig) ** 2 * rho
    den = abs(img) ** 2 * rho + abs(rx.k1) ** 2 + abs(rx.k2) ** 2
    return num / den
