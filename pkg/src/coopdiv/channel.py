"""Fading/noise models and equivalent channels for the relay network.

Topology: a source S talks to a destination D helped by n-1 intermediate
relays.  `g[i]` is the S->R_i fade and `h[i]` the R_i->D fade, with index 0
reserved for the direct path: g[0] = 1 and h[0] = S->D.  All fades and all
additive noises are unit-variance circularly-symmetric complex Gaussians in
the Rayleigh case, drawn once per frame (quasi-static).

The second-stage equivalent channels used by the decoders:

  * linear-processing relays: row vector H = (g_i h_i) acting on an n x T
    codeword, with effective noise variance 1 + sum_i |h_i|^2 per entry when
    every relay forwards a full unitary-processed vector;
  * dynamic echo relays: block-diagonal G with 2x2 blocks
    [[h1, 0], [h_i g_i, h1]] acting on the un-vectorized square codeword,
    whitened per block by Sigma = diag(1, 1 + |h_i|^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RAYLEIGH = "rayleigh"
GENERAL_IID = "general_iid"

NONCOOP = "noncoop"
NDSDAF = "ndsdaf"
NDRAF = "ndraf"
NDAAF = "ndaaf"
DRAF = "draf"
SCHEME_KINDS = (NONCOOP, NDSDAF, NDRAF, NDAAF, DRAF)

RULE_OUTAGE = "outage_exact"
RULE_DELTA = "delta_threshold"


@dataclass(frozen=True)
class FadingDistribution:
    """Per-coefficient fading law.

    `alpha` is the near-zero tail exponent lim_{t->0} log P(|c|^2 <= t)/log t;
    Rayleigh has alpha = 1.  The general law keeps unit mean square magnitude
    and a uniform phase, with |c|^2 gamma-distributed so the tail exponent is
    exactly alpha.
    """

    kind: str = RAYLEIGH
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in (RAYLEIGH, GENERAL_IID):
            raise ValueError(f"unknown fading kind {self.kind!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.kind == RAYLEIGH:
            return crandn(rng, shape)
        mag2 = rng.gamma(self.alpha, 1.0 / self.alpha, size=shape)
        phase = rng.uniform(0.0, 2.0 * math.pi, size=shape)
        return np.sqrt(mag2) * np.exp(1j * phase)


def rayleigh() -> FadingDistribution:
    return FadingDistribution(RAYLEIGH, 1.0)


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / math.sqrt(2.0)


@dataclass
class FadingRealization:
    """One quasi-static draw of all link coefficients (index 0 = direct path)."""

    g: np.ndarray
    h: np.ndarray

    @property
    def n(self) -> int:
        return len(self.h)

    def phi(self, snr: float) -> np.ndarray:
        """Exponential orders of |h_i|^2 at the given finite snr."""
        with np.errstate(divide="ignore"):
            return -np.log(np.abs(self.h) ** 2) / math.log(snr)

    def xi(self, snr: float) -> np.ndarray:
        """Exponential orders of |g_i|^2 at the given finite snr."""
        with np.errstate(divide="ignore"):
            return -np.log(np.abs(self.g) ** 2) / math.log(snr)


@dataclass
class NoiseDraw:
    """Additive receiver noise: `relay[i, t]` at relay i, `dest[t]` at D."""

    relay: np.ndarray
    dest: np.ndarray


def sample_fading(dist: FadingDistribution, n: int,
                  rng: np.random.Generator) -> FadingRealization:
    """Draw all coefficients i.i.d. from `dist`, with g[0] pinned to 1."""
    if n < 2:
        raise ValueError(f"need n >= 2 links, got {n}")
    g = np.empty(n, dtype=complex)
    g[0] = 1.0
    g[1:] = dist.sample(rng, n - 1)
    h = dist.sample(rng, n)
    return FadingRealization(g=g, h=h)


def sample_noise(n: int, relay_slots: int, dest_slots: int,
                 rng: np.random.Generator) -> NoiseDraw:
    relay = crandn(rng, (n, relay_slots)) if relay_slots else np.zeros((n, 0), complex)
    dest = crandn(rng, dest_slots)
    return NoiseDraw(relay=relay, dest=dest)


def two_product_gains(realization: FadingRealization) -> np.ndarray:
    """Equivalent MISO gains H_i = g_i h_i."""
    return realization.g * realization.h


def effective_noise_variance(h: np.ndarray) -> float:
    """Per-entry variance of the forwarded-noise superposition: 1 + sum |h_i|^2."""
    return 1.0 + float(np.sum(np.abs(h) ** 2))


def lambda_statistic(realization: FadingRealization) -> float:
    """Only nonzero eigenvalue of H H^dag: sum_i |h_i|^2 |g_i|^2."""
    return float(np.sum(np.abs(realization.h) ** 2 * np.abs(realization.g) ** 2))


# ---------------------------------------------------------------------------
# Dynamic (echo) equivalent channel
# ---------------------------------------------------------------------------

def draf_equivalent_channel(realization: FadingRealization, n: int) -> np.ndarray:
    """Block-diagonal 2(n-1) x 2(n-1) matrix with blocks [[h1,0],[h_i g_i, h1]]."""
    if n < 2:
        raise ValueError("need at least one intermediate relay")
    h1 = realization.h[0]
    size = 2 * (n - 1)
    G = np.zeros((size, size), dtype=complex)
    for b in range(n - 1):
        hi = realization.h[b + 1]
        gi = realization.g[b + 1]
        G[2 * b, 2 * b] = h1
        G[2 * b + 1, 2 * b] = hi * gi
        G[2 * b + 1, 2 * b + 1] = h1
    return G


def draf_whiten(G: np.ndarray, observations: np.ndarray,
                h: np.ndarray):
    """Left-multiply each 2-row block by Sigma^{-1}, Sigma = diag(1, 1+|h_i|^2).

    Returns (H_eff, whitened observations, per-row noise variances of the
    whitened model).  Odd rows are untouched; the even row of block i is
    scaled by A = 1/(1+|h_{i+1}|^2), leaving its noise with variance A.
    """
    size = G.shape[0]
    if size % 2 or observations.shape[0] != size:
        raise ValueError("shape mismatch between channel and observations")
    scale = np.ones(size)
    for b in range(size // 2):
        scale[2 * b + 1] = 1.0 / (1.0 + abs(h[b + 1]) ** 2)
    H_eff = G * scale[:, None]
    whitened = observations * scale.reshape(size, *([1] * (observations.ndim - 1)))
    row_vars = scale.copy()  # Var(A * noise) = A^2 (1 + |h|^2) = A
    return H_eff, whitened, row_vars


def draf_mutual_information(realization: FadingRealization, snr: float) -> float:
    """Exact log-det information of one echo frame, in bits per frame.

    Sums log2 det(I_2 + snr * G_i G_i^dag Sigma_i^{-1}) over the per-relay
    2x2 blocks, Sigma_i = diag(1, 1 + |h_i|^2).
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    h1 = realization.h[0]
    total = 0.0
    for i in range(1, realization.n):
        hi = realization.h[i]
        gi = realization.g[i]
        G = np.array([[h1, 0.0], [hi * gi, h1]])
        sigma_inv = np.diag([1.0, 1.0 / (1.0 + abs(hi) ** 2)])
        m = np.eye(2) + snr * (G @ G.conj().T) @ sigma_inv
        det = np.linalg.det(m).real
        total += math.log2(max(det, 1.0))
    return total


# ---------------------------------------------------------------------------
# Relay decision threshold and outage indicators
# ---------------------------------------------------------------------------

def decode_threshold(rule: str, snr: float, stage_rate: float,
                     delta: float, m_squared: int) -> float:
    """|g|^2 threshold above which a relay decodes, for either rule."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    if rule == RULE_OUTAGE:
        return (2.0 ** stage_rate - 1.0) / snr
    if rule == RULE_DELTA:
        if delta <= 0:
            raise ValueError("delta must be positive")
        return delta * (m_squared - 1) / snr
    raise ValueError(f"unknown relay rule {rule!r}")


def multiplexing_gain(rate_bpncu: float, snr: float) -> float:
    """Finite-snr multiplexing gain r = R / log2(snr)."""
    if snr <= 1.0:
        return math.inf
    return rate_bpncu / math.log2(snr)


def cooperation_active(scheme, rate_bpncu: float, snr: float) -> bool:
    """Relays forward only when r < 1/2, unless cooperation is forced.

    The dynamic echo scheme has no silencing rule: its relays always take
    their even-slot turns.
    """
    if scheme.kind == NONCOOP:
        return False
    if scheme.kind == DRAF:
        return True
    if not getattr(scheme, "skip_cooperation_above_r_half", True):
        return True
    return multiplexing_gain(rate_bpncu, snr) < 0.5


def _siso_outage(h1: complex, rate_bpcu: float, snr: float) -> bool:
    return math.log2(1.0 + snr * abs(h1) ** 2) < rate_bpcu


def second_stage_gain(scheme, snr: float) -> float:
    """Multiplexing gain of the n-use equivalent code: the frame's bits,
    spread over the n second-stage uses, normalized by log2(snr)."""
    n = scheme.users - 1
    slots = n * n if getattr(scheme, "code", "") == "full-echo" else 2 * n - 1
    return scheme.rate_bpncu * slots / (n * math.log2(snr))


def outage_indicator(scheme, realization: FadingRealization,
                     rate_bpncu: float, snr: float) -> bool:
    """True iff the scheme's instantaneous mutual information misses its target.

    Rate units: `rate_bpncu` counts bits per network channel use, i.e. all
    slots of the cooperative frame.  Per scheme:

      noncoop  SISO log-det per slot vs rate_bpncu (frame = n direct slots).
      ndsdaf   sum of per-symbol log-dets of the combined direct+echo links
               vs rate_bpncu * (2n-1) bits per frame, with the relay decision
               applied to each echo.
      ndraf    two-product eigenvalue rule: outage iff mu >= 1 - r_chi with
               mu = -ln(lambda)/ln(snr) and r_chi the second-stage gain
               rate_bpncu * (2n-1) / (n log2 snr).
      ndaaf    as ndraf with the amplifier gains b_i^2 weighting the relay
               products.
      draf     echo-frame log-det vs rate_bpncu * 2(n-1) bits per frame.
    """
    kind = scheme.kind
    n = realization.n
    h = realization.h
    g = realization.g

    if kind == NONCOOP:
        return _siso_outage(h[0], rate_bpncu, snr)

    coop = cooperation_active(scheme, rate_bpncu, snr)

    if kind == NDSDAF:
        if not coop:
            return _siso_outage(h[0], rate_bpncu, snr)
        thr = decode_threshold(scheme.relay_rule, snr, scheme.stage_rate,
                               scheme.delta, scheme.m_squared)
        direct = snr * abs(h[0]) ** 2
        bits = math.log2(1.0 + direct)
        for i in range(1, n):
            echo = snr * abs(h[i]) ** 2 if abs(g[i]) ** 2 > thr else 0.0
            bits += math.log2(1.0 + direct + echo)
        return bits < rate_bpncu * (2 * n - 1)

    if kind in (NDRAF, NDAAF):
        if not coop:
            return _siso_outage(h[0], rate_bpncu, snr)
        if kind == NDAAF:
            b2 = snr / (np.abs(g[1:]) ** 2 * snr + 1.0)
            lam = abs(h[0]) ** 2 + float(
                np.sum(b2 * np.abs(g[1:] * h[1:]) ** 2))
        else:
            lam = lambda_statistic(realization)
        if lam <= 0.0:
            return True
        if snr <= 1.0:
            return True
        mu = -math.log(lam) / math.log(snr)
        return mu >= 1.0 - second_stage_gain(scheme, snr)

    if kind == DRAF:
        frame_bits = rate_bpncu * 2 * (n - 1)
        return draf_mutual_information(realization, snr) < frame_bits

    raise ValueError(f"unknown scheme kind {kind!r}")
