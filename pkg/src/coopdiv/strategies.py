"""Executable relay transmission schedules.

Node indexing is zero-based throughout: node 0 is the source (its
relay-to-destination fade h[0] is the direct path; g[0] = 1), nodes
1..n-1 are the intermediate relays.  A network of `users` terminals has
n = users - 1 links.

Schedules (slot counts for n links):

  noncoop  source sends a 1 x n rotated row over n slots; no relays.
  ndsdaf   stage 1 (slots 0..n-1): source broadcasts the rotated row;
           each relay that passes its decision rule ML-decodes the row.
           Stage 2 (slot n+i-1): relay i re-encodes and sends symbol i.
           Total 2n-1 slots; the destination's model is the scheduled
           diagonal code truncated to the rows that actually transmitted.
  ndraf    same 2n-1 slot grid, but relay i simply forwards (scaled by
           b_i) the raw sample it received in slot i, so the echo carries
           the product gain g_i h_i plus forwarded noise.  With a
           dispersion-matrix codebook the relays instead apply their
           unitary A_u to the whole received vector and the second stage
           superposes all rows (n extra slots).
  ndaaf    ndraf with b_i chosen to match the relay's average transmit
           power to the source's.
  draf     source transmits continuously the column-major vectorization
           of a 2(n-1) x 2(n-1) codeword over 2(n-1) frames of 2(n-1)
           slots; relay i echoes, at even in-frame slots, the symbol from
           the immediately preceding odd slot, producing the block
           two-path equivalent channel.

Cooperation is skipped (relays stay silent) when the finite-snr
multiplexing gain r = R/log2(snr) is >= 1/2, unless the configuration
forces cooperation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from .codes import (Codebook, DIAGONAL, INTEGRAL, InvalidParameterError, QAM,
                    diagonal_restricted_code, full_cda_code,
                    horizontally_restricted_code, integral_restriction_code,
                    make_constellation, power_normalizer, truncate_rows,
                    vectorized_code)
from .decoding import DecodeProblem, ml_decode

CODE_AUTO = "auto"


@dataclass
class SchemeConfig:
    """Strategy, code choice and rate bookkeeping for one experiment."""

    kind: str
    users: int
    m_squared: int
    rate_bpncu: float
    code: str = CODE_AUTO
    constellation_kind: str = QAM
    relay_rule: str = ch.RULE_OUTAGE
    delta: float = 1.0
    amplification: float = 1.0
    skip_cooperation_above_r_half: bool = True
    fading: ch.FadingDistribution = field(default_factory=ch.rayleigh)

    def __post_init__(self):
        if self.kind not in ch.SCHEME_KINDS:
            raise InvalidParameterError(f"unknown scheme kind {self.kind!r}")
        if self.users < 3:
            raise InvalidParameterError("need at least 3 users (n >= 2)")
        if self.rate_bpncu <= 0:
            raise InvalidParameterError("rate must be positive")
        if self.relay_rule == ch.RULE_DELTA and self.delta <= 0:
            raise InvalidParameterError("delta must be positive")
        if self.amplification <= 0:
            raise InvalidParameterError("amplification must be positive")

    @property
    def n(self) -> int:
        return self.users - 1

    @property
    def stage_rate(self) -> float:
        """First-stage source rate in bpcu: one constellation symbol per slot."""
        return math.log2(self.m_squared)


def amplification_cap(g_i: complex, snr: float) -> float:
    """Largest b_i that keeps the relay's average transmit power within snr."""
    return math.sqrt(snr / (abs(g_i) ** 2 * snr + 1.0))


def relay_gain(config: SchemeConfig, g_i: complex, snr: float) -> float:
    if config.kind == ch.NDAAF:
        return amplification_cap(g_i, snr)
    return config.amplification


def ndsdaf_relay_decision(rule: str, g_i: complex, stage_rate: float,
                          snr: float, m_squared: int,
                          delta: float = 1.0) -> bool:
    """Decode-and-forward gate: outage-exact or delta-threshold form."""
    thr = ch.decode_threshold(rule, snr, stage_rate, delta, m_squared)
    return abs(g_i) ** 2 > thr


def build_codebooks(config: SchemeConfig) -> dict[str, Codebook]:
    """Default codebooks per scheme (shared constellation and symbol map)."""
    n = config.n
    const = make_constellation(config.constellation_kind, config.m_squared)
    if config.kind == ch.NONCOOP:
        return {"first": horizontally_restricted_code(n, const)}
    if config.kind == ch.NDSDAF:
        return {"first": horizontally_restricted_code(n, const),
                "second": diagonal_restricted_code(n, const)}
    if config.kind in (ch.NDRAF, ch.NDAAF):
        if config.code == "integral":
            return {"second": integral_restriction_code(n, const)}
        return {"second": diagonal_restricted_code(n, const)}
    if config.kind == ch.DRAF:
        return {"block": full_cda_code(2 * (n - 1), const)}
    raise InvalidParameterError(config.kind)


def expand_diagonal_schedule(diag: Codebook) -> Codebook:
    """n x (2n-1) scheduled form of the diagonal code.

    Row 0 is the full rotated row (sent by the source over the first n
    slots); row i places symbol i in echo slot n+i-1.  Truncating rows
    reproduces the codes seen when relays stay silent.
    """
    if diag.variant != DIAGONAL or diag.n != diag.T:
        raise InvalidParameterError("expected a square diagonal-restricted code")
    n = diag.n
    basis = np.zeros((diag.info_symbols_per_matrix, n, 2 * n - 1), dtype=complex)
    rows = diag.generator.matrix
    for j in range(diag.info_symbols_per_matrix):
        basis[j, 0, :n] = rows[j]
        for i in range(1, n):
            basis[j, i, n + i - 1] = rows[j, i]
    return Codebook(variant=DIAGONAL, n=n, T=2 * n - 1,
                    constellation=diag.constellation, basis=basis,
                    generator=diag.generator)


def expand_full_echo_schedule(diag: Codebook) -> Codebook:
    """n x n^2 scheduled form where each relay repeats the whole row.

    Row 0 carries the rotated row over the first n slots; row i repeats it
    over the relay's own n-slot block (identity vector processing), the
    n=2 case being the 2x4 block form of the diagonal code.
    """
    if diag.variant != DIAGONAL or diag.n != diag.T:
        raise InvalidParameterError("expected a square diagonal-restricted code")
    n = diag.n
    basis = np.zeros((diag.info_symbols_per_matrix, n, n * n), dtype=complex)
    rows = diag.generator.matrix
    for j in range(diag.info_symbols_per_matrix):
        basis[j, 0, :n] = rows[j]
        for i in range(1, n):
            basis[j, i, n * i:n * (i + 1)] = rows[j]
    return Codebook(variant=DIAGONAL, n=n, T=n * n,
                    constellation=diag.constellation, basis=basis,
                    generator=diag.generator)


@dataclass
class FrameTranscript:
    """Everything one simulated frame produced, ready for decoding."""

    scheme: str
    transmitted_index: int
    cooperating: bool
    slots: int
    theta: float
    transmitted: np.ndarray        # (nodes, slots) signals on the air
    relay_received: np.ndarray     # (nodes, stage-1 slots); row 0 unused
    dest_received: np.ndarray      # every slot heard at the destination
    decisions: tuple[int, ...]     # relay indices that forwarded
    equivalent_channel: np.ndarray
    equivalent_codebook: Codebook
    observations: np.ndarray       # the subset/arrangement fed to the decoder
    noise_variance_profile: np.ndarray

    def decode_problem(self) -> DecodeProblem:
        return DecodeProblem(equivalent_channel=self.equivalent_channel,
                             observations=self.observations,
                             codebook=self.equivalent_codebook,
                             theta=self.theta,
                             noise_variance_profile=self.noise_variance_profile)

    def decode(self) -> int:
        return ml_decode(self.decode_problem())

    def to_json(self) -> dict:
        def cplx(a):
            arr = np.asarray(a)
            return np.stack([arr.real, arr.imag], axis=-1).tolist()
        return {
            "scheme": self.scheme,
            "transmitted_index": self.transmitted_index,
            "cooperating": self.cooperating,
            "slots": self.slots,
            "theta": self.theta,
            "transmitted": cplx(self.transmitted),
            "dest_received": cplx(self.dest_received),
            "decisions": list(self.decisions),
            "equivalent_channel": cplx(self.equivalent_channel),
            "observations": cplx(self.observations),
            "noise_variance_profile": np.asarray(
                self.noise_variance_profile, dtype=float).ravel().tolist(),
        }


def _noncoop_transcript(config, hor, realization, noise, snr, info_index,
                        scheme_label, cooperating=False):
    n = config.n
    theta = power_normalizer(hor, snr)
    z = hor.codeword(info_index)[0]
    transmitted = np.zeros((n, n), dtype=complex)
    transmitted[0] = theta * z
    dest = theta * realization.h[0] * z + noise.dest[:n]
    return FrameTranscript(
        scheme=scheme_label, transmitted_index=info_index,
        cooperating=cooperating, slots=n, theta=theta,
        transmitted=transmitted, relay_received=np.zeros((n, 0), complex),
        dest_received=dest, decisions=(),
        equivalent_channel=np.array([[realization.h[0]]]),
        equivalent_codebook=hor, observations=dest,
        noise_variance_profile=np.ones(n))


def run_noncoop_frame(config: SchemeConfig, codebooks, realization,
                      noise, snr: float, info_index: int) -> FrameTranscript:
    return _noncoop_transcript(config, codebooks["first"], realization, noise,
                               snr, info_index, ch.NONCOOP)


def run_ndsdaf_frame(config: SchemeConfig, codebooks, realization,
                     noise, snr: float, info_index: int) -> FrameTranscript:
    """Selection decode-and-forward frame with real relay-side ML decoding.

    Relay decoding errors propagate: a relay that passes its gate but
    decodes the wrong row re-encodes the wrong symbol.
    """
    hor, diag = codebooks["first"], codebooks["second"]
    if (hor.T != diag.T
            or hor.constellation.kind != diag.constellation.kind
            or hor.constellation.size != diag.constellation.size):
        raise InvalidParameterError("stage codebooks must share symbols and n")
    n = config.n
    theta = power_normalizer(hor, snr)
    coop = ch.cooperation_active(config, config.rate_bpncu, snr)
    if not coop:
        return _noncoop_transcript(config, hor, realization, noise, snr,
                                   info_index, ch.NDSDAF)
    g, h = realization.g, realization.h
    z = hor.codeword(info_index)[0]
    slots = 2 * n - 1
    transmitted = np.zeros((n, slots), dtype=complex)
    transmitted[0, :n] = theta * z
    relay_rx = np.zeros((n, n), dtype=complex)
    relay_rx[1:] = theta * g[1:, None] * z[None, :] + noise.relay[1:, :n]
    dest = np.empty(slots, dtype=complex)
    dest[:n] = theta * h[0] * z + noise.dest[:n]
    dest[n:] = noise.dest[n:slots]

    decisions = []
    for i in range(1, n):
        if not ndsdaf_relay_decision(config.relay_rule, g[i],
                                     config.stage_rate, snr,
                                     config.m_squared, config.delta):
            continue
        decoded = ml_decode(DecodeProblem(
            equivalent_channel=np.array([[g[i]]]), observations=relay_rx[i],
            codebook=hor, theta=theta, noise_variance_profile=np.ones(n)))
        zi = hor.codeword(decoded)[0, i]
        decisions.append(i)
        transmitted[i, n + i - 1] = theta * zi
        dest[n + i - 1] += theta * h[i] * zi

    kept = (1,) + tuple(i + 1 for i in decisions)
    eq_book = truncate_rows(expand_diagonal_schedule(diag), kept)
    eq_channel = np.array([[h[0]] + [h[i] for i in decisions]])
    return FrameTranscript(
        scheme=ch.NDSDAF, transmitted_index=info_index, cooperating=True,
        slots=slots, theta=theta, transmitted=transmitted,
        relay_received=relay_rx, dest_received=dest,
        decisions=tuple(decisions), equivalent_channel=eq_channel,
        equivalent_codebook=eq_book, observations=dest,
        noise_variance_profile=np.ones(slots))


def run_ndraf_frame(config: SchemeConfig, codebook: Codebook, realization,
                    noise, snr: float, info_index: int) -> FrameTranscript:
    """Receive-and-forward frame (no decoding, no channel knowledge at relays)."""
    if codebook.variant == DIAGONAL:
        if config.code == "full-echo":
            return _ndraf_full_echo_frame(config, codebook, realization,
                                          noise, snr, info_index)
        return _ndraf_echo_frame(config, codebook, realization, noise, snr,
                                 info_index)
    if codebook.dispersion is not None and codebook.variant == INTEGRAL:
        return _ndraf_dispersion_frame(config, codebook, realization, noise,
                                       snr, info_index)
    raise InvalidParameterError(
        "receive-and-forward needs a diagonal code or dispersion matrices")


def _ndraf_echo_frame(config, diag, realization, noise, snr, info_index):
    n = config.n
    scheme = config.kind
    coop = ch.cooperation_active(config, config.rate_bpncu, snr)
    hor = horizontally_restricted_code(n, diag.constellation)
    if not coop:
        return _noncoop_transcript(config, hor, realization, noise, snr,
                                   info_index, scheme)
    theta = power_normalizer(hor, snr)
    g, h = realization.g, realization.h
    z = np.diagonal(diag.codeword(info_index)).copy()
    slots = 2 * n - 1
    transmitted = np.zeros((n, slots), dtype=complex)
    transmitted[0, :n] = theta * z
    relay_rx = np.zeros((n, n), dtype=complex)
    relay_rx[1:] = theta * g[1:, None] * z[None, :] + noise.relay[1:, :n]
    dest = np.empty(slots, dtype=complex)
    dest[:n] = theta * h[0] * z + noise.dest[:n]
    variances = np.ones(slots)
    gains = [h[0]]
    for i in range(1, n):
        b = relay_gain(config, g[i], snr)
        echo = b * relay_rx[i, i]
        transmitted[i, n + i - 1] = echo
        dest[n + i - 1] = h[i] * echo + noise.dest[n + i - 1]
        variances[n + i - 1] = 1.0 + b * b * abs(h[i]) ** 2
        gains.append(b * g[i] * h[i])
    eq_book = expand_diagonal_schedule(diag)
    return FrameTranscript(
        scheme=scheme, transmitted_index=info_index, cooperating=True,
        slots=slots, theta=theta, transmitted=transmitted,
        relay_received=relay_rx, dest_received=dest,
        decisions=tuple(range(1, n)), equivalent_channel=np.array([gains]),
        equivalent_codebook=eq_book, observations=dest,
        noise_variance_profile=variances)


def _ndraf_full_echo_frame(config, diag, realization, noise, snr, info_index):
    # each relay forwards its entire received vector (identity processing)
    # in its own n-slot block; 2x4 block form of the diagonal code at n=2
    n = config.n
    coop = ch.cooperation_active(config, config.rate_bpncu, snr)
    hor = horizontally_restricted_code(n, diag.constellation)
    if not coop:
        return _noncoop_transcript(config, hor, realization, noise, snr,
                                   info_index, config.kind)
    theta = power_normalizer(hor, snr)
    g, h = realization.g, realization.h
    z = np.diagonal(diag.codeword(info_index)).copy()
    slots = n * n
    transmitted = np.zeros((n, slots), dtype=complex)
    transmitted[0, :n] = theta * z
    relay_rx = np.zeros((n, n), dtype=complex)
    relay_rx[1:] = theta * g[1:, None] * z[None, :] + noise.relay[1:, :n]
    dest = np.empty(slots, dtype=complex)
    dest[:n] = theta * h[0] * z + noise.dest[:n]
    variances = np.ones(slots)
    gains = [h[0]]
    for i in range(1, n):
        b = relay_gain(config, g[i], snr)
        echo = b * relay_rx[i]
        block = slice(n * i, n * (i + 1))
        transmitted[i, block] = echo
        dest[block] = h[i] * echo + noise.dest[block]
        variances[block] = 1.0 + b * b * abs(h[i]) ** 2
        gains.append(b * g[i] * h[i])
    eq_book = expand_full_echo_schedule(diag)
    return FrameTranscript(
        scheme=config.kind, transmitted_index=info_index, cooperating=True,
        slots=slots, theta=theta, transmitted=transmitted,
        relay_received=relay_rx, dest_received=dest,
        decisions=tuple(range(1, n)), equivalent_channel=np.array([gains]),
        equivalent_codebook=eq_book, observations=dest,
        noise_variance_profile=variances)


def _ndraf_dispersion_frame(config, codebook, realization, noise, snr,
                            info_index):
    # Row u of the codeword is z @ A_u for the raw transmitted row z; the
    # node owning the identity dispersion matrix is the source itself, so
    # its row reaches D through h[0] with no forwarded noise.
    n = config.n
    if codebook.n != n:
        raise InvalidParameterError("codebook size does not match user count")
    raw = codebook.raw_row
    if raw is None or np.max(np.abs(codebook.dispersion[raw] - np.eye(n))) > 1e-12:
        raise InvalidParameterError("need an identity dispersion row")
    theta = power_normalizer(codebook, snr)
    g, h = realization.g, realization.h
    X = codebook.codeword(info_index)
    z = X[raw].copy()
    slots = 2 * n
    transmitted = np.zeros((n, slots), dtype=complex)
    transmitted[0, :n] = theta * z
    relay_rx = np.zeros((n, n), dtype=complex)
    relay_rx[1:] = theta * g[1:, None] * z[None, :] + noise.relay[1:, :n]

    # map dispersion rows to nodes: row `raw` -> source, remaining rows in
    # order -> relays 1..n-1
    relay_rows = [u for u in range(n) if u != raw]
    y2 = noise.dest[n:slots].copy()
    gains = np.zeros(n, dtype=complex)
    gains[raw] = h[0]
    var = 1.0
    y2 += theta * h[0] * (z @ codebook.dispersion[raw])
    transmitted[0, n:] = theta * (z @ codebook.dispersion[raw])
    for node, u in enumerate(relay_rows, start=1):
        b = relay_gain(config, g[node], snr)
        x_u = b * (relay_rx[node] @ codebook.dispersion[u])
        transmitted[node, n:] = x_u
        y2 += h[node] * x_u
        gains[u] = b * g[node] * h[node]
        var += b * b * abs(h[node]) ** 2
    dest = np.concatenate([theta * h[0] * z + noise.dest[:n], y2])
    return FrameTranscript(
        scheme=config.kind, transmitted_index=info_index, cooperating=True,
        slots=slots, theta=theta, transmitted=transmitted,
        relay_received=relay_rx, dest_received=dest,
        decisions=tuple(range(1, n)),
        equivalent_channel=gains[None, :],
        equivalent_codebook=codebook, observations=y2[None, :],
        noise_variance_profile=np.full(n, var))


def run_draf_frame(config: SchemeConfig, codebook: Codebook, realization,
                   noise, snr: float, info_index: int) -> FrameTranscript:
    """Dynamic receive-and-forward: continuous source + scheduled echoes.

    The 2(n-1) x 2(n-1) codeword is sent column by column (one column per
    frame, one entry per slot).  Relay i echoes, scaled by b_i, the symbol
    it heard in the odd slot preceding its even slot, giving per frame the
    block channel [[h1, 0], [b_i h_i g_i, h1]] stacked over relays.
    """
    n = config.n
    L = 2 * (n - 1)
    if codebook.n != L or codebook.T != L:
        raise InvalidParameterError(
            f"dynamic scheme for n={n} needs a {L}x{L} codebook")
    theta = power_normalizer(vectorized_code(codebook), snr)
    g, h = realization.g, realization.h
    X = codebook.codeword(info_index)
    slots = L * L
    transmitted = np.zeros((n, slots), dtype=complex)
    dest = np.empty(slots, dtype=complex)
    row_vars = np.ones(L)
    G = ch.draf_equivalent_channel(realization, n)
    for j in range(1, n):
        b = relay_gain(config, g[j], snr)
        G[2 * j - 1, 2 * j - 2] *= b
        row_vars[2 * j - 1] = 1.0 + b * b * abs(h[j]) ** 2
    for k in range(L):  # frame index = codeword column
        base = k * L
        for t in range(L):
            x = theta * X[t, k]
            transmitted[0, base + t] = x
            if t % 2 == 0:
                dest[base + t] = h[0] * x + noise.dest[base + t]
            else:
                j = (t + 1) // 2  # relay node echoing in this slot
                b = relay_gain(config, g[j], snr)
                rx = theta * g[j] * X[t - 1, k] + noise.relay[j, k]
                transmitted[j, base + t] = b * rx
                dest[base + t] = h[j] * b * rx + h[0] * x + noise.dest[base + t]
    Y = dest.reshape(L, L, order="F")
    return FrameTranscript(
        scheme=ch.DRAF, transmitted_index=info_index, cooperating=True,
        slots=slots, theta=theta, transmitted=transmitted,
        relay_received=np.zeros((n, 0), complex), dest_received=dest,
        decisions=tuple(range(1, n)), equivalent_channel=G,
        equivalent_codebook=codebook, observations=Y,
        noise_variance_profile=row_vars[:, None])


def run_frame(config: SchemeConfig, codebooks: dict, realization, noise,
              snr: float, info_index: int) -> FrameTranscript:
    """Dispatch one frame for any scheme kind."""
    if config.kind == ch.NONCOOP:
        return run_noncoop_frame(config, codebooks, realization, noise, snr,
                                 info_index)
    if config.kind == ch.NDSDAF:
        return run_ndsdaf_frame(config, codebooks, realization, noise, snr,
                                info_index)
    if config.kind in (ch.NDRAF, ch.NDAAF):
        return run_ndraf_frame(config, codebooks["second"], realization,
                               noise, snr, info_index)
    if config.kind == ch.DRAF:
        return run_draf_frame(config, codebooks["block"], realization, noise,
                              snr, info_index)
    raise InvalidParameterError(config.kind)


def noise_shape(config: SchemeConfig, cooperating: bool) -> tuple[int, int]:
    """(relay slots, destination slots) one frame consumes."""
    n = config.n
    if config.kind == ch.NONCOOP or not cooperating:
        return (n, n)
    if config.kind == ch.NDSDAF:
        return (n, 2 * n - 1)
    if config.kind in (ch.NDRAF, ch.NDAAF):
        if config.code == "integral":
            return (n, 2 * n)
        if config.code == "full-echo":
            return (n, n * n)
        return (n, 2 * n - 1)
    if config.kind == ch.DRAF:
        L = 2 * (n - 1)
        return (L, L * L)
    raise InvalidParameterError(config.kind)


def network_rate_accounting(kind: str, n: int, code: str = CODE_AUTO) -> dict:
    """Slot/symbol accounting converting constellation bits to bpncu.

    `bpncu_per_constellation_bit` multiplied by log2(M^2) is the network
    rate the scheme sustains when cooperating.  The full-echo variant of
    receive-and-forward spends an n-slot block per relay (n^2 slots total);
    the default single-sample echo fits the minimum 2n-1 slots.
    """
    if kind == ch.NONCOOP:
        slots, symbols = n, n
    elif kind in (ch.NDSDAF, ch.NDRAF, ch.NDAAF):
        if kind != ch.NDSDAF and code == "full-echo":
            slots, symbols = n * n, n
        else:
            slots, symbols = 2 * n - 1, n
    elif kind == ch.DRAF:
        slots = symbols = 4 * (n - 1) ** 2
    else:
        raise InvalidParameterError(f"unknown scheme kind {kind!r}")
    return {
        "slots_per_frame": slots,
        "info_symbols": symbols,
        "bpncu_per_constellation_bit": symbols / slots,
        "slots_noncooperating": n,
    }


def max_network_rate(kind: str, n: int, m_squared: int,
                     code: str = CODE_AUTO) -> float:
    acct = network_rate_accounting(kind, n, code)
    return acct["bpncu_per_constellation_bit"] * math.log2(m_squared)
