"""Monte Carlo frame-error and outage estimation.

Trials are simulated in vectorized chunks: all randomness for a chunk is
drawn up front in a fixed order (message indices, source-relay fades,
relay-destination fades, relay noise, destination noise), then the frame
model and exhaustive ML decision run as array operations.  The per-frame
reference implementations in `strategies` consume the same draws, so chunked
and frame-by-frame execution produce identical error patterns.

Seeding: the root seed spawns one child per SNR point and each point spawns
one grandchild per chunk, so results are reproducible bit-for-bit and
independent of how chunks are distributed over workers (counts merge by
addition).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import channel as ch
from .codes import Codebook
from .decoding import DECODE_BUDGET, DecodeBudgetError
from .strategies import SchemeConfig, build_codebooks, noise_shape

WORKERS_ENV = "COOPDIV_WORKERS"
DEFAULT_CHUNK = 4096


class InsufficientErrorsError(ValueError):
    """Raised when too few errors exist to regress a diversity slope."""


@dataclass
class TrialBatch:
    """Counts for one SNR grid point."""

    snr_db: float
    trials: int
    frame_errors: int
    outages: int
    errors_no_outage: int
    seed: int
    snr_total_db: float  # SNR re-expressed against measured total power/slot

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials if self.trials else math.nan

    @property
    def pout(self) -> float:
        return self.outages / self.trials if self.trials else math.nan


@dataclass
class TrialInputs:
    """One chunk of pre-drawn randomness (see module docstring for order)."""

    indices: np.ndarray
    g: np.ndarray
    h: np.ndarray
    relay_noise: np.ndarray
    dest_noise: np.ndarray

    def realization(self, t: int) -> ch.FadingRealization:
        return ch.FadingRealization(g=self.g[t].copy(), h=self.h[t].copy())

    def noise(self, t: int) -> ch.NoiseDraw:
        return ch.NoiseDraw(relay=self.relay_noise[t].copy(),
                            dest=self.dest_noise[t].copy())


def draw_trial_inputs(config: SchemeConfig, codebook_size: int,
                      cooperating: bool, rng: np.random.Generator,
                      count: int, noiseless: bool = False) -> TrialInputs:
    n = config.n
    lr, ld = noise_shape(config, cooperating)
    indices = rng.integers(0, codebook_size, size=count)
    g = np.ones((count, n), dtype=complex)
    g[:, 1:] = config.fading.sample(rng, (count, n - 1))
    h = config.fading.sample(rng, (count, n))
    relay_noise = ch.crandn(rng, (count, n, lr))
    dest_noise = ch.crandn(rng, (count, ld))
    if noiseless:
        relay_noise = np.zeros_like(relay_noise)
        dest_noise = np.zeros_like(dest_noise)
    return TrialInputs(indices=indices, g=g, h=h, relay_noise=relay_noise,
                       dest_noise=dest_noise)


# ---------------------------------------------------------------------------
# ML metric helper
# ---------------------------------------------------------------------------

def _metric_terms(theta: float, terms, count: int, k: int) -> np.ndarray:
    """Accumulate sum_slots |y - theta*coeff*col|^2 / var, dropping the
    codeword-independent |y|^2 part.

    Each term is (y, coeff, cols, inv_var): y and coeff per trial (C,),
    cols per codeword (K,), inv_var per trial (C,) or scalar.
    """
    metric = np.zeros((count, k))
    for y, coeff, cols, inv_var in terms:
        a = y * np.conj(coeff) * inv_var
        metric -= 2.0 * theta * np.real(a[:, None] * np.conj(cols)[None, :])
        metric += ((theta ** 2) * np.abs(coeff) ** 2 * inv_var)[:, None] \
            * (np.abs(cols) ** 2)[None, :]
    return metric


def _horizontal_rows(book: Codebook) -> np.ndarray:
    return book.all_codewords()[:, 0, :]


# ---------------------------------------------------------------------------
# Per-scheme chunk kernels: return (error flags, outage flags, energy sum)
# ---------------------------------------------------------------------------

class _Context:
    """Per-config cache of codebooks and materialized codeword arrays."""

    def __init__(self, config: SchemeConfig):
        self.config = config
        self.books = build_codebooks(config)
        self.square = None
        self.z_rows = None
        self.size = self.main_codebook().size
        if self.size > DECODE_BUDGET:
            return  # frame runners still work; batched ML will refuse
        if config.kind in (ch.NONCOOP, ch.NDSDAF):
            self.z_rows = _horizontal_rows(self.books["first"])
        elif config.kind in (ch.NDRAF, ch.NDAAF):
            book = self.books["second"]
            if book.variant == "integral_restricted":
                self.square = book.all_codewords()
                self.raw_row = book.raw_row
                self.dispersion = np.stack(book.dispersion)
            else:
                self.z_rows = np.stack(
                    [np.diagonal(w).copy() for w in book.all_codewords()])
        elif config.kind == ch.DRAF:
            self.square = self.books["block"].all_codewords()

    def siso_rows(self) -> np.ndarray:
        """1 x n rows the source sends when relays stay silent."""
        if self.z_rows is not None:
            return self.z_rows
        return self.square[:, self.raw_row, :]

    def main_codebook(self) -> Codebook:
        key = {"noncoop": "first", "ndsdaf": "first",
               "ndraf": "second", "ndaaf": "second", "draf": "block"}
        return self.books[key[self.config.kind]]

    def theta(self, snr: float) -> float:
        from .codes import power_normalizer, vectorized_code
        if self.config.kind == ch.DRAF:
            return power_normalizer(vectorized_code(self.books["block"]), snr)
        if self.config.kind in (ch.NDRAF, ch.NDAAF) \
                and self.books["second"].variant == "integral_restricted":
            return power_normalizer(self.books["second"], snr)
        book = self.books.get("first") or self.books["second"]
        return power_normalizer(book, snr)


def _noncoop_chunk(ctx: _Context, snr: float, x: TrialInputs):
    cfg = ctx.config
    n = cfg.n
    theta = ctx.theta(snr)
    Z = ctx.siso_rows()
    C = len(x.indices)
    z = Z[x.indices]
    h1 = x.h[:, 0]
    y = theta * h1[:, None] * z + x.dest_noise[:, :n]
    terms = [(y[:, t], h1, Z[:, t], 1.0) for t in range(n)]
    decoded = np.argmin(_metric_terms(theta, terms, C, len(Z)), axis=1)
    errors = decoded != x.indices
    outage = np.log2(1.0 + snr * np.abs(h1) ** 2) < cfg.rate_bpncu
    energy = float(np.sum(np.abs(theta * z) ** 2))
    return errors, outage, energy, n


def _ndsdaf_chunk(ctx: _Context, snr: float, x: TrialInputs):
    cfg = ctx.config
    n = cfg.n
    theta = ctx.theta(snr)
    Z = ctx.z_rows
    K = len(Z)
    C = len(x.indices)
    z = Z[x.indices]
    h1 = x.h[:, 0]
    slots = 2 * n - 1
    thr = ch.decode_threshold(cfg.relay_rule, snr, cfg.stage_rate, cfg.delta,
                              cfg.m_squared)

    y_direct = theta * h1[:, None] * z + x.dest_noise[:, :n]
    terms = [(y_direct[:, t], h1, Z[:, t], 1.0) for t in range(n)]
    energy = float(np.sum(np.abs(theta * z) ** 2))

    direct_snr = snr * np.abs(h1) ** 2
    bits = np.log2(1.0 + direct_snr)

    for i in range(1, n):
        gi = x.g[:, i]
        hi = x.h[:, i]
        decides = np.abs(gi) ** 2 > thr
        # relay-side ML over its own stage-1 observation
        robs = theta * gi[:, None] * z + x.relay_noise[:, i, :n]
        rterms = [(robs[:, t], gi, Z[:, t], 1.0) for t in range(n)]
        rdec = np.argmin(_metric_terms(theta, rterms, C, K), axis=1)
        zsym = Z[rdec, i]  # possibly wrong symbol: relay errors propagate
        tx = np.where(decides, theta * zsym, 0.0)
        y_echo = hi * tx + x.dest_noise[:, n + i - 1]
        terms.append((y_echo, np.where(decides, hi, 0.0), Z[:, i], 1.0))
        energy += float(np.sum(np.abs(tx) ** 2))
        bits += np.log2(1.0 + direct_snr
                        + np.where(decides, snr * np.abs(hi) ** 2, 0.0))

    decoded = np.argmin(_metric_terms(theta, terms, C, K), axis=1)
    errors = decoded != x.indices
    outage = bits < cfg.rate_bpncu * slots
    return errors, outage, energy, slots


def _ndraf_echo_chunk(ctx: _Context, snr: float, x: TrialInputs):
    cfg = ctx.config
    n = cfg.n
    theta = ctx.theta(snr)
    Z = ctx.z_rows
    K = len(Z)
    C = len(x.indices)
    z = Z[x.indices]
    h1 = x.h[:, 0]
    full_echo = cfg.code == "full-echo"
    slots = n * n if full_echo else 2 * n - 1

    y_direct = theta * h1[:, None] * z + x.dest_noise[:, :n]
    terms = [(y_direct[:, t], h1, Z[:, t], 1.0) for t in range(n)]
    energy = float(np.sum(np.abs(theta * z) ** 2))
    lam = np.abs(h1) ** 2

    for i in range(1, n):
        gi = x.g[:, i]
        hi = x.h[:, i]
        if cfg.kind == ch.NDAAF:
            b = np.sqrt(snr / (np.abs(gi) ** 2 * snr + 1.0))
        else:
            b = np.full(C, cfg.amplification)
        var = 1.0 + b ** 2 * np.abs(hi) ** 2
        if full_echo:
            for t in range(n):
                echo = b * (theta * gi * z[:, t] + x.relay_noise[:, i, t])
                y_echo = hi * echo + x.dest_noise[:, n * i + t]
                terms.append((y_echo, b * gi * hi, Z[:, t], 1.0 / var))
                energy += float(np.sum(np.abs(echo) ** 2))
        else:
            echo = b * (theta * gi * z[:, i] + x.relay_noise[:, i, i])
            y_echo = hi * echo + x.dest_noise[:, n + i - 1]
            terms.append((y_echo, b * gi * hi, Z[:, i], 1.0 / var))
            energy += float(np.sum(np.abs(echo) ** 2))
        lam = lam + b ** 2 * np.abs(gi * hi) ** 2

    decoded = np.argmin(_metric_terms(theta, terms, C, K), axis=1)
    errors = decoded != x.indices
    r_chi = ch.second_stage_gain(cfg, snr) if snr > 1 else math.inf
    with np.errstate(divide="ignore"):
        mu = np.where(lam > 0, -np.log(np.maximum(lam, 1e-300)), np.inf) \
            / math.log(snr)
    outage = mu >= 1.0 - r_chi
    return errors, outage, energy, slots


def _ndraf_dispersion_chunk(ctx: _Context, snr: float, x: TrialInputs):
    cfg = ctx.config
    n = cfg.n
    theta = ctx.theta(snr)
    X = ctx.square            # (K, n, n)
    A = ctx.dispersion        # (n, n, n): A[u]
    raw = ctx.raw_row
    K = len(X)
    C = len(x.indices)
    z = X[x.indices, raw, :]  # raw transmitted row
    h1 = x.h[:, 0]

    relay_rows = [u for u in range(n) if u != raw]
    gains = np.zeros((C, n), dtype=complex)
    gains[:, raw] = h1
    var = np.ones(C)
    y2 = x.dest_noise[:, n:2 * n].copy()
    y2 += theta * h1[:, None] * (z @ A[raw])
    energy = float(np.sum(np.abs(theta * z) ** 2))  # stage 1
    energy += float(np.sum(np.abs(theta * (z @ A[raw])) ** 2))
    lam = np.abs(h1) ** 2
    for node, u in enumerate(relay_rows, start=1):
        gi = x.g[:, node]
        hi = x.h[:, node]
        if cfg.kind == ch.NDAAF:
            b = np.sqrt(snr / (np.abs(gi) ** 2 * snr + 1.0))
        else:
            b = np.full(C, cfg.amplification)
        rx = theta * gi[:, None] * z + x.relay_noise[:, node, :n]
        xu = b[:, None] * (rx @ A[u])
        y2 += hi[:, None] * xu
        gains[:, u] = b * gi * hi
        var += b ** 2 * np.abs(hi) ** 2
        energy += float(np.sum(np.abs(xu) ** 2))
        lam = lam + b ** 2 * np.abs(gi * hi) ** 2

    # joint ML: model = theta * gains @ X_k, per-trial white variance
    model = np.einsum("cu,kut->ckt", gains, X)
    diff = np.abs(y2[:, None, :] - theta * model) ** 2
    metric = diff.sum(axis=2) / var[:, None]
    decoded = np.argmin(metric, axis=1)
    errors = decoded != x.indices
    slots = 2 * n
    r_chi = cfg.rate_bpncu * (2 * n - 1) / (n * math.log2(snr)) \
        if snr > 1 else math.inf
    mu = -np.log(np.maximum(lam, 1e-300)) / math.log(snr)
    outage = mu >= 1.0 - r_chi
    return errors, outage, energy, slots


def _draf_chunk(ctx: _Context, snr: float, x: TrialInputs):
    cfg = ctx.config
    n = cfg.n
    L = 2 * (n - 1)
    theta = ctx.theta(snr)
    X = ctx.square  # (K, L, L)
    K = len(X)
    C = len(x.indices)
    h1 = x.h[:, 0]
    Xw = X[x.indices]

    # per-trial block channel and row variances
    G = np.zeros((C, L, L), dtype=complex)
    row_var = np.ones((C, L))
    energy = float(np.sum(np.abs(theta * Xw) ** 2))  # source, one entry/slot
    for j in range(1, n):
        gj = x.g[:, j]
        hj = x.h[:, j]
        b = cfg.amplification
        G[:, 2 * j - 2, 2 * j - 2] = h1
        G[:, 2 * j - 1, 2 * j - 2] = b * hj * gj
        G[:, 2 * j - 1, 2 * j - 1] = h1
        row_var[:, 2 * j - 1] = 1.0 + b * b * np.abs(hj) ** 2

    # observations Y[c, t, k_frame]
    noise_eff = x.dest_noise.reshape(C, L, L, order="F").copy()
    for j in range(1, n):
        b = cfg.amplification
        noise_eff[:, 2 * j - 1, :] += b * x.h[:, j][:, None] \
            * x.relay_noise[:, j, :L]
        energy += float(np.sum(np.abs(
            b * (theta * x.g[:, j][:, None] * Xw[:, 2 * j - 2, :]
                 + x.relay_noise[:, j, :L])) ** 2))
    Y = theta * np.einsum("ctu,cuk->ctk", G, Xw) + noise_eff

    # expanded |Y - theta G X|^2 metric: model row t is h1 X[t] (+ for echo
    # rows, bgh X[t-1]), so the codeword-dependent part reduces to matmuls
    inv_var = 1.0 / row_var                       # (C, L)
    Xc = np.conj(X.reshape(K, L * L))
    abs2 = (np.abs(X) ** 2)                       # (K, L, L)
    energy_rows = abs2.sum(axis=2)                # (K, L): sum over frames
    S1 = (Y * inv_var[:, :, None]).reshape(C, L * L) @ Xc.T
    metric = -2.0 * theta * np.real(np.conj(h1)[:, None] * S1)
    metric += (theta ** 2 * np.abs(h1) ** 2)[:, None] \
        * (inv_var @ energy_rows.T)
    for j in range(1, n):
        b = cfg.amplification
        bgh = b * x.h[:, j] * x.g[:, j]
        iv = inv_var[:, 2 * j - 1]
        y_row = Y[:, 2 * j - 1, :]
        x_prev = X[:, 2 * j - 2, :]
        s2 = (y_row * iv[:, None]) @ np.conj(x_prev).T
        metric -= 2.0 * theta * np.real(np.conj(bgh)[:, None] * s2)
        metric += (theta ** 2 * np.abs(bgh) ** 2 * iv)[:, None] \
            * energy_rows[:, 2 * j - 2][None, :]
        q = np.sum(X[:, 2 * j - 1, :] * np.conj(x_prev), axis=1)
        metric += 2.0 * theta ** 2 * np.real(
            (h1 * np.conj(bgh) * iv)[:, None] * q[None, :])
    decoded = np.argmin(metric, axis=1)
    errors = decoded != x.indices

    # frame log-det information vs R * 2(n-1) bits
    bits = np.zeros(C)
    ah1 = np.abs(h1) ** 2
    for j in range(1, n):
        b = cfg.amplification
        abg = np.abs(b * x.h[:, j] * x.g[:, j]) ** 2
        s = 1.0 + b * b * np.abs(x.h[:, j]) ** 2
        det = (1.0 + snr * ah1) * (1.0 + snr * (abg + ah1) / s) \
            - (snr ** 2) * ah1 * abg / s
        bits += np.log2(np.maximum(det, 1.0))
    outage = bits < cfg.rate_bpncu * L
    return errors, outage, energy, L * L


def _run_chunk(config: SchemeConfig, snr_db: float,
               seed_seq: np.random.SeedSequence, count: int,
               noiseless: bool = False):
    ctx = _context_for(config)
    if ctx.square is None and ctx.z_rows is None:
        raise DecodeBudgetError(
            f"codebook size {ctx.size} exceeds the exhaustive-ML budget "
            f"{DECODE_BUDGET}")
    snr = 10.0 ** (snr_db / 10.0)
    cooperating = ch.cooperation_active(config, config.rate_bpncu, snr)
    rng = np.random.default_rng(seed_seq)
    x = draw_trial_inputs(config, ctx.size, cooperating, rng, count, noiseless)
    if config.kind == ch.NONCOOP or not cooperating:
        errors, outage, energy, slots = _noncoop_chunk(ctx, snr, x)
    elif config.kind == ch.NDSDAF:
        errors, outage, energy, slots = _ndsdaf_chunk(ctx, snr, x)
    elif config.kind in (ch.NDRAF, ch.NDAAF):
        if ctx.square is not None:
            errors, outage, energy, slots = _ndraf_dispersion_chunk(ctx, snr, x)
        else:
            errors, outage, energy, slots = _ndraf_echo_chunk(ctx, snr, x)
    elif config.kind == ch.DRAF:
        errors, outage, energy, slots = _draf_chunk(ctx, snr, x)
    else:
        raise ValueError(config.kind)
    return (int(np.sum(errors)), int(np.sum(outage)),
            int(np.sum(errors & ~outage)), float(energy), slots)


_CTX_CACHE: dict[str, _Context] = {}


def _context_for(config: SchemeConfig) -> _Context:
    key = repr(config)
    if key not in _CTX_CACHE:
        _CTX_CACHE[key] = _Context(config)
    return _CTX_CACHE[key]


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def monte_carlo(scheme_config: SchemeConfig, snr_grid_db, trials,
                seed: int, workers: int | None = None,
                chunk_size: int = DEFAULT_CHUNK,
                noiseless: bool = False) -> list[TrialBatch]:
    """Frame-error and outage counts per SNR point, reproducible by seed.

    `trials` is either one count for every grid point or a per-point list.
    """
    grid = list(snr_grid_db)
    if not grid:
        raise ValueError("empty SNR grid")
    per_point = list(trials) if np.ndim(trials) else [int(trials)] * len(grid)
    if len(per_point) != len(grid) or min(per_point) < 1:
        raise ValueError("need one positive trial count per grid point")
    workers = default_workers() if workers is None else max(1, workers)
    # keep (chunk x codewords) ML workspaces bounded
    size = _context_for(scheme_config).size
    chunk_size = max(64, min(chunk_size, (1 << 22) // max(size, 1)))
    root = np.random.SeedSequence(seed)
    point_seqs = root.spawn(len(grid))

    jobs = []
    for p, snr_db in enumerate(grid):
        n_trials = per_point[p]
        counts = [chunk_size] * (n_trials // chunk_size)
        if n_trials % chunk_size:
            counts.append(n_trials % chunk_size)
        chunk_seqs = point_seqs[p].spawn(len(counts))
        for sq, cnt in zip(chunk_seqs, counts):
            jobs.append((p, snr_db, sq, cnt))

    results = [None] * len(jobs)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_chunk, scheme_config, snr_db, sq, cnt,
                                noiseless)
                    for (_, snr_db, sq, cnt) in jobs]
            for i, fut in enumerate(futs):
                results[i] = fut.result()
    else:
        for i, (_, snr_db, sq, cnt) in enumerate(jobs):
            results[i] = _run_chunk(scheme_config, snr_db, sq, cnt, noiseless)

    batches = []
    for p, snr_db in enumerate(grid):
        errs = outs = errs_no = 0
        energy = 0.0
        slots = 1
        n_trials = 0
        for (jp, _, _, cnt), res in zip(jobs, results):
            if jp != p:
                continue
            e, o, eno, en, slots = res
            errs += e
            outs += o
            errs_no += eno
            energy += en
            n_trials += cnt
        total_per_slot = energy / (slots * n_trials)
        batches.append(TrialBatch(
            snr_db=float(snr_db), trials=n_trials, frame_errors=errs,
            outages=outs, errors_no_outage=errs_no, seed=seed,
            snr_total_db=10.0 * math.log10(max(total_per_slot, 1e-300))))
    return batches


def outage_flags(config: SchemeConfig, snr: float, cooperating: bool,
                 g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Vectorized outage indicators from fades alone (no decoding)."""
    n = config.n
    h1 = h[:, 0]
    if config.kind == ch.NONCOOP or not cooperating:
        return np.log2(1.0 + snr * np.abs(h1) ** 2) < config.rate_bpncu
    if config.kind == ch.NDSDAF:
        thr = ch.decode_threshold(config.relay_rule, snr, config.stage_rate,
                                  config.delta, config.m_squared)
        direct = snr * np.abs(h1) ** 2
        bits = np.log2(1.0 + direct)
        for i in range(1, n):
            echo = np.where(np.abs(g[:, i]) ** 2 > thr,
                            snr * np.abs(h[:, i]) ** 2, 0.0)
            bits = bits + np.log2(1.0 + direct + echo)
        return bits < config.rate_bpncu * (2 * n - 1)
    if config.kind in (ch.NDRAF, ch.NDAAF):
        lam = np.abs(h1) ** 2
        for i in range(1, n):
            if config.kind == ch.NDAAF:
                b2 = snr / (np.abs(g[:, i]) ** 2 * snr + 1.0)
            else:
                b2 = config.amplification ** 2
            lam = lam + b2 * np.abs(g[:, i] * h[:, i]) ** 2
        if snr <= 1.0:
            return np.ones(len(h1), dtype=bool)
        mu = -np.log(np.maximum(lam, 1e-300)) / math.log(snr)
        return mu >= 1.0 - ch.second_stage_gain(config, snr)
    if config.kind == ch.DRAF:
        bits = np.zeros(len(h1))
        ah1 = np.abs(h1) ** 2
        b = config.amplification
        for j in range(1, n):
            abg = np.abs(b * h[:, j] * g[:, j]) ** 2
            s = 1.0 + b * b * np.abs(h[:, j]) ** 2
            det = (1.0 + snr * ah1) * (1.0 + snr * (abg + ah1) / s) \
                - (snr ** 2) * ah1 * abg / s
            bits += np.log2(np.maximum(det, 1.0))
        return bits < config.rate_bpncu * 2 * (n - 1)
    raise ValueError(config.kind)


def outage_monte_carlo(scheme_config: SchemeConfig, snr_grid_db, trials: int,
                       seed: int, chunk_size: int = 65536) -> list[TrialBatch]:
    """Outage-only sweep: draws fades and evaluates indicators, no decoding."""
    grid = list(snr_grid_db)
    if not grid or trials < 1:
        raise ValueError("need a nonempty grid and trials >= 1")
    root = np.random.SeedSequence(seed)
    point_seqs = root.spawn(len(grid))
    batches = []
    n = scheme_config.n
    for p, snr_db in enumerate(grid):
        snr = 10.0 ** (snr_db / 10.0)
        coop = ch.cooperation_active(scheme_config,
                                     scheme_config.rate_bpncu, snr)
        rng = np.random.default_rng(point_seqs[p])
        outs = 0
        left = trials
        while left > 0:
            count = min(chunk_size, left)
            g = np.ones((count, n), dtype=complex)
            g[:, 1:] = scheme_config.fading.sample(rng, (count, n - 1))
            h = scheme_config.fading.sample(rng, (count, n))
            outs += int(np.sum(outage_flags(scheme_config, snr, coop, g, h)))
            left -= count
        batches.append(TrialBatch(
            snr_db=float(snr_db), trials=trials, frame_errors=0,
            outages=outs, errors_no_outage=0, seed=seed,
            snr_total_db=float(snr_db)))
    return batches


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------

def wilson_interval(successes: int, trials: int, z: float = 1.96):
    """Wilson score interval for a binomial proportion."""
    if trials == 0:
        return (math.nan, math.nan)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials ** 2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def diversity_slope(batches: list[TrialBatch], window_db: float = 15.0,
                    min_errors: int = 10) -> float:
    """Least-squares slope of -log10(FER) against log10(SNR).

    Uses the highest `window_db` of the sweep restricted to points with at
    least `min_errors` frame errors; needs three such points.
    """
    eligible = [b for b in batches if b.frame_errors >= min_errors
                and b.trials > 0]
    if not eligible:
        raise InsufficientErrorsError("no points with enough errors")
    top = max(b.snr_db for b in eligible)
    window = [b for b in eligible if b.snr_db >= top - window_db]
    if len(window) < 3:
        raise InsufficientErrorsError(
            f"only {len(window)} usable points in the top {window_db} dB")
    xs = np.array([b.snr_db / 10.0 for b in window])  # log10 of linear SNR
    ys = np.array([-math.log10(b.fer) for b in window])
    slope = np.polyfit(xs, ys, 1)[0]
    return float(slope)


def error_vs_outage_ratio(batches: list[TrialBatch]) -> list[dict]:
    """Per-point error/outage coupling diagnostics."""
    rows = []
    for b in batches:
        rows.append({
            "snr_db": b.snr_db,
            "frame_errors": b.frame_errors,
            "outages": b.outages,
            "ratio": (b.frame_errors / b.outages) if b.outages else None,
            "errors_no_outage": b.errors_no_outage,
            "frac_errors_no_outage": (b.errors_no_outage / b.frame_errors
                                      if b.frame_errors else None),
        })
    return rows
