"""Release-gate property suite.

Each check returns a CheckResult; `run_all` collects the full table used by
the command-line `verify` subcommand.  The statistical checks take explicit
sample budgets so callers can trade runtime for resolution; all draws are
seeded and therefore reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import channel as ch
from . import curves
from .codes import (NVD_TOL, UNITARITY_TOL, code_metrics, default_gamma,
                    diagonal_restricted_code, full_cda_code, gamma_matrix,
                    integral_restriction_code, make_constellation,
                    perfect_lattice_generator, truncate_rows)
from .montecarlo import monte_carlo
from .strategies import SchemeConfig


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark:5s} {self.name:32s} {self.detail}"


def _result(name, passed, detail) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


# ---------------------------------------------------------------------------
# Algebraic checks
# ---------------------------------------------------------------------------

def check_generator_unitarity(dims=(1, 2, 3, 4)) -> CheckResult:
    worst = 0.0
    for n in dims:
        gen = perfect_lattice_generator(n)
        worst = max(worst, gen.unitarity_defect())
        gm = gamma_matrix(n, default_gamma(n))
        worst = max(worst, float(np.linalg.norm(
            gm.matrix.conj().T @ gm.matrix - np.eye(n))))
        worst = max(worst, float(np.max(np.abs(
            gm.power(n) - gm.gamma * np.eye(n)))))
    return _result("generator_unitarity", worst <= UNITARITY_TOL,
                   f"max defect {worst:.2e} (tol {UNITARITY_TOL})")


def check_dispersion_unitarity(dims=(2, 3, 4)) -> CheckResult:
    const = make_constellation("qam", 4)
    worst = 0.0
    for n in dims:
        for book in (integral_restriction_code(n, const),
                     full_cda_code(n, const)):
            for a in book.dispersion:
                eye = np.eye(a.shape[1])
                worst = max(worst, float(np.linalg.norm(a.conj().T @ a - eye)))
    return _result("dispersion_unitarity", worst <= UNITARITY_TOL,
                   f"max ||A^H A - I|| = {worst:.2e}")


def check_nvd(dims=(2, 3)) -> CheckResult:
    const = make_constellation("qam", 4)
    worst = math.inf
    for n in dims:
        book = diagonal_restricted_code(n, const)
        metrics = code_metrics(book, max_pairs=10**7)
        worst = min(worst, metrics["min_product_distance"])
    ok = worst >= 1.0 - NVD_TOL
    return _result("nvd_diagonal", ok,
                   f"min |prod dz| = {worst:.6f} (floor {1.0 - NVD_TOL})")


def check_full_code_determinant(pairs=500, seed=7) -> CheckResult:
    rng = np.random.default_rng(seed)
    book = full_cda_code(2, make_constellation("qam", 4))
    words = book.all_codewords()
    worst = math.inf
    for _ in range(pairs):
        i, j = rng.integers(0, book.size, size=2)
        if i == j:
            continue
        d = words[i] - words[j]
        worst = min(worst, abs(np.linalg.det(d @ d.conj().T)))
    return _result("full_code_nvd", worst > 0.0,
                   f"min |det| over {pairs} random pairs = {worst:.4e}")


def check_truncation_interlacing(pairs=200, seed=11) -> CheckResult:
    rng = np.random.default_rng(seed)
    const = make_constellation("qam", 4)
    ok = True
    detail = []
    for n in (2, 3):
        book = full_cda_code(n, const)
        subsets = [tuple(s) for s in _proper_subsets(n)]
        for keep in subsets:
            trunc = truncate_rows(book, keep)
            lam_min = math.inf
            for _ in range(pairs):
                i = int(rng.integers(0, book.size))
                j = int(rng.integers(0, book.size))
                if i == j:
                    continue
                a = trunc.codeword(i)
                b = trunc.codeword(j)
                if np.allclose(a, b, atol=1e-12):
                    ok = False
                    detail.append(f"repeat n={n} keep={keep}")
                    continue
                d = a - b
                eig = np.linalg.eigvalsh(d @ d.conj().T)
                lam_min = min(lam_min, float(eig[0]))
                if eig[0] < -1e-9:
                    ok = False
                    detail.append(f"negative eig n={n} keep={keep}")
        detail.append(f"n={n}: {len(subsets)} subsets")
    return _result("truncation_interlacing", ok, "; ".join(detail))


def _proper_subsets(n):
    import itertools
    for k in range(1, n):
        yield from itertools.combinations(range(1, n + 1), k)


# ---------------------------------------------------------------------------
# Statistical checks
# ---------------------------------------------------------------------------

def check_hypercube_bound(samples=1_000_000, ns=(2, 3),
                          ts=(0.05, 0.1, 0.3, 0.5), seed=23) -> CheckResult:
    """Empirical P(sum a_i < t) <= empirical P(a_1 < t)^n + 3 sigma for the
    i.i.d. positive products a_i = |h_i g_i|^2."""
    rng = np.random.default_rng(seed)
    ok = True
    margins = []
    for n in ns:
        a = (np.abs(ch.crandn(rng, (samples, n))) ** 2
             * np.abs(ch.crandn(rng, (samples, n))) ** 2)
        sums = a.sum(axis=1)
        for t in ts:
            lhs = float(np.mean(sums < t))
            p1 = float(np.mean(a < t))  # pooled single-term estimate
            rhs = p1 ** n
            sigma = math.sqrt(lhs * (1 - lhs) / samples) \
                + n * p1 ** (n - 1) * math.sqrt(p1 * (1 - p1) / (samples * n))
            margins.append(rhs + 3 * sigma - lhs)
            if lhs > rhs + 3 * sigma:
                ok = False
    return _result("hypercube_bound", ok,
                   f"min margin {min(margins):.3e} over {len(margins)} cells")


def check_lambda_cdf_bound(samples=1_000_000, zs=(0.05, 0.1, 0.3),
                           n=2, seed=29) -> CheckResult:
    """P(lambda <= z) <= [z (1 - ln z)]^n + 3 sigma for the two-product sum."""
    rng = np.random.default_rng(seed)
    prod = (np.abs(ch.crandn(rng, (samples, n))) ** 2
            * np.abs(ch.crandn(rng, (samples, n))) ** 2)
    lam = prod.sum(axis=1)
    ok = True
    margins = []
    for z in zs:
        lhs = float(np.mean(lam <= z))
        bound = (z * (1.0 - math.log(z))) ** n
        sigma = math.sqrt(max(lhs * (1 - lhs), 1e-12) / samples)
        margins.append(bound + 3 * sigma - lhs)
        if lhs > bound + 3 * sigma:
            ok = False
    return _result("lambda_cdf_bound", ok,
                   f"min margin {min(margins):.3e} at z grid {list(zs)}")


def check_noise_whiteness(draws=100_000, seed=31, rel_tol=0.02) -> CheckResult:
    """Forwarded-noise covariance matches (1 + sum |h_i|^2) I within rel_tol."""
    fixed_h = [np.array([0.3 + 0.4j, -1.1 + 0.2j]),
               np.array([1.0 + 0.0j, 0.5 - 0.5j]),
               np.array([0.05 + 0.1j, 2.0 + 1.0j])]
    worst = 0.0
    for k, h in enumerate(fixed_h):
        n = len(h)
        gm = gamma_matrix(n, default_gamma(n))
        mats = [gm.power(n - i) for i in range(1, n + 1)]
        rng = np.random.default_rng(seed + k)
        v = ch.crandn(rng, (draws, n, n))
        w = ch.crandn(rng, (draws, n))
        W = w + sum(h[i] * v[:, i, :] @ mats[i] for i in range(n))
        cov = W.conj().T @ W / draws
        var = ch.effective_noise_variance(h)
        rel = float(np.linalg.norm(cov - var * np.eye(n))
                    / np.linalg.norm(var * np.eye(n)))
        worst = max(worst, rel)
    return _result("noise_whiteness", worst <= rel_tol,
                   f"max relative Frobenius deviation {worst:.4f}")


def check_noncoop_outage(trials=200_000, grid_db=(0, 5, 10, 15, 20),
                         rate=1.0, seed=37) -> CheckResult:
    """Empirical direct-link outage vs 1 - exp(-(2^R - 1)/snr), 3 sigma."""
    config = SchemeConfig(kind=ch.NONCOOP, users=3, m_squared=4,
                          rate_bpncu=rate)
    batches = monte_carlo(config, grid_db, trials, seed)
    ok = True
    worst = 0.0
    for b in batches:
        snr = 10.0 ** (b.snr_db / 10.0)
        p = 1.0 - math.exp(-(2.0 ** rate - 1.0) / snr)
        sigma = math.sqrt(p * (1 - p) / b.trials)
        dev = abs(b.pout - p) / sigma if sigma > 0 else 0.0
        worst = max(worst, dev)
        if dev > 3.0:
            ok = False
    return _result("noncoop_outage_oracle", ok,
                   f"worst deviation {worst:.2f} sigma over {len(batches)} points")


def check_determinism(seed=41) -> CheckResult:
    config = SchemeConfig(kind=ch.NDSDAF, users=3, m_squared=4,
                          rate_bpncu=1.0,
                          skip_cooperation_above_r_half=False)
    a = monte_carlo(config, [5, 10], 2000, seed)
    b = monte_carlo(config, [5, 10], 2000, seed)
    same = all(x == y for x, y in zip(a, b))
    return _result("determinism", same, "repeat runs identical")


# ---------------------------------------------------------------------------
# Curve identities
# ---------------------------------------------------------------------------

def check_curve_identities(n_range=range(2, 9)) -> CheckResult:
    problems = []
    for n in n_range:
        target = curves.optimal_curve(n)
        for route in (curves.optimal_via_selection_forwarding,
                      curves.optimal_via_linear_processing,
                      curves.optimal_via_dynamic_echo):
            if not route(n).same_shape(target):
                problems.append(f"{route.__name__}(n={n})")
        pep = curves.pep_universal_curve(n)
        rs = {r for r, _ in target.breakpoints} | {r for r, _ in pep.breakpoints}
        if any(pep.value(r) > target.value(r) for r in rs):
            problems.append(f"pep_above_optimal(n={n})")
        if not curves.alpha_scaled_curve(n, 1).same_shape(target):
            problems.append(f"alpha_scaled(n={n})")
        for m in range(1, min(n, 4) + 1):
            ma = curves.multi_antenna_curve(n, m)
            if ma.value(0) != Fraction(n * m * m):
                problems.append(f"multi_antenna(n={n},m={m})")
    return _result("curve_identities", not problems,
                   "all routes identical" if not problems
                   else "; ".join(problems))


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------

def run_all(quick: bool = False, seed: int = 1234) -> list[CheckResult]:
    stat = 100_000 if quick else 1_000_000
    cov = 20_000 if quick else 100_000
    out = 20_000 if quick else 200_000
    return [
        check_generator_unitarity(),
        check_dispersion_unitarity(),
        check_nvd(),
        check_full_code_determinant(seed=seed),
        check_truncation_interlacing(seed=seed),
        check_curve_identities(),
        check_hypercube_bound(samples=stat, seed=seed),
        check_lambda_cdf_bound(samples=stat, seed=seed + 1),
        check_noise_whiteness(draws=cov, seed=seed + 2),
        check_noncoop_outage(trials=out, seed=seed + 3),
        check_determinism(seed=seed + 4),
    ]
