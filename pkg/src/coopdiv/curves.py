"""Exact diversity-multiplexing tradeoff curves.

Every curve is piecewise linear with rational breakpoints, kept in exact
`fractions.Fraction` arithmetic; floats appear only when exporting.  The
catalog covers the cooperative schemes' optimal tradeoff, the two-product
second-stage channel, pairwise-error-probability based lower bounds, the
penalty curves of codes that violate the distribution constraints
(full-rate layered, orthogonal/Alamouti), tail-exponent scaled fading,
multi-antenna selection forwarding, the classical point-to-point tradeoff,
and the half-duplex rate-drop transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

Frac = Fraction


def _as_frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        if not x.is_integer():
            raise ValueError(
                f"{x!r} is not exactly representable; pass Fraction or 'p/q'")
        return Fraction(int(x))
    raise TypeError(f"cannot convert {type(x)} to Fraction")


@dataclass(frozen=True)
class DmgCurve:
    """Continuous piecewise-linear d(r) on [0, r_max], non-increasing."""

    breakpoints: tuple[tuple[Fraction, Fraction], ...]
    label: str = ""

    @staticmethod
    def make(points: Iterable[tuple], label: str = "") -> "DmgCurve":
        pts = sorted((_as_frac(r), _as_frac(d)) for r, d in points)
        if len(pts) < 2:
            raise ValueError("need at least two breakpoints")
        if len(set(r for r, _ in pts)) != len(pts):
            raise ValueError("duplicate r values")
        return DmgCurve(breakpoints=tuple(_drop_collinear(pts)), label=label)

    @property
    def r_max(self) -> Fraction:
        return self.breakpoints[-1][0]

    def value(self, r) -> Fraction:
        r = _as_frac(r)
        pts = self.breakpoints
        if not pts[0][0] <= r <= pts[-1][0]:
            raise ValueError(f"r={r} outside [{pts[0][0]}, {pts[-1][0]}]")
        for (r1, d1), (r2, d2) in zip(pts, pts[1:]):
            if r <= r2:
                if r1 == r2:
                    return d1
                return d1 + (d2 - d1) * (r - r1) / (r2 - r1)
        return pts[-1][1]

    def relabel(self, label: str) -> "DmgCurve":
        return DmgCurve(self.breakpoints, label)

    def same_shape(self, other: "DmgCurve") -> bool:
        return self.breakpoints == other.breakpoints


def _drop_collinear(pts):
    out = [pts[0]]
    for k in range(1, len(pts) - 1):
        r1, d1 = out[-1]
        r2, d2 = pts[k]
        r3, d3 = pts[k + 1]
        if (d2 - d1) * (r3 - r2) == (d3 - d2) * (r2 - r1):
            continue
        out.append(pts[k])
    out.append(pts[-1])
    return out


def _grid(a: DmgCurve, b: DmgCurve):
    top = min(a.r_max, b.r_max)
    rs = sorted({r for r, _ in a.breakpoints if r <= top}
                | {r for r, _ in b.breakpoints if r <= top} | {top})
    return rs


def piecewise_sum(a: DmgCurve, b: DmgCurve, label: str = "") -> DmgCurve:
    rs = _grid(a, b)
    return DmgCurve.make([(r, a.value(r) + b.value(r)) for r in rs], label)


def piecewise_max(a: DmgCurve, b: DmgCurve, label: str = "") -> DmgCurve:
    rs = _grid(a, b)
    # add interior crossings so the max stays piecewise linear
    extra = []
    for r1, r2 in zip(rs, rs[1:]):
        f1 = a.value(r1) - b.value(r1)
        f2 = a.value(r2) - b.value(r2)
        if f1 * f2 < 0:
            extra.append(r1 + (r2 - r1) * f1 / (f1 - f2))
    pts = sorted(set(rs) | set(extra))
    return DmgCurve.make([(r, max(a.value(r), b.value(r))) for r in pts], label)


def rate_scale(curve: DmgCurve, factor, label: str = "") -> DmgCurve:
    """d_scaled(r) = curve(r * factor); compresses the rate axis by `factor`."""
    f = Fraction(factor) if not isinstance(factor, float) else _as_frac(factor)
    if f <= 0:
        raise ValueError("factor must be positive")
    return DmgCurve.make([(r / f, d) for r, d in curve.breakpoints], label)


def extend_flat(curve: DmgCurve, r_max, label: str = "") -> DmgCurve:
    """Extend the domain to `r_max`, holding the final value."""
    r_max = _as_frac(r_max)
    if r_max <= curve.r_max:
        return curve
    pts = list(curve.breakpoints) + [(r_max, curve.breakpoints[-1][1])]
    return DmgCurve.make(pts, label or curve.label)


def _plus_line(coeff: Fraction, slope: Fraction, r_max: Fraction) -> DmgCurve:
    """coeff * (1 - slope*r)^+ on [0, r_max]."""
    knee = Fraction(1) / slope
    pts = [(Fraction(0), coeff)]
    if knee < r_max:
        pts += [(knee, Fraction(0)), (r_max, Fraction(0))]
    else:
        pts += [(r_max, coeff * (1 - slope * r_max))]
    return DmgCurve.make(pts)


def _line_1mr() -> DmgCurve:
    return DmgCurve.make([(0, 1), (1, 0)])


# ---------------------------------------------------------------------------
# Curve catalog
# ---------------------------------------------------------------------------

def optimal_curve(n: int) -> DmgCurve:
    """(n-1)(1-2r)^+ + (1-r): the common optimum of all relay strategies."""
    _check_n(n)
    return piecewise_sum(_plus_line(Frac(n - 1), Frac(2), Frac(1)), _line_1mr(),
                         label=f"optimal(n={n})")


def two_product_curve(n: int) -> DmgCurve:
    """n(1-r): optimal tradeoff of the n x 1 product-fading second stage."""
    _check_n(n)
    return DmgCurve.make([(0, n), (1, 0)], label=f"two_product(n={n})")


def pep_random_curve(n: int, k) -> DmgCurve:
    """(n-1)(1-k r)^+ + (1-r): PEP bound under finite random coding, k >> 1."""
    _check_n(n)
    kf = _as_frac(k)
    if kf <= 0:
        raise ValueError("k must be positive")
    return piecewise_sum(_plus_line(Frac(n - 1), kf, Frac(1)), _line_1mr(),
                         label=f"pep_random(n={n},k={kf})")


def pep_universal_curve(n: int) -> DmgCurve:
    """(n-1)(1 - (4n-1)/(n-1) r)^+ + (1-r): PEP bound with optimal coding."""
    _check_n(n)
    return pep_random_curve(n, Frac(4 * n - 1, n - 1)).relabel(
        f"pep_universal(n={n})")


def full_perfect_curve(n: int) -> DmgCurve:
    """Penalty curve of full-rate n^2-symbol layered codes in the network."""
    _check_n(n)
    return pep_random_curve(n, Frac(n * n + n - 1, n - 1)).relabel(
        f"full_perfect(n={n})")


def alamouti_curve() -> DmgCurve:
    """(1-5r)^+ + (1-r): orthogonal pair code in the 3-node network."""
    return pep_random_curve(2, 5).relabel("alamouti")


def ortho_approx_curve(n: int) -> DmgCurve:
    """(n-1)(1-7r)^+ + (1-r): orthogonal designs at ~1/2 symbol per use."""
    _check_n(n)
    return pep_random_curve(n, 7).relabel(f"ortho_approx(n={n})")


def alpha_scaled_curve(n: int, alpha) -> DmgCurve:
    """Tail-exponent scaling: alpha * [(n-1)(1-2r)^+ + (1-r)]."""
    _check_n(n)
    a = _as_frac(alpha)
    if a <= 0:
        raise ValueError("alpha must be positive")
    base = optimal_curve(n)
    return DmgCurve.make([(r, a * d) for r, d in base.breakpoints],
                         label=f"alpha_scaled(n={n},alpha={a})")


def rayleigh_point_to_point_curve(n: int, n_r: int) -> DmgCurve:
    """(n-r)(n_r-r) at integer r, straight-line interpolated."""
    if n < 1 or n_r < 1:
        raise ValueError("antenna counts must be >= 1")
    top = min(n, n_r)
    return DmgCurve.make([(j, (n - j) * (n_r - j)) for j in range(top + 1)],
                         label=f"rayleigh({n}x{n_r})")


def multi_antenna_curve(n: int, m: int) -> DmgCurve:
    """Integral-point-wise linear plot of n(m-2r)^2 switching to (m-r)^2.

    Both quadratics are evaluated at integer r and joined linearly; the
    combined curve follows the first branch up to their first intersection
    and the second branch after it.
    """
    _check_n(n)
    if m < 1:
        raise ValueError("m must be >= 1")
    c1 = DmgCurve.make(
        [(j, n * max(m - 2 * j, 0) ** 2) for j in range(m + 1)])
    c2 = DmgCurve.make([(j, (m - j) ** 2) for j in range(m + 1)])
    rc = r_coop(c1, c2)
    if rc is None:
        rc = c1.r_max
    pts = [(r, d) for r, d in c1.breakpoints if r < rc]
    pts.append((rc, c1.value(rc)))
    pts.extend((r, d) for r, d in c2.breakpoints if r > rc)
    return DmgCurve.make(pts, label=f"multi_antenna(n={n},m={m})")


def rate_drop_curve(base: DmgCurve, m: int) -> DmgCurve:
    """Half-duplex rate drop: d_network(r) = base(r (m+1)) for a code
    carrying m symbols per channel use."""
    if m < 0:
        raise ValueError("m must be >= 0")
    return rate_scale(base, m + 1, label=f"rate_drop({base.label},m={m})")


_FAMILIES = {
    "optimal": lambda **p: optimal_curve(p["n"]),
    "two_product": lambda **p: two_product_curve(p["n"]),
    "pep_random": lambda **p: pep_random_curve(p["n"], p["k"]),
    "pep_universal": lambda **p: pep_universal_curve(p["n"]),
    "full_perfect": lambda **p: full_perfect_curve(p["n"]),
    "alamouti": lambda **p: alamouti_curve(),
    "ortho_approx": lambda **p: ortho_approx_curve(p["n"]),
    "alpha_scaled": lambda **p: alpha_scaled_curve(p["n"], p["alpha"]),
    "multi_antenna": lambda **p: multi_antenna_curve(p["n"], p["m"]),
    "rayleigh": lambda **p: rayleigh_point_to_point_curve(p["n"], p["n_r"]),
    "siso": lambda **p: rayleigh_point_to_point_curve(1, 1),
}


def dmg_curve(family: str, **params) -> DmgCurve:
    """Catalog lookup; see module docstring for the family list."""
    if family == "rate_drop":
        return rate_drop_curve(params["base"], params["m"])
    if family not in _FAMILIES:
        raise ValueError(f"unknown curve family {family!r}; "
                         f"choose from {sorted(_FAMILIES)} or rate_drop")
    return _FAMILIES[family](**params)


def _check_n(n: int):
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")


# ---------------------------------------------------------------------------
# Scheme routes to the shared optimum (used by the identity checks)
# ---------------------------------------------------------------------------

def optimal_via_selection_forwarding(n: int) -> DmgCurve:
    """Dominant-exponent route: every decision-set size contributes the same
    SNR exponent n(1-r'), the half-duplex frame stretches the rate by
    (2n-1)/n, and the direct path floors the result."""
    _check_n(n)
    exponents = []
    for i in range(n):
        # outage of the direct hop, of n-1-i silent relays, of the i x 1 stage
        exponents.append(Frac(1 + (n - 1 - i) + i))
    coeff = min(exponents)
    full_duplex = DmgCurve.make([(0, coeff), (1, 0)])
    scaled = rate_scale(full_duplex, Frac(2 * n - 1, n))
    return piecewise_max(extend_flat(scaled, 1), _line_1mr(),
                         label=f"optimal_sdaf_route(n={n})")


def optimal_via_linear_processing(n: int) -> DmgCurve:
    """Two-product route: second-stage curve n(1-r'), rate-stretched by the
    (2n-1)/n half-duplex slot accounting, floored by the direct path."""
    _check_n(n)
    scaled = rate_scale(two_product_curve(n), Frac(2 * n - 1, n))
    return piecewise_max(extend_flat(scaled, 1), _line_1mr(),
                         label=f"optimal_raf_route(n={n})")


def optimal_via_dynamic_echo(n: int) -> DmgCurve:
    """Dynamic route: infimum of fade exponents over the echo-frame outage
    region splits into (n-1)(1-2r)^+ plus the direct (1-r) term."""
    _check_n(n)
    return piecewise_sum(_plus_line(Frac(n - 1), Frac(2), Frac(1)),
                         _line_1mr(), label=f"optimal_draf_route(n={n})")


# ---------------------------------------------------------------------------
# Curve intersections
# ---------------------------------------------------------------------------

def r_coop(curve_a: DmgCurve, curve_b: DmgCurve) -> Fraction | None:
    """Smallest r > 0 where the two curves meet (exact arithmetic).

    Returns None when the curves never meet on their common domain, or when
    they coincide starting at r = 0 (no positive threshold exists).
    """
    rs = _grid(curve_a, curve_b)
    fs = [curve_a.value(r) - curve_b.value(r) for r in rs]
    if all(f == 0 for f in fs):
        return None  # identical curves
    for (r1, r2), (f1, f2) in zip(zip(rs, rs[1:]), zip(fs, fs[1:])):
        if f1 == 0:
            if r1 > 0:
                return r1
            if f2 == 0:
                return None  # equal on a whole segment starting at r = 0
            continue  # touch at the origin only
        if f2 == 0:
            return r2
        if (f1 > 0) != (f2 > 0):
            return r1 + (r2 - r1) * f1 / (f1 - f2)
    return None


def snr_coop(rate_bpncu: float, r_coop_value) -> float:
    """SNR above which cooperation pays: 2^(R / r_coop), linear."""
    rc = float(r_coop_value)
    if rc <= 0:
        raise ValueError("r_coop must be positive")
    return 2.0 ** (float(rate_bpncu) / rc)


def curve_rows(curve: DmgCurve) -> list[tuple[str, str, float, float]]:
    """Breakpoints as (exact r, exact d, float r, float d) export rows."""
    return [(str(r), str(d), float(r), float(d))
            for r, d in curve.breakpoints]
