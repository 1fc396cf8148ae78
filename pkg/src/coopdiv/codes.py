"""Algebraic space-time code constructions over QAM/HEX constellations.

All codebooks here are linear in their information symbols: a codeword is

    X(f) = sum_j f_j B_j

for fixed complex basis matrices B_j and symbols f_j drawn from a discrete,
integer-lattice constellation.  The basis matrices come from three building
blocks:

  * a unitary lattice generator M_n (rows are the Galois conjugates of a
    trace-orthonormal number-field basis), so that z = f @ M_n maps integer
    tuples to rotated lattice points with non-vanishing coordinate products;
  * the twisted cyclic-shift matrix Gamma (gamma in the top-right corner,
    ones on the subdiagonal, Gamma^n = gamma*I), which spreads diagonal
    layers across matrix rows;
  * per-relay linear-dispersion matrices A_u with orthonormal columns, such
    that row u of a codeword equals f @ A_u.

Supported generators:
  n=1  identity
  n=2  golden rotation over Q(i, sqrt(5))      (theta = (1+sqrt 5)/2)
  n=3  rotated Z^3 from the 7th cyclotomic     (entries 2 sin(2 pi k l / 7)/sqrt(7))
  n=4  rotated Z^4 from the 16th cyclotomic    (twist (2+theta)/2, theta = 2 cos(pi/8))

Constellations are stored unscaled on the integer (or Eisenstein) lattice;
energy normalization happens only in `power_normalizer`, which keeps all
determinant/product-distance checks in exact Gaussian-integer arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

UNITARITY_TOL = 1e-10
NVD_TOL = 1e-9
MATERIALIZE_LIMIT = 2**20

QAM = "qam"
HEX = "hex"

HORIZONTAL = "horizontal_restricted"
DIAGONAL = "diagonal_restricted"
INTEGRAL = "integral_restricted"
M_LAYERED = "m_layered"
FULL_CDA = "full_cda"
VECTORIZED = "vectorized_cda"
STACKED = "horizontally_stacked"
UNCODED = "uncoded"

SUPPORTED_DIMENSIONS = (1, 2, 3, 4)


class InvalidParameterError(ValueError):
    """Raised for structurally invalid construction parameters."""


class UnsupportedDimensionError(InvalidParameterError):
    """Raised when no lattice generator is available for the requested size."""


class UndefinedMetricsError(ValueError):
    """Raised when pairwise metrics are requested for a singleton codebook."""


# ---------------------------------------------------------------------------
# Constellations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Constellation:
    """Discrete information constellation on an integer lattice.

    `points` are unscaled lattice points with zero centroid; `unit_energy_scale`
    is the multiplier that would bring them to unit average energy.
    """

    kind: str
    points: np.ndarray
    unit_energy_scale: float

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def average_energy(self) -> float:
        """Mean |point|^2 of the unscaled lattice points."""
        return float(np.mean(np.abs(self.points) ** 2))

    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(np.min(d[d > 0]))


def make_constellation(kind: str, m_squared: int) -> Constellation:
    """Build a centered M^2-point constellation of the given kind."""
    if kind == QAM:
        m = math.isqrt(m_squared)
        if m * m != m_squared or m_squared < 4:
            raise InvalidParameterError(
                f"QAM size must be a perfect square >= 4, got {m_squared}")
        axis = np.arange(-(m - 1), m, 2)
        pts = (axis[:, None] + 1j * axis[None, :]).ravel()
    elif kind == HEX:
        if m_squared < 2 or m_squared % 2:
            raise InvalidParameterError(
                f"HEX size must be even and >= 2, got {m_squared}")
        pts = _hex_points(m_squared)
    else:
        raise InvalidParameterError(f"unknown constellation kind {kind!r}")
    pts = np.asarray(pts, dtype=complex)
    if abs(pts.sum()) > 1e-12:
        raise InvalidParameterError("constellation centroid is not zero")
    scale = 1.0 / math.sqrt(float(np.mean(np.abs(pts) ** 2)))
    return Constellation(kind=kind, points=pts, unit_energy_scale=scale)


def _hex_points(m_squared: int) -> np.ndarray:
    # Centrally symmetric pairs +-p from the Eisenstein lattice, lowest
    # energy first, so the centroid is zero by construction.
    omega = complex(math.cos(math.pi / 3), math.sin(math.pi / 3))
    span = math.isqrt(m_squared) + 2
    cand = [a + b * omega
            for a in range(-span, span + 1)
            for b in range(-span, span + 1)
            if (a, b) != (0, 0)]
    cand.sort(key=lambda p: (abs(p), math.atan2(p.imag, p.real)))
    chosen: list[complex] = []
    for p in cand:
        if len(chosen) >= m_squared:
            break
        if any(abs(p - q) < 1e-12 or abs(p + q) < 1e-12 for q in chosen):
            continue
        chosen.extend((p, -p))
    return np.array(chosen[:m_squared])


# ---------------------------------------------------------------------------
# Lattice generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeGenerator:
    """Unitary generator M_n: row k holds the n Galois embeddings of basis
    element beta_k, so z = f @ matrix evaluates the n conjugates of
    sum_k f_k beta_k."""

    n: int
    matrix: np.ndarray
    basis_tag: str

    def unitarity_defect(self) -> float:
        g = self.matrix
        return float(np.linalg.norm(g.conj().T @ g - np.eye(self.n)))


def _golden_generator() -> np.ndarray:
    sq5 = math.sqrt(5.0)
    theta = (1.0 + sq5) / 2.0
    theta_c = (1.0 - sq5) / 2.0
    alpha = 1.0 + 1j * (1.0 - theta)
    alpha_c = 1.0 + 1j * (1.0 - theta_c)
    return np.array([[alpha, alpha_c],
                     [alpha * theta, alpha_c * theta_c]]) / sq5


def _sine7_generator() -> np.ndarray:
    scale = 2.0 / math.sqrt(7.0)
    return np.array(
        [[scale * math.sin(2.0 * math.pi * k * l / 7.0) for l in (1, 2, 3)]
         for k in (1, 2, 3)], dtype=complex)


def _cyclo16_generator() -> np.ndarray:
    # Basis rows (in powers of theta = 2 cos(pi/8)) of a trace-orthonormal
    # module, with totally positive twist (2 + theta)/2.
    basis = np.array([[-1, -1, 1, 0],
                      [-1, 0, 0, 0],
                      [-1, 1, 0, 0],
                      [-1, 2, 1, -1]], dtype=float)
    conj = np.array([2.0 * math.cos(math.pi * k / 8.0) for k in (1, 3, 5, 7)])
    powers = np.array([[t ** p for t in conj] for p in range(4)])
    twist = np.sqrt((2.0 + conj) / 2.0) / 2.0
    return ((basis @ powers) * twist[None, :]).astype(complex)


_GENERATORS = {
    1: ("identity", lambda: np.eye(1, dtype=complex)),
    2: ("golden", _golden_generator),
    3: ("sine7", _sine7_generator),
    4: ("cyclo16", _cyclo16_generator),
}


def perfect_lattice_generator(n: int) -> LatticeGenerator:
    """Return the unitary n x n lattice generator, gated by a unitarity check."""
    if n not in _GENERATORS:
        raise UnsupportedDimensionError(
            f"no lattice generator for n={n}; supported: {SUPPORTED_DIMENSIONS}")
    tag, build = _GENERATORS[n]
    gen = LatticeGenerator(n=n, matrix=build(), basis_tag=tag)
    defect = gen.unitarity_defect()
    if defect > UNITARITY_TOL:
        raise InvalidParameterError(
            f"generator {tag} failed the unitarity gate: defect {defect:.3e}")
    return gen


def default_gamma(n: int) -> complex:
    """Unit-modulus twist constant: i for even n, a cube root of unity otherwise."""
    if n % 2 == 0:
        return 1j
    return complex(math.cos(2.0 * math.pi / 3.0), math.sin(2.0 * math.pi / 3.0))


@dataclass(frozen=True)
class GammaMatrix:
    """Twisted cyclic shift: gamma at (1, n), ones on the subdiagonal."""

    n: int
    gamma: complex
    matrix: np.ndarray

    def power(self, k: int) -> np.ndarray:
        return np.linalg.matrix_power(self.matrix, k)


def gamma_matrix(n: int, gamma: complex) -> GammaMatrix:
    if n < 1:
        raise InvalidParameterError(f"n must be >= 1, got {n}")
    if gamma == 0:
        raise InvalidParameterError("gamma must be nonzero")
    m = np.zeros((n, n), dtype=complex)
    m[0, n - 1] = gamma
    for i in range(1, n):
        m[i, i - 1] = 1.0
    gm = GammaMatrix(n=n, gamma=complex(gamma), matrix=m)
    defect = np.max(np.abs(gm.power(n) - gamma * np.eye(n)))
    if defect > 1e-12:
        raise InvalidParameterError(f"Gamma^n != gamma*I (defect {defect:.3e})")
    return gm


# ---------------------------------------------------------------------------
# Codebooks
# ---------------------------------------------------------------------------

@dataclass
class Codebook:
    """Enumerable linear space-time code.

    Codeword `index` maps to symbols via mixed-radix digits of the index and
    then linearly through `basis`: X = sum_j f_j basis[j].  `dispersion`, when
    present, holds per-relay matrices A_u with orthonormal columns such that
    row u of X equals the information row vector times A_u.
    """

    variant: str
    n: int
    T: int
    constellation: Constellation
    basis: np.ndarray
    gamma: complex | None = None
    generator: LatticeGenerator | None = None
    dispersion: list[np.ndarray] | None = None
    raw_row: int | None = None
    kept_rows: tuple[int, ...] | None = None
    _materialized: np.ndarray | None = field(default=None, repr=False)

    @property
    def info_symbols_per_matrix(self) -> int:
        return len(self.basis)

    @property
    def size(self) -> int:
        return self.constellation.size ** self.info_symbols_per_matrix

    def symbols(self, index: int) -> np.ndarray:
        """Mixed-radix digit expansion of `index` into constellation points."""
        m = self.constellation.size
        k = self.info_symbols_per_matrix
        if not 0 <= index < self.size:
            raise InvalidParameterError(f"index {index} out of range")
        digits = [(index // m**j) % m for j in range(k)]
        return self.constellation.points[digits]

    def codeword_from_symbols(self, f: np.ndarray) -> np.ndarray:
        return np.tensordot(np.asarray(f, dtype=complex), self.basis, axes=(0, 0))

    def codeword(self, index: int) -> np.ndarray:
        return self.codeword_from_symbols(self.symbols(index))

    def iter_codewords(self):
        for index in range(self.size):
            yield self.codeword(index)

    def all_codewords(self) -> np.ndarray:
        """Materialized (size, n, T) array; cached. Refuses oversized books."""
        if self._materialized is None:
            if self.size > MATERIALIZE_LIMIT:
                raise InvalidParameterError(
                    f"codebook of size {self.size} exceeds the materialization "
                    f"limit {MATERIALIZE_LIMIT}")
            pts = self.constellation.points
            m = len(pts)
            k = self.info_symbols_per_matrix
            powers = m ** np.arange(k, dtype=np.int64)
            digits = (np.arange(self.size, dtype=np.int64)[:, None]
                      // powers[None, :]) % m
            f = pts[digits]
            self._materialized = np.tensordot(f, self.basis, axes=(1, 0))
        return self._materialized

    def average_energy_per_use(self) -> float:
        """Exact E||X||_F^2 / T using symbol independence and zero mean."""
        basis_energy = float(np.sum(np.abs(self.basis) ** 2))
        return self.constellation.average_energy * basis_energy / self.T


def uncoded_code(constellation: Constellation) -> Codebook:
    return Codebook(variant=UNCODED, n=1, T=1, constellation=constellation,
                    basis=np.ones((1, 1, 1), dtype=complex), raw_row=0)


def horizontally_restricted_code(n: int, constellation: Constellation) -> Codebook:
    """1 x n code: rows z = f @ M_n of the rotated lattice."""
    gen = perfect_lattice_generator(n)
    basis = gen.matrix[:, None, :].copy()
    return Codebook(variant=HORIZONTAL, n=1, T=n, constellation=constellation,
                    basis=basis, generator=gen)


def diagonal_restricted_code(n: int, constellation: Constellation) -> Codebook:
    """n x n code diag(f @ M_n); coordinate products are algebraic norms."""
    gen = perfect_lattice_generator(n)
    basis = np.stack([np.diag(gen.matrix[j]) for j in range(n)])
    return Codebook(variant=DIAGONAL, n=n, T=n, constellation=constellation,
                    basis=basis, generator=gen)


def integral_restriction_code(n: int, constellation: Constellation,
                              gamma: complex | None = None) -> Codebook:
    """n x n code X = sum_k f_k Gamma^k.

    Entries stay inside constellation * {1, gamma}.  Relay u applies the
    dispersion matrix A_u = Gamma^(n-u) to the raw symbol row (which is row n
    of X, carrying the information symbols in reversed order), reproducing
    row u of the codeword.
    """
    if n < 2:
        raise InvalidParameterError(f"n must be >= 2, got {n}")
    gamma = default_gamma(n) if gamma is None else complex(gamma)
    if abs(abs(gamma) - 1.0) > 1e-12:
        raise InvalidParameterError("gamma must have unit modulus")
    gm = gamma_matrix(n, gamma)
    basis = np.stack([gm.power(k) for k in range(n)])
    dispersion = [gm.power(n - u) for u in range(1, n + 1)]
    return Codebook(variant=INTEGRAL, n=n, T=n, constellation=constellation,
                    basis=basis, gamma=gamma, dispersion=dispersion,
                    raw_row=n - 1)


def _cda_basis(n: int, gen: LatticeGenerator, gm: GammaMatrix, m: int) -> np.ndarray:
    layers = []
    for j in range(m):
        gj = gm.power(j)
        for i in range(n):
            layers.append(gj @ np.diag(gen.matrix[i]))
    return np.stack(layers)


def _cda_dispersion(n: int, gen: LatticeGenerator, gm: GammaMatrix) -> list[np.ndarray]:
    # A_u row (j*n + i) is row u of Gamma^j diag(conjugates of beta_i), so that
    # f @ A_u reproduces row u of X for the layer-major symbol ordering.
    mats = []
    for u in range(n):
        rows = []
        for j in range(n):
            gj = gm.power(j)
            for i in range(n):
                rows.append((gj @ np.diag(gen.matrix[i]))[u])
        mats.append(np.array(rows))
    return mats


def m_layered_code(n: int, m: int, constellation: Constellation) -> Codebook:
    """X = sum_{j<m} Gamma^j diag(f_j @ M_n); m*n information symbols."""
    if not 1 <= m <= n:
        raise InvalidParameterError(f"m must be in [1, {n}], got {m}")
    gen = perfect_lattice_generator(n)
    gm = gamma_matrix(n, default_gamma(n))
    basis = _cda_basis(n, gen, gm, m)
    dispersion = _cda_dispersion(n, gen, gm) if m == n else None
    variant = FULL_CDA if m == n else M_LAYERED
    return Codebook(variant=variant, n=n, T=n, constellation=constellation,
                    basis=basis, gamma=gm.gamma, generator=gen,
                    dispersion=dispersion)


def full_cda_code(n: int, constellation: Constellation) -> Codebook:
    """Full n-layer division-algebra code carrying n^2 symbols."""
    return m_layered_code(n, n, constellation)


def horizontally_stacked_code(m: int, k: int, constellation: Constellation) -> Codebook:
    """m x (m*k) concatenation of k independent full m x m codewords."""
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    block = full_cda_code(m, constellation)
    nb = block.info_symbols_per_matrix
    basis = np.zeros((nb * k, m, m * k), dtype=complex)
    for b in range(k):
        basis[b * nb:(b + 1) * nb, :, b * m:(b + 1) * m] = block.basis
    return Codebook(variant=STACKED, n=m, T=m * k, constellation=constellation,
                    basis=basis, gamma=block.gamma, generator=block.generator)


def vectorize_columns(codeword: np.ndarray) -> np.ndarray:
    """Column-major flattening of an n x T matrix into a length-nT vector."""
    return np.asarray(codeword).ravel(order="F")


def reshape_columns(vector: np.ndarray, n: int, T: int) -> np.ndarray:
    """Exact inverse of `vectorize_columns`."""
    return np.asarray(vector).reshape((n, T), order="F")


def vectorized_code(codebook: Codebook) -> Codebook:
    """1 x (n*T) column-major vectorization of every codeword."""
    basis = np.stack([vectorize_columns(b)[None, :] for b in codebook.basis])
    return Codebook(variant=VECTORIZED, n=1, T=codebook.n * codebook.T,
                    constellation=codebook.constellation, basis=basis,
                    gamma=codebook.gamma, generator=codebook.generator)


def truncate_rows(codebook: Codebook, keep) -> Codebook:
    """Restrict every codeword to the given 1-based row indices."""
    keep = tuple(sorted(set(int(r) for r in keep)))
    if not keep:
        raise InvalidParameterError("keep set must be nonempty")
    if keep[0] < 1 or keep[-1] > codebook.n:
        raise InvalidParameterError(
            f"keep rows {keep} out of range 1..{codebook.n}")
    rows = [r - 1 for r in keep]
    return Codebook(variant=codebook.variant, n=len(keep), T=codebook.T,
                    constellation=codebook.constellation,
                    basis=codebook.basis[:, rows, :].copy(),
                    gamma=codebook.gamma, generator=codebook.generator,
                    kept_rows=keep)


# ---------------------------------------------------------------------------
# Metrics and normalization
# ---------------------------------------------------------------------------

def _pair_indices(size: int, max_pairs: int, rng: np.random.Generator):
    total = size * (size - 1) // 2
    if total <= max_pairs:
        return itertools.combinations(range(size), 2)
    def sample():
        seen = 0
        while seen < max_pairs:
            i, j = rng.integers(0, size, size=2)
            if i != j:
                seen += 1
                yield (int(i), int(j))
    return sample()


def code_metrics(codebook: Codebook, max_pairs: int = 200_000,
                 rng: np.random.Generator | None = None) -> dict:
    """Minima over scanned distinct codeword pairs.

    min_det           |det(dX dX^H)|, square codewords only (else None)
    min_product_distance  |prod_j dz_j| over the diagonal (row entries for
                          single-row codes)
    min_eigenvalue    smallest eigenvalue of dX dX^H
    """
    if codebook.size < 2:
        raise UndefinedMetricsError("metrics need at least two codewords")
    rng = rng or np.random.default_rng(0)
    words = codebook.all_codewords()
    square = codebook.n == codebook.T
    min_det = math.inf if square else None
    min_pd = math.inf
    min_eig = math.inf
    for i, j in _pair_indices(codebook.size, max_pairs, rng):
        d = words[i] - words[j]
        gram = d @ d.conj().T
        if square:
            min_det = min(min_det, abs(np.linalg.det(gram)))
        diag = d[0] if codebook.n == 1 else np.diagonal(d)
        min_pd = min(min_pd, abs(np.prod(diag)))
        min_eig = min(min_eig, float(np.linalg.eigvalsh(gram)[0]))
    return {"min_det": min_det, "min_product_distance": min_pd,
            "min_eigenvalue": min_eig}


def power_normalizer(codebook: Codebook, snr: float, r: float = 0.0) -> float:
    """Scale theta with theta^2 * (average transmit energy per use) = snr."""
    if codebook.size < 1:
        raise InvalidParameterError("empty codebook")
    if snr <= 0:
        raise InvalidParameterError(f"snr must be positive, got {snr}")
    r_max = codebook.info_symbols_per_matrix / codebook.T
    if not 0 <= r <= r_max:
        raise InvalidParameterError(f"r={r} outside [0, {r_max}]")
    return math.sqrt(snr / codebook.average_energy_per_use())


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

def _c2pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def export_descriptor(codebook: Codebook) -> dict:
    """JSON-ready reproducibility descriptor of a codebook."""
    desc = {
        "variant": codebook.variant,
        "n": codebook.n,
        "T": codebook.T,
        "info_symbols_per_matrix": codebook.info_symbols_per_matrix,
        "constellation": {
            "kind": codebook.constellation.kind,
            "size": codebook.constellation.size,
            "points": [_c2pair(p) for p in codebook.constellation.points],
        },
        "gamma": _c2pair(codebook.gamma) if codebook.gamma is not None else None,
        "generator": ([[_c2pair(v) for v in row] for row in codebook.generator.matrix]
                      if codebook.generator is not None else None),
    }
    if codebook.kept_rows:
        desc["kept_rows"] = list(codebook.kept_rows)
    return desc


def gamma_descriptor(gm: GammaMatrix) -> dict:
    return {
        "variant": "gamma",
        "n": gm.n,
        "gamma": _c2pair(gm.gamma),
        "matrix": [[_c2pair(v) for v in row] for row in gm.matrix],
    }
