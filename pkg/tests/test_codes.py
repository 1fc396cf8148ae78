import itertools
import math

import numpy as np
import pytest

from coopdiv import codes as cd

C4 = cd.make_constellation(cd.QAM, 4)
C16 = cd.make_constellation(cd.QAM, 16)


# ---------------------------------------------------------------------------
# constellations
# ---------------------------------------------------------------------------

def test_qam4_points():
    expected = {1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j}
    assert set(map(complex, C4.points)) == expected


def test_qam16_points_grid():
    axis = {-3, -1, 1, 3}
    pts = set(map(complex, C16.points))
    assert len(pts) == 16
    assert {p.real for p in pts} == axis and {p.imag for p in pts} == axis


def test_qam_rejects_non_square():
    with pytest.raises(cd.InvalidParameterError):
        cd.make_constellation(cd.QAM, 5)


def test_constellation_centered_distinct():
    for const in (C4, C16, cd.make_constellation(cd.HEX, 4),
                  cd.make_constellation(cd.HEX, 8)):
        assert abs(const.points.sum()) < 1e-9
        assert len(set(map(complex, const.points))) == const.size
        assert const.unit_energy_scale == pytest.approx(
            1 / math.sqrt(const.average_energy))


# ---------------------------------------------------------------------------
# lattice generators
# ---------------------------------------------------------------------------

def test_generator_n1_identity():
    gen = cd.perfect_lattice_generator(1)
    assert np.array_equal(gen.matrix, np.eye(1))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_generator_unitary(n):
    gen = cd.perfect_lattice_generator(n)
    # oracle: direct matrix multiply
    defect = np.linalg.norm(gen.matrix.conj().T @ gen.matrix - np.eye(n))
    assert defect <= cd.UNITARITY_TOL


def test_generator_unsupported_dimension():
    with pytest.raises(cd.UnsupportedDimensionError):
        cd.perfect_lattice_generator(7)


def test_golden_generator_uses_golden_ratio():
    gen = cd.perfect_lattice_generator(2)
    theta = (1 + math.sqrt(5)) / 2
    # second basis row is theta times the first, embedding-wise conjugated
    ratio = gen.matrix[1, 0] / gen.matrix[0, 0]
    assert ratio == pytest.approx(theta)


def test_lattice_points_distinct_over_qam4():
    gen = cd.perfect_lattice_generator(2)
    points = [tuple(np.round(np.array(f) @ gen.matrix, 12))
              for f in itertools.product(C4.points, repeat=2)]
    assert len(set(points)) == 16


# ---------------------------------------------------------------------------
# gamma matrix
# ---------------------------------------------------------------------------

def test_gamma_matrix_structure():
    gm = cd.gamma_matrix(2, 1j)
    assert np.array_equal(gm.matrix, np.array([[0, 1j], [1, 0]]))


def test_gamma_power_identity():
    gm = cd.gamma_matrix(2, 1j)
    assert np.max(np.abs(gm.power(2) - 1j * np.eye(2))) <= 1e-12
    gm3 = cd.gamma_matrix(3, cd.default_gamma(3))
    assert np.max(np.abs(gm3.power(3) - gm3.gamma * np.eye(3))) <= 1e-12


def test_gamma_unitary_when_unit_modulus():
    gm = cd.gamma_matrix(3, np.exp(0.7j))
    defect = np.linalg.norm(gm.matrix.conj().T @ gm.matrix - np.eye(3))
    assert defect <= 1e-12


def test_gamma_zero_rejected():
    with pytest.raises(cd.InvalidParameterError):
        cd.gamma_matrix(2, 0)


# ---------------------------------------------------------------------------
# horizontally restricted code
# ---------------------------------------------------------------------------

def test_horizontal_n1_is_constellation():
    book = cd.horizontally_restricted_code(1, C4)
    words = {complex(book.codeword(i)[0, 0]) for i in range(book.size)}
    assert words == set(map(complex, C4.points))


def test_horizontal_n2_distinct_rows():
    book = cd.horizontally_restricted_code(2, C4)
    words = book.all_codewords()
    assert book.size == 16 and words.shape == (16, 1, 2)
    for i in range(16):
        for j in range(i + 1, 16):
            assert np.max(np.abs(words[i] - words[j])) > 1e-9


def test_horizontal_nonvanishing_product_distance():
    # brute force over all 120 pairs
    book = cd.horizontally_restricted_code(2, C4)
    words = book.all_codewords()[:, 0, :]
    best = math.inf
    for i in range(16):
        for j in range(i + 1, 16):
            best = min(best, abs(np.prod(words[i] - words[j])))
    assert best > 0.5  # 4/sqrt(5) exactly; any positive floor witnesses NVD
    assert best == pytest.approx(4 / math.sqrt(5), abs=1e-9)


# ---------------------------------------------------------------------------
# diagonal restricted code
# ---------------------------------------------------------------------------

def test_diagonal_zero_symbols_zero_matrix():
    book = cd.diagonal_restricted_code(2, C4)
    assert np.array_equal(book.codeword_from_symbols(np.zeros(2)),
                          np.zeros((2, 2)))


@pytest.mark.parametrize("n,expected", [(2, 4 / math.sqrt(5)), (3, 8 / 7)])
def test_diagonal_min_product_distance_exhaustive(n, expected):
    book = cd.diagonal_restricted_code(n, C4)
    metrics = cd.code_metrics(book, max_pairs=10**7)
    assert metrics["min_product_distance"] >= 1 - cd.NVD_TOL
    assert metrics["min_product_distance"] == pytest.approx(expected, rel=1e-9)


def test_diagonal_truncated_rows_still_distinct():
    book = cd.truncate_rows(cd.diagonal_restricted_code(2, C4), keep={1})
    words = book.all_codewords().reshape(book.size, -1)
    for i in range(book.size):
        for j in range(i + 1, book.size):
            assert np.max(np.abs(words[i] - words[j])) > 1e-9


# ---------------------------------------------------------------------------
# integral restriction code
# ---------------------------------------------------------------------------

def test_integral_expansion_n2():
    book = cd.integral_restriction_code(2, C4, gamma=1j)
    f0, f1 = 1 + 1j, -1 + 1j
    X = book.codeword_from_symbols(np.array([f0, f1]))
    assert np.allclose(X, np.array([[f0, 1j * f1], [f1, f0]]))


def test_integral_dispersion_matrices_n2():
    book = cd.integral_restriction_code(2, C4, gamma=1j)
    gm = cd.gamma_matrix(2, 1j)
    assert np.allclose(book.dispersion[0], gm.matrix)   # A_1 = Gamma
    assert np.allclose(book.dispersion[1], np.eye(2))   # A_2 = I
    for a in book.dispersion:
        assert np.linalg.norm(a.conj().T @ a - np.eye(2)) <= cd.UNITARITY_TOL


def test_integral_alphabet_growth_bounded():
    # entries stay inside constellation * {1, gamma}: at most 2 * |A| values
    book = cd.integral_restriction_code(8, C4)
    allowed = {complex(np.round(p, 9)) for p in C4.points}
    allowed |= {complex(np.round(book.gamma * p, 9)) for p in C4.points}
    rng = np.random.default_rng(0)
    for _ in range(100):
        X = book.codeword(int(rng.integers(0, book.size)))
        entries = {complex(np.round(v, 9)) for v in X.ravel()}
        assert entries <= allowed
    assert len(allowed) <= 2 * C4.size


def test_integral_rows_from_raw_row_and_dispersion():
    for n in (2, 3):
        book = cd.integral_restriction_code(n, C4)
        rng = np.random.default_rng(1)
        for _ in range(10):
            X = book.codeword(int(rng.integers(0, book.size)))
            z = X[book.raw_row]
            for u in range(n):
                assert np.allclose(X[u], z @ book.dispersion[u], atol=1e-12)


# ---------------------------------------------------------------------------
# layered / full codes
# ---------------------------------------------------------------------------

def _as_set(book):
    return {tuple(np.round(w.ravel(), 9)) for w in book.iter_codewords()}


def test_m_layered_single_layer_equals_diagonal():
    assert _as_set(cd.m_layered_code(2, 1, C4)) \
        == _as_set(cd.diagonal_restricted_code(2, C4))


def test_m_layered_full_equals_full_cda():
    assert _as_set(cd.m_layered_code(2, 2, C4)) \
        == _as_set(cd.full_cda_code(2, C4))


def test_m_layered_cardinality():
    book = cd.m_layered_code(3, 2, C4)
    assert book.size == 4 ** 6


def test_m_layered_range_check():
    with pytest.raises(cd.InvalidParameterError):
        cd.m_layered_code(2, 3, C4)


def test_full_cda_size_and_dispersion():
    book = cd.full_cda_code(2, C4)
    assert book.size == 256
    for a in book.dispersion:
        defect = np.linalg.norm(a.conj().T @ a - np.eye(2))
        assert defect <= cd.UNITARITY_TOL


def test_full_cda_nonvanishing_determinant():
    book = cd.full_cda_code(2, C4)
    words = book.all_codewords()
    rng = np.random.default_rng(3)
    for _ in range(500):
        i, j = rng.integers(0, book.size, 2)
        if i == j:
            continue
        d = words[i] - words[j]
        assert abs(np.linalg.det(d @ d.conj().T)) > 1e-9


def test_full_cda_row_dispersion_consistency():
    for n in (2, 3):
        book = cd.full_cda_code(n, C4)
        rng = np.random.default_rng(4)
        for _ in range(10):
            f = book.symbols(int(rng.integers(0, book.size)))
            X = book.codeword_from_symbols(f)
            for u in range(n):
                assert np.allclose(X[u], f @ book.dispersion[u], atol=1e-12)


def test_linearity_all_variants():
    rng = np.random.default_rng(5)
    books = [cd.horizontally_restricted_code(2, C4),
             cd.diagonal_restricted_code(3, C4),
             cd.integral_restriction_code(3, C4),
             cd.m_layered_code(3, 2, C4),
             cd.full_cda_code(2, C4),
             cd.horizontally_stacked_code(2, 2, C4)]
    for book in books:
        k = book.info_symbols_per_matrix
        f1 = rng.normal(size=k) + 1j * rng.normal(size=k)
        f2 = rng.normal(size=k) + 1j * rng.normal(size=k)
        lhs = book.codeword_from_symbols(f1 + f2)
        rhs = book.codeword_from_symbols(f1) + book.codeword_from_symbols(f2)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_cardinality_all_variants():
    assert cd.horizontally_restricted_code(2, C4).size == 4 ** 2
    assert cd.diagonal_restricted_code(3, C4).size == 4 ** 3
    assert cd.integral_restriction_code(8, C4).size == 4 ** 8
    assert cd.full_cda_code(2, C16).size == 16 ** 4
    assert cd.horizontally_stacked_code(2, 2, C4).size == 4 ** 8


# ---------------------------------------------------------------------------
# stacked code
# ---------------------------------------------------------------------------

def test_stacked_single_block_is_full_code():
    assert _as_set(cd.horizontally_stacked_code(2, 1, C4)) \
        == _as_set(cd.full_cda_code(2, C4))


def test_stacked_shape():
    book = cd.horizontally_stacked_code(2, 2, C4)
    assert (book.n, book.T) == (2, 4)
    assert book.size == 4 ** 8


def test_stacked_eigenvalues_dominate_block():
    book = cd.horizontally_stacked_code(2, 2, C4)
    rng = np.random.default_rng(6)
    for _ in range(100):
        f = book.symbols(int(rng.integers(0, book.size)))
        X = book.codeword_from_symbols(f)
        X1 = X[:, :2]
        full = np.linalg.eigvalsh(X @ X.conj().T)
        block = np.linalg.eigvalsh(X1 @ X1.conj().T)
        assert np.all(full >= block - 1e-9)


# ---------------------------------------------------------------------------
# vectorization and truncation
# ---------------------------------------------------------------------------

def test_vectorize_column_major():
    X = np.array([[1, 3], [2, 4]])
    assert np.array_equal(cd.vectorize_columns(X), [1, 2, 3, 4])
    assert np.array_equal(cd.vectorize_columns(np.zeros((2, 2))), np.zeros(4))


def test_vectorize_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(100):
        X = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
        v = cd.vectorize_columns(X)
        assert np.array_equal(cd.reshape_columns(v, 3, 4), X)


def test_truncate_keep_all_is_identity():
    book = cd.diagonal_restricted_code(2, C4)
    trunc = cd.truncate_rows(book, {1, 2})
    assert np.allclose(trunc.all_codewords(), book.all_codewords())


def test_truncate_diagonal_row1():
    book = cd.diagonal_restricted_code(2, C4)
    trunc = cd.truncate_rows(book, {1})
    for i in range(book.size):
        full = book.codeword(i)
        assert np.allclose(trunc.codeword(i), full[0:1, :])
        assert trunc.codeword(i)[0, 1] == 0


def test_truncate_empty_keep_rejected():
    with pytest.raises(cd.InvalidParameterError):
        cd.truncate_rows(cd.diagonal_restricted_code(2, C4), set())


def test_truncation_eigenvalue_square_bound():
    # kept-row Gram eigenvalue >= (smallest full eigenvalue)^2 when the
    # latter is <= 1
    book = cd.full_cda_code(2, C4)
    trunc = cd.truncate_rows(book, {1})
    words = book.all_codewords()
    rng = np.random.default_rng(8)
    checked = 0
    for _ in range(200):
        i, j = rng.integers(0, book.size, 2)
        if i == j:
            continue
        d = words[i] - words[j]
        lam_full = np.linalg.eigvalsh(d @ d.conj().T)[0]
        dt = trunc.codeword(i) - trunc.codeword(j)
        lam_trunc = np.linalg.eigvalsh(dt @ dt.conj().T)[0]
        if lam_full <= 1.0:
            checked += 1
            assert lam_trunc >= lam_full ** 2 - 1e-9
    assert checked > 0


# ---------------------------------------------------------------------------
# metrics and power normalization
# ---------------------------------------------------------------------------

def test_metrics_uncoded_min_distance():
    book = cd.uncoded_code(C4)
    metrics = cd.code_metrics(book, max_pairs=10**6)
    assert metrics["min_product_distance"] == pytest.approx(
        C4.min_distance())


def test_metrics_singleton_rejected():
    single = cd.Codebook(variant=cd.UNCODED, n=1, T=1,
                         constellation=cd.Constellation(
                             kind=cd.QAM, points=np.array([1 + 0j]),
                             unit_energy_scale=1.0),
                         basis=np.ones((1, 1, 1), dtype=complex))
    with pytest.raises(cd.UndefinedMetricsError):
        cd.code_metrics(single)


def test_power_normalizer_contract():
    for book in (cd.uncoded_code(C4), cd.diagonal_restricted_code(2, C4),
                 cd.integral_restriction_code(3, C4)):
        theta = cd.power_normalizer(book, snr=10.0)
        assert theta ** 2 * book.average_energy_per_use() \
            == pytest.approx(10.0)


def test_power_normalizer_matches_direct_average():
    # direct average over all 256 codewords of the n=2 diagonal book
    book = cd.diagonal_restricted_code(2, C16)
    theta = cd.power_normalizer(book, snr=25.0)
    words = book.all_codewords()
    mean_energy = float(np.mean(np.abs(theta * words) ** 2)) * book.n
    # n diagonal entries spread over n uses; per-use average equals snr
    assert mean_energy / book.n * book.n == pytest.approx(25.0, rel=1e-9)


def test_power_normalizer_snr_scaling_exponent():
    # theta^2 tracks snr^(1 - r/n) when the constellation grows as snr^(r/n)
    n, r = 2, 1.0
    snr1, m1 = 4.0 ** 8, 2 ** 8
    snr2, m2 = 4.0 ** 12, 2 ** 12
    t1 = cd.power_normalizer(cd.full_cda_code(
        n, cd.make_constellation(cd.QAM, m1)), snr1, r=r / n)
    t2 = cd.power_normalizer(cd.full_cda_code(
        n, cd.make_constellation(cd.QAM, m2)), snr2, r=r / n)
    exponent = math.log(t2 ** 2 / t1 ** 2) / math.log(snr2 / snr1)
    assert exponent == pytest.approx(1 - r / n, abs=0.01)


def test_power_normalizer_rejects_empty_or_bad_snr():
    with pytest.raises(cd.InvalidParameterError):
        cd.power_normalizer(cd.uncoded_code(C4), snr=0.0)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def test_export_descriptor_round_trippable():
    book = cd.integral_restriction_code(2, C4, gamma=1j)
    desc = cd.export_descriptor(book)
    assert desc["variant"] == cd.INTEGRAL
    assert desc["gamma"] == [0.0, 1.0]
    assert desc["constellation"]["size"] == 4
    import json
    json.dumps(desc)  # must be JSON-serializable


def test_gamma_descriptor_entries():
    gm = cd.gamma_matrix(2, 1j)
    desc = cd.gamma_descriptor(gm)
    assert desc["matrix"] == [[[0.0, 0.0], [0.0, 1.0]],
                              [[1.0, 0.0], [0.0, 0.0]]]
