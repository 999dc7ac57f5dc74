import math
import random
from fractions import Fraction

import numpy as np
import pytest

from divlat.algebra import (
    AlgebraicScalar,
    ExactMatrix,
    invert_float,
    is_rational_ratio,
    parse_scalar,
    format_scalar,
    rational,
    read_matrix,
    sqrt_int,
    write_matrix,
)


def test_conjugate_product():
    a = rational(1) + sqrt_int(2)
    b = rational(1) - sqrt_int(2)
    assert a * b == rational(-1)


def test_sqrt2_squared():
    assert sqrt_int(2) * sqrt_int(2) == rational(2)


def test_inverse_sqrt5():
    x = AlgebraicScalar.inv_sqrt(5)
    assert x == AlgebraicScalar.sqrt(5, Fraction(1, 5))
    assert rational(5) * x * x == rational(1)


def test_sqrt_reduction():
    # sqrt(12) = 2 sqrt(3); sqrt(2)*sqrt(6) = 2 sqrt(3)
    assert AlgebraicScalar.sqrt(12) == AlgebraicScalar.sqrt(3, 2)
    assert sqrt_int(2) * sqrt_int(6) == AlgebraicScalar.sqrt(3, 2)


def test_division_by_zero():
    with pytest.raises(ZeroDivisionError):
        rational(1) / AlgebraicScalar()
    with pytest.raises(ZeroDivisionError):
        is_rational_ratio(sqrt_int(2), AlgebraicScalar())


def test_rational_ratio_examples():
    assert not is_rational_ratio(sqrt_int(2), rational(1))
    assert is_rational_ratio(rational(2) * sqrt_int(2), sqrt_int(2))
    golden_plus = (rational(1) + sqrt_int(5)) / rational(2)
    golden_minus = (rational(1) - sqrt_int(5)) / rational(2)
    assert not is_rational_ratio(golden_plus, golden_minus)


def test_rational_ratio_symmetric():
    pool = _scalar_pool(random.Random(7))
    for p in pool:
        for q in pool:
            if p.is_zero() or q.is_zero():
                continue
            assert is_rational_ratio(p, q) == is_rational_ratio(q, p)


def _scalar_pool(rng: random.Random, size: int = 12) -> list[AlgebraicScalar]:
    roots = [1, 2, 3, 5, 6]
    out = []
    for _ in range(size):
        x = AlgebraicScalar()
        for s in rng.sample(roots, rng.randint(1, 3)):
            c = Fraction(rng.randint(-4, 4), rng.randint(1, 4))
            x = x + AlgebraicScalar.sqrt(s, c) if s > 1 else x + rational(c)
        out.append(x)
    return out


def test_field_axioms_randomized():
    rng = random.Random(20240517)
    pool = _scalar_pool(rng, 9)
    one = rational(1)
    for a in pool:
        for b in pool:
            for c in pool[:4]:
                assert (a + b) + c == a + (b + c)
                assert (a * b) * c == a * (b * c)
                assert a * (b + c) == a * b + a * c
        if not a.is_zero():
            assert a * a.inverse() == one


def test_float_lowering():
    assert float(sqrt_int(2)) == pytest.approx(math.sqrt(2), abs=0)
    assert float(rational(Fraction(1, 3))) == pytest.approx(1 / 3, abs=0)
    m = ExactMatrix.from_rows([[sqrt_int(2)]])
    assert m.to_float()[0, 0] == 1.4142135623730951


def test_exact_rank_identity():
    assert ExactMatrix.identity(4).exact_rank() == 4


def test_exact_rank_dependent_rows():
    m = ExactMatrix.from_rows([
        [rational(1), sqrt_int(2)],
        [sqrt_int(2), rational(2)],
    ])
    assert m.exact_rank() == 1


def test_exact_rank_unimodular_product():
    # Full-rank 8x8 built by unimodular row operations on the identity;
    # rank must be 8 no matter how entries mix.
    rng = random.Random(99)
    m = ExactMatrix.identity(8)
    for _ in range(40):
        i, j = rng.sample(range(8), 2)
        f = rational(rng.randint(-3, 3))
        for c in range(8):
            m.set(i, c, m.get(i, c) + f * m.get(j, c))
    assert m.exact_rank() == 8
    assert m.exact_det() in (rational(1), rational(-1))


def test_rank_transpose_randomized():
    rng = random.Random(3)
    for _ in range(10):
        m = ExactMatrix(6, 6)
        for _ in range(rng.randint(4, 14)):
            r, c = rng.randrange(6), rng.randrange(6)
            s = rng.choice([1, 2, 5])
            m.set(r, c, AlgebraicScalar.sqrt(s, Fraction(rng.randint(-2, 2))))
        assert m.exact_rank() == m.transpose().exact_rank()


def test_exact_det_examples():
    assert ExactMatrix.identity(5).exact_det() == rational(1)
    d = ExactMatrix.from_rows([[sqrt_int(2), 0], [0, sqrt_int(2)]])
    assert d.exact_det() == rational(2)
    m = ExactMatrix.from_rows([[1, 2], [3, 4]])
    assert m.exact_det() == rational(-2)
    with pytest.raises(ValueError):
        ExactMatrix(2, 3).exact_det()


def test_det_float_agreement():
    rng = random.Random(11)
    for _ in range(6):
        n = rng.randint(3, 16)
        m = ExactMatrix(n, n)
        for i in range(n):
            for j in range(n):
                if i == j or rng.random() < 0.3:
                    s = rng.choice([1, 1, 2, 3])
                    m.set(i, j, AlgebraicScalar.sqrt(s, Fraction(rng.randint(-2, 2), rng.randint(1, 2))))
        for i in range(n):
            if m.get(i, i).is_zero():
                m.set(i, i, rational(3))
        exact = float(m.exact_det())
        approx = np.linalg.det(m.to_float())
        if abs(exact) > 1e-9:
            assert approx == pytest.approx(exact, rel=1e-6)


def test_nullspace_and_solve():
    m = ExactMatrix.from_rows([
        [1, 2, 3],
        [2, 4, 6],
    ])
    basis = m.nullspace()
    assert len(basis) == 2
    for v in basis:
        assert all(x.is_zero() for x in m.matvec(v))
    sol = m.solve([rational(6), rational(12)])
    assert sol is not None
    assert m.matvec(sol) == [rational(6), rational(12)]
    assert m.solve([rational(1), rational(0)]) is None


def test_invert_float():
    assert np.allclose(invert_float(np.eye(3)), np.eye(3))
    assert np.allclose(invert_float(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    rng = np.random.default_rng(5)
    m = rng.normal(size=(16, 16)) + 4 * np.eye(16)
    inv = invert_float(m)
    assert np.max(np.abs(m @ inv - np.eye(16))) <= 1e-8
    with pytest.raises(ValueError):
        invert_float(np.array([[1.0, 1.0], [1.0, 1.0]]))


def test_scalar_format_round_trip():
    basis = [2, 3]
    x = rational(Fraction(1, 2)) + AlgebraicScalar.sqrt(2, Fraction(-1, 3))
    s = format_scalar(x, basis)
    assert s == "1/2@{} -1/3@{1}"
    assert parse_scalar(s, basis) == x
    y = sqrt_int(6)  # subset {1,2}
    assert parse_scalar(format_scalar(y, basis), basis) == y


def test_matrix_file_round_trip_bit_exact():
    rng = random.Random(42)
    m = ExactMatrix(5, 7)
    for _ in range(12):
        r, c = rng.randrange(5), rng.randrange(7)
        s = rng.choice([1, 2, 5, 10])
        m.set(r, c, AlgebraicScalar.sqrt(s, Fraction(rng.randint(-5, 5), rng.randint(1, 6))))
    text = write_matrix(m, header_lines=["name demo", "seed 42"])
    m2, header = read_matrix(text)
    assert header == ["name demo", "seed 42"]
    assert m2 == m
    assert write_matrix(m2, header_lines=header) == text
