import itertools
import random
from fractions import Fraction

import pytest

from fpcoh.errors import PrecisionError
from fpcoh.linalg import (
    Matrix,
    QuotientMap,
    Subspace,
    apply_poly,
    charpoly,
    echelon,
    image,
    invert,
    kernel,
    preimage,
    rank,
    solve,
)
from fpcoh.padic import BaseField, PadicNumber, PadicPoly

Q5 = BaseField(5, 8)


def rand_int_matrix(field, rng, rows, cols, bound=30):
    return Matrix.from_rational_rows(
        field, [[rng.randint(-bound, bound) for _ in range(cols)] for _ in range(rows)]
    )


def test_echelon_identity():
    m = Matrix.identity(Q5, 3)
    r, pivots, trans, rref = echelon(m)
    assert r == 3 and pivots == [0, 1, 2]
    assert all(
        trans.entries[i][j].same(m.entries[i][j]) for i in range(3) for j in range(3)
    )


def test_echelon_proportional_rows():
    m = Matrix.from_rational_rows(Q5, [[1, 2], [2, 4]])
    assert rank(m) == 1


def test_echelon_planted_rank():
    rng = random.Random(2)
    for _ in range(20):
        a = rand_int_matrix(Q5, rng, 5, 3)
        b = rand_int_matrix(Q5, rng, 3, 5)
        m = a * b
        # construction oracle: rank of 5x3 * 3x5 products of random
        # integer matrices is 3 unless a factor degenerates
        if rank(a) == 3 and rank(b) == 3:
            assert rank(m) == 3


def test_transform_reproduces_echelon():
    rng = random.Random(3)
    for _ in range(25):
        m = rand_int_matrix(Q5, rng, 4, 6)
        r, pivots, trans, rref = echelon(m)
        prod = trans * m
        for i in range(4):
            for j in range(6):
                assert prod.entries[i][j].same(rref.entries[i][j])


def test_pivot_ambiguity_raises():
    # O(5^2) sits below the zero cutoff, so its zero-ness is a guess
    z = PadicNumber.apparent_zero(Q5, 2)
    m = Matrix(Q5, 2, 2, [[z, Q5.one()], [z, Q5.one()]])
    with pytest.raises(PrecisionError):
        echelon(m)
    # a full-precision cancellation certifies as zero instead
    ok = PadicNumber.apparent_zero(Q5, Q5.precision)
    m2 = Matrix(Q5, 2, 2, [[ok, Q5.one()], [ok, Q5.one()]])
    assert echelon(m2)[0] == 1


def test_kernel_examples():
    m = Matrix.from_rational_rows(Q5, [[1, 2], [2, 4]])
    k = kernel(m)
    assert k.dim() == 1
    v = k.basis.column(0)
    # spans (-2, 1) up to scaling
    assert (v[0] + 2 * v[1]).is_apparent_zero()
    inv = Matrix.from_rational_rows(Q5, [[1, 1], [0, 3]])
    assert kernel(inv).dim() == 0


def test_kernel_multiply_back():
    rng = random.Random(4)
    skipped = 0
    for _ in range(100):
        rows, cols = rng.randint(1, 5), rng.randint(1, 5)
        m = rand_int_matrix(Q5, rng, rows, cols)
        try:
            k = kernel(m)
            assert rank(m) + k.dim() == cols
        except PrecisionError:
            # ill-conditioned draw (minor determinant eats too many digits):
            # refusing to guess is the documented behaviour
            skipped += 1
            continue
        for j in range(k.dim()):
            out = m.apply(k.basis.column(j))
            assert all(e.is_apparent_zero() for e in out)
    assert skipped <= 5


def test_solve_examples():
    m = Matrix.identity(Q5, 3)
    rhs = [Q5.from_int(i) for i in (3, 1, 4)]
    x = solve(m, rhs)
    assert all(a.same(b) for a, b in zip(x, rhs))

    m2 = Matrix.from_rational_rows(Q5, [[1], [0]])
    assert solve(m2, [Q5.zero(), Q5.one()]) is None


def test_solve_residual_oracle():
    rng = random.Random(5)
    for _ in range(40):
        rows, cols = rng.randint(1, 5), rng.randint(1, 5)
        m = rand_int_matrix(Q5, rng, rows, cols)
        x0 = [Q5.from_int(rng.randint(-9, 9)) for _ in range(cols)]
        rhs = m.apply(x0)
        x = solve(m, rhs)
        assert x is not None
        back = m.apply(x)
        assert all(a.same(b) for a, b in zip(back, rhs))


def leibniz_charpoly(m):
    """Brute-force det(T*I - m) over Fraction via permutation expansion."""
    n = m.rows
    # polynomial coefficients as lists of Fractions, ascending degree
    def pmul(a, b):
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return out

    total = [Fraction(0)] * (n + 1)
    for perm in itertools.permutations(range(n)):
        sign = 1
        seen = [False] * n
        for i in range(n):
            if seen[i]:
                continue
            l = 0
            j = i
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                l += 1
            if l % 2 == 0:
                sign = -sign
        term = [Fraction(sign)]
        for i in range(n):
            e = m.entries[i][perm[i]].rational_reconstruct()
            if perm[i] == i:
                term = pmul(term, [-e, Fraction(1)])
            else:
                term = pmul(term, [-e])
        term += [Fraction(0)] * (n + 1 - len(term))
        total = [a + b for a, b in zip(total, term)]
    return total


def test_charpoly_companion():
    m = Matrix.from_rational_rows(Q5, [[0, -5], [1, 2]])
    c = charpoly(m)
    assert c.to_string() == "5 - 2*T + T^2"


def test_charpoly_zero_matrix():
    m = Matrix.zeros(Q5, 4, 4)
    c = charpoly(m)
    assert c.degree() == 4
    assert all(c.coeff(i).is_exact_zero() for i in range(4))
    assert c.coeff(4).same(Q5.one())


def test_charpoly_against_leibniz():
    rng = random.Random(6)
    for _ in range(12):
        m = rand_int_matrix(Q5, rng, 4, 4, bound=6)
        mine = charpoly(m)
        brute = leibniz_charpoly(m)
        for i in range(5):
            assert mine.coeff(i).same(Q5.from_fraction(brute[i]))


def test_cayley_hamilton():
    rng = random.Random(7)
    for n in (2, 3, 4, 5, 6):
        m = rand_int_matrix(Q5, rng, n, n, bound=4)
        c = charpoly(m)
        z = apply_poly(c, m)
        assert z.is_apparent_zero()


def test_apply_poly_cases():
    m = rand_int_matrix(Q5, random.Random(8), 3, 3)
    one = PadicPoly.from_fractions(Q5, [1])
    assert all(
        apply_poly(one, m).entries[i][j].same(Matrix.identity(Q5, 3).entries[i][j])
        for i in range(3)
        for j in range(3)
    )
    p = PadicPoly.from_fractions(Q5, [1, -1])
    z = apply_poly(p, Matrix.identity(Q5, 3))
    assert z.is_apparent_zero()


def test_apply_poly_multiplicative():
    rng = random.Random(9)
    for _ in range(15):
        m = rand_int_matrix(Q5, rng, 3, 3, bound=5)
        p = PadicPoly.from_fractions(Q5, [rng.randint(-4, 4) for _ in range(3)])
        q = PadicPoly.from_fractions(Q5, [rng.randint(-4, 4) for _ in range(3)])
        lhs = apply_poly(p * q, m)
        rhs = apply_poly(p, m) * apply_poly(q, m)
        diff = lhs - rhs
        assert diff.is_apparent_zero()


def test_subspace_operations():
    rng = random.Random(10)
    v = Subspace.span(Q5, 3, [[Q5.from_int(1), Q5.from_int(0), Q5.from_int(1)]])
    w = Subspace.span(
        Q5,
        3,
        [
            [Q5.from_int(1), Q5.from_int(0), Q5.from_int(1)],
            [Q5.from_int(0), Q5.from_int(1), Q5.from_int(0)],
        ],
    )
    assert w.contains_subspace(v)
    assert v.add(w).dim() == 2
    assert v.intersect(w).dim() == 1
    ann = v.annihilator()
    assert ann.dim() == 2
    for j in range(ann.dim()):
        func = ann.basis.column(j)
        val = sum(
            (a * b for a, b in zip(func, v.basis.column(0))), Q5.zero()
        )
        assert val.is_apparent_zero()


def test_preimage_and_image():
    m = Matrix.from_rational_rows(Q5, [[1, 0, 0], [0, 1, 0]])
    w = Subspace.span(Q5, 2, [[Q5.one(), Q5.zero()]])
    pre = preimage(m, w)
    assert pre.dim() == 2  # e1 and e3
    img = image(m)
    assert img.dim() == 2


def test_quotient_map():
    rng = random.Random(11)
    for _ in range(20):
        n = rng.randint(1, 6)
        d = rng.randint(0, n)
        sub = Subspace.span(
            Q5,
            n,
            [[Q5.from_int(rng.randint(-9, 9)) for _ in range(n)] for _ in range(d)],
        )
        q = QuotientMap(Q5, n, sub)
        assert q.dim() == n - sub.dim()
        # section kills the subspace
        for j in range(sub.dim()):
            out = q.section(sub.basis.column(j))
            assert all(e.is_apparent_zero() for e in out)
        # section(lift) = identity
        for k in range(q.dim()):
            coords = [Q5.one() if i == k else Q5.zero() for i in range(q.dim())]
            back = q.section(q.lift(coords))
            for i, e in enumerate(back):
                assert e.same(coords[i])


def test_invert():
    rng = random.Random(12)
    for _ in range(10):
        m = rand_int_matrix(Q5, rng, 4, 4, bound=9)
        if rank(m) < 4:
            continue
        inv = invert(m)
        assert (inv * m).__sub__(Matrix.identity(Q5, 4)).is_apparent_zero()
