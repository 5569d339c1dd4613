"""Shared random generators for the test suite (seeded, deterministic)."""

from fpcoh.homological import ChainMap, CommutativeSquare, Complex
from fpcoh.linalg import Matrix, rank


def rand_invertible(field, rng, n, bound=4):
    while True:
        m = Matrix.from_rational_rows(
            field, [[rng.randint(-bound, bound) for _ in range(n)] for _ in range(n)]
        )
        if n == 0 or rank(m) == n:
            return m


def rand_matrix(field, rng, rows, cols, bound=4):
    return Matrix.from_rational_rows(
        field, [[rng.randint(-bound, bound) for _ in range(cols)] for _ in range(rows)]
    )


class StandardShape:
    """Dimension data for a split-model complex: cohomology ranks h_i and
    differential ranks r_i, with C^i = H_i (+) I_i (+) I'_{i-1}."""

    def __init__(self, lo, hi, h, r):
        self.lo = lo
        self.hi = hi
        self.h = dict(h)
        self.r = dict(r)

    def dim(self, i):
        return self.h.get(i, 0) + self.r.get(i, 0) + self.r.get(i - 1, 0)

    @staticmethod
    def random(rng, lo, hi, maxdim=2):
        h = {i: rng.randint(0, maxdim) for i in range(lo, hi + 1)}
        r = {i: rng.randint(0, maxdim) for i in range(lo, hi)}
        return StandardShape(lo, hi, h, r)


def standard_complex(field, shape):
    """The standard-form complex for a shape: d maps the I_i block of C^i
    identically onto the I'_i block of C^(i+1)."""
    dims = {i: shape.dim(i) for i in range(shape.lo, shape.hi + 1)}
    diffs = {}
    for i in range(shape.lo, shape.hi):
        m = Matrix.zeros(field, dims[i + 1], dims[i])
        hsrc = shape.h.get(i, 0)
        htgt = shape.h.get(i + 1, 0) + shape.r.get(i + 1, 0)
        for k in range(shape.r.get(i, 0)):
            m.entries[htgt + k][hsrc + k] = field.one()
        diffs[i] = m
    return Complex(field, shape.lo, shape.hi, dims, diffs)


def random_complex(field, rng, lo=-1, hi=3, maxdim=2, return_conjugator=False):
    """Random bounded complex with d*d = 0, obtained by conjugating a
    standard-form complex by random invertible degree-wise maps."""
    shape = StandardShape.random(rng, lo, hi, maxdim)
    std = standard_complex(field, shape)
    conj = {i: rand_invertible(field, rng, std.dim(i)) for i in std.degrees()}
    conj_inv = {i: _inv(conj[i]) for i in std.degrees()}
    diffs = {}
    for i in range(lo, hi):
        diffs[i] = conj[i + 1] * std.diff(i) * conj_inv[i]
    c = Complex(field, lo, hi, dict(std.dims), diffs)
    if return_conjugator:
        return c, shape, conj, conj_inv
    return c


def _inv(m):
    from fpcoh.linalg import invert

    return invert(m)


def standard_chain_map(field, rng, src_shape, tgt_shape, bound=4):
    """Random chain map between standard complexes of possibly different
    shapes: block map (H -> H, I -> I, I' -> I') with matched I blocks."""
    comps = {}
    a_blocks = {
        i: rand_matrix(field, rng, tgt_shape.r.get(i, 0), src_shape.r.get(i, 0), bound)
        for i in range(min(src_shape.lo, tgt_shape.lo) - 1, max(src_shape.hi, tgt_shape.hi) + 1)
    }
    for i in range(src_shape.lo, src_shape.hi + 1):
        rows = tgt_shape.dim(i)
        cols = src_shape.dim(i)
        m = Matrix.zeros(field, rows, cols)
        hmap = rand_matrix(field, rng, tgt_shape.h.get(i, 0), src_shape.h.get(i, 0), bound)
        _paste(m, hmap, 0, 0)
        _paste(m, a_blocks[i], tgt_shape.h.get(i, 0), src_shape.h.get(i, 0))
        _paste(
            m,
            a_blocks[i - 1],
            tgt_shape.h.get(i, 0) + tgt_shape.r.get(i, 0),
            src_shape.h.get(i, 0) + src_shape.r.get(i, 0),
        )
        comps[i] = m
    return comps


def _paste(m, block, r0, c0):
    for i in range(block.rows):
        for j in range(block.cols):
            m.entries[r0 + i][c0 + j] = block.entries[i][j]


def random_chain_map(field, rng, lo=-1, hi=3, maxdim=2):
    """Random chain map between two fresh random complexes."""
    src_shape = StandardShape.random(rng, lo, hi, maxdim)
    tgt_shape = StandardShape.random(rng, lo, hi, maxdim)
    src_std = standard_complex(field, src_shape)
    tgt_std = standard_complex(field, tgt_shape)
    comps_std = standard_chain_map(field, rng, src_shape, tgt_shape)
    s_src = {i: rand_invertible(field, rng, src_std.dim(i)) for i in src_std.degrees()}
    s_tgt = {i: rand_invertible(field, rng, tgt_std.dim(i)) for i in tgt_std.degrees()}
    src = Complex(
        field,
        lo,
        hi,
        dict(src_std.dims),
        {i: s_src[i + 1] * src_std.diff(i) * _inv(s_src[i]) for i in range(lo, hi)},
    )
    tgt = Complex(
        field,
        lo,
        hi,
        dict(tgt_std.dims),
        {i: s_tgt[i + 1] * tgt_std.diff(i) * _inv(s_tgt[i]) for i in range(lo, hi)},
    )
    comps = {i: s_tgt[i] * comps_std[i] * _inv(s_src[i]) for i in src.degrees()}
    return ChainMap(src, tgt, comps)


def random_square(field, rng, lo=-1, hi=2, maxdim=2):
    """Random commutative square with invertible left vertical: C and D share
    the shapes of A and B, f is a degree-wise change of basis, and
    gamma := g o alpha o f^(-1)."""
    a_shape = StandardShape.random(rng, lo, hi, maxdim)
    b_shape = StandardShape.random(rng, lo, hi, maxdim)
    a_std = standard_complex(field, a_shape)
    b_std = standard_complex(field, b_shape)
    alpha_std = standard_chain_map(field, rng, a_shape, b_shape)
    g_std = standard_chain_map(field, rng, b_shape, b_shape)

    def conjugate(std, rng):
        s = {i: rand_invertible(field, rng, std.dim(i)) for i in std.degrees()}
        c = Complex(
            field,
            std.lo,
            std.hi,
            dict(std.dims),
            {i: s[i + 1] * std.diff(i) * _inv(s[i]) for i in range(std.lo, std.hi)},
        )
        return c, s

    A, sa = conjugate(a_std, rng)
    B, sb = conjugate(b_std, rng)
    C, sc = conjugate(a_std, rng)
    D, sd = conjugate(b_std, rng)
    alpha = ChainMap(
        A, B, {i: sb[i] * alpha_std[i] * _inv(sa[i]) for i in A.degrees()}
    )
    f = ChainMap(A, C, {i: sc[i] * _inv(sa[i]) for i in A.degrees()})
    g = ChainMap(
        B, D, {i: sd[i] * g_std[i] * _inv(sb[i]) for i in B.degrees()}
    )
    gamma = ChainMap(
        C, D, {i: sd[i] * g_std[i] * alpha_std[i] * _inv(sc[i]) for i in C.degrees()}
    )
    return CommutativeSquare(alpha, gamma, f, g)
