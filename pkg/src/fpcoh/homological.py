"""Bounded cochain complexes over Q_p: cones, shifts, the commutative-square
fiber, cohomology with explicit cocycle sections, and induced maps.

Sign convention, fixed once for the whole package:
    Cone(f)^i = B^i (+) A^(i+1),  d = [[d_B, f], [0, -d_A]]
    (C[k])^i  = C^(i+k),          d_{C[k]} = (-1)^k d_C
The square fiber is the literal Cone(Cone(alpha)[-1] -> Cone(gamma)[-1])[-1],
reordered so that its degree-i piece reads A^i (+) B^(i-1) (+) C^(i-1) (+)
D^(i-2).  Reordering summands changes nothing but the matrix layout.
"""

from .errors import DomainError
from .linalg import (
    Matrix,
    QuotientMap,
    Subspace,
    echelon,
    image,
    kernel,
    solve,
)


class Complex:
    """Differentials d_i : C^i -> C^(i+1); everything outside [lo, hi] is 0."""

    def __init__(self, field, lo, hi, dims, diffs, slots=None):
        if lo > hi:
            raise DomainError("empty degree range")
        self.field = field
        self.lo = lo
        self.hi = hi
        self.dims = dict(dims)
        self.diffs = dict(diffs)
        # optional layout metadata: degree -> list of (name, source_degree, size)
        self.slots = slots
        for i in range(lo, hi):
            d = self.diff(i)
            if d.rows != self.dim(i + 1) or d.cols != self.dim(i):
                raise DomainError("differential shape mismatch at degree %d" % i)

    def dim(self, i):
        return self.dims.get(i, 0)

    def diff(self, i):
        d = self.diffs.get(i)
        if d is None:
            return Matrix.zeros(self.field, self.dim(i + 1), self.dim(i))
        return d

    def degrees(self):
        return range(self.lo, self.hi + 1)

    def zero_cochain(self, i):
        return [self.field.zero()] * self.dim(i)

    def __repr__(self):
        return "Complex(deg %d..%d, dims %s)" % (
            self.lo,
            self.hi,
            [self.dim(i) for i in self.degrees()],
        )

    @staticmethod
    def concentrated(field, degree, dim):
        return Complex(field, degree, degree, {degree: dim}, {})


def verify_complex(c):
    """None when d*d = 0 at working precision, else the first violation."""
    for i in range(c.lo, c.hi - 1):
        prod = c.diff(i + 1) * c.diff(i)
        for r in range(prod.rows):
            for s in range(prod.cols):
                if not prod.entries[r][s].is_apparent_zero():
                    return (i, r, s, prod.entries[r][s])
    return None


class ChainMap:
    def __init__(self, source, target, components, check=True):
        self.source = source
        self.target = target
        self.components = dict(components)
        if check:
            bad = self.violation()
            if bad is not None:
                raise DomainError("not a chain map at degree %d" % bad)

    def component(self, i):
        m = self.components.get(i)
        if m is None:
            return Matrix.zeros(self.source.field, self.target.dim(i), self.source.dim(i))
        return m

    def violation(self):
        lo = min(self.source.lo, self.target.lo)
        hi = max(self.source.hi, self.target.hi)
        for i in range(lo, hi):
            lhs = self.component(i + 1) * self.source.diff(i)
            rhs = self.target.diff(i) * self.component(i)
            if not (lhs - rhs).is_apparent_zero():
                return i
        return None

    @staticmethod
    def zero(source, target):
        return ChainMap(source, target, {}, check=False)

    @staticmethod
    def identity(c):
        comps = {i: Matrix.identity(c.field, c.dim(i)) for i in c.degrees()}
        return ChainMap(c, c, comps, check=False)

    def compose(self, other):
        """self after other."""
        comps = {}
        for i in other.source.degrees():
            comps[i] = self.component(i) * other.component(i)
        return ChainMap(other.source, self.target, comps, check=False)


class CommutativeSquare:
    """alpha: A -> B, gamma: C -> D, verticals f: A -> C and g: B -> D."""

    def __init__(self, alpha, gamma, f, g, check=True):
        self.A = alpha.source
        self.B = alpha.target
        self.C = gamma.source
        self.D = gamma.target
        self.alpha = alpha
        self.gamma = gamma
        self.f = f
        self.g = g
        if f.source is not self.A or f.target is not self.C:
            raise DomainError("vertical f must run A -> C")
        if g.source is not self.B or g.target is not self.D:
            raise DomainError("vertical g must run B -> D")
        if check and not self.commutes():
            raise DomainError("square does not commute")

    def commutes(self):
        lo = min(self.A.lo, self.B.lo, self.C.lo, self.D.lo)
        hi = max(self.A.hi, self.B.hi, self.C.hi, self.D.hi)
        for i in range(lo, hi + 1):
            lhs = self.g.component(i) * self.alpha.component(i)
            rhs = self.gamma.component(i) * self.f.component(i)
            if not (lhs - rhs).is_apparent_zero():
                return False
        return True


def shift(c, k):
    """C[k]^i = C^(i+k) with differentials negated on odd shifts."""
    dims = {i - k: c.dim(i) for i in c.degrees()}
    sign = -1 if k % 2 else 1
    diffs = {}
    for i in range(c.lo, c.hi):
        d = c.diff(i)
        diffs[i - k] = d if sign == 1 else d.scale(c.field.from_int(-1))
    slots = None
    if c.slots is not None:
        slots = {i - k: list(c.slots.get(i, [])) for i in c.degrees()}
    return Complex(c.field, c.lo - k, c.hi - k, dims, diffs, slots=slots)


def cone(f):
    """Cone(f)^i = B^i (+) A^(i+1) with d = [[d_B, f], [0, -d_A]]."""
    A, B = f.source, f.target
    fld = A.field
    lo = min(B.lo, A.lo - 1)
    hi = max(B.hi, A.hi - 1)
    dims = {}
    slots = {}
    for i in range(lo, hi + 1):
        dims[i] = B.dim(i) + A.dim(i + 1)
        slots[i] = [("B", i, B.dim(i)), ("A", i + 1, A.dim(i + 1))]
    minus_one = fld.from_int(-1)
    diffs = {}
    for i in range(lo, hi):
        dB = B.diff(i)
        dA = A.diff(i + 1).scale(minus_one)
        fi = f.component(i + 1)
        diffs[i] = _reshape_block(
            fld,
            [[dB, fi], [None, dA]],
            [B.dim(i + 1), A.dim(i + 2)],
            [B.dim(i), A.dim(i + 1)],
        )
    return Complex(fld, lo, hi, dims, diffs, slots=slots)


def fiber(f):
    """Cone(f)[-1], the mapping fiber."""
    return shift(cone(f), -1)


def cone_inclusion(f):
    """B -> Cone(f), b |-> (b, 0)."""
    c = cone(f)
    comps = {}
    for i in c.degrees():
        B = f.target
        m = Matrix.zeros(B.field, c.dim(i), B.dim(i))
        for r in range(B.dim(i)):
            m.entries[r][r] = B.field.one()
        comps[i] = m
    return ChainMap(f.target, c, comps, check=False)


def cone_projection(f):
    """Cone(f) -> A[1], (b, a) |-> a (degree-wise projection)."""
    c = cone(f)
    a_shift = shift(f.source, 1)
    comps = {}
    for i in c.degrees():
        bdim = f.target.dim(i)
        adim = f.source.dim(i + 1)
        m = Matrix.zeros(c.field, adim, c.dim(i))
        for r in range(adim):
            m.entries[r][bdim + r] = c.field.one()
        comps[i] = m
    return ChainMap(c, a_shift, comps, check=False)


def square_fiber(square):
    """The Conventions' [square] := Cone(Cone(a)[-1] -> Cone(g)[-1])[-1],
    with summands ordered A^i (+) B^(i-1) (+) C^(i-1) (+) D^(i-2)."""
    if not square.commutes():
        raise DomainError("square does not commute")
    A, B, C, D = square.A, square.B, square.C, square.D
    fld = A.field
    lo = min(A.lo, B.lo + 1, C.lo + 1, D.lo + 2)
    hi = max(A.hi, B.hi + 1, C.hi + 1, D.hi + 2)
    dims = {}
    slots = {}
    for i in range(lo, hi + 1):
        parts = [
            ("A", i, A.dim(i)),
            ("B", i - 1, B.dim(i - 1)),
            ("C", i - 1, C.dim(i - 1)),
            ("D", i - 2, D.dim(i - 2)),
        ]
        dims[i] = sum(p[2] for p in parts)
        slots[i] = parts
    neg = fld.from_int(-1)
    diffs = {}
    for i in range(lo, hi):
        dA = A.diff(i)
        dB = B.diff(i - 1).scale(neg)
        dC = C.diff(i - 1).scale(neg)
        dD = D.diff(i - 2)
        al = square.alpha.component(i).scale(neg)
        fv = square.f.component(i).scale(neg)
        gv = square.g.component(i - 1).scale(neg)
        gm = square.gamma.component(i - 1)
        diffs[i] = _reshape_block(
            fld,
            [
                [dA, None, None, None],
                [al, dB, None, None],
                [fv, None, dC, None],
                [None, gv, gm, dD],
            ],
            [A.dim(i + 1), B.dim(i), C.dim(i), D.dim(i - 1)],
            [A.dim(i), B.dim(i - 1), C.dim(i - 1), D.dim(i - 2)],
        )
    return Complex(fld, lo, hi, dims, diffs, slots=slots)


def _reshape_block(field, grid, row_heights, col_widths):
    total = Matrix.zeros(field, sum(row_heights), sum(col_widths))
    r0 = 0
    for bi, brow in enumerate(grid):
        c0 = 0
        for bj, b in enumerate(brow):
            if b is not None and b.rows and b.cols:
                for i in range(b.rows):
                    for j in range(b.cols):
                        total.entries[r0 + i][c0 + j] = b.entries[i][j]
            c0 += col_widths[bj]
        r0 += row_heights[bi]
    return total


def nested_square_fiber(square):
    """The same object built literally through cone and shift (slot order
    differs); used as the brute-force oracle for square_fiber."""
    fib_alpha = fiber(square.alpha)
    fib_gamma = fiber(square.gamma)
    comps = {}
    for i in fib_alpha.degrees():
        # fiber slots in degree i: B^(i-1) then A^i
        bdim = square.B.dim(i - 1)
        adim = square.A.dim(i)
        m = Matrix.zeros(square.A.field, fib_gamma.dim(i), fib_alpha.dim(i))
        gv = square.g.component(i - 1)
        fv = square.f.component(i)
        ddim = square.D.dim(i - 1)
        for r in range(gv.rows):
            for s in range(gv.cols):
                m.entries[r][s] = gv.entries[r][s]
        for r in range(fv.rows):
            for s in range(fv.cols):
                m.entries[ddim + r][bdim + s] = fv.entries[r][s]
        comps[i] = m
    mu = ChainMap(fib_alpha, fib_gamma, comps)
    return fiber(mu)


class CohomologySpace:
    """H^i with an explicit cocycle basis, a section onto class coordinates
    and a lift choosing cocycle representatives (section o lift = id)."""

    def __init__(self, complex_, degree):
        self.complex = complex_
        self.degree = degree
        f = complex_.field
        di = complex_.diff(degree)
        self.cocycle_basis = kernel(di)
        prev = complex_.diff(degree - 1)
        img = image(prev)
        k = self.cocycle_basis.dim()
        # express the boundary image inside cocycle coordinates
        cols = []
        for j in range(img.dim()):
            coords = solve(self.cocycle_basis.basis, img.basis.column(j))
            if coords is None:
                raise DomainError(
                    "boundaries are not cocycles at degree %d (d*d != 0?)" % degree
                )
            cols.append(coords)
        sub = Subspace(k, Matrix.from_columns(f, k, cols), field=f)
        self.boundary_in_cocycle_coords = sub
        self.quot = QuotientMap(f, k, sub)
        self.dim = self.quot.dim()

    def section(self, vec):
        """Cocycle (ambient coordinates) -> class coordinates."""
        coords = solve(self.cocycle_basis.basis, vec)
        if coords is None:
            raise DomainError("vector is not a cocycle at stored precision")
        return self.quot.section(coords)

    def lift(self, coords):
        """Class coordinates -> chosen cocycle representative."""
        return self.cocycle_basis.basis.apply(self.quot.lift(coords))

    def zero_class(self):
        return [self.complex.field.zero()] * self.dim

    def basis_classes(self):
        f = self.complex.field
        out = []
        for k in range(self.dim):
            out.append([f.one() if i == k else f.zero() for i in range(self.dim)])
        return out


def cohomology(c, i):
    if not (c.lo <= i <= c.hi):
        raise DomainError("degree %d outside range [%d, %d]" % (i, c.lo, c.hi))
    return CohomologySpace(c, i)


def induced_map(f, i, source_h=None, target_h=None):
    """Matrix of H^i(f) in the stored class coordinates."""
    hs = source_h or cohomology(f.source, i)
    ht = target_h or cohomology(f.target, i)
    cols = []
    for cls in hs.basis_classes():
        z = hs.lift(cls)
        w = f.component(i).apply(z)
        cols.append(ht.section(w))
    return Matrix.from_columns(f.source.field, ht.dim, cols)


def euler_characteristic(c):
    total = 0
    for i in c.degrees():
        total += (-1) ** i * cohomology(c, i).dim
    return total
