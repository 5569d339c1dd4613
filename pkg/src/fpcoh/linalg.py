"""Dense exact linear algebra over Q_p at capped precision.

Pivoting always takes the entry of minimal valuation (largest p-adic size),
which bounds precision loss by the pivot valuation.  A pivot decision that
cannot be certified (all candidates apparently but not exactly zero) aborts
with PrecisionError instead of guessing the rank.
"""

from fractions import Fraction

from .errors import DomainError, PrecisionError
from .padic import PadicNumber, PadicPoly


class Matrix:
    """Row-major matrix of PadicNumber entries."""

    __slots__ = ("field", "rows", "cols", "entries")

    def __init__(self, field, rows, cols, entries):
        if len(entries) != rows or any(len(row) != cols for row in entries):
            raise DomainError("entry grid does not match %dx%d" % (rows, cols))
        self.field = field
        self.rows = rows
        self.cols = cols
        self.entries = [list(row) for row in entries]

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zeros(field, rows, cols):
        z = field.zero()
        return Matrix(field, rows, cols, [[z] * cols for _ in range(rows)])

    @staticmethod
    def identity(field, n):
        m = Matrix.zeros(field, n, n)
        one = field.one()
        for i in range(n):
            m.entries[i][i] = one
        return m

    @staticmethod
    def from_rational_rows(field, rows):
        return Matrix(
            field,
            len(rows),
            len(rows[0]) if rows else 0,
            [[field.from_fraction(Fraction(x)) for x in row] for row in rows],
        )

    @staticmethod
    def from_columns(field, ambient_dim, columns):
        m = Matrix.zeros(field, ambient_dim, len(columns))
        for j, col in enumerate(columns):
            for i in range(ambient_dim):
                m.entries[i][j] = col[i]
        return m

    def column(self, j):
        return [self.entries[i][j] for i in range(self.rows)]

    def row(self, i):
        return list(self.entries[i])

    def copy(self):
        return Matrix(self.field, self.rows, self.cols, self.entries)

    def transpose(self):
        return Matrix(
            self.field,
            self.cols,
            self.rows,
            [[self.entries[i][j] for i in range(self.rows)] for j in range(self.cols)],
        )

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        self._shape_check(other, same=True)
        return Matrix(
            self.field,
            self.rows,
            self.cols,
            [
                [self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
                for i in range(self.rows)
            ],
        )

    def __sub__(self, other):
        return self + other.scale(self.field.from_int(-1))

    def scale(self, c):
        return Matrix(
            self.field,
            self.rows,
            self.cols,
            [[e * c for e in row] for row in self.entries],
        )

    def __mul__(self, other):
        if isinstance(other, Matrix):
            if self.cols != other.rows:
                raise DomainError(
                    "shape mismatch %dx%d * %dx%d"
                    % (self.rows, self.cols, other.rows, other.cols)
                )
            z = self.field.zero()
            out = Matrix.zeros(self.field, self.rows, other.cols)
            for i in range(self.rows):
                arow = self.entries[i]
                orow = out.entries[i]
                for k in range(self.cols):
                    a = arow[k]
                    if a.is_exact_zero():
                        continue
                    brow = other.entries[k]
                    for j in range(other.cols):
                        b = brow[j]
                        if b.is_exact_zero():
                            continue
                        orow[j] = orow[j] + a * b
            return out
        return NotImplemented

    def apply(self, vec):
        """Matrix times column vector (a list)."""
        if len(vec) != self.cols:
            raise DomainError("vector length %d != cols %d" % (len(vec), self.cols))
        out = []
        for i in range(self.rows):
            acc = self.field.zero()
            for j, x in enumerate(vec):
                if not x.is_exact_zero():
                    acc = acc + self.entries[i][j] * x
            out.append(acc)
        return out

    def _shape_check(self, other, same=False):
        if same and (self.rows, self.cols) != (other.rows, other.cols):
            raise DomainError("shape mismatch")

    def is_apparent_zero(self):
        return all(e.is_apparent_zero() for row in self.entries for e in row)

    def __repr__(self):
        return "Matrix(%dx%d over Q_%d)" % (self.rows, self.cols, self.field.p)

    # -- block helpers -------------------------------------------------------

    @staticmethod
    def block(field, grid):
        """Assemble from a grid of matrices (None = zero block)."""
        row_heights = []
        for brow in grid:
            h = None
            for b in brow:
                if b is not None:
                    h = b.rows
                    break
            row_heights.append(h if h is not None else 0)
        col_widths = []
        ncols = max(len(brow) for brow in grid)
        for j in range(ncols):
            w = None
            for brow in grid:
                if j < len(brow) and brow[j] is not None:
                    w = brow[j].cols
                    break
            col_widths.append(w if w is not None else 0)
        total = Matrix.zeros(field, sum(row_heights), sum(col_widths))
        r0 = 0
        for bi, brow in enumerate(grid):
            c0 = 0
            for bj in range(ncols):
                b = brow[bj] if bj < len(brow) else None
                if b is not None:
                    if b.rows != row_heights[bi] or b.cols != col_widths[bj]:
                        raise DomainError("inconsistent block shapes")
                    for i in range(b.rows):
                        for j in range(b.cols):
                            total.entries[r0 + i][c0 + j] = b.entries[i][j]
                c0 += col_widths[bj]
            r0 += row_heights[bi]
        return total

    @staticmethod
    def kron(a, b):
        out = Matrix.zeros(a.field, a.rows * b.rows, a.cols * b.cols)
        for i in range(a.rows):
            for j in range(a.cols):
                x = a.entries[i][j]
                if x.is_exact_zero():
                    continue
                for k in range(b.rows):
                    for l in range(b.cols):
                        out.entries[i * b.rows + k][j * b.cols + l] = x * b.entries[k][l]
        return out


def _pick_pivot(work, rows_left, col, cutoff):
    """Row of minimal-valuation certified-nonzero entry in this column.

    Returns None when the column certifies as zero: every entry is exactly
    zero or an apparent zero O(p^m) with m >= cutoff.  An apparent zero below
    the cutoff makes the rank decision a guess, so it aborts instead.
    """
    best = None
    best_val = None
    for i in rows_left:
        e = work[i][col]
        if e.is_exact_zero():
            continue
        if e.is_apparent_zero():
            if e.abs_prec() < cutoff:
                raise PrecisionError(
                    "pivot ambiguity in column %d: candidate known only to O(p^%s)"
                    % (col, e.abs_prec()),
                    absolute_precision=e.abs_prec(),
                )
            continue
        if best is None or e.valuation() < best_val:
            best, best_val = i, e.valuation()
    return best


def echelon(m, cutoff=None):
    """Reduced row echelon form with p-adically stable pivoting.

    Returns (rank, pivots, transform, rref) with transform * m = rref.
    """
    f = m.field
    if cutoff is None:
        cutoff = f.zero_cutoff
    work = [list(row) for row in m.entries]
    trans = Matrix.identity(f, m.rows).entries
    pivots = []
    pivot_row = 0
    zero = f.zero()
    for col in range(m.cols):
        rows_left = range(pivot_row, m.rows)
        i = _pick_pivot(work, rows_left, col, cutoff)
        if i is None:
            continue
        work[pivot_row], work[i] = work[i], work[pivot_row]
        trans[pivot_row], trans[i] = trans[i], trans[pivot_row]
        # divide only by the pivot (minimal valuation in the column), so the
        # sweep never manufactures negative valuations on integral input
        pivot_inv = work[pivot_row][col].inverse()
        for r in range(m.rows):
            if r == pivot_row:
                continue
            c = work[r][col]
            if c.is_exact_zero():
                continue
            if c.is_apparent_zero() and c.abs_prec() >= cutoff:
                # certified zero at working precision: eliminating with it
                # would only spread its noise across the row
                continue
            factor = c * pivot_inv
            work[r] = [a - factor * b for a, b in zip(work[r], work[pivot_row])]
            trans[r] = [a - factor * b for a, b in zip(trans[r], trans[pivot_row])]
            work[r][col] = zero
        pivots.append(col)
        pivot_row += 1
        if pivot_row == m.rows:
            break
    rank = len(pivots)
    for k, col in enumerate(pivots):
        inv = work[k][col].inverse()
        work[k] = [e * inv for e in work[k]]
        trans[k] = [e * inv for e in trans[k]]
        work[k][col] = f.one()
    return (
        rank,
        pivots,
        Matrix(f, m.rows, m.rows, trans),
        Matrix(f, m.rows, m.cols, work),
    )


def rank(m):
    return echelon(m)[0]


def kernel(m):
    """Subspace of vectors v with m*v = 0."""
    f = m.field
    r, pivots, _, rref = echelon(m)
    free = [j for j in range(m.cols) if j not in pivots]
    cols = []
    for j in free:
        v = [f.zero()] * m.cols
        v[j] = f.one()
        for k, pc in enumerate(pivots):
            v[pc] = -rref.entries[k][j]
        cols.append(v)
    # the free-coordinate pattern already certifies independence
    return Subspace(m.cols, Matrix.from_columns(f, m.cols, cols), field=f, reduce=False)


def solve(m, rhs):
    """Any x with m*x = rhs, or None when rhs is certifiably outside the
    column space.  Residuals that are apparent zero at the working precision
    count as consistent."""
    f = m.field
    r, pivots, trans, rref = echelon(m)
    t = trans.apply(list(rhs))
    for i in range(r, m.rows):
        e = t[i]
        if not e.is_apparent_zero():
            return None
    x = [f.zero()] * m.cols
    for k, pc in enumerate(pivots):
        x[pc] = t[k]
    return x


def charpoly(m):
    """Monic char poly det(T*I - m) by the division-free Berkowitz method."""
    if m.rows != m.cols:
        raise DomainError("charpoly needs a square matrix")
    coeffs = berkowitz(m.entries, m.field.one(), m.field.zero())
    return PadicPoly(m.field, list(reversed(coeffs)))


def berkowitz(a, one, zero):
    """Berkowitz vector (leading coefficient first) for a square grid over
    any commutative ring given its one and zero."""
    n = len(a)
    if n == 0:
        return [one]
    v = [one, -a[0][0]]
    for r in range(2, n + 1):
        diag = a[r - 1][r - 1]
        row = a[r - 1][: r - 1]
        col = [a[i][r - 1] for i in range(r - 1)]
        s = []
        w = list(col)
        s.append(_dot(row, w, zero))
        for _ in range(r - 2):
            w = [_dot(a[i][: r - 1], w, zero) for i in range(r - 1)]
            s.append(_dot(row, w, zero))
        toeplitz = [one, -diag] + [-x for x in s]
        new = []
        for i in range(r + 1):
            acc = zero
            for j in range(max(0, i - r), min(i, r - 1) + 1):
                if 0 <= i - j < len(toeplitz):
                    acc = acc + toeplitz[i - j] * v[j]
            new.append(acc)
        v = new
    return v


def _dot(xs, ys, zero):
    acc = zero
    for x, y in zip(xs, ys):
        acc = acc + x * y
    return acc


def apply_poly(poly, m):
    """Horner evaluation of a PadicPoly at a square matrix."""
    if m.rows != m.cols:
        raise DomainError("apply_poly needs a square matrix")
    f = m.field
    out = Matrix.zeros(f, m.rows, m.rows)
    for c in reversed(poly.coeffs):
        out = out * m
        if not c.is_exact_zero():
            for i in range(m.rows):
                out.entries[i][i] = out.entries[i][i] + c
    return out


def determinant(m):
    """det via charpoly constant term (division-free)."""
    c = charpoly(m).coeff(0)
    if m.rows % 2:
        return -c
    return c


def invert(m):
    if m.rows != m.cols:
        raise DomainError("inverse of non-square matrix")
    r, _, trans, _ = echelon(m)
    if r < m.rows:
        raise DomainError("matrix not invertible at working precision")
    return trans


class Subspace:
    """Subspace of Q_p^n stored with an independent (column-reduced) basis."""

    __slots__ = ("ambient_dim", "basis", "field")

    def __init__(self, ambient_dim, basis, field=None, reduce=True):
        self.ambient_dim = ambient_dim
        self.field = field or basis.field
        if basis.rows != ambient_dim:
            raise DomainError("basis rows != ambient dimension")
        if reduce and basis.cols:
            r, pivots, _, rref = echelon(basis.transpose())
            cols = [rref.row(i) for i in range(r)]
            basis = Matrix.from_columns(self.field, ambient_dim, cols)
        self.basis = basis

    @staticmethod
    def zero(field, ambient_dim):
        return Subspace(ambient_dim, Matrix.zeros(field, ambient_dim, 0), field=field)

    @staticmethod
    def full(field, ambient_dim):
        return Subspace(ambient_dim, Matrix.identity(field, ambient_dim), field=field)

    @staticmethod
    def span(field, ambient_dim, vectors):
        return Subspace(
            ambient_dim, Matrix.from_columns(field, ambient_dim, list(vectors)), field=field
        )

    def dim(self):
        return self.basis.cols

    def contains(self, vec):
        return solve(self.basis, vec) is not None

    def coordinates(self, vec):
        return solve(self.basis, vec)

    def contains_subspace(self, other):
        return all(self.contains(other.basis.column(j)) for j in range(other.dim()))

    def add(self, other):
        cols = [self.basis.column(j) for j in range(self.dim())]
        cols += [other.basis.column(j) for j in range(other.dim())]
        return Subspace.span(self.field, self.ambient_dim, cols)

    def intersect(self, other):
        if self.dim() == 0 or other.dim() == 0:
            return Subspace.zero(self.field, self.ambient_dim)
        glue = Matrix.block(self.field, [[self.basis, other.basis.scale(self.field.from_int(-1))]])
        ker = kernel(glue)
        cols = []
        for j in range(ker.dim()):
            v = ker.basis.column(j)[: self.dim()]
            cols.append(self.basis.apply(v))
        return Subspace.span(self.field, self.ambient_dim, cols)

    def annihilator(self):
        """Functionals (coordinates in the dual basis) vanishing on this."""
        if self.dim() == 0:
            return Subspace.full(self.field, self.ambient_dim)
        return kernel(self.basis.transpose())

    def equals(self, other):
        return self.dim() == other.dim() and self.contains_subspace(other)

    def complement_projection(self):
        """Matrix with kernel exactly this subspace (rows = annihilator basis)."""
        ann = self.annihilator()
        return ann.basis.transpose()

    def __repr__(self):
        return "Subspace(dim %d of Q_%d^%d)" % (self.dim(), self.field.p, self.ambient_dim)


def preimage(m, sub):
    """{v : m*v in sub} as a Subspace of the source."""
    proj = sub.complement_projection()
    if proj.rows == 0:
        return Subspace.full(m.field, m.cols)
    return kernel(proj * m)


def image(m):
    return Subspace.span(m.field, m.rows, [m.column(j) for j in range(m.cols)])


class QuotientMap:
    """Linear quotient V/W of a coordinate space with explicit section and lift.

    section: V -> Q_p^h kills W; lift: Q_p^h -> V satisfies section(lift) = id.
    """

    __slots__ = ("ambient_dim", "sub", "section_matrix", "lift_matrix", "field")

    def __init__(self, field, ambient_dim, sub):
        self.field = field
        self.ambient_dim = ambient_dim
        self.sub = sub
        k = ambient_dim
        r = sub.dim()
        # extend the columns of sub.basis to a basis by standard vectors
        if r:
            # leading coordinate positions of the (column-reduced) basis
            _, pivots, _, _ = echelon(sub.basis.transpose())
            taken = set(pivots)
        else:
            taken = set()
        free = [i for i in range(k) if i not in taken]
        h = k - r
        if len(free) < h:
            raise PrecisionError("quotient basis extension failed")
        ext_cols = []
        for i in free[:h]:
            v = [field.zero()] * k
            v[i] = field.one()
            ext_cols.append(v)
        ext = Matrix.from_columns(field, k, ext_cols)
        glue = Matrix.block(field, [[sub.basis, ext]]) if r else ext
        inv = invert(glue)
        # rows r..k-1 of inv give the quotient coordinates
        rows = [inv.row(i) for i in range(r, k)]
        self.section_matrix = Matrix(field, h, k, rows) if h else Matrix.zeros(field, 0, k)
        self.lift_matrix = ext

    def dim(self):
        return self.section_matrix.rows

    def section(self, vec):
        return self.section_matrix.apply(vec)

    def lift(self, coords):
        return self.lift_matrix.apply(coords)
