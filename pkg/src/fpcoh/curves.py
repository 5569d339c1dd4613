"""Odd hyperelliptic curves y^2 = f(x) over Q_p with good reduction:
Kedlaya's Frobenius matrix on the odd part of Monsky-Washnitzer cohomology,
zeta numerators checked against naive point counts, and the cup-product
matrix from residues at the single point at infinity.

Basis of H^1_MW^-: omega_i = x^i dx / y, i = 0 .. 2g-1.
Reduction identities (f = y^2, dy = f' dx / 2y):
    A dx/y^(2s+1) = [u + 2v'/(2s-1)] dx/y^(2s-1) + d(-(2/(2s-1)) v y^-(2s-1))
        where A = u f + v f',
    x^m-degree drop at y^1 via d(x^m y) = [m x^(m-1) f + x^m f'/2] dx/y.
"""

import math
from fractions import Fraction

from .errors import DomainError, PrecisionError
from .linalg import Matrix, charpoly
from .padic import BaseField, PadicPoly


# ---------------------------------------------------------------------------
# Exact integer polynomial utilities (discriminant, Bezout over Q)


def _zpoly_mul(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _zpoly_deriv(a):
    return [i * a[i] for i in range(1, len(a))]


def _qpoly_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _qpoly_divmod(a, b):
    """Division with remainder over Q (Fraction coefficients)."""
    a = [Fraction(x) for x in a]
    b = [Fraction(x) for x in b]
    _qpoly_trim(b)
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    r = list(a)
    _qpoly_trim(r)
    while len(r) >= len(b) and r:
        k = len(r) - len(b)
        c = r[-1] / b[-1]
        q[k] = c
        for i, y in enumerate(b):
            r[i + k] -= c * y
        _qpoly_trim(r)
    return q, r


def _qpoly_xgcd(a, b):
    """(g, u, v) with u*a + v*b = g over Q."""
    r0, r1 = [Fraction(x) for x in a], [Fraction(x) for x in b]
    u0, u1 = [Fraction(1)], [Fraction(0)]
    v0, v1 = [Fraction(0)], [Fraction(1)]
    _qpoly_trim(r0)
    _qpoly_trim(r1)
    while r1:
        q, r = _qpoly_divmod(r0, r1)
        r0, r1 = r1, r

        def comb(x0, x1):
            prod = _zpoly_mul(q, x1)
            out = [Fraction(0)] * max(len(x0), len(prod))
            for i, c in enumerate(x0):
                out[i] += c
            for i, c in enumerate(prod):
                out[i] -= c
            return _qpoly_trim(out)

        u0, u1 = u1, comb(u0, u1)
        v0, v1 = v1, comb(v0, v1)
    return r0, u0, v0


def discriminant(f_coeffs):
    """disc of a monic integer polynomial, via the Sylvester resultant."""
    n = len(f_coeffs) - 1
    fp = _zpoly_deriv(f_coeffs)
    m = n + (n - 1)
    rows = []
    for k in range(n - 1):
        row = [0] * m
        for i, c in enumerate(reversed(f_coeffs)):
            row[k + i] = c
        rows.append(row)
    for k in range(n):
        row = [0] * m
        for i, c in enumerate(reversed(fp)):
            row[k + i] = c
        rows.append(row)
    res = _int_det(rows)
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return sign * res  # leading coefficient is 1


def _int_det(rows):
    """Fraction-free-ish determinant of an integer matrix (Bareiss)."""
    n = len(rows)
    m = [list(map(Fraction, r)) for r in rows]
    det = Fraction(1)
    for k in range(n):
        piv = None
        for i in range(k, n):
            if m[i][k] != 0:
                piv = i
                break
        if piv is None:
            return 0
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            det = -det
        det *= m[k][k]
        inv = 1 / m[k][k]
        for i in range(k + 1, n):
            c = m[i][k] * inv
            if c == 0:
                continue
            for j in range(k, n):
                m[i][j] -= c * m[k][j]
    assert det.denominator == 1
    return int(det)


# ---------------------------------------------------------------------------
# Curve model


class HyperellipticCurve:
    """y^2 = f(x), f monic of odd degree 2g+1 with integer coefficients."""

    def __init__(self, f_coeffs, field):
        violation = validate_curve(f_coeffs, field)
        if violation is not None:
            raise DomainError(violation)
        self.f = list(f_coeffs)
        self.field = field
        self.genus = (len(f_coeffs) - 2) // 2
        self._frob_cache = {}

    def f_poly(self, field=None):
        return PadicPoly.from_fractions(field or self.field, self.f)

    def f_derivative(self, field=None):
        return PadicPoly.from_fractions(field or self.field, _zpoly_deriv(self.f))

    def f_eval_fraction(self, x):
        acc = Fraction(0)
        for c in reversed(self.f):
            acc = acc * x + c
        return acc

    def __repr__(self):
        return "HyperellipticCurve(y^2 = %s, p = %d)" % (
            PadicPoly.from_fractions(self.field, self.f).to_string("x"),
            self.field.p,
        )


def validate_curve(f_coeffs, field):
    """None when the model is a good-reduction odd hyperelliptic curve."""
    if field.p < 3:
        return "p must be odd"
    if len(f_coeffs) < 4 or len(f_coeffs) % 2 != 0:
        return "f must have odd degree >= 3 (2g+1 coefficients plus constant)"
    if any(int(c) != c for c in f_coeffs):
        return "f must have integer coefficients"
    if f_coeffs[-1] != 1:
        return "f must be monic"
    d = discriminant([int(c) for c in f_coeffs])
    if d == 0:
        return "f has a repeated root (discriminant 0)"
    if d % field.p == 0:
        return "bad reduction: p divides disc(f)"
    if (2 * d) % field.p == 0:
        return "p divides 2*disc(f)"
    return None


# ---------------------------------------------------------------------------
# Naive point counting


class _Fq2:
    """F_{p^2} = F_p[z]/(z^2 - d) with d the smallest non-residue."""

    def __init__(self, p):
        self.p = p
        self.d = next(
            a for a in range(2, p) if pow(a, (p - 1) // 2, p) == p - 1
        )

    def mul(self, a, b):
        p, d = self.p, self.d
        return (
            (a[0] * b[0] + d * a[1] * b[1]) % p,
            (a[0] * b[1] + a[1] * b[0]) % p,
        )

    def pow(self, a, e):
        out = (1, 0)
        base = a
        while e:
            if e & 1:
                out = self.mul(out, base)
            base = self.mul(base, base)
            e >>= 1
        return out

    def elements(self):
        for a in range(self.p):
            for b in range(self.p):
                yield (a, b)


def point_count(f_coeffs, p, k=1):
    """Projective points of the smooth model over F_{p^k}, k in {1, 2},
    including the single point at infinity."""
    if k not in (1, 2):
        raise DomainError("naive counting only over F_p and F_{p^2}")
    if k == 1:
        count = 1
        squares = {(y * y) % p for y in range(p)}
        for x in range(p):
            fx = 0
            for c in reversed(f_coeffs):
                fx = (fx * x + c) % p
            if fx == 0:
                count += 1
            elif fx in squares:
                count += 2
        return count
    fq = _Fq2(p)
    count = 1
    half = (p * p - 1) // 2
    for x in fq.elements():
        fx = (0, 0)
        for c in reversed(f_coeffs):
            fx = fq.mul(fx, x)
            fx = ((fx[0] + c) % p, fx[1])
        if fx == (0, 0):
            count += 1
        elif fq.pow(fx, half) == (1, 0):
            count += 2
    return count


def numerator_from_counts(f_coeffs, p, genus):
    """Zeta numerator coefficients (ascending, integers) pinned by the counts
    over F_p and F_{p^2}; supports genus 1 and 2 via the functional equation."""
    n1 = point_count(f_coeffs, p, 1)
    n2 = point_count(f_coeffs, p, 2)
    s1 = p + 1 - n1
    s2 = p * p + 1 - n2
    e1 = s1
    e2 = (s1 * s1 - s2) // 2
    if genus == 1:
        return [1, -e1, p]
    if genus == 2:
        # L(T) = 1 - e1 T + e2 T^2 - p e1 T^3 + p^2 T^4
        return [1, -e1, e2, -p * e1, p * p]
    raise DomainError("counts pin the numerator only for genus <= 2")


# ---------------------------------------------------------------------------
# Kedlaya reduction


class OddFormReduction:
    """Result of rewriting A(x) dx / y^(2s+1) as dg + sum coeffs_i x^i dx/y.

    g is stored as pole terms (poly v, exponent e) meaning v(x) * y^(-e),
    plus polynomial terms (poly w, 1) meaning w(x) * y.
    """

    def __init__(self, coeffs, g_terms):
        self.coeffs = coeffs
        self.g_terms = g_terms

    def is_exact(self):
        return all(c.is_apparent_zero() for c in self.coeffs)


class _Reducer:
    def __init__(self, curve, work_field):
        self.curve = curve
        self.fld = work_field
        self.f = curve.f_poly(work_field)
        self.fp = curve.f_derivative(work_field)
        g, u, v = _qpoly_xgcd(curve.f, _zpoly_deriv(curve.f))
        if len(g) != 1:
            raise DomainError("f and f' are not coprime")
        c = g[0]
        self.bez_u = PadicPoly.from_fractions(work_field, [x / c for x in u])
        self.bez_v = PadicPoly.from_fractions(work_field, [x / c for x in v])

    def split(self, a):
        """A = u*f + v*f' with deg v < deg f."""
        v = _poly_mod(a * self.bez_v, self.f)
        u, r = _poly_divmod(a - v * self.fp, self.f)
        if not r.is_zero() and not all(c.is_apparent_zero() for c in r.coeffs):
            raise PrecisionError("Bezout split failed: nonzero remainder")
        return u, v

    def reduce(self, levels):
        """levels: dict s -> numerator poly of a form sum_s A_s dx/y^(2s+1).

        Returns an OddFormReduction over the working field.
        """
        fld = self.fld
        two = fld.from_int(2)
        g_terms = []
        smax = max(levels) if levels else 0
        acc = PadicPoly(fld, [])
        for s in range(smax, 0, -1):
            if s in levels:
                acc = acc + levels[s]
            if acc.is_zero():
                continue
            u, v = self.split(acc)
            denom = fld.from_int(2 * s - 1)
            acc = u + v.derivative() * (two / denom)
            g_terms.append((v * (fld.from_int(-2) / denom), 2 * s - 1))
        if 0 in levels:
            acc = acc + levels[0]
        # degree reduction at y^1
        deg_target = 2 * self.curve.genus - 1
        gg = self.curve.genus
        while acc.degree() > deg_target:
            m = acc.degree() - 2 * gg
            lead = acc.coeff(acc.degree())
            lam = lead * two / fld.from_int(2 * m + 2 * gg + 1)
            # W_m = m x^(m-1) f + x^m f'/2
            wm = PadicPoly(fld, [fld.zero()] * (m - 1) + [fld.from_int(m)]) * self.f \
                if m >= 1 else PadicPoly(fld, [])
            half = two.inverse()
            xm_fp = PadicPoly(fld, [fld.zero()] * m + [half]) * self.fp
            wm = wm + xm_fp
            acc = acc - wm * lam
            # the new leading entry is an arithmetic zero; trim it
            acc = PadicPoly(fld, list(acc.coeffs[: 2 * gg + m]))
            g_terms.append((PadicPoly(fld, [fld.zero()] * m + [lam]), -1))
        coeffs = [acc.coeff(i) for i in range(2 * gg)]
        return OddFormReduction(coeffs, g_terms)


def _poly_divmod(a, b):
    fld = a.field
    lead = b.coeff(b.degree())
    inv = lead.inverse()
    r = list(a.coeffs)
    q = [fld.zero()] * max(len(r) - b.degree(), 1)
    while len(r) - 1 >= b.degree() and r:
        k = len(r) - 1 - b.degree()
        c = r[-1] * inv
        q[k] = c
        for i in range(b.degree() + 1):
            r[i + k] = r[i + k] - c * b.coeff(i)
        r.pop()
    return PadicPoly(fld, q), PadicPoly(fld, r)


def _poly_mod(a, b):
    return _poly_divmod(a, b)[1]


def reduce_odd_form(curve, numerator_coeffs, s, work_field=None):
    """Reduce A(x) dx / y^(2s+1) (A given by ascending coefficients) to
    dg + sum coeffs_i x^i dx/y over the working field."""
    fld = work_field or curve.field
    red = _Reducer(curve, fld)
    if hasattr(numerator_coeffs, "coeffs"):
        a = numerator_coeffs
    else:
        a = PadicPoly.from_fractions(fld, numerator_coeffs)
    return red.reduce({s: a})


# ---------------------------------------------------------------------------
# Frobenius matrix


class FrobeniusData:
    """Frobenius action on the basis x^i dx/y plus reduction certificates.

    matrix column i gives phi*(omega_i) = d(g_i) + sum_j M[j][i] omega_j; the
    certificate g_i is stored as OddFormReduction.g_terms.
    """

    def __init__(self, curve, work_field, matrix, g_data, guard_used):
        self.curve = curve
        self.work_field = work_field
        self.matrix = matrix
        self.g_data = g_data
        self.guard_used = guard_used


def default_guard(curve, precision):
    p = curve.field.p
    g = curve.genus
    return int(math.ceil(math.log(max(2 * precision * (2 * g + 1), p), p))) + 4


def frobenius_matrix(curve, precision=None, _guard=None):
    """Kedlaya's algorithm at the requested absolute precision, with
    retry-doubling of the guard digits on precision exhaustion."""
    n = precision or curve.field.precision
    guard = _guard if _guard is not None else default_guard(curve, n)
    key = (n, guard)
    if key in curve._frob_cache:
        return curve._frob_cache[key]
    for attempt in range(3):
        try:
            data = _frobenius_attempt(curve, n, guard)
            curve._frob_cache[key] = data
            return data
        except PrecisionError:
            if attempt == 2:
                raise
            guard *= 2
    raise PrecisionError("unreachable")


def _frobenius_attempt(curve, n, guard):
    p = curve.field.p
    g = curve.genus
    m_work = n + guard
    fld = BaseField(p, m_work)

    # Delta = f(x^p) - f(x)^p, exact integers, all coefficients divisible by p
    f_int = [int(c) for c in curve.f]
    fxp = [0] * (p * (2 * g + 1) + 1)
    for j, c in enumerate(f_int):
        fxp[p * j] += c
    fpow = [1]
    for _ in range(p):
        fpow = _zpoly_mul(fpow, f_int)
    delta = [a - b for a, b in zip(fxp + [0] * len(fpow), fpow + [0] * len(fxp))]
    while delta and delta[-1] == 0:
        delta.pop()
    delta_poly = PadicPoly.from_fractions(fld, delta)

    # (1 + E)^(-1/2) = sum_k binom(-1/2, k) E^k, E = Delta / y^(2p).
    # Dropping terms k >= kmax leaves an untracked error whose reduction has
    # valuation >= kmax + 1 - ceil(log_p(2 s_max + 1)) (per-term pole
    # reduction loses at most logarithmically many digits); the resulting
    # entries are capped at that floor below.
    kmax = m_work
    s_top = (p * (2 * kmax - 1) - 1) // 2
    tail_floor = kmax + 1 - int(math.ceil(math.log(2 * s_top + 1, p)))
    if tail_floor < n:
        raise PrecisionError(
            "truncation floor O(p^%d) below target precision %d" % (tail_floor, n),
            absolute_precision=tail_floor,
        )
    binoms = []
    b = Fraction(1)
    for k in range(kmax):
        binoms.append(b)
        b = b * (Fraction(-1, 2) - k) / (k + 1)

    reducer = _Reducer(curve, fld)
    columns = []
    g_data = []
    pfac = fld.from_int(p)
    delta_pows = [PadicPoly.from_fractions(fld, [1])]
    for k in range(1, kmax):
        delta_pows.append(delta_pows[-1] * delta_poly)

    for i in range(2 * g):
        levels = {}
        for k in range(kmax):
            s = (p * (2 * k + 1) - 1) // 2
            coeff = pfac * fld.from_fraction(binoms[k])
            shift = p * i + p - 1
            term = delta_pows[k] * coeff
            term = PadicPoly(fld, [fld.zero()] * shift + list(term.coeffs))
            levels[s] = levels.get(s, PadicPoly(fld, [])) + term
        red = reducer.reduce(levels)
        coeffs = [c.at_absolute_precision(tail_floor) for c in red.coeffs]
        for c in coeffs:
            if c.abs_prec() < n:
                raise PrecisionError(
                    "Frobenius entry known only to O(p^%s); retry with more guard digits"
                    % c.abs_prec(),
                    absolute_precision=c.abs_prec(),
                )
        columns.append(coeffs)
        g_data.append(
            [
                (PadicPoly(fld, [c.at_absolute_precision(tail_floor) for c in poly.coeffs]), e)
                for poly, e in red.g_terms
            ]
        )

    mat = Matrix.from_columns(fld, 2 * g, columns)
    return FrobeniusData(curve, fld, mat, g_data, guard)


def zeta_numerator(curve, precision=None):
    """det(1 - M T) lifted to exact integers, checked against Weil bounds."""
    n = precision or curve.field.precision
    frob = frobenius_matrix(curve, n)
    cp = charpoly(frob.matrix)
    g = curve.genus
    p = curve.field.p
    out = []
    for j in range(2 * g + 1):
        c = cp.coeff(2 * g - j)
        bound = math.comb(2 * g, j) * p ** (j / 2.0)
        out.append(_lift_bounded_integer(c, bound))
    if out[0] != 1:
        raise PrecisionError("zeta numerator lift lost the leading 1")
    return out


def _lift_bounded_integer(c, bound):
    if c.is_exact_zero():
        return 0
    if c.is_apparent_zero():
        if c.abs_prec() > math.log(2 * bound + 1, c.field.p):
            return 0
        raise PrecisionError("cannot certify integer lift of %r" % c)
    if c.valuation() < 0:
        raise PrecisionError("negative valuation in integer lift of %r" % c)
    modulus = c.field.ppow(c.abs_prec())
    if modulus <= 2 * bound:
        raise PrecisionError("precision too low to pin integer in [-%s, %s]" % (bound, bound))
    r = c.lift() % modulus
    if r > modulus // 2:
        r -= modulus
    if abs(r) > bound:
        raise PrecisionError("lifted integer %d violates the Weil bound %s" % (r, bound))
    return r


# ---------------------------------------------------------------------------
# Cup product via residues at infinity


def _laurent_basis_forms(curve, order):
    """Expansions omega_i = c(t) t^(e_i) dt at infinity, x = t^-2,
    y = t^-(2g+1) s(t).  Returns (shifts, series list, s(t))."""
    from .padic import PowerSeries

    fld = curve.field
    g = curve.genus
    coeffs = [fld.zero()] * (2 * (2 * g + 1) + 1)
    for j, c in enumerate(curve.f):
        coeffs[2 * (2 * g + 1 - j)] = fld.from_int(int(c))
    inner = PowerSeries(fld, coeffs, order)
    s = inner.sqrt()
    inv_s = s.inverse()
    minus_two = fld.from_int(-2)
    series = inv_s * minus_two
    shifts = [2 * (g - i - 1) for i in range(2 * g)]
    return shifts, series


def cup_matrix(curve, order=None):
    """Antisymmetric Gram matrix <omega_i, omega_j> = res_inf(F_i * omega_j)."""
    fld = curve.field
    g = curve.genus
    order = order or (8 * g + 12)
    shifts, series = _laurent_basis_forms(curve, order)
    out = Matrix.zeros(fld, 2 * g, 2 * g)
    for i in range(2 * g):
        # F_i: antiderivative of series * t^shift_i (even exponents only, so
        # no t^-1 term carries a nonzero coefficient)
        fi = {}
        for m, c in enumerate(series.coeffs):
            if c.is_exact_zero():
                continue
            e = shifts[i] + m
            if e == -1:
                raise PrecisionError("unexpected residue in basis form expansion")
            fi[e + 1] = c / fld.from_int(e + 1)
        for j in range(2 * g):
            res = fld.zero()
            for e, c in fi.items():
                m = -1 - e - shifts[j]
                if 0 <= m < len(series.coeffs):
                    res = res + c * series.coeffs[m]
            out.entries[i][j] = res
    return out


# ---------------------------------------------------------------------------
# Export to a geometry package


def to_geometry_package(curve, precision=None):
    """Split package of the curve: H^0 = Q_p (Phi = 1), H^1 = Q_p^2g
    (Phi = Kedlaya matrix), H^2 = Q_p (Phi = p, the trace class normalized so
    the cup pairing has trace 1); N = 0, Psi = identity, F^1 H^1 the
    holomorphic span, F^i H^2 = H^2 for i <= 1 and 0 for i >= 2."""
    from .phin import Filtration
    from .linalg import Subspace
    from .syntomic import split_package

    n = precision or curve.field.precision
    frob = frobenius_matrix(curve, n)
    fld = frob.work_field
    g = curve.genus
    p = curve.field.p

    phi_mats = {
        0: Matrix.identity(fld, 1),
        1: frob.matrix,
        2: Matrix.identity(fld, 1).scale(fld.from_int(p)),
    }
    hol = Subspace.span(
        fld,
        2 * g,
        [
            [fld.one() if t == i else fld.zero() for t in range(2 * g)]
            for i in range(g)
        ],
    )
    fil = {
        0: Filtration.trivial(fld, 1, cutoff=1),
        1: Filtration(fld, 2 * g, [(1, hol), (2, Subspace.zero(fld, 2 * g))]),
        2: Filtration(fld, 1, [(2, Subspace.zero(fld, 1))]),
    }
    cup = cup_matrix(HyperellipticCurve(curve.f, fld))
    pairing = {
        0: Matrix.identity(fld, 1),
        1: cup,
        2: Matrix.identity(fld, 1),
    }
    numerator = zeta_numerator(curve, n)
    exact_cp = {
        0: [-1, 1],
        1: list(reversed(numerator)),
        2: [-p, 1],
    }
    return split_package(
        fld,
        1,
        {0: 1, 1: 2 * g, 2: 1},
        phi_mats,
        fil_jumps=fil,
        pairing=pairing,
        exact_charpoly=exact_cp,
    )
