"""Coleman integration of odd 1-forms on odd hyperelliptic curves.

Anchors are Teichmueller points (fixed by the Kedlaya Frobenius lift); the
global linear system is the Frobenius equivariance

    (I - M^T) c = [g_i(T_Q) - g_i(T_P)]_i

coming from phi* omega_i = d g_i + sum_j M_ji omega_j, with (I - M^T)
invertible by weight-1 purity.  Tiny integrals use the parameter
t = x - x(anchor) on ordinary discs with y recovered by a Hensel square
root.
"""

import math

from .curves import frobenius_matrix, reduce_odd_form
from .errors import (
    DomainError,
    NonOrdinaryDisc,
    NotNullHomologous,
    PrecisionError,
    SingularSystem,
)
from .linalg import Matrix, invert, rank, solve
from .padic import PadicNumber, PadicPoly, PowerSeries, padic_sqrt, series_integrate


def coerce(x, field):
    """Transplant a PadicNumber into another base field (same p)."""
    if x.field is field:
        return x
    if x.field.p != field.p:
        raise DomainError("cannot move between different primes")
    if x.is_exact_zero():
        return field.zero()
    r = min(x.r, field.precision)
    return PadicNumber.from_unit(field, x.v, x.u, r)


class CurvePoint:
    """Point (x, y) with y^2 = f(x) at working precision."""

    def __init__(self, curve, x, y, check=True):
        self.curve = curve
        self.x = x
        self.y = y
        if check:
            fx = curve.f_poly(x.field).evaluate(x)
            res = y * y - fx
            if not res.is_apparent_zero():
                raise DomainError("point is not on the curve: y^2 - f(x) = %r" % res)
        self.disc = self._classify()

    def _classify(self):
        if not self.x.is_exact_zero() and self.x.valuation() < 0:
            return "infinity"
        if self.y.is_apparent_zero() or self.y.valuation() > 0:
            return "weierstrass"
        return "ordinary"

    def residue(self):
        p = self.x.field.p
        xr = 0 if (self.x.is_exact_zero() or self.x.valuation() > 0) else self.x.u % p
        yr = 0 if (self.y.is_exact_zero() or self.y.valuation() > 0) else self.y.u % p
        return (xr, yr)

    def in_field(self, field):
        return CurvePoint(self.curve, coerce(self.x, field), coerce(self.y, field), check=False)

    def __repr__(self):
        return "CurvePoint(x=%r, y=%r, %s)" % (self.x, self.y, self.disc)


def point_from_rational(curve, x_num, x_den=1, y_sign=1, field=None):
    """Point with rational x; y = sqrt(f(x)) with the requested sign of the
    mod-p residue (y_sign in {1, -1} picks the branch deterministically)."""
    fld = field or curve.field
    x = fld.from_rational(x_num, x_den)
    fx = curve.f_poly(fld).evaluate(x)
    y = padic_sqrt(fx)
    if y_sign < 0:
        y = -y
    return CurvePoint(curve, x, y)


def require_ordinary(pt):
    if pt.disc != "ordinary":
        raise NonOrdinaryDisc("point lies in a %s disc" % pt.disc)


def teichmuller_disc(curve, pt, field=None):
    """The Frobenius-fixed point of the residue disc of pt (Newton iteration
    on z^p - z, then the matching square root)."""
    require_ordinary(pt)
    fld = field or pt.x.field
    p = fld.p
    z = coerce(pt.x, fld)
    one = fld.one()
    pnum = fld.from_int(p)
    for _ in range(2 * fld.precision + 4):
        zp = z ** (p - 1)
        num = zp * z - z
        if num.is_apparent_zero():
            break
        den = pnum * zp - one
        z = z - num / den
    fx = curve.f_poly(fld).evaluate(z)
    ybar = pt.y.u % p if pt.y.r else 0
    y = padic_sqrt(fx, residue_sign=ybar)
    return CurvePoint(curve, z, y, check=False)


class OddForm:
    """A(x) dx / y^(2s+1) with A a polynomial over the curve's field."""

    def __init__(self, numerator, s=0):
        self.numerator = numerator
        self.s = s

    @staticmethod
    def basis(curve, i, field=None):
        fld = field or curve.field
        coeffs = [0] * i + [1]
        return OddForm(PadicPoly.from_fractions(fld, coeffs), 0)

    @staticmethod
    def combination(curve, coeffs, field=None):
        fld = field or curve.field
        return OddForm(PadicPoly(fld, [c for c in coeffs]), 0)


def local_expansions(curve, anchor, order):
    """(X(t), Y(t)) power series at an ordinary anchor, t = x - x(anchor)."""
    fld = anchor.x.field
    x0, y0 = anchor.x, anchor.y
    xs = PowerSeries(fld, [x0, fld.one()], order)
    # f(x0 + t) as a series
    fs = PowerSeries(fld, [fld.zero()], order)
    acc = PowerSeries(fld, [fld.one()], order)
    for c in curve.f_poly(fld).coeffs:
        fs = fs + acc * c
        acc = acc * xs
    # y(t) = y0 sqrt(1 + (f(x0+t) - f(x0)) / y0^2)
    f0 = fs.coeff(0)
    inner_coeffs = [fld.one()] + [c / (y0 * y0) for c in fs.coeffs[1:]]
    inner = PowerSeries(fld, inner_coeffs, order)
    ys = inner.sqrt() * y0
    return xs, ys


def form_local_series(curve, form, anchor, order):
    """Series of A(x) / y^(2s+1) dx in dt at the anchor."""
    fld = anchor.x.field
    xs, ys = local_expansions(curve, anchor, order)
    num = PowerSeries(fld, [fld.zero()], order)
    acc = PowerSeries(fld, [fld.one()], order)
    for c in form.numerator.coeffs:
        num = num + acc * coerce(c, fld)
        acc = acc * xs
    y_inv = ys.inverse()
    power = 2 * form.s + 1
    out = num
    for _ in range(power):
        out = out * y_inv
    return out


def _tiny_order(field):
    n = field.precision
    return n + int(math.ceil(math.log(n + 2, field.p))) + 3


def tiny_integral(curve, form, start, end, field=None):
    """Integral of an odd form between two points of one ordinary disc."""
    fld = field or start.x.field
    start = start.in_field(fld)
    end = end.in_field(fld)
    require_ordinary(start)
    require_ordinary(end)
    if start.residue() != end.residue():
        raise DomainError("tiny integral endpoints lie in different residue discs")
    order = _tiny_order(fld)
    series = form_local_series(curve, form, start, order)
    anti = series_integrate(series)
    t_end = end.x - start.x
    if not t_end.is_exact_zero() and t_end.valuation() < 1:
        raise PrecisionError("endpoint difference is not small in the disc")
    return anti.evaluate(t_end)


def _evaluate_g_terms(curve, g_terms, pt):
    """Value of sum_j v_j(x) y^(-e_j) (+ w(x) y terms for e = -1)."""
    fld = pt.x.field
    total = fld.zero()
    y_inv = pt.y.inverse()
    for poly, e in g_terms:
        val = _eval_poly(poly, pt.x, fld)
        if e == -1:
            total = total + val * pt.y
        else:
            total = total + val * (y_inv ** e)
    return total


def _eval_poly(poly, x, fld):
    acc = fld.zero()
    for c in reversed(poly.coeffs):
        acc = acc * x + coerce(c, fld)
    return acc


class ColemanPrimitive:
    """Per-curve Frobenius data and the anchored primitive machinery."""

    def __init__(self, curve, precision=None):
        self.curve = curve
        self.frob = frobenius_matrix(curve, precision)
        self.field = self.frob.work_field
        g = curve.genus
        m = self.frob.matrix
        eye = Matrix.identity(self.field, 2 * g)
        system = eye - m.transpose()
        if rank(system) < 2 * g:
            raise SingularSystem(
                "I - M^T is singular; weight-1 purity must have failed"
            )
        self._system_inv = invert(system)

    def anchor(self, pt):
        return teichmuller_disc(self.curve, pt.in_field(self.field), field=self.field)

    def g_value(self, i, pt):
        return _evaluate_g_terms(self.curve, self.frob.g_data[i], pt)

    def between_anchors(self, t_start, t_end):
        """Vector of integrals of the basis forms between Teichmueller points."""
        fld = self.field
        rhs = [
            self.g_value(i, t_end) - self.g_value(i, t_start)
            for i in range(2 * self.curve.genus)
        ]
        return self._system_inv.apply(rhs)

    def primitive_vector(self, start, end):
        """Integrals of all basis forms from start to end (both ordinary)."""
        fld = self.field
        start = start.in_field(fld)
        end = end.in_field(fld)
        require_ordinary(start)
        require_ordinary(end)
        ts = self.anchor(start)
        te = self.anchor(end)
        mid = self.between_anchors(ts, te)
        out = []
        for i in range(2 * self.curve.genus):
            form = OddForm.basis(self.curve, i, self.field)
            head = tiny_integral(self.curve, form, start, ts, field=fld)
            tail = tiny_integral(self.curve, form, te, end, field=fld)
            out.append(head + mid[i] + tail)
        return out


def coleman_primitive(curve, start, end, precision=None):
    return ColemanPrimitive(curve, precision).primitive_vector(start, end)


def reduce_form(curve, numerator, s, field=None):
    """Kedlaya-reduce A(x) dx/y^(2s+1); exactness holds iff all basis
    coefficients vanish."""
    return reduce_odd_form(curve, numerator, s, field or curve.field)


def aj_divisor(curve, divisor, omega_coeffs, precision=None, basepoint=None):
    """sum_j n_j F_omega(P_j) for a degree-zero divisor on ordinary discs."""
    total_deg = sum(m for _, m in divisor)
    if total_deg != 0:
        raise NotNullHomologous(
            "divisor has degree %d != 0" % total_deg, obstruction=total_deg
        )
    prim = ColemanPrimitive(curve, precision)
    fld = prim.field
    for pt, _ in divisor:
        require_ordinary(pt)
    base = basepoint or divisor[0][0]
    require_ordinary(base)
    total = fld.zero()
    for pt, mult in divisor:
        if mult == 0:
            continue
        vec = prim.primitive_vector(base, pt)
        val = fld.zero()
        for c, v in zip(omega_coeffs, vec):
            val = val + coerce(c, fld) * v
        total = total + val * fld.from_int(mult)
    return total


class PairRepresentation:
    """The (f, omega) data of an affine syntomic class: f = P(Phi) F_omega
    with nabla f = P(Phi) omega; evaluation recovers F_omega."""

    def __init__(self, curve, omega_coeffs, poly, precision=None):
        self.curve = curve
        self.prim = ColemanPrimitive(curve, precision)
        self.field = self.prim.field
        fld = self.field
        self.omega = [coerce(c, fld) for c in omega_coeffs]
        self.poly = poly
        g = curve.genus
        m = self.prim.frob.matrix
        from .linalg import apply_poly

        pm = apply_poly(poly, m)
        killed = pm.apply(self.omega)
        if not all(e.is_apparent_zero() for e in killed):
            raise DomainError("P(Phi) does not annihilate the form on H^1")
        self.p_at_one = poly.evaluate(fld.one())
        if self.p_at_one.is_apparent_zero():
            raise DomainError("P(Phi) is not invertible on H^0 (P(1) = 0)")
        # iterates M^l a for the telescoped g-values
        deg = poly.degree()
        self.iterates = [list(self.omega)]
        for _ in range(deg - 1):
            self.iterates.append(m.apply(self.iterates[-1]))
        self.c = [coerce(poly.coeff(k), fld) for k in range(deg + 1)]

    def big_g_value(self, anchor):
        """G(T) = sum_k c_k sum_{l<k} g_{M^l a}(T) at a Teichmueller anchor."""
        fld = self.field
        gvals = []
        for it in self.iterates:
            val = fld.zero()
            for i, coeff in enumerate(it):
                if not coeff.is_exact_zero():
                    val = val + coeff * self.prim.g_value(i, anchor)
            gvals.append(val)
        total = fld.zero()
        for k in range(1, len(self.c)):
            ck = self.c[k]
            if ck.is_exact_zero():
                continue
            partial = fld.zero()
            for l in range(k):
                partial = partial + gvals[l]
            total = total + ck * partial
        return total

    def primitive_at(self, pt):
        """F_omega(pt) = G(T_pt)/P(1) + tiny integral from the anchor."""
        pt = pt.in_field(self.field)
        require_ordinary(pt)
        anchor = self.prim.anchor(pt)
        base = self.big_g_value(anchor) / self.p_at_one
        form = OddForm.combination(self.curve, self.omega, self.field)
        return base + tiny_integral(self.curve, form, anchor, pt, field=self.field)

    def f_value(self, pt):
        """f = P(Phi) F_omega evaluated at a Teichmueller anchor."""
        pt = pt.in_field(self.field)
        anchor = self.prim.anchor(pt)
        return self.big_g_value(anchor)


def pair_representation(curve, omega_coeffs, poly, precision=None):
    return PairRepresentation(curve, omega_coeffs, poly, precision)


# ---------------------------------------------------------------------------
# Local verification helpers (test oracles for nabla f = P(Phi) omega)


def frobenius_disc_action(curve, anchor, order):
    """(tau(t), Y_phi(t)): the Kedlaya Frobenius lift as a self-map of the
    anchor's disc, in the local parameter (tau = x o phi - x(anchor))."""
    fld = anchor.x.field
    p = fld.p
    xs, _ = local_expansions(curve, anchor, order)
    # x o phi = (x0 + t)^p
    xphi = PowerSeries(fld, [fld.one()], order)
    for _ in range(p):
        xphi = xphi * xs
    tau = xphi - PowerSeries(fld, [anchor.x], order)
    # y o phi = sqrt(f(x^p)) with the branch matching y(anchor)^p == y(anchor)
    facc = PowerSeries(fld, [fld.zero()], order)
    pw = PowerSeries(fld, [fld.one()], order)
    for c in curve.f_poly(fld).coeffs:
        facc = facc + pw * c
        pw = pw * xphi
    c0 = facc.coeff(0)
    root0 = padic_sqrt(c0, residue_sign=(anchor.y.u % p if anchor.y.r else 0))
    inner = PowerSeries(
        fld, [fld.one()] + [c / c0 for c in facc.coeffs[1:]], order
    )
    yphi = inner.sqrt() * root0
    return tau, yphi


def g_terms_local_series(curve, g_terms, anchor, order, xs=None, ys=None):
    """Local series of sum v(x) y^(-e) (+ w(x) y) at an anchor."""
    fld = anchor.x.field
    if xs is None or ys is None:
        xs, ys = local_expansions(curve, anchor, order)
    total = PowerSeries(fld, [], order)
    y_inv = ys.inverse()
    for poly, e in g_terms:
        acc = PowerSeries(fld, [], order)
        pw = PowerSeries(fld, [fld.one()], order)
        for c in poly.coeffs:
            acc = acc + pw * coerce(c, fld)
            pw = pw * xs
        if e == -1:
            acc = acc * ys
        else:
            for _ in range(e):
                acc = acc * y_inv
        total = total + acc
    return total
