"""Capped-precision arithmetic in Q_p, polynomials over Q_p, truncated series.

A nonzero element is stored as p^v * u + O(p^(v+r)) with u a unit known
modulo p^r.  Exact zero is a distinguished value (valuation +infinity), so
kernel and filtration membership tests on exact inputs are decidable.
Addition converts through absolute precision, making cancellation loss
explicit; multiplication and division keep the coarser relative precision.
"""

import os
from fractions import Fraction

from .errors import DomainError, ParseError, PrecisionError

INF = float("inf")

# Extra asserts on every arithmetic result (see DESIGN: audit flag).
AUDIT = bool(os.environ.get("FPC_AUDIT"))


def _is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


class BaseField:
    """Q_p at a fixed default precision.  q = p, e = 1 throughout."""

    def __init__(self, p, precision):
        if not _is_prime(p):
            raise DomainError("p = %r is not prime" % (p,))
        if p < 3:
            raise DomainError("p must be odd, got %r" % (p,))
        if precision < 4:
            raise DomainError("default precision must be >= 4, got %r" % (precision,))
        self.p = p
        self.precision = precision
        self.q = p
        self.e = 1
        # apparent zeros O(p^m) with m >= zero_cutoff certify as zero in rank
        # decisions; below it the decision aborts with PrecisionError
        self.zero_cutoff = precision // 2 + 1
        self._powers = {}

    def ppow(self, k):
        """p^k, cached per precision level."""
        w = self._powers.get(k)
        if w is None:
            w = self.p ** k
            self._powers[k] = w
        return w

    def zero(self):
        return PadicNumber(self, INF, 0, self.precision)

    def one(self):
        return self.from_int(1)

    def from_int(self, n):
        return self.from_rational(n, 1)

    def from_rational(self, num, den=1):
        return make_padic(num, den, self)

    def from_fraction(self, fr):
        return make_padic(fr.numerator, fr.denominator, self)

    def __eq__(self, other):
        return isinstance(other, BaseField) and (self.p, self.precision) == (
            other.p,
            other.precision,
        )

    def __hash__(self):
        return hash((self.p, self.precision))

    def __repr__(self):
        return "BaseField(p=%d, precision=%d)" % (self.p, self.precision)


def _val_int(n, p):
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


class PadicNumber:
    """Immutable p^v * u + O(p^(v+r)).  Exact zero has v = +inf, u = 0."""

    __slots__ = ("field", "v", "u", "r")

    def __init__(self, field, v, u, r):
        self.field = field
        self.v = v
        self.u = u
        self.r = r
        if AUDIT:
            self._audit()

    def _audit(self):
        if self.v == INF:
            assert self.u == 0 and self.r == self.field.precision
        else:
            assert 0 <= self.r <= self.field.precision
            if self.r == 0:
                assert self.u == 0
            else:
                assert 0 < self.u < self.field.ppow(self.r)
                assert self.u % self.field.p != 0

    # -- predicates ------------------------------------------------------

    def is_exact_zero(self):
        return self.v == INF

    def is_apparent_zero(self):
        """True when nothing nonzero is certified: exact zero or O(p^v)."""
        return self.v == INF or self.r == 0

    def is_unit(self):
        return self.v == 0 and self.r > 0

    # -- precision bookkeeping -------------------------------------------

    def abs_prec(self):
        """Absolute precision: the value is known modulo p^abs_prec."""
        if self.v == INF:
            return INF
        return self.v + self.r

    def valuation(self):
        return self.v

    # -- constructors ----------------------------------------------------

    @staticmethod
    def exact_zero(field):
        return PadicNumber(field, INF, 0, field.precision)

    @staticmethod
    def apparent_zero(field, abs_prec):
        """O(p^abs_prec): known to vanish mod p^abs_prec, nothing more."""
        return PadicNumber(field, abs_prec, 0, 0)

    @staticmethod
    def from_unit(field, v, u, r):
        """Normalize an integer u (not necessarily reduced) at valuation v."""
        if r <= 0:
            return PadicNumber(field, v, 0, 0)
        u %= field.ppow(r)
        if u == 0:
            # the unit vanished mod p^r: all r digits cancelled
            return PadicNumber(field, v + r, 0, 0)
        w = _val_int(u, field.p)
        if w:
            v += w
            r -= w
            u = (u // field.ppow(w)) % field.ppow(r)
        return PadicNumber(field, v, u, r)

    # -- arithmetic ------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, PadicNumber):
            if other.field != self.field:
                raise DomainError("mixed base fields")
            return other
        if isinstance(other, int):
            return self.field.from_int(other)
        if isinstance(other, Fraction):
            return self.field.from_fraction(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self, other
        if a.is_exact_zero():
            return b
        if b.is_exact_zero():
            return a
        absprec = min(a.abs_prec(), b.abs_prec())
        v = min(a.v, b.v)
        if absprec <= v:
            return PadicNumber.apparent_zero(self.field, absprec)
        f = self.field
        m = f.ppow(absprec - v)
        s = ((a.u * f.ppow(a.v - v) if a.r else 0) + (b.u * f.ppow(b.v - v) if b.r else 0)) % m
        return PadicNumber.from_unit(f, v, s, absprec - v)

    __radd__ = __add__

    def __neg__(self):
        if self.is_exact_zero() or self.r == 0:
            return self
        f = self.field
        return PadicNumber(f, self.v, f.ppow(self.r) - self.u, self.r)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self, other
        if a.is_exact_zero() or b.is_exact_zero():
            return PadicNumber.exact_zero(self.field)
        r = min(a.r, b.r)
        v = a.v + b.v
        if r == 0:
            return PadicNumber.apparent_zero(self.field, v)
        f = self.field
        return PadicNumber(f, v, (a.u * b.u) % f.ppow(r), r)

    __rmul__ = __mul__

    def inverse(self):
        if self.is_exact_zero():
            raise DomainError("inversion of exact zero")
        if self.r == 0:
            raise PrecisionError(
                "inversion of apparent zero O(p^%s)" % self.v, absolute_precision=self.v
            )
        f = self.field
        return PadicNumber(f, -self.v, pow(self.u, -1, f.ppow(self.r)), self.r)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k):
        if k < 0:
            return self.inverse() ** (-k)
        out = self.field.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- comparisons and views ---------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self._coerce(other)
        if not isinstance(other, PadicNumber):
            return NotImplemented
        return (self.v, self.u, self.r) == (other.v, other.u, other.r)

    def __hash__(self):
        return hash((self.v, self.u, self.r))

    def same(self, other):
        """Indistinguishable at the common absolute precision."""
        other = self._coerce(other)
        return (self - other).is_apparent_zero()

    def at_precision(self, r):
        """Forget digits: cap the relative precision at r."""
        if self.is_exact_zero():
            return self
        return PadicNumber.from_unit(self.field, self.v, self.u, min(self.r, r))

    def at_absolute_precision(self, m):
        """Cap the absolute precision at m (an exact zero becomes O(p^m);
        used when an untracked error term of valuation >= m is present)."""
        if self.is_exact_zero() or self.v >= m:
            return PadicNumber.apparent_zero(self.field, m)
        return PadicNumber.from_unit(self.field, self.v, self.u, min(self.r, m - self.v))

    def lift(self):
        """Smallest nonnegative integer representative of p^v*u (v >= 0)."""
        if self.is_exact_zero() or self.r == 0:
            return 0
        if self.v < 0:
            raise DomainError("negative valuation has no integer lift")
        return self.u * self.field.ppow(self.v)

    def lift_to_fraction(self):
        """p^v*u as an exact rational (the stored representative)."""
        if self.is_exact_zero() or self.r == 0:
            return Fraction(0)
        return Fraction(self.u) * Fraction(self.field.p) ** self.v

    def rational_reconstruct(self):
        """Small fraction s/t congruent to this value, via lattice reduction.

        Needs |s|, |t| <= sqrt(p^r / 2); raises PrecisionError otherwise.
        """
        if self.is_exact_zero():
            return Fraction(0)
        if self.r == 0:
            raise PrecisionError("cannot reconstruct from apparent zero")
        m = self.field.ppow(self.r)
        bound = int((m // 2) ** 0.5)
        r0, r1 = m, self.u % m
        s0, s1 = 0, 1
        while r1 > bound:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            s0, s1 = s1, s0 - q * s1
        if r1 > bound or s1 == 0 or abs(s1) > bound:
            raise PrecisionError("rational reconstruction failed")
        if abs(s1) % self.field.p == 0:
            raise PrecisionError("rational reconstruction hit a p-divisible denominator")
        fr = Fraction(r1, s1) * Fraction(self.field.p) ** self.v
        return fr

    def __repr__(self):
        p = self.field.p
        if self.is_exact_zero():
            return "0 (exact)"
        if self.r == 0:
            return "O(%d^%s)" % (p, self.v)
        return "%d^%d * %d + O(%d^%d)" % (p, self.v, self.u, p, self.v + self.r)


def make_padic(numerator, denominator, field):
    """Canonical capped representation of numerator/denominator.

    Exact rationals get full relative precision; an exact 0 stays exact.
    """
    if denominator == 0:
        raise DomainError("denominator is zero")
    if numerator == 0:
        return PadicNumber.exact_zero(field)
    p, n = field.p, field.precision
    vn = _val_int(abs(numerator), p)
    vd = _val_int(abs(denominator), p)
    un = numerator // field.ppow(vn)
    ud = denominator // field.ppow(vd)
    u = (un * pow(ud, -1, field.ppow(n))) % field.ppow(n)
    return PadicNumber(field, vn - vd, u, n)


def arith(a, b, op):
    """Functional face of +,-,*,/ with the documented propagation rules."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        if b.is_exact_zero():
            raise DomainError("division by exact zero")
        return a / b
    raise DomainError("unknown op %r" % (op,))


def parse_rational(text):
    """Parse "a" or "a/b" into a Fraction."""
    text = text.strip()
    try:
        if "/" in text:
            a, b = text.split("/")
            return Fraction(int(a), int(b))
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError("bad rational %r: %s" % (text, exc))


def parse_scalar(text, field):
    """Parse "a", "a/b" or "p^v*u+O(p^m)" into a PadicNumber."""
    text = text.strip().replace(" ", "")
    if "O(" in text:
        # p^v*u+O(p^m)
        try:
            body, tail = text.split("+O(")
            mod = tail.rstrip(")")
            pm, m = mod.split("^")
            m = int(m)
            if int(pm) != field.p:
                raise ValueError("prime mismatch")
            if body in ("", "0"):
                return PadicNumber.apparent_zero(field, m)
            if "*" in body:
                pv, u = body.split("*")
                pbase, v = pv.split("^")
                if int(pbase) != field.p:
                    raise ValueError("prime mismatch")
                v, u = int(v), int(u)
            else:
                v, u = 0, int(body)
            return PadicNumber.from_unit(field, v, u, m - v)
        except (ValueError, IndexError) as exc:
            raise ParseError("bad p-adic literal %r: %s" % (text, exc))
    fr = parse_rational(text)
    return field.from_fraction(fr)


def render_scalar(x):
    """Decimal text rendering p^v * u + O(p^(v+r))."""
    p = x.field.p
    if x.is_exact_zero():
        return "0"
    if x.r == 0:
        return "O(%d^%d)" % (p, x.v)
    return "%d^%d*%d+O(%d^%d)" % (p, x.v, x.u, p, x.v + x.r)


# ---------------------------------------------------------------------------
# Polynomials over Q_p, variable T, lowest degree first.


class PadicPoly:
    """Dense polynomial over Q_p; trailing exact zeros are trimmed."""

    __slots__ = ("field", "coeffs")

    def __init__(self, field, coeffs):
        while coeffs and coeffs[-1].is_exact_zero():
            coeffs = coeffs[:-1]
        self.field = field
        self.coeffs = tuple(coeffs)

    @staticmethod
    def from_fractions(field, fracs):
        return PadicPoly(field, [field.from_fraction(Fraction(c)) for c in fracs])

    @staticmethod
    def one(field):
        return PadicPoly.from_fractions(field, [1])

    def degree(self):
        return len(self.coeffs) - 1

    def coeff(self, i):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return self.field.zero()

    def is_zero(self):
        return not self.coeffs

    def __eq__(self, other):
        return isinstance(other, PadicPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other):
        n = max(len(self.coeffs), len(other.coeffs))
        return PadicPoly(self.field, [self.coeff(i) + other.coeff(i) for i in range(n)])

    def __neg__(self):
        return PadicPoly(self.field, [-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (PadicNumber, int, Fraction)):
            if isinstance(other, (int, Fraction)):
                other = self.field.from_fraction(Fraction(other))
            return PadicPoly(self.field, [c * other for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return PadicPoly(self.field, [])
        out = [self.field.zero()] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a.is_exact_zero():
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return PadicPoly(self.field, out)

    __rmul__ = __mul__

    def evaluate(self, x):
        """Horner evaluation at a PadicNumber."""
        acc = self.field.zero()
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self):
        return PadicPoly(
            self.field, [self.coeffs[i] * i for i in range(1, len(self.coeffs))]
        )

    def constant_term(self):
        return self.coeff(0)

    def to_string(self, var="T"):
        if self.is_zero():
            return "0"
        parts = []
        for i, c in enumerate(self.coeffs):
            if c.is_exact_zero():
                continue
            fr = c.rational_reconstruct() if c.r else Fraction(0)
            txt = str(fr)
            if i == 0:
                parts.append(txt)
            else:
                mono = var if i == 1 else "%s^%d" % (var, i)
                if fr == 1:
                    parts.append(mono)
                elif fr == -1:
                    parts.append("-" + mono)
                else:
                    parts.append("%s*%s" % (txt, mono))
        out = " + ".join(parts)
        return out.replace("+ -", "- ")

    def __repr__(self):
        return "PadicPoly(%s)" % self.to_string()


# ---------------------------------------------------------------------------
# Truncated power series in a local parameter t.


class PowerSeries:
    """Coefficients c_0..c_{k} in t, known modulo t^truncation_order."""

    __slots__ = ("field", "coeffs", "order")

    def __init__(self, field, coeffs, order):
        coeffs = list(coeffs)[:order]
        while coeffs and coeffs[-1].is_exact_zero():
            coeffs.pop()
        self.field = field
        self.coeffs = tuple(coeffs)
        self.order = order

    @staticmethod
    def from_fractions(field, fracs, order):
        return PowerSeries(field, [field.from_fraction(Fraction(c)) for c in fracs], order)

    def coeff(self, i):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return self.field.zero()

    def __add__(self, other):
        order = min(self.order, other.order)
        n = min(max(len(self.coeffs), len(other.coeffs)), order)
        return PowerSeries(
            self.field, [self.coeff(i) + other.coeff(i) for i in range(n)], order
        )

    def __neg__(self):
        return PowerSeries(self.field, [-c for c in self.coeffs], self.order)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (PadicNumber, int, Fraction)):
            if isinstance(other, (int, Fraction)):
                other = self.field.from_fraction(Fraction(other))
            return PowerSeries(self.field, [c * other for c in self.coeffs], self.order)
        order = min(self.order, other.order)
        out = [self.field.zero()] * min(len(self.coeffs) + len(other.coeffs) - 1, order) \
            if self.coeffs and other.coeffs else []
        for i, a in enumerate(self.coeffs):
            if a.is_exact_zero():
                continue
            for j, b in enumerate(other.coeffs):
                if i + j >= order:
                    break
                out[i + j] = out[i + j] + a * b
        return PowerSeries(self.field, out, order)

    __rmul__ = __mul__

    def shift(self, k):
        """Multiply by t^k (k >= 0)."""
        return PowerSeries(
            self.field,
            [self.field.zero()] * k + list(self.coeffs),
            self.order + k,
        )

    def differentiate(self):
        return PowerSeries(
            self.field,
            [self.coeffs[i] * i for i in range(1, len(self.coeffs))],
            max(self.order - 1, 0),
        )

    def evaluate(self, t):
        """Evaluate at t with positive valuation (guarantees convergence of
        the dropped tail at the recorded truncation order)."""
        if not t.is_exact_zero() and t.valuation() < 1:
            raise DomainError("series evaluation needs |t| < 1")
        acc = self.field.zero()
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def inverse(self):
        """Invert a series with unit constant term (Newton iteration)."""
        c0 = self.coeff(0)
        if c0.is_apparent_zero():
            raise DomainError("series inversion needs a unit constant term")
        inv0 = c0.inverse()
        out = PowerSeries(self.field, [inv0], 1)
        prec = 1
        while prec < self.order:
            prec = min(2 * prec, self.order)
            trunc = PowerSeries(self.field, self.coeffs, prec)
            out = PowerSeries(self.field, out.coeffs, prec)
            two = self.field.from_int(2)
            out = out * (PowerSeries(self.field, [two], prec) - trunc * out)
        return out

    def sqrt(self, branch=None):
        """Square root with unit constant term; branch picks the sign of the
        constant term (defaults to the one congruent to +1 when c0 = 1)."""
        c0 = self.coeff(0)
        if c0.is_apparent_zero():
            raise DomainError("series sqrt needs a unit constant term")
        s0 = branch if branch is not None else padic_sqrt(c0)
        inv2 = self.field.from_int(2).inverse()
        out = PowerSeries(self.field, [s0], 1)
        prec = 1
        while prec < self.order:
            prec = min(2 * prec, self.order)
            trunc = PowerSeries(self.field, self.coeffs, prec)
            out = PowerSeries(self.field, out.coeffs, prec)
            out = (out + trunc * out.inverse()) * inv2
        return out

    def compose(self, inner):
        """self(inner(t)) for inner with zero constant term."""
        if inner.coeffs and not inner.coeff(0).is_exact_zero() \
                and not inner.coeff(0).is_apparent_zero():
            raise DomainError("composition needs inner constant term 0")
        order = min(self.order, inner.order)
        acc = PowerSeries(self.field, [], order)
        for c in reversed(self.coeffs):
            acc = acc * inner + PowerSeries(self.field, [c], order)
        return acc

    def __repr__(self):
        return "PowerSeries(%s; O(t^%d))" % (
            ", ".join(render_scalar(c) for c in self.coeffs[:6]),
            self.order,
        )


def series_integrate(s, field=None):
    """Term-by-term antiderivative with zero constant term.

    The t^(k+1) coefficient is c_k/(k+1); dividing by p | k+1 costs
    v_p(k+1) digits of absolute precision on that term, which the capped
    representation records automatically.
    """
    field = field or s.field
    out = [field.zero()]
    for k, c in enumerate(s.coeffs):
        out.append(c / field.from_int(k + 1))
    return PowerSeries(field, out, s.order + 1)


def padic_sqrt(x, residue_sign=None):
    """Hensel square root of a unit (p odd).  residue_sign picks the root
    congruent to that residue mod p when supplied."""
    if x.is_exact_zero():
        return x
    if x.v % 2 != 0 or x.r == 0:
        raise DomainError("no square root at this precision/valuation")
    f = x.field
    p = f.p
    a = x.u % p
    # find the mod-p root
    s = None
    for c in range(1, p):
        if (c * c) % p == a:
            s = c
            break
    if s is None:
        raise DomainError("unit is not a quadratic residue mod p")
    if residue_sign is not None and s % p != residue_sign % p:
        s = p - s
    # Hensel lifting to the full stored precision
    r = x.r
    m = f.ppow(r)
    s = pow(s, 1, m)
    known = 1
    while known < r:
        known = min(2 * known, r)
        mk = f.ppow(known)
        s = (s + x.u * pow(s, -1, mk)) * pow(2, -1, mk) % mk
    root = PadicNumber(f, x.v // 2, s % m, r)
    return root
