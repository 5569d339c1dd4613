"""Filtered (phi, N)-modules over Q_p: duals, tensors, symmetric powers, Tate
twists, the rank-2 Clebsch-Gordan decomposition with explicit projectors, and
Weil-weight purity via complex root moduli.

Twist convention (paper: the Tate twist E(n) multiplies Frobenius by p^(-n)):
twist(m, j) multiplies Phi by p^(-j) and shifts filtration labels down by j,
so E(-j) raises the purity weight by 2j.
"""

import math
from fractions import Fraction
from itertools import product as iproduct

import numpy

from .errors import DomainError, PrecisionError
from .linalg import Matrix, Subspace, berkowitz, charpoly, invert, kernel, rank

PURITY_TOL = 1e-8


class Filtration:
    """Decreasing step filtration: list of (label, Subspace) jumps.

    Below the smallest label the filtration is the whole space; at and above
    a label it equals that jump's subspace until the next label.
    """

    def __init__(self, field, ambient_dim, jumps):
        self.field = field
        self.ambient_dim = ambient_dim
        jumps = sorted(jumps, key=lambda t: t[0])
        labels = [l for l, _ in jumps]
        if len(set(labels)) != len(labels):
            raise DomainError("duplicate filtration labels")
        self.jumps = jumps
        prev = Subspace.full(field, ambient_dim)
        for label, sub in jumps:
            if sub.ambient_dim != ambient_dim:
                raise DomainError("filtration subspace in wrong ambient space")
            if not prev.contains_subspace(sub):
                raise DomainError("filtration not decreasing at label %s" % label)
            prev = sub

    @staticmethod
    def trivial(field, ambient_dim, cutoff=1):
        """Full below cutoff, zero from cutoff on."""
        return Filtration(field, ambient_dim, [(cutoff, Subspace.zero(field, ambient_dim))])

    def at(self, label):
        cur = Subspace.full(self.field, self.ambient_dim)
        for l, sub in self.jumps:
            if l <= label:
                cur = sub
            else:
                break
        return cur

    def labels(self):
        return [l for l, _ in self.jumps]

    def min_label(self):
        return self.jumps[0][0] if self.jumps else 0

    def max_label(self):
        return self.jumps[-1][0] if self.jumps else 0

    def is_exhaustive(self):
        return (not self.jumps) or self.jumps[-1][1].dim() == 0

    def shifted(self, k):
        """Filtration of E(k): Fil^i E(k) = Fil^(i+k) E."""
        return Filtration(self.field, self.ambient_dim, [(l - k, s) for l, s in self.jumps])


class FilPhiNModule:
    def __init__(self, field, phi, nmat=None, fil=None):
        self.field = field
        self.dim = phi.rows
        if phi.rows != phi.cols:
            raise DomainError("Phi must be square")
        self.phi = phi
        self.nmat = nmat if nmat is not None else Matrix.zeros(field, self.dim, self.dim)
        self.fil = fil if fil is not None else Filtration.trivial(field, self.dim)

    def __repr__(self):
        return "FilPhiNModule(dim %d over Q_%d)" % (self.dim, self.field.p)


def check_phin(m):
    """None when the module data is consistent, else a violation string."""
    f = m.field
    p = f.from_int(f.p)
    lhs = (m.phi * m.nmat).scale(p)
    rhs = m.nmat * m.phi
    if not (lhs - rhs).is_apparent_zero():
        return "operator relation p*Phi*N = N*Phi fails"
    if rank(m.phi) < m.dim:
        return "Phi is not invertible at working precision"
    if not m.fil.is_exhaustive():
        return "filtration does not end at 0"
    # monotonicity is enforced at construction; re-check defensively
    prev = Subspace.full(f, m.dim)
    for label, sub in m.fil.jumps:
        if not prev.contains_subspace(sub):
            return "filtration increases at label %s" % label
        prev = sub
    return None


def dual(m):
    """(Phi, N, Fil) dual: transpose-inverse Frobenius, -N^T, and the
    annihilator filtration Fil^(-i+1) = ann(Fil^i)."""
    f = m.field
    phi_dual = invert(m.phi.transpose())
    n_dual = m.nmat.transpose().scale(f.from_int(-1))
    jumps = []
    for label, _sub in m.fil.jumps:
        below = m.fil.at(label - 1)
        jumps.append((2 - label, below.annihilator()))
    return FilPhiNModule(f, phi_dual, n_dual, Filtration(f, m.dim, jumps))


def tensor(a, b):
    """Kronecker Frobenius, Leibniz monodromy, convolution filtration."""
    f = a.field
    phi = Matrix.kron(a.phi, b.phi)
    n = Matrix.kron(a.nmat, Matrix.identity(f, b.dim)) + Matrix.kron(
        Matrix.identity(f, a.dim), b.nmat
    )
    jumps = _convolve_filtrations(f, a.fil, b.fil, a.dim, b.dim)
    return FilPhiNModule(f, phi, n, jumps)


def _tensor_subspace(f, sa, sb, dim_b):
    cols = []
    for i in range(sa.dim()):
        va = sa.basis.column(i)
        for j in range(sb.dim()):
            vb = sb.basis.column(j)
            cols.append([x * y for x in va for y in vb])
    return Subspace.span(f, sa.ambient_dim * dim_b, cols)


def _convolve_filtrations(f, fa, fb, dim_a, dim_b):
    n_dim = dim_a * dim_b
    lo = (fa.min_label() - 1) + (fb.min_label() - 1)
    hi = fa.max_label() + fb.max_label()
    a_steps = [fa.min_label() - 1] + fa.labels()
    jumps = []
    prev_dim = None
    for n in range(lo, hi + 1):
        total = Subspace.zero(f, n_dim)
        for ia in a_steps:
            sa = fa.at(ia)
            sb = fb.at(n - ia)
            if sa.dim() == 0 or sb.dim() == 0:
                continue
            total = total.add(_tensor_subspace(f, sa, sb, dim_b))
        if prev_dim is None or total.dim() != prev_dim:
            jumps.append((n, total))
            prev_dim = total.dim()
    # normalize: drop a leading full jump (it is the default below all labels)
    while jumps and jumps[0][1].dim() == n_dim:
        jumps.pop(0)
    if not jumps or jumps[-1][1].dim() != 0:
        jumps.append((hi + 1, Subspace.zero(f, n_dim)))
    return Filtration(f, n_dim, jumps)


def _exponent_basis(n, k):
    """Exponent vectors of total degree k in n variables, lex order."""
    if n == 1:
        return [(k,)]
    out = []
    for first in range(k, -1, -1):
        for rest in _exponent_basis(n - 1, k - first):
            out.append((first,) + rest)
    return out


class _Poly:
    """Sparse multivariate polynomial over PadicNumber: {exponents: coeff}."""

    def __init__(self, field, terms=None):
        self.field = field
        self.terms = dict(terms or {})

    def add_term(self, expo, coeff):
        if coeff.is_exact_zero():
            return
        cur = self.terms.get(expo)
        self.terms[expo] = coeff if cur is None else cur + coeff

    def __mul__(self, other):
        out = _Poly(self.field)
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out.add_term(e, c1 * c2)
        return out

    def __add__(self, other):
        out = _Poly(self.field, self.terms)
        for e, c in other.terms.items():
            out.add_term(e, c)
        return out

    def scale(self, c):
        out = _Poly(self.field)
        for e, cf in self.terms.items():
            out.add_term(e, cf * c)
        return out

    def power(self, k):
        out = _Poly(self.field)
        out.add_term(tuple([0] * _nvars(self)), self.field.one())
        for _ in range(k):
            out = out * self
        return out


def _nvars(poly):
    for e in poly.terms:
        return len(e)
    return 0


def _linear_form(field, nvars, coeffs, offset=0):
    p = _Poly(field)
    for i, c in enumerate(coeffs):
        e = [0] * nvars
        e[offset + i] = 1
        p.add_term(tuple(e), c)
    return p


def sym_power(m, k):
    """Sym^k on the monomial basis (exponent vectors, lex order)."""
    if k < 0:
        raise DomainError("sym_k needs k >= 0")
    f = m.field
    n = m.dim
    basis = _exponent_basis(n, k) if n else []
    index = {e: i for i, e in enumerate(basis)}
    dim = len(basis)

    def substituted(matrix, expo):
        # image of the monomial x^expo under x_i -> sum_t matrix[t][i] x_t
        out = _Poly(f)
        out.add_term(tuple([0] * n), f.one())
        for i, e in enumerate(expo):
            if e == 0:
                continue
            lf = _linear_form(f, n, matrix.column(i))
            out = out * lf.power(e)
        return out

    phi_cols = []
    for e in basis:
        img = substituted(m.phi, e)
        col = [f.zero()] * dim
        for expo, c in img.terms.items():
            col[index[expo]] = c
        phi_cols.append(col)
    phi = Matrix.from_columns(f, dim, phi_cols)

    # Leibniz: N(x^E) = sum_i E_i x^(E - e_i) * (N x_i)
    n_cols = []
    for e in basis:
        col = [f.zero()] * dim
        for i, ei in enumerate(e):
            if ei == 0:
                continue
            for t in range(n):
                c = m.nmat.entries[t][i]
                if c.is_exact_zero():
                    continue
                new = list(e)
                new[i] -= 1
                new[t] += 1
                col[index[tuple(new)]] = col[index[tuple(new)]] + c * f.from_int(ei)
        n_cols.append(col)
    nmat = Matrix.from_columns(f, dim, n_cols)

    fil = _sym_filtration(m, k, basis, index)
    return FilPhiNModule(f, phi, nmat, fil)


def _vector_as_form(f, n, vec):
    return _linear_form(f, n, vec)


def _sym_filtration(m, k, basis, index):
    f = m.field
    n = m.dim
    dim = len(basis)
    if k == 0:
        # Sym^0 is the unit object: Fil^n = everything for n <= 0, zero above
        return Filtration.trivial(f, dim, cutoff=1)
    steps = [m.fil.min_label() - 1] + m.fil.labels()
    lo = k * (m.fil.min_label() - 1)
    hi = k * m.fil.max_label()
    jumps = []
    prev_dim = None
    import itertools

    for nlab in range(lo, hi + 1):
        span_cols = []
        for combo in itertools.combinations_with_replacement(steps, k):
            if sum(combo) < nlab:
                continue
            spaces = [m.fil.at(l) for l in combo]
            if any(s.dim() == 0 for s in spaces):
                continue
            for choice in iproduct(*[range(s.dim()) for s in spaces]):
                poly = _Poly(f)
                poly.add_term(tuple([0] * n), f.one())
                for s, j in zip(spaces, choice):
                    poly = poly * _vector_as_form(f, n, s.basis.column(j))
                col = [f.zero()] * dim
                for expo, c in poly.terms.items():
                    col[index[expo]] = c
                span_cols.append(col)
        total = Subspace.span(f, dim, span_cols) if span_cols else Subspace.zero(f, dim)
        if prev_dim is None or total.dim() != prev_dim:
            jumps.append((nlab, total))
            prev_dim = total.dim()
    while jumps and jumps[0][1].dim() == dim:
        jumps.pop(0)
    if not jumps or jumps[-1][1].dim() != 0:
        jumps.append((hi + 1, Subspace.zero(f, dim)))
    return Filtration(f, dim, jumps)


def twist(m, j):
    """E(j): Frobenius times p^(-j), filtration labels shifted down by j."""
    f = m.field
    scalar = f.from_rational(1, f.ppow(j)) if j >= 0 else f.from_int(f.ppow(-j))
    return FilPhiNModule(f, m.phi.scale(scalar), m.nmat, m.fil.shifted(j))


def construct(op, *args):
    """tensor(a, b) | sym_k(m, k) | twist_j(m, j)."""
    if op == "tensor":
        return tensor(*args)
    if op == "sym_k":
        return sym_power(*args)
    if op == "twist_j":
        return twist(*args)
    raise DomainError("unknown construction %r" % (op,))


# ---------------------------------------------------------------------------
# Purity


def exact_charpoly_fractions(phi):
    """Characteristic polynomial coefficients as exact rationals (ascending),
    reconstructed from the capped entries."""
    cp = charpoly(phi)
    out = []
    for i in range(cp.degree() + 1):
        c = cp.coeff(i)
        if c.is_exact_zero():
            out.append(Fraction(0))
        elif c.is_apparent_zero():
            out.append(Fraction(0))
        else:
            out.append(c.rational_reconstruct())
    return out


def purity_weight_of_roots(fracs, q):
    """Weight w with all complex roots of modulus q^(w/2), or None."""
    deg = len(fracs) - 1
    while deg >= 0 and fracs[deg] == 0:
        deg -= 1
    if deg <= 0:
        return None if deg < 0 else None
    coeffs = [float(fracs[i]) for i in range(deg, -1, -1)]
    roots = numpy.roots(coeffs)
    mods = [abs(z) for z in roots]
    if any(mod < PURITY_TOL for mod in mods):
        return None
    w = round(2 * math.log(mods[0]) / math.log(q))
    target = q ** (w / 2.0)
    if all(abs(mod - target) <= PURITY_TOL * max(1.0, target) for mod in mods):
        return w
    return None


def purity_weights(phi, q):
    """Weight of the matrix Phi: w when every eigenvalue has complex modulus
    q^(w/2) within 1e-8, else None (NotPure)."""
    if phi.rows == 0:
        return 0
    fracs = exact_charpoly_fractions(phi)
    return purity_weight_of_roots(fracs, q)


# ---------------------------------------------------------------------------
# Clebsch-Gordan for 2-dimensional H


class TwistedSummand:
    def __init__(self, module, twist_label, embedding, projection):
        self.module = module
        self.twist = twist_label
        self.embedding = embedding
        self.projection = projection


def _bidegree_basis(r2, r3):
    b2 = _exponent_basis(2, r2)
    b3 = _exponent_basis(2, r3)
    return [(e1, e2) for e1 in b2 for e2 in b3]


def clebsch_gordan(h, r2, r3, r1=None, pairing=None):
    """Sym^r2 H (x) Sym^r3 H = (+)_j Sym^(r2+r3-2j) H (-j) for dim-2 H.

    Embeddings are Omega^j-multiples of polarizations (Omega the symplectic
    invariant of the pairing); projections come from inverting the assembled
    block matrix, so projection o embedding = id exactly.  Returns
    (summands, pr) with pr the projection onto the summand Sym^r1(-t) when
    r1 is given (r1 = r2 + r3 - 2t), else pr = None.
    """
    if h.dim != 2:
        raise DomainError("Clebsch-Gordan implemented for 2-dimensional H")
    if r2 > r3:
        r2, r3 = r3, r2
    f = h.field
    if pairing is None:
        pairing = Matrix.from_rational_rows(f, [[0, 1], [-1, 0]])
    if rank(pairing) != 2:
        raise DomainError("supplied pairing is degenerate")
    if not (pairing + pairing.transpose()).is_apparent_zero():
        raise DomainError("supplied pairing is not antisymmetric")

    parent_basis = _bidegree_basis(r2, r3)
    parent_index = {e: i for i, e in enumerate(parent_basis)}
    parent_dim = len(parent_basis)

    det_phi = _det2(h.phi)

    def omega_poly():
        # Omega = sum_{s,t} B_{st} x1_s x2_t over the 4 variables (x1_0, x1_1, x2_0, x2_1)
        p = _Poly(f)
        for s in range(2):
            for t in range(2):
                c = pairing.entries[s][t]
                if c.is_exact_zero():
                    continue
                e = [0, 0, 0, 0]
                e[s] += 1
                e[2 + t] += 1
                p.add_term(tuple(e), c)
        return p

    omega = omega_poly()

    def polarize(expo, a, b):
        """x^expo |-> bidegree (a, b)-part of (x1 + x2)^expo, as a _Poly in
        four variables."""
        out = _Poly(f)
        zero4 = (0, 0, 0, 0)
        out.add_term(zero4, f.one())
        for i, e in enumerate(expo):
            if e == 0:
                continue
            lf = _Poly(f)
            e1 = [0, 0, 0, 0]
            e1[i] = 1
            lf.add_term(tuple(e1), f.one())
            e2 = [0, 0, 0, 0]
            e2[2 + i] = 1
            lf.add_term(tuple(e2), f.one())
            out = out * lf.power(e)
        part = _Poly(f)
        for expo4, c in out.terms.items():
            if expo4[0] + expo4[1] == a and expo4[2] + expo4[3] == b:
                part.add_term(expo4, c)
        return part

    summands = []
    blocks = []
    for j in range(r2 + 1):
        mdeg = r2 + r3 - 2 * j
        sub_basis = _exponent_basis(2, mdeg)
        omega_j = _Poly(f)
        omega_j.add_term((0, 0, 0, 0), f.one())
        for _ in range(j):
            omega_j = omega_j * omega
        cols = []
        for expo in sub_basis:
            poly = polarize(expo, r2 - j, r3 - j) * omega_j
            col = [f.zero()] * parent_dim
            for expo4, c in poly.terms.items():
                key = ((expo4[0], expo4[1]), (expo4[2], expo4[3]))
                col[parent_index[key]] = col[parent_index[key]] + c
            cols.append(col)
        emb = Matrix.from_columns(f, parent_dim, cols)
        blocks.append(emb)
        base = sym_power(h, mdeg)
        # Frobenius of the summand: det(Phi)^j * Sym^m(Phi) (the (-j) twist)
        twisted_phi = base.phi.scale(det_phi ** j)
        fil = base.fil.shifted(-j)
        module = FilPhiNModule(f, twisted_phi, base.nmat, fil)
        summands.append(TwistedSummand(module, -j, emb, None))

    glue = Matrix.block(f, [blocks])
    if glue.rows != glue.cols:
        raise DomainError("Clebsch-Gordan dimension bookkeeping failed")
    inv = invert(glue)
    offset = 0
    for s in summands:
        d = s.embedding.cols
        s.projection = Matrix(f, d, parent_dim, [inv.row(offset + i) for i in range(d)])
        offset += d

    pr = None
    if r1 is not None:
        if (r2 + r3 - r1) % 2 != 0:
            raise DomainError("r1 must have the parity of r2 + r3")
        t = (r2 + r3 - r1) // 2
        if not (0 <= t <= r2):
            raise DomainError("r1 outside the Clebsch-Gordan range")
        pr = summands[t].projection
    return summands, pr


def _det2(m):
    return m.entries[0][0] * m.entries[1][1] - m.entries[0][1] * m.entries[1][0]
