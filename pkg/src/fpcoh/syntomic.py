"""Syntomic P-cohomology of geometry packages.

A GeometryPackage bundles the Hyodo-Kato complex with Frobenius and
monodromy, the de Rham complex with its Hodge subcomplexes, the comparison
map, pairing data and point pullbacks.  The semistable complex is assembled
in quintuple coordinates (x, y, z, u, v) with differential

    ( d                      )
    (-P(Phi)  -d             )
    (-Psi          -d        )
    ( N                 -d   )
    (         N    P(q Phi) d)

which is the commutative-square fiber of the defining square after
conjugating the u, v slots by -1 (an isomorphism of complexes; the tests
check the agreement).  The good-reduction variant keeps the (x, y, z) rows.
"""

from fractions import Fraction

from .errors import DomainError, PrecisionError
from .homological import (
    ChainMap,
    CommutativeSquare,
    Complex,
    CohomologySpace,
    cohomology,
    induced_map,
    square_fiber,
    verify_complex,
)
from .linalg import (
    Matrix,
    QuotientMap,
    Subspace,
    apply_poly,
    charpoly,
    image,
    invert,
    kernel,
    preimage,
    rank,
    solve,
)
from .padic import PadicPoly
from .phin import Filtration


class PointPullback:
    """Pullback data for a closed point iota: Z -> X.

    ev holds the de Rham pullback per degree (nonzero only in degree 0 for a
    point fiber); trans[(j, n)] gives the transcendental block of the
    fp-pullback on the canonical lift of F^n H^j_dR(X), with values in
    H^(j-1)_dR(Z)/F^n coordinates.  Curve packages fill trans from Coleman
    primitives; synthetic packages supply it directly.
    """

    def __init__(self, name, fiber, ev, trans=None):
        self.name = name
        self.fiber = fiber
        self.ev = dict(ev)
        self.trans = dict(trans or {})

    def ev_map(self, degree, source_dim, target_dim):
        m = self.ev.get(degree)
        if m is None:
            return Matrix.zeros(self.fiber.field, target_dim, source_dim)
        return m


class GeometryPackage:
    def __init__(
        self,
        field,
        dimension,
        hk,
        phi,
        nmap,
        dr,
        psi,
        fil,
        pairing=None,
        dual_package=None,
        points=None,
        exact_charpoly=None,
        compact=None,
        check=True,
    ):
        self.field = field
        self.d = dimension
        self.hk = hk
        self.phi = phi
        self.nmap = nmap
        self.dr = dr
        self.psi = psi
        self.fil = dict(fil)
        self.pairing = dict(pairing or {})
        self._dual = dual_package
        self.points = list(points or [])
        self.exact_charpoly = dict(exact_charpoly or {})
        self.compact = compact
        self._cache = {}
        if check:
            bad = check_package(self)
            if bad is not None:
                raise DomainError(bad)

    @property
    def dual_package(self):
        return self._dual if self._dual is not None else self

    def fil_at(self, degree, label):
        f = self.fil.get(degree)
        if f is None:
            return Subspace.full(self.field, self.dr.dim(degree))
        return f.at(label)

    def is_split(self):
        return all(
            self.hk.diff(i).is_apparent_zero() for i in range(self.hk.lo, self.hk.hi)
        ) and all(self.dr.diff(i).is_apparent_zero() for i in range(self.dr.lo, self.dr.hi))

    # -- cohomology-level operators ---------------------------------------

    def h_hk(self, i):
        key = ("h_hk", i)
        if key not in self._cache:
            if self.hk.lo <= i <= self.hk.hi:
                self._cache[key] = cohomology(self.hk, i)
            else:
                self._cache[key] = None
        return self._cache[key]

    def h_dr(self, i):
        key = ("h_dr", i)
        if key not in self._cache:
            if self.dr.lo <= i <= self.dr.hi:
                self._cache[key] = cohomology(self.dr, i)
            else:
                self._cache[key] = None
        return self._cache[key]

    def phi_on_h(self, i):
        key = ("phi_h", i)
        if key not in self._cache:
            h = self.h_hk(i)
            if h is None or h.dim == 0:
                self._cache[key] = Matrix.zeros(self.field, 0 if h is None else h.dim, 0 if h is None else h.dim)
            else:
                self._cache[key] = induced_map(self.phi, i, source_h=h, target_h=h)
        return self._cache[key]

    def n_on_h(self, i):
        h = self.h_hk(i)
        if h is None or h.dim == 0:
            return Matrix.zeros(self.field, 0 if h is None else h.dim, 0 if h is None else h.dim)
        return induced_map(self.nmap, i, source_h=h, target_h=h)

    def psi_on_h(self, i):
        key = ("psi_h", i)
        if key not in self._cache:
            hs = self.h_hk(i)
            ht = self.h_dr(i)
            if hs is None or ht is None:
                self._cache[key] = None
            else:
                self._cache[key] = induced_map(self.psi, i, source_h=hs, target_h=ht)
        return self._cache[key]

    def hodge_sub(self, i, n):
        """F^n H^i_dR: kernel of H^i(dr) -> H^i(dr / F^n), in class coords."""
        key = ("hodge", i, n)
        if key not in self._cache:
            h = self.h_dr(i)
            if h is None:
                self._cache[key] = None
            else:
                quot, proj, _ = dr_quotient(self, n)
                if quot.lo <= i <= quot.hi and quot.dim(i) > 0:
                    hq = cohomology(quot, i)
                    m = induced_map(proj, i, source_h=h, target_h=hq)
                    self._cache[key] = kernel(m)
                else:
                    self._cache[key] = Subspace.full(self.field, h.dim)
        return self._cache[key]

    def frobenius_charpoly_fractions(self, i):
        """Exact rational charpoly of Phi on H^i_HK (ascending)."""
        if i in self.exact_charpoly:
            return [Fraction(c) for c in self.exact_charpoly[i]]
        m = self.phi_on_h(i)
        cp = charpoly(m)
        out = []
        for k in range(cp.degree() + 1):
            c = cp.coeff(k)
            out.append(Fraction(0) if c.is_apparent_zero() else c.rational_reconstruct())
        return out


def check_package(g):
    """None when the package data is consistent, else a violation string."""
    bad = verify_complex(g.hk)
    if bad is not None:
        return "hk differential fails d*d = 0 at degree %d" % bad[0]
    bad = verify_complex(g.dr)
    if bad is not None:
        return "dr differential fails d*d = 0 at degree %d" % bad[0]
    for cm, name in ((g.phi, "Phi"), (g.nmap, "N"), (g.psi, "Psi_HK")):
        if cm.violation() is not None:
            return "%s is not a chain map" % name
    p = g.field.from_int(g.field.p)
    for i in g.hk.degrees():
        lhs = (g.phi.component(i) * g.nmap.component(i)).scale(p)
        rhs = g.nmap.component(i) * g.phi.component(i)
        if not (lhs - rhs).is_apparent_zero():
            return "operator relation p Phi N = N Phi fails in degree %d" % i
    # each F^n must be a subcomplex
    for i, filt in g.fil.items():
        for label, sub in filt.jumps:
            if i < g.dr.hi:
                img_cols = [g.dr.diff(i).apply(sub.basis.column(j)) for j in range(sub.dim())]
                nxt = g.fil.get(i + 1)
                target = nxt.at(label) if nxt is not None else Subspace.full(
                    g.field, g.dr.dim(i + 1)
                )
                for col in img_cols:
                    if not target.contains(col):
                        return "F^%s is not a subcomplex at degree %d" % (label, i)
    # Psi is a quasi-isomorphism
    for i in g.hk.degrees():
        hs = g.h_hk(i)
        ht = g.h_dr(i)
        sdim = hs.dim if hs else 0
        tdim = ht.dim if ht else 0
        if sdim != tdim:
            return "Psi_HK cannot be a quasi-isomorphism (H^%d dims %d vs %d)" % (
                i,
                sdim,
                tdim,
            )
        if sdim and rank(g.psi_on_h(i)) != sdim:
            return "Psi_HK is not a quasi-isomorphism in degree %d" % i
    return None


def dr_quotient(g, n):
    """(quotient complex dr/F^n, projection chain map).  Cached per twist."""
    key = ("drq", n)
    if key in g._cache:
        return g._cache[key]
    fld = g.field
    quots = {}
    dims = {}
    for i in g.dr.degrees():
        sub = g.fil_at(i, n)
        quots[i] = QuotientMap(fld, g.dr.dim(i), sub)
        dims[i] = quots[i].dim()
    diffs = {}
    for i in range(g.dr.lo, g.dr.hi):
        diffs[i] = quots[i + 1].section_matrix * g.dr.diff(i) * quots[i].lift_matrix
    q = Complex(fld, g.dr.lo, g.dr.hi, dims, diffs)
    proj = ChainMap(g.dr, q, {i: quots[i].section_matrix for i in g.dr.degrees()}, check=False)
    g._cache[key] = (q, proj, quots)
    return g._cache[key]


class SyntomicComplex:
    """The built complex plus slot layout and construction handles."""

    def __init__(self, g, poly, twist, variant, complex_, layout, quots):
        self.package = g
        self.poly = poly
        self.twist = twist
        self.variant = variant
        self.complex = complex_
        self.layout = layout  # degree -> list of (name, source_degree, size)
        self.quots = quots
        self._h = {}

    def h(self, i):
        if i not in self._h:
            self._h[i] = cohomology(self.complex, i)
        return self._h[i]

    def slot_ranges(self, i):
        out = {}
        offset = 0
        for name, deg, size in self.layout[i]:
            out[name] = (offset, offset + size, deg)
            offset += size
        return out

    def split_cochain(self, i, vec):
        out = {}
        for name, (a, b, deg) in self.slot_ranges(i).items():
            out[name] = vec[a:b]
        return out

    def assemble_cochain(self, i, parts):
        fld = self.package.field
        vec = []
        for name, deg, size in self.layout[i]:
            part = parts.get(name)
            if part is None:
                part = [fld.zero()] * size
            if len(part) != size:
                raise DomainError("slot %s expects length %d" % (name, size))
            vec.extend(part)
        return vec


def _operator_chain_map(g, poly, scale_phi=None):
    """P(c * Phi) as a chain map hk -> hk (c = scale, default 1)."""
    fld = g.field
    comps = {}
    for i in g.hk.degrees():
        phi_i = g.phi.component(i)
        if scale_phi is not None:
            phi_i = phi_i.scale(scale_phi)
        comps[i] = apply_poly(poly, phi_i)
    return ChainMap(g.hk, g.hk, comps, check=False)


def build_syntomic(g, poly, twist, variant="good"):
    """The syntomic P-complex of a package.

    variant "semistable": quintuple square fiber (requires the monodromy);
    variant "good": the cone of (P(Phi), Psi) with slots (x, y, z).
    """
    if not poly.constant_term().same(g.field.one()):
        raise DomainError("P must have constant term 1")
    if variant not in ("good", "semistable"):
        raise DomainError("unknown variant %r" % (variant,))
    fld = g.field
    quot, proj, quots = dr_quotient(g, twist)
    p_phi = _operator_chain_map(g, poly)
    pq_phi = _operator_chain_map(g, poly, scale_phi=fld.from_int(fld.q))

    lo = min(g.hk.lo, g.dr.lo)
    hi = max(g.hk.hi, g.dr.hi) + 2
    dims = {}
    layout = {}
    diffs = {}

    def hk_dim(i):
        return g.hk.dim(i)

    def q_dim(i):
        return quot.dim(i) if quot.lo <= i <= quot.hi else 0

    if variant == "good":
        for i in range(lo, hi + 1):
            layout[i] = [("x", i, hk_dim(i)), ("y", i - 1, hk_dim(i - 1)), ("z", i - 1, q_dim(i - 1))]
            dims[i] = sum(s[2] for s in layout[i])
        for i in range(lo, hi):
            blocks = [
                [g.hk.diff(i), None, None],
                [p_phi.component(i).scale(fld.from_int(-1)), g.hk.diff(i - 1).scale(fld.from_int(-1)), None],
                [
                    (proj.component(i) * g.psi.component(i)).scale(fld.from_int(-1)),
                    None,
                    _qdiff(quot, i - 1).scale(fld.from_int(-1)),
                ],
            ]
            diffs[i] = _blocks(fld, blocks,
                               [hk_dim(i + 1), hk_dim(i), q_dim(i)],
                               [hk_dim(i), hk_dim(i - 1), q_dim(i - 1)])
    else:
        if g.nmap is None:
            raise DomainError("semistable variant needs the monodromy map")
        for i in range(lo, hi + 1):
            layout[i] = [
                ("x", i, hk_dim(i)),
                ("y", i - 1, hk_dim(i - 1)),
                ("z", i - 1, q_dim(i - 1)),
                ("u", i - 1, hk_dim(i - 1)),
                ("v", i - 2, hk_dim(i - 2)),
            ]
            dims[i] = sum(s[2] for s in layout[i])
        for i in range(lo, hi):
            neg = fld.from_int(-1)
            blocks = [
                [g.hk.diff(i), None, None, None, None],
                [p_phi.component(i).scale(neg), g.hk.diff(i - 1).scale(neg), None, None, None],
                [
                    (proj.component(i) * g.psi.component(i)).scale(neg),
                    None,
                    _qdiff(quot, i - 1).scale(neg),
                    None,
                    None,
                ],
                [g.nmap.component(i), None, None, g.hk.diff(i - 1).scale(neg), None],
                [None, g.nmap.component(i - 1), None, pq_phi.component(i - 1), g.hk.diff(i - 2)],
            ]
            diffs[i] = _blocks(
                fld,
                blocks,
                [hk_dim(i + 1), hk_dim(i), q_dim(i), hk_dim(i), hk_dim(i - 1)],
                [hk_dim(i), hk_dim(i - 1), q_dim(i - 1), hk_dim(i - 1), hk_dim(i - 2)],
            )
    cx = Complex(fld, lo, hi, dims, diffs)
    bad = verify_complex(cx)
    if bad is not None:
        raise DomainError("syntomic differential fails d*d = 0 at degree %d" % bad[0])
    return SyntomicComplex(g, poly, twist, variant, cx, layout, quots)


def _qdiff(quot, i):
    if quot.lo <= i < quot.hi:
        return quot.diff(i)
    rows = quot.dim(i + 1) if quot.lo <= i + 1 <= quot.hi else 0
    cols = quot.dim(i) if quot.lo <= i <= quot.hi else 0
    return Matrix.zeros(quot.field, rows, cols)


def _blocks(fld, grid, row_heights, col_widths):
    total = Matrix.zeros(fld, sum(row_heights), sum(col_widths))
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


def semistable_square(g, poly, twist):
    """The defining commutative square (used to cross-check the quintuple
    assembly against the nested-cone construction)."""
    fld = g.field
    quot, proj, _ = dr_quotient(g, twist)
    p_phi = _operator_chain_map(g, poly)
    pq_phi = _operator_chain_map(g, poly, scale_phi=fld.from_int(fld.q))
    # B = hk (+) quot as a direct-sum complex
    lo = min(g.hk.lo, quot.lo)
    hi = max(g.hk.hi, quot.hi)
    dims = {i: g.hk.dim(i) + (quot.dim(i) if quot.lo <= i <= quot.hi else 0) for i in range(lo, hi + 1)}
    diffs = {}
    for i in range(lo, hi):
        diffs[i] = _blocks(
            fld,
            [[g.hk.diff(i), None], [None, _qdiff(quot, i)]],
            [g.hk.dim(i + 1), quot.dim(i + 1) if quot.lo <= i + 1 <= quot.hi else 0],
            [g.hk.dim(i), quot.dim(i) if quot.lo <= i <= quot.hi else 0],
        )
    b_complex = Complex(fld, lo, hi, dims, diffs)
    alpha = ChainMap(
        g.hk,
        b_complex,
        {
            i: _blocks(
                fld,
                [[p_phi.component(i)], [proj.component(i) * g.psi.component(i)]],
                [g.hk.dim(i), quot.dim(i) if quot.lo <= i <= quot.hi else 0],
                [g.hk.dim(i)],
            )
            for i in g.hk.degrees()
        },
    )
    gvert = ChainMap(
        b_complex,
        g.hk,
        {
            i: _blocks(
                fld,
                [[g.nmap.component(i), None]],
                [g.hk.dim(i)],
                [g.hk.dim(i), quot.dim(i) if quot.lo <= i <= quot.hi else 0],
            )
            for i in b_complex.degrees()
        },
    )
    return CommutativeSquare(alpha, pq_phi, g.nmap, gvert)


def quintuple_violations(syn, i, vec):
    """The five cocycle conditions on a degree-i quintuple; returns a list of
    names of failing conditions (empty for a cocycle)."""
    g = syn.package
    parts = syn.split_cochain(i, vec)
    fld = g.field
    p_phi = apply_poly(syn.poly, g.phi.component(i))
    pq_phi = apply_poly(
        syn.poly, g.phi.component(i - 1).scale(fld.from_int(fld.q))
    )
    out = []

    def is_zero(v):
        return all(e.is_apparent_zero() for e in v)

    def add(u, w):
        return [a + b for a, b in zip(u, w)]

    x, y, z = parts["x"], parts["y"], parts["z"]
    if not is_zero(g.hk.diff(i).apply(x)):
        out.append("d_HK x = 0")
    if not is_zero(add(p_phi.apply(x), g.hk.diff(i - 1).apply(y))):
        out.append("P(Phi) x + d_HK y = 0")
    # Psi x + d z in F^n: in the quotient complex the combination vanishes
    quot = syn.quots
    psi_x = g.psi.component(i).apply(x)
    zbar_diff = _qdiff_apply(syn, i - 1, z)
    proj_psi = quot[i].section(psi_x) if i in quot else []
    if not is_zero(add(proj_psi, zbar_diff)):
        out.append("Psi x + d_dR z in F^n")
    if syn.variant == "semistable":
        u, v = parts["u"], parts["v"]
        nx = g.nmap.component(i).apply(x)
        if not is_zero([a - b for a, b in zip(nx, g.hk.diff(i - 1).apply(u))]):
            out.append("N x - d_HK u = 0")
        ny = g.nmap.component(i - 1).apply(y)
        term = add(add(ny, pq_phi.apply(u)), g.hk.diff(i - 2).apply(v))
        if not is_zero(term):
            out.append("N y + P(q Phi) u + d_HK v = 0")
    return out


def _qdiff_apply(syn, i, z):
    g = syn.package
    quot_complex = dr_quotient(g, syn.twist)[0]
    m = _qdiff(quot_complex, i)
    target = quot_complex.dim(i + 1) if quot_complex.lo <= i + 1 <= quot_complex.hi else 0
    if m.cols != len(z):
        return [g.field.zero()] * target
    return m.apply(z)


# ---------------------------------------------------------------------------
# Diagram pieces, SES, filtration


class DiagramPieces:
    def __init__(self, ker_alpha, coker_quot, b_space, beta, gamma, h_syn, hc, hd):
        self.ker_alpha = ker_alpha      # Subspace of H^i(C)
        self.coker_quot = coker_quot    # QuotientMap of H^(i-1)(D) by image(alpha)
        self.b_space = b_space          # Subspace of ker_alpha (= image of gamma on F^1)
        self.beta = beta                # Matrix: H^(i-1)(D) class coords -> H^i_syn
        self.gamma = gamma              # Matrix: H^i_syn -> H^i(C) class coords
        self.h_syn = h_syn
        self.hc = hc
        self.hd = hd


def pq_fiber(g, poly):
    """D-bullet: the fiber of P(q Phi) with slots (u, v) and differential
    (u, v) |-> (-d u, P(q Phi) u + d v), matching the embedded (u, v) rows of
    the quintuple complex."""
    fld = g.field
    pq_phi = _operator_chain_map(g, poly, scale_phi=fld.from_int(fld.q))
    lo, hi = g.hk.lo, g.hk.hi + 2
    dims = {}
    layout = {}
    for i in range(lo, hi + 1):
        layout[i] = [("u", i, g.hk.dim(i)), ("v", i - 1, g.hk.dim(i - 1))]
        dims[i] = g.hk.dim(i) + g.hk.dim(i - 1)
    neg = fld.from_int(-1)
    diffs = {}
    for i in range(lo, hi):
        diffs[i] = _blocks(
            fld,
            [
                [g.hk.diff(i).scale(neg), None],
                [pq_phi.component(i), g.hk.diff(i - 1)],
            ],
            [g.hk.dim(i + 1), g.hk.dim(i)],
            [g.hk.dim(i), g.hk.dim(i - 1)],
        )
    return Complex(fld, lo, hi, dims, diffs), layout


def diagram_pieces(g, poly, twist, i, syn=None):
    """ker alpha, coker alpha, B^i and the maps beta, gamma of the exact
    diagram around H^i_syn (semistable variant)."""
    fld = g.field
    syn = syn or build_syntomic(g, poly, twist, "semistable")
    good = build_syntomic(g, poly, twist, "good")
    dfib, _ = pq_fiber(g, poly)

    hc_i = cohomology(good.complex, i)
    hd_i = cohomology(dfib, i)
    hd_prev = cohomology(dfib, i - 1)
    h_syn = syn.h(i)

    # alpha: (x, y, z) -> (N x, N y) in the (u, v) slots
    def alpha_matrix(degree, source_h, target_h):
        cols = []
        for cls in source_h.basis_classes():
            vec = source_h.lift(cls)
            parts = good.split_cochain(degree, vec)
            nx = g.nmap.component(degree).apply(parts["x"])
            ny = g.nmap.component(degree - 1).apply(parts["y"])
            cols.append(target_h.section(nx + ny))
        return Matrix.from_columns(fld, target_h.dim, cols)

    alpha_i = alpha_matrix(i, hc_i, hd_i)
    alpha_prev = alpha_matrix(i - 1, cohomology(good.complex, i - 1), hd_prev)

    ker_alpha = kernel(alpha_i)
    coker_quot = QuotientMap(fld, hd_prev.dim, image(alpha_prev))

    # beta: embed a (u, v) cocycle of D in degree i-1 into syn degree i
    beta_cols = []
    for cls in hd_prev.basis_classes():
        w = hd_prev.lift(cls)
        udim = g.hk.dim(i - 1)
        parts = {"u": w[:udim], "v": w[udim:]}
        vec = syn.assemble_cochain(i, parts)
        beta_cols.append(h_syn.section(vec))
    beta = Matrix.from_columns(fld, h_syn.dim, beta_cols)

    # gamma: project a quintuple onto its (x, y, z) part
    gamma_cols = []
    for cls in h_syn.basis_classes():
        vec = h_syn.lift(cls)
        parts = syn.split_cochain(i, vec)
        good_vec = parts["x"] + parts["y"] + parts["z"]
        gamma_cols.append(hc_i.section(good_vec))
    gamma = Matrix.from_columns(fld, hc_i.dim, gamma_cols)

    # B^i inside ker(alpha): kernel of the x-part map to H^i(hk)
    h_hk_i = g.h_hk(i)
    bx_cols = []
    for j in range(ker_alpha.dim()):
        coords = ker_alpha.basis.column(j)
        vec = hc_i.lift(coords)
        parts = good.split_cochain(i, vec)
        bx_cols.append(h_hk_i.section(parts["x"]) if h_hk_i else [])
    bx = Matrix.from_columns(fld, h_hk_i.dim if h_hk_i else 0, bx_cols)
    b_in_ker = kernel(bx)
    cols = [ker_alpha.basis.apply(b_in_ker.basis.column(j)) for j in range(b_in_ker.dim())]
    b_space = Subspace.span(fld, hc_i.dim, cols)

    return DiagramPieces(ker_alpha, coker_quot, b_space, beta, gamma, h_syn, hc_i, hd_prev)


def three_step_filtration(g, poly, twist, i, syn=None):
    """F^0 >= F^1 >= F^2 >= F^3 = 0 on H^i_syn (semistable variant)."""
    syn = syn or build_syntomic(g, poly, twist, "semistable")
    pieces = diagram_pieces(g, poly, twist, i, syn=syn)
    fld = g.field
    h_syn = pieces.h_syn
    f0 = Subspace.full(fld, h_syn.dim)
    # F^1 = gamma^(-1)(B^i)
    f1 = preimage(pieces.gamma, pieces.b_space)
    # F^2 = beta(image of H^(i-2)_HK / (im N + im P(q Phi)) -> H^(i-1)(D))
    h_prev2 = g.h_hk(i - 2)
    cols = []
    if h_prev2 is not None and h_prev2.dim:
        dfib, _ = pq_fiber(g, poly)
        hd_prev = cohomology(dfib, i - 1)
        for cls in h_prev2.basis_classes():
            w = h_prev2.lift(cls)
            vec = [fld.zero()] * g.hk.dim(i - 1) + list(w)
            cols.append(pieces.beta.apply(hd_prev.section(vec)))
    f2 = Subspace.span(fld, h_syn.dim, cols)
    f3 = Subspace.zero(fld, h_syn.dim)
    if not f1.contains_subspace(f2):
        raise DomainError("three-step filtration is not nested")
    return [f0, f1, f2, f3]


class SynSES:
    """The fundamental short exact sequence of the good-reduction complex:

        0 -> H^(i-1)_dR / F^n --i_fp--> H^i_syn --pr_fp--> F^n H^i_dR -> 0

    with i_fp normalized through P(Phi) so the source is untwisted, plus a
    deterministic splitting sigma of pr_fp.
    """

    def __init__(self, g, syn, degree):
        if syn.variant != "good":
            raise DomainError("SES maps require the good-reduction variant")
        self.package = g
        self.syn = syn
        self.degree = degree
        fld = g.field
        i = degree
        n = syn.twist
        h_syn = syn.h(i)
        self.h_syn = h_syn

        h_dr_prev = g.h_dr(i - 1)
        prev_dim = h_dr_prev.dim if h_dr_prev else 0
        fil_prev = g.hodge_sub(i - 1, n) if h_dr_prev else Subspace.zero(fld, 0)
        self.source_quot = QuotientMap(fld, prev_dim, fil_prev)

        h_dr_i = g.h_dr(i)
        self.target_sub = g.hodge_sub(i, n) if h_dr_i else Subspace.zero(fld, 0)

        # P(Phi) on H^(i-1)_HK must be invertible for the untwisted source
        h_hk_prev = g.h_hk(i - 1)
        if h_hk_prev and h_hk_prev.dim:
            p_prev = apply_poly(syn.poly, g.phi_on_h(i - 1))
            if rank(p_prev) < h_hk_prev.dim:
                raise DomainError(
                    "P(Phi) is not invertible on H^%d_HK; cannot normalize i_fp" % (i - 1)
                )
            self._p_prev = p_prev
            self._psi_prev = g.psi_on_h(i - 1)
            self._psi_prev_inv = invert(self._psi_prev)
        else:
            self._p_prev = None

        # i_fp columns
        cols = []
        for k in range(self.source_quot.dim()):
            coords = [fld.one() if t == k else fld.zero() for t in range(self.source_quot.dim())]
            w = self.source_quot.lift(coords)  # class coords in H^(i-1)_dR
            cols.append(h_syn.section(self._ifp_cochain(w)))
        self.i_fp = Matrix.from_columns(fld, h_syn.dim, cols)

        # pr_fp rows: class -> coordinates of Psi(x-part) in the F^n basis
        cols = []
        for cls in h_syn.basis_classes():
            cols.append(self._pr_value(h_syn.lift(cls)))
        self.pr_fp = Matrix.from_columns(fld, self.target_sub.dim(), cols)

        # deterministic splitting sigma: pr_fp o sigma = id
        sig_cols = []
        for k in range(self.target_sub.dim()):
            rhs = [fld.one() if t == k else fld.zero() for t in range(self.target_sub.dim())]
            x = solve(self.pr_fp, rhs)
            if x is None:
                raise DomainError("pr_fp is not surjective")
            sig_cols.append(x)
        self.sigma = Matrix.from_columns(fld, h_syn.dim, sig_cols)

    def _ifp_cochain(self, w_class_coords):
        """Cocycle (0, P(Phi) psi^(-1) w, 0) representing i_fp(w)."""
        g = self.package
        fld = g.field
        i = self.degree
        h_dr_prev = g.h_dr(i - 1)
        if self._p_prev is None:
            return self.syn.assemble_cochain(i, {})
        hk_class = self._p_prev.apply(self._psi_prev_inv.apply(w_class_coords))
        h_hk_prev = g.h_hk(i - 1)
        y = h_hk_prev.lift(hk_class)
        return self.syn.assemble_cochain(i, {"y": y})

    def _pr_value(self, vec):
        g = self.package
        i = self.degree
        parts = self.syn.split_cochain(i, vec)
        x = parts["x"]
        h_dr_i = g.h_dr(i)
        if h_dr_i is None or self.target_sub.dim() == 0:
            return []
        psi_x = g.psi.component(i).apply(x)
        cls = h_dr_i.section(psi_x)
        coords = self.target_sub.coordinates(cls)
        if coords is None:
            raise DomainError("pr_fp image escapes F^n H^i_dR")
        return coords

    # -- block decomposition of a class ------------------------------------

    def decompose(self, cls):
        """cls = i_fp(x) + sigma(pr) with x in H^(i-1)_dR/F^n coordinates."""
        fld = self.package.field
        pr = self.pr_fp.apply(cls)
        rest = [a - b for a, b in zip(cls, self.sigma.apply(pr))]
        if self.i_fp.cols == 0:
            return [], pr
        x = solve(self.i_fp, rest)
        if x is None:
            raise DomainError("class does not decompose through i_fp")
        return x, pr

    def lift_of_dr_class(self, target_coords):
        """sigma applied to F^n H^i_dR coordinates: the canonical lift."""
        return self.sigma.apply(target_coords)

    def certify(self):
        comp = self.pr_fp * self.i_fp
        if not comp.is_apparent_zero():
            return "pr_fp o i_fp != 0"
        if rank(self.i_fp) != self.source_quot.dim():
            return "i_fp is not injective"
        if self.i_fp.cols + self.target_sub.dim() != self.h_syn.dim:
            return "SES dimension count fails"
        return None


def ses_maps(g, poly, twist, i):
    syn = build_syntomic(g, poly, twist, "good")
    ses = SynSES(g, syn, i)
    bad = ses.certify()
    if bad is not None:
        raise PrecisionError("SES certification failed: %s" % bad)
    return ses


def change_poly_map(g, poly_p, poly_q, twist, variant="good"):
    """Natural morphism syn_P -> syn_PQ: identity on x, z (and u), Q(Phi) on
    y and Q(q Phi) on v."""
    fld = g.field
    syn_p = build_syntomic(g, poly_p, twist, variant)
    syn_pq = build_syntomic(g, poly_p * poly_q, twist, variant)
    q_phi = _operator_chain_map(g, poly_q)
    qq_phi = _operator_chain_map(g, poly_q, scale_phi=fld.from_int(fld.q))
    comps = {}
    for i in syn_p.complex.degrees():
        def eye(nn):
            return Matrix.identity(fld, nn)

        hk_i = g.hk.dim(i)
        hk_prev = g.hk.dim(i - 1)
        qdim = dict(syn_p.slot_ranges(i)).get("z", (0, 0, 0))
        zsize = qdim[1] - qdim[0]
        if variant == "good":
            blocks = [
                [eye(hk_i), None, None],
                [None, q_phi.component(i - 1), None],
                [None, None, eye(zsize)],
            ]
            heights = [hk_i, hk_prev, zsize]
        else:
            hk_prev2 = g.hk.dim(i - 2)
            blocks = [
                [eye(hk_i), None, None, None, None],
                [None, q_phi.component(i - 1), None, None, None],
                [None, None, eye(zsize), None, None],
                [None, None, None, eye(hk_prev), None],
                [None, None, None, None, qq_phi.component(i - 2)],
            ]
            heights = [hk_i, hk_prev, zsize, hk_prev, hk_prev2]
        comps[i] = _blocks(fld, blocks, heights, heights)
    return ChainMap(syn_p.complex, syn_pq.complex, comps), syn_p, syn_pq


# ---------------------------------------------------------------------------
# Polynomial combinatorics shared with the cup product


def poly_to_fractions(poly):
    out = []
    for i in range(poly.degree() + 1):
        c = poly.coeff(i)
        out.append(Fraction(0) if c.is_apparent_zero() else c.rational_reconstruct())
    return out


def star_product(poly_p, poly_q):
    """P*Q with inverse roots alpha_i beta_j, computed through companion
    matrices (equivalently a resultant)."""
    fld = poly_p.field
    pa = poly_to_fractions(poly_p)
    qa = poly_to_fractions(poly_q)
    na, nb = len(pa) - 1, len(qa) - 1
    if na == 0 or nb == 0:
        # empty products: P*Q = 1
        return PadicPoly.from_fractions(fld, [1])
    # T^n P(1/T) is monic (constant term 1) with roots the inverse roots of P
    a_asc = list(reversed(pa))
    b_asc = list(reversed(qa))
    ca = _companion(a_asc)
    cb = _companion(b_asc)
    kron = [
        [ca[i][j] * cb[k][l] for j in range(na) for l in range(nb)]
        for i in range(na)
        for k in range(nb)
    ]
    from .linalg import berkowitz

    cp = berkowitz(kron, Fraction(1), Fraction(0))  # leading first
    asc = list(reversed(cp))  # monic with roots alpha_i beta_j
    if asc[0] == 0:
        raise DomainError("P*Q would acquire a zero inverse root")
    # reversing a monic polynomial gives constant term 1
    return PadicPoly.from_fractions(fld, list(reversed(asc)))


def _companion(asc_monic):
    """Companion matrix of a monic polynomial given ascending coefficients."""
    n = len(asc_monic) - 1
    rows = [[Fraction(0)] * n for _ in range(n)]
    for i in range(1, n):
        rows[i][i - 1] = Fraction(1)
    for i in range(n):
        rows[i][n - 1] = -asc_monic[i]
    return rows


def star_decomposition(poly_p, poly_q):
    """e, f in Q[x, y] with P*Q(xy) = e(x, y) P(x) + f(x, y) Q(y), as
    coefficient grids e[i][j] of x^i y^j."""
    pa = poly_to_fractions(poly_p)
    qa = poly_to_fractions(poly_q)
    pq = poly_to_fractions(star_product(poly_p, poly_q))
    # P*Q(xy) as a grid in (x, y): coefficient of x^k y^k is pq[k]
    deg = len(pq) - 1
    grid = {}
    for k, c in enumerate(pq):
        if c:
            grid[(k, k)] = c
    e_grid, rem = _bivar_div_x(grid, pa)
    f_grid, rem2 = _bivar_div_y(rem, qa)
    if rem2:
        raise DomainError("ideal membership division left a remainder")
    return e_grid, f_grid


def _bivar_div_x(grid, pa):
    """Divide a {(i, j): c} grid by P(x) (ascending pa), exact in x-degree."""
    n = len(pa) - 1
    lead = pa[n]
    work = dict(grid)
    q = {}
    while True:
        deg_x = max((i for (i, j) in work), default=-1)
        if deg_x < n:
            break
        for (i, j), c in sorted(work.items(), key=lambda t: -t[0][0]):
            if i == deg_x and c:
                f = c / lead
                q[(i - n, j)] = q.get((i - n, j), Fraction(0)) + f
                for k, pc in enumerate(pa):
                    key = (i - n + k, j)
                    work[key] = work.get(key, Fraction(0)) - f * pc
                    if work[key] == 0:
                        del work[key]
        # cleanup any zero entries at deg_x
        for key in [k for k, v in work.items() if v == 0]:
            del work[key]
    return q, {k: v for k, v in work.items() if v != 0}


def _bivar_div_y(grid, qa):
    n = len(qa) - 1
    lead = qa[n]
    work = dict(grid)
    q = {}
    while True:
        deg_y = max((j for (i, j) in work), default=-1)
        if deg_y < n:
            break
        for (i, j), c in sorted(work.items(), key=lambda t: -t[0][1]):
            if j == deg_y and c:
                f = c / lead
                q[(i, j - n)] = q.get((i, j - n), Fraction(0)) + f
                for k, qc in enumerate(qa):
                    key = (i, j - n + k)
                    work[key] = work.get(key, Fraction(0)) - f * qc
                    if work[key] == 0:
                        del work[key]
        for key in [k for k, v in work.items() if v == 0]:
            del work[key]
    return q, {k: v for k, v in work.items() if v != 0}


# ---------------------------------------------------------------------------
# Package constructors


def split_package(
    field,
    dimension,
    h_dims,
    phi_mats,
    n_mats=None,
    psi_mats=None,
    fil_jumps=None,
    pairing=None,
    dual_package=None,
    points=None,
    exact_charpoly=None,
    check=True,
):
    """Package whose hk and dr complexes are the cohomology itself (zero
    differentials).  h_dims: {degree: dim}; phi/n/psi matrices per degree;
    fil_jumps: {degree: [(label, Subspace)]}."""
    degrees = sorted(h_dims)
    lo, hi = degrees[0], degrees[-1]
    dims = {i: h_dims.get(i, 0) for i in range(lo, hi + 1)}
    hk = Complex(field, lo, hi, dims, {})
    dr = Complex(field, lo, hi, dict(dims), {})
    phi = ChainMap(hk, hk, {i: phi_mats[i] for i in phi_mats}, check=False)
    nm = ChainMap(hk, hk, dict(n_mats or {}), check=False)
    psi_c = {i: (psi_mats or {}).get(i, Matrix.identity(field, dims[i])) for i in range(lo, hi + 1)}
    psi = ChainMap(hk, dr, psi_c, check=False)
    fil = {}
    for i in range(lo, hi + 1):
        jumps = (fil_jumps or {}).get(i)
        if jumps is None:
            fil[i] = Filtration.trivial(field, dims[i], cutoff=1)
        else:
            fil[i] = jumps if isinstance(jumps, Filtration) else Filtration(field, dims[i], jumps)
    return GeometryPackage(
        field,
        dimension,
        hk,
        phi,
        nm,
        dr,
        psi,
        fil,
        pairing=pairing,
        dual_package=dual_package,
        points=points,
        exact_charpoly=exact_charpoly,
        check=check,
    )


def point_package(field, phi_scalar=None, rank_e=1, phi_mat=None, fil_cutoff=1, pairing=None):
    """The package of a point (d = 0): H^0 only, N = 0, Psi = id."""
    if phi_mat is None:
        phi_mat = Matrix.identity(field, rank_e)
        if phi_scalar is not None:
            phi_mat = phi_mat.scale(field.from_fraction(Fraction(phi_scalar)))
    n = phi_mat.rows
    if pairing is None:
        pairing = {0: Matrix.identity(field, n)}
    fil = {0: Filtration.trivial(field, n, cutoff=fil_cutoff)}
    return split_package(
        field,
        0,
        {0: n},
        {0: phi_mat},
        fil_jumps=fil,
        pairing=pairing,
    )


class KunnethLayout:
    """Index bookkeeping for H^N(A (x) B) = (+)_{a+b=N} H^a (x) H^b."""

    def __init__(self, ga, gb):
        self.ga = ga
        self.gb = gb
        self.blocks = {}
        lo = ga.hk.lo + gb.hk.lo
        hi = ga.hk.hi + gb.hk.hi
        self.lo, self.hi = lo, hi
        for total in range(lo, hi + 1):
            blocks = []
            offset = 0
            for a in range(ga.hk.lo, ga.hk.hi + 1):
                b = total - a
                if gb.hk.lo <= b <= gb.hk.hi:
                    size = ga.hk.dim(a) * gb.hk.dim(b)
                    if size:
                        blocks.append((a, b, offset, size))
                        offset += size
            self.blocks[total] = (blocks, offset)

    def dim(self, total):
        return self.blocks.get(total, ([], 0))[1]

    def place(self, field, total, a, vec_a, vec_b):
        """kron(vec_a, vec_b) embedded in the degree-total coordinate block."""
        out = [field.zero()] * self.dim(total)
        for aa, bb, offset, size in self.blocks.get(total, ([], 0))[0]:
            if aa == a:
                k = 0
                for xa in vec_a:
                    for xb in vec_b:
                        out[offset + k] = xa * xb
                        k += 1
                return out
        if all(x.is_exact_zero() for x in vec_a) or all(x.is_exact_zero() for x in vec_b):
            return out
        raise DomainError("Kunneth block (%d, %d) absent in degree %d" % (a, total - a, total))


def tensor_package(ga, gb, pairing=None, dual_package=None, check=True):
    """Tensor of two split packages with Kunneth grading, Kronecker
    operators and convolution filtration."""
    if not (ga.is_split() and gb.is_split()):
        raise DomainError("tensor_package needs split packages")
    fld = ga.field
    layout = KunnethLayout(ga, gb)
    h_dims = {i: layout.dim(i) for i in range(layout.lo, layout.hi + 1)}
    phi_mats = {}
    n_mats = {}
    psi_mats = {}
    fil = {}
    for total in range(layout.lo, layout.hi + 1):
        blocks, size = layout.blocks[total]
        phi = Matrix.zeros(fld, size, size)
        nm = Matrix.zeros(fld, size, size)
        psi = Matrix.zeros(fld, size, size)
        for a, b, offset, blocksize in blocks:
            pa = ga.phi.component(a)
            pb = gb.phi.component(b)
            _paste(phi, Matrix.kron(pa, pb), offset, offset)
            na = ga.nmap.component(a)
            nb = gb.nmap.component(b)
            ia = Matrix.identity(fld, ga.hk.dim(a))
            ib = Matrix.identity(fld, gb.hk.dim(b))
            _paste(nm, Matrix.kron(na, ib) + Matrix.kron(ia, nb), offset, offset)
            _paste(psi, Matrix.kron(ga.psi.component(a), gb.psi.component(b)), offset, offset)
        phi_mats[total] = phi
        n_mats[total] = nm
        psi_mats[total] = psi
        fil[total] = _kunneth_filtration(fld, layout, total)
    return (
        split_package(
            fld,
            ga.d + gb.d,
            h_dims,
            phi_mats,
            n_mats,
            psi_mats,
            fil,
            pairing=pairing,
            dual_package=dual_package,
            check=check,
        ),
        layout,
    )


def _paste(m, block, r0, c0):
    for i in range(block.rows):
        for j in range(block.cols):
            m.entries[r0 + i][c0 + j] = block.entries[i][j]


def _kunneth_filtration(fld, layout, total):
    blocks, size = layout.blocks[total]
    ga, gb = layout.ga, layout.gb
    labels = set()
    for a, b, offset, _ in blocks:
        fa = ga.fil.get(a)
        fb = gb.fil.get(b)
        la = ([fa.min_label() - 1] + fa.labels()) if fa else [0]
        lb = ([fb.min_label() - 1] + fb.labels()) if fb else [0]
        for x in la:
            for y in lb:
                labels.add(x + y)
    if not labels:
        return Filtration.trivial(fld, size, cutoff=1)
    lo, hi = min(labels) , max(labels)
    jumps = []
    prev_dim = None
    for n in range(lo, hi + 2):
        cols = []
        for a, b, offset, blocksize in blocks:
            fa = ga.fil.get(a) or Filtration.trivial(fld, ga.hk.dim(a), cutoff=1)
            fb = gb.fil.get(b) or Filtration.trivial(fld, gb.hk.dim(b), cutoff=1)
            steps = [fa.min_label() - 1] + fa.labels()
            for ia in steps:
                sa = fa.at(ia)
                sb = fb.at(n - ia)
                if sa.dim() == 0 or sb.dim() == 0:
                    continue
                for i in range(sa.dim()):
                    va = sa.basis.column(i)
                    for j in range(sb.dim()):
                        vb = sb.basis.column(j)
                        col = [fld.zero()] * size
                        k = 0
                        for xa in va:
                            for xb in vb:
                                col[offset + k] = xa * xb
                                k += 1
                        cols.append(col)
        sub = Subspace.span(fld, size, cols) if cols else Subspace.zero(fld, size)
        if prev_dim is None or sub.dim() != prev_dim:
            jumps.append((n, sub))
            prev_dim = sub.dim()
    while jumps and jumps[0][1].dim() == size:
        jumps.pop(0)
    if not jumps or jumps[-1][1].dim() != 0:
        jumps.append((hi + 1, Subspace.zero(fld, size)))
    return Filtration(fld, size, jumps)


# ---------------------------------------------------------------------------
# Chain-level cup product (split packages, cocycle inputs)


def _apply_bivariate(grid, phi_a, phi_b, vec_a, vec_b, layout, total, a_deg, fld):
    """sum_{ij} grid[i][j] (Phi_A^i vec_a) (x) (Phi_B^j vec_b), placed in the
    Kunneth block of bidegree (a_deg, total - a_deg)."""
    out = [fld.zero()] * layout.dim(total)
    if not grid:
        return out
    max_i = max(i for i, j in grid)
    max_j = max(j for i, j in grid)
    pow_a = [vec_a]
    for _ in range(max_i):
        pow_a.append(phi_a.apply(pow_a[-1]))
    pow_b = [vec_b]
    for _ in range(max_j):
        pow_b.append(phi_b.apply(pow_b[-1]))
    for (i, j), c in grid.items():
        cf = fld.from_fraction(c)
        term = layout.place(fld, total, a_deg, pow_a[i], pow_b[j])
        out = [x + cf * t for x, t in zip(out, term)]
    return out


def cup(syn_a, deg_a, vec_a, syn_b, deg_b, vec_b, syn_target, layout):
    """Chain-level product of cocycles: syn_P(A, n) x syn_Q(B, m) ->
    syn_{P*Q}(A (x) B, n + m) on split packages.

    Slot formula (unit-law convention): X = x1 x2,
    Y = e(u, v)(y1 x2) + (-1)^deg_a f(u, v)(x1 y2), Z = (-1)^deg_a psi(x1) z2.
    """
    ga, gb = syn_a.package, syn_b.package
    gt = syn_target.package
    fld = ga.field
    if quintuple_violations(syn_a, deg_a, vec_a) or quintuple_violations(syn_b, deg_b, vec_b):
        raise DomainError("cup is defined on cocycle representatives")
    pa = syn_a.split_cochain(deg_a, vec_a)
    pb = syn_b.split_cochain(deg_b, vec_b)
    e_grid, f_grid = star_decomposition(syn_a.poly, syn_b.poly)
    total = deg_a + deg_b
    sign = fld.from_int(-1 if deg_a % 2 else 1)

    x_out = layout.place(fld, total, deg_a, pa["x"], pb["x"])
    y_out = _apply_bivariate(
        e_grid, ga.phi.component(deg_a - 1), gb.phi.component(deg_b),
        pa["y"], pb["x"], layout, total - 1, deg_a - 1, fld,
    )
    y2 = _apply_bivariate(
        f_grid, ga.phi.component(deg_a), gb.phi.component(deg_b - 1),
        pa["x"], pb["y"], layout, total - 1, deg_a, fld,
    )
    y_out = [a + sign * b for a, b in zip(y_out, y2)]

    # Z = sign * psi(x1) (x) lift(z2), projected modulo F^(n+m)
    psi_x1 = ga.psi.component(deg_a).apply(pa["x"])
    zb_lift = _z_lift(syn_b, deg_b - 1, pb["z"])
    z_amb = layout.place(fld, total - 1, deg_a, psi_x1, zb_lift)
    z_amb = [sign * t for t in z_amb]
    z_out = syn_target.quots[total - 1].section(z_amb) if (total - 1) in syn_target.quots else []
    return syn_target.assemble_cochain(total, {"x": x_out, "y": y_out, "z": z_out})


def _z_lift(syn, degree, zbar):
    quots = syn.quots
    if degree not in quots or quots[degree].dim() == 0:
        return [syn.package.field.zero()] * syn.package.dr.dim(degree)
    return quots[degree].lift(zbar)


# ---------------------------------------------------------------------------
# Block pairing and the trace isomorphism


def pairing_block_value(g, ses_a, cls_a, ses_b, cls_b):
    """<a, b> through the SES blocks:

        <a, b> = <x_a, pr b>_dR + (-1)^deg_a <pr a, y_b>_dR

    where a = i_fp(x_a) + sigma(pr a) in degree i, twist n on g, and b lives
    in the complementary degree 2d - i + 1 and twist d - n + 1 on the dual
    package.  Pairing matrices of g are used at degrees (i-1) and i.
    """
    fld = g.field
    i = ses_a.degree
    j = ses_b.degree
    if i + j != 2 * g.d + 1:
        raise DomainError("degrees %d + %d must sum to 2d + 1" % (i, j))
    if ses_a.syn.twist + ses_b.syn.twist != g.d + 1:
        raise DomainError("twists must sum to d + 1")
    x_a, pr_a = ses_a.decompose(cls_a)
    y_b, pr_b = ses_b.decompose(cls_b)
    total = fld.zero()
    pm_prev = g.pairing.get(i - 1)
    if pm_prev is not None and x_a:
        amb_x = ses_a.source_quot.lift(x_a)
        amb_prb = ses_b.target_sub.basis.apply(pr_b) if pr_b else []
        if amb_prb:
            total = total + _bilinear(fld, pm_prev, amb_x, amb_prb)
    pm_cur = g.pairing.get(i)
    if pm_cur is not None and y_b:
        amb_pra = ses_a.target_sub.basis.apply(pr_a) if pr_a else []
        amb_y = ses_b.source_quot.lift(y_b)
        if amb_pra:
            sign = fld.from_int(-1 if i % 2 else 1)
            total = total + sign * _bilinear(fld, pm_cur, amb_pra, amb_y)
    return total


def _bilinear(fld, m, left, right):
    acc = fld.zero()
    tmp = m.apply(right)
    for a, t in zip(left, tmp):
        acc = acc + a * t
    return acc


def check_star_invertibility(g, poly_pq):
    """The special-groups preconditions: P*Q(q Phi) invertible on
    H^(2d-1)_HK and P*Q(Phi) invertible on H^(2d)_HK.  Returns None or the
    offending description."""
    fld = g.field
    top = 2 * g.d
    h_top = g.h_hk(top)
    if h_top and h_top.dim:
        m = apply_poly(poly_pq, g.phi_on_h(top))
        if rank(m) < h_top.dim:
            return "P*Q(Phi) is singular on H^%d_HK" % top
    h_prev = g.h_hk(top - 1)
    if h_prev and h_prev.dim:
        m = apply_poly(poly_pq, g.phi_on_h(top - 1).scale(fld.from_int(fld.q)))
        if rank(m) < h_prev.dim:
            return "P*Q(q Phi) is singular on H^%d_HK" % (top - 1)
    return None


def trace_and_pairing(g, ses_a, cls_a, ses_b, cls_b):
    """Pairing of complementary classes through the trace isomorphism; the
    P*Q invertibility preconditions are checked first."""
    pq = star_product(ses_a.syn.poly, ses_b.syn.poly)
    bad = check_star_invertibility(g, pq)
    if bad is not None:
        raise DomainError(bad)
    return pairing_block_value(g, ses_a, cls_a, ses_b, cls_b)
