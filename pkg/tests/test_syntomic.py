import random
from fractions import Fraction

import pytest

from fpcoh.errors import DomainError
from fpcoh.homological import cohomology, induced_map, square_fiber, verify_complex
from fpcoh.linalg import Matrix, Subspace, apply_poly, rank
from fpcoh.padic import BaseField, PadicPoly
from fpcoh.phin import Filtration
from fpcoh.syntomic import (
    GeometryPackage,
    SynSES,
    build_syntomic,
    change_poly_map,
    check_package,
    cup,
    diagram_pieces,
    pairing_block_value,
    point_package,
    pq_fiber,
    quintuple_violations,
    semistable_square,
    ses_maps,
    split_package,
    star_decomposition,
    star_product,
    tensor_package,
    three_step_filtration,
    trace_and_pairing,
)

from util import rand_invertible, rand_matrix

Q5 = BaseField(5, 26)
ONE_MINUS_T = PadicPoly.from_fractions(Q5, [1, -1])


def hdim(c, i):
    if c.lo <= i <= c.hi:
        return cohomology(c, i).dim
    return 0


def steinberg(field, size, alpha=1):
    phi = Matrix.zeros(field, size, size)
    nm = Matrix.zeros(field, size, size)
    for j in range(size):
        phi.entries[j][j] = field.from_int(alpha * field.p**j)
        if j:
            nm.entries[j - 1][j] = field.one()
    return phi, nm


def random_semistable_package(field, rng, maxdeg=2, maxdim=2, zero_n=False):
    from fpcoh.linalg import invert

    h_dims = {}
    phi_mats = {}
    n_mats = {}
    psi_mats = {}
    fil = {}
    for i in range(0, maxdeg + 1):
        n = rng.randint(0, maxdim)
        h_dims[i] = n
        if n == 0:
            phi_mats[i] = Matrix.zeros(field, 0, 0)
            continue
        phi, nm = steinberg(field, n, alpha=rng.choice([1, 2, 3]))
        g = rand_invertible(field, rng, n)
        gi = invert(g)
        phi_mats[i] = g * phi * gi
        n_mats[i] = (g * nm * gi) if not zero_n else Matrix.zeros(field, n, n)
        psi_mats[i] = rand_invertible(field, rng, n)
        jumps = []
        prev = Subspace.full(field, n)
        label = rng.randint(0, 1)
        while prev.dim() > 0:
            drop = rng.randint(1, prev.dim())
            cols = [prev.basis.column(j) for j in range(prev.dim() - drop)]
            sub = Subspace.span(field, n, cols)
            jumps.append((label, sub))
            prev = sub
            label += rng.randint(1, 2)
        fil[i] = Filtration(field, n, jumps)
    if all(d == 0 for d in h_dims.values()):
        h_dims[0] = 1
        phi_mats[0] = Matrix.identity(field, 1)
    return split_package(field, 1, h_dims, phi_mats, n_mats, psi_mats, fil)


def random_poly(field, rng, maxdeg=2):
    # constant term 1
    deg = rng.randint(1, maxdeg)
    return PadicPoly.from_fractions(
        field, [1] + [rng.randint(-3, 3) for _ in range(deg)]
    )


def test_point_package_special_groups():
    pt = point_package(Q5)
    assert check_package(pt) is None
    # P = 1 - T, n <= 0: H^0 = Q_p (the fixed-point case P(Phi) = 0, N = 0)
    syn = build_syntomic(pt, ONE_MINUS_T, 0, "good")
    assert syn.h(0).dim == 1
    # n = 1: H^1 = Q_p  (H^1_fp(Spec O_K, 1) = K)
    syn1 = build_syntomic(pt, ONE_MINUS_T, 1, "good")
    assert syn1.h(1).dim == 1
    assert syn1.h(0).dim == 0
    # degree 1 at weight 1 uses the empty cofinal polynomial P = 1, where the
    # SES source H^0/P(Phi) F^0 H^0 vanishes
    one = PadicPoly.from_fractions(Q5, [1])
    assert build_syntomic(pt, one, 0, "good").h(1).dim == 0


def test_point_package_semistable_matches():
    pt = point_package(Q5)
    syn = build_syntomic(pt, ONE_MINUS_T, 1, "semistable")
    good = build_syntomic(pt, ONE_MINUS_T, 1, "good")
    dfib, _ = pq_fiber(pt, ONE_MINUS_T)
    for i in range(0, 3):
        expected = good.h(i).dim + hdim(dfib, i - 1)
        assert syn.h(i).dim == expected


def test_constant_term_gate():
    pt = point_package(Q5)
    bad = PadicPoly.from_fractions(Q5, [2, 1])
    with pytest.raises(DomainError):
        build_syntomic(pt, bad, 0)


def test_five_block_matrix_squares_to_zero():
    rng = random.Random(1)
    for _ in range(12):
        g = random_semistable_package(Q5, rng)
        poly = random_poly(Q5, rng)
        syn = build_syntomic(g, poly, rng.randint(0, 2), "semistable")
        assert verify_complex(syn.complex) is None


def test_semistable_matches_square_fiber():
    # the quintuple assembly is the square fiber after flipping u, v signs
    rng = random.Random(2)
    for _ in range(10):
        g = random_semistable_package(Q5, rng)
        poly = random_poly(Q5, rng)
        n = rng.randint(0, 2)
        syn = build_syntomic(g, poly, n, "semistable")
        sq = semistable_square(g, poly, n)
        fib = square_fiber(sq)
        for i in syn.complex.degrees():
            if not (fib.lo <= i <= fib.hi):
                assert syn.complex.dim(i) == 0
                continue
            assert syn.complex.dim(i) == fib.dim(i)
            hs = cohomology(syn.complex, i).dim
            hf = cohomology(fib, i).dim
            assert hs == hf


def test_quintuple_conditions_on_lifts():
    rng = random.Random(3)
    for _ in range(12):
        g = random_semistable_package(Q5, rng)
        poly = random_poly(Q5, rng)
        n = rng.randint(0, 2)
        syn = build_syntomic(g, poly, n, "semistable")
        for i in syn.complex.degrees():
            h = syn.h(i)
            for cls in h.basis_classes():
                vec = h.lift(cls)
                assert quintuple_violations(syn, i, vec) == []


def test_diagram_exactness():
    rng = random.Random(4)
    for _ in range(20):
        g = random_semistable_package(Q5, rng)
        poly = random_poly(Q5, rng)
        n = rng.randint(0, 2)
        syn = build_syntomic(g, poly, n, "semistable")
        for i in (1, 2):
            pieces = diagram_pieces(g, poly, n, i, syn=syn)
            # 0 -> coker alpha -> H^i_syn -> ker alpha -> 0
            assert pieces.coker_quot.dim() + pieces.ker_alpha.dim() == pieces.h_syn.dim
            # beta factors through coker alpha with full rank
            assert rank(pieces.beta) == pieces.coker_quot.dim()
            # gamma image = ker alpha
            from fpcoh.linalg import image

            img = image(pieces.gamma)
            assert img.dim() == pieces.ker_alpha.dim()
            assert pieces.ker_alpha.contains_subspace(img)


def test_three_step_filtration_additivity():
    rng = random.Random(5)
    for _ in range(20):
        g = random_semistable_package(Q5, rng)
        poly = random_poly(Q5, rng)
        n = rng.randint(0, 2)
        syn = build_syntomic(g, poly, n, "semistable")
        for i in (1, 2):
            f0, f1, f2, f3 = three_step_filtration(g, poly, n, i, syn=syn)
            assert f0.dim() >= f1.dim() >= f2.dim() >= f3.dim() == 0
            graded = (f0.dim() - f1.dim()) + (f1.dim() - f2.dim()) + (f2.dim() - f3.dim())
            assert graded == syn.h(i).dim


def test_filtration_vanishing_source():
    rng = random.Random(6)
    # package with H^(i-2) = 0 forces F^2 = 0 at degree i
    g = random_semistable_package(Q5, rng)
    while g.hk.dim(0) == 0:
        g = random_semistable_package(Q5, rng)
    poly = random_poly(Q5, rng)
    # degree i = 1: H^(-1) = 0
    f0, f1, f2, f3 = three_step_filtration(g, poly, 1, 1)
    assert f2.dim() == 0


def test_good_reduction_degeneration():
    rng = random.Random(7)
    for _ in range(10):
        g = random_semistable_package(Q5, rng, zero_n=True)
        poly = random_poly(Q5, rng)
        n = rng.randint(0, 2)
        syn = build_syntomic(g, poly, n, "semistable")
        good = build_syntomic(g, poly, n, "good")
        dfib, _ = pq_fiber(g, poly)
        for i in syn.complex.degrees():
            expected = good.h(i).dim + hdim(dfib, i - 1)
            assert syn.h(i).dim == expected


def elliptic_package():
    from fpcoh.curves import HyperellipticCurve, to_geometry_package

    curve = HyperellipticCurve([0, 1, 0, 1], BaseField(5, 10))
    return to_geometry_package(curve)


def test_elliptic_ses_dims():
    g = elliptic_package()
    assert check_package(g) is None
    poly = cofinal_weight_one(g)
    ses = ses_maps(g, poly, 1, 1)
    assert ses.source_quot.dim() == 1
    assert ses.target_sub.dim() == 1
    assert ses.h_syn.dim == 2
    assert ses.certify() is None


def cofinal_weight_one(g):
    fracs = g.frobenius_charpoly_fractions(1)
    const = fracs[0]
    return PadicPoly.from_fractions(g.field, [c / const for c in fracs])


def cofinal_weight_two(g):
    # charpoly of Phi on H^2 is T - p; normalized: 1 - T/p
    return PadicPoly.from_fractions(g.field, [1, Fraction(-1, g.field.p)])


def test_point_ses_iso():
    pt = point_package(Q5)
    # the classical syntomic polynomial 1 - T/q is invertible on H^0
    syn_poly = PadicPoly.from_fractions(Q5, [1, Fraction(-1, 5)])
    ses = ses_maps(pt, syn_poly, 1, 1)
    assert ses.source_quot.dim() == 1
    assert ses.target_sub.dim() == 0
    assert rank(ses.i_fp) == 1
    assert ses.h_syn.dim == 1


def test_change_poly_identity_and_composition():
    rng = random.Random(8)
    pt_or_pkg = random_semistable_package(Q5, rng, zero_n=True)
    p1 = random_poly(Q5, rng)
    one = PadicPoly.from_fractions(Q5, [1])
    cm, syn_p, syn_pq = change_poly_map(pt_or_pkg, p1, one, 1)
    for i in syn_p.complex.degrees():
        eye = Matrix.identity(Q5, syn_p.complex.dim(i))
        assert (cm.component(i) - eye).is_apparent_zero()

    q1 = random_poly(Q5, rng)
    r1 = random_poly(Q5, rng)
    # P -> PQ -> PQR equals P -> P(QR)
    cm1, syn_a, syn_b = change_poly_map(pt_or_pkg, p1, q1, 1)
    cm2, syn_b2, syn_c = change_poly_map(pt_or_pkg, p1 * q1, r1, 1)
    cm3, _, syn_c2 = change_poly_map(pt_or_pkg, p1, q1 * r1, 1)
    for i in syn_a.complex.degrees():
        lhs = cm2.component(i) * cm1.component(i)
        rhs = cm3.component(i)
        assert (lhs - rhs).is_apparent_zero()


def test_change_poly_commutes_with_ses():
    g = elliptic_package()
    fld = g.field
    poly = cofinal_weight_one(g)
    q = PadicPoly.from_fractions(fld, [1, 3])
    cm, syn_p, syn_pq = change_poly_map(g, poly, q, 1)
    ses_p = SynSES(g, syn_p, 1)
    ses_pq = SynSES(g, syn_pq, 1)
    hp = syn_p.h(1)
    hpq = syn_pq.h(1)
    ind = induced_map(cm, 1, source_h=hp, target_h=hpq)
    # pr_fp o (induced) = pr_fp
    lhs = ses_pq.pr_fp * ind
    assert (lhs - ses_p.pr_fp).is_apparent_zero()
    # (induced) o i_fp = i_fp (the untwisted normalization matches)
    lhs2 = ind * ses_p.i_fp
    assert (lhs2 - ses_pq.i_fp).is_apparent_zero()


def test_star_product_roots():
    p = PadicPoly.from_fractions(Q5, [1, -2])   # inverse root 2
    q = PadicPoly.from_fractions(Q5, [1, -3])   # inverse root 3
    s = star_product(p, q)
    assert s.to_string() == "1 - 6*T"
    p2 = PadicPoly.from_fractions(Q5, [1, -2, -2])
    q2 = PadicPoly.from_fractions(Q5, [1, 1, 3])
    s2 = star_product(p2, q2)
    # verify: inverse roots of s2 = products of inverse roots
    import numpy

    def invroots(fracs):
        return numpy.roots([float(c) for c in fracs])  # roots of sum c_i T^i, descending?

    # literal roots of P*Q are the pairwise products of literal roots (both
    # sides invert the inverse roots)
    ra = numpy.roots(list(reversed([float(Fraction(c)) for c in [1, -2, -2]])))
    rb = numpy.roots(list(reversed([float(Fraction(c)) for c in [1, 1, 3]])))
    prods = sorted([a * b for a in ra for b in rb], key=lambda z: (z.real, z.imag))
    from fpcoh.syntomic import poly_to_fractions

    rs = numpy.roots(list(reversed([float(c) for c in poly_to_fractions(s2)])))
    rs = sorted(rs, key=lambda z: (z.real, z.imag))
    for a, b in zip(prods, rs):
        assert abs(a - b) < 1e-6


def test_star_decomposition_identity():
    rng = random.Random(9)
    for _ in range(10):
        p = random_poly(Q5, rng)
        q = random_poly(Q5, rng)
        e, f = star_decomposition(p, q)
        # verify P*Q(xy) = e P(x) + f Q(y) as bivariate polynomials
        from fpcoh.syntomic import poly_to_fractions

        pa = poly_to_fractions(p)
        qa = poly_to_fractions(q)
        pq = poly_to_fractions(star_product(p, q))
        total = {}

        def add(grid, scale_key, coeffs, axis):
            for (i, j), c in grid.items():
                for k, pc in enumerate(coeffs):
                    key = (i + k, j) if axis == 0 else (i, j + k)
                    total[key] = total.get(key, Fraction(0)) + c * pc

        add(e, None, pa, 0)
        add(f, None, qa, 1)
        for k, c in enumerate(pq):
            key = (k, k)
            total[key] = total.get(key, Fraction(0)) - c
        assert all(v == 0 for v in total.values())


def test_cup_unit_law():
    # unit class on the point with P = 1 - T acts as change of polynomial
    pt = point_package(Q5)
    rng = random.Random(10)
    q = random_poly(Q5, rng)
    syn_unit = build_syntomic(pt, ONE_MINUS_T, 0, "good")
    syn_b = build_syntomic(pt, q, 1, "good")
    tensor, layout = tensor_package(pt, pt)
    pq = star_product(ONE_MINUS_T, q)
    syn_t = build_syntomic(tensor, pq, 1, "good")
    unit_vec = syn_unit.assemble_cochain(0, {"x": [Q5.one()]})
    hb = syn_b.h(1)
    for cls in hb.basis_classes():
        b_vec = hb.lift(cls)
        out = cup(syn_unit, 0, unit_vec, syn_b, 1, b_vec, syn_t, layout)
        parts_b = syn_b.split_cochain(1, b_vec)
        parts_o = syn_t.split_cochain(1, out)
        for name in ("x", "y", "z"):
            assert all(
                a.same(b) for a, b in zip(parts_o[name], parts_b[name])
            ), name


def test_pairing_compatibility_and_bilinearity():
    g = elliptic_package()
    fld = g.field
    poly = cofinal_weight_one(g)
    q = cofinal_weight_two(g)
    ses1 = ses_maps(g, poly, 1, 1)
    ses2 = ses_maps(g, q, 1, 2)
    # <i_fp(x), b> = <x, pr_fp(b)>_dR
    rng = random.Random(11)
    for _ in range(10):
        x = [fld.from_int(rng.randint(-9, 9))]
        b = [fld.from_int(rng.randint(-9, 9)) for _ in range(ses2.h_syn.dim)]
        a_cls = ses1.i_fp.apply(x)
        val = pairing_block_value(g, ses1, a_cls, ses2, b)
        pr_b = ses2.pr_fp.apply(b)
        amb_x = ses1.source_quot.lift(x)
        amb_prb = ses2.target_sub.basis.apply(pr_b)
        expected = fld.zero()
        tmp = g.pairing[0].apply(amb_prb)
        for u, t in zip(amb_x, tmp):
            expected = expected + u * t
        assert val.same(expected)
    # bilinearity
    a = [fld.from_int(2), fld.from_int(-1)]
    b = [fld.from_int(3), fld.from_int(4)]
    lam = fld.from_int(7)
    v1 = pairing_block_value(g, ses1, [lam * t for t in a], ses2, b)
    v2 = pairing_block_value(g, ses1, a, ses2, b)
    assert v1.same(lam * v2)


def test_trace_preconditions_reject_resonant_pair():
    # when Q kills H^2 (as the fp limit forces), P*Q(q Phi) acquires the
    # eigenvalue 1 on H^1 and the trace route must refuse
    g = elliptic_package()
    poly = cofinal_weight_one(g)
    ses1 = ses_maps(g, poly, 1, 1)
    ses2 = ses_maps(g, cofinal_weight_two(g), 1, 2)
    fld = g.field
    e0 = [fld.one(), fld.zero()]
    with pytest.raises(DomainError):
        trace_and_pairing(g, ses1, e0, ses2, e0)
    # the block pairing itself (the SES-duality route) stays available
    val = pairing_block_value(g, ses1, e0, ses2, e0)
    assert val is not None


def test_trace_and_pairing_on_point():
    pt = point_package(Q5)
    syn_poly = PadicPoly.from_fractions(Q5, [1, Fraction(-1, 5)])
    ses0 = SynSES(pt, build_syntomic(pt, ONE_MINUS_T, 0, "good"), 0)
    ses1 = SynSES(pt, build_syntomic(pt, syn_poly, 1, "good"), 1)
    a = [Q5.from_int(3)]
    b = [Q5.from_int(4)]
    val = trace_and_pairing(pt, ses0, a, ses1, b)
    val2 = trace_and_pairing(pt, ses0, [Q5.from_int(6)], ses1, b)
    assert val2.same(val * Q5.from_int(2))
    assert not val.is_apparent_zero()


def test_point_pairing_is_product():
    pt = point_package(Q5)
    syn_poly = PadicPoly.from_fractions(Q5, [1, Fraction(-1, 5)])
    ses0 = SynSES(pt, build_syntomic(pt, ONE_MINUS_T, 0, "good"), 0)
    ses1 = SynSES(pt, build_syntomic(pt, syn_poly, 1, "good"), 1)
    a = [Q5.from_int(3)]
    b = [Q5.from_int(4)]
    val = pairing_block_value(pt, ses0, a, ses1, b)
    # H^0 class 3 against H^1 class 4: the product up to the i_fp/sigma
    # normalization; bilinearity in both slots
    val2 = pairing_block_value(pt, ses0, [Q5.from_int(6)], ses1, b)
    assert val2.same(val * Q5.from_int(2))
    assert not val.is_apparent_zero()
