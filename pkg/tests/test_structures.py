"""Span certification: involutivity, symmetry levels, dual coframes, rescaling.

Expected bracket decompositions below were derived by hand from the field
components; the dual-form coefficients were checked against cofactor
determinants independently of the contraction code.
"""

import pytest

from cinfstruct import kernel
from cinfstruct.calculus import VectorField
from cinfstruct.charts import Chart
from cinfstruct.errors import CertificationError, ChartError
from cinfstruct.structures import (
    Distribution,
    check_cinf_structure,
    check_cinf_symmetry,
    check_independent,
    check_involutive,
    dual_one_forms,
    normalize_dual,
    rescale_symmetry,
)

import helpers


def test_involutivity_records_the_structure_constants(dim4):
    cert, records = check_involutive(dim4.dist)
    assert cert.ok
    assert len(records) == 1
    rec = records[0]
    assert (rec.left, rec.right) == ("Z1", "Z2")
    assert rec.decomposition.coefficient("Z1") == dim4.chart.parse("-x3")
    assert rec.decomposition.coefficient("Z2") == kernel.ZERO
    assert dict(cert.payload)["structure_constants"]["[Z1, Z2]"]["Z1"] == "-x3"


def test_non_involutive_pair_is_refuted_with_witness():
    ch = Chart("N", ("x", "y", "z"))
    Za = helpers.field(ch, "Za", 1, 0, 0)
    Zb = helpers.field(ch, "Zb", 0, 1, "x")
    cert, records = check_involutive(Distribution(ch, (Za, Zb)))
    assert not cert.ok
    assert records[0].decomposition is None
    assert cert.witness is not None


def test_independence_certificate_carries_the_rank(dim4):
    cert = check_independent(dim4.chart, dim4.gens + dim4.fields)
    assert cert.ok
    assert dict(cert.payload)["rank"] == 4

    X1 = dim4.fields[0]
    doubled = X1.scaled(kernel.const_expr(2), name="2X1")
    dep = check_independent(dim4.chart, [X1, doubled])
    assert not dep.ok
    assert dict(dep.payload)["rank"] == 1


def test_level_one_brackets(dim4):
    p = dim4.chart.parse
    lv = dim4.structure.level(1)
    assert lv.ok
    assert not lv.standard
    # [X1, Z1] = -X1 and [X1, Z2] = Z1 - x3*X1
    assert lv.lambdas == (p("-1"), p("-x3"))
    assert lv.coefficients == ((kernel.ZERO, kernel.ZERO), (kernel.ONE, kernel.ZERO))


def test_level_two_brackets(dim4):
    p = dim4.chart.parse
    lv = dim4.structure.level(2)
    assert lv.ok
    assert lv.lambdas == (p("(x3*x4 + x2)/x2"), p("2*x3"), p("-x4/x2"))
    assert lv.coefficients == (
        (p("-x3/x2"), kernel.ZERO, p("-x3^2/x2")),
        (kernel.ZERO, kernel.ZERO, kernel.ZERO),
        (p("1/x2"), kernel.ZERO, p("x3/x2")),
    )
    assert dim4.structure.ok
    assert dim4.structure.field_names() == ("X1", "X2")


def test_structure_rejects_wrong_field_count(dim4):
    with pytest.raises(ChartError, match="needs 2 fields"):
        check_cinf_structure(dim4.dist, dim4.fields[:1])


def test_scaled_field_leaves_the_bare_span(dim4):
    f2 = dim4.chart.parse(helpers.DIM4_F2)
    Y2 = dim4.fields[1].scaled(f2, name="Y2")
    res = check_cinf_symmetry(dim4.gens, Y2)
    assert not res.ok
    assert res.certificate.witness is not None


def test_scaled_field_is_standard_over_the_extended_span(dim4):
    p = dim4.chart.parse
    f2 = p(helpers.DIM4_F2)
    Y2 = dim4.fields[1].scaled(f2, name="Y2")
    members = dim4.gens + (dim4.fields[0],)
    res = check_cinf_symmetry(members, Y2)
    assert res.ok
    assert res.standard
    # [Y2, Z1] decomposes with no Y2 component at all
    assert res.lambdas[0] == kernel.ZERO
    assert res.coefficients[0] == (
        p("-x3*(x2 - x3*x4)^2/x2^2"),
        kernel.ZERO,
        p("-x3^2*(x2 - x3*x4)^2/x2^2"),
    )


def test_rescaling_follows_the_lambda_law(dim4):
    p = dim4.chart.parse
    res = rescale_symmetry(dim4.fields[0], "x2", dim4.gens)
    assert res.certificate.ok
    assert res.field.name == "h*X1"
    assert res.field.components == (kernel.ZERO, p("x2*x4"), p("x2"), kernel.ZERO)
    # lambda' = lambda - V(h)/h with h = x2
    assert res.lambdas[0] == p("(x3*x4 - 2*x2)/x2")
    assert res.lambdas[1] == p("-x3")
    # span coefficients pick up a factor of h
    assert res.coefficients[0] == (kernel.ZERO, kernel.ZERO)
    assert res.coefficients[1] == (p("x2"), kernel.ZERO)


def test_rescaling_refuses_an_uncertified_base(dim4):
    with pytest.raises(CertificationError):
        rescale_symmetry(dim4.fields[1], "x2", dim4.gens[:1])


def test_dual_forms_dim4(dim4):
    p = dim4.chart.parse
    dual = dim4.dual
    assert dual.certificate.ok
    assert dual.delta == p("-x2")
    w1, w2 = dual.omega(1), dual.omega(2)
    assert w1.coeff((0,)) == p("x3^2*(x2 - x3*x4)")
    assert w1.coeff((1,)) == p("x3")
    assert w1.coeff((2,)) == p("x2 - x3*x4")
    assert w1.coeff((3,)) == kernel.ZERO
    assert w2.coeff((0,)) == p("-(x2 - x3*x4)^2")
    assert w2.coeff((1,)) == p("x4")
    assert w2.coeff((2,)) == p("-x4^2")
    assert w2.coeff((3,)) == p("-x2")
    labels = [it.label for it in dual.certificate.items]
    assert "X1 . omega_1 = -Delta" in labels
    assert "X2 . omega_2 = Delta" in labels


def test_normalized_dual_pairs_to_kronecker_delta(dim4):
    from cinfstruct.calculus import interior_product

    p = dim4.chart.parse
    nd = normalize_dual(dim4.dual)
    assert nd.certificate.ok
    for i, X in enumerate(dim4.structure.fields):
        for j, s in enumerate(nd.sigmas):
            val = interior_product(X, s).coeff(())
            assert val == (kernel.ONE if i == j else kernel.ZERO)
    # sigma_1 = -omega_1/Delta = omega_1/x2
    assert nd.sigmas[0].coeff((1,)) == p("x3/x2")


def test_airy_levels(airy):
    p = airy.chart.parse
    st = airy.structure
    assert st.ok
    assert st.level(1).standard  # [X1, A] = 0 outright
    lv2 = st.level(2)
    assert lv2.lambdas == (p("(u2 + x)/u1"), kernel.ZERO)
    assert lv2.coefficients == ((kernel.ZERO, kernel.ONE), (kernel.ZERO, kernel.ZERO))
    lv3 = st.level(3)
    assert lv3.lambdas == (p("-(u1 + u2 + 2*x)/u1"), kernel.ZERO, p("1/u1"))
    assert lv3.coefficients[0] == (kernel.ZERO, kernel.ZERO, kernel.ONE)
    assert lv3.coefficients[1] == (kernel.ZERO, kernel.ZERO, kernel.ZERO)
    assert lv3.coefficients[2] == (kernel.ZERO, kernel.ZERO, kernel.ZERO)


def test_airy_dual_forms(airy):
    p = airy.chart.parse
    dual = airy.dual
    assert dual.certificate.ok
    assert dual.delta == kernel.ONE
    w1, w2, w3 = dual.omega(1), dual.omega(2), dual.omega(3)
    assert w1.coeff((0,)) == p("-u1")
    assert w1.coeff((1,)) == kernel.ONE
    assert w1.coeff((2,)) == kernel.ZERO
    assert w1.coeff((3,)) == kernel.ZERO
    assert w2.coeff((0,)) == p("u2")
    assert w2.coeff((1,)) == kernel.ZERO
    assert w2.coeff((2,)) == p("-1")
    assert w2.coeff((3,)) == kernel.ZERO
    assert w3.coeff((0,)) == p("(u2 + x)^2/u1 + u2 + x + 1 - x*u1")
    assert w3.coeff((1,)) == kernel.ZERO
    assert w3.coeff((2,)) == p("-(u2 + x)/u1")
    assert w3.coeff((3,)) == kernel.ONE


def test_distribution_rejects_off_chart_generators(dim4):
    other = Chart("O", ("a", "b"))
    stray = VectorField(other, (kernel.ONE, kernel.ZERO), name="S")
    with pytest.raises(ChartError):
        Distribution(dim4.chart, (dim4.gens[0], stray))
