"""Builders for the two worked examples plus small randomized generators.

Both examples appear in several test modules, so the charts, fields, and
reduction scripts live here.  The random generators intentionally produce
tiny polynomials: every law under test is checked by canonical equality,
and small inputs keep the exact arithmetic fast.
"""

from __future__ import annotations

from cinfstruct import reduction as rd
from cinfstruct import structures as st
from cinfstruct.calculus import KForm, VectorField
from cinfstruct.charts import Chart, parse_rule


def field(chart, name, *comps):
    return VectorField(chart, tuple(chart.coerce(c) for c in comps), name=name)


# ---------------------------------------------------------------------------
# The 4-coordinate rank-2 example.

DIM4_INTEGRAL_2 = "x1 + x4/(x2 - x3*x4)"
DIM4_SOLUTION_2 = "x2*(C2 - x1)/(1 + x3*(C2 - x1))"
DIM4_INTEGRAL_1 = "(1 + x3*(C2 - x1))/(x2*x3)"
DIM4_SOLUTION_1 = "1/(x1 + C1*x2 - C2)"

DIM4_F2 = "(x2 - x3*x4)^2/x2"
DIM4_MU2 = "-1/(x2 - x3*x4)^2"
DIM4_F1 = "-x3^2*(x2 - x3*x4)"
DIM4_MU1 = "-1/(x2*x3^2*(x2 - x3*x4))"


def dim4_chart():
    return Chart("M", ("x1", "x2", "x3", "x4"))


def dim4_fields(ch):
    Z1 = field(ch, "Z1", 0, "x2 - x3*x4", "-x3", "x4")
    Z2 = field(ch, "Z2", 1, 0, "-x3^2", "2*x3*x4 - x2")
    X1 = field(ch, "X1", 0, "x4", 1, 0)
    X2 = field(ch, "X2", 0, 0, 0, 1)
    return Z1, Z2, X1, X2


def dim4_steps():
    return [
        rd.StepSpec(DIM4_INTEGRAL_2, "C2", "x4", DIM4_SOLUTION_2, ()),
        rd.StepSpec(DIM4_INTEGRAL_1, "C1", "x3", DIM4_SOLUTION_1, ()),
    ]


def dim4_reduced():
    ch = dim4_chart()
    Z1, Z2, X1, X2 = dim4_fields(ch)
    state = rd.init_reduction(st.Distribution(ch, (Z1, Z2)), [X1, X2])
    rd.run_reduction(state, dim4_steps())
    return state


# ---------------------------------------------------------------------------
# The third-order ODE example (coefficients built from Airy-type solutions
# phi1, phi2 of phi'' = (x + 1/4) phi, handled through rewrite rules).

AIRY_RULES = (
    "D(phi1, x, 2) = (x + 1/4)*phi1",
    "D(phi2, x, 2) = (x + 1/4)*phi2",
    "D(exp_half, x) = exp_half/2",
)

AIRY_RHS = "(u1*(x*u1 - x - 1) - u2*(u1 + x) - x^2)/u1"

AIRY_INTEGRAL_3 = (
    "-(2*u1*D(phi2, x) - (2*u2 + u1 + 2*x)*phi2(x))"
    "/(2*u1*D(phi1, x) - (2*u2 + u1 + 2*x)*phi1(x))"
)
AIRY_SOLUTION_3 = (
    "((C3*D(phi1, x) + D(phi2, x))/(C3*phi1(x) + phi2(x)))*u1 - u1/2 - x"
)
AIRY_INTEGRAL_2 = "G(x) + u1*exp_half(x)/(C3*phi1(x) + phi2(x))"
AIRY_SOLUTION_2 = "(C3*phi1(x) + phi2(x))*(C2 - G(x))/exp_half(x)"
AIRY_INTEGRAL_1 = "H(x) + u"
AIRY_SOLUTION_1 = "C1 - H(x)"

AIRY_RULE_G = "D(G, x) = x*exp_half(x)/(C3*phi1(x) + phi2(x))"
AIRY_RULE_H = "D(H, x) = -(C2 - G(x))*(C3*phi1(x) + phi2(x))/exp_half(x)"

AIRY_MU3 = (
    "4*u1*(D(phi1, x)*phi2(x) - phi1(x)*D(phi2, x))"
    "/(2*u1*D(phi1, x) - (2*u2 + u1 + 2*x)*phi1(x))^2"
)
AIRY_F3 = (
    "(2*u1*D(phi1, x) - (2*u2 + u1 + 2*x)*phi1(x))^2"
    "/(4*u1*(D(phi1, x)*phi2(x) - phi1(x)*D(phi2, x)))"
)
AIRY_MU2 = (
    "-(2*u1*D(phi1, x) - (2*u2 + u1 + 2*x)*phi1(x))*exp_half(x)"
    "/(2*u1*(D(phi1, x)*phi2(x) - phi1(x)*D(phi2, x)))"
)
AIRY_F2 = (
    "2*u1*(D(phi1, x)*phi2(x) - phi1(x)*D(phi2, x))"
    "/((2*u1*D(phi1, x) - (2*u2 + u1 + 2*x)*phi1(x))*exp_half(x))"
)


def airy_chart():
    base = Chart("J2", ("x", "u", "u1", "u2"))
    return base.with_rules([parse_rule(r, base) for r in AIRY_RULES])


def airy_fields(ch):
    A = field(ch, "A", 1, "u1", "u2", AIRY_RHS)
    X1 = field(ch, "X1", 0, 1, 0, 0)
    X2 = field(ch, "X2", 0, 0, 1, "(u2 + x)/u1")
    X3 = field(ch, "X3", 0, 0, 0, 1)
    return A, X1, X2, X3


def airy_steps():
    return [
        rd.StepSpec(AIRY_INTEGRAL_3, "C3", "u2", AIRY_SOLUTION_3, (AIRY_RULE_G,)),
        rd.StepSpec(AIRY_INTEGRAL_2, "C2", "u1", AIRY_SOLUTION_2, (AIRY_RULE_H,)),
        rd.StepSpec(AIRY_INTEGRAL_1, "C1", "u", AIRY_SOLUTION_1, ()),
    ]


def airy_reduced():
    ch = airy_chart()
    A, X1, X2, X3 = airy_fields(ch)
    state = rd.init_reduction(st.Distribution(ch, (A,)), [X1, X2, X3])
    rd.run_reduction(state, airy_steps())
    return state


# ---------------------------------------------------------------------------
# Randomized instances.

_COEFFS = (-3, -2, -1, 1, 2, 3)


def random_poly(rng, chart, degree=2, terms=2):
    """A random polynomial expression on the chart, never identically zero."""
    while True:
        parts = []
        for _ in range(rng.randint(1, terms)):
            atoms = [str(rng.choice(_COEFFS))]
            for _ in range(rng.randint(0, degree)):
                atoms.append(rng.choice(chart.coords))
            parts.append("*".join(atoms))
        e = chart.parse(" + ".join(parts))
        if not e.is_zero_expr():
            return e


def random_field(rng, chart, degree=2, name=""):
    comps = tuple(random_poly(rng, chart, degree) for _ in chart.coords)
    return VectorField(chart, comps, name=name)


def random_one_form(rng, chart, degree=2):
    data = {(i,): random_poly(rng, chart, degree) for i in range(chart.dim)}
    return KForm.make(chart, 1, data)
