"""
A third-order equation solved through its symmetry structure
============================================================

The equation lives on a jet chart (x, u, u1, u2) with the drift field A.
Its coefficients involve two independent solutions phi1, phi2 of a linear
second-order equation; those never get closed forms.  Rewrite rules carry
exactly what is true about them:

    phi1'' = (x + 1/4) phi1
    phi2'' = (x + 1/4) phi2
    exp_half' = exp_half / 2

and the reduction machinery works with the symbols D(phi1, x), phi1(x), ...
as opaque generators.  Every certificate below is exact arithmetic in the
rewrite-closed field; nothing is approximated.
"""

from cinfstruct import format_expression as fmt
from cinfstruct.calculus import VectorField, lie_bracket
from cinfstruct.charts import Chart, parse_rule
from cinfstruct import reduction as rd
from cinfstruct import structures as st

base = Chart("J2", ("x", "u", "u1", "u2"))
ch = base.with_rules(
    [
        parse_rule("D(phi1, x, 2) = (x + 1/4)*phi1", base),
        parse_rule("D(phi2, x, 2) = (x + 1/4)*phi2", base),
        parse_rule("D(exp_half, x) = exp_half/2", base),
    ]
)


def field(name, *comps):
    return VectorField(ch, tuple(ch.coerce(c) for c in comps), name=name)


A = field("A", 1, "u1", "u2", "(u1*(x*u1 - x - 1) - u2*(u1 + x) - x^2)/u1")
X1 = field("X1", 0, 1, 0, 0)
X2 = field("X2", 0, 0, 1, "(u2 + x)/u1")
X3 = field("X3", 0, 0, 0, 1)

# The first two commutators close on the nose; the third picks up lower
# fields plus a multiple of X3 itself, which is what the levels record.
print("[X1, A] =", [fmt(c) for c in lie_bracket(X1, A).components])
print("[X2, A] =", [fmt(c) for c in lie_bracket(X2, A).components])
print("[X3, A] =", [fmt(c) for c in lie_bracket(X3, A).components])

state = rd.init_reduction(st.Distribution(ch, (A,)), [X1, X2, X3])
print("\nstructure certified:", state.structure.ok)
for k, lv in enumerate(state.structure.levels, start=1):
    print("  level %d lambdas:" % k, [fmt(l) for l in lv.lambdas])
print("Delta =", fmt(state.dual.delta))

# The descent introduces auxiliary functions G and H of x alone.  Their
# defining derivatives are supplied as extra rewrite rules with the step
# that creates them, so later steps can differentiate through them.
I3 = (
    "-(2*u1*D(phi2, x) - (2*u2 + u1 + 2*x)*phi2(x))"
    "/(2*u1*D(phi1, x) - (2*u2 + u1 + 2*x)*phi1(x))"
)
S3 = "((C3*D(phi1, x) + D(phi2, x))/(C3*phi1(x) + phi2(x)))*u1 - u1/2 - x"
steps = [
    rd.StepSpec(
        I3, "C3", "u2", S3,
        ("D(G, x) = x*exp_half(x)/(C3*phi1(x) + phi2(x))",),
    ),
    rd.StepSpec(
        "G(x) + u1*exp_half(x)/(C3*phi1(x) + phi2(x))",
        "C2",
        "u1",
        "(C3*phi1(x) + phi2(x))*(C2 - G(x))/exp_half(x)",
        ("D(H, x) = -(C2 - G(x))*(C3*phi1(x) + phi2(x))/exp_half(x)",),
    ),
    rd.StepSpec("H(x) + u", "C1", "u", "C1 - H(x)", ()),
]
rd.run_reduction(state, steps)
print("reduction complete:", state.complete)

rep = rd.final_report(state)
print("\ngeneral solution as a graph over", rep.solution_map.source.coords)
for eq in rep.equations:
    print(" ", eq)
print("certificate:", rep.ok)

# The factors recovered along the way convert the X_k into a family whose
# lambdas all vanish.
entries = {e.level: e for e in rd.derive_factors(state)}
ys, cert = rd.build_solvable_structure(
    state.structure, {k: entries[k].f for k in (1, 2, 3)}
)
print("\nY_k = f_k X_k all standard:", cert.ok)
print("f_3 =", fmt(entries[3].f))
