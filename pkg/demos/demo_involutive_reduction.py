"""
Stepwise reduction of a rank-2 involutive distribution in 4 coordinates
=======================================================================

A worked session: certify a distribution together with an ordered pair of
symmetry fields, build the dual 1-forms, and descend level by level until
the integral manifolds come out as explicit graphs over (x1, x2).

Run it as a plain script:

    python demos/demo_involutive_reduction.py
"""

from cinfstruct import format_expression as fmt
from cinfstruct.calculus import VectorField
from cinfstruct.charts import Chart
from cinfstruct import reduction as rd
from cinfstruct import structures as st


def field(chart, name, *comps):
    return VectorField(chart, tuple(chart.coerce(c) for c in comps), name=name)


ch = Chart("M", ("x1", "x2", "x3", "x4"))

# The distribution is spanned by Z1, Z2; the ordered fields X1, X2 complete
# the frame.  X2 is checked against {Z1, Z2, X1}, X1 against {Z1, Z2} alone.
Z1 = field(ch, "Z1", 0, "x2 - x3*x4", "-x3", "x4")
Z2 = field(ch, "Z2", 1, 0, "-x3^2", "2*x3*x4 - x2")
X1 = field(ch, "X1", 0, "x4", 1, 0)
X2 = field(ch, "X2", 0, 0, 0, 1)

state = rd.init_reduction(st.Distribution(ch, (Z1, Z2)), [X1, X2])
print("structure certified:", state.structure.ok)
for k, lv in enumerate(state.structure.levels, start=1):
    print("  level %d lambdas:" % k, [fmt(l) for l in lv.lambdas])

print("Delta =", fmt(state.dual.delta))
for i in (1, 2):
    w = state.dual.omega(i)
    print("omega_%d coefficients:" % i, [fmt(w.coeff((j,))) for j in range(4)])

# ---------------------------------------------------------------------------
# Before descending, certify the first integral of the top level.  The
# certificate lists every check by name; all vanishing items are proved
# zeros here, not sampled ones.

I2 = "x1 + x4/(x2 - x3*x4)"
cert = rd.verify_first_integral(state, I2)
print("\nfirst integral at the top level:", cert.ok)
for item in cert.items:
    print("  [%s] %s" % ("ok" if item.ok else "FAIL", item.label))

# Each step names the integral, the constant that freezes it, the coordinate
# solved for, and the graph that parametrizes the level set.
steps = [
    rd.StepSpec(I2, "C2", "x4", "x2*(C2 - x1)/(1 + x3*(C2 - x1))", ()),
    rd.StepSpec(
        "(1 + x3*(C2 - x1))/(x2*x3)", "C1", "x3", "1/(x1 + C1*x2 - C2)", ()
    ),
]
rd.run_reduction(state, steps)
print("\nreduction complete:", state.complete)
for stage in state.stages:
    print("  stage coordinates:", stage.chart.coords)

rep = rd.final_report(state)
print("\nintegral manifolds over", rep.solution_map.source.coords)
for eq in rep.equations:
    print(" ", eq)
print("manifold certificate:", rep.ok)
