"""
Symmetrizing factors, integrating factors, and the bridge between them
======================================================================

The two factor notions attached to a certified structure convert into each
other through the pairing of a field with its dual form.  This script
derives both families from a finished reduction, converts back and forth,
and shows the one genuinely delicate point: a factor can close the dual
form only relative to the forms above it.
"""

from cinfstruct import format_expression as fmt
from cinfstruct.calculus import VectorField, exterior_derivative, wedge
from cinfstruct.charts import Chart
from cinfstruct import factors as fc
from cinfstruct import reduction as rd
from cinfstruct import structures as st


def field(chart, name, *comps):
    return VectorField(chart, tuple(chart.coerce(c) for c in comps), name=name)


ch = Chart("M", ("x1", "x2", "x3", "x4"))
Z1 = field(ch, "Z1", 0, "x2 - x3*x4", "-x3", "x4")
Z2 = field(ch, "Z2", 1, 0, "-x3^2", "2*x3*x4 - x2")
X1 = field(ch, "X1", 0, "x4", 1, 0)
X2 = field(ch, "X2", 0, 0, 0, 1)

state = rd.init_reduction(st.Distribution(ch, (Z1, Z2)), [X1, X2])
rd.run_reduction(
    state,
    [
        rd.StepSpec(
            "x1 + x4/(x2 - x3*x4)",
            "C2",
            "x4",
            "x2*(C2 - x1)/(1 + x3*(C2 - x1))",
            (),
        ),
        rd.StepSpec(
            "(1 + x3*(C2 - x1))/(x2*x3)",
            "C1",
            "x3",
            "1/(x1 + C1*x2 - C2)",
            (),
        ),
    ],
)

# derive_factors reads each reduction step backwards: the integrating factor
# on the reduced chart, its lift, and the symmetrizing factor it converts to.
for e in rd.derive_factors(state):
    print("level %d  (certified: %s)" % (e.level, e.ok))
    print("  mu =", fmt(e.mu))
    print("  f  =", fmt(e.f))
    print("  X_%d . omega_%d =" % (e.level, e.level), fmt(e.pairing))

entries = {e.level: e for e in rd.derive_factors(state)}
dual = state.dual

# Conversion is division by the pairing, certified on both ends.
conv = fc.factor_to_integrating(dual, 2, entries[2].f)
print("\nf_2 converts to mu_2:", fmt(conv.value))
back = fc.integrating_to_factor(dual, 2, conv.value)
print("and back again:      ", fmt(back.value))

# ---------------------------------------------------------------------------
# mu_2 closes omega_2 outright.  mu_1 does not close omega_1: only the wedge
# with omega_2 vanishes.  Both facts are certified, the second with a
# concrete nonzero coefficient as the refutation.

d_mu1_w1 = exterior_derivative(dual.omega(1).scaled(entries[1].mu))
print("\nd(mu_1 omega_1) wedge omega_2 = 0:",
      wedge(d_mu1_w1, dual.omega(2)).is_zero_form())
print("d(mu_1 omega_1) = 0:", d_mu1_w1.is_zero_form())
print("  surviving coefficient on dx1^dx2:", fmt(d_mu1_w1.coeff((0, 1))))

rel = fc.check_relative_integrating_factor(dual, 1, entries[1].mu)
print("relative certificate at level 1:", rel.ok)

# A factor stays a factor under multiplication by a joint first integral of
# the members below its level, and by nothing else.
good = fc.check_symmetrizing_factor(
    state.structure, 2, entries[2].f * ch.parse("x1 + x4/(x2 - x3*x4)")
)
bad = fc.check_symmetrizing_factor(state.structure, 2, entries[2].f * ch.parse("x4"))
print("\nf_2 * I_2 certifies:", good.ok)
print("f_2 * x4 certifies:", bad.ok, " witness:", bad.witness)

# Scaling each X_k by its factor turns every lambda off.
rebuilt, cert = rd.build_solvable_structure(
    state.structure, {1: entries[1].f, 2: entries[2].f}
)
print("\nY_k = f_k X_k is standard at every level:", cert.ok)
