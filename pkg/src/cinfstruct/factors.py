"""Symmetrizing factors, relative integrating factors, and conversions.

A symmetrizing factor at level i0 is a nonvanishing f with V(f) = lambda_V f
for every member V below that level, where lambda_V is the certified
coefficient of X_{i0} in [X_{i0}, V].  A relative integrating factor at the
same level is a nonvanishing mu with d(mu omega_{i0}) wedge omega_{i0+1}
wedge ... wedge omega_m = 0 (plain closedness at the top level).  The two
are interchangeable through mu = 1 / (f * (X_{i0} . omega_{i0})), and a
first integral F at that level yields f = 1 / X_{i0}(F).

The bottom of the ladder is classical: an exact M dx + N du integrates to a
primitive by two one-dimensional quadratures along an L-shaped path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from scipy.integrate import quad

from . import kernel, syntax
from .calculus import KForm, apply_field, exterior_derivative, interior_product, wedge
from .certs import Certificate, CheckItem, bundle
from .charts import Chart
from .errors import EvaluationError, SingularExpressionError
from .kernel import Expression
from .structures import CinfStructure, DualForms
from .zerotest import DEFAULT_POLICY, ZeroTestPolicy, is_zero

__all__ = [
    "check_symmetrizing_factor",
    "check_relative_integrating_factor",
    "ConversionResult",
    "factor_to_integrating",
    "integrating_to_factor",
    "factor_from_first_integral",
    "factor_quotient_check",
    "PrimitiveResult",
    "primitive_by_quadrature",
]


def _check_level(m: int, i0: int) -> None:
    if not 1 <= i0 <= m:
        raise ValueError("level %d out of range 1..%d" % (i0, m))


def check_symmetrizing_factor(
    structure: CinfStructure,
    i0: int,
    f,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
) -> Certificate:
    """Certify V(f) = lambda_V * f for every member below level i0."""
    _check_level(structure.corank, i0)
    chart = structure.chart
    f = chart.coerce(f)
    members, lambdas = structure.level_factor_data(i0)
    items = [CheckItem("f is nonvanishing", is_zero(f, policy), expect_zero=False)]
    for k, (V, lam) in enumerate(zip(members, lambdas)):
        vname = V.name or "V%d" % (k + 1)
        residual = apply_field(V, f) - lam * f
        items.append(
            CheckItem("%s(f) = lambda*f" % vname, is_zero(residual, policy))
        )
    return bundle(
        "symmetrizing-factor",
        items,
        loci=[f],
        level=i0,
        f=syntax.format_expression(f),
    )


def _trailing_wedge(dual: DualForms, i0: int) -> Optional[KForm]:
    """omega_{i0+1} wedge ... wedge omega_m, or None at the top level."""
    m = len(dual.omegas)
    tail = None
    for j in range(i0, m):
        tail = dual.omegas[j] if tail is None else wedge(tail, dual.omegas[j])
    return tail


def check_relative_integrating_factor(
    dual: DualForms,
    i0: int,
    mu,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
) -> Certificate:
    """Certify d(mu omega_i0) wedge (trailing omegas) = 0."""
    m = len(dual.omegas)
    _check_level(m, i0)
    chart = dual.chart
    mu = chart.coerce(mu)
    items = [CheckItem("mu is nonvanishing", is_zero(mu, policy), expect_zero=False)]
    closed = exterior_derivative(dual.omega(i0).scaled(mu))
    tail = _trailing_wedge(dual, i0)
    target = closed if tail is None else wedge(closed, tail)
    what = (
        "d(mu omega_%d) = 0" % i0
        if tail is None
        else "d(mu omega_%d) wedge omega_%d..omega_%d = 0" % (i0, i0 + 1, m)
    )
    if not target.coeffs:
        items.append(CheckItem(what, is_zero(kernel.ZERO, policy)))
    for idx, c in target.coeffs:
        items.append(
            CheckItem(
                "%s [%s]" % (what, target.basis_label(idx)),
                is_zero(c, policy),
            )
        )
    return bundle(
        "relative-integrating-factor",
        items,
        loci=[mu],
        level=i0,
        mu=syntax.format_expression(mu),
    )


@dataclass(frozen=True)
class ConversionResult:
    """A converted factor with the pairing it divides by and its certificate."""

    value: Expression
    pairing: Expression
    certificate: Certificate

    @property
    def ok(self) -> bool:
        return self.certificate.ok


def _pairing(dual: DualForms, i0: int) -> Expression:
    X = dual.structure.fields[i0 - 1]
    return interior_product(X, dual.omega(i0)).coeff(())


def factor_to_integrating(
    dual: DualForms,
    i0: int,
    f,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    verify: bool = True,
) -> ConversionResult:
    """mu = 1 / (f * (X_i0 . omega_i0)), certified on both ends."""
    _check_level(len(dual.omegas), i0)
    chart = dual.chart
    f = chart.coerce(f)
    pairing = _pairing(dual, i0)
    if f.is_zero_expr() or pairing.is_zero_expr():
        raise SingularExpressionError("conversion divides by a vanishing product")
    mu = kernel.ONE / (f * pairing)
    items = []
    payload = {"level": i0, "direction": "f->mu", "mu": syntax.format_expression(mu)}
    if verify:
        inp = check_symmetrizing_factor(dual.structure, i0, f, policy)
        out = check_relative_integrating_factor(dual, i0, mu, policy)
        items = list(inp.items) + list(out.items)
        payload["input"] = inp.as_json()
        payload["output"] = out.as_json()
    cert = bundle("factor-conversion", items, loci=[f, pairing], **payload)
    return ConversionResult(mu, pairing, cert)


def integrating_to_factor(
    dual: DualForms,
    i0: int,
    mu,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    verify: bool = True,
) -> ConversionResult:
    """f = 1 / (mu * (X_i0 . omega_i0)), certified on both ends."""
    _check_level(len(dual.omegas), i0)
    chart = dual.chart
    mu = chart.coerce(mu)
    pairing = _pairing(dual, i0)
    if mu.is_zero_expr() or pairing.is_zero_expr():
        raise SingularExpressionError("conversion divides by a vanishing product")
    f = kernel.ONE / (mu * pairing)
    items = []
    payload = {"level": i0, "direction": "mu->f", "f": syntax.format_expression(f)}
    if verify:
        inp = check_relative_integrating_factor(dual, i0, mu, policy)
        out = check_symmetrizing_factor(dual.structure, i0, f, policy)
        items = list(inp.items) + list(out.items)
        payload["input"] = inp.as_json()
        payload["output"] = out.as_json()
    cert = bundle("factor-conversion", items, loci=[mu, pairing], **payload)
    return ConversionResult(f, pairing, cert)


def factor_from_first_integral(
    dual: DualForms,
    i0: int,
    F,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    verify: bool = True,
) -> ConversionResult:
    """f = 1 / X_i0(F) for a first integral F of everything below level i0.

    Raises SingularExpressionError when X_i0 annihilates F, since no factor
    lies along that field.  The precondition dF wedge omega_i0 = 0 enters
    the certificate when verify is set.
    """
    _check_level(len(dual.omegas), i0)
    chart = dual.chart
    F = chart.coerce(F)
    X = dual.structure.fields[i0 - 1]
    derivative = apply_field(X, F)
    if derivative.is_zero_expr():
        raise SingularExpressionError(
            "the level-%d field annihilates the candidate integral" % i0
        )
    f = kernel.ONE / derivative
    items = []
    payload = {"level": i0, "f": syntax.format_expression(f)}
    if verify:
        from .calculus import d_of_function

        dF = d_of_function(chart, F)
        prec = wedge(dF, dual.omega(i0))
        for idx, c in prec.coeffs:
            items.append(
                CheckItem(
                    "dF wedge omega_%d = 0 [%s]" % (i0, prec.basis_label(idx)),
                    is_zero(c, policy),
                )
            )
        items.append(
            CheckItem("X_%d(F) is nonvanishing" % i0, is_zero(derivative, policy), expect_zero=False)
        )
        out = check_symmetrizing_factor(dual.structure, i0, f, policy)
        items.extend(out.items)
        payload["output"] = out.as_json()
    cert = bundle("factor-from-integral", items, loci=[derivative], **payload)
    return ConversionResult(f, derivative, cert)


def factor_quotient_check(
    structure: CinfStructure,
    i0: int,
    f_a,
    f_b,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
) -> Certificate:
    """The ratio of two level-i0 factors is a joint first integral below it."""
    _check_level(structure.corank, i0)
    chart = structure.chart
    f_a = chart.coerce(f_a)
    f_b = chart.coerce(f_b)
    ratio = f_b / f_a
    members, _lambdas = structure.level_factor_data(i0)
    items = [
        CheckItem("f_a is nonvanishing", is_zero(f_a, policy), expect_zero=False),
        CheckItem("f_b is nonvanishing", is_zero(f_b, policy), expect_zero=False),
    ]
    for k, V in enumerate(members):
        vname = V.name or "V%d" % (k + 1)
        items.append(
            CheckItem(
                "%s(f_b/f_a) = 0" % vname,
                is_zero(apply_field(V, ratio), policy),
            )
        )
    return bundle(
        "factor-quotient",
        items,
        loci=[f_a, f_b],
        level=i0,
        ratio=syntax.format_expression(ratio),
    )


# ---------------------------------------------------------------------------
# Classical two-variable quadrature.

_MATH_ELEM = {
    "exp": math.exp,
    "ln": math.log,
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": math.sqrt,
}


def _float_gen(g, env):
    if g.kind == kernel.SYM_KIND:
        try:
            return env[g.name]
        except KeyError:
            raise EvaluationError("no value for %s" % g.name) from None
    if g.kind == kernel.ELEM_KIND:
        arg = _float_expr(g.args[0], env)
        try:
            return _MATH_ELEM[g.name](arg)
        except ValueError as exc:
            raise EvaluationError("%s(%r): %s" % (g.name, arg, exc)) from None
    raise EvaluationError(
        "quadrature needs numeric coefficients; %r is abstract" % g.name
    )


def _float_poly(p, env):
    total = 0.0
    for mono, coeff in p.terms.items():
        val = float(coeff)
        for g, e in mono:
            val *= _float_gen(g, env) ** e
        total += val
    return total


def _float_expr(e: Expression, env) -> float:
    num = _float_poly(e.num, env)
    den = _float_poly(e.den, env)
    if den == 0.0:
        raise EvaluationError("denominator vanished at %r" % (env,))
    return num / den


def float_evaluator(chart: Chart, expr) -> Callable[..., float]:
    """A plain-float callable in the chart's coordinate order."""
    expr = chart.coerce(expr)
    coords = chart.coords

    def fn(*args: float) -> float:
        if len(args) != len(coords):
            raise EvaluationError(
                "expected %d coordinates, got %d" % (len(coords), len(args))
            )
        return _float_expr(expr, dict(zip(coords, args)))

    return fn


@dataclass(frozen=True)
class PrimitiveResult:
    """A primitive of an exact form, evaluable by quadrature from a base point."""

    chart: Chart
    form: KForm
    base: tuple[float, float]
    func: Callable[[float, float], float]
    certificate: Certificate

    @property
    def ok(self) -> bool:
        return self.certificate.ok

    def __call__(self, x: float, u: float) -> float:
        return self.func(x, u)


def primitive_by_quadrature(
    form: KForm,
    base: tuple[float, float] = (0.0, 0.0),
    policy: ZeroTestPolicy = DEFAULT_POLICY,
    spot_checks: int = 4,
    quad_tol: float = 1e-10,
) -> PrimitiveResult:
    """Integrate an exact M dx + N du along the L-shaped path from base.

    F(x, u) = int_{x0}^{x} M(t, u) dt + int_{u0}^{u} N(x0, t) dt.  Closedness
    is certified symbolically; the gradient of F is spot-checked against
    (M, N) by central differences near the base point.
    """
    chart = form.chart
    if chart.dim != 2 or form.degree != 1:
        raise ValueError("quadrature expects a 1-form on a 2-coordinate chart")
    M = form.coeff((0,))
    N = form.coeff((1,))
    closed = exterior_derivative(form)
    items = [
        CheckItem("the form is closed", is_zero(closed.coeff((0, 1)), policy))
    ]

    m_fn = float_evaluator(chart, M)
    n_fn = float_evaluator(chart, N)
    x0, u0 = float(base[0]), float(base[1])

    def F(x: float, u: float) -> float:
        first, _err1 = quad(
            lambda t: m_fn(t, u), x0, x, epsabs=quad_tol, epsrel=quad_tol, limit=200
        )
        second, _err2 = quad(
            lambda t: n_fn(x0, t), u0, u, epsabs=quad_tol, epsrel=quad_tol, limit=200
        )
        return first + second

    # Central-difference spot checks on a small ring around the base point.
    from .zerotest import Certainty, ZeroTestResult

    h = 1e-5
    tol = 1e-5
    worst = 0.0
    for k in range(spot_checks):
        ang = 2.0 * math.pi * (k + 0.5) / spot_checks
        px = x0 + 0.7 * math.cos(ang)
        pu = u0 + 0.7 * math.sin(ang)
        try:
            dx = (F(px + h, pu) - F(px - h, pu)) / (2 * h)
            du = (F(px, pu + h) - F(px, pu - h)) / (2 * h)
            err = max(abs(dx - m_fn(px, pu)), abs(du - n_fn(px, pu)))
        except EvaluationError:
            continue
        worst = max(worst, err)
    items.append(
        CheckItem(
            "gradient of F matches the form (central differences)",
            ZeroTestResult(
                Certainty.PROVED_ZERO if worst <= tol else Certainty.NONZERO,
                1.0,
                witness_value="%.3e" % worst,
            ),
        )
    )
    cert = bundle(
        "primitive-by-quadrature",
        items,
        base=[x0, u0],
        max_gradient_error="%.3e" % worst,
    )
    return PrimitiveResult(chart, form, (x0, u0), F, cert)