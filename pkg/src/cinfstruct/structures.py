"""Involutive distributions, ordered symmetry structures, dual 1-forms.

A distribution is spanned by independent generators Z_1..Z_r; an ordered
family X_1..X_{n-r} is certified level by level: X_k must bracket back into
the span of {X_k} and the previous members, i.e. [X_k, V] = lambda_V X_k +
(span part) for every earlier member V.  The dual coframe is produced by
contracting the volume form with all but one of the fields, normalized by the
full contraction Delta, and is cross-checked against the cofactor expansion
of the coefficient matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from . import kernel, linalg
from .calculus import (
    KForm,
    VectorField,
    apply_field,
    interior_product,
    lie_bracket,
    volume_form,
)
from .certs import Certificate, CheckItem, bundle, fmt_loci
from .charts import Chart
from .errors import ChartError, InconsistentSystemError, RankDeficientError
from .kernel import Expression
from .zerotest import (
    DEFAULT_POLICY,
    Certainty,
    ZeroTestPolicy,
    ZeroTestResult,
    is_zero,
)

__all__ = [
    "Distribution",
    "Decomposition",
    "SymmetryResult",
    "CinfStructure",
    "DualForms",
    "NormalizedDual",
    "RescaleResult",
    "check_independent",
    "check_involutive",
    "decompose_in_span",
    "check_cinf_symmetry",
    "check_cinf_structure",
    "dual_one_forms",
    "normalize_dual",
    "rescale_symmetry",
]


def _label(field: VectorField, fallback: str) -> str:
    return field.name or fallback


@dataclass(frozen=True)
class Distribution:
    """The span of an ordered tuple of generator fields."""

    chart: Chart
    generators: tuple[VectorField, ...]

    def __post_init__(self):
        for g in self.generators:
            if g.chart != self.chart:
                raise ChartError("generator %r lives off-chart" % (g.name or "?",))

    @property
    def rank(self) -> int:
        return len(self.generators)

    def names(self) -> tuple[str, ...]:
        return tuple(
            _label(g, "Z%d" % (i + 1)) for i, g in enumerate(self.generators)
        )


def check_independent(
    chart: Chart,
    fields: Sequence[VectorField],
    policy: ZeroTestPolicy = DEFAULT_POLICY,
) -> Certificate:
    """Certify generic pointwise independence of the fields.

    The rank comes from symbolic elimination; the pivots are the singular
    loci, and the witness point (in the payload) makes all pivots nonzero.
    """
    matrix = [list(f.components) for f in fields]
    rank, pivots, witness = linalg.rank_certified(matrix, policy)
    ok = rank == len(fields)
    items = []
    if pivots:
        product = None
        for p in pivots:
            product = p if product is None else product * p
        items.append(
            CheckItem("pivot product is nonzero", is_zero(product, policy), expect_zero=False)
        )
    payload = {"rank": rank, "fields": len(list(fields))}
    if witness is not None:
        payload["witness_point"] = witness.as_json()
    cert = bundle("independence", items, loci=pivots, **payload)
    return Certificate(cert.kind, ok and cert.ok, cert.items, cert.loci, cert.payload)


@dataclass(frozen=True)
class Decomposition:
    """Coefficients of a field over an ordered basis of fields."""

    coefficients: tuple[Expression, ...]
    basis_names: tuple[str, ...]
    pivots: tuple[Expression, ...]

    def coefficient(self, name: str) -> Expression:
        return self.coefficients[self.basis_names.index(name)]

    def as_json(self):
        from . import syntax

        return {
            n: syntax.format_expression(c)
            for n, c in zip(self.basis_names, self.coefficients)
        }


def decompose_in_span(
    field: VectorField,
    basis: Sequence[VectorField],
    policy: ZeroTestPolicy = DEFAULT_POLICY,
) -> Decomposition:
    """Write field = sum of coefficients * basis, or raise.

    InconsistentSystemError (with witness) when the field leaves the span;
    RankDeficientError when the basis is dependent so coefficients are not
    unique.
    """
    basis = list(basis)
    if not basis:
        raise ValueError("empty basis")
    chart = basis[0].chart
    if field.chart != chart:
        raise ChartError("field and basis live on different charts")
    matrix = [[b.components[i] for b in basis] for i in range(chart.dim)]
    rhs = list(field.components)
    sol = linalg.solve_linear(matrix, rhs, policy)
    names = tuple(_label(b, "B%d" % (i + 1)) for i, b in enumerate(basis))
    return Decomposition(sol.values, names, sol.pivots)


@dataclass(frozen=True)
class BracketRecord:
    left: str
    right: str
    decomposition: Optional[Decomposition]


def check_involutive(
    dist: Distribution, policy: ZeroTestPolicy = DEFAULT_POLICY
) -> tuple[Certificate, tuple[BracketRecord, ...]]:
    """All pairwise brackets of generators decompose back into the span."""
    gens = dist.generators
    names = dist.names()
    records = []
    items = []
    loci: list[Expression] = []
    table = {}
    for i in range(len(gens)):
        for j in range(i + 1, len(gens)):
            br = lie_bracket(gens[i], gens[j])
            label = "[%s, %s] in span" % (names[i], names[j])
            try:
                dec = decompose_in_span(br, gens, policy)
            except InconsistentSystemError as exc:
                res = ZeroTestResult(Certainty.NONZERO, 1.0, exc.witness)
                items.append(CheckItem(label, res, expect_zero=True))
                records.append(BracketRecord(names[i], names[j], None))
                continue
            items.append(CheckItem(label, ZeroTestResult(Certainty.PROVED_ZERO, 1.0)))
            loci.extend(dec.pivots)
            records.append(BracketRecord(names[i], names[j], dec))
            table["[%s, %s]" % (names[i], names[j])] = dec.as_json()
    cert = bundle("involutivity", items, loci=loci, structure_constants=table)
    return cert, tuple(records)


@dataclass(frozen=True)
class SymmetryResult:
    """Certified bracket decompositions of one candidate symmetry field."""

    field: VectorField
    members: tuple[VectorField, ...]
    lambdas: tuple[Expression, ...]          # coefficient of the field itself
    coefficients: tuple[tuple[Expression, ...], ...]  # span part per member
    certificate: Certificate

    @property
    def ok(self) -> bool:
        return self.certificate.ok

    @property
    def standard(self) -> bool:
        """True when every lambda is canonically zero (a standard symmetry)."""
        return all(l.is_zero_expr() for l in self.lambdas)


def check_cinf_symmetry(
    dist_or_members,
    field: VectorField,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
) -> SymmetryResult:
    """Certify [field, V] = lambda_V field + span(members) for each member V.

    Members may be a Distribution or an explicit sequence of fields; the
    decomposition basis is (members..., field), so the last coefficient of
    each decomposition is lambda_V.
    """
    if isinstance(dist_or_members, Distribution):
        members = tuple(dist_or_members.generators)
    else:
        members = tuple(dist_or_members)
    basis = list(members) + [field]
    fname = _label(field, "X")
    indep = check_independent(field.chart, basis, policy)
    # Independence enters through the certificate payload; items hold the
    # bracket checks.
    items = []
    lambdas = []
    coeffs = []
    loci: list[Expression] = []
    ok_overall = indep.ok
    for k, V in enumerate(members):
        vname = _label(V, "V%d" % (k + 1))
        br = lie_bracket(field, V)
        label = "[%s, %s] in span{%s, %s}" % (
            fname,
            vname,
            ", ".join(_label(m, "?") for m in members),
            fname,
        )
        try:
            dec = decompose_in_span(br, basis, policy)
        except InconsistentSystemError as exc:
            items.append(
                CheckItem(label, ZeroTestResult(Certainty.NONZERO, 1.0, exc.witness))
            )
            lambdas.append(kernel.ZERO)
            coeffs.append(tuple(kernel.ZERO for _ in members))
            ok_overall = False
            continue
        items.append(CheckItem(label, ZeroTestResult(Certainty.PROVED_ZERO, 1.0)))
        lambdas.append(dec.coefficients[-1])
        coeffs.append(dec.coefficients[:-1])
        loci.extend(dec.pivots)
    cert = bundle(
        "cinf-symmetry",
        items,
        loci=loci,
        field=fname,
        independence=indep.as_json(),
    )
    cert = Certificate(cert.kind, cert.ok and ok_overall, cert.items, cert.loci, cert.payload)
    return SymmetryResult(field, members, tuple(lambdas), tuple(coeffs), cert)


@dataclass(frozen=True)
class CinfStructure:
    """An ordered family certified level by level over a distribution."""

    distribution: Distribution
    fields: tuple[VectorField, ...]
    levels: tuple[SymmetryResult, ...]
    independence: Certificate
    involutivity: Certificate

    @property
    def chart(self) -> Chart:
        return self.distribution.chart

    @property
    def ok(self) -> bool:
        return (
            self.independence.ok
            and self.involutivity.ok
            and all(l.ok for l in self.levels)
        )

    @property
    def corank(self) -> int:
        return len(self.fields)

    def field_names(self) -> tuple[str, ...]:
        return tuple(_label(f, "X%d" % (i + 1)) for i, f in enumerate(self.fields))

    def level(self, i0: int) -> SymmetryResult:
        """1-based level access (level i0 certifies X_{i0})."""
        return self.levels[i0 - 1]

    def level_factor_data(self, i0: int):
        """(member fields, lambda expressions) constraining level-i0 factors."""
        lv = self.level(i0)
        return lv.members, lv.lambdas

    def certificate(self) -> Certificate:
        items = []
        for lv in self.levels:
            items.extend(lv.certificate.items)
        loci = []
        for lv in self.levels:
            loci.extend(lv.certificate.loci)
        payload = {
            "independence": self.independence.as_json(),
            "involutivity": self.involutivity.as_json(),
            "levels": [lv.certificate.as_json() for lv in self.levels],
            "standard_flags": [lv.standard for lv in self.levels],
        }
        return Certificate(
            "cinf-structure",
            self.ok,
            tuple(items),
            tuple(loci),
            tuple(sorted(payload.items())),
        )


def check_cinf_structure(
    dist: Distribution,
    fields: Sequence[VectorField],
    policy: ZeroTestPolicy = DEFAULT_POLICY,
) -> CinfStructure:
    """Certify an ordered family as a structure over the distribution.

    Level k checks X_k against members {generators, X_1..X_{k-1}}; the full
    family {generators, X_1..X_{n-r}} must have rank n on the chart.
    """
    fields = tuple(fields)
    chart = dist.chart
    if dist.rank + len(fields) != chart.dim:
        raise ChartError(
            "structure needs %d fields on top of rank %d in dimension %d"
            % (chart.dim - dist.rank, dist.rank, chart.dim)
        )
    indep = check_independent(chart, list(dist.generators) + list(fields), policy)
    invol, _records = check_involutive(dist, policy)
    levels = []
    for k in range(1, len(fields) + 1):
        members = tuple(dist.generators) + tuple(fields[: k - 1])
        levels.append(check_cinf_symmetry(members, fields[k - 1], policy))
    return CinfStructure(dist, fields, tuple(levels), indep, invol)


# ---------------------------------------------------------------------------
# Dual coframe.


@dataclass(frozen=True)
class DualForms:
    """The 1-forms dual (up to sign and Delta) to the structure fields."""

    structure: CinfStructure
    delta: Expression
    omegas: tuple[KForm, ...]
    certificate: Certificate

    @property
    def chart(self) -> Chart:
        return self.structure.chart

    def omega(self, i0: int) -> KForm:
        return self.omegas[i0 - 1]


def dual_one_forms(
    structure: CinfStructure, policy: ZeroTestPolicy = DEFAULT_POLICY
) -> DualForms:
    """Contract the volume form against all fields but one, per level.

    omega_i omits X_i from the contraction sequence (generators first, then
    the structure fields in order); Delta is the full contraction.  Each
    omega_i is cross-checked against the cofactor expansion of the field
    matrix, and the annihilation and pairing identities are certified.
    """
    chart = structure.chart
    vol = volume_form(chart)
    zs = list(structure.distribution.generators)
    xs = list(structure.fields)
    n = chart.dim
    r = len(zs)
    m = len(xs)

    delta_form = vol
    for F in zs + xs:
        delta_form = interior_product(F, delta_form)
    delta = delta_form.coeff(())

    omegas = []
    for i in range(m):
        w = vol
        for F in zs + xs[:i] + xs[i + 1 :]:
            w = interior_product(F, w)
        omegas.append(w)

    items = []
    loci: list[Expression] = [delta]
    items.append(CheckItem("Delta is nonzero", is_zero(delta, policy), expect_zero=False))

    # Cofactor cross-check: omega_i^j equals the determinant of the field
    # matrix with row X_i replaced at the end by the j-th coordinate row.
    all_fields = zs + xs
    for i in range(m):
        others = [list(f.components) for k, f in enumerate(all_fields) if k != r + i]
        for j in range(n):
            unit_row = [kernel.ONE if c == j else kernel.ZERO for c in range(n)]
            cof = linalg.det(others + [unit_row])
            diff = omegas[i].coeff((j,)) - cof
            items.append(
                CheckItem(
                    "omega_%d d%s matches cofactor" % (i + 1, chart.coords[j]),
                    is_zero(diff, policy),
                )
            )

    # Annihilation and pairing.
    for zi, Z in enumerate(zs):
        zname = _label(Z, "Z%d" % (zi + 1))
        for i in range(m):
            val = interior_product(Z, omegas[i]).coeff(())
            items.append(
                CheckItem("%s . omega_%d = 0" % (zname, i + 1), is_zero(val, policy))
            )
    for xi, X in enumerate(xs):
        xname = _label(X, "X%d" % (xi + 1))
        for i in range(m):
            val = interior_product(X, omegas[i]).coeff(())
            if xi == i:
                sign = -1 if (m - 1 - i) % 2 else 1
                expected = delta if sign > 0 else -delta
                items.append(
                    CheckItem(
                        "%s . omega_%d = %sDelta" % (xname, i + 1, "" if sign > 0 else "-"),
                        is_zero(val - expected, policy),
                    )
                )
            else:
                items.append(
                    CheckItem("%s . omega_%d = 0" % (xname, i + 1), is_zero(val, policy))
                )

    cert = bundle("dual-forms", items, loci=loci, delta=_fmt(delta))
    return DualForms(structure, delta, tuple(omegas), cert)


def _fmt(e: Expression) -> str:
    from . import syntax

    return syntax.format_expression(e)


@dataclass(frozen=True)
class NormalizedDual:
    """sigma_i = (-1)^(m-i)/Delta * omega_i with X_i . sigma_j = delta_ij."""

    dual: DualForms
    sigmas: tuple[KForm, ...]
    certificate: Certificate


def normalize_dual(
    dual: DualForms, policy: ZeroTestPolicy = DEFAULT_POLICY
) -> NormalizedDual:
    m = len(dual.omegas)
    sigmas = []
    for i, w in enumerate(dual.omegas, start=1):
        sign = -1 if (m - i) % 2 else 1
        scale = kernel.const_expr(sign) / dual.delta
        sigmas.append(w.scaled(scale))
    items = []
    xs = dual.structure.fields
    for i, X in enumerate(xs):
        for j, s in enumerate(sigmas):
            val = interior_product(X, s).coeff(())
            expected = kernel.ONE if i == j else kernel.ZERO
            items.append(
                CheckItem(
                    "X%d . sigma_%d = %d" % (i + 1, j + 1, 1 if i == j else 0),
                    is_zero(val - expected, policy),
                )
            )
    cert = bundle("normalized-dual", items, loci=[dual.delta])
    return NormalizedDual(dual, tuple(sigmas), cert)


# ---------------------------------------------------------------------------
# Rescaling.


@dataclass(frozen=True)
class RescaleResult:
    field: VectorField
    lambdas: tuple[Expression, ...]
    coefficients: tuple[tuple[Expression, ...], ...]
    certificate: Certificate


def rescale_symmetry(
    field_or_result,
    h,
    dist_or_members,
    policy: ZeroTestPolicy = DEFAULT_POLICY,
) -> RescaleResult:
    """Rescale a certified symmetry X by nonvanishing h and re-certify hX.

    The predicted law lambda' = lambda - V(h)/h and span' = h * span is
    verified coefficient by coefficient against a direct re-decomposition of
    the brackets of hX.
    """
    if isinstance(field_or_result, SymmetryResult):
        base = field_or_result
    else:
        base = check_cinf_symmetry(dist_or_members, field_or_result, policy)
        if not base.ok:
            from .errors import CertificationError

            raise CertificationError(
                "cannot rescale: the field is not a certified symmetry",
                certificate=base.certificate,
            )
    X = base.field
    chart = X.chart
    h = chart.coerce(h)
    items = [CheckItem("h is nonvanishing", is_zero(h, policy), expect_zero=False)]
    newname = ("h*%s" % X.name) if X.name else "h*X"
    Y = X.scaled(h, name=newname)
    direct = check_cinf_symmetry(base.members, Y, policy)
    lam_pred = []
    coef_pred = []
    for k, V in enumerate(base.members):
        vname = _label(V, "V%d" % (k + 1))
        lp = base.lambdas[k] - apply_field(V, h) / h
        cp = tuple(h * c for c in base.coefficients[k])
        lam_pred.append(lp)
        coef_pred.append(cp)
        items.append(
            CheckItem(
                "lambda'[%s] matches rescaling law" % vname,
                is_zero(direct.lambdas[k] - lp, policy),
            )
        )
        for j, (a, b) in enumerate(zip(direct.coefficients[k], cp)):
            items.append(
                CheckItem(
                    "span coefficient %d of [%s] scales by h" % (j + 1, vname),
                    is_zero(a - b, policy),
                )
            )
    cert = bundle("rescale-symmetry", items, loci=[h], direct=direct.certificate.as_json())
    ok = cert.ok and direct.ok
    cert = Certificate(cert.kind, ok, cert.items, cert.loci, cert.payload)
    return RescaleResult(Y, tuple(lam_pred), tuple(coef_pred), cert)