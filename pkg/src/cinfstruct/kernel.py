"""Exact rational-function arithmetic over opaque generators.

Every symbolic object downstream (vector field components, form coefficients,
certificates) is an :class:`Expression`: a quotient of two sparse multivariate
polynomials whose "variables" are *generators*.  A generator is either a plain
symbol (chart coordinate or constant), an abstract-function application such
as ``phi1(x)`` carrying a derivative multi-index, or an elementary application
such as ``exp(x)``.  Construction canonicalizes eagerly: products are
expanded, the gcd of numerator and denominator is removed, and the denominator
is scaled to integer-coprime coefficients with a positive leading coefficient
in a fixed graded-lexicographic monomial order.  Two expressions therefore
compare equal exactly when they are the same rational function of their
generators.

Differentiation applies registered rewrite rules on the fly, so derivative
applications at or above a rule's order never appear in a canonical
expression.  Rules must strictly lower derivative orders; a depth guard turns
accidental cross-rule cycles into :class:`~cinfstruct.errors.RewriteError`.
"""

from __future__ import annotations

import functools
import math
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Optional, Sequence, Union

from .errors import (
    RewriteError,
    SingularExpressionError,
    UnknownSymbolError,
)

__all__ = [
    "Expression",
    "Gen",
    "RewriteRule",
    "sym",
    "const_expr",
    "app",
    "elem",
    "differentiate",
    "substitute",
    "ELEMENTARY_FUNCTIONS",
    "rewrite_step_count",
    "reset_rewrite_step_count",
]

ELEMENTARY_FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt")

_SYM, _APP, _ELEM = 0, 1, 2
SYM_KIND, APP_KIND, ELEM_KIND = _SYM, _APP, _ELEM


class Gen:
    """An interned opaque generator (symbol, jet, or elementary application)."""

    __slots__ = ("kind", "name", "args", "orders", "key", "_hash")

    def __init__(self, kind, name, args, orders, key):
        self.kind = kind
        self.name = name
        self.args = args        # tuple[Expression, ...] for _APP/_ELEM, () for _SYM
        self.orders = orders    # tuple[int, ...] derivative multi-index (_APP only)
        self.key = key
        self._hash = hash(key)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other or (isinstance(other, Gen) and self.key == other.key)

    def __lt__(self, other):
        return self.key < other.key

    def __repr__(self):
        from . import syntax

        return syntax.format_gen(self)


_GEN_CACHE: dict[tuple, Gen] = {}


def _intern(kind, name, args, orders, key) -> Gen:
    g = _GEN_CACHE.get(key)
    if g is None:
        g = Gen(kind, name, args, orders, key)
        _GEN_CACHE[key] = g
    return g


def sym_gen(name: str) -> Gen:
    return _intern(_SYM, name, (), (), (_SYM, name))


def app_gen(name: str, args, orders) -> Gen:
    args = tuple(args)
    orders = tuple(int(k) for k in orders)
    if len(args) != len(orders):
        raise ValueError("argument/order arity mismatch")
    key = (_APP, name, orders, tuple(a.key for a in args))
    return _intern(_APP, name, args, orders, key)


def elem_gen(func: str, arg) -> Gen:
    if func not in ELEMENTARY_FUNCTIONS:
        raise ValueError("not an elementary function: %r" % (func,))
    key = (_ELEM, func, arg.key)
    return _intern(_ELEM, func, (arg,), (), key)


# --------------------------------------------------------------------------
# Monomials: sorted tuples of (generator, positive exponent) pairs.

_MONO_ONE: tuple = ()


def _mono_mul(m1, m2):
    if not m1:
        return m2
    if not m2:
        return m1
    out = []
    i = j = 0
    n1, n2 = len(m1), len(m2)
    while i < n1 and j < n2:
        g1, e1 = m1[i]
        g2, e2 = m2[j]
        if g1 is g2 or g1.key == g2.key:
            out.append((g1, e1 + e2))
            i += 1
            j += 1
        elif g1.key < g2.key:
            out.append(m1[i])
            i += 1
        else:
            out.append(m2[j])
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out)


def _mono_div(m1, m2):
    """m1 / m2 as a monomial, or None when not divisible."""
    if not m2:
        return m1
    have = dict((g, e) for g, e in m1)
    out = dict(have)
    for g, e in m2:
        r = out.get(g, 0) - e
        if r < 0:
            return None
        if r == 0:
            out.pop(g, None)
        else:
            out[g] = r
    return tuple(sorted(out.items(), key=lambda t: t[0].key))


def _mono_degree(m) -> int:
    return sum(e for _, e in m)


def _mono_cmp(m1, m2) -> int:
    """Graded lex: total degree first, then exponents along descending gen key."""
    d1, d2 = _mono_degree(m1), _mono_degree(m2)
    if d1 != d2:
        return -1 if d1 < d2 else 1
    i, j = len(m1) - 1, len(m2) - 1
    while i >= 0 or j >= 0:
        if i < 0:
            return -1
        if j < 0:
            return 1
        g1, e1 = m1[i]
        g2, e2 = m2[j]
        if g1.key == g2.key:
            if e1 != e2:
                return 1 if e1 > e2 else -1
            i -= 1
            j -= 1
        elif g1.key > g2.key:
            return 1
        else:
            return -1
    return 0


_MONO_KEY = functools.cmp_to_key(_mono_cmp)


# --------------------------------------------------------------------------
# Sparse polynomials.


class Poly:
    """Sparse polynomial: monomial -> nonzero Fraction coefficient."""

    __slots__ = ("terms", "_skey")

    def __init__(self, terms: dict):
        self.terms = terms
        self._skey = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def const(c) -> "Poly":
        c = Fraction(c)
        return Poly({_MONO_ONE: c} if c else {})

    @staticmethod
    def from_gen(g: Gen) -> "Poly":
        return Poly({((g, 1),): Fraction(1)})

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and _MONO_ONE in self.terms)

    def const_value(self) -> Fraction:
        if not self.terms:
            return Fraction(0)
        return self.terms[_MONO_ONE]

    def is_one(self) -> bool:
        return self.terms.get(_MONO_ONE) == 1 and len(self.terms) == 1

    # -- inspection --------------------------------------------------------

    def gens(self) -> set:
        out = set()
        for m in self.terms:
            for g, _ in m:
                out.add(g)
        return out

    def total_degree(self) -> int:
        return max((_mono_degree(m) for m in self.terms), default=0)

    def leading(self):
        """(monomial, coefficient) of the graded-lex leading term."""
        m = max(self.terms, key=_MONO_KEY)
        return m, self.terms[m]

    def sorted_terms(self):
        """Terms in descending graded-lex order (for printing and keys)."""
        return [(m, self.terms[m]) for m in sorted(self.terms, key=_MONO_KEY, reverse=True)]

    def struct_key(self) -> tuple:
        key = self._skey
        if key is None:
            key = tuple(
                (tuple((g.key, e) for g, e in m), c.numerator, c.denominator)
                for m, c in self.sorted_terms()
            )
            self._skey = key
        return key

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s = s + c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Poly(out)

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        if not self.terms or not other.terms:
            return _POLY_ZERO
        if self.is_one():
            return other
        if other.is_one():
            return self
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                c = c1 * c2
                s = out.get(m)
                if s is None:
                    out[m] = c
                else:
                    s = s + c
                    if s:
                        out[m] = s
                    else:
                        del out[m]
        return Poly(out)

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        if not c:
            return _POLY_ZERO
        if c == 1:
            return self
        return Poly({m: q * c for m, q in self.terms.items()})

    def mul_term(self, mono, coeff) -> "Poly":
        return Poly({_mono_mul(m, mono): c * coeff for m, c in self.terms.items()})

    def pow_int(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power on Poly")
        result = _POLY_ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    # -- univariate views ---------------------------------------------------

    def deg_in(self, g: Gen) -> int:
        d = 0
        for m in self.terms:
            for gg, e in m:
                if gg is g and e > d:
                    d = e
        return d

    def univ(self, g: Gen) -> dict:
        """View as univariate in g: degree -> Poly coefficient (g removed)."""
        out: dict = {}
        for m, c in self.terms.items():
            e = 0
            rest = []
            for gg, ee in m:
                if gg is g:
                    e = ee
                else:
                    rest.append((gg, ee))
            bucket = out.setdefault(e, {})
            rm = tuple(rest)
            bucket[rm] = bucket.get(rm, Fraction(0)) + c
        return {e: Poly({m: c for m, c in terms.items() if c}) for e, terms in out.items()}

    @staticmethod
    def from_univ(univ: dict, g: Gen) -> "Poly":
        out: dict = {}
        for e, coeff in univ.items():
            if coeff.is_zero():
                continue
            gm = ((g, e),) if e else _MONO_ONE
            for m, c in coeff.terms.items():
                mm = _mono_mul(m, gm)
                out[mm] = out.get(mm, Fraction(0)) + c
        return Poly({m: c for m, c in out.items() if c})


_POLY_ZERO = Poly({})
_POLY_ONE = Poly({_MONO_ONE: Fraction(1)})


# --------------------------------------------------------------------------
# Polynomial gcd (primitive PRS) and exact division.


def _rat_content(p: Poly) -> Fraction:
    """Positive rational c with p/c integer-coprime; leading sign preserved in pp."""
    num_gcd = 0
    den_lcm = 1
    for c in p.terms.values():
        num_gcd = math.gcd(num_gcd, abs(c.numerator))
        den_lcm = den_lcm * c.denominator // math.gcd(den_lcm, c.denominator)
    if num_gcd == 0:
        return Fraction(1)
    return Fraction(num_gcd, den_lcm)


def _normalize_primitive(p: Poly) -> Poly:
    """Scale to integer-coprime coefficients with positive leading coefficient."""
    if p.is_zero():
        return p
    c = _rat_content(p)
    _, lead = p.leading()
    if lead < 0:
        c = -c
    return p.scale(1 / c)


def exact_div(p: Poly, d: Poly) -> Poly:
    """Quotient p/d when the division is exact; raises otherwise."""
    if d.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    if p.is_zero():
        return _POLY_ZERO
    if d.is_const():
        return p.scale(1 / d.const_value())
    if len(d.terms) == 1:
        ((dm, dc),) = d.terms.items()
        out = {}
        for m, c in p.terms.items():
            qm = _mono_div(m, dm)
            if qm is None:
                raise ArithmeticError("non-exact polynomial division")
            out[qm] = c / dc
        return Poly(out)
    lm, lc = d.leading()
    out = {}
    r = p
    while not r.is_zero():
        rm, rc = r.leading()
        qm = _mono_div(rm, lm)
        if qm is None:
            raise ArithmeticError("non-exact polynomial division")
        qc = rc / lc
        out[qm] = qc
        r = r - d.mul_term(qm, qc)
    return Poly(out)


def _prem(p: Poly, q: Poly, g: Gen) -> Poly:
    """Pseudo-remainder of p by q with respect to g (both nonzero in g)."""
    dq = q.deg_in(g)
    lq = q.univ(g)[dq]
    r = p
    while not r.is_zero():
        dr = r.deg_in(g)
        if dr < dq:
            break
        lr = r.univ(g)[dr]
        shift = Poly.from_gen(g).pow_int(dr - dq) if dr > dq else _POLY_ONE
        r = r * lq - q * lr * shift
        if r.terms:
            c = _rat_content(r)
            if c != 1:
                r = r.scale(1 / c)
    return r


def _gcd_list(polys) -> Poly:
    ordered = sorted(polys, key=lambda p: (len(p.terms), p.total_degree()))
    acc = ordered[0]
    for p in ordered[1:]:
        if acc.is_one():
            return acc
        acc = poly_gcd(acc, p)
    return acc


def _mono_content(p: Poly):
    """Largest monomial dividing every term of p (as a sorted exponent tuple)."""
    it = iter(p.terms)
    common = dict(next(it))
    for m in it:
        if not common:
            return ()
        d = dict(m)
        for g in list(common):
            e = d.get(g, 0)
            if e <= 0:
                del common[g]
            elif e < common[g]:
                common[g] = e
    return tuple(sorted(common.items(), key=lambda t: t[0].key))


def _mono_gcd(m1, m2):
    d2 = dict(m2)
    out = []
    for g, e in m1:
        e2 = d2.get(g, 0)
        if e2:
            out.append((g, min(e, e2)))
    return tuple(out)


def _shift_out(p: Poly, m) -> Poly:
    """Divide every term of p by the monomial m (must divide all of them)."""
    if not m:
        return p
    return Poly({_mono_div(t, m): c for t, c in p.terms.items()})


_GCD_CACHE: dict = {}
_GCD_CACHE_LIMIT = 100_000


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Primitive positive gcd over the rationals (unit -> 1)."""
    if a.is_zero():
        return _normalize_primitive(b)
    if b.is_zero():
        return _normalize_primitive(a)
    if a.is_const() or b.is_const():
        return _POLY_ONE
    a = _normalize_primitive(a)
    b = _normalize_primitive(b)
    ka, kb = a.struct_key(), b.struct_key()
    if ka == kb:
        return a
    ckey = (ka, kb) if ka <= kb else (kb, ka)
    hit = _GCD_CACHE.get(ckey)
    if hit is not None:
        return hit

    # Monomial factors split off multiplicatively and cheaply.
    ma, mb = _mono_content(a), _mono_content(b)
    mc = _mono_gcd(ma, mb)
    a1 = _shift_out(a, ma)
    b1 = _shift_out(b, mb)

    g = _gcd_deflated(a1, b1)
    if mc:
        g = Poly({_mono_mul(m, mc): c for m, c in g.terms.items()})
    if len(_GCD_CACHE) >= _GCD_CACHE_LIMIT:
        _GCD_CACHE.clear()
    _GCD_CACHE[ckey] = g
    return g


def _gcd_deflated(a: Poly, b: Poly) -> Poly:
    """Primitive PRS gcd of two primitive polys with no monomial content."""
    if a.is_const() or b.is_const():
        return _POLY_ONE
    if a.terms == b.terms:
        return a
    # A one-shot exact division settles the common divisible case quickly.
    da, db = a.total_degree(), b.total_degree()
    if da != db:
        big, small = (a, b) if da > db else (b, a)
        try:
            exact_div(big, small)
            return small
        except ArithmeticError:
            pass

    g = max(a.gens() | b.gens())
    au, bu = a.univ(g), b.univ(g)
    cont_a = _gcd_list(au.values())
    cont_b = _gcd_list(bu.values())
    cont = poly_gcd(cont_a, cont_b)

    pa = Poly.from_univ({e: exact_div(c, cont_a) for e, c in au.items()}, g)
    pb = Poly.from_univ({e: exact_div(c, cont_b) for e, c in bu.items()}, g)
    if pa.deg_in(g) < pb.deg_in(g):
        pa, pb = pb, pa
    while not pb.is_zero():
        r = _prem(pa, pb, g)
        if r.is_zero():
            pa = pb
            break
        if r.deg_in(g) == 0:
            pa = _POLY_ONE
            break
        ru = r.univ(g)
        r = Poly.from_univ({e: exact_div(c, _gcd_list(ru.values())) for e, c in ru.items()}, g)
        pa, pb = pb, r

    if pa.deg_in(g) == 0:
        pp = _POLY_ONE
    else:
        pau = pa.univ(g)
        pp = Poly.from_univ({e: exact_div(c, _gcd_list(pau.values())) for e, c in pau.items()}, g)
    return _normalize_primitive(cont * pp)


# --------------------------------------------------------------------------
# Expressions: canonical quotients of polynomials.


def _normalize_pair(num: Poly, den: Poly):
    if den.is_zero():
        raise SingularExpressionError("denominator is identically zero")
    if num.is_zero():
        return _POLY_ZERO, _POLY_ONE
    if den.is_one():
        return num, den
    if not den.is_const():
        g = poly_gcd(num, den)
        if not g.is_one():
            num = exact_div(num, g)
            den = exact_div(den, g)
    if den.is_const():
        c = den.const_value()
        return (num if c == 1 else num.scale(1 / c)), _POLY_ONE
    # Scale so the denominator is integer-coprime with positive leading
    # coefficient; dividing by a monic-making rational instead lets huge
    # fractions compound across chained arithmetic.
    c = _rat_content(den)
    _, lead = den.leading()
    if lead < 0:
        c = -c
    if c != 1:
        num = num.scale(1 / c)
        den = den.scale(1 / c)
    return num, den


_Scalar = Union[int, Fraction]


class Expression:
    """Immutable canonical rational function of opaque generators."""

    __slots__ = ("num", "den", "_key", "_hash", "_complexity")

    def __init__(self, num: Poly, den: Poly = _POLY_ONE, _raw: bool = False):
        if not _raw:
            num, den = _normalize_pair(num, den)
        self.num = num
        self.den = den
        self._key = None
        self._hash = None
        self._complexity = None

    # -- identity ----------------------------------------------------------

    @property
    def key(self) -> tuple:
        k = self._key
        if k is None:
            k = ("q", self.num.struct_key(), self.den.struct_key())
            self._key = k
        return k

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self.key)
            self._hash = h
        return h

    def __eq__(self, other):
        if self is other:
            return True
        if isinstance(other, (int, Fraction)):
            other = const_expr(other)
        if not isinstance(other, Expression):
            return NotImplemented
        return self.key == other.key

    def __repr__(self):
        from . import syntax

        return syntax.format_expression(self)

    # -- predicates ----------------------------------------------------------

    def is_zero_expr(self) -> bool:
        """Canonical (syntactic) zero; see zerotest.is_zero for the graded test."""
        return self.num.is_zero()

    def is_const(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError("not a constant expression")
        return self.num.const_value() / self.den.const_value()

    # -- structure ------------------------------------------------------------

    def top_gens(self) -> set:
        return self.num.gens() | self.den.gens()

    def atoms(self) -> set:
        """All generators, descending through application arguments."""
        seen: set = set()
        stack = [self]
        while stack:
            e = stack.pop()
            for g in e.num.gens() | e.den.gens():
                if g not in seen:
                    seen.add(g)
                    stack.extend(g.args)
        return seen

    def symbols(self) -> set:
        return {g.name for g in self.atoms() if g.kind == _SYM}

    def has_elementary(self) -> bool:
        return any(g.kind == _ELEM for g in self.atoms())

    def complexity(self) -> int:
        """Node count used for pivot simplicity: smaller is simpler."""
        c = self._complexity
        if c is None:
            c = 0
            for poly in (self.num, self.den):
                for m, _ in poly.terms.items():
                    c += 1
                    for g, _e in m:
                        c += 1 + sum(a.complexity() for a in g.args)
            self._complexity = c
        return c

    # -- arithmetic ------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Expression):
            return other
        if isinstance(other, (int, Fraction)):
            return const_expr(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.den is o.den or self.den.terms == o.den.terms:
            return Expression(self.num + o.num, self.den)
        return Expression(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return Expression(-self.num, self.den, _raw=True)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Expression(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.num.is_zero():
            raise SingularExpressionError("division by an identically zero expression")
        return Expression(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k: int):
        k = int(k)
        if k == 0:
            return ONE
        if k < 0:
            if self.num.is_zero():
                raise SingularExpressionError("zero raised to a negative power")
            return Expression(self.den.pow_int(-k), self.num.pow_int(-k))
        return Expression(self.num.pow_int(k), self.den.pow_int(k))


ZERO = Expression(_POLY_ZERO, _POLY_ONE, _raw=True)
ONE = Expression(_POLY_ONE, _POLY_ONE, _raw=True)


def const_expr(c) -> Expression:
    c = Fraction(c)
    if not c:
        return ZERO
    if c == 1:
        return ONE
    return Expression(Poly.const(c), _POLY_ONE, _raw=True)


def sym(name: str) -> Expression:
    return Expression(Poly.from_gen(sym_gen(name)), _POLY_ONE, _raw=True)


def from_gen(g: Gen) -> Expression:
    return Expression(Poly.from_gen(g), _POLY_ONE, _raw=True)


# --------------------------------------------------------------------------
# Rewrite rules.


class RewriteRule:
    """``D(func, var, order) -> rhs``: defines the order-th derivative of func.

    The right-hand side is an expression in ``var`` (and anything else in
    scope) whose occurrences of ``func`` have derivative order strictly below
    ``order``, so rewriting always lowers orders and terminates.
    """

    __slots__ = ("func", "var", "order", "rhs", "text")

    def __init__(self, func: str, var: str, order: int, rhs: Expression, text: str = ""):
        order = int(order)
        if order < 1:
            raise RewriteError("rewrite order must be >= 1")
        for g in rhs.atoms():
            if g.kind == _APP and g.name == func and max(g.orders, default=0) >= order:
                raise RewriteError(
                    "rule for %s does not lower its own derivative order" % func
                )
        self.func = func
        self.var = var
        self.order = order
        self.rhs = rhs
        self.text = text

    def __repr__(self):
        return "RewriteRule(%s^(%d))" % (self.func, self.order)

    def __eq__(self, other):
        return (
            isinstance(other, RewriteRule)
            and (self.func, self.var, self.order, self.rhs)
            == (other.func, other.var, other.order, other.rhs)
        )

    def __hash__(self):
        return hash((self.func, self.var, self.order, self.rhs))


Rules = Sequence[RewriteRule]

_rewrite_steps = 0
_expansion_depth = 0
_MAX_EXPANSION_DEPTH = 200


def rewrite_step_count() -> int:
    return _rewrite_steps


def reset_rewrite_step_count() -> None:
    global _rewrite_steps
    _rewrite_steps = 0


def _rule_for(rules: Rules, name: str) -> Optional[RewriteRule]:
    for r in rules:
        if r.func == name:
            return r
    return None


def _expanded_rhs(rules_t: tuple, rule: RewriteRule, order: int) -> Expression:
    """rule.func's order-th derivative as an expression in rule.var."""
    body = rule.rhs
    for _ in range(order - rule.order):
        body = differentiate(body, rule.var, rules_t)
    return body


@functools.lru_cache(maxsize=4096)
def _expanded_rhs_cached(rules_t: tuple, func: str, order: int) -> Expression:
    rule = _rule_for(rules_t, func)
    return _expanded_rhs(rules_t, rule, order)


def app(name: str, args, orders, rules: Rules = ()) -> Expression:
    """Abstract application with rewrite rules applied to closure."""
    global _rewrite_steps, _expansion_depth
    args = tuple(args)
    orders = tuple(int(k) for k in orders)
    rules_t = tuple(rules)
    if len(args) == 1 and rules_t:
        rule = _rule_for(rules_t, name)
        if rule is not None and orders[0] >= rule.order:
            if _expansion_depth >= _MAX_EXPANSION_DEPTH:
                raise RewriteError("rewrite expansion did not terminate (cycle?)")
            _rewrite_steps += 1
            _expansion_depth += 1
            try:
                body = _expanded_rhs_cached(rules_t, name, orders[0])
                arg = args[0]
                if arg == sym(rule.var):
                    return body
                return substitute(body, {rule.var: arg}, rules_t)
            finally:
                _expansion_depth -= 1
    return from_gen(app_gen(name, args, orders))


def elem(func: str, arg: Expression) -> Expression:
    return from_gen(elem_gen(func, arg))


# --------------------------------------------------------------------------
# Differentiation.

_HALF = Fraction(1, 2)


def _diff_gen(g: Gen, var: str, rules: Rules) -> Expression:
    if g.kind == _SYM:
        return ONE if g.name == var else ZERO
    if g.kind == _APP:
        if len(g.args) == 1:
            darg = differentiate(g.args[0], var, rules)
            if darg.is_zero_expr():
                return ZERO
            return app(g.name, g.args, (g.orders[0] + 1,), rules) * darg
        # Multi-argument applications are opaque: representable only while
        # their derivative in this direction vanishes.
        if all(differentiate(a, var, rules).is_zero_expr() for a in g.args):
            return ZERO
        raise RewriteError(
            "cannot differentiate multi-argument function %r in %s; "
            "model it as univariate applications with rewrite rules" % (g.name, var)
        )
    # elementary
    arg = g.args[0]
    darg = differentiate(arg, var, rules)
    if darg.is_zero_expr():
        return ZERO
    f = g.name
    if f == "exp":
        outer = from_gen(g)
    elif f == "ln":
        outer = ONE / arg
    elif f == "sin":
        outer = elem("cos", arg)
    elif f == "cos":
        outer = -elem("sin", arg)
    elif f == "sqrt":
        outer = const_expr(_HALF) / from_gen(g)
    else:  # pragma: no cover - elem_gen rejects unknown names
        raise RewriteError("no derivative rule for %r" % f)
    return outer * darg


def _diff_poly(p: Poly, var: str, rules: Rules) -> Expression:
    total = ZERO
    for m, c in p.terms.items():
        for idx, (g, e) in enumerate(m):
            dg = _diff_gen(g, var, rules)
            if dg.is_zero_expr():
                continue
            rest = list(m)
            if e == 1:
                del rest[idx]
            else:
                rest[idx] = (g, e - 1)
            piece = Expression(Poly({tuple(rest): c * e}), _POLY_ONE, _raw=True)
            total = total + piece * dg
    return total


def differentiate(e: Expression, var: str, rules: Rules = ()) -> Expression:
    """Partial derivative with rewrite rules applied to closure."""
    dn = _diff_poly(e.num, var, rules)
    if e.den.is_one():
        return dn
    dd = _diff_poly(e.den, var, rules)
    den = Expression(e.den, _POLY_ONE, _raw=True)
    num = Expression(e.num, _POLY_ONE, _raw=True)
    return (dn * den - num * dd) / (den * den)


# --------------------------------------------------------------------------
# Substitution.


def substitute(e: Expression, bindings: Mapping[str, Expression], rules: Rules = ()) -> Expression:
    """Simultaneous substitution of symbols by expressions."""
    coerced = {}
    for k, v in bindings.items():
        if isinstance(v, (int, Fraction)):
            v = const_expr(v)
        coerced[k] = v
    memo: dict = {}
    result = _subst_expr(e, coerced, tuple(rules), memo)
    return result


def _subst_expr(e: Expression, b, rules, memo) -> Expression:
    got = memo.get(id(e))
    if got is not None:
        return got
    n = _subst_poly(e.num, b, rules, memo)
    d = _subst_poly(e.den, b, rules, memo)
    if d.is_zero_expr():
        raise SingularExpressionError("substitution makes a denominator identically zero")
    out = n / d
    memo[id(e)] = out
    return out


def _subst_poly(p: Poly, b, rules, memo) -> Expression:
    total = ZERO
    for m, c in p.terms.items():
        piece = const_expr(c)
        for g, e in m:
            piece = piece * (_subst_gen(g, b, rules, memo) ** e)
        total = total + piece
    return total


def _subst_gen(g: Gen, b, rules, memo) -> Expression:
    if g.kind == _SYM:
        image = b.get(g.name)
        return image if image is not None else from_gen(g)
    new_args = tuple(_subst_expr(a, b, rules, memo) for a in g.args)
    if new_args == g.args:
        return from_gen(g)
    if g.kind == _APP:
        return app(g.name, new_args, g.orders, rules)
    return elem(g.name, new_args[0])
