"""Exact polynomials in chart coordinates and truncated power series in t.

Two layers live here.  :class:`ZPoly` is a sparse multivariate polynomial
with :class:`fractions.Fraction` coefficients, used for every function of
the chart coordinates ``z`` (or ambient coordinates ``w``).  No truncation
in ``z`` ever happens; degrees grow freely under composition.

:class:`TruncatedSeries` is a vector-valued power series in the deformation
parameters ``t = (t_1, ..., t_d)`` whose coefficients are vectors of
``ZPoly``.  The only truncation axis is the total ``t``-degree::

    f(z, t) = sum_{|alpha| <= order} t^alpha * (f_alpha^1(z), ..., f_alpha^N(z))

Multi-indices are tuples of ints, ordered ascending graded-lex
(total degree first, then lexicographic) wherever an order is observable.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import factorial
from typing import Iterable, Mapping, Sequence

__all__ = [
    "StructureError",
    "ZPoly",
    "TruncatedSeries",
    "grlex_key",
    "multi_indices",
    "multinomial",
    "parse_rational",
    "format_rational",
    "compose_ambient",
    "compose_fiber",
    "homogeneous_part",
    "tail_from",
    "truncate",
    "congruent_mod",
    "first_difference",
    "jacobian_at_center",
    "matvec",
    "poly_to_json",
    "poly_from_json",
    "polyvec_to_json",
    "polyvec_from_json",
    "series_to_json",
    "series_from_json",
]


class StructureError(ValueError):
    """Arity or dimension mismatch between operands."""


Index = tuple


def grlex_key(idx: Sequence[int]):
    return (sum(idx), tuple(idx))


def multi_indices(nvars: int, degree: int) -> list[tuple[int, ...]]:
    """All exponent tuples of ``nvars`` entries with total ``degree``, grlex order."""
    if nvars == 0:
        return [()] if degree == 0 else []
    out = []
    for head in range(degree, -1, -1):
        for rest in multi_indices(nvars - 1, degree - head):
            out.append((head,) + rest)
    out.sort(key=grlex_key)
    return out


def multinomial(idx: Sequence[int]) -> int:
    """Coefficient of ``t^idx`` in ``(t_1 + ... + t_d)^|idx|``."""
    out = factorial(sum(idx))
    for e in idx:
        out //= factorial(e)
    return out


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` or ``"p"``; the denominator must be positive."""
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise ValueError(f"rational must be a 'p/q' string, got {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    s = text.strip()
    if "/" in s:
        num, den = s.split("/", 1)
        try:
            p, q = int(num), int(den)
        except ValueError:
            raise ValueError(f"malformed rational {text!r}") from None
        if q <= 0 or den.strip().startswith(("-", "+")):
            raise ValueError(f"rational {text!r} needs a positive denominator")
        return Fraction(p, q)
    try:
        return Fraction(int(s))
    except ValueError:
        raise ValueError(f"malformed rational {text!r}") from None


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def _add_idx(a, b):
    return tuple(x + y for x, y in zip(a, b))


class ZPoly:
    """Sparse polynomial in ``nvars`` variables with exact rational coefficients.

    Instances are treated as immutable.  Zero coefficients are never stored,
    so equality is plain dictionary comparison.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple, object] | None = None):
        self.nvars = nvars
        clean = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(exp)
                if len(exp) != nvars:
                    raise StructureError(f"exponent {exp} does not have {nvars} entries")
                c = Fraction(c)
                if c:
                    clean[exp] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars, terms):
        # caller guarantees normalized terms
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars: int) -> "ZPoly":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, c, nvars: int) -> "ZPoly":
        c = Fraction(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, i: int, nvars: int) -> "ZPoly":
        exp = [0] * nvars
        exp[i] = 1
        return cls._raw(nvars, {tuple(exp): Fraction(1)})

    @classmethod
    def monomial(cls, exp: Sequence[int], c=1) -> "ZPoly":
        return cls(len(exp), {tuple(exp): c})

    # -- inspection ---------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def min_degree(self) -> int:
        return min((sum(e) for e in self.terms), default=-1)

    def coeff(self, exp: Sequence[int]) -> Fraction:
        return self.terms.get(tuple(exp), Fraction(0))

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: grlex_key(kv[0]))

    def norm1(self) -> Fraction:
        """Sum of absolute coefficients: an upper bound for the sup on the unit polydisc."""
        return sum((abs(c) for c in self.terms.values()), Fraction(0))

    def __eq__(self, other):
        if isinstance(other, ZPoly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ZPoly.constant(other, self.nvars).terms
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        if not self.terms:
            return "ZPoly(0)"
        parts = []
        for exp, c in self.sorted_terms():
            mono = "*".join(
                f"z{i}" if e == 1 else f"z{i}^{e}" for i, e in enumerate(exp) if e
            )
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return "ZPoly(" + " + ".join(parts) + ")"

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> "ZPoly":
        if isinstance(other, ZPoly):
            if other.nvars != self.nvars:
                raise StructureError(f"ZPoly arity mismatch: {self.nvars} vs {other.nvars}")
            return other
        if isinstance(other, (int, Fraction)):
            return ZPoly.constant(other, self.nvars)
        raise TypeError(f"cannot combine ZPoly with {type(other).__name__}")

    def __add__(self, other):
        other = self._coerce(other)
        if not other.terms:
            return self
        out = dict(self.terms)
        for exp, c in other.terms.items():
            v = out.get(exp, 0) + c
            if v:
                out[exp] = v
            else:
                out.pop(exp, None)
        return ZPoly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return ZPoly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def scale(self, c) -> "ZPoly":
        c = Fraction(c)
        if not c:
            return ZPoly.zero(self.nvars)
        return ZPoly._raw(self.nvars, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = _add_idx(e1, e2)
                v = out.get(e, 0) + c1 * c2
                if v:
                    out[e] = v
                else:
                    out.pop(e, None)
        return ZPoly._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("ZPoly power needs a nonnegative int")
        result = ZPoly.constant(1, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def diff(self, i: int) -> "ZPoly":
        out = {}
        for exp, c in self.terms.items():
            e = exp[i]
            if e:
                new = exp[:i] + (e - 1,) + exp[i + 1:]
                out[new] = c * e
        return ZPoly._raw(self.nvars, out)

    def evaluate(self, point: Sequence) -> Fraction:
        if len(point) != self.nvars:
            raise StructureError(f"point has {len(point)} entries, need {self.nvars}")
        point = [Fraction(x) for x in point]
        total = Fraction(0)
        for exp, c in self.terms.items():
            v = c
            for x, e in zip(point, exp):
                if e:
                    v *= x ** e
            total += v
        return total

    def compose(self, args: Sequence["ZPoly"]) -> "ZPoly":
        """Substitute ``z_i := args[i]``; all ``args`` share one arity."""
        if len(args) != self.nvars:
            raise StructureError(f"compose needs {self.nvars} arguments, got {len(args)}")
        if not args:
            return self
        m = args[0].nvars
        if any(a.nvars != m for a in args):
            raise StructureError("compose arguments have mixed arities")
        cache: dict = {}

        def power(i, e):
            key = (i, e)
            if key not in cache:
                cache[key] = args[i] if e == 1 else power(i, e - 1) * args[i]
            return cache[key]

        out = ZPoly.zero(m)
        for exp, c in self.terms.items():
            term = ZPoly.constant(c, m)
            for i, e in enumerate(exp):
                if e:
                    term = term * power(i, e)
            out = out + term
        return out


def _check_polyvec(vec: Sequence[ZPoly], nvars: int | None = None) -> tuple:
    vec = tuple(vec)
    if nvars is None and vec:
        nvars = vec[0].nvars
    for p in vec:
        if not isinstance(p, ZPoly):
            raise TypeError("expected a vector of ZPoly")
        if p.nvars != nvars:
            raise StructureError(f"ZPoly arity {p.nvars} in a vector of arity {nvars}")
    return vec


# -- scalar series: dict alpha -> ZPoly, used internally for composition -------


def _ss_add_into(acc: dict, other: dict, scale=None):
    for a, p in other.items():
        if scale is not None:
            p = p.scale(scale)
        q = acc.get(a)
        q = p if q is None else q + p
        if q:
            acc[a] = q
        else:
            acc.pop(a, None)


def _ss_mul(x: dict, y: dict, order: int) -> dict:
    out: dict = {}
    for a, p in x.items():
        da = sum(a)
        for b, q in y.items():
            if da + sum(b) > order:
                continue
            c = _add_idx(a, b)
            r = p * q
            prev = out.get(c)
            r = r if prev is None else prev + r
            if r:
                out[c] = r
            else:
                out.pop(c, None)
    return out


def _substitute(p: ZPoly, args: Sequence[dict], order: int, zero_t: tuple,
                z_arity: int, cache: dict) -> dict:
    """Scalar series for ``p(args)`` truncated at total t-degree ``order``."""

    def power(i, e):
        key = (i, e, order)
        if key not in cache:
            if e == 1:
                cache[key] = {a: q for a, q in args[i].items() if sum(a) <= order}
            else:
                cache[key] = _ss_mul(power(i, e - 1), args[i], order)
        return cache[key]

    out: dict = {}
    for exp, c in p.terms.items():
        term = None
        for i, e in enumerate(exp):
            if e:
                pw = power(i, e)
                term = pw if term is None else _ss_mul(term, pw, order)
                if not term:
                    break
        if term is None:
            term = {zero_t: ZPoly.constant(1, z_arity)}
        _ss_add_into(out, term, scale=c)
    return out


class TruncatedSeries:
    """Vector of power series in ``t`` with :class:`ZPoly` coefficients.

    ``coeffs`` maps a t-multi-index ``alpha`` (``|alpha| <= order``) to a
    tuple of ``codomain_dim`` polynomials in ``z_arity`` variables.
    """

    __slots__ = ("t_arity", "order", "codomain_dim", "z_arity", "coeffs")

    def __init__(self, t_arity: int, order: int, codomain_dim: int, z_arity: int,
                 coeffs: Mapping[tuple, Sequence[ZPoly]] | None = None):
        if order < 0:
            raise ValueError("truncation order must be nonnegative")
        self.t_arity = t_arity
        self.order = order
        self.codomain_dim = codomain_dim
        self.z_arity = z_arity
        clean = {}
        for alpha, vec in (coeffs or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != t_arity:
                raise StructureError(f"t-index {alpha} does not have {t_arity} entries")
            if any(a < 0 for a in alpha):
                raise StructureError(f"negative t-index {alpha}")
            vec = _check_polyvec(vec, z_arity)
            if len(vec) != codomain_dim:
                raise StructureError(
                    f"coefficient at {alpha} has length {len(vec)}, need {codomain_dim}")
            if sum(alpha) > order:
                if any(vec):
                    raise StructureError(f"t-index {alpha} exceeds order {order}")
                continue
            if any(vec):
                clean[alpha] = vec
        self.coeffs = clean

    @classmethod
    def _raw(cls, t_arity, order, codomain_dim, z_arity, coeffs):
        s = cls.__new__(cls)
        s.t_arity = t_arity
        s.order = order
        s.codomain_dim = codomain_dim
        s.z_arity = z_arity
        s.coeffs = coeffs
        return s

    @classmethod
    def zero(cls, t_arity, order, codomain_dim, z_arity) -> "TruncatedSeries":
        return cls._raw(t_arity, order, codomain_dim, z_arity, {})

    @classmethod
    def constant(cls, vec: Sequence[ZPoly], t_arity: int, order: int) -> "TruncatedSeries":
        """Series with no t-dependence, equal to ``vec``."""
        vec = _check_polyvec(vec)
        if not vec:
            raise StructureError("empty coefficient vector")
        return cls(t_arity, order, len(vec), vec[0].nvars, {(0,) * t_arity: vec})

    @classmethod
    def from_components(cls, comps: Sequence[dict], t_arity, order, z_arity):
        """Build from scalar series (``alpha -> ZPoly`` dicts), one per component."""
        zero = ZPoly.zero(z_arity)
        keys = set()
        for c in comps:
            keys.update(a for a in c if sum(a) <= order)
        coeffs = {}
        for a in keys:
            vec = tuple(c.get(a, zero) for c in comps)
            if any(vec):
                coeffs[a] = vec
        return cls._raw(t_arity, order, len(comps), z_arity, coeffs)

    # -- inspection ---------------------------------------------------------

    @property
    def zero_index(self) -> tuple:
        return (0,) * self.t_arity

    def component(self, s: int) -> dict:
        return {a: v[s] for a, v in self.coeffs.items() if v[s]}

    def components(self) -> list[dict]:
        return [self.component(s) for s in range(self.codomain_dim)]

    def coefficient(self, alpha) -> tuple:
        zero = ZPoly.zero(self.z_arity)
        return self.coeffs.get(tuple(alpha), (zero,) * self.codomain_dim)

    def sorted_items(self):
        return sorted(self.coeffs.items(), key=lambda kv: grlex_key(kv[0]))

    def is_zero(self) -> bool:
        return not self.coeffs

    def t_degrees(self) -> list[int]:
        return sorted({sum(a) for a in self.coeffs})

    def z_degree(self) -> int:
        return max((p.degree() for v in self.coeffs.values() for p in v), default=-1)

    def same_shape(self, other: "TruncatedSeries") -> bool:
        return (self.t_arity, self.codomain_dim, self.z_arity) == (
            other.t_arity, other.codomain_dim, other.z_arity)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (self.same_shape(other) and self.order == other.order
                and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.t_arity, self.order, self.codomain_dim, self.z_arity,
                     frozenset(self.coeffs.items())))

    def __repr__(self):
        return (f"TruncatedSeries(d={self.t_arity}, order={self.order}, "
                f"dim={self.codomain_dim}, terms={len(self.coeffs)})")

    # -- arithmetic ---------------------------------------------------------

    def _check_shape(self, other):
        if not isinstance(other, TruncatedSeries):
            raise TypeError(f"cannot combine series with {type(other).__name__}")
        if not self.same_shape(other):
            raise StructureError(
                "series shape mismatch: (d, dim, z) = "
                f"{(self.t_arity, self.codomain_dim, self.z_arity)} vs "
                f"{(other.t_arity, other.codomain_dim, other.z_arity)}")

    def __add__(self, other):
        self._check_shape(other)
        order = min(self.order, other.order)
        out = {a: v for a, v in self.coeffs.items() if sum(a) <= order}
        for a, v in other.coeffs.items():
            if sum(a) > order:
                continue
            prev = out.get(a)
            if prev is None:
                out[a] = v
                continue
            new = tuple(x + y for x, y in zip(prev, v))
            if any(new):
                out[a] = new
            else:
                del out[a]
        return TruncatedSeries._raw(self.t_arity, order, self.codomain_dim,
                                    self.z_arity, out)

    def __neg__(self):
        return TruncatedSeries._raw(self.t_arity, self.order, self.codomain_dim,
                                    self.z_arity,
                                    {a: tuple(-p for p in v) for a, v in self.coeffs.items()})

    def __sub__(self, other):
        self._check_shape(other)
        return self + (-other)

    def scale(self, c) -> "TruncatedSeries":
        c = Fraction(c)
        if not c:
            return TruncatedSeries.zero(self.t_arity, self.order, self.codomain_dim, self.z_arity)
        return TruncatedSeries._raw(self.t_arity, self.order, self.codomain_dim, self.z_arity,
                                    {a: tuple(p.scale(c) for p in v)
                                     for a, v in self.coeffs.items()})

    def mul_scalar(self, other: "TruncatedSeries") -> "TruncatedSeries":
        """Componentwise product with a scalar (``codomain_dim == 1``) series."""
        if other.codomain_dim != 1 or other.t_arity != self.t_arity or \
                other.z_arity != self.z_arity:
            raise StructureError("mul_scalar needs a scalar series of matching arities")
        order = min(self.order, other.order)
        s = other.component(0)
        comps = [_ss_mul(c, s, order) for c in self.components()]
        return TruncatedSeries.from_components(comps, self.t_arity, order, self.z_arity)

    def shift(self, alpha: Sequence[int]) -> "TruncatedSeries":
        """Multiply by the monomial ``t^alpha`` (and truncate)."""
        alpha = tuple(alpha)
        out = {}
        for a, v in self.coeffs.items():
            b = _add_idx(a, alpha)
            if sum(b) <= self.order:
                out[b] = v
        return TruncatedSeries._raw(self.t_arity, self.order, self.codomain_dim,
                                    self.z_arity, out)

    def with_order(self, order: int) -> "TruncatedSeries":
        """Same coefficients, relabelled order (drops terms above it)."""
        return TruncatedSeries._raw(self.t_arity, order, self.codomain_dim, self.z_arity,
                                    {a: v for a, v in self.coeffs.items() if sum(a) <= order})

    def map_coeffs(self, fn) -> "TruncatedSeries":
        """Apply ``fn`` to every ZPoly coefficient (``fn`` must preserve arity)."""
        out = {}
        for a, v in self.coeffs.items():
            new = tuple(fn(p) for p in v)
            if any(new):
                out[a] = new
        z = next((p.nvars for v in out.values() for p in v), self.z_arity)
        return TruncatedSeries._raw(self.t_arity, self.order, self.codomain_dim, z, out)

    def substitute_z(self, args: Sequence[ZPoly]) -> "TruncatedSeries":
        """Substitute t-independent polynomials for ``z`` in every coefficient."""
        if len(args) != self.z_arity:
            raise StructureError(f"substitute_z needs {self.z_arity} polynomials")
        m = args[0].nvars if args else self.z_arity
        out = {}
        for a, v in self.coeffs.items():
            new = tuple(p.compose(args) for p in v)
            if any(new):
                out[a] = new
        return TruncatedSeries._raw(self.t_arity, self.order, self.codomain_dim, m, out)

    def evaluate(self, z_point: Sequence, t_point: Sequence) -> tuple:
        """Exact value of the truncated sum at rational ``(z, t)``."""
        if len(t_point) != self.t_arity:
            raise StructureError("t_point has the wrong length")
        t_point = [Fraction(x) for x in t_point]
        total = [Fraction(0)] * self.codomain_dim
        for a, v in self.coeffs.items():
            w = Fraction(1)
            for x, e in zip(t_point, a):
                if e:
                    w *= x ** e
            if not w:
                continue
            for s, p in enumerate(v):
                if p:
                    total[s] += w * p.evaluate(z_point)
        return tuple(total)

    def z_jacobian(self, z_point: Sequence, t_point: Sequence) -> list[list[Fraction]]:
        """``codomain_dim x z_arity`` matrix of partial derivatives in ``z``."""
        cols = [self.map_coeffs(lambda p, i=i: p.diff(i)) for i in range(self.z_arity)]
        vals = [c.evaluate(z_point, t_point) for c in cols]
        return [[vals[i][s] for i in range(self.z_arity)] for s in range(self.codomain_dim)]


def truncate(f: TruncatedSeries, order: int) -> TruncatedSeries:
    if order > f.order:
        raise ValueError(f"cannot raise truncation order {f.order} to {order}")
    return f.with_order(order)


def homogeneous_part(f: TruncatedSeries, m: int) -> TruncatedSeries:
    """The slice of ``f`` that is homogeneous of total t-degree ``m``."""
    if not 0 <= m <= f.order:
        raise IndexError(f"degree {m} outside 0..{f.order}")
    return TruncatedSeries._raw(f.t_arity, f.order, f.codomain_dim, f.z_arity,
                                {a: v for a, v in f.coeffs.items() if sum(a) == m})


def tail_from(f: TruncatedSeries, m: int) -> TruncatedSeries:
    """All terms of total t-degree ``>= m`` (the bracket ``[f]_m``)."""
    if m < 0:
        raise IndexError("negative degree")
    return TruncatedSeries._raw(f.t_arity, f.order, f.codomain_dim, f.z_arity,
                                {a: v for a, v in f.coeffs.items() if sum(a) >= m})


def first_difference(a: TruncatedSeries, b: TruncatedSeries, m: int):
    """First ``(alpha, component, ZPoly difference)`` with ``|alpha| <= m``, or None."""
    zero = ZPoly.zero(a.z_arity)
    keys = {k for k in a.coeffs if sum(k) <= m} | {k for k in b.coeffs if sum(k) <= m}
    for alpha in sorted(keys, key=grlex_key):
        va = a.coeffs.get(alpha, (zero,) * a.codomain_dim)
        vb = b.coeffs.get(alpha, (zero,) * b.codomain_dim)
        for s, (p, q) in enumerate(zip(va, vb)):
            if p != q:
                return alpha, s, p - q
    return None


def congruent_mod(a: TruncatedSeries, b: TruncatedSeries, m: int) -> bool:
    """``a`` and ``b`` agree in every t-degree ``<= m``."""
    if not a.same_shape(b):
        import logging
        logging.getLogger(__name__).warning(
            "congruent_mod on mismatched shapes %r and %r", a, b)
        return False
    if m > min(a.order, b.order):
        return False
    return first_difference(a, b, m) is None


def compose_ambient(h: Sequence[ZPoly], f: TruncatedSeries) -> TruncatedSeries:
    """``h(f(z, t))`` for a polynomial map ``h`` of the ambient coordinates."""
    h = _check_polyvec(h)
    if not h:
        raise StructureError("empty ambient map")
    if h[0].nvars != f.codomain_dim:
        raise StructureError(
            f"h takes {h[0].nvars} variables but f has {f.codomain_dim} components")
    args = f.components()
    cache: dict = {}
    comps = [_substitute(p, args, f.order, f.zero_index, f.z_arity, cache) for p in h]
    return TruncatedSeries.from_components(comps, f.t_arity, f.order, f.z_arity)


def compose_fiber(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """``f(g(z, t), t)``: substitute the chart change ``g`` into f's coefficients."""
    if g.codomain_dim != f.z_arity:
        raise StructureError(
            f"g has {g.codomain_dim} components but f's coefficients take {f.z_arity}")
    if g.t_arity != f.t_arity:
        raise StructureError("t-arity mismatch")
    order = min(f.order, g.order)
    args = g.components()
    caches: dict = {}
    comps: list[dict] = [{} for _ in range(f.codomain_dim)]
    for alpha, vec in f.coeffs.items():
        room = order - sum(alpha)
        if room < 0:
            continue
        for s, p in enumerate(vec):
            if not p:
                continue
            part = _substitute(p, args, room, g.zero_index, g.z_arity, caches)
            shifted = {_add_idx(a, alpha): q for a, q in part.items()}
            _ss_add_into(comps[s], shifted)
    return TruncatedSeries.from_components(comps, f.t_arity, order, g.z_arity)


def jacobian_at_center(h: Sequence[ZPoly], i_k: Sequence[ZPoly]) -> list[list[ZPoly]]:
    """``(dh^s/dw^u)(i_k(z))`` as a square matrix of polynomials in ``z``."""
    h = _check_polyvec(h)
    i_k = _check_polyvec(i_k)
    if not h or h[0].nvars != len(i_k):
        raise StructureError("h and the seed disagree on the ambient dimension")
    return [[p.diff(u).compose(i_k) for u in range(len(i_k))] for p in h]


def matvec(mat: Sequence[Sequence[ZPoly]], f: TruncatedSeries) -> TruncatedSeries:
    """Apply a t-independent polynomial matrix to every coefficient vector of ``f``."""
    if not mat or len(mat[0]) != f.codomain_dim:
        raise StructureError("matrix width does not match the series dimension")
    out = {}
    zero = ZPoly.zero(f.z_arity)
    for a, v in f.coeffs.items():
        new = []
        for row in mat:
            acc = zero
            for m, p in zip(row, v):
                if m and p:
                    acc = acc + m * p
            new.append(acc)
        if any(new):
            out[a] = tuple(new)
    return TruncatedSeries._raw(f.t_arity, f.order, len(mat), f.z_arity, out)


# -- serialization --------------------------------------------------------------


def poly_to_json(p: ZPoly) -> list:
    return [[list(exp), format_rational(c)] for exp, c in p.sorted_terms()]


def poly_from_json(obj, nvars: int) -> ZPoly:
    if not isinstance(obj, list):
        raise ValueError("polynomial must be a list of [exponents, 'p/q'] terms")
    terms: dict = {}
    for term in obj:
        if not (isinstance(term, list) and len(term) == 2 and isinstance(term[0], list)):
            raise ValueError(f"malformed polynomial term {term!r}")
        exp = term[0]
        if len(exp) != nvars or not all(isinstance(e, int) and e >= 0 for e in exp):
            raise StructureError(f"exponent {exp} is not a multi-index of length {nvars}")
        exp = tuple(exp)
        if exp in terms:
            raise ValueError(f"repeated exponent {list(exp)}")
        terms[exp] = parse_rational(term[1])
    return ZPoly(nvars, terms)


def polyvec_to_json(vec: Iterable[ZPoly]) -> list:
    return [poly_to_json(p) for p in vec]


def polyvec_from_json(obj, nvars: int, length: int | None = None) -> tuple:
    if not isinstance(obj, list):
        raise ValueError("polynomial vector must be a list")
    if length is not None and len(obj) != length:
        raise StructureError(f"polynomial vector has {len(obj)} entries, need {length}")
    return tuple(poly_from_json(p, nvars) for p in obj)


def series_to_json(f: TruncatedSeries) -> dict:
    return {
        "t_arity": f.t_arity,
        "order": f.order,
        "codomain_dim": f.codomain_dim,
        "z_arity": f.z_arity,
        "terms": [[list(a), polyvec_to_json(v)] for a, v in f.sorted_items()],
    }


def series_from_json(obj) -> TruncatedSeries:
    if not isinstance(obj, dict):
        raise ValueError("series must be an object")
    try:
        d, order, dim, z = (obj[k] for k in ("t_arity", "order", "codomain_dim", "z_arity"))
        terms = obj["terms"]
    except KeyError as exc:
        raise ValueError(f"series object lacks field {exc.args[0]!r}") from None
    coeffs = {}
    for item in terms:
        if not (isinstance(item, list) and len(item) == 2):
            raise ValueError(f"malformed series term {item!r}")
        alpha = tuple(item[0])
        if alpha in coeffs:
            raise ValueError(f"repeated t-index {list(alpha)}")
        coeffs[alpha] = polyvec_from_json(item[1], z, dim)
    return TruncatedSeries(d, order, dim, z, coeffs)
