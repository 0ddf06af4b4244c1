"""Twisted Čech cochains with values in the restricted ambient tangent sheaf.

Conventions (ordered pairs ``(j, k)``, values written in the coordinates
``z_k`` of the second chart):

* twist ``J_jk(z_k) = dh_jk/dw (i_k(z_k))``, the ambient Jacobian at t = 0;
* coboundary ``(d phi)_jk(z_k, t) = phi_j(g_jk(z_k, 0), t) - J_jk(z_k) phi_k(z_k, t)``;
* cocycle identity on every ordered triple ``(i, j, k)``::

      psi_ij(g_jk(z_k, 0), t) = psi_ik(z_k, t) - J_ij(g_jk(z_k, 0)) psi_jk(z_k, t)

  and on every ordered pair the degenerate case ``(k, j, k)``, i.e.
  ``psi_kj(g_jk(z_k, 0), t) = -J_kj(g_jk(z_k, 0)) psi_jk(z_k, t)``.

Every coboundary satisfies both identities exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cover import CoverSpec
from .linalg import NormalEquations, rank
from .series import (
    StructureError,
    TruncatedSeries,
    ZPoly,
    format_rational,
    grlex_key,
    jacobian_at_center,
    matvec,
    multi_indices,
    poly_to_json,
)


class JacobianTwist:
    """The matrices ``J_jk(z_k)`` for every declared ordered pair."""

    def __init__(self, spec: CoverSpec):
        self.spec = spec
        self.matrices = {
            (j, k): jacobian_at_center(spec.h_for(j, k), spec.embedding_seed[k])
            for j, k in spec.pairs()
        }
        self._systems: dict = {}

    def __getitem__(self, pair):
        return self.matrices[pair]

    def pulled_back(self, i: str, j: str, k: str) -> list:
        """``J_ij`` written in ``z_k`` via ``z_j = g_jk(z_k, 0)``."""
        g0 = self.spec.g0(j, k)
        return [[p.compose(g0) for p in row] for row in self.matrices[(i, j)]]

    def max_degree(self) -> int:
        return max((p.degree() for m in self.matrices.values() for row in m for p in row),
                   default=0)

    def inverse_check(self) -> dict:
        """``J_kj(g_jk(z_k, 0)) J_jk(z_k) = I`` for every ordered pair."""
        N = self.spec.ambient_dim
        out = {}
        for j, k in self.spec.pairs():
            back = self.pulled_back(k, j, k)
            fwd = self.matrices[(j, k)]
            ok = True
            for a in range(N):
                for b in range(N):
                    acc = ZPoly.zero(self.spec.fiber_dim)
                    for c in range(N):
                        acc = acc + back[a][c] * fwd[c][b]
                    if acc != int(a == b):
                        ok = False
            out[(j, k)] = ok
        return out


def _homogeneous_ok(f: TruncatedSeries, degree: int) -> bool:
    return all(sum(a) == degree for a in f.coeffs)


@dataclass
class OneCochain:
    """``psi_jk`` for ordered pairs; t-homogeneous of ``degree``, functions of ``z_k``."""

    degree: int
    values: dict

    def __post_init__(self):
        for pair, f in self.values.items():
            if not _homogeneous_ok(f, self.degree):
                raise StructureError(f"value at {pair} is not t-homogeneous of degree {self.degree}")

    @classmethod
    def zero(cls, spec: CoverSpec, degree: int) -> "OneCochain":
        return cls(degree, {p: TruncatedSeries.zero(spec.t_arity, degree, spec.ambient_dim,
                                                      spec.fiber_dim)
                            for p in spec.pairs()})

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.values.values())

    def z_degree(self) -> int:
        return max((f.z_degree() for f in self.values.values()), default=-1)

    def norm(self) -> Fraction:
        """Largest coefficient-sum norm over pairs, t-indices and components."""
        return max((p.norm1() for f in self.values.values()
                    for v in f.coeffs.values() for p in v), default=Fraction(0))

    def __add__(self, other):
        _same_keys(self, other)
        return OneCochain(self.degree, {p: self.values[p] + other.values[p] for p in self.values})

    def __sub__(self, other):
        _same_keys(self, other)
        return OneCochain(self.degree, {p: self.values[p] - other.values[p] for p in self.values})

    def scale(self, c) -> "OneCochain":
        return OneCochain(self.degree, {p: f.scale(c) for p, f in self.values.items()})

    def __eq__(self, other):
        if not isinstance(other, OneCochain):
            return NotImplemented
        return self.degree == other.degree and self.values.keys() == other.values.keys() and \
            all(self.values[p].coeffs == other.values[p].coeffs for p in self.values)


@dataclass
class ZeroCochain:
    """``phi_j`` per chart; t-homogeneous of ``degree``, functions of ``z_j``."""

    degree: int
    values: dict

    def __post_init__(self):
        for j, f in self.values.items():
            if not _homogeneous_ok(f, self.degree):
                raise StructureError(f"value at chart {j} is not t-homogeneous")

    @classmethod
    def zero(cls, spec: CoverSpec, degree: int) -> "ZeroCochain":
        return cls(degree, {j: TruncatedSeries.zero(spec.t_arity, degree, spec.ambient_dim,
                                                     spec.fiber_dim)
                            for j in spec.chart_ids})

    def is_zero(self) -> bool:
        return all(f.is_zero() for f in self.values.values())

    def z_degree(self) -> int:
        return max((f.z_degree() for f in self.values.values()), default=-1)

    def norm(self) -> Fraction:
        return max((p.norm1() for f in self.values.values()
                    for v in f.coeffs.values() for p in v), default=Fraction(0))

    def __add__(self, other):
        _same_keys(self, other)
        return ZeroCochain(self.degree, {j: self.values[j] + other.values[j] for j in self.values})

    def scale(self, c) -> "ZeroCochain":
        return ZeroCochain(self.degree, {j: f.scale(c) for j, f in self.values.items()})

    def __eq__(self, other):
        if not isinstance(other, ZeroCochain):
            return NotImplemented
        return self.degree == other.degree and self.values.keys() == other.values.keys() and \
            all(self.values[j].coeffs == other.values[j].coeffs for j in self.values)


def _same_keys(a, b):
    if a.degree != b.degree or a.values.keys() != b.values.keys():
        raise StructureError("cochains live on different supports or degrees")


# -- cocycle identity -------------------------------------------------------------


@dataclass
class CocycleReport:
    passed: bool
    residuals: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": "PASS" if self.passed else "FAIL", "residuals": self.residuals}


def _residual_entry(label, res: TruncatedSeries) -> dict:
    terms = []
    for alpha, vec in res.sorted_items():
        for s, p in enumerate(vec):
            if p:
                terms.append({"t_index": list(alpha), "component": s, "poly": poly_to_json(p)})
    return {"label": label, "zero": not terms, "terms": terms}


def cocycle_check(psi: OneCochain, twist: JacobianTwist, spec: CoverSpec) -> CocycleReport:
    for pair in spec.pairs():
        if pair not in psi.values:
            raise StructureError(f"cochain has no value on pair {pair}")
    entries = []
    for j, k in spec.pairs():
        g0 = spec.g0(j, k)
        lhs = psi.values[(k, j)].substitute_z(g0)
        rhs = -matvec(twist.pulled_back(k, j, k), psi.values[(j, k)])
        entries.append(_residual_entry(f"pair ({k},{j},{k})", lhs - rhs))
    for i, j, k in spec.ordered_triples():
        g0 = spec.g0(j, k)
        lhs = psi.values[(i, j)].substitute_z(g0)
        rhs = psi.values[(i, k)] - matvec(twist.pulled_back(i, j, k), psi.values[(j, k)])
        entries.append(_residual_entry(f"triple ({i},{j},{k})", lhs - rhs))
    return CocycleReport(all(e["zero"] for e in entries), entries)


def coboundary(phi: ZeroCochain, twist: JacobianTwist, spec: CoverSpec) -> OneCochain:
    for j in spec.chart_ids:
        if j not in phi.values:
            raise StructureError(f"0-cochain has no value on chart {j}")
    out = {}
    for j, k in spec.pairs():
        f_j = phi.values[j]
        if f_j.codomain_dim != spec.ambient_dim:
            raise StructureError("0-cochain values must have ambient_dim components")
        out[(j, k)] = f_j.substitute_z(spec.g0(j, k)) - matvec(twist[(j, k)], phi.values[k])
    return OneCochain(phi.degree, out)


# -- splitting -------------------------------------------------------------------


@dataclass
class Obstruction:
    """The splitting system for ``psi`` has no solution at this ansatz degree."""

    degree: int
    ansatz_degree: int
    t_indices: list
    offending_pairs: list
    residual_norm2: Fraction
    residual: list
    rank: int
    rank_augmented: int
    order: int | None = None

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "degree": self.degree,
            "ansatz_degree": self.ansatz_degree,
            "t_indices": [list(a) for a in self.t_indices],
            "offending_pairs": [list(p) for p in self.offending_pairs],
            "residual_norm2": format_rational(self.residual_norm2),
            "residual": self.residual,
            "rank": self.rank,
            "rank_augmented": self.rank_augmented,
        }


class ObstructionError(Exception):
    def __init__(self, obstruction: Obstruction):
        self.obstruction = obstruction
        super().__init__(
            f"splitting obstructed at degree {obstruction.degree} (ansatz z-degree "
            f"{obstruction.ansatz_degree}); offending pairs {obstruction.offending_pairs}")


class SplitSystem:
    """Linear system for the coboundary on 0-cochains of bounded z-degree.

    Unknowns are the coefficients of ``phi_j^s`` on z-monomials of degree
    ``<= ansatz_degree``; equations equate z-monomial coefficients of
    ``(d phi)_jk^s`` of degree ``<= spec.eq_degree_bound``.  The matrix does
    not depend on the t-monomial, so one system serves every ``t^alpha``.
    """

    def __init__(self, spec: CoverSpec, twist: JacobianTwist, ansatz_degree: int):
        self.spec = spec
        self.twist = twist
        self.ansatz_degree = ansatz_degree
        n, N = spec.fiber_dim, spec.ambient_dim
        self.monomials = [b for deg in range(ansatz_degree + 1) for b in multi_indices(n, deg)]
        self.unknowns = [(j, s, b) for j in spec.chart_ids for s in range(N)
                         for b in self.monomials]
        columns = [self._image(j, s, b) for j, s, b in self.unknowns]
        bound = spec.eq_degree_bound
        row_keys = set()
        for col in columns:
            row_keys.update(key for key in col if sum(key[2]) <= bound)
        pair_pos = {p: i for i, p in enumerate(spec.pairs())}
        self.row_keys = sorted(row_keys, key=lambda r: (pair_pos[r[0]], r[1], grlex_key(r[2])))
        self.row_index = {r: i for i, r in enumerate(self.row_keys)}
        self.matrix = [[Fraction(0)] * len(self.unknowns) for _ in self.row_keys]
        for c, col in enumerate(columns):
            for key, v in col.items():
                i = self.row_index.get(key)
                if i is not None:
                    self.matrix[i][c] = v
        self.solver = NormalEquations(self.matrix, len(self.unknowns))

    def _image(self, j, s, beta) -> dict:
        """Coboundary of the basis cochain ``z_j^beta e_s`` at chart j, by row key."""
        spec = self.spec
        n = spec.fiber_dim
        mono = ZPoly.monomial(beta, 1)
        out: dict = {}

        def put(pair, comp, poly, sign):
            for exp, c in poly.terms.items():
                key = (pair, comp, exp)
                v = out.get(key, 0) + sign * c
                if v:
                    out[key] = v
                else:
                    out.pop(key, None)

        for a, b in spec.pairs():
            if a == j:
                put((a, b), s, mono.compose(spec.g0(a, b)), 1)
            if b == j:
                col = [row[s] for row in self.twist[(a, b)]]
                for comp, entry in enumerate(col):
                    if entry:
                        put((a, b), comp, entry * mono, -1)
        assert all(len(k[2]) == n for k in out)
        return out

    def _rhs(self, psi: OneCochain, alpha) -> tuple:
        b = [Fraction(0)] * len(self.row_keys)
        stray = []
        bound = self.spec.eq_degree_bound
        for pair, f in psi.values.items():
            vec = f.coeffs.get(alpha)
            if vec is None:
                continue
            for s, p in enumerate(vec):
                for exp, c in p.terms.items():
                    if sum(exp) > bound:
                        continue
                    i = self.row_index.get((pair, s, exp))
                    if i is None:
                        stray.append((pair, s, exp, c))
                    else:
                        b[i] = c
        return b, stray

    def split(self, psi: OneCochain) -> ZeroCochain:
        spec = self.spec
        N = spec.ambient_dim
        alphas = sorted({a for f in psi.values.values() for a in f.coeffs}, key=grlex_key)
        coeffs: dict = {j: {} for j in spec.chart_ids}
        failures = []
        for alpha in alphas:
            b, stray = self._rhs(psi, alpha)
            x = None if stray else self.solver.min_norm(b)
            if x is None:
                failures.append((alpha, b, stray))
                continue
            for (j, s, beta), v in zip(self.unknowns, x):
                if v:
                    coeffs[j].setdefault(alpha, [dict() for _ in range(N)])[s][beta] = v
        if failures:
            raise ObstructionError(self._obstruction(psi, failures))
        n = spec.fiber_dim
        values = {}
        for j in spec.chart_ids:
            terms = {a: tuple(ZPoly(n, comp) for comp in comps) for a, comps in coeffs[j].items()}
            values[j] = TruncatedSeries(spec.t_arity, psi.degree, N, n, terms)
        return ZeroCochain(psi.degree, values)

    def _obstruction(self, psi, failures) -> Obstruction:
        residual = []
        norm2 = Fraction(0)
        offending = set()
        rank_a = rank(self.matrix) if self.matrix else 0
        rank_ab = rank_a
        for alpha, b, stray in failures:
            _, res = self.solver.least_squares(b)
            for (pair, s, exp), v in zip(self.row_keys, res):
                if v:
                    offending.add(pair)
                    norm2 += v * v
                    residual.append({"t_index": list(alpha), "pair": list(pair), "component": s,
                                     "z_index": list(exp), "value": format_rational(v)})
            for pair, s, exp, c in stray:
                offending.add(pair)
                norm2 += c * c
                residual.append({"t_index": list(alpha), "pair": list(pair), "component": s,
                                 "z_index": list(exp), "value": format_rational(c)})
            aug = [row + [bi] for row, bi in zip(self.matrix, b)]
            rank_ab = max(rank_ab, rank(aug) + (1 if stray else 0))
        return Obstruction(
            degree=psi.degree, ansatz_degree=self.ansatz_degree,
            t_indices=[f[0] for f in failures], offending_pairs=sorted(offending),
            residual_norm2=norm2, residual=residual, rank=rank_a, rank_augmented=rank_ab)


def default_ansatz_degree(psi: OneCochain, twist: JacobianTwist) -> int:
    return max(psi.z_degree(), 0) + twist.max_degree()


def split_system(twist: JacobianTwist, spec: CoverSpec, ansatz_degree: int) -> SplitSystem:
    """Cached :class:`SplitSystem` for this twist and ansatz degree."""
    key = ansatz_degree
    if twist.spec is not spec or key not in twist._systems:
        system = SplitSystem(spec, twist, ansatz_degree)
        if twist.spec is spec:
            twist._systems[key] = system
        return system
    return twist._systems[key]


def split_cocycle(psi: OneCochain, twist: JacobianTwist, spec: CoverSpec,
                  ansatz_degree: int | None = None) -> ZeroCochain:
    """Minimum-norm 0-cochain ``phi`` with ``coboundary(phi) = psi``.

    Raises :class:`ObstructionError` when no such ``phi`` of z-degree
    ``<= ansatz_degree`` exists.  The default ansatz degree is the z-degree
    of ``psi`` plus the largest z-degree among the twist entries.
    """
    if ansatz_degree is None:
        ansatz_degree = default_ansatz_degree(psi, twist)
    return split_system(twist, spec, ansatz_degree).split(psi)
