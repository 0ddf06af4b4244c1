"""Input geometry: charts, transition data, embedding seed, and their checks.

A cover document is JSON text::

    {
      "t_arity": 1, "fiber_dim": 1, "ambient_dim": 2,
      "max_order": 4, "eq_degree_bound": 6,
      "charts": [{"id": "1", "delta": "1/4"}, ...],
      "ambient_charts": [{"id": "A"}, ...],
      "assignment": {"1": "A", ...},
      "g": {"1,2": <series>, "2,1": <series>, ...},
      "h": {"A,B": <polynomial vector>, ...},
      "seed": {"1": <polynomial vector>, ...},
      "triples": [["1", "2", "3"], ...]
    }

``g["j,k"]`` expresses ``z_j`` through ``(z_k, t)``; ``h["A,B"]`` expresses
``w_A`` through ``w_B``.  Polynomials are lists of ``[exponents, "p/q"]``
terms and series use :func:`defembed.series.series_to_json`.  ``triples``
is optional; when absent every triple of pairwise-overlapping charts is
taken as a triple overlap.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from pathlib import Path

from . import _jsonfmt
from .series import (
    StructureError,
    TruncatedSeries,
    ZPoly,
    compose_ambient,
    compose_fiber,
    first_difference,
    format_rational,
    grlex_key,
    homogeneous_part,
    parse_rational,
    poly_to_json,
    polyvec_from_json,
    polyvec_to_json,
    series_from_json,
    series_to_json,
)

UNCHECKED_HYPOTHESIS = (
    "t_arity is taken as given; whether it equals dim H^1(M, T_M) of the central "
    "fiber is not checked")


class CoverFormatError(ValueError):
    """A cover document that cannot be parsed; the message carries the location."""


@dataclass(frozen=True)
class Chart:
    id: str
    fiber_dim: int
    delta: Fraction
    polydisc_radius: int = 1

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise StructureError(f"chart {self.id}: delta must lie in (0, 1)")


@dataclass(frozen=True)
class AmbientChart:
    id: str
    ambient_dim: int


def identity_map(nvars: int) -> tuple:
    return tuple(ZPoly.var(i, nvars) for i in range(nvars))


@dataclass(frozen=True)
class CoverSpec:
    t_arity: int
    fiber_dim: int
    ambient_dim: int
    max_order: int
    eq_degree_bound: int
    charts: tuple
    ambient_charts: tuple
    assignment: dict
    fiber_transitions: dict
    ambient_transitions: dict
    embedding_seed: dict
    triples: tuple = field(default=())

    def __post_init__(self):
        self._check_structure()

    # -- structure ----------------------------------------------------------

    @property
    def r(self) -> int:
        return self.ambient_dim - self.fiber_dim

    @property
    def chart_ids(self) -> list:
        return [c.id for c in self.charts]

    @property
    def delta(self) -> Fraction:
        return min(c.delta for c in self.charts)

    def pairs(self) -> list:
        """Declared ordered pairs, sorted."""
        return sorted(self.fiber_transitions)

    def unordered_pairs(self) -> list:
        return sorted({tuple(sorted(p)) for p in self.fiber_transitions})

    def ordered_triples(self) -> list:
        out = set()
        for tri in self.triples:
            out.update(permutations(tri))
        return sorted(out)

    def h_for(self, j: str, k: str) -> tuple:
        """Ambient transition ``w_{A(j)} = h(w_{A(k)})`` for the fiber pair (j, k)."""
        a, b = self.assignment[j], self.assignment[k]
        if a == b:
            return identity_map(self.ambient_dim)
        return self.ambient_transitions[(a, b)]

    def g0(self, j: str, k: str) -> tuple:
        """The t = 0 chart change ``z_j = g_jk(z_k, 0)``."""
        g = self.fiber_transitions[(j, k)]
        return g.coefficient(g.zero_index)

    def _check_structure(self):
        n, N, d = self.fiber_dim, self.ambient_dim, self.t_arity
        if n < 1 or N < n or d < 1:
            raise StructureError("need fiber_dim >= 1, ambient_dim >= fiber_dim, t_arity >= 1")
        if self.max_order < 0 or self.eq_degree_bound < 0:
            raise StructureError("max_order and eq_degree_bound must be nonnegative")
        ids = self.chart_ids
        if len(set(ids)) != len(ids) or not ids:
            raise StructureError("chart ids must be unique and nonempty")
        for c in self.charts:
            if c.fiber_dim != n:
                raise StructureError(f"chart {c.id} has fiber_dim {c.fiber_dim}, need {n}")
        amb = {a.id for a in self.ambient_charts}
        for a in self.ambient_charts:
            if a.ambient_dim != N:
                raise StructureError(f"ambient chart {a.id} has dimension {a.ambient_dim}")
        for j in ids:
            if self.assignment.get(j) not in amb:
                raise StructureError(f"chart {j} is not assigned to a declared ambient chart")
        for (j, k), g in self.fiber_transitions.items():
            if j not in ids or k not in ids or j == k:
                raise StructureError(f"transition g[{j},{k}] names unknown or equal charts")
            if (k, j) not in self.fiber_transitions:
                raise StructureError(f"missing transition g[{k},{j}] for declared pair ({j},{k})")
            if (g.t_arity, g.codomain_dim, g.z_arity) != (d, n, n):
                raise StructureError(f"g[{j},{k}] has the wrong shape")
            if g.order < self.max_order:
                raise StructureError(f"g[{j},{k}] is truncated below max_order")
            a, b = self.assignment[j], self.assignment[k]
            if a != b and (a, b) not in self.ambient_transitions:
                raise StructureError(f"missing ambient transition h[{a},{b}] for pair ({j},{k})")
        for (a, b), h in self.ambient_transitions.items():
            if a not in amb or b not in amb:
                raise StructureError(f"h[{a},{b}] names an unknown ambient chart")
            if len(h) != N or any(p.nvars != N for p in h):
                raise StructureError(f"h[{a},{b}] must be {N} polynomials in {N} variables")
        for j in ids:
            seed = self.embedding_seed.get(j)
            if seed is None:
                raise StructureError(f"missing embedding seed for chart {j}")
            if len(seed) != N or any(p.nvars != n for p in seed):
                raise StructureError(f"seed[{j}] must be {N} polynomials in {n} variables")
        for tri in self.triples:
            if len(set(tri)) != 3:
                raise StructureError(f"triple {tri} must name three distinct charts")
            for x, y in combinations(tri, 2):
                if (x, y) not in self.fiber_transitions:
                    raise StructureError(f"triple {tri} uses undeclared pair ({x},{y})")


# -- (de)serialization ------------------------------------------------------------


def _pair_key(key: str, where: str) -> tuple:
    parts = key.split(",")
    if len(parts) != 2 or not all(parts):
        raise CoverFormatError(f"{where}: key {key!r} is not of the form 'j,k'")
    return parts[0].strip(), parts[1].strip()


def cover_from_dict(doc: dict) -> CoverSpec:
    if not isinstance(doc, dict):
        raise CoverFormatError("cover document must be a JSON object")
    where = "<top>"
    try:
        for key in ("t_arity", "fiber_dim", "ambient_dim", "max_order", "eq_degree_bound",
                    "charts", "ambient_charts", "assignment", "g", "h", "seed"):
            if key not in doc:
                raise CoverFormatError(f"missing field {key!r}")
        n, N = doc["fiber_dim"], doc["ambient_dim"]
        where = "charts"
        charts = tuple(sorted((Chart(str(c["id"]), n, parse_rational(c["delta"]))
                               for c in doc["charts"]), key=lambda c: c.id))
        where = "ambient_charts"
        ambient = tuple(sorted((AmbientChart(str(a["id"]), N) for a in doc["ambient_charts"]),
                               key=lambda a: a.id))
        assignment = {str(k): str(v) for k, v in doc["assignment"].items()}
        g = {}
        for key, obj in doc["g"].items():
            where = f"g[{key}]"
            g[_pair_key(key, where)] = series_from_json(obj)
        h = {}
        for key, obj in doc["h"].items():
            where = f"h[{key}]"
            h[_pair_key(key, where)] = polyvec_from_json(obj, N, N)
        seed = {}
        for key, obj in doc["seed"].items():
            where = f"seed[{key}]"
            seed[str(key)] = polyvec_from_json(obj, n, N)
        where = "triples"
        if "triples" in doc:
            triples = tuple(sorted(tuple(sorted(str(x) for x in t)) for t in doc["triples"]))
        else:
            pairs = {tuple(sorted(p)) for p in g}
            ids = sorted(c.id for c in charts)
            triples = tuple(t for t in combinations(ids, 3)
                            if all(tuple(sorted(q)) in pairs for q in combinations(t, 2)))
        where = "<top>"
        return CoverSpec(
            t_arity=doc["t_arity"], fiber_dim=n, ambient_dim=N,
            max_order=doc["max_order"], eq_degree_bound=doc["eq_degree_bound"],
            charts=charts, ambient_charts=ambient, assignment=assignment,
            fiber_transitions=g, ambient_transitions=h, embedding_seed=seed,
            triples=triples)
    except CoverFormatError:
        raise
    except (ValueError, KeyError, TypeError) as exc:
        raise CoverFormatError(f"{where}: {exc}") from exc


def cover_to_dict(spec: CoverSpec) -> dict:
    return {
        "t_arity": spec.t_arity,
        "fiber_dim": spec.fiber_dim,
        "ambient_dim": spec.ambient_dim,
        "max_order": spec.max_order,
        "eq_degree_bound": spec.eq_degree_bound,
        "charts": [{"id": c.id, "delta": format_rational(c.delta)} for c in spec.charts],
        "ambient_charts": [{"id": a.id} for a in spec.ambient_charts],
        "assignment": dict(sorted(spec.assignment.items())),
        "g": {f"{j},{k}": series_to_json(spec.fiber_transitions[(j, k)])
              for j, k in spec.pairs()},
        "h": {f"{a},{b}": polyvec_to_json(spec.ambient_transitions[(a, b)])
              for a, b in sorted(spec.ambient_transitions)},
        "seed": {j: polyvec_to_json(spec.embedding_seed[j]) for j in sorted(spec.embedding_seed)},
        "triples": [list(t) for t in spec.triples],
    }


def dumps_cover(spec: CoverSpec) -> str:
    return _jsonfmt.dump_text(cover_to_dict(spec))


def loads_cover(text: str) -> CoverSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CoverFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return cover_from_dict(doc)


def load_cover(source) -> CoverSpec:
    """Load a cover from a path or from the document text itself."""
    if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise CoverFormatError(f"{path}: {exc.strerror}") from exc
        try:
            return loads_cover(text)
        except CoverFormatError as exc:
            raise CoverFormatError(f"{path}: {exc}") from exc
    return loads_cover(source)


# -- semantic validation --------------------------------------------------------


@dataclass
class ValidationReport:
    name: str
    passed: bool
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def failures(self) -> list:
        return [c for c in self.checks if not c["passed"]]

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": "PASS" if self.passed else "FAIL",
                "checks": self.checks, "notes": self.notes}


def _split_by_degree(p: ZPoly, bound: int):
    low = ZPoly(p.nvars, {e: c for e, c in p.terms.items() if sum(e) <= bound})
    high = ZPoly(p.nvars, {e: c for e, c in p.terms.items() if sum(e) > bound})
    return low, high


def _series_residual_check(label, lhs: TruncatedSeries, rhs: TruncatedSeries,
                           order: int, bound: int) -> dict:
    diff = lhs.with_order(order) - rhs.with_order(order)
    enforced_bad = None
    unenforced = 0
    first_t = None
    min_z = None
    for alpha, vec in diff.sorted_items():
        for s, p in enumerate(vec):
            low, high = _split_by_degree(p, bound)
            if high:
                unenforced += len(high.terms)
            if low:
                mono = min(low.terms, key=grlex_key)
                if enforced_bad is None:
                    enforced_bad = {"t_index": list(alpha), "component": s,
                                    "z_index": list(mono),
                                    "coefficient": format_rational(low.terms[mono])}
                first_t = sum(alpha) if first_t is None else min(first_t, sum(alpha))
                deg = low.min_degree()
                min_z = deg if min_z is None else min(min_z, deg)
    return {
        "label": label,
        "passed": enforced_bad is None,
        "exact_through_t_order": order if first_t is None else first_t - 1,
        "exact_through_z_degree": bound if min_z is None else min_z - 1,
        "offending": enforced_bad,
        "unenforced_terms_above_bound": unenforced,
    }


def _identity_series(spec: CoverSpec) -> TruncatedSeries:
    return TruncatedSeries.constant(identity_map(spec.fiber_dim), spec.t_arity, spec.max_order)


def validate_fiber_cocycle(spec: CoverSpec) -> ValidationReport:
    """Check ``g_jk o g_kj = id`` on pairs and ``g_ik = g_ij o g_jk`` on triples.

    Identities are exact series identities through ``max_order`` in t and
    through ``eq_degree_bound`` in z; higher z-degree terms are counted in
    the report but not enforced.
    """
    M, D = spec.max_order, spec.eq_degree_bound
    ident = _identity_series(spec)
    checks = []
    for j, k in spec.pairs():
        comp = compose_fiber(spec.fiber_transitions[(j, k)], spec.fiber_transitions[(k, j)])
        checks.append(_series_residual_check(f"pair ({j},{k}): g[{j},{k}] o g[{k},{j}] = id",
                                             comp, ident, M, D))
    for i, j, k in spec.ordered_triples():
        comp = compose_fiber(spec.fiber_transitions[(i, j)], spec.fiber_transitions[(j, k)])
        checks.append(_series_residual_check(
            f"triple ({i},{j},{k}): g[{i},{j}] o g[{j},{k}] = g[{i},{k}]",
            comp, spec.fiber_transitions[(i, k)], M, D))
    passed = all(c["passed"] for c in checks)
    return ValidationReport("fiber_cocycle", passed, checks, [UNCHECKED_HYPOTHESIS])


def _poly_residual_check(label, residual: tuple, bound: int) -> dict:
    bad = None
    unenforced = 0
    out = []
    for s, p in enumerate(residual):
        low, high = _split_by_degree(p, bound)
        unenforced += len(high.terms)
        if low and bad is None:
            mono = min(low.terms, key=grlex_key)
            bad = {"component": s, "z_index": list(mono),
                   "coefficient": format_rational(low.terms[mono])}
        out.append(poly_to_json(p))
    return {"label": label, "passed": bad is None, "offending": bad,
            "residual": out, "unenforced_terms_above_bound": unenforced}


def ambient_pairs(spec: CoverSpec) -> list:
    used = set()
    for j, k in spec.pairs():
        a, b = spec.assignment[j], spec.assignment[k]
        if a != b:
            used.add((a, b))
    return sorted(used)


def validate_ambient_cocycle(spec: CoverSpec) -> ValidationReport:
    """Check the ambient transitions and the seed compatibility.

    On ambient pairs ``h_AB o h_BA = id``; on ambient triples induced by
    declared fiber triples ``h_AC = h_AB o h_BC``; on every fiber pair the
    seed satisfies ``h_jk(i_k(z_k)) = i_j(g_jk(z_k, 0))``.
    """
    N, D = spec.ambient_dim, spec.eq_degree_bound
    ident = identity_map(N)
    checks = []
    for a, b in ambient_pairs(spec):
        h_ab = spec.ambient_transitions[(a, b)]
        h_ba = spec.ambient_transitions.get((b, a))
        if h_ba is None:
            raise StructureError(f"missing ambient transition h[{b},{a}]")
        res = tuple(p.compose(h_ba) - q for p, q in zip(h_ab, ident))
        checks.append(_poly_residual_check(f"ambient pair ({a},{b}): h[{a},{b}] o h[{b},{a}] = id",
                                           res, D))
    seen = set()
    for i, j, k in spec.ordered_triples():
        a, b, c = (spec.assignment[x] for x in (i, j, k))
        if len({a, b, c}) < 3 or (a, b, c) in seen:
            continue
        seen.add((a, b, c))
        h_ab, h_bc = spec.ambient_transitions[(a, b)], spec.ambient_transitions[(b, c)]
        h_ac = spec.ambient_transitions.get((a, c))
        if h_ac is None:
            raise StructureError(f"missing ambient transition h[{a},{c}]")
        res = tuple(p.compose(h_bc) - q for p, q in zip(h_ab, h_ac))
        checks.append(_poly_residual_check(
            f"ambient triple ({a},{b},{c}): h[{a},{b}] o h[{b},{c}] = h[{a},{c}]", res, D))
    for j, k in spec.pairs():
        lhs = tuple(p.compose(spec.embedding_seed[k]) for p in spec.h_for(j, k))
        rhs = tuple(p.compose(spec.g0(j, k)) for p in spec.embedding_seed[j])
        res = tuple(x - y for x, y in zip(lhs, rhs))
        checks.append(_poly_residual_check(
            f"seed ({j},{k}): h[{j},{k}](i_{k}) = i_{j}(g[{j},{k}](z,0))", res, D))
    passed = all(c["passed"] for c in checks)
    return ValidationReport("ambient_cocycle", passed, checks, [UNCHECKED_HYPOTHESIS])


def validate(spec: CoverSpec) -> list:
    return [validate_fiber_cocycle(spec), validate_ambient_cocycle(spec)]


def seed_congruence_defect(spec: CoverSpec, j: str, k: str):
    """First order-0 mismatch of the glue equation for the bare seed, or None."""
    seed_k = TruncatedSeries.constant(spec.embedding_seed[k], spec.t_arity, 0)
    seed_j = TruncatedSeries.constant(spec.embedding_seed[j], spec.t_arity, 0)
    lhs = compose_ambient(spec.h_for(j, k), seed_k)
    rhs = compose_fiber(seed_j, spec.fiber_transitions[(j, k)].with_order(0))
    return first_difference(homogeneous_part(lhs, 0), homogeneous_part(rhs, 0), 0)
