"""Built-in fixture gallery.

Each fixture is generated from "global" data so that its cocycle
identities hold by construction: chart coordinates are
``z_j = phi_j(x, t) = (1 + p_j(t)) x + q_j(t)`` for one global coordinate
``x``, ambient charts are affine images ``w_A = L_A W + c_A`` of global
coordinates ``W``, and the seed is ``i_j = H_{A(j)} o I o phi_j^{-1}(., 0)``
for a global curve ``I``.  The shipped ``*.cover`` files are the canonical
serializations of these builders.

* ``trivial``: two charts, no t-dependence, ambient of dimension 1.
* ``linear``: two charts, chart change linear in t, affine ambient, d = 1.
* ``threechart``: three charts with a declared triple overlap, d = 2.
* ``obstructed``: three charts whose nerve is a cycle (no triple overlap)
  and a translation along the cycle; the order-1 defect is not a coboundary.
* ``degenerate-seed``: one chart with the cusp seed ``(z^2, z^3)``.
"""
from __future__ import annotations

from fractions import Fraction as F
from importlib import resources
from pathlib import Path

from .cover import AmbientChart, Chart, CoverSpec, dumps_cover, loads_cover
from .linalg import as_matrix, rref
from .series import TruncatedSeries, ZPoly, compose_fiber

NAMES = ("trivial", "linear", "threechart", "obstructed", "degenerate-seed")


def _scalar(terms: dict, d: int, order: int, z_arity: int = 1) -> TruncatedSeries:
    """Scalar series from ``{alpha: ZPoly}``."""
    return TruncatedSeries(d, order, 1, z_arity, {a: (p,) for a, p in terms.items()})


def _t_const(c, d: int, order: int, alpha=None) -> TruncatedSeries:
    alpha = alpha or (0,) * d
    return _scalar({alpha: ZPoly.constant(c, 1)}, d, order)


def _affine_chart(p: dict, q: dict, d: int, order: int):
    """``(phi, phi_inverse)`` as series in x (resp. z) for ``z = (1 + p(t)) x + q(t)``.

    ``p`` and ``q`` map t-indices to rationals; ``p`` has no constant term.
    """
    zero = (0,) * d
    x = ZPoly.var(0, 1)
    phi_terms = {zero: x + q.get(zero, 0)}
    for a in set(p) | set(q):
        if a == zero:
            continue
        phi_terms[a] = x.scale(p.get(a, 0)) + q.get(a, 0)
    phi = _scalar(phi_terms, d, order)
    # 1 / (1 + p(t)) as a geometric series
    minus_p = _scalar({a: ZPoly.constant(-c, 1) for a, c in p.items()}, d, order)
    inv = _t_const(1, d, order)
    power = _t_const(1, d, order)
    for _ in range(order):
        power = power.mul_scalar(minus_p)
        inv = inv + power
    z_minus_q = _scalar({zero: x - q.get(zero, 0)}, d, order) + _scalar(
        {a: ZPoly.constant(-c, 1) for a, c in q.items() if a != zero}, d, order)
    return phi, z_minus_q.mul_scalar(inv)


def _affine_inverse(L, c):
    n = len(L)
    aug = [list(row) + [F(int(i == j)) for j in range(n)] for i, row in enumerate(as_matrix(L))]
    red, _ = rref(aug, ncols=n)
    Linv = [row[n:] for row in red]
    cinv = [-sum(Linv[i][j] * c[j] for j in range(n)) for i in range(n)]
    return Linv, cinv


def _affine_polys(L, c, nvars):
    out = []
    for row, ci in zip(L, c):
        p = ZPoly.constant(ci, nvars)
        for j, a in enumerate(row):
            p = p + ZPoly.var(j, nvars).scale(a)
        out.append(p)
    return tuple(out)


def _compose_affine(L1, c1, L2, c2):
    """``(L1, c1) o (L2, c2)``."""
    n = len(L1)
    L = [[sum(F(L1[i][k]) * L2[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
    c = [sum(F(L1[i][k]) * c2[k] for k in range(n)) + c1[i] for i in range(n)]
    return L, c


def _build(*, d, order, eq_bound, charts, ambient, assignment, curve, triples=None,
           pairs=None, delta=F(1, 4)) -> CoverSpec:
    """Assemble a CoverSpec from global chart and ambient data.

    ``charts``: id -> (p, q) for the affine chart maps.
    ``ambient``: id -> (L, c) for ``w_A = L W + c``.
    ``curve``: global embedding ``I(x)`` as a tuple of ZPoly in one variable.
    """
    ids = sorted(charts)
    maps = {j: _affine_chart(*charts[j], d, order) for j in ids}
    if pairs is None:
        pairs = [(j, k) for j in ids for k in ids if j != k]
    g = {(j, k): compose_fiber(maps[j][0], maps[k][1]) for j, k in pairs}
    N = len(curve)
    h = {}
    for a in ambient:
        for b in ambient:
            if a == b:
                continue
            Lb_inv, cb_inv = _affine_inverse(*ambient[b])
            L, c = _compose_affine(*ambient[a], Lb_inv, cb_inv)
            h[(a, b)] = _affine_polys(L, c, N)
    seed = {}
    for j in ids:
        x_of_z = maps[j][1].coefficient(maps[j][1].zero_index)
        on_curve = tuple(p.compose(x_of_z) for p in curve)
        L, c = ambient[assignment[j]]
        seed[j] = tuple(
            sum((on_curve[k].scale(L[i][k]) for k in range(N)), ZPoly.constant(c[i], 1))
            for i in range(N))
    return CoverSpec(
        t_arity=d, fiber_dim=1, ambient_dim=N, max_order=order, eq_degree_bound=eq_bound,
        charts=tuple(Chart(j, 1, delta) for j in ids),
        ambient_charts=tuple(AmbientChart(a, N) for a in sorted(ambient)),
        assignment=dict(assignment), fiber_transitions=g, ambient_transitions=h,
        embedding_seed=seed, triples=tuple(triples or ()))


def build_trivial() -> CoverSpec:
    x = ZPoly.var(0, 1)
    return _build(
        d=1, order=4, eq_bound=4,
        charts={"1": ({}, {}), "2": ({}, {(0,): F(-1, 2)})},
        ambient={"A": ([[1]], [0]), "B": ([[1]], [F(1, 4)])},
        assignment={"1": "A", "2": "B"},
        curve=(x,))


def build_linear() -> CoverSpec:
    x = ZPoly.var(0, 1)
    return _build(
        d=1, order=4, eq_bound=6,
        charts={"1": ({}, {}), "2": ({(1,): F(1)}, {(0,): F(-1, 2)})},
        ambient={"A": ([[1, 0], [0, 1]], [0, 0]),
                 "B": ([[1, 0], [F(1, 2), 1]], [F(1, 4), 0])},
        assignment={"1": "A", "2": "B"},
        curve=(x, x * x))


def build_threechart() -> CoverSpec:
    x = ZPoly.var(0, 1)
    return _build(
        d=2, order=4, eq_bound=6,
        charts={"1": ({}, {}),
                "2": ({(1, 0): F(1)}, {(0, 0): F(-1, 2)}),
                "3": ({(0, 1): F(1)}, {(0, 0): F(1, 3), (1, 0): F(1, 4)})},
        ambient={"A": ([[1, 0], [0, 1]], [0, 0]),
                 "B": ([[1, 0], [F(1, 2), 1]], [F(1, 4), 0]),
                 "C": ([[1, F(-1, 2)], [0, 1]], [0, F(1, 5)])},
        assignment={"1": "A", "2": "B", "3": "C"},
        curve=(x, x * x),
        triples=[("1", "2", "3")])


def build_obstructed() -> CoverSpec:
    d, order = 1, 2
    z = ZPoly.var(0, 1)
    ident = TruncatedSeries.constant((z,), d, order)
    shift = TruncatedSeries(d, order, 1, 1, {(0,): (z,), (1,): (ZPoly.constant(1, 1),)})
    back = TruncatedSeries(d, order, 1, 1, {(0,): (z,), (1,): (ZPoly.constant(-1, 1),)})
    g = {("1", "2"): ident, ("2", "1"): ident, ("2", "3"): ident, ("3", "2"): ident,
         ("3", "1"): shift, ("1", "3"): back}
    seed = (z, ZPoly.zero(1))
    return CoverSpec(
        t_arity=d, fiber_dim=1, ambient_dim=2, max_order=order, eq_degree_bound=4,
        charts=tuple(Chart(j, 1, F(1, 4)) for j in ("1", "2", "3")),
        ambient_charts=(AmbientChart("A", 2),),
        assignment={"1": "A", "2": "A", "3": "A"},
        fiber_transitions=g, ambient_transitions={},
        embedding_seed={j: seed for j in ("1", "2", "3")},
        triples=())


def build_degenerate_seed() -> CoverSpec:
    z = ZPoly.var(0, 1)
    return CoverSpec(
        t_arity=1, fiber_dim=1, ambient_dim=2, max_order=2, eq_degree_bound=4,
        charts=(Chart("1", 1, F(1, 4)),), ambient_charts=(AmbientChart("A", 2),),
        assignment={"1": "A"}, fiber_transitions={}, ambient_transitions={},
        embedding_seed={"1": (z ** 2, z ** 3)}, triples=())


BUILDERS = {
    "trivial": build_trivial,
    "linear": build_linear,
    "threechart": build_threechart,
    "obstructed": build_obstructed,
    "degenerate-seed": build_degenerate_seed,
}


def fixture_text(name: str) -> str:
    """The shipped cover document for ``name``."""
    if name not in BUILDERS:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(NAMES)}")
    return resources.files("defembed").joinpath("gallery", f"{name}.cover").read_text()


def load_fixture(name: str) -> CoverSpec:
    return loads_cover(fixture_text(name))


def write_fixtures(directory, names=NAMES) -> list:
    """Regenerate fixture files from the builders into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    for name in names:
        path = directory / f"{name}.cover"
        path.write_text(dumps_cover(BUILDERS[name]()))
        out.append(path)
    return out
