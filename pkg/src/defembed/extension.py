"""Order-by-order construction of the extended embedding.

Starting from ``f_j = i_j`` the state is advanced one t-degree at a time:
the glue defect ``h_jk(f_k) - f_j(g_jk, t)`` in degree ``m + 1`` is a
twisted 1-cocycle, it is split as a coboundary of some ``phi``, and
``f_j <- f_j + phi_j`` kills it.  After every step the glue equation is
re-verified exactly through the new order.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from .cech import (
    JacobianTwist,
    ObstructionError,
    OneCochain,
    ZeroCochain,
    cocycle_check,
    default_ansatz_degree,
    split_cocycle,
)
from .cover import CoverSpec, seed_congruence_defect
from .linalg import rank
from .series import (
    TruncatedSeries,
    compose_ambient,
    compose_fiber,
    first_difference,
    format_rational,
    homogeneous_part,
)

log = logging.getLogger(__name__)


class ExtensionError(RuntimeError):
    """Seed incompatibility, or a failed exact re-verification (a bug)."""


@dataclass(frozen=True)
class OrderRecord:
    order: int
    defect: OneCochain
    split: ZeroCochain
    ansatz_degree: int
    cocycle_passed: bool

    @property
    def defect_norm(self) -> Fraction:
        return self.defect.norm()

    @property
    def split_norm(self) -> Fraction:
        return self.split.norm()


@dataclass(frozen=True)
class ExtensionState:
    spec: CoverSpec
    order_reached: int
    approximants: dict
    twist: JacobianTwist = field(compare=False, repr=False)
    history: tuple = ()

    def seed_part(self, j: str) -> TruncatedSeries:
        return homogeneous_part(self.approximants[j], 0)

    def deformation_part(self, j: str) -> TruncatedSeries:
        """``f_j - i_j``: everything of positive t-degree."""
        f = self.approximants[j]
        return f - homogeneous_part(f, 0)


def glue_residual(spec: CoverSpec, approximants: dict, j: str, k: str,
                  order: int) -> TruncatedSeries:
    """``h_jk(f_k(z_k, t)) - f_j(g_jk(z_k, t), t)`` through t-degree ``order``."""
    f_k = approximants[k].with_order(order)
    f_j = approximants[j].with_order(order)
    lhs = compose_ambient(spec.h_for(j, k), f_k)
    rhs = compose_fiber(f_j, spec.fiber_transitions[(j, k)].with_order(order))
    return lhs - rhs


def verify_congruence(state: ExtensionState, order: int | None = None) -> dict:
    """Per pair: does the glue equation hold exactly through ``order``?"""
    m = state.order_reached if order is None else order
    out = {}
    for j, k in state.spec.pairs():
        res = glue_residual(state.spec, state.approximants, j, k, m)
        out[(j, k)] = first_difference(res, res.scale(0), m) is None
    return out


def init(spec: CoverSpec) -> ExtensionState:
    """State at order 0 with ``f_j = i_j``; the order-0 glue equation must hold."""
    for j, k in spec.pairs():
        bad = seed_congruence_defect(spec, j, k)
        if bad is not None:
            alpha, s, poly = bad
            raise ExtensionError(
                f"seed is incompatible on pair ({j},{k}): component {s} differs by {poly!r}")
    approximants = {
        j: TruncatedSeries.constant(spec.embedding_seed[j], spec.t_arity, 0)
        for j in spec.chart_ids
    }
    return ExtensionState(spec, 0, approximants, JacobianTwist(spec), ())


def compute_defect(state: ExtensionState) -> OneCochain:
    """Degree ``m + 1`` slice of the glue defect on every ordered pair."""
    spec, m = state.spec, state.order_reached
    values = {}
    for j, k in spec.pairs():
        res = glue_residual(spec, state.approximants, j, k, m + 1)
        low = first_difference(res, res.scale(0), m)
        if low is not None:
            raise ExtensionError(f"glue equation fails below order {m + 1} on ({j},{k}): {low}")
        values[(j, k)] = homogeneous_part(res, m + 1)
    return OneCochain(m + 1, values)


def extend_one_order(state: ExtensionState, ansatz_degree: int | None = None) -> ExtensionState:
    """Advance to order ``m + 1``; raises :class:`ObstructionError` if the defect won't split."""
    spec, m = state.spec, state.order_reached
    if m + 1 > spec.max_order:
        raise ValueError(f"spec data is only given through order {spec.max_order}")
    psi = compute_defect(state)
    report = cocycle_check(psi, state.twist, spec)
    if not report.passed:
        log.warning("defect at order %d fails the cocycle identity", m + 1)
    degree = default_ansatz_degree(psi, state.twist) if ansatz_degree is None else ansatz_degree
    try:
        phi = split_cocycle(psi, state.twist, spec, degree)
    except ObstructionError as exc:
        exc.obstruction.order = m + 1
        raise
    approximants = {j: state.approximants[j].with_order(m + 1) + phi.values[j]
                    for j in spec.chart_ids}
    for j, k in spec.pairs():
        res = glue_residual(spec, approximants, j, k, m + 1)
        bad = first_difference(res, res.scale(0), m + 1)
        if bad is not None:
            raise ExtensionError(
                f"glue equation not exact at order {m + 1} on ({j},{k}) after splitting: {bad}")
    record = OrderRecord(m + 1, psi, phi, degree, report.passed)
    return replace(state, order_reached=m + 1, approximants=approximants,
                   history=state.history + (record,))


def run_to_order(spec: CoverSpec, order: int, ansatz_degree: int | None = None) -> ExtensionState:
    if order > spec.max_order:
        raise ValueError(f"requested order {order} exceeds max_order {spec.max_order}")
    state = init(spec)
    while state.order_reached < order:
        state = extend_one_order(state, ansatz_degree)
    return state


# -- immersion / injectivity spot checks -------------------------------------------


def default_sample_points(n: int) -> list:
    """Five fixed points inside the unit polydisc."""
    F = Fraction
    pts = [
        [F(0)] * n,
        [F(1, 4)] * n,
        [F(-1, 4)] * n,
        [F(1, 2) if i % 2 == 0 else F(-1, 2) for i in range(n)],
        [F(-1, 3) if i % 2 == 0 else F(1, 5) for i in range(n)],
    ]
    return [tuple(p) for p in pts]


@dataclass
class ImmersionReport:
    t_sample: tuple
    entries: list
    warnings: list

    @property
    def status(self) -> str:
        return "WARN" if self.warnings else "OK"

    def to_dict(self) -> dict:
        return {"status": self.status,
                "t_sample": [format_rational(x) for x in self.t_sample],
                "entries": self.entries, "warnings": self.warnings}


def immersion_spot_check(state: ExtensionState, t_sample: Sequence,
                         points: dict | Sequence | None = None) -> ImmersionReport:
    """Sampled rank and separation check of ``f_j(., t_sample)``; a report, not a proof.

    ``points`` is either one list of z-samples used on every chart or a
    mapping chart -> list.  Ranks are exact (rational elimination).
    """
    spec = state.spec
    n = spec.fiber_dim
    t_sample = tuple(Fraction(x) for x in t_sample)
    if points is None:
        points = default_sample_points(n)
    entries, warnings = [], []
    for j in spec.chart_ids:
        pts = points[j] if isinstance(points, dict) else points
        f = state.approximants[j]
        images = []
        for z in pts:
            jac = f.z_jacobian(z, t_sample)
            rk = rank(jac)
            value = f.evaluate(z, t_sample)
            images.append(value)
            entries.append({"chart": j, "point": [format_rational(x) for x in z],
                            "rank": rk, "full_rank": rk == n})
            if rk != n:
                warnings.append(f"chart {j}: z-Jacobian has rank {rk} < {n} at "
                                f"{[format_rational(x) for x in z]}")
        sep = None
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                if tuple(pts[a]) == tuple(pts[b]):
                    continue
                gap = max(abs(x - y) for x, y in zip(images[a], images[b]))
                sep = gap if sep is None else min(sep, gap)
                if gap == 0:
                    warnings.append(f"chart {j}: samples {a} and {b} collide")
        entries.append({"chart": j, "min_separation":
                        None if sep is None else format_rational(sep)})
    return ImmersionReport(t_sample, entries, warnings)
