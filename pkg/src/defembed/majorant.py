"""Majorant series and the convergence certificate.

A :class:`Majorant` is a nonnegative series ``a(s) = sum a_n s^n`` in the
single variable ``s = t_1 + ... + t_d``; its coefficient on ``t^alpha`` is
``a_|alpha| * multinomial(alpha)``.  A t-series ``f`` is dominated,
``f << a``, when for every ``alpha`` the sup of ``|f_alpha|`` over the unit
polydisc is at most that coefficient.  The sup is bounded by the sum of
absolute z-coefficients, so every check here is exact rational arithmetic
and errs on the safe side.

The canonical majorant is ``A(s) = a/(16 b) * sum_{n>=1} b^n s^n / n^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Sequence

from .cover import CoverSpec
from .extension import ExtensionState
from .series import TruncatedSeries, ZPoly, format_rational, multinomial

EPSILON_NOTE = (
    "epsilon0 covers the dominance conditions only; "
    "it is not an effective radius for the embedding property of the extended map")


def coefficient_norm(vec: Sequence[ZPoly]) -> Fraction:
    """Max over components of the sum of absolute coefficients."""
    return max((p.norm1() for p in vec), default=Fraction(0))


@dataclass(frozen=True)
class Majorant:
    coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))
        if any(c < 0 for c in self.coeffs):
            raise ValueError("majorant coefficients must be nonnegative")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int) -> Fraction:
        return self.coeffs[n] if 0 <= n < len(self.coeffs) else Fraction(0)

    def t_coefficient(self, alpha) -> Fraction:
        return self[sum(alpha)] * multinomial(alpha)

    def __add__(self, other: "Majorant") -> "Majorant":
        n = min(len(self.coeffs), len(other.coeffs))
        return Majorant(tuple(self.coeffs[i] + other.coeffs[i] for i in range(n)))

    def __mul__(self, other: "Majorant") -> "Majorant":
        n = min(len(self.coeffs), len(other.coeffs))
        out = [Fraction(0)] * n
        for i, x in enumerate(self.coeffs[:n]):
            if x:
                for j in range(n - i):
                    out[i + j] += x * other.coeffs[j]
        return Majorant(tuple(out))

    def scale(self, c) -> "Majorant":
        return Majorant(tuple(Fraction(c) * x for x in self.coeffs))

    def __pow__(self, k: int) -> "Majorant":
        out = Majorant((Fraction(1),) + (Fraction(0),) * self.order)
        for _ in range(k):
            out = out * self
        return out


@dataclass(frozen=True)
class CanonicalA:
    a: Fraction
    b: Fraction

    def __post_init__(self):
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))
        if self.a <= 0 or self.b <= 0:
            raise ValueError("a and b must be positive")

    def coefficient(self, n: int) -> Fraction:
        if n <= 0:
            return Fraction(0)
        return self.a / (16 * self.b) * self.b ** n / (n * n)

    def majorant(self, order: int) -> Majorant:
        return Majorant(tuple(self.coefficient(n) for n in range(order + 1)))


def domination_ratio(f: TruncatedSeries, maj: Majorant, skip_zero_degree: bool = False):
    """Smallest ``c`` with ``f << c * maj``; None if no finite ``c`` exists."""
    worst = Fraction(0)
    for alpha, vec in f.coeffs.items():
        if skip_zero_degree and not sum(alpha):
            continue
        nrm = coefficient_norm(vec)
        cap = maj.t_coefficient(alpha)
        if cap == 0:
            if nrm:
                return None
            continue
        worst = max(worst, nrm / cap)
    return worst


def dominates(f: TruncatedSeries, maj: Majorant, norm=coefficient_norm) -> bool:
    """``f << maj``: every ``norm(f_alpha) <= maj_|alpha| * multinomial(alpha)``."""
    return all(norm(vec) <= maj.t_coefficient(alpha) for alpha, vec in f.coeffs.items())


def power_bound_check(A: CanonicalA, gamma: int, order: int) -> bool:
    """``A^gamma << (a/b)^(gamma-1) A`` coefficientwise through ``order``."""
    if gamma < 2 or order < gamma:
        raise ValueError("need gamma >= 2 and order >= gamma")
    base = A.majorant(order)
    lhs = base ** gamma
    factor = (A.a / A.b) ** (gamma - 1)
    return all(lhs[n] <= factor * base[n] for n in range(order + 1))


# -- constants -------------------------------------------------------------------


def _smallest_base(coef: Fraction, mult: int, k: int) -> int:
    """Smallest integer c >= 1 with ``|coef| <= c^k * mult``."""
    target = abs(coef) / mult
    if target <= 1:
        return 1
    c = max(1, int(float(target) ** (1.0 / k)) - 1)
    while Fraction(c) ** k < target:
        c += 1
    return c


def _growth_base(polys) -> int:
    c1 = 1
    for p in polys:
        for exp, coef in p.terms.items():
            k = max(sum(exp), 1)
            c1 = max(c1, _smallest_base(coef, multinomial(exp), k))
    return c1


@dataclass
class ConstantsLedger:
    c0: Fraction
    c1: int
    delta: Fraction
    mu: Fraction
    rho: Fraction
    r: int
    n: int
    d: int
    a: Fraction
    b: Fraction
    c4: Fraction | None = None
    flags: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.r + self.n

    @property
    def mu_ratio_term(self):
        """``(1 - mu/delta)^(-n) - 1``, or None when ``mu >= delta``."""
        if self.mu >= self.delta:
            return None
        return (1 - self.mu / self.delta) ** (-self.n) - 1

    @property
    def c3(self):
        term = self.mu_ratio_term
        if term is None:
            return None
        return 2 * self.c0 * (2 * self.c1 ** 2 * self.dim ** 2 * self.a / self.b + term)

    def conditions(self) -> list:
        """The three sufficient conditions with exact left and right sides."""
        N = self.dim
        side_lhs, side_rhs = self.b, 2 * self.c1 * N * self.a
        b_lhs = 4 * self.c0 * self.c1 ** 2 * N ** 2 * self.a / self.b
        term = self.mu_ratio_term
        mu_lhs = None if term is None else 2 * self.c0 * term
        half = Fraction(1, 2)
        return [
            {"name": "b > 2*c1*(r+n)*a", "lhs": side_lhs, "rhs": side_rhs,
             "holds": side_lhs > side_rhs},
            {"name": "4*c0*c1^2*(r+n)^2*a/b < 1/2", "lhs": b_lhs, "rhs": half,
             "holds": b_lhs < half},
            {"name": "2*c0*((1-mu/delta)^(-n)-1) < 1/2", "lhs": mu_lhs, "rhs": half,
             "holds": mu_lhs is not None and mu_lhs < half},
        ]

    def to_dict(self) -> dict:
        fr = lambda x: None if x is None else format_rational(x)  # noqa: E731
        return {
            "a": fr(self.a), "b": fr(self.b), "c0": fr(self.c0), "c1": self.c1,
            "c3": fr(self.c3), "c4": fr(self.c4), "delta": fr(self.delta),
            "mu": fr(self.mu), "rho": fr(self.rho), "r": self.r, "n": self.n,
            "d": self.d, "flags": list(self.flags),
        }


def jacobian_bound(spec: CoverSpec) -> Fraction:
    """Largest coefficient-sum bound of an entry of ``dh/dw`` over used transitions."""
    N = spec.ambient_dim
    best = Fraction(1) if spec.pairs() else Fraction(0)
    for j, k in spec.pairs():
        for p in spec.h_for(j, k):
            for u in range(N):
                best = max(best, p.diff(u).norm1())
    return best


def growth_constant(spec: CoverSpec) -> int:
    polys = []
    for j, k in spec.pairs():
        polys.extend(spec.h_for(j, k))
        polys.extend(spec.g0(j, k))
    return _growth_base(polys)


def displacement(spec: CoverSpec, rho) -> Fraction:
    """Bound for ``|g_jk(z, t) - g_jk(z, 0)|`` on the unit polydisc with ``|t_i| <= rho``."""
    rho = Fraction(rho)
    mu = Fraction(0)
    for pair in spec.pairs():
        g = spec.fiber_transitions[pair]
        for s in range(spec.fiber_dim):
            total = Fraction(0)
            for alpha, vec in g.coeffs.items():
                deg = sum(alpha)
                if deg:
                    total += rho ** deg * vec[s].norm1()
            mu = max(mu, total)
    return mu


def estimate_constants(spec: CoverSpec, a, b, rho, c4=None) -> ConstantsLedger:
    """Constants for the convergence estimates, all exact rationals.

    ``c0`` is one plus the largest coefficient-sum of a Jacobian entry of the
    ambient transitions; ``c1`` the smallest integer with
    ``|coef_beta| <= c1^max(|beta|, 1) * multinomial(beta)`` on every
    transition polynomial (``h`` and ``g(., 0)``); ``mu`` bounds the
    t-displacement of the chart changes for ``|t_i| <= rho``.
    """
    rho = Fraction(rho)
    if rho <= 0:
        raise ValueError("rho must be positive")
    led = ConstantsLedger(
        c0=1 + jacobian_bound(spec), c1=growth_constant(spec), delta=spec.delta,
        mu=displacement(spec, rho), rho=rho, r=spec.r, n=spec.fiber_dim, d=spec.t_arity,
        a=Fraction(a), b=Fraction(b), c4=None if c4 is None else Fraction(c4))
    if led.mu >= led.delta:
        led.flags.append("mu >= delta: displacement bound inapplicable, shrink rho")
    return led


# -- checks on a computed extension -----------------------------------------------


def deformation_series(state: ExtensionState, j: str) -> TruncatedSeries:
    return state.deformation_part(j)


def auto_parameters(spec: CoverSpec, state: ExtensionState) -> tuple:
    """``(a, b)``: twice the smallest admissible ``a`` and ``b = 16 c0 c1^2 (r+n)^2 a``.

    The smallest admissible ``a`` makes ``f^1 - i << (a/16)(t_1 + ... + t_d)``.
    """
    a_min = Fraction(0)
    for j in spec.chart_ids:
        f = state.approximants[j]
        for alpha, vec in f.coeffs.items():
            if sum(alpha) == 1:
                a_min = max(a_min, 16 * coefficient_norm(vec))
    a = 2 * a_min if a_min else Fraction(1)
    c0 = 1 + jacobian_bound(spec)
    c1 = growth_constant(spec)
    b = 16 * c0 * c1 ** 2 * spec.ambient_dim ** 2 * a
    return a, b


@dataclass
class DefectBoundReport:
    passed: bool
    side_condition: dict
    entries: list
    c4_required: dict
    c4_running_max: dict

    def to_dict(self) -> dict:
        fr = format_rational
        return {
            "verdict": "PASS" if self.passed else "FAIL",
            "side_condition": {k: (fr(v) if isinstance(v, Fraction) else v)
                               for k, v in self.side_condition.items()},
            "entries": self.entries,
            "c4_required": {str(k): fr(v) for k, v in self.c4_required.items()},
            "c4_running_max": {str(k): fr(v) for k, v in self.c4_running_max.items()},
        }


def defect_bound_check(state: ExtensionState, ledger: ConstantsLedger,
                       A: CanonicalA) -> DefectBoundReport:
    """Exact dominance checks on every computed order ``>= 2``.

    Per order ``m + 1`` (``m >= 1``): ``psi_jk << c3 A`` on every pair and
    ``phi_j << c3 c4 A`` on every chart, where ``c4`` is the smallest value
    that works at that order (reported, with its running maximum).  Also
    ``f_j^m - i_j << A`` for every computed ``m``.
    """
    if state.order_reached < 1:
        raise ValueError("defect bounds need a state of order >= 1")
    spec = state.spec
    side = ledger.conditions()[0]
    entries = []
    passed = bool(side["holds"])
    c3 = ledger.c3
    maj = A.majorant(state.order_reached)
    c4_required, c4_running = {}, {}
    running = Fraction(0)
    for rec in state.history:
        if rec.order < 2:
            continue
        if c3 is None:
            entries.append({"order": rec.order, "check": "c3", "passed": False,
                            "note": "mu >= delta"})
            passed = False
            continue
        bound = maj.scale(c3)
        for (j, k), psi in sorted(rec.defect.values.items()):
            ok = dominates(psi, bound)
            passed &= ok
            entries.append({"order": rec.order, "check": f"psi[{j},{k}] << c3*A", "passed": ok})
        need = Fraction(0)
        for j, phi in sorted(rec.split.values.items()):
            ratio = domination_ratio(phi, bound)
            if ratio is None:
                need = None
                break
            need = max(need, ratio)
        if need is None:
            entries.append({"order": rec.order, "check": "phi << c3*c4*A", "passed": False})
            passed = False
            continue
        c4_required[rec.order] = need
        running = max(running, need)
        c4_running[rec.order] = running
    c4 = ledger.c4 if ledger.c4 is not None else running
    for rec in state.history:
        if rec.order < 2 or c3 is None:
            continue
        bound = maj.scale(c3 * c4)
        for j, phi in sorted(rec.split.values.items()):
            ok = dominates(phi, bound)
            passed &= ok
            entries.append({"order": rec.order, "check": f"phi[{j}] << c3*c4*A", "passed": ok})
    for j in spec.chart_ids:
        part = state.deformation_part(j)
        for m in range(1, state.order_reached + 1):
            ok = dominates(part.with_order(m), maj)
            passed &= ok
            entries.append({"order": m, "check": f"f[{j}]^{m} - i[{j}] << A", "passed": ok})
    return DefectBoundReport(passed, side, entries, c4_required, c4_running)


def c4_stable(running: dict) -> bool:
    """No growth of the running maximum over the last half of the orders."""
    orders = sorted(running)
    if len(orders) < 2:
        return True
    half = orders[(len(orders) - 1) // 2]
    return running[orders[-1]] == running[half]


def homogeneous_norms(state: ExtensionState, j: str, t_abs) -> dict:
    """Bounds ``sum_{|alpha|=m} t_abs^m * norm(f_alpha)`` for m = 1..order."""
    t_abs = Fraction(t_abs)
    out = {m: Fraction(0) for m in range(1, state.order_reached + 1)}
    for alpha, vec in state.approximants[j].coeffs.items():
        m = sum(alpha)
        if m:
            out[m] += t_abs ** m * coefficient_norm(vec)
    return out


def geometric_decay_check(state: ExtensionState, b, t_abs) -> dict:
    """Successive homogeneous-part norms shrink by at least ``b * t_abs < 1``."""
    ratio = Fraction(b) * Fraction(t_abs)
    charts = {}
    ok = ratio < 1
    for j in state.spec.chart_ids:
        norms = homogeneous_norms(state, j, t_abs)
        steps = []
        for m in range(1, state.order_reached):
            good = norms[m + 1] <= ratio * norms[m]
            ok &= good
            steps.append({"from": m, "to": m + 1, "passed": good})
        charts[j] = {"norms": {str(m): format_rational(v) for m, v in norms.items()},
                     "steps": steps}
    return {"ratio_bound": format_rational(ratio), "t_abs": format_rational(Fraction(t_abs)),
            "passed": ok, "charts": charts}


@dataclass
class ConvergenceCertificate:
    ledger: ConstantsLedger
    conditions: list
    epsilon0: Fraction | None
    verdict: str
    failed: list
    defect_report: DefectBoundReport | None
    decay: dict | None
    probes: list

    @property
    def certified(self) -> bool:
        return self.verdict == "CERTIFIED"

    def to_dict(self) -> dict:
        fr = lambda x: None if x is None else format_rational(x)  # noqa: E731
        return {
            "verdict": self.verdict,
            "failed_conditions": self.failed,
            "epsilon0": fr(self.epsilon0),
            "constants": self.ledger.to_dict(),
            "conditions": [{"name": c["name"], "lhs": fr(c["lhs"]), "rhs": fr(c["rhs"]),
                            "holds": c["holds"]} for c in self.conditions],
            "rho_probes": [fr(r) for r in self.probes],
            "defect_bounds": None if self.defect_report is None else self.defect_report.to_dict(),
            "geometric_decay": self.decay,
            "note": EPSILON_NOTE,
        }


def certify(spec: CoverSpec, state: ExtensionState, a, b, rho,
            max_halvings: int = 64) -> ConvergenceCertificate:
    """Evaluate the sufficient conditions for convergence and pick ``epsilon0``.

    ``rho`` is halved until the displacement condition holds (at most
    ``max_halvings`` times).  ``epsilon0 = min(rho, 1 / (2 b d))``: within it
    the t-dependent condition holds and ``|t_1 + ... + t_d| <= 1/(2b)`` keeps
    ``A`` inside its disc of convergence.
    """
    a, b, rho = Fraction(a), Fraction(b), Fraction(rho)
    probes = [rho]
    ledger = estimate_constants(spec, a, b, rho)
    halvings = 0
    while not ledger.conditions()[2]["holds"] and halvings < max_halvings:
        rho /= 2
        halvings += 1
        probes.append(rho)
        ledger = estimate_constants(spec, a, b, rho)
    conditions = ledger.conditions()
    failed = [c["name"] for c in conditions if not c["holds"]]
    report = None
    decay = None
    epsilon0 = None
    if state.order_reached < 1:
        failed.append("extension order >= 1")
    else:
        report = defect_bound_check(state, ledger, CanonicalA(a, b))
        running = report.c4_running_max
        top = max(running.values(), default=Fraction(0))
        ledger.c4 = Fraction(max(2, ceil(top)))
        if not report.passed:
            failed.append("defect bounds")
        if not c4_stable(running):
            failed.append("c4 running maximum not stable")
    if conditions[2]["holds"]:
        epsilon0 = min(rho, 1 / (2 * b * spec.t_arity))
        if report is not None:
            decay = geometric_decay_check(state, b, epsilon0 / 2)
    verdict = "UNCERTIFIABLE" if failed else "CERTIFIED"
    return ConvergenceCertificate(ledger, conditions, epsilon0,
                                  verdict, failed, report, decay, probes)
