"""Robust planning over rectangular uncertainty boxes.

Covertness is hardest to guarantee at ``(eta_min, nb_min)`` and reliability at
``(eta_min, nb_max)``; every quantity below is evaluated at one of those two
corners.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .model import (
    ChannelParams,
    PolicyParams,
    covertness_constant,
    depolarizing_p,
    hashing_rate,
    pauli_vector,
    shannon_entropy,
)

U_SEARCH_MAX = 1.0 - 1e-9


class QOutOfRange(ValueError):
    """The square-root-law transmission probability would exceed 1."""


@dataclass(frozen=True)
class Provenance:
    kind: str  # "symmetric", "asymmetric" or "explicit"
    margins: tuple[float, ...] = ()


@dataclass(frozen=True)
class UncertaintyBox:
    eta_min: float
    eta_max: float
    nb_min: float
    nb_max: float
    provenance: Provenance = field(default=Provenance("explicit"), compare=False)

    def __post_init__(self):
        if not (0.0 < self.eta_min <= self.eta_max <= 1.0):
            raise ValueError(
                f"need 0 < eta_min <= eta_max <= 1, got [{self.eta_min}, {self.eta_max}]"
            )
        if not (0.0 < self.nb_min <= self.nb_max) or not math.isfinite(self.nb_max):
            raise ValueError(
                f"need 0 < nb_min <= nb_max, got [{self.nb_min}, {self.nb_max}]"
            )

    @property
    def is_point(self) -> bool:
        return self.eta_min == self.eta_max and self.nb_min == self.nb_max


def _check_margin(name: str, value: float) -> None:
    if not (0.0 <= value < 1.0):
        raise ValueError(f"margin {name} must lie in [0, 1), got {value!r}")


def make_box_asymmetric(eta0: float, nb0: float, a: float, b: float, c: float, d: float) -> UncertaintyBox:
    """Box ``[(1-a) eta0, min((1+b) eta0, 1)] x [(1-c) nb0, (1+d) nb0]``."""
    ChannelParams(eta0, nb0)
    for name, v in zip("abcd", (a, b, c, d)):
        _check_margin(name, v)
    return UncertaintyBox(
        eta_min=(1.0 - a) * eta0,
        eta_max=min((1.0 + b) * eta0, 1.0),
        nb_min=(1.0 - c) * nb0,
        nb_max=(1.0 + d) * nb0,
        provenance=Provenance("asymmetric", (a, b, c, d)),
    )


def make_box_symmetric(eta0: float, nb0: float, u: float) -> UncertaintyBox:
    """Relative uncertainty ``u`` on both parameters; ``u = 0`` gives a point box."""
    ChannelParams(eta0, nb0)
    _check_margin("u", u)
    return UncertaintyBox(
        eta_min=(1.0 - u) * eta0,
        eta_max=min((1.0 + u) * eta0, 1.0),
        nb_min=(1.0 - u) * nb0,
        nb_max=(1.0 + u) * nb0,
        provenance=Provenance("symmetric", (u,)),
    )


def _corner(eta: float, nb: float) -> ChannelParams:
    if eta >= 1.0:
        raise ValueError("degenerate box: eta_min = 1 leaves the covertness constant undefined")
    return ChannelParams(eta, nb)


def covertness_corner(box: UncertaintyBox) -> ChannelParams:
    """Corner minimizing the covertness constant."""
    return _corner(box.eta_min, box.nb_min)


def reliability_corner(box: UncertaintyBox) -> ChannelParams:
    """Corner maximizing the depolarizing probability."""
    return _corner(box.eta_min, box.nb_max)


def _q_bound(c_cov: float, policy: PolicyParams) -> float:
    q = 2.0 * policy.delta * c_cov / math.sqrt(policy.n)
    if q > 1.0:
        raise QOutOfRange(
            f"transmission probability {q:.6g} > 1: n={policy.n} is too small for "
            f"delta={policy.delta} at c_cov={c_cov:.6g}"
        )
    return q


def _payload(c_cov: float, rate: float, policy: PolicyParams) -> float:
    return 2.0 * math.sqrt(policy.n) * c_cov * rate * policy.delta


@dataclass(frozen=True)
class RobustPlan:
    q_rob: float
    r_rob: float
    covert_corner: ChannelParams
    reliab_corner: ChannelParams
    m_rob: float
    c_cov_rob: float
    p_worst: float


def robust_plan(box: UncertaintyBox, policy: PolicyParams) -> RobustPlan:
    """Robust static policy and its guaranteed expected covert payload per frame."""
    cc = covertness_corner(box)
    rc = reliability_corner(box)
    c_rob = covertness_constant(cc)
    p_worst = depolarizing_p(rc)
    r_worst = hashing_rate(p_worst)
    q_rob = _q_bound(c_rob, policy)
    return RobustPlan(
        q_rob=q_rob,
        r_rob=r_worst,
        covert_corner=cc,
        reliab_corner=rc,
        m_rob=_payload(c_rob, r_worst, policy),
        c_cov_rob=c_rob,
        p_worst=p_worst,
    )


@dataclass(frozen=True)
class NaivePlan:
    q_nom: float
    r_nom: float
    scheduled_payload: float


def naive_plan(nominal: ChannelParams, policy: PolicyParams) -> NaivePlan:
    """Saturate both constraints at the nominal point, ignoring uncertainty."""
    c_nom = covertness_constant(nominal)
    q_nom = _q_bound(c_nom, policy)
    r_nom = hashing_rate(depolarizing_p(nominal))
    return NaivePlan(q_nom, r_nom, _payload(c_nom, r_nom, policy))


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    covertness_witness: Optional[ChannelParams]
    reliability_witness: Optional[ChannelParams]
    scheduled_payload: float
    guaranteed_payload: float


def naive_feasibility(box: UncertaintyBox, nominal: ChannelParams, policy: PolicyParams) -> FeasibilityVerdict:
    """Check the nominally tuned policy against the worst corners of ``box``.

    Any violated constraint makes the certified payload of the naive policy zero.
    """
    plan = naive_plan(nominal, policy)
    cc = covertness_corner(box)
    rc = reliability_corner(box)
    q_allowed = 2.0 * policy.delta * covertness_constant(cc) / math.sqrt(policy.n)
    covert_w = cc if plan.q_nom > q_allowed else None
    reliab_w = rc if plan.r_nom > hashing_rate(depolarizing_p(rc)) else None
    feasible = covert_w is None and reliab_w is None
    return FeasibilityVerdict(
        feasible=feasible,
        covertness_witness=covert_w,
        reliability_witness=reliab_w,
        scheduled_payload=plan.scheduled_payload,
        guaranteed_payload=plan.scheduled_payload if feasible else 0.0,
    )


def aligned_payload(box: UncertaintyBox, policy: PolicyParams) -> float:
    """Hypothetical payload with both constraints evaluated at the reliability corner."""
    rc = reliability_corner(box)
    c_al = covertness_constant(rc)
    _q_bound(c_al, policy)
    return _payload(c_al, hashing_rate(depolarizing_p(rc)), policy)


@dataclass(frozen=True)
class TaxReport:
    m_rob: float
    m_aligned: float
    tax_fraction: float
    post_cliff: bool  # True when tax_fraction is the 1.0 convention, not a ratio


def security_tax(box: UncertaintyBox, policy: PolicyParams) -> TaxReport:
    plan = robust_plan(box, policy)
    m_al = aligned_payload(box, policy)
    if plan.r_rob == 0.0 or m_al <= 0.0:
        return TaxReport(plan.m_rob, m_al, 1.0, True)
    return TaxReport(plan.m_rob, m_al, (m_al - plan.m_rob) / m_al, False)


def bisect_threshold(pred: Callable[[float], bool], lo: float, hi: float, xtol: float, max_iter: int = 200) -> float:
    """Smallest ``x`` in ``(lo, hi]`` with ``pred(x)`` true, to within ``xtol``.

    ``pred`` must be monotone (false then true) with ``pred(lo)`` false and
    ``pred(hi)`` true. The returned point always satisfies ``pred``.
    """
    for _ in range(max_iter):
        if hi - lo <= xtol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


@lru_cache(maxsize=None)
def solve_p_crit(xtol: float = 1e-12) -> float:
    """Depolarizing probability at which the hashing bound reaches zero."""
    return bisect_threshold(lambda p: shannon_entropy(pauli_vector(p)) >= 1.0, 0.0, 1.0, xtol)


def p_worst_symmetric(nominal: ChannelParams, u: float) -> float:
    return depolarizing_p(reliability_corner(make_box_symmetric(nominal.eta, nominal.n_bar_b, u)))


def solve_u_crit(nominal: ChannelParams, xtol: float = 1e-12) -> Optional[float]:
    """Smallest symmetric uncertainty level at which the worst-case rate vanishes.

    Returns ``None`` when the threshold is not crossed on ``[0, 1 - 1e-9]``.
    """
    p_crit = solve_p_crit()

    def crossed(u: float) -> bool:
        return p_worst_symmetric(nominal, u) >= p_crit

    if crossed(0.0):
        return 0.0
    if not crossed(U_SEARCH_MAX):
        return None
    return bisect_threshold(crossed, 0.0, U_SEARCH_MAX, xtol)


@dataclass(frozen=True)
class CliffResult:
    p_crit: float
    u_crit: Optional[float]


def cliff(nominal: ChannelParams) -> CliffResult:
    return CliffResult(solve_p_crit(), solve_u_crit(nominal))


@dataclass
class Table:
    """Column names plus rows of plain numbers (or short strings), in output order."""

    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


def _grid_shape(grid_n) -> tuple[int, int]:
    if isinstance(grid_n, (tuple, list)):
        n_eta, n_nb = int(grid_n[0]), int(grid_n[1])
    else:
        n_eta = n_nb = int(grid_n)
    if n_eta < 2 or n_nb < 2:
        raise ValueError("design map needs at least 2 points per axis")
    return n_eta, n_nb


def design_cell(eta0: float, nb0: float, u: float, policy: PolicyParams) -> tuple[float, float, float, float, int]:
    """One design-map cell: ``(eta0, nb0, u_crit, m_rob, q_out_of_range)``."""
    nominal = ChannelParams(eta0, nb0)
    u_crit = solve_u_crit(nominal)
    try:
        m_rob = robust_plan(make_box_symmetric(eta0, nb0, u), policy).m_rob
        flag = 0
    except QOutOfRange:
        m_rob, flag = math.nan, 1
    return (eta0, nb0, math.nan if u_crit is None else u_crit, m_rob, flag)


def design_map(
    eta_range: tuple[float, float],
    nb_range: tuple[float, float],
    grid_n,
    u: float,
    policy: PolicyParams,
    eta_axis: Sequence[float] | None = None,
    nb_axis: Sequence[float] | None = None,
) -> Table:
    """Critical uncertainty and robust payload over a grid of nominal points.

    Rows are ordered eta-major. Explicit axes override the linspace grids.
    """
    n_eta, n_nb = _grid_shape(grid_n)
    etas = [float(x) for x in (eta_axis if eta_axis is not None else np.linspace(*eta_range, n_eta))]
    nbs = [float(x) for x in (nb_axis if nb_axis is not None else np.linspace(*nb_range, n_nb))]
    table = Table(("eta0", "nb0", "u_crit", "m_rob", "q_out_of_range"),
                  meta={"u": u, "n": policy.n, "delta": policy.delta})
    for eta0 in etas:
        for nb0 in nbs:
            table.rows.append(design_cell(eta0, nb0, u, policy))
    return table


def _u_label(u: float) -> str:
    return f"m_rob_u{u:g}"


def sweep_payload_vs_n(nominal: ChannelParams, u_levels: Iterable[float], n_values: Iterable[int], delta: float) -> Table:
    u_levels = list(u_levels)
    table = Table(("n", "perfect") + tuple(_u_label(u) for u in u_levels),
                  meta={"eta0": nominal.eta, "nb0": nominal.n_bar_b, "delta": delta})
    boxes = [make_box_symmetric(nominal.eta, nominal.n_bar_b, u) for u in u_levels]
    for n in n_values:
        policy = PolicyParams(int(n), delta)
        perfect = naive_plan(nominal, policy).scheduled_payload
        row = [int(n), perfect] + [robust_plan(box, policy).m_rob for box in boxes]
        table.rows.append(tuple(row))
    return table


def sweep_payload_vs_u(nominal: ChannelParams, u_values: Iterable[float], policy: PolicyParams) -> Table:
    table = Table(("u", "c_cov_rob", "p_worst", "r_worst", "m_rob"),
                  meta={"eta0": nominal.eta, "nb0": nominal.n_bar_b, "n": policy.n, "delta": policy.delta})
    for u in u_values:
        plan = robust_plan(make_box_symmetric(nominal.eta, nominal.n_bar_b, u), policy)
        table.rows.append((float(u), plan.c_cov_rob, plan.p_worst, plan.r_rob, plan.m_rob))
    return table


def sweep_security_tax(nominal: ChannelParams, u_values: Iterable[float], policy: PolicyParams) -> Table:
    table = Table(("u", "m_rob", "m_aligned", "tax_fraction", "post_cliff"),
                  meta={"eta0": nominal.eta, "nb0": nominal.n_bar_b, "n": policy.n, "delta": policy.delta})
    for u in u_values:
        rep = security_tax(make_box_symmetric(nominal.eta, nominal.n_bar_b, u), policy)
        table.rows.append((float(u), rep.m_rob, rep.m_aligned, rep.tax_fraction, int(rep.post_cliff)))
    return table


@dataclass(frozen=True)
class SymAsymComparison:
    table: Table
    asym_payload: float
    crossing_u: Optional[float]


def compare_sym_asym(
    nominal: ChannelParams,
    asym: tuple[float, float, float, float],
    u_values: Iterable[float],
    policy: PolicyParams,
    xtol: float = 1e-12,
) -> SymAsymComparison:
    """Symmetric payload versus a fixed asymmetric box, plus the equivalent symmetric margin.

    The crossing is the smallest ``u`` whose symmetric payload drops to the
    asymmetric one; ``None`` if the two curves are not bracketed on ``[0, u_crit]``.
    """
    eta0, nb0 = nominal.eta, nominal.n_bar_b
    m_asym = robust_plan(make_box_asymmetric(eta0, nb0, *asym), policy).m_rob

    def m_sym(u: float) -> float:
        return robust_plan(make_box_symmetric(eta0, nb0, u), policy).m_rob

    table = Table(("u", "m_rob_sym", "m_rob_asym"),
                  meta={"eta0": eta0, "nb0": nb0, "asym": list(asym), "n": policy.n, "delta": policy.delta})
    for u in u_values:
        table.rows.append((float(u), m_sym(u), m_asym))

    crossing = None
    u_hi = solve_u_crit(nominal)
    if u_hi is None:
        u_hi = U_SEARCH_MAX
    below = lambda u: m_sym(u) <= m_asym
    if below(0.0):
        crossing = 0.0
    elif below(u_hi):
        crossing = bisect_threshold(below, 0.0, u_hi, xtol)
    table.meta["crossing_u"] = crossing
    return SymAsymComparison(table, m_asym, crossing)
