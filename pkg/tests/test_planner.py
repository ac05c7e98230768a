import math

import numpy as np
import pytest

from covertbound.model import (
    ChannelParams,
    PolicyParams,
    covertness_constant,
    depolarizing_p,
    hashing_rate,
    pauli_vector,
    shannon_entropy,
)
from covertbound import planner
from covertbound.planner import (
    QOutOfRange,
    UncertaintyBox,
    aligned_payload,
    bisect_threshold,
    compare_sym_asym,
    covertness_corner,
    design_map,
    make_box_asymmetric,
    make_box_symmetric,
    naive_feasibility,
    naive_plan,
    reliability_corner,
    robust_plan,
    security_tax,
    solve_p_crit,
    solve_u_crit,
    sweep_payload_vs_n,
    sweep_payload_vs_u,
)

NOMINAL = ChannelParams(0.9, 0.12)
# 40-digit mpmath roots, frozen
P_CRIT = 0.25238616655364235
U_CRIT_09_012 = 0.088539816024432
U_CRIT_099_0001 = 0.24388927643542765


def _box_tuple(box):
    return (box.eta_min, box.eta_max, box.nb_min, box.nb_max)


def test_symmetric_box_examples():
    np.testing.assert_allclose(_box_tuple(make_box_symmetric(0.9, 0.12, 0.05)), [0.855, 0.945, 0.114, 0.126], atol=1e-15)
    assert _box_tuple(make_box_symmetric(0.9, 0.12, 0.0)) == (0.9, 0.9, 0.12, 0.12)
    assert make_box_symmetric(0.98, 0.02, 0.05).eta_max == 1.0


def test_symmetric_box_provenance():
    box = make_box_symmetric(0.9, 0.12, 0.05)
    assert box.provenance.kind == "symmetric"
    assert box.provenance.margins == (0.05,)


@pytest.mark.parametrize("u", [1.0, 1.5, -0.01])
def test_symmetric_box_rejects_bad_u(u):
    with pytest.raises(ValueError):
        make_box_symmetric(0.9, 0.12, u)


def test_asymmetric_box_examples():
    np.testing.assert_allclose(
        _box_tuple(make_box_asymmetric(0.9, 0.12, 0.02, 0.08, 0.01, 0.12)), [0.882, 0.972, 0.1188, 0.1344], atol=1e-15
    )
    assert _box_tuple(make_box_asymmetric(0.9, 0.12, 0, 0, 0, 0)) == (0.9, 0.9, 0.12, 0.12)
    np.testing.assert_allclose(_box_tuple(make_box_asymmetric(0.5, 1.0, 0.5, 0.9, 0.5, 0.5)), [0.25, 0.95, 0.5, 1.5])


def test_asymmetric_box_rejects_margin_one():
    with pytest.raises(ValueError):
        make_box_asymmetric(0.9, 0.12, 0.0, 0.0, 1.0, 0.0)


@pytest.mark.parametrize("bounds", [(0.0, 0.5, 0.1, 0.2), (0.6, 0.5, 0.1, 0.2), (0.5, 1.01, 0.1, 0.2), (0.5, 0.6, 0.0, 0.2), (0.5, 0.6, 0.3, 0.2)])
def test_box_invariants(bounds):
    with pytest.raises(ValueError):
        UncertaintyBox(*bounds)


def test_corner_examples():
    box = make_box_symmetric(0.9, 0.12, 0.05)
    cc, rc = covertness_corner(box), reliability_corner(box)
    assert (cc.eta, cc.n_bar_b) == pytest.approx((0.855, 0.114), abs=1e-15)
    assert (rc.eta, rc.n_bar_b) == pytest.approx((0.855, 0.126), abs=1e-15)
    point = make_box_symmetric(0.9, 0.12, 0.0)
    assert covertness_corner(point) == NOMINAL == reliability_corner(point)


def test_corner_rejects_eta_min_one():
    with pytest.raises(ValueError):
        covertness_corner(UncertaintyBox(1.0, 1.0, 0.1, 0.2))


def _random_boxes(rng, count):
    boxes = []
    for i in range(count):
        eta0 = rng.uniform(0.05, 0.99)
        nb0 = rng.uniform(0.001, 2.0)
        kind = i % 3
        if kind == 0:
            boxes.append(make_box_symmetric(eta0, nb0, rng.uniform(0, 0.5)))
        elif kind == 1:
            boxes.append(make_box_asymmetric(eta0, nb0, *rng.uniform(0, 0.5, 4)))
        else:
            lo, hi = sorted(rng.uniform(0.05, 0.99, 2))
            nlo, nhi = sorted(rng.uniform(0.001, 2.0, 2))
            boxes.append(UncertaintyBox(lo, hi, nlo, nhi))
    return boxes


def _grid_extremes(box, m=50):
    etas = np.linspace(box.eta_min, box.eta_max, m)
    etas = etas[etas < 1.0]
    nbs = np.linspace(box.nb_min, box.nb_max, m)
    cells = [(e, n) for e in etas for n in nbs]
    c_vals = [covertness_constant(ChannelParams(e, n)) for e, n in cells]
    p_vals = [depolarizing_p(ChannelParams(e, n)) for e, n in cells]
    return cells[int(np.argmin(c_vals))], min(c_vals), cells[int(np.argmax(p_vals))], max(p_vals)


def test_corner_extremizers_match_grid_oracle(rng):
    boxes = _random_boxes(rng, 100)
    assert any(b.eta_max == 1.0 for b in boxes)
    for box in boxes:
        c_cell, c_min, p_cell, p_max = _grid_extremes(box)
        cc, rc = covertness_corner(box), reliability_corner(box)
        assert c_cell == (cc.eta, cc.n_bar_b)
        assert p_cell == (rc.eta, rc.n_bar_b)
        assert covertness_constant(cc) == c_min
        assert depolarizing_p(rc) == p_max


def test_clamped_boxes_stay_finite(policy):
    for eta0 in (0.96, 0.98, 0.995):
        for u in (0.05, 0.2, 0.6):
            box = make_box_symmetric(eta0, 0.05, u)
            if (1 + u) * eta0 > 1:
                assert box.eta_max == 1.0
            plan = robust_plan(box, policy)
            assert all(math.isfinite(x) for x in (plan.q_rob, plan.r_rob, plan.m_rob))


@pytest.mark.parametrize(
    "box,expected,tol",
    [
        (UncertaintyBox(0.90, 0.98, 0.02, 0.12), 655.0, 0.5),
        (UncertaintyBox(0.80, 0.90, 0.001, 0.02), 22.82, 0.05),
        (make_box_symmetric(0.9, 0.12, 0.05), 440.2, 0.5),
    ],
)
def test_robust_plan_payloads(box, expected, tol, policy):
    assert robust_plan(box, policy).m_rob == pytest.approx(expected, abs=tol)


def test_robust_plan_identity_and_corners(rng):
    for box in _random_boxes(rng, 200):
        policy = PolicyParams(int(10 ** rng.uniform(6, 12)), rng.uniform(0.001, 0.3))
        try:
            plan = robust_plan(box, policy)
        except QOutOfRange:
            continue
        assert plan.q_rob == 2 * policy.delta * covertness_constant(plan.covert_corner) / math.sqrt(policy.n)
        assert plan.m_rob == pytest.approx(policy.n * plan.q_rob * plan.r_rob, rel=1e-9, abs=0.0)
        assert plan.covert_corner == ChannelParams(box.eta_min, box.nb_min)
        assert plan.reliab_corner == ChannelParams(box.eta_min, box.nb_max)


def test_robust_plan_rejects_q_above_one():
    box = make_box_symmetric(0.99, 1.0, 0.0)
    with pytest.raises(QOutOfRange):
        robust_plan(box, PolicyParams(100, 0.4))


def test_asymmetric_plans_match_explicit_boxes(policy):
    asym = make_box_asymmetric(0.9, 0.12, 0.02, 0.08, 0.01, 0.12)
    explicit = UncertaintyBox(*_box_tuple(asym))
    assert robust_plan(asym, policy) == robust_plan(explicit, policy)
    assert covertness_corner(asym) == covertness_corner(explicit)


def test_naive_plan_anchor(policy):
    plan = naive_plan(NOMINAL, policy)
    assert plan.scheduled_payload == pytest.approx(1673.9, abs=1.0)
    assert plan.q_nom == 2 * policy.delta * covertness_constant(NOMINAL) / math.sqrt(policy.n)
    assert plan.scheduled_payload == pytest.approx(policy.n * plan.q_nom * plan.r_nom, rel=1e-12)


def test_naive_plan_scaling():
    small = naive_plan(NOMINAL, PolicyParams(100_000_000, 1e-9)).scheduled_payload
    assert small < 1e-4
    p1 = naive_plan(NOMINAL, PolicyParams(100_000_000, 0.05)).scheduled_payload
    p4 = naive_plan(NOMINAL, PolicyParams(400_000_000, 0.05)).scheduled_payload
    assert p4 / p1 == pytest.approx(2.0, rel=1e-12)


def test_naive_feasibility_anchor(policy):
    verdict = naive_feasibility(make_box_symmetric(0.9, 0.12, 0.05), NOMINAL, policy)
    assert not verdict.feasible
    box = make_box_symmetric(0.9, 0.12, 0.05)
    assert verdict.covertness_witness == covertness_corner(box)
    assert verdict.reliability_witness == reliability_corner(box)
    assert verdict.guaranteed_payload == 0.0


def test_naive_feasibility_point_box(policy):
    verdict = naive_feasibility(make_box_symmetric(0.9, 0.12, 0.0), NOMINAL, policy)
    assert verdict.feasible
    assert verdict.guaranteed_payload == verdict.scheduled_payload


def test_naive_feasibility_eta_only_box(policy):
    box = UncertaintyBox(0.85, 0.95, 0.12, 0.12)
    verdict = naive_feasibility(box, NOMINAL, policy)
    assert verdict.covertness_witness is not None
    assert verdict.guaranteed_payload == 0.0


def test_naive_witnesses_on_random_boxes(rng, policy):
    for _ in range(200):
        eta0, nb0 = rng.uniform(0.5, 0.99), rng.uniform(0.01, 1.0)
        a, c, d = rng.uniform(1e-3, 0.3, 3)
        box = make_box_asymmetric(eta0, nb0, a, rng.uniform(0, 0.3), c, d)
        try:
            verdict = naive_feasibility(box, ChannelParams(eta0, nb0), policy)
        except QOutOfRange:
            continue
        assert verdict.covertness_witness is not None
        r_nom = hashing_rate(depolarizing_p(ChannelParams(eta0, nb0)))
        if r_nom > 0:
            assert verdict.reliability_witness is not None
        assert verdict.guaranteed_payload == 0.0


def test_aligned_payload(policy):
    box = make_box_symmetric(0.9, 0.12, 0.05)
    # a 5.32% mismatch loss pins the aligned value at m_rob / (1 - 0.0532)
    assert aligned_payload(box, policy) == pytest.approx(440.157653 / (1 - 0.0532), abs=1.0)
    point = make_box_symmetric(0.9, 0.12, 0.0)
    assert aligned_payload(point, policy) == robust_plan(point, policy).m_rob


def test_aligned_dominates_robust(rng, policy):
    for box in _random_boxes(rng, 100):
        try:
            assert aligned_payload(box, policy) >= robust_plan(box, policy).m_rob
        except QOutOfRange:
            pass


def test_security_tax_values(policy):
    rep = security_tax(make_box_symmetric(0.9, 0.12, 0.05), policy)
    assert rep.tax_fraction == pytest.approx(0.0532, abs=5e-4)
    assert not rep.post_cliff
    assert rep.tax_fraction == (rep.m_aligned - rep.m_rob) / rep.m_aligned
    zero = security_tax(make_box_symmetric(0.9, 0.12, 0.0), policy)
    assert zero.tax_fraction == 0.0 and not zero.post_cliff
    cliff = security_tax(make_box_symmetric(0.9, 0.12, 0.10), policy)
    assert cliff.tax_fraction == 1.0 and cliff.post_cliff and cliff.m_rob == 0.0


def test_bisect_threshold():
    root = bisect_threshold(lambda x: x * x >= 2.0, 0.0, 2.0, 1e-14)
    assert root * root >= 2.0
    assert root == pytest.approx(math.sqrt(2.0), abs=1e-14)


def test_p_crit():
    p_crit = solve_p_crit()
    assert p_crit == pytest.approx(0.2524, abs=1e-4)
    assert p_crit == pytest.approx(P_CRIT, abs=1e-12)
    assert shannon_entropy(pauli_vector(p_crit)) == pytest.approx(1.0, abs=1e-10)
    assert hashing_rate(p_crit + 1e-6) == 0.0
    assert hashing_rate(p_crit - 1e-6) > 0.0


def test_u_crit_anchor():
    u = solve_u_crit(NOMINAL)
    assert u == pytest.approx(0.0885, abs=5e-4)
    assert u == pytest.approx(U_CRIT_09_012, abs=1e-10)


def test_u_crit_zero_when_already_past_cliff():
    nominal = ChannelParams(0.7, 0.12)
    assert depolarizing_p(nominal) >= solve_p_crit()
    assert solve_u_crit(nominal) == 0.0


def test_u_crit_residuals():
    p_crit = solve_p_crit()
    u_a = solve_u_crit(NOMINAL)
    u_b = solve_u_crit(ChannelParams(0.99, 0.001))
    assert u_b > u_a
    assert u_b == pytest.approx(U_CRIT_099_0001, abs=1e-10)
    for nominal, u in ((NOMINAL, u_a), (ChannelParams(0.99, 0.001), u_b)):
        assert abs(planner.p_worst_symmetric(nominal, u) - p_crit) <= 1e-8


def test_u_crit_property(rng):
    p_crit = solve_p_crit()
    for _ in range(100):
        nominal = ChannelParams(rng.uniform(0.5, 0.999), rng.uniform(0.001, 2.0))
        u = solve_u_crit(nominal)
        if u is None:
            continue
        if u > 0:
            assert abs(planner.p_worst_symmetric(nominal, u) - p_crit) <= 1e-8
            for v in np.linspace(0, u, 20, endpoint=False):
                assert planner.p_worst_symmetric(nominal, v) < p_crit


def test_design_map_cell_and_ordering(policy):
    table = design_map((0.81, 0.99), (0.01, 0.31), 61, 0.05, policy)
    assert len(table.rows) == 61 * 61
    etas = [r[0] for r in table.rows]
    assert etas == sorted(etas)
    cell = next(r for r in table.rows if r[0] == 0.9 and r[1] == 0.12)
    assert cell[2] == pytest.approx(0.0885, abs=5e-4)
    assert cell[3] == pytest.approx(440.2, abs=0.5)


def test_design_map_zero_past_cliff(policy):
    table = design_map((0.75, 0.99), (0.01, 0.30), 21, 0.05, policy)
    for eta0, nb0, u_crit, m_rob, flag in table.rows:
        if flag == 0 and u_crit <= 0.05:
            assert m_rob == 0.0


def test_design_map_unimodal_column(policy):
    found = False
    for eta0 in np.linspace(0.75, 0.99, 13):
        table = design_map((eta0, eta0), (0.005, 1.0), (2, 200), 0.05, policy)
        payload = np.array([r[3] for r in table.rows[:200]])
        k = int(np.argmax(payload))
        if 0 < k < len(payload) - 1 and payload[0] < payload[k] > payload[-1]:
            found = True
            break
    assert found


def test_design_map_flags_q_out_of_range():
    table = design_map((0.9, 0.99), (1.0, 2.0), 2, 0.0, PolicyParams(100, 0.4))
    assert any(r[4] == 1 and math.isnan(r[3]) for r in table.rows)


def test_sweep_vs_n(policy):
    ns = [10 ** k for k in range(6, 11)]
    table = sweep_payload_vs_n(NOMINAL, [0.0, 0.05], ns, 0.05)
    rows = {r[0]: r for r in table.rows}
    assert rows[10 ** 8][1] == pytest.approx(1673.9, abs=1.0)
    assert rows[10 ** 8][3] == pytest.approx(440.2, abs=0.5)
    for r in table.rows:
        assert r[2] == r[1]
    for r1, r2 in zip(table.rows, table.rows[1:]):
        for col in (1, 2, 3):
            assert r2[col] / r1[col] == pytest.approx(math.sqrt(r2[0] / r1[0]), rel=1e-9)


def test_sweep_vs_u(policy):
    us = np.linspace(0.0, 0.3, 200)
    table = sweep_payload_vs_u(NOMINAL, us, policy)
    payload = [r[4] for r in table.rows]
    assert all(b <= a for a, b in zip(payload, payload[1:]))
    assert payload[0] == naive_plan(NOMINAL, policy).scheduled_payload
    u_crit = solve_u_crit(NOMINAL)
    for u, m in zip(us, payload):
        assert (m == 0.0) == (u >= u_crit)
    edge = sweep_payload_vs_u(NOMINAL, [0.087, u_crit, 0.090], policy)
    assert edge.rows[0][4] > 0 and edge.rows[1][4] == 0.0 and edge.rows[2][4] == 0.0


def test_compare_sym_asym(policy):
    us = np.linspace(0, 0.1, 41)
    res = compare_sym_asym(NOMINAL, (0.02, 0.08, 0.01, 0.12), us, policy)
    asym = {r[2] for r in res.table.rows}
    assert asym == {res.asym_payload}
    sym = [r[1] for r in res.table.rows]
    assert all(b <= a for a, b in zip(sym, sym[1:]))
    assert res.crossing_u is not None and 0 < res.crossing_u < solve_u_crit(NOMINAL)
    # independent oracle: scan for the sign change of sym - asym on a fine grid
    fine = np.linspace(0, solve_u_crit(NOMINAL), 100_001)
    diff = [robust_plan(make_box_symmetric(0.9, 0.12, u), policy).m_rob - res.asym_payload for u in fine[::100]]
    k = next(i for i, d in enumerate(diff) if d <= 0)
    assert fine[::100][k - 1] < res.crossing_u <= fine[::100][k]


def test_compare_sym_asym_zero_margins(policy):
    res = compare_sym_asym(NOMINAL, (0, 0, 0, 0), [0.0], policy)
    assert res.table.rows[0][1] == res.table.rows[0][2]
    assert res.crossing_u == 0.0
