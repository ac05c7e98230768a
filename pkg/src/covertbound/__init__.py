"""Robust covert quantum communication over lossy thermal-noise bosonic channels."""
from .model import (
    ChannelParams,
    PauliErrorVector,
    PolicyParams,
    covertness_constant,
    depolarizing_p,
    hashing_rate,
    pauli_vector,
    shannon_entropy,
)
from .planner import (
    CliffResult,
    FeasibilityVerdict,
    QOutOfRange,
    RobustPlan,
    TaxReport,
    UncertaintyBox,
    aligned_payload,
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

__version__ = "0.1.0"
