"""Truncated Fock-space simulation of Willie's view of the beamsplitter channel.

Each rail of the dual-rail qubit passes through its own beamsplitter with a
thermal environment mode. Willie holds the reflected output of both rails; his
per-slot chi-squared divergence against the idle (vacuum input) state is the
coefficient that the covertness constant is built from.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np
from scipy.linalg import expm

TOL = 1e-10
RANK_TOL = 1e-14


class RankDeficientWarning(UserWarning):
    """The reference state is singular on the support of the compared state."""


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: np.ndarray
    cutoff: int
    modes: int = 1

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dim = self.cutoff ** self.modes
        if self.cutoff < 2:
            raise ValueError(f"cutoff must be at least 2, got {self.cutoff}")
        if m.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=TOL, rtol=0.0):
            raise ValueError("density operator is not Hermitian")
        if abs(np.trace(m) - 1.0) > TOL:
            raise ValueError(f"density operator has trace {np.trace(m).real!r}")
        if np.linalg.eigvalsh(m).min() < -TOL:
            raise ValueError("density operator is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal().real.copy()

    def mean_photon_number(self) -> float:
        if self.modes != 1:
            raise ValueError("mean photon number is defined here for single-mode states only")
        return float(np.dot(np.arange(self.cutoff), self.diagonal()))

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        if other.cutoff != self.cutoff:
            raise ValueError("tensor factors must share a cutoff")
        return DensityOperator(np.kron(self.matrix, other.matrix), self.cutoff, self.modes + other.modes)


@dataclass(frozen=True)
class SignalSpec:
    """Alice's slot input: vacuum, or the dual-rail qubit ``alpha|01> + beta|10>``."""

    mode: Literal["vacuum", "dual_rail"] = "dual_rail"
    alpha: complex = 1.0
    beta: complex = 0.0

    def __post_init__(self):
        if self.mode not in ("vacuum", "dual_rail"):
            raise ValueError(f"unknown signal mode {self.mode!r}")
        if self.mode == "dual_rail" and abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1.0) > 1e-12:
            raise ValueError("dual-rail amplitudes must be normalized")


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1)


def fock_dm(cutoff: int, k: int) -> np.ndarray:
    m = np.zeros((cutoff, cutoff), dtype=complex)
    m[k, k] = 1.0
    return m


def thermal_state(nbar: float, cutoff: int) -> DensityOperator:
    """Geometric photon-number distribution truncated to ``cutoff`` levels and renormalized."""
    if nbar < 0:
        raise ValueError(f"mean photon number must be nonnegative, got {nbar!r}")
    if cutoff < 2:
        raise ValueError(f"cutoff must be at least 2, got {cutoff}")
    k = np.arange(cutoff)
    w = nbar ** k / (1.0 + nbar) ** (k + 1)
    return DensityOperator(np.diag(w / w.sum()).astype(complex), cutoff)


def beamsplitter_unitary(eta: float, cutoff: int) -> np.ndarray:
    """Two-mode beamsplitter on ``signal (x) environment``, truncated at ``cutoff`` per mode.

    ``U = exp(theta (a^dag e - a e^dag))`` with ``theta = arccos(sqrt(eta))``,
    exponentiated on the truncated space. In the Heisenberg picture the first
    output mode is Bob's ``sqrt(eta) a + sqrt(1-eta) e`` and the second is
    ``-(sqrt(1-eta) a - sqrt(eta) e)``, i.e. Willie's mode up to a global
    sign, which no photon-number statistic can see.
    """
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta!r}")
    a1 = annihilation(cutoff)
    eye = np.eye(cutoff)
    a = np.kron(a1, eye)
    e = np.kron(eye, a1)
    theta = math.acos(math.sqrt(eta))
    return expm(theta * (a.T @ e - a @ e.T)).astype(complex)


def partial_trace(rho: np.ndarray, cutoff: int, modes: int, keep: Iterable[int]) -> np.ndarray:
    """Reduce a ``modes``-mode operator to the modes listed in ``keep`` (in order)."""
    keep = list(keep)
    t = np.asarray(rho).reshape((cutoff,) * (2 * modes))
    traced = [m for m in range(modes) if m not in keep]
    # trace the highest index first so remaining axis numbers stay valid
    for m in sorted(traced, reverse=True):
        cur = t.ndim // 2
        t = np.trace(t, axis1=m, axis2=m + cur)
    d = cutoff ** len(keep)
    return t.reshape(d, d)


def willie_rail_state(
    signal: Literal["vacuum", "single_photon"], eta: float, nbar: float, cutoff: int
) -> DensityOperator:
    """Willie's single-mode state for one rail carrying vacuum or one photon."""
    if signal == "vacuum":
        k = 0
    elif signal == "single_photon":
        k = 1
    else:
        raise ValueError(f"unknown rail input {signal!r}")
    u = beamsplitter_unitary(eta, cutoff)
    rho_in = np.kron(fock_dm(cutoff, k), thermal_state(nbar, cutoff).matrix)
    rho_out = u @ rho_in @ u.conj().T
    w = partial_trace(rho_out, cutoff, 2, keep=[1])
    return DensityOperator(0.5 * (w + w.conj().T), cutoff)


def willie_signal_state(signal: SignalSpec, eta: float, nbar: float, cutoff: int) -> DensityOperator:
    """Willie's two-rail state for an arbitrary slot input.

    Works on the full four-mode system by summing pure-state branches over
    the Fock components of the two thermal environments. Mode order is
    ``(rail 1 signal, rail 1 env, rail 2 signal, rail 2 env)``; Willie keeps
    the environment-side outputs of both rails.
    """
    n = cutoff
    u = beamsplitter_unitary(eta, n).reshape(n, n, n, n)
    psi_in = np.zeros((n, n), dtype=complex)  # (rail 1, rail 2) photon numbers
    if signal.mode == "vacuum":
        psi_in[0, 0] = 1.0
    else:
        psi_in[0, 1] = signal.alpha
        psi_in[1, 0] = signal.beta
    env = thermal_state(nbar, n).diagonal()
    out = np.zeros((n * n, n * n), dtype=complex)
    for k1 in range(n):
        for k2 in range(n):
            weight = env[k1] * env[k2]
            if weight == 0.0:
                continue
            # amplitudes over (s1, e1, s2, e2) after both beamsplitters
            amp = np.einsum("abi,cdk,ik->abcd", u[:, :, :, k1], u[:, :, :, k2], psi_in)
            # Willie holds e1 and e2; trace out Bob's s1, s2
            phi = amp.transpose(1, 3, 0, 2).reshape(n * n, n * n)
            out += weight * (phi @ phi.conj().T)
    return DensityOperator(0.5 * (out + out.conj().T), n, 2)


def chi2_divergence(rho: DensityOperator | np.ndarray, sigma: DensityOperator | np.ndarray,
                    rank_tol: float = RANK_TOL) -> float:
    """Quantum chi-squared divergence ``tr[sigma^-1/2 rho sigma^-1/2 rho] - 1``.

    Eigenvalues of ``sigma`` below ``rank_tol`` times the largest are
    pseudo-inverted to zero; a :class:`RankDeficientWarning` is issued when
    ``rho`` has more than 1e-10 weight on that null space.
    """
    r = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    s = sigma.matrix if isinstance(sigma, DensityOperator) else np.asarray(sigma, dtype=complex)
    if r.shape != s.shape:
        raise ValueError(f"shape mismatch: {r.shape} vs {s.shape}")
    evals, evecs = np.linalg.eigh(s)
    keep = evals > rank_tol * evals.max()
    if not np.all(keep):
        null = evecs[:, ~keep]
        leak = np.real(np.trace(null.conj().T @ r @ null))
        if leak > TOL:
            warnings.warn(
                f"reference state is rank deficient on the compared support (weight {leak:.3g})",
                RankDeficientWarning,
                stacklevel=2,
            )
    v = evecs[:, keep]
    inv_sqrt = (v / np.sqrt(evals[keep])) @ v.conj().T
    x = inv_sqrt @ r @ inv_sqrt
    val = float(np.real(np.sum(x * r.T))) - 1.0
    return max(val, 0.0)


def idle_state(eta: float, nbar: float, cutoff: int) -> DensityOperator:
    """Willie's two-rail state when Alice is silent."""
    vac = willie_rail_state("vacuum", eta, nbar, cutoff)
    return vac.tensor(vac)


def chi2_coefficient(eta: float, nbar: float, cutoff: int, signal: SignalSpec | None = None) -> float:
    """Per-slot chi-squared coefficient of Willie's signal state against the idle state.

    With transmission probability ``q`` the slot state is
    ``(1-q) rho_0 + q rho_psi``, so its divergence is exactly
    ``q**2 * chi2(rho_psi || rho_0)``; this returns the factor multiplying ``q**2``.
    The default signal ``|01>`` uses the product of the two rail states directly.
    """
    sigma = idle_state(eta, nbar, cutoff)
    if signal is None:
        vac = willie_rail_state("vacuum", eta, nbar, cutoff)
        photon = willie_rail_state("single_photon", eta, nbar, cutoff)
        rho = vac.tensor(photon)
    else:
        rho = willie_signal_state(signal, eta, nbar, cutoff)
    return chi2_divergence(rho, sigma)


def analytic_chi2_coefficient(eta: float, nbar: float) -> float:
    """(1 - eta)^2 / (eta nbar (1 + eta nbar)), the infinite-cutoff coefficient."""
    return (1.0 - eta) ** 2 / (eta * nbar * (1.0 + eta * nbar))


def c_cov_from_coefficient(coeff: float) -> float:
    """Covertness constant implied by a chi-squared coefficient: sqrt(2 / coeff)."""
    if not coeff > 0.0:
        raise ValueError(f"coefficient must be positive, got {coeff!r}")
    return math.sqrt(2.0 / coeff)


@dataclass(frozen=True)
class ConvergenceRow:
    cutoff: int
    chi2_sim: float
    abs_err: float
    rel_err_pct: float


def convergence_sweep(eta: float, nbar: float, cutoffs: Iterable[int]) -> list[ConvergenceRow]:
    cutoffs = list(cutoffs)
    if any(c < 3 for c in cutoffs) or cutoffs != sorted(cutoffs):
        raise ValueError("cutoffs must be ascending and each at least 3")
    target = analytic_chi2_coefficient(eta, nbar)
    rows = []
    for c in cutoffs:
        sim = chi2_coefficient(eta, nbar, c)
        err = abs(sim - target)
        rows.append(ConvergenceRow(c, sim, err, 100.0 * err / target))
    return rows
