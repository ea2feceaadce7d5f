"""Relaxation of the three longitudinal modes of a two-spin system.

The mode vector M = (I1z, I2z, 2*I1z*I2z) obeys

    dM/dt = -G (M - M_inf)

with a symmetric 3x3 rate matrix

    G = [[rho1,   sigma12, delta1],
         [sigma12, rho2,   delta2],
         [delta1,  delta2, rho12]]

whose diagonal holds the self-relaxation rates, sigma12 the
cross-relaxation (NOE) rate between the single-spin orders, and
delta1/delta2 the interference rates coupling each single-spin order to
the two-spin order. With delta1 = delta2 = 0 the matrix is block
diagonal and the two-spin order decays as a bare exponential.

Propagation is offered on two independent routes: spectral decomposition
of G (``evolve_exact``) and classical fixed-step RK4 integration
(``evolve_ode``), so each can serve as an oracle for the other.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spins import ModeVector

__all__ = [
    "RelaxationRates",
    "RelaxationMatrix",
    "Trajectory",
    "EigSolverFailure",
    "StepTooLarge",
    "NotPositiveDefiniteWarning",
    "InitialRateWindowWarning",
    "build_matrix",
    "evolve_exact",
    "evolve_ode",
    "initial_rate",
]

#: Off-diagonal Frobenius mass (relative to matrix scale) at which the
#: Jacobi sweep is considered converged.
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100

#: dt * lambda_max above which fixed-step RK4 accuracy is not guaranteed.
RK4_STEP_LIMIT = 0.1

#: tau * lambda_max beyond which the linearized evolution leaves the
#: initial-rate regime.
INITIAL_RATE_WINDOW = 0.2


class EigSolverFailure(RuntimeError):
    """Jacobi iteration failed to converge within the sweep budget."""


class StepTooLarge(ValueError):
    """RK4 step size violates the accuracy guard dt * lambda_max <= 0.1."""


class NotPositiveDefiniteWarning(UserWarning):
    """The assembled rate matrix has a non-positive eigenvalue."""


class InitialRateWindowWarning(UserWarning):
    """Linearized evolution requested outside the initial-rate window."""


@dataclass(frozen=True)
class RelaxationRates:
    """The six independent entries of the rate matrix, all in 1/s."""

    rho1: float
    rho2: float
    rho12: float
    sigma12: float
    delta1: float = 0.0
    delta2: float = 0.0

    def __post_init__(self):
        for name in ("rho1", "rho2", "rho12", "sigma12", "delta1", "delta2"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        for name in ("rho1", "rho2", "rho12"):
            if getattr(self, name) <= 0:
                raise ValueError(f"self-relaxation rate {name} must be > 0")


@dataclass(frozen=True)
class RelaxationMatrix:
    """Symmetric rate matrix together with its spectral decomposition.

    ``entries`` is the 3x3 matrix, ``eigenvalues`` its eigenvalues in
    ascending order and ``eigenvectors`` the matching orthonormal columns.
    ``positive_definite`` is False when any eigenvalue is <= 0.
    """

    entries: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    positive_definite: bool

    def __post_init__(self):
        for arr in (self.entries, self.eigenvalues, self.eigenvectors):
            arr.setflags(write=False)

    @property
    def max_eigenvalue(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))


@dataclass(frozen=True)
class Trajectory:
    """Sampled mode-vector time series; ``states`` holds one row
    (c1, c2, c12) per sample time."""

    times: np.ndarray
    states: np.ndarray
    meta: str = ""

    def __post_init__(self):
        if self.states.shape != (len(self.times), 3):
            raise ValueError("states must have one (c1, c2, c12) row per time")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        self.times.setflags(write=False)
        self.states.setflags(write=False)

    def state(self, index: int) -> ModeVector:
        return ModeVector.from_sequence(self.states[index])

    def component(self, index: int) -> np.ndarray:
        return self.states[:, index]


def _jacobi_eigh3(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen decomposition of a symmetric 3x3 matrix by cyclic Jacobi
    rotations. Returns eigenvalues (ascending) and eigenvector columns."""
    a = np.array(matrix, dtype=float)
    v = np.eye(3)
    tol = JACOBI_TOL * max(1.0, float(np.linalg.norm(a)))
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(2.0 * (a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2))
        if off < tol:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p, q]
            if apq == 0.0:
                continue
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(3)
            rot[p, p] = rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            v = v @ rot
            a[p, q] = a[q, p] = 0.0  # enforce exact symmetry of the zeroed pair
    else:
        raise EigSolverFailure(
            f"off-diagonal mass {off:.3e} after {JACOBI_MAX_SWEEPS} sweeps"
        )
    order = np.argsort(np.diag(a))
    return np.diag(a)[order].copy(), v[:, order].copy()


def build_matrix(rates: RelaxationRates) -> RelaxationMatrix:
    """Assemble and diagonalize the symmetric rate matrix.

    Emits NotPositiveDefiniteWarning (and marks the result) when the rate
    combination yields a non-positive eigenvalue; such matrices still
    propagate, they just do not decay monotonically to equilibrium.
    """
    entries = np.array(
        [
            [rates.rho1, rates.sigma12, rates.delta1],
            [rates.sigma12, rates.rho2, rates.delta2],
            [rates.delta1, rates.delta2, rates.rho12],
        ]
    )
    eigenvalues, eigenvectors = _jacobi_eigh3(entries)
    positive = bool(eigenvalues[0] > 0.0)
    if not positive:
        warnings.warn(
            f"rate matrix is not positive definite (min eigenvalue "
            f"{eigenvalues[0]:.6g} 1/s)",
            NotPositiveDefiniteWarning,
            stacklevel=2,
        )
    return RelaxationMatrix(entries, eigenvalues, eigenvectors, positive)


def evolve_exact(
    gamma: RelaxationMatrix, m0: ModeVector, m_inf: ModeVector, t: float
) -> ModeVector:
    """Closed-form state at time t: M_inf + exp(-G t) (M0 - M_inf).

    The exponential is evaluated in the eigenbasis of G.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return m0
    dev = np.array(m0.to_tuple()) - np.array(m_inf.to_tuple())
    weights = gamma.eigenvectors.T @ dev
    weights = weights * np.exp(-gamma.eigenvalues * t)
    out = np.array(m_inf.to_tuple()) + gamma.eigenvectors @ weights
    return ModeVector.from_sequence(out)


def rk4_update_matrix(gamma: RelaxationMatrix, dt: float) -> np.ndarray:
    """Single-step update applied by classical RK4 to the deviation
    d = M - M_inf of this constant-coefficient linear system.

    For d' = A d the four stages combine to exactly
    d_next = (I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24) d,
    so the whole step is one matrix precomputable from G and dt.
    """
    ha = -dt * gamma.entries
    ha2 = ha @ ha
    return np.eye(3) + ha + ha2 / 2.0 + ha2 @ ha / 6.0 + ha2 @ ha2 / 24.0


def evolve_ode(
    gamma: RelaxationMatrix,
    m0: ModeVector,
    m_inf: ModeVector,
    t_end: float,
    dt: float = 1e-3,
) -> Trajectory:
    """Classical fixed-step RK4 trajectory of dM/dt = -G (M - M_inf).

    Independent of the spectral route: only powers of G enter. Raises
    StepTooLarge when dt * lambda_max exceeds the accuracy guard.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if t_end < dt:
        raise ValueError(f"t_end must be >= dt, got {t_end} < {dt}")
    if dt * gamma.max_eigenvalue > RK4_STEP_LIMIT:
        raise StepTooLarge(
            f"dt * lambda_max = {dt * gamma.max_eigenvalue:.4g} exceeds "
            f"{RK4_STEP_LIMIT}"
        )
    n_steps = int(math.floor(t_end / dt + 1e-12))
    step = rk4_update_matrix(gamma, dt)
    base = np.array(m_inf.to_tuple())
    dev = np.array(m0.to_tuple()) - base
    states = np.empty((n_steps + 1, 3))
    states[0] = base + dev
    for i in range(n_steps):
        dev = step @ dev
        states[i + 1] = base + dev
    times = np.arange(n_steps + 1) * dt
    return Trajectory(times, states)


def initial_rate(
    gamma: RelaxationMatrix, m0: ModeVector, m_inf: ModeVector, tau: float
) -> ModeVector:
    """Linearized (initial-rate) state M0 - G tau (M0 - M_inf).

    Warns when tau * lambda_max > 0.2, i.e. outside the regime where the
    decay or growth of every mode is linear in time.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    if tau * gamma.max_eigenvalue > INITIAL_RATE_WINDOW:
        warnings.warn(
            f"tau * lambda_max = {tau * gamma.max_eigenvalue:.4g} is outside "
            f"the initial-rate window ({INITIAL_RATE_WINDOW})",
            InitialRateWindowWarning,
            stacklevel=2,
        )
    m0_arr = np.array(m0.to_tuple())
    dev = m0_arr - np.array(m_inf.to_tuple())
    return ModeVector.from_sequence(m0_arr - tau * (gamma.entries @ dev))
