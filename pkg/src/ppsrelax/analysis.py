"""Decomposition of evolved states into pseudo-pure-state coefficients.

At any time a longitudinal state of the two-spin system can be written
as the surviving pseudo-pure combination (coefficient ``a``) plus
excesses of the two single-spin orders (``b`` for I1z, ``c`` for I2z).
For a freshly prepared state the triple is (k, 0, 0); relaxation lowers
``a`` and grows ``b`` and ``c``. The interference rates delta1/delta2
shift these deviations with a sign that depends on the state label,
which is what makes the four pseudo-pure states decay at four different
rates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .relaxation import RelaxationMatrix, RelaxationRates, evolve_exact
from .spins import ModeVector, PpsLabel, SpinSystem, equilibrium_modes, pps_modes

__all__ = [
    "CoefficientTriple",
    "Deviation",
    "DeviationReport",
    "PpsComparison",
    "decompose",
    "recompose",
    "closed_form_auto",
    "closed_form_cross",
    "deviation_report",
    "compare_pps",
]


@dataclass(frozen=True)
class CoefficientTriple:
    """Pseudo-pure coefficient ``a`` and single-spin excesses ``b``, ``c``.

    ``normalized`` marks values divided by an equilibrium line intensity
    (raw mode units otherwise).
    """

    a: float
    b: float
    c: float
    normalized: bool = False


class Deviation(NamedTuple):
    """Change of (a, b, c) relative to the fresh state (k, 0, 0)."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class DeviationReport:
    """Initial-rate deviations split into auto and interference parts.

    The totals are componentwise sums of the two parts; the split is
    exact because the linearized evolution is linear in the rate matrix.
    """

    pps: PpsLabel
    tau: float
    auto: Deviation
    cross: Deviation

    @property
    def total(self) -> Deviation:
        return Deviation(
            self.auto.a + self.cross.a,
            self.auto.b + self.cross.b,
            self.auto.c + self.cross.c,
        )


def decompose(m: ModeVector, label: PpsLabel) -> CoefficientTriple:
    """Coefficients (a, b, c) of a state read against a state label.

    With sign pattern (s1, s2, s12): a = s12*c12, b = c1 - s1*a,
    c = c2 - s2*a.
    """
    s = label.sign_pattern
    a = s.s12 * m.c12
    return CoefficientTriple(a=a, b=m.c1 - s.s1 * a, c=m.c2 - s.s2 * a)


def recompose(t: CoefficientTriple, label: PpsLabel) -> ModeVector:
    """Exact inverse of :func:`decompose` for the same label."""
    s = label.sign_pattern
    return ModeVector(
        c1=s.s1 * t.a + t.b,
        c2=s.s2 * t.a + t.c,
        c12=s.s12 * t.a,
    )


def _linear_deviation(
    entries: np.ndarray, label: PpsLabel, sys: SpinSystem, tau: float
) -> Deviation:
    """Deviation of (a, b, c) from (k, 0, 0) after a linearized step
    M0 - E tau (M0 - M_inf) under an arbitrary 3x3 rate block E."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    m0 = np.array(pps_modes(label, sys).to_tuple())
    dev = m0 - np.array(equilibrium_modes(sys).to_tuple())
    evolved = ModeVector.from_sequence(m0 - tau * (entries @ dev))
    triple = decompose(evolved, label)
    return Deviation(triple.a - sys.k, triple.b, triple.c)


def closed_form_auto(
    label: PpsLabel, rates: RelaxationRates, sys: SpinSystem, tau: float
) -> Deviation:
    """Initial-rate deviation from auto-correlation rates alone
    (delta1 = delta2 = 0)."""
    auto = replace(rates, delta1=0.0, delta2=0.0)
    entries = np.array(
        [
            [auto.rho1, auto.sigma12, 0.0],
            [auto.sigma12, auto.rho2, 0.0],
            [0.0, 0.0, auto.rho12],
        ]
    )
    return _linear_deviation(entries, label, sys, tau)


def closed_form_cross(
    label: PpsLabel, rates: RelaxationRates, sys: SpinSystem, tau: float
) -> Deviation:
    """Initial-rate deviation from the interference rates alone
    (rho = sigma = 0 in the rate block)."""
    entries = np.array(
        [
            [0.0, 0.0, rates.delta1],
            [0.0, 0.0, rates.delta2],
            [rates.delta1, rates.delta2, 0.0],
        ]
    )
    return _linear_deviation(entries, label, sys, tau)


def deviation_report(
    label: PpsLabel, rates: RelaxationRates, sys: SpinSystem, tau: float
) -> DeviationReport:
    """Auto/interference split of the initial-rate deviations."""
    return DeviationReport(
        pps=label,
        tau=tau,
        auto=closed_form_auto(label, rates, sys, tau),
        cross=closed_form_cross(label, rates, sys, tau),
    )


@dataclass(frozen=True)
class PpsComparison:
    """Coefficient trajectories of several pseudo-pure states on a shared
    time grid, for rate-comparison plots and tables."""

    times: np.ndarray
    triples: dict[PpsLabel, tuple[CoefficientTriple, ...]]
    k: float

    def a(self, label: PpsLabel) -> np.ndarray:
        return np.array([t.a for t in self.triples[label]])

    def b(self, label: PpsLabel) -> np.ndarray:
        return np.array([t.b for t in self.triples[label]])

    def c(self, label: PpsLabel) -> np.ndarray:
        return np.array([t.c for t in self.triples[label]])

    def a_deviation(self, label: PpsLabel) -> np.ndarray:
        """a(t) minus the preparation value k."""
        return self.a(label) - self.k


def compare_pps(
    gamma: RelaxationMatrix,
    sys: SpinSystem,
    times: Sequence[float],
    labels: Iterable[PpsLabel] = tuple(PpsLabel),
) -> PpsComparison:
    """Exact (a, b, c) trajectories of the requested pseudo-pure states."""
    times_arr = np.asarray(times, dtype=float)
    if times_arr.size == 0:
        raise ValueError("times must be nonempty")
    if times_arr.size > 1 and not np.all(np.diff(times_arr) > 0):
        raise ValueError("times must be strictly increasing")
    m_inf = equilibrium_modes(sys)
    triples: dict[PpsLabel, tuple[CoefficientTriple, ...]] = {}
    for label in labels:
        m0 = pps_modes(label, sys)
        triples[label] = tuple(
            decompose(evolve_exact(gamma, m0, m_inf, t), label) for t in times_arr
        )
    return PpsComparison(times=times_arr, triples=triples, k=sys.k)
