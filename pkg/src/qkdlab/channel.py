"""Noisy pair sources modeled as Bell-diagonal (Werner) mixtures.

A channel of singlet fidelity F delivers the singlet with probability F
and each of the three triplet Bell states with probability (1 - F)/3.
When both halves of a pair are measured along a common random axis the
outcomes are antiparallel with probability (1 + 2F)/3, so the error rate
of the ideal-singlet protocol is

    epsilon = 1 - (1 + 2F)/3 = (2/3) (1 - F).

Per fixed common axis n the antiparallel probability of a single Bell
state is exact, not just an average:

    singlet          -> 1
    psi1 (|01>+|10>) -> n_z**2
    psi2 (|00>+|11>) -> n_y**2
    psi3 (|00>-|11>) -> n_x**2

which follows from the Bell states' diagonal spin correlation tensors.
Sampling a label and then outcomes from these conditionals reproduces the
full quantum measurement statistics, which is what lets sessions with
10**5 pairs run as vectorized classical sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .qstate import DensityMatrix, bell_vectors

EPSILON_MAX = 2.0 / 3.0  # error rate of the F = 0 channel; no Werner state lies beyond

# antiparallel probability of label k along axis n is n[_LABEL_COMPONENT[k]]**2
_LABEL_COMPONENT = {1: 2, 2: 1, 3: 0}


def _check_fidelity(f: float) -> float:
    f = float(f)
    if not 0.0 <= f <= 1.0:
        raise ConfigError(f"fidelity {f} outside [0, 1]")
    return f


def werner_state(f: float) -> DensityMatrix:
    """Bell-diagonal mixture with singlet weight ``f`` and uniform triplet rest."""
    f = _check_fidelity(f)
    rows = bell_vectors()
    m = f * np.outer(rows[0], rows[0].conj())
    for k in (1, 2, 3):
        m = m + (1.0 - f) / 3.0 * np.outer(rows[k], rows[k].conj())
    return DensityMatrix(m, (2, 2))


def antiparallel_prob(f: float) -> float:
    """Probability of antiparallel outcomes along a common axis, (1 + 2F)/3."""
    return (1.0 + 2.0 * _check_fidelity(f)) / 3.0


def epsilon_from_fidelity(f: float) -> float:
    """Error rate (2/3)(1 - F) of the singlet-based protocol."""
    return 2.0 * (1.0 - _check_fidelity(f)) / 3.0


def fidelity_from_epsilon(eps: float) -> float:
    """Invert the error-rate dictionary; valid for eps in [0, 2/3]."""
    eps = float(eps)
    if not 0.0 <= eps <= EPSILON_MAX + 1e-12:
        raise ConfigError(f"no Werner fidelity exists for error rate {eps}")
    return max(0.0, 1.0 - 1.5 * eps)


def sample_pair_labels(f: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``n`` Bell labels (0 = singlet, 1..3 = triplets) from the mixture."""
    f = _check_fidelity(f)
    p = np.array([f, (1.0 - f) / 3.0, (1.0 - f) / 3.0, (1.0 - f) / 3.0])
    return rng.choice(4, size=n, p=p)


def sample_pair_label(f: float, rng: np.random.Generator) -> int:
    return int(sample_pair_labels(f, 1, rng)[0])


def antiparallel_prob_given_label(labels: np.ndarray, axes: np.ndarray) -> np.ndarray:
    """Exact per-axis antiparallel probability for each (label, axis) row.

    ``labels`` is an int array in 0..3, ``axes`` an (n, 3) array of unit
    vectors giving the common measurement axis of each pair.
    """
    labels = np.asarray(labels)
    axes = np.asarray(axes, dtype=float)
    p = np.ones(labels.shape[0])
    for label, comp in _LABEL_COMPONENT.items():
        mask = labels == label
        if np.any(mask):
            p[mask] = axes[mask, comp] ** 2
    return p


def sample_common_axis_outcomes(
    labels: np.ndarray, axes: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Sample (outcome_a, outcome_b) for pairs measured along common axes.

    Outcomes are 0/1 spin results.  Alice's outcome is unbiased and Bob's
    is anti-correlated or correlated according to the exact antiparallel
    probability of the pair's Bell label along its axis.
    """
    p_anti = antiparallel_prob_given_label(labels, axes)
    anti = rng.random(labels.shape[0]) < p_anti
    outcome_a = rng.integers(0, 2, size=labels.shape[0], dtype=np.uint8)
    outcome_b = outcome_a ^ anti.astype(np.uint8)
    return outcome_a, outcome_b


@dataclass(frozen=True)
class ChannelModel:
    """A pair source of given singlet fidelity."""

    fidelity: float = 1.0

    def __post_init__(self) -> None:
        _check_fidelity(self.fidelity)

    @classmethod
    def from_epsilon(cls, eps: float) -> "ChannelModel":
        return cls(fidelity_from_epsilon(eps))

    @property
    def epsilon(self) -> float:
        return epsilon_from_fidelity(self.fidelity)

    def werner_state(self) -> DensityMatrix:
        return werner_state(self.fidelity)

    def antiparallel_prob(self) -> float:
        return antiparallel_prob(self.fidelity)

    def sample_labels(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_pair_labels(self.fidelity, n, rng)
