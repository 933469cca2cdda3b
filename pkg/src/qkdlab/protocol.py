"""Key-agreement sessions over noisy pair sources.

Two protocols are implemented.

Entanglement-based session (``run_epr_session``): N pairs are delivered,
Bob publicly acknowledges receiving all of them, and only then does Alice
announce a fresh random measurement axis per pair.  Both measure along
the common axes, publicly compare a random m-subset, and accept when the
number of parallel (erroneous) outcomes is inside the configured window.
Because the axes are announced only after the acknowledgment, no attack
interface in this module ever sees axis or basis information: attacks
act on the delivered pairs (label substitution, or wholesale coherent
preparation) before any axis exists.  The ordered ``events`` tuple on the
transcript records this.

Prepare-and-measure session (``run_bb84_session``): Alice sends photons
polarized in the rectilinear basis with probability 1 - omega and the
diagonal basis with probability omega; Bob measures likewise.  Positions
where the bases agree are the sifted set.  The test set takes every
diagonal-matched position plus an equal number of randomly chosen
rectilinear-matched ones, and the session accepts when the observed test
error rate is below twice the expected rate (or inside the window, when
so configured).  Skewing omega toward 0 drives the sifted fraction
(1-omega)^2 + omega^2 toward 1 instead of 1/2.

Channel noise is simulated classically through Bell labels / Pauli
errors, which reproduces the exact quantum statistics for these
measurement patterns (see :mod:`qkdlab.channel`); coherent attacks switch
the session to full state-vector measurement.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as channel_mod
from .adversary import (
    CoherentAttack,
    InterceptResend,
    NoAttack,
    SubstituteAttack,
    TestPlan,
    conditional_ancilla_state,
    eve_info_bound,
    substitute_pairs,
)
from .channel import ChannelModel
from .errors import ConfigError, UndersamplingError
from .qstate import (
    MeasurementAxis,
    apply_operator,
    bell_vectors,
    measure_pair,
    random_axes,
    spin_projectors,
)
from .rng import stream

EPR_EVENTS = (
    "prepared",
    "delivered",
    "acknowledged",
    "axes_announced",
    "measured",
    "test_set_announced",
    "results_compared",
    "verdict",
)

BB84_EVENTS = (
    "prepared",
    "delivered",
    "measured",
    "bases_announced",
    "sifted",
    "test_set_announced",
    "results_compared",
    "verdict",
)


@dataclass(frozen=True)
class SessionConfig:
    """Session parameters shared by both protocols."""

    n_pairs: int
    test_size: int
    expected_error: float
    window_coeff: float = 1.0
    omega: float = 0.5
    threshold_mode: str = "two_epsilon"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_pairs < 1:
            raise ConfigError(f"n_pairs must be positive, got {self.n_pairs}")
        if not 1 <= self.test_size <= self.n_pairs:
            raise ConfigError(
                f"test_size must lie in 1..{self.n_pairs}, got {self.test_size}"
            )
        if not 0.0 <= self.expected_error < 1.0:
            raise ConfigError(f"expected_error {self.expected_error} outside [0, 1)")
        if self.window_coeff <= 0.0:
            raise ConfigError(f"window_coeff must be positive, got {self.window_coeff}")
        if not 0.0 <= self.omega <= 1.0:
            raise ConfigError(f"omega {self.omega} outside [0, 1]")
        if self.threshold_mode not in ("window", "two_epsilon"):
            raise ConfigError(f"unknown threshold_mode {self.threshold_mode!r}")


def acceptance_window(eps: float, c: float, m: int) -> tuple[int, int]:
    """Accepted error-count interval [(eps - c eps^2) m, (eps + c eps^2) m].

    Bounds are rounded inward to integers (ceil below, floor above) and
    clamped at 0; a window that rounds empty is a configuration error.
    """
    if m < 1:
        raise ConfigError(f"test size must be positive, got {m}")
    if not 0.0 <= eps < 1.0:
        raise ConfigError(f"expected error {eps} outside [0, 1)")
    if c <= 0.0:
        raise ConfigError(f"window coefficient must be positive, got {c}")
    lo = max(0, math.ceil((eps - c * eps * eps) * m - 1e-9))
    hi = math.floor((eps + c * eps * eps) * m + 1e-9)
    if hi < lo:
        raise ConfigError(
            f"acceptance window for eps={eps}, c={c}, m={m} rounds empty"
        )
    return lo, hi


def accepted_count_interval(config: SessionConfig, m: int) -> tuple[int, int]:
    """The accepted error-count interval for a test of size ``m``."""
    if config.threshold_mode == "window":
        return acceptance_window(config.expected_error, config.window_coeff, m)
    hi = math.ceil(2.0 * config.expected_error * m - 1e-9) - 1
    if hi < 0:
        raise ConfigError(
            "threshold 2*eps rounds to zero tolerated errors; use window mode"
        )
    return 0, min(hi, m)


def select_test_set(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """A uniformly random m-subset of 0..n-1, returned sorted."""
    if not 1 <= m <= n:
        raise ConfigError(f"test size must lie in 1..{n}, got {m}")
    return np.sort(rng.choice(n, size=m, replace=False))


@dataclass(eq=False)
class Transcript:
    """Everything a session produced, in per-position arrays.

    ``sifted`` marks positions where the bases agreed (always true for the
    entanglement-based protocol); key positions are sifted and not in the
    test set, so the two are disjoint.  For the entanglement-based
    protocol ``axes`` holds the common axis of each pair and the basis
    arrays are None; for the prepare-and-measure protocol the basis
    arrays hold 0 (rectilinear) / 1 (diagonal) and ``axes`` is None.
    """

    protocol: str
    verdict: str
    observed_error_count: int
    test_size: int
    error_rate_estimate: float
    outcome_a: np.ndarray
    outcome_b: np.ndarray
    in_test: np.ndarray
    sifted: np.ndarray
    sifted_key_a: np.ndarray
    sifted_key_b: np.ndarray
    events: tuple[str, ...]
    axes: np.ndarray | None = None
    basis_a: np.ndarray | None = None
    basis_b: np.ndarray | None = None
    eve_holevo_bits: float | None = None
    eve_bits: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return int(self.outcome_a.shape[0])

    @property
    def accepted(self) -> bool:
        return self.verdict == "accepted"

    @property
    def sifted_fraction(self) -> float:
        return float(self.sifted.mean())

    def iter_records(self):
        """Yield one JSON-ready dict per position."""
        for i in range(self.n):
            if self.axes is not None:
                basis_a = basis_b = [float(x) for x in self.axes[i]]
            else:
                basis_a = "D" if self.basis_a[i] else "R"
                basis_b = "D" if self.basis_b[i] else "R"
            yield {
                "index": i,
                "basis_a": basis_a,
                "basis_b": basis_b,
                "outcome_a": int(self.outcome_a[i]),
                "outcome_b": int(self.outcome_b[i]),
                "in_test": bool(self.in_test[i]),
                "sifted": bool(self.sifted[i]),
            }

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for record in self.iter_records():
                fh.write(json.dumps(record, sort_keys=True) + "\n")


def _check_attack(protocol: str, attack) -> None:
    if attack is None or isinstance(attack, NoAttack):
        return
    if protocol == "epr" and isinstance(attack, (SubstituteAttack, CoherentAttack)):
        return
    if protocol == "bb84" and isinstance(attack, InterceptResend):
        return
    raise ConfigError(
        f"attack {type(attack).__name__} is not applicable to the {protocol} protocol"
    )


def run_epr_session(
    config: SessionConfig,
    channel: ChannelModel,
    attack=None,
    rng: np.random.Generator | None = None,
) -> Transcript:
    """Run one entanglement-based session and return its transcript.

    Axes are drawn only after the acknowledgment event; the attack
    interfaces act on delivered pairs and never receive axis data.  A
    coherent attack replaces the channel wholesale (the attacker prepares
    every pair herself) and is evaluated by exact state-vector
    measurement, so it is limited to small N.
    """
    _check_attack("epr", attack)
    if rng is None:
        rng = stream(config.seed)
    n, m = config.n_pairs, config.test_size
    events = ["prepared", "delivered"]

    coherent = isinstance(attack, CoherentAttack)
    if coherent:
        if attack.n_pairs != n:
            raise ConfigError(
                f"coherent attack holds {attack.n_pairs} pairs but the session needs {n}"
            )
        joint = attack.state
    else:
        labels = channel.sample_labels(n, rng)
        if isinstance(attack, SubstituteAttack):
            labels, _ = substitute_pairs(labels, attack.fraction, attack.label_weights, rng)

    events.append("acknowledged")
    axes = random_axes(n, rng)
    events.append("axes_announced")

    if coherent:
        outcome_a = np.empty(n, dtype=np.uint8)
        outcome_b = np.empty(n, dtype=np.uint8)
        state = joint
        for t in range(n):
            axis = MeasurementAxis.from_array(axes[t])
            a, b, state = measure_pair(state, t, axis, axis, rng)
            outcome_a[t], outcome_b[t] = a, b
    else:
        outcome_a, outcome_b = channel_mod.sample_common_axis_outcomes(labels, axes, rng)
    events.append("measured")

    test_idx = select_test_set(n, m, rng)
    events.append("test_set_announced")
    in_test = np.zeros(n, dtype=bool)
    in_test[test_idx] = True
    errors = int((outcome_a[test_idx] == outcome_b[test_idx]).sum())
    events.append("results_compared")

    lo, hi = accepted_count_interval(config, m)
    verdict = "accepted" if lo <= errors <= hi else "rejected"
    events.append("verdict")

    keep = ~in_test
    eve_holevo = None
    if coherent:
        plan = TestPlan(
            indices=tuple(int(i) for i in test_idx),
            axes=tuple(MeasurementAxis.from_array(axes[i]) for i in test_idx),
            accept_lo=lo,
            accept_hi=hi,
        )
        try:
            eve_holevo = eve_info_bound(conditional_ancilla_state(attack, plan))
        except ValueError:
            eve_holevo = None

    return Transcript(
        protocol="epr",
        verdict=verdict,
        observed_error_count=errors,
        test_size=m,
        error_rate_estimate=errors / m,
        outcome_a=outcome_a,
        outcome_b=outcome_b,
        in_test=in_test,
        sifted=np.ones(n, dtype=bool),
        sifted_key_a=outcome_a[keep].astype(np.uint8),
        sifted_key_b=(1 - outcome_b[keep]).astype(np.uint8),
        events=tuple(events),
        axes=axes,
        eve_holevo_bits=eve_holevo,
    )


def _pauli_flips(labels: np.ndarray, diag_basis: np.ndarray) -> np.ndarray:
    """Whether each Bell label flips a photon prepared in the given basis.

    Labels act on the flying photon as 0 -> identity, 1 -> Z, 2 -> Y,
    3 -> X; Z flips diagonal eigenstates, X flips rectilinear ones, Y both.
    """
    flips_rect = (labels == 2) | (labels == 3)
    flips_diag = (labels == 1) | (labels == 2)
    return np.where(diag_basis, flips_diag, flips_rect)


def run_bb84_session(
    config: SessionConfig,
    channel: ChannelModel,
    attack=None,
    rng: np.random.Generator | None = None,
) -> Transcript:
    """Run one prepare-and-measure session and return its transcript.

    The test set holds equally many diagonal-matched and rectilinear-matched
    positions: k of each, where k is the smaller matched count (so for small
    omega every diagonal match is consumed by the test and the key is built
    from rectilinear positions).  A session with no matched positions in one
    of the classes aborts with an undersampling error rather than running a
    one-sided test.
    """
    _check_attack("bb84", attack)
    if rng is None:
        rng = stream(config.seed)
    n = config.n_pairs
    omega = config.omega

    basis_a = (rng.random(n) < omega).astype(np.uint8)
    bits_a = rng.integers(0, 2, size=n, dtype=np.uint8)
    events = ["prepared", "delivered"]

    labels = channel.sample_labels(n, rng)
    arrival = bits_a ^ _pauli_flips(labels, basis_a).astype(np.uint8)

    basis_b = (rng.random(n) < omega).astype(np.uint8)
    eve_bits = None
    if isinstance(attack, InterceptResend):
        if attack.policy == "rectilinear":
            eve_basis = np.zeros(n, dtype=np.uint8)
        elif attack.policy == "diagonal":
            eve_basis = np.ones(n, dtype=np.uint8)
        else:
            eve_basis = rng.integers(0, 2, size=n, dtype=np.uint8)
        eve_bits = np.where(
            eve_basis == basis_a, arrival, rng.integers(0, 2, size=n, dtype=np.uint8)
        ).astype(np.uint8)
        outcome_b = np.where(
            basis_b == eve_basis, eve_bits, rng.integers(0, 2, size=n, dtype=np.uint8)
        ).astype(np.uint8)
    else:
        outcome_b = np.where(
            basis_b == basis_a, arrival, rng.integers(0, 2, size=n, dtype=np.uint8)
        ).astype(np.uint8)
    events.append("measured")
    events.append("bases_announced")

    matched = basis_a == basis_b
    events.append("sifted")

    diag_matched = np.flatnonzero(matched & (basis_a == 1))
    rect_matched = np.flatnonzero(matched & (basis_a == 0))
    k = min(diag_matched.size, rect_matched.size)
    if k == 0:
        raise UndersamplingError(
            f"cannot form a two-basis test: {diag_matched.size} diagonal-matched "
            f"and {rect_matched.size} rectilinear-matched positions"
        )
    diag_test = (
        diag_matched
        if diag_matched.size == k
        else rng.choice(diag_matched, size=k, replace=False)
    )
    rect_test = (
        rect_matched
        if rect_matched.size == k
        else rng.choice(rect_matched, size=k, replace=False)
    )
    in_test = np.zeros(n, dtype=bool)
    in_test[diag_test] = True
    in_test[rect_test] = True
    events.append("test_set_announced")

    m_t = int(in_test.sum())
    errors = int((bits_a[in_test] != outcome_b[in_test]).sum())
    events.append("results_compared")

    lo, hi = accepted_count_interval(config, m_t)
    verdict = "accepted" if lo <= errors <= hi else "rejected"
    events.append("verdict")

    keep = matched & ~in_test
    return Transcript(
        protocol="bb84",
        verdict=verdict,
        observed_error_count=errors,
        test_size=m_t,
        error_rate_estimate=errors / m_t,
        outcome_a=bits_a,
        outcome_b=outcome_b,
        in_test=in_test,
        sifted=matched,
        sifted_key_a=bits_a[keep].astype(np.uint8),
        sifted_key_b=outcome_b[keep].astype(np.uint8),
        events=tuple(events),
        basis_a=basis_a,
        basis_b=basis_b,
        eve_bits=eve_bits,
    )


# ---------------------------------------------------------------------------
# equivalence of the two constructions


_BASIS_AXES = (MeasurementAxis(0.0, 0.0, 1.0), MeasurementAxis(1.0, 0.0, 0.0))


def _collapse_distribution(
    pair_vec: np.ndarray, axis_first: MeasurementAxis, axis_second: MeasurementAxis, order: str
) -> np.ndarray:
    """Exact joint outcome distribution of sequential pair measurement.

    ``order`` is "ab" (Alice's qubit first) or "ba"; returns p[a, b].
    """
    first_qubit, second_qubit = (0, 1) if order == "ab" else (1, 0)
    proj_first = spin_projectors(axis_first)
    proj_second = spin_projectors(axis_second)
    p = np.zeros((2, 2))
    for o1 in (0, 1):
        v1 = apply_operator(pair_vec, (2, 2), proj_first[o1], (first_qubit,))
        for o2 in (0, 1):
            v2 = apply_operator(v1, (2, 2), proj_second[o2], (second_qubit,))
            outcome = (o1, o2) if order == "ab" else (o2, o1)
            p[outcome] = np.vdot(v2, v2).real
    return p


@dataclass(frozen=True)
class EquivalenceReport:
    """Per-cell outcome counts of the protocol constructions under test."""

    n_samples: int
    counts: dict[str, np.ndarray]
    max_z: float

    @property
    def consistent(self) -> bool:
        return self.max_z <= 3.0

    def to_dict(self) -> dict:
        return {
            "n_samples": int(self.n_samples),
            "max_z": float(self.max_z),
            "consistent": bool(self.consistent),
            "counts": {k: v.tolist() for k, v in self.counts.items()},
        }


def epr_bb84_equivalence_check(
    n_samples: int,
    fidelity: float,
    omega: float,
    rng: np.random.Generator,
) -> EquivalenceReport:
    """Compare direct polarization sampling against the pair construction.

    Three constructions of the same prepare-and-measure statistics are
    sampled ``n_samples`` times each: direct photon preparation through a
    Pauli channel, and shared pairs measured with Alice first or with Bob
    first (Alice measuring her half before transmission versus after
    Bob's acknowledgment).  Counts land in (basis_a, basis_b, bit_a,
    bit_b) cells; the report's max_z is the largest two-proportion z-score
    across cells and construction pairs.
    """
    if n_samples < 1000:
        raise ConfigError("equivalence comparison needs at least 1000 samples")
    bell = bell_vectors()
    p_label = np.array([fidelity] + [(1.0 - fidelity) / 3.0] * 3)
    p_basis = np.array([1.0 - omega, omega])

    group_p = np.einsum("k,i,j->kij", p_label, p_basis, p_basis).reshape(-1)
    names = ("direct", "epr_alice_first", "epr_bob_first")
    counts = {name: np.zeros((2, 2, 2, 2), dtype=np.int64) for name in names}

    for name in names:
        group_counts = rng.multinomial(n_samples, group_p).reshape(4, 2, 2)
        for k in range(4):
            for i in range(2):
                for j in range(2):
                    c = int(group_counts[k, i, j])
                    if c == 0:
                        continue
                    dist = np.zeros((2, 2))
                    if name == "direct":
                        # bit_a uniform; flip per Pauli label; cross-basis uniform
                        flips = (k in (2, 3)) if i == 0 else (k in (1, 2))
                        for x in (0, 1):
                            if i == j:
                                dist[x, x ^ int(flips)] = 0.5
                            else:
                                dist[x, 0] = dist[x, 1] = 0.25
                    else:
                        order = "ab" if name == "epr_alice_first" else "ba"
                        axis_a, axis_b = _BASIS_AXES[i], _BASIS_AXES[j]
                        first_axis = axis_a if order == "ab" else axis_b
                        second_axis = axis_b if order == "ab" else axis_a
                        p_ab = _collapse_distribution(bell[k], first_axis, second_axis, order)
                        # Alice's bit is her outcome, Bob's bit flips his
                        for a in (0, 1):
                            for b in (0, 1):
                                dist[a, 1 - b] += p_ab[a, b]
                    sample = rng.multinomial(c, dist.reshape(-1)).reshape(2, 2)
                    counts[name][i, j] += sample

    max_z = 0.0
    for a_idx in range(len(names)):
        for b_idx in range(a_idx + 1, len(names)):
            c1 = counts[names[a_idx]].reshape(-1)
            c2 = counts[names[b_idx]].reshape(-1)
            for cell in range(c1.size):
                p1, p2 = c1[cell] / n_samples, c2[cell] / n_samples
                pooled = (c1[cell] + c2[cell]) / (2.0 * n_samples)
                if pooled in (0.0, 1.0):
                    continue
                z = abs(p1 - p2) / math.sqrt(pooled * (1.0 - pooled) * 2.0 / n_samples)
                max_z = max(max_z, z)
    return EquivalenceReport(n_samples=n_samples, counts=counts, max_z=max_z)
