"""Eavesdropping models and their exact evaluation.

Three attack families are modeled:

  * intercept-resend on single photons (measure in a basis, resend the
    eigenstate seen),
  * substitution of a fraction of pairs by triplet Bell states,
  * fully coherent attacks, where the attacker prepares the entire joint
    state of N pairs entangled with a private ancilla block:

        sum_{i1..iN} a_{i1..iN, r} |psi_i1> ... |psi_iN> |r>.

Coherent attacks are evaluated exactly by Born-rule enumeration, which is
why they are capped at 6 pairs and ancilla dimension 16.  For a test plan
(which pairs are compared, along which axes, and how many parallel
outcomes are tolerated) the module computes the exact passing
probability, the attacker's ancilla state conditioned on passing, and the
Holevo bound S(rho) on what she can learn from it.

The typicality split quantifies the attacker's dilemma: weight on vectors
with many non-singlet slots is what the test catches, so a surviving
attack must live in the low-count ("atypical") subspace, whose dimension
is bounded in :mod:`qkdlab.bounds`.

The cloning-interaction verifier at the bottom checks the information /
disturbance tradeoff for unitaries coupling a signal qubit to a probe:
interactions that leave two non-orthogonal signals untouched force
identical probe outputs, and interactions whose probe outputs are
distinguishable must disturb at least one signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import atypical_threshold, binary_entropy
from .errors import ConfigError
from .qstate import (
    DensityMatrix,
    MeasurementAxis,
    QuantumState,
    apply_operator,
    bell_vectors,
    measure_qubit,
    random_axes,
    random_unitary,
    reduced_density,
    spin_projectors,
    von_neumann_entropy,
)

MAX_PAIRS = 6
MAX_ANCILLA_DIM = 16


# ---------------------------------------------------------------------------
# attack descriptions


@dataclass(frozen=True)
class NoAttack:
    kind: str = field(default="none", init=False)


@dataclass(frozen=True)
class InterceptResend:
    """Measure every photon in a basis chosen by ``policy`` and resend."""

    policy: str = "random"
    kind: str = field(default="intercept_resend", init=False)

    def __post_init__(self) -> None:
        if self.policy not in ("rectilinear", "diagonal", "random"):
            raise ConfigError(f"unknown intercept policy {self.policy!r}")


def _check_label_weights(label_weights) -> tuple[float, float, float]:
    w = tuple(float(x) for x in label_weights)
    if len(w) == 4:
        if w[0] != 0.0:
            raise ConfigError("substitution must not place weight on the singlet label")
        w = w[1:]
    if len(w) != 3:
        raise ConfigError("label weights must cover the three triplet labels")
    if any(x < 0.0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
        raise ConfigError("label weights must be nonnegative and sum to 1")
    return w


@dataclass(frozen=True)
class SubstituteAttack:
    """Replace a fraction of pairs by triplets drawn from ``label_weights``."""

    fraction: float
    label_weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    kind: str = field(default="substitute", init=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigError(f"substitution fraction {self.fraction} outside [0, 1]")
        object.__setattr__(self, "label_weights", _check_label_weights(self.label_weights))


def substitute_pairs(
    labels: np.ndarray,
    fraction: float,
    label_weights,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Overwrite a random ``round(fraction * n)`` positions with triplet labels.

    Returns (new labels, boolean mask of substituted positions).  The
    remaining positions keep their input labels, so composing with a noisy
    channel means sampling the input stream from that channel.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"substitution fraction {fraction} outside [0, 1]")
    weights = _check_label_weights(label_weights)
    labels = np.array(labels, dtype=np.int64, copy=True)
    n = labels.shape[0]
    count = int(round(fraction * n))
    mask = np.zeros(n, dtype=bool)
    if count:
        positions = rng.choice(n, size=count, replace=False)
        labels[positions] = rng.choice([1, 2, 3], size=count, p=weights)
        mask[positions] = True
    return labels, mask


def intercept_resend(
    photon: QuantumState, policy: str, rng: np.random.Generator
) -> tuple[QuantumState, int]:
    """Measure a single photon per ``policy`` and resend the eigenstate seen.

    Returns (resent photon, recorded bit).  The resent state is exactly the
    projector eigenstate of the measured outcome, so a matching-basis
    measurement downstream reproduces the recorded bit with certainty.
    """
    if photon.dims != (2,):
        raise ConfigError("intercept-resend acts on single-qubit states")
    if policy == "random":
        policy = "rectilinear" if rng.random() < 0.5 else "diagonal"
    if policy == "rectilinear":
        axis = MeasurementAxis(0.0, 0.0, 1.0)
    elif policy == "diagonal":
        axis = MeasurementAxis(1.0, 0.0, 0.0)
    else:
        raise ConfigError(f"unknown intercept policy {policy!r}")
    bit, post = measure_qubit(photon, 0, axis, rng)
    return post, bit


# ---------------------------------------------------------------------------
# coherent attacks


def _bell_transform(arr: np.ndarray, n_pairs: int, to_bell: bool) -> np.ndarray:
    """Convert between computational pair axes (dim 4) and Bell-label axes."""
    b = bell_vectors()
    for i in range(n_pairs):
        if to_bell:
            arr = np.tensordot(b.conj(), arr, axes=([1], [i]))
            arr = np.moveaxis(arr, 0, i)
        else:
            arr = np.tensordot(arr, b, axes=([i], [0]))
            arr = np.moveaxis(arr, -1, i)
    return arr


@dataclass(frozen=True, eq=False)
class CoherentAttack:
    """A joint pure state of N pairs plus one ancilla block.

    The state factorization is 2N qubits followed by a single ancilla
    subsystem; qubits 2t and 2t+1 form pair t (Alice's half first).
    """

    state: QuantumState
    n_pairs: int
    ancilla_dim: int

    def __post_init__(self) -> None:
        if not 1 <= self.n_pairs <= MAX_PAIRS:
            raise ConfigError(f"coherent attacks support 1..{MAX_PAIRS} pairs, got {self.n_pairs}")
        if not 1 <= self.ancilla_dim <= MAX_ANCILLA_DIM:
            raise ConfigError(
                f"ancilla dimension must be 1..{MAX_ANCILLA_DIM}, got {self.ancilla_dim}"
            )
        expected = (2,) * (2 * self.n_pairs) + (self.ancilla_dim,)
        if self.state.dims != expected:
            raise ConfigError(
                f"state factorization {self.state.dims} does not match {expected}"
            )

    @classmethod
    def from_bell_amplitudes(cls, amplitudes: np.ndarray) -> "CoherentAttack":
        """Build from a (4,)*N or (4,)*N + (ancilla,) amplitude tensor."""
        arr = np.asarray(amplitudes, dtype=complex)
        if arr.ndim == 0:
            raise ConfigError("amplitude tensor must have at least one pair axis")
        if all(d == 4 for d in arr.shape):
            arr = arr[..., None]
        n_pairs = arr.ndim - 1
        if any(d != 4 for d in arr.shape[:-1]):
            raise ConfigError(f"pair axes must have dimension 4, got shape {arr.shape}")
        anc = arr.shape[-1]
        comp = _bell_transform(arr, n_pairs, to_bell=False)
        state = QuantumState(comp.reshape(-1), (2,) * (2 * n_pairs) + (anc,))
        return cls(state=state, n_pairs=n_pairs, ancilla_dim=anc)

    @classmethod
    def from_text(cls, text: str) -> "CoherentAttack":
        """Parse the row format ``<labels> <ancilla index> <real> <imag>``.

        ``labels`` is a string of N digits in 0..3 naming the Bell state of
        each pair.  Rows must describe a normalized state; unnormalized
        input is rejected, not renormalized.
        """
        entries: dict[tuple[str, int], complex] = {}
        n_pairs = None
        anc_max = 0
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ConfigError(f"line {lineno}: expected 'labels anc real imag'")
            labels, anc_s, re_s, im_s = parts
            if n_pairs is None:
                n_pairs = len(labels)
            if len(labels) != n_pairs or not all(c in "0123" for c in labels):
                raise ConfigError(f"line {lineno}: bad label string {labels!r}")
            try:
                anc = int(anc_s)
                value = complex(float(re_s), float(im_s))
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: {exc}") from exc
            if anc < 0:
                raise ConfigError(f"line {lineno}: negative ancilla index")
            if (labels, anc) in entries:
                raise ConfigError(f"line {lineno}: duplicate row for {labels} {anc}")
            entries[(labels, anc)] = value
            anc_max = max(anc_max, anc)
        if not entries:
            raise ConfigError("attack file contains no amplitude rows")
        arr = np.zeros((4,) * n_pairs + (anc_max + 1,), dtype=complex)
        for (labels, anc), value in entries.items():
            arr[tuple(int(c) for c in labels) + (anc,)] = value
        norm = np.linalg.norm(arr)
        if abs(norm - 1.0) > 1e-9:
            raise ConfigError(
                f"attack state has norm {norm!r}; unnormalized input is rejected"
            )
        return cls.from_bell_amplitudes(arr)

    @classmethod
    def from_file(cls, path) -> "CoherentAttack":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        """Serialize the nonzero Bell-basis amplitudes in the row format."""
        arr = self.bell_amplitudes()
        lines = []
        for idx in np.ndindex(*arr.shape):
            v = arr[idx]
            if abs(v) > 1e-12:
                labels = "".join(str(i) for i in idx[:-1])
                lines.append(
                    f"{labels} {idx[-1]} {float(v.real)!r} {float(v.imag)!r}"
                )
        return "\n".join(lines) + "\n"

    def bell_amplitudes(self) -> np.ndarray:
        arr = self.state.amplitudes.reshape((4,) * self.n_pairs + (self.ancilla_dim,))
        return _bell_transform(arr, self.n_pairs, to_bell=True)


@dataclass(frozen=True)
class TestPlan:
    """Which pairs get compared, along which axes, and what error counts pass."""

    __test__ = False  # not a pytest fixture despite the name

    indices: tuple[int, ...]
    axes: tuple[MeasurementAxis, ...]
    accept_lo: int
    accept_hi: int

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.axes):
            raise ConfigError("one axis per tested pair is required")
        if len(set(self.indices)) != len(self.indices):
            raise ConfigError("test indices must be distinct")
        if self.indices and min(self.indices) < 0:
            raise ConfigError("test indices must be nonnegative")
        if not 0 <= self.accept_lo <= self.accept_hi <= len(self.indices):
            raise ConfigError(
                f"acceptance interval [{self.accept_lo}, {self.accept_hi}] is not a "
                f"subrange of 0..{len(self.indices)}"
            )

    @classmethod
    def strict(cls, indices, axes) -> "TestPlan":
        """Pass only when every tested pair comes out antiparallel."""
        return cls(tuple(indices), tuple(axes), 0, 0)

    @classmethod
    def windowed(cls, indices, axes, lo: int, hi: int) -> "TestPlan":
        return cls(tuple(indices), tuple(axes), lo, hi)


def _pair_coarse_projectors(axis_vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(E_antiparallel, E_parallel) on a pair, both qubits along the same axis."""
    up, down = spin_projectors(MeasurementAxis.from_array(axis_vec))
    anti = np.kron(up, down) + np.kron(down, up)
    return anti, np.eye(4, dtype=complex) - anti


def _error_count_probs(
    amps: np.ndarray,
    dims: tuple[int, ...],
    pairs: tuple[int, ...],
    axis_vecs: np.ndarray,
    visit,
) -> None:
    """Branch over antiparallel/parallel outcomes of each tested pair.

    Calls ``visit(leaf amplitudes, error count)`` on each of the 2^m
    leaves.  Branch projectors commute across pairs and are orthogonal
    within a pair, so leaf norms are exact outcome-class probabilities.
    """
    ops = [_pair_coarse_projectors(axis_vecs[i]) for i in range(len(pairs))]

    def rec(vec: np.ndarray, i: int, errors: int) -> None:
        if i == len(pairs):
            visit(vec, errors)
            return
        qa, qb = 2 * pairs[i], 2 * pairs[i] + 1
        rec(apply_operator(vec, dims, ops[i][0], (qa, qb)), i + 1, errors)
        rec(apply_operator(vec, dims, ops[i][1], (qa, qb)), i + 1, errors + 1)

    rec(amps, 0, 0)


def _plan_axis_array(plan: TestPlan) -> np.ndarray:
    return np.array([ax.as_array() for ax in plan.axes]) if plan.axes else np.zeros((0, 3))


def _check_plan(attack: CoherentAttack, plan: TestPlan) -> None:
    if plan.indices and max(plan.indices) >= attack.n_pairs:
        raise ConfigError("test plan addresses pairs outside the attack state")


def passing_probability(attack: CoherentAttack, plan: TestPlan) -> float:
    """Exact probability that the attack state passes the plan's test."""
    _check_plan(attack, plan)
    probs = np.zeros(len(plan.indices) + 1)

    def visit(vec: np.ndarray, errors: int) -> None:
        probs[errors] += np.vdot(vec, vec).real

    _error_count_probs(
        attack.state.amplitudes, attack.state.dims, plan.indices, _plan_axis_array(plan), visit
    )
    return float(probs[plan.accept_lo : plan.accept_hi + 1].sum())


def axis_averaged_passing_probability(
    attack: CoherentAttack,
    m: int,
    rng: np.random.Generator,
    n_samples: int = 1000,
    accept: tuple[int, int] = (0, 0),
    indices: tuple[int, ...] | None = None,
) -> tuple[float, float]:
    """Monte-Carlo average of the exact passing probability over plans.

    Each sample draws fresh uniform axes and, when ``indices`` is None, a
    fresh uniformly random m-subset of tested pairs.  Returns the mean and
    its standard error.
    """
    if not 1 <= m <= attack.n_pairs:
        raise ConfigError(f"test size {m} outside 1..{attack.n_pairs}")
    lo, hi = accept
    values = np.empty(n_samples)
    amps, dims = attack.state.amplitudes, attack.state.dims
    for s in range(n_samples):
        pairs = (
            indices
            if indices is not None
            else tuple(int(i) for i in rng.choice(attack.n_pairs, size=m, replace=False))
        )
        axes = random_axes(m, rng)
        probs = np.zeros(m + 1)

        def visit(vec: np.ndarray, errors: int) -> None:
            probs[errors] += np.vdot(vec, vec).real

        _error_count_probs(amps, dims, pairs, axes, visit)
        values[s] = probs[lo : hi + 1].sum()
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return mean, stderr


def conditional_ancilla_state(attack: CoherentAttack, plan: TestPlan) -> DensityMatrix:
    """The attacker's ancilla state conditioned on the test passing.

    Averages the post-measurement ancilla over all passing outcome
    branches, weighted by their Born probabilities.  Raises if the passing
    probability vanishes (there is nothing to condition on).
    """
    _check_plan(attack, plan)
    anc = attack.ancilla_dim
    particles = attack.state.dim // anc
    accum = np.zeros((anc, anc), dtype=complex)
    total = 0.0

    def visit(vec: np.ndarray, errors: int) -> None:
        nonlocal total
        if plan.accept_lo <= errors <= plan.accept_hi:
            mat = vec.reshape(particles, anc)
            accum[...] += mat.T @ mat.conj()
            total += np.vdot(vec, vec).real

    _error_count_probs(
        attack.state.amplitudes, attack.state.dims, plan.indices, _plan_axis_array(plan), visit
    )
    if total < 1e-12:
        raise ValueError("passing probability is zero; no conditional state exists")
    return DensityMatrix(accum / total, (anc,))


def eve_info_bound(rho: DensityMatrix) -> float:
    """Holevo bound S(rho) in bits on information extractable from ``rho``."""
    return von_neumann_entropy(rho)


def typicality_split(n_pairs: int, eps: float, state: QuantumState) -> tuple[float, float]:
    """Weights of ``state`` on the typical / atypical count subspaces.

    The atypical subspace is spanned by Bell-product vectors with fewer
    than T = ceil(2 N eps) non-singlet slots; weight on its complement is
    what an error-rate test at eps is statistically able to notice.  The
    state may carry a trailing ancilla block, which is summed over.
    """
    qubit_dims = (2,) * (2 * n_pairs)
    if state.dims == qubit_dims:
        arr = state.amplitudes.reshape((4,) * n_pairs + (1,))
    elif state.dims[: 2 * n_pairs] == qubit_dims and len(state.dims) == 2 * n_pairs + 1:
        arr = state.amplitudes.reshape((4,) * n_pairs + (state.dims[-1],))
    else:
        raise ConfigError(f"state factorization {state.dims} does not hold {n_pairs} pairs")
    t = atypical_threshold(n_pairs, eps)
    weights = np.abs(_bell_transform(arr, n_pairs, to_bell=True)) ** 2
    weights = weights.sum(axis=-1).reshape((4,) * n_pairs)
    nonsinglet = np.array([0, 1, 1, 1])
    counts = np.zeros((4,) * n_pairs, dtype=int)
    for i in range(n_pairs):
        shape = [1] * n_pairs
        shape[i] = 4
        counts = counts + nonsinglet.reshape(shape)
    atypical = float(weights[counts < t].sum())
    return float(weights.sum() - atypical), atypical


# ---------------------------------------------------------------------------
# cloning interactions: information gain forces disturbance


@dataclass(frozen=True)
class CloningReport:
    """Outcome of probing two signal states through one unitary interaction."""

    probe_overlap: float
    signal_fidelities: tuple[float, float]
    helstrom_bits: float
    holevo_bits: float

    @property
    def max_fidelity_deficit(self) -> float:
        return 1.0 - min(self.signal_fidelities)


def random_signal_pair(
    rng: np.random.Generator, min_overlap: float = 0.1, max_overlap: float = 0.9
) -> tuple[np.ndarray, np.ndarray]:
    """Two random qubit states with |<u1|u2>| drawn from [min, max]."""
    if not 0.0 < min_overlap <= max_overlap < 1.0:
        raise ValueError("overlap window must sit strictly inside (0, 1)")
    u1 = rng.normal(size=2) + 1j * rng.normal(size=2)
    u1 /= np.linalg.norm(u1)
    perp = np.array([-np.conj(u1[1]), np.conj(u1[0])])
    c = rng.uniform(min_overlap, max_overlap)
    phase = np.exp(2j * np.pi * rng.random())
    u2 = c * u1 + math.sqrt(1.0 - c * c) * phase * perp
    return u1, u2 / np.linalg.norm(u2)


def signal_preserving_unitary(
    u1: np.ndarray,
    u2: np.ndarray,
    ancilla_dim: int,
    rng: np.random.Generator,
    probe: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """A random unitary on signal x probe that leaves both signals intact.

    Maps |u_i>|probe> to |u_i>|phi> for a random common probe output phi;
    unitarity fixes the probe outputs to be identical once both signals
    are preserved, and the rest of the map is completed Haar-randomly.
    Returns (U, probe).
    """
    if ancilla_dim < 2:
        raise ValueError("probe needs dimension >= 2")
    if probe is None:
        probe = rng.normal(size=ancilla_dim) + 1j * rng.normal(size=ancilla_dim)
        probe = probe / np.linalg.norm(probe)
    phi = rng.normal(size=ancilla_dim) + 1j * rng.normal(size=ancilla_dim)
    phi = phi / np.linalg.norm(phi)
    x1, x2 = np.kron(u1, probe), np.kron(u2, probe)
    y1, y2 = np.kron(u1, phi), np.kron(u2, phi)
    d = 2 * ancilla_dim

    def orthonormal_pair(a, b):
        e1 = a / np.linalg.norm(a)
        r = b - np.vdot(e1, b) * e1
        nr = np.linalg.norm(r)
        if nr < 1e-12:
            raise ValueError("signal states are (numerically) parallel")
        return e1, r / nr

    e1, e2 = orthonormal_pair(x1, x2)
    f1, f2 = orthonormal_pair(y1, y2)

    def complement(v1, v2):
        # Householder QR of [v1 v2 | I] yields an exactly orthonormal frame
        # whose first two columns span {v1, v2}; the rest is the complement.
        q = np.linalg.qr(np.column_stack([v1, v2, np.eye(d)]))[0]
        return q[:, 2:d]

    e_comp = complement(e1, e2)
    f_comp = complement(f1, f2)
    w = random_unitary(d - 2, rng)
    u = np.outer(f1, e1.conj()) + np.outer(f2, e2.conj()) + f_comp @ w @ e_comp.conj().T
    return u, probe


def trace_distance(rho1: DensityMatrix, rho2: DensityMatrix) -> float:
    vals = np.linalg.eigvalsh(rho1.matrix - rho2.matrix)
    return float(np.abs(vals).sum() / 2.0)


def cloning_report(
    u: np.ndarray, u1: np.ndarray, u2: np.ndarray, probe: np.ndarray
) -> CloningReport:
    """Evaluate one interaction unitary against two signal states.

    Reports the overlap of the two conditional probe outputs, the
    fidelity of each output signal with its input, and two measures of
    the probe's distinguishing information: the Holevo quantity of the
    probe ensemble (an upper bound) and the mutual information of the
    optimal two-outcome discrimination (achievable, via the trace
    distance).
    """
    anc = probe.shape[0]
    dims = (2, anc)
    probe_states = []
    signal_fid = []
    probe_vecs = []
    for sig in (u1, u2):
        out = QuantumState(u @ np.kron(sig, probe), dims)
        rho_sig = reduced_density(out, (0,))
        signal_fid.append(float(np.real(sig.conj() @ rho_sig.matrix @ sig)))
        probe_states.append(reduced_density(out, (1,)))
        vec = out.tensor().reshape(2, anc)
        proj = sig.conj() @ vec
        norm = np.linalg.norm(proj)
        probe_vecs.append(proj / norm if norm > 1e-12 else np.zeros(anc, dtype=complex))
    overlap = float(abs(np.vdot(probe_vecs[0], probe_vecs[1])))
    rho1, rho2 = probe_states
    avg = DensityMatrix((rho1.matrix + rho2.matrix) / 2.0, rho1.dims)
    holevo = von_neumann_entropy(avg) - 0.5 * (
        von_neumann_entropy(rho1) + von_neumann_entropy(rho2)
    )
    d = trace_distance(rho1, rho2)
    helstrom = 1.0 - binary_entropy((1.0 + d) / 2.0)
    return CloningReport(
        probe_overlap=overlap,
        signal_fidelities=(signal_fid[0], signal_fid[1]),
        helstrom_bits=max(0.0, helstrom),
        holevo_bits=max(0.0, float(holevo)),
    )
