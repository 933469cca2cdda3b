"""Counting bounds on the eavesdropper and secrecy-rate estimates.

The central object is the "atypical" subspace of N pair slots at error
rate epsilon: the span of Bell-product vectors carrying fewer than
T = ceil(2 N epsilon) non-singlet slots.  An attack that wants to survive
random testing must concentrate there, so its accessible information is
capped by the log of the subspace dimension.  This module computes the
exact dimension and the chain of increasingly generous closed-form bounds

    exact <= L1 <= L2 <= L3 <= L4 = L5,

    L1 = sum_{a,b,c < T} C(N,a) C(N-a,b) C(N-a-b,c)
    L2 = T^3 C(N,T)^3
    L3 = T^3 2^(3 N H(T/N))
    L4 = 2^(N (6 H(eps) + mu)),   mu = 3 log2(T^3) / N
    L5 = 2^(-N k eps log2 eps)    for the implied k making L5 >= L4,

together with the resulting secrecy-rate lower bound
max(0, 1 + k' eps log2 eps).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel
from .errors import RegimeError


def binary_entropy(x: float) -> float:
    """H(x) = -x log2 x - (1-x) log2(1-x), with H(0) = H(1) = 0."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy undefined at {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -(x * math.log2(x) + (1.0 - x) * math.log2(1.0 - x))


def log2_int(n: int) -> float:
    """log2 of a positive integer of arbitrary size."""
    if n <= 0:
        raise ValueError("log2 of a non-positive integer")
    bits = n.bit_length()
    if bits <= 53:
        return math.log2(n)
    shift = bits - 53
    return math.log2(n >> shift) + shift


def binomial_entropy_inequality(n: int, r: int) -> tuple[int, float]:
    """Return (C(n, r), n * H(r/n)); the first is always <= 2 to the second."""
    if not 0 <= r <= n:
        raise ValueError(f"C({n}, {r}) is not defined")
    if n == 0:
        return 1, 0.0
    return math.comb(n, r), n * binary_entropy(r / n)


def atypical_threshold(n_pairs: int, eps: float) -> int:
    """T = ceil(2 N eps), with protection against float fuzz at integers."""
    v = 2.0 * n_pairs * eps
    nearest = round(v)
    if abs(v - nearest) < 1e-9:
        return int(nearest)
    return int(math.ceil(v))


def atypical_count_exact(n_pairs: int, threshold: int) -> int:
    """Number of Bell-product vectors on N slots with < T non-singlet slots."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return sum(math.comb(n_pairs, k) * 3**k for k in range(min(threshold, n_pairs + 1)))


def _check_regime(n_pairs: int, eps: float) -> None:
    if not 0.0 < eps < 0.25:
        raise RegimeError(f"epsilon {eps} outside the validity regime (0, 1/4)")
    if n_pairs * eps < 0.5 - 1e-12:
        raise RegimeError(f"N*eps = {n_pairs * eps} below 1/2: too few expected errors")


def _l1_exact(n_pairs: int, threshold: int) -> int:
    # sum over (a, b, c) < T of C(N,a) C(N-a,b) C(N-a-b,c), with the inner
    # sums shared across outer terms
    inner: dict[int, int] = {}

    def s_inner(n: int) -> int:
        if n not in inner:
            inner[n] = sum(math.comb(n, c) for c in range(threshold))
        return inner[n]

    middle: dict[int, int] = {}

    def s_middle(n: int) -> int:
        if n not in middle:
            middle[n] = sum(math.comb(n, b) * s_inner(n - b) for b in range(threshold))
        return middle[n]

    return sum(math.comb(n_pairs, a) * s_middle(n_pairs - a) for a in range(threshold))


@dataclass(frozen=True)
class BoundReport:
    """The bound chain at one (N, eps) point, large values in log2 form."""

    n_pairs: int
    epsilon: float
    threshold: int
    exact_count: int
    l1: int
    l2: int
    log2_exact: float
    log2_l1: float
    log2_l2: float
    log2_l3: float
    log2_l4: float
    log2_l5: float
    mu: float
    implied_k: float
    margin_vs_full_space: float = field(default=0.0)

    def chain_holds(self, atol: float = 1e-9) -> bool:
        return (
            self.exact_count <= self.l1 <= self.l2
            and self.log2_l2 <= self.log2_l3 + atol
            and self.log2_l3 <= self.log2_l4 + atol
            and self.log2_l4 <= self.log2_l5 + atol
        )

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "epsilon": self.epsilon,
            "threshold": self.threshold,
            "exact_count": self.exact_count,
            "l1": self.l1,
            "l2": self.l2,
            "log2_exact": self.log2_exact,
            "log2_l1": self.log2_l1,
            "log2_l2": self.log2_l2,
            "log2_l3": self.log2_l3,
            "log2_l4": self.log2_l4,
            "log2_l5": self.log2_l5,
            "mu": self.mu,
            "implied_k": self.implied_k,
            "margin_vs_full_space": self.margin_vs_full_space,
            "chain_holds": self.chain_holds(),
        }


def atypical_dim_chain(n_pairs: int, eps: float) -> BoundReport:
    """Exact atypical dimension and the loosening chain L1..L5 at (N, eps).

    Valid for eps in (0, 1/4) with N*eps >= 1/2.  All inequalities of the
    chain hold by construction; the report keeps exact integers where they
    are exact and log2 values throughout.
    """
    _check_regime(n_pairs, eps)
    t = atypical_threshold(n_pairs, eps)
    exact = atypical_count_exact(n_pairs, t)
    l1 = _l1_exact(n_pairs, t)
    l2 = t**3 * math.comb(n_pairs, t) ** 3
    log2_l3 = 3.0 * math.log2(t) + 3.0 * n_pairs * binary_entropy(t / n_pairs)
    mu = 3.0 * math.log2(t**3) / n_pairs
    log2_l4 = n_pairs * (6.0 * binary_entropy(eps) + mu)
    implied_k = (6.0 * binary_entropy(eps) + mu) / (-eps * math.log2(eps))
    log2_l5 = -n_pairs * implied_k * eps * math.log2(eps)
    return BoundReport(
        n_pairs=n_pairs,
        epsilon=eps,
        threshold=t,
        exact_count=exact,
        l1=l1,
        l2=l2,
        log2_exact=log2_int(exact),
        log2_l1=log2_int(l1),
        log2_l2=log2_int(l2),
        log2_l3=log2_l3,
        log2_l4=log2_l4,
        log2_l5=log2_l5,
        mu=mu,
        implied_k=implied_k,
        margin_vs_full_space=n_pairs - log2_l5,
    )


def eve_info_upper(n_pairs: int, eps: float, theta: float = 0.0) -> float:
    """Upper bound in bits on Eve's accessible information per session.

    log2 of the exact atypical dimension plus an N*theta allowance for
    residual weight outside it.  Dominates the Holevo quantity of any
    coherent attack supported on the atypical subspace at matching (N, eps).
    """
    _check_regime(n_pairs, eps)
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    t = atypical_threshold(n_pairs, eps)
    return log2_int(atypical_count_exact(n_pairs, t)) + n_pairs * theta


def secrecy_lower_bound(eps: float, kprime: float = 10.0) -> float:
    """Secrecy-rate lower bound max(0, 1 + k' eps log2 eps), eps in [0, 1/4)."""
    eps = float(eps)
    if not 0.0 <= eps < 0.25:
        raise RegimeError(f"epsilon {eps} outside the validity regime [0, 1/4)")
    if kprime <= 0.0:
        raise ValueError("kprime must be positive")
    if eps == 0.0:
        return 1.0
    return max(0.0, 1.0 + kprime * eps * math.log2(eps))


@dataclass(frozen=True)
class MixtureReport:
    """Observed vs expected error rate for a two-rate tensor mixture."""

    rate_x: float
    rate_y: float
    weight_x: float
    weight_y: float
    n_samples: int
    observed_rate: float
    expected_rate: float
    three_sigma: float
    bound_at_mixture: float
    mixed_bound_value: float

    @property
    def within_three_sigma(self) -> bool:
        return abs(self.observed_rate - self.expected_rate) <= self.three_sigma


def mixture_error_rate(
    rate_x: float,
    rate_y: float,
    weight_x: float,
    weight_y: float,
    n_samples: int,
    rng: np.random.Generator,
    kprime: float = 10.0,
) -> MixtureReport:
    """Simulate a block mixture of two channel strategies and report rates.

    A fraction ``weight_x`` of positions runs at error rate ``rate_x`` and
    the rest at ``rate_y`` (a tensor product of the two strategies).  Each
    block is realized as a Werner channel measured along random common
    axes, so the observed rate checks a*x + b*y against honest sampling.
    The report also evaluates the secrecy bound at the mixed rate and the
    weight-mixed bound values, for convexity inspection (a mixture never
    hides errors: the rate is exactly linear, while the bound values are
    reported without asserting convexity).
    """
    if abs(weight_x + weight_y - 1.0) > 1e-9 or weight_x < 0.0 or weight_y < 0.0:
        raise ValueError("weights must be nonnegative and sum to 1")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    from .qstate import random_axes  # local import to keep module deps flat

    n_x = int(round(weight_x * n_samples))
    blocks = [(rate_x, n_x), (rate_y, n_samples - n_x)]
    errors = 0
    for rate, count in blocks:
        if count == 0:
            continue
        f = channel.fidelity_from_epsilon(rate)
        labels = channel.sample_pair_labels(f, count, rng)
        axes = random_axes(count, rng)
        a, b = channel.sample_common_axis_outcomes(labels, axes, rng)
        errors += int((a == b).sum())
    expected = (n_x * rate_x + (n_samples - n_x) * rate_y) / n_samples
    sigma = math.sqrt(max(expected * (1.0 - expected), 1e-12) / n_samples)

    def bound(r: float) -> float:
        try:
            return secrecy_lower_bound(r, kprime)
        except RegimeError:
            return 0.0

    return MixtureReport(
        rate_x=rate_x,
        rate_y=rate_y,
        weight_x=weight_x,
        weight_y=weight_y,
        n_samples=n_samples,
        observed_rate=errors / n_samples,
        expected_rate=expected,
        three_sigma=3.0 * sigma,
        bound_at_mixture=bound(expected),
        mixed_bound_value=weight_x * bound(rate_x) + weight_y * bound(rate_y),
    )
