"""Classical distillation of sifted keys.

The pipeline is: estimate the error rate from the public test sample,
reconcile Bob's key against Alice's by iterated block-parity bisection
(counting every exchanged parity bit as leaked), then compress with a
seeded Toeplitz hash to the length the secrecy-rate bound permits after
subtracting the leakage:

    final length = floor(n_raw * max(0, 1 + k' eps log2 eps)) - leaked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .bounds import secrecy_lower_bound
from .rng import stream


@dataclass(frozen=True)
class ErrorRateEstimate:
    """Point estimate of the error rate with a 3-sigma half width."""

    point: float
    half_width: float
    errors: int
    sample_size: int


def estimate_error_rate(test_outcomes) -> ErrorRateEstimate:
    """Estimate the error rate from a boolean error sequence.

    The half width is 3 * sqrt(p(1-p)/m) around the observed frequency.
    """
    outcomes = np.asarray(test_outcomes, dtype=bool)
    m = outcomes.size
    if m < 1:
        raise ValueError("cannot estimate an error rate from an empty sample")
    errors = int(outcomes.sum())
    p = errors / m
    return ErrorRateEstimate(
        point=p,
        half_width=3.0 * math.sqrt(p * (1.0 - p) / m),
        errors=errors,
        sample_size=m,
    )


def reconcile(
    key_a,
    key_b,
    rng: np.random.Generator,
    qber_hint: float | None = None,
    max_passes: int = 64,
) -> tuple[np.ndarray, int]:
    """Correct ``key_b`` toward ``key_a`` by shuffled block-parity bisection.

    Each pass permutes both keys the same way, compares block parities,
    and binary-searches every odd block down to a single differing bit,
    which is flipped (so disagreement never increases).  Every compared
    parity counts one leaked bit.  The block size doubles between passes
    but stays capped well below the key length, so an even number of
    leftover errors cannot hide inside a single block; the loop stops
    only after four consecutive passes find no mismatched block.
    Returns (corrected key, leaked bits).
    """
    a = np.asarray(key_a, dtype=np.uint8).copy()
    b = np.asarray(key_b, dtype=np.uint8).copy()
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("keys must be one-dimensional arrays of equal length")
    n = a.size
    if n == 0:
        return b, 0
    q = 0.05 if qber_hint is None else max(float(qber_hint), 0.0)
    block = n if q <= 0.0 else min(n, max(2, math.ceil(0.73 / q)))
    block_cap = max(block, n // 16)
    leaked = 0
    clean = 0
    for _ in range(max_passes):
        perm = rng.permutation(n)
        pa, pb = a[perm], b[perm]
        starts = np.arange(0, n, block)
        par_a = np.add.reduceat(pa, starts) & 1
        par_b = np.add.reduceat(pb, starts) & 1
        leaked += starts.size
        odd_blocks = np.flatnonzero(par_a != par_b)
        if odd_blocks.size == 0:
            clean += 1
            if clean >= 4:
                break
        else:
            clean = 0
            for blk in odd_blocks:
                lo = int(starts[blk])
                hi = n if blk + 1 == starts.size else int(starts[blk + 1])
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    leaked += 1
                    if (int(pa[lo:mid].sum()) & 1) != (int(pb[lo:mid].sum()) & 1):
                        hi = mid
                    else:
                        lo = mid
                pb[lo] ^= 1
                b[perm[lo]] ^= 1
        block = min(block_cap, 2 * block)
    return b, leaked


def privacy_amplify(key_bits, output_length: int, hash_seed: int) -> np.ndarray:
    """Compress a bit array with a seeded binary Toeplitz matrix.

    The matrix is T[i, j] = d[n - 1 + i - j] for a seed-derived diagonal
    bit string d, applied over GF(2); the map is linear and fully
    determined by (len(key), output_length, hash_seed).
    """
    key = np.asarray(key_bits, dtype=np.uint8)
    if key.ndim != 1:
        raise ValueError("key must be a one-dimensional bit array")
    n = key.size
    if output_length < 0:
        raise ValueError("output length must be nonnegative")
    if output_length > n:
        raise ValueError(f"cannot stretch {n} bits to {output_length}")
    if output_length == 0:
        return np.zeros(0, dtype=np.uint8)
    diagonal = stream(hash_seed).integers(0, 2, size=n + output_length - 1, dtype=np.uint8)
    # T @ key over GF(2) is a slice of the linear convolution of d with key
    if n * output_length <= 1 << 22:
        conv = np.convolve(diagonal.astype(np.int64), key.astype(np.int64))
    else:
        conv = fftconvolve(diagonal.astype(float), key.astype(float))
        rounded = np.rint(conv)
        if np.abs(conv - rounded).max() > 1e-6:
            raise RuntimeError("convolution lost integer precision")
        conv = rounded.astype(np.int64)
    return (conv[n - 1 : n - 1 + output_length] & 1).astype(np.uint8)


def final_key_length(n_raw: int, eps: float, leaked_bits: int, kprime: float = 10.0) -> int:
    """Distillable length of an n_raw-bit key at error rate eps.

    Applies the secrecy-rate lower bound and subtracts reconciliation
    leakage, clamping at zero.  Valid in the bound's regime eps < 1/4.
    """
    if n_raw < 0 or leaked_bits < 0:
        raise ValueError("lengths must be nonnegative")
    rate = secrecy_lower_bound(eps, kprime)
    return max(0, math.floor(n_raw * rate) - leaked_bits)


def bits_to_hex(bits) -> str:
    """Pack a bit array (most significant bit first) into lowercase hex."""
    arr = np.asarray(bits, dtype=np.uint8)
    if arr.size == 0:
        return ""
    return np.packbits(arr).tobytes().hex()


@dataclass(frozen=True)
class DistillationResult:
    """Final keys and accounting from one reconciliation + amplification run."""

    key_a_hex: str
    key_b_hex: str
    final_length: int
    leaked_bits: int
    reconciled_equal: bool

    @property
    def keys_equal(self) -> bool:
        return self.key_a_hex == self.key_b_hex


def distill_key(
    key_a,
    key_b,
    qber_estimate: float,
    rng: np.random.Generator,
    kprime: float = 10.0,
) -> DistillationResult:
    """Reconcile, measure leakage, and privacy-amplify a sifted key pair."""
    a = np.asarray(key_a, dtype=np.uint8)
    corrected, leaked = reconcile(a, key_b, rng, qber_hint=qber_estimate)
    n_final = final_key_length(a.size, qber_estimate, leaked, kprime)
    hash_seed = int(rng.integers(0, 2**63))
    final_a = privacy_amplify(a, n_final, hash_seed)
    final_b = privacy_amplify(corrected, n_final, hash_seed)
    return DistillationResult(
        key_a_hex=bits_to_hex(final_a),
        key_b_hex=bits_to_hex(final_b),
        final_length=n_final,
        leaked_bits=leaked,
        reconciled_equal=bool(np.array_equal(a, corrected)),
    )
