"""LLR translation tables phi / phi_Delta and the scalar uniform quantizer.

The variable node works in a computational domain: each incoming message t is
translated to (an integer scaling of) its log-likelihood ratio
L(t|b) = log p(t|b=0)/p(t|b=1), the translations are summed, and the sum is
compressed back to a w-bit message by a uniform quantizer parameterized by a
right shift r.  Natural-log LLR units are used throughout; mutual information
is reported in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist import JointBitDist, SignedAlphabet, SignedGrid
from .errors import ValidationError

PHI_MAX = 50.0


def build_phi(joint: JointBitDist, phi_max: float = PHI_MAX) -> np.ndarray:
    """Per-message LLR table phi(t) = log(p(t|b=0)/p(t|b=1)), aligned with
    ``joint.support.values``.

    Positive messages are computed and mirrored, so phi(-t) = -phi(t) holds
    exactly.  A zero conditional probability saturates the entry at
    +/- ``phi_max``; a message carrying no mass at all for either bit is
    treated as maximally reliable (its translation is never exercised).
    """
    support = joint.support
    if not isinstance(support, (SignedAlphabet, SignedGrid)):
        raise ValidationError("phi tables require a sign-magnitude support")
    if joint.symmetry_error() > 1e-9:
        raise ValidationError("joint must be symmetric to build a phi table")
    m = support.levels
    p_b = joint.bit_marginal()
    if np.any(p_b <= 0):
        raise ValidationError("degenerate bit marginal")
    cond0 = joint.mass[0] / p_b[0]
    cond1 = joint.mass[1] / p_b[1]
    c0 = cond0[m:]
    c1 = cond1[m:]
    phi_pos = np.full(m, phi_max)
    both = (c0 > 0) & (c1 > 0)
    phi_pos[both] = np.log(c0[both] / c1[both])
    phi_pos[(c0 == 0) & (c1 > 0)] = -phi_max
    phi_pos = np.clip(phi_pos, -phi_max, phi_max)
    return np.concatenate([-phi_pos[::-1], phi_pos])


def scale_phi(phi: np.ndarray, delta: float, w_phi: int) -> np.ndarray:
    """Integer-scaled translation phi_Delta(t) = sgn(phi) * min(floor(|phi|/Delta + 1/2), 2^(w_phi-1) - 1)."""
    if delta <= 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    if not 4 <= w_phi <= 16:
        raise ValidationError(f"w_phi must be in 4..16, got {w_phi}")
    phi = np.asarray(phi, dtype=np.float64)
    clip = (1 << (w_phi - 1)) - 1
    mag = np.minimum(np.floor(np.abs(phi) / delta + 0.5), clip)
    return (np.sign(phi) * mag).astype(np.int64)


@dataclass(frozen=True)
class TranslationTable:
    """Designed phi / phi_Delta pair for one message alphabet.

    ``phi`` and ``phi_delta`` are aligned with ``alphabet.values`` and odd by
    construction.  ``saturated`` flags that some conditional probability was
    zero and the corresponding phi entry sits at the +/- PHI_MAX rail.
    """

    alphabet: SignedAlphabet
    phi: np.ndarray
    phi_delta: np.ndarray
    delta: float
    w_phi: int
    saturated: bool = False

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=np.float64)
        pd = np.asarray(self.phi_delta, dtype=np.int64)
        n = self.alphabet.size
        if phi.shape != (n,) or pd.shape != (n,):
            raise ValidationError("table length does not match alphabet")
        if np.max(np.abs(phi + phi[::-1])) != 0.0:
            raise ValidationError("phi table is not odd")
        if np.any(pd + pd[::-1] != 0):
            raise ValidationError("phi_delta table is not odd")
        if np.max(np.abs(pd)) > (1 << (self.w_phi - 1)) - 1:
            raise ValidationError("phi_delta exceeds clipping bound")
        phi.setflags(write=False)
        pd.setflags(write=False)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "phi_delta", pd)

    @classmethod
    def design(cls, joint: JointBitDist, delta: float, w_phi: int,
               check_monotone: bool = True) -> "TranslationTable":
        """Build the table for a symmetric joint; asserts monotone reliability.

        phi must be nondecreasing over positive messages (plateaus from
        rounding or clipping are fine); designed tables violating this
        indicate an inconsistent input density.
        """
        if not isinstance(joint.support, SignedAlphabet):
            raise ValidationError("translation tables require a SignedAlphabet")
        phi = build_phi(joint)
        m = joint.support.levels
        saturated = bool(np.max(np.abs(phi)) >= PHI_MAX)
        if check_monotone and np.any(np.diff(phi[m:]) < 0):
            raise ValidationError("phi is not nondecreasing on positive messages")
        return cls(joint.support, phi, scale_phi(phi, delta, w_phi),
                   float(delta), int(w_phi), saturated)

    def lookup_phi_delta(self, t: int) -> int:
        return int(self.phi_delta[self.alphabet.index(t)])

    def lookup_phi(self, t: int) -> float:
        return float(self.phi[self.alphabet.index(t)])

    def dense_phi_delta(self) -> np.ndarray:
        """phi_Delta indexed by t + levels for t in [-levels, +levels] (0 maps to 0).

        Convenient for table-driven decoding kernels.
        """
        m = self.alphabet.levels
        dense = np.zeros(2 * m + 1, dtype=np.int64)
        dense[:m] = self.phi_delta[:m]
        dense[m + 1:] = self.phi_delta[m:]
        return dense


@dataclass(frozen=True)
class UniformQuantizerParams:
    """Uniform output quantizer: right shift r then clip to a w-bit alphabet."""

    shift: int
    width_bits: int
    tie_rule: str = "deterministic_plus"

    def __post_init__(self):
        if self.shift < 0:
            raise ValidationError(f"shift must be >= 0, got {self.shift}")
        if self.width_bits < 2:
            raise ValidationError(f"output width must be >= 2, got {self.width_bits}")
        if self.tie_rule not in ("deterministic_plus", "random"):
            raise ValidationError(f"unknown tie rule {self.tie_rule!r}")


def uniform_quantize(y: int, params: UniformQuantizerParams, rng=None) -> int:
    """Q(y) = sgn(y) * min(floor(|y| / 2^r) + 1, 2^(w-1)); y = 0 per tie rule."""
    y = int(y)
    if y == 0:
        if params.tie_rule == "deterministic_plus":
            return 1
        if rng is None:
            raise ValidationError("random tie rule needs caller-supplied randomness")
        return 1 if int(rng.integers(2)) else -1
    mag = min((abs(y) >> params.shift) + 1, 1 << (params.width_bits - 1))
    return mag if y > 0 else -mag
