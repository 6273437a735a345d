"""Finite signed alphabets, joint bit/message distributions, information measures.

All design-phase computations share one currency: a joint probability table
p(bit, message) over either a zero-free sign-magnitude alphabet or a
contiguous integer interval (for internal adder sums).  Probabilities are
double precision; entries below ``FLUSH_EPS`` are flushed to zero to avoid
denormal slowdown once density evolution concentrates the mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

MASS_TOL = 1e-12
FLUSH_EPS = 1e-300
_LOG2 = np.log(2.0)


@dataclass(frozen=True)
class SignedAlphabet:
    """Sign-magnitude alphabet of a w-bit message: {-2^(w-1),..,-1,+1,..,+2^(w-1)}.

    Zero is excluded and the cardinality is exactly 2^w.
    """

    width_bits: int

    def __post_init__(self):
        if self.width_bits < 1:
            raise ValidationError(f"width_bits must be >= 1, got {self.width_bits}")

    @property
    def levels(self) -> int:
        """Number of magnitude levels per sign, 2^(w-1)."""
        return 1 << (self.width_bits - 1)

    @property
    def size(self) -> int:
        return 2 * self.levels

    @property
    def values(self) -> np.ndarray:
        """All alphabet values in ascending order."""
        m = self.levels
        return np.concatenate([np.arange(-m, 0), np.arange(1, m + 1)])

    @property
    def negation_closed(self) -> bool:
        return True

    def index(self, t: int) -> int:
        """Position of value ``t`` in :attr:`values`."""
        m = self.levels
        if not (isinstance(t, (int, np.integer)) and 1 <= abs(int(t)) <= m):
            raise ValidationError(f"{t} is not in the {self.width_bits}-bit alphabet")
        t = int(t)
        return t + m if t < 0 else t + m - 1

    def __contains__(self, t) -> bool:
        try:
            self.index(t)
        except ValidationError:
            return False
        return True


@dataclass(frozen=True)
class SignedGrid:
    """Zero-free symmetric support {-levels,..,-1,+1,..,+levels} of arbitrary size.

    Used for fine discretization grids whose cardinality is not a power of two
    (e.g. the channel LLR grid).  Mirrors :class:`SignedAlphabet` structurally.
    """

    levels: int

    def __post_init__(self):
        if self.levels < 1:
            raise ValidationError(f"levels must be >= 1, got {self.levels}")

    @property
    def size(self) -> int:
        return 2 * self.levels

    @property
    def values(self) -> np.ndarray:
        m = self.levels
        return np.concatenate([np.arange(-m, 0), np.arange(1, m + 1)])

    @property
    def negation_closed(self) -> bool:
        return True

    def index(self, t: int) -> int:
        m = self.levels
        if not 1 <= abs(int(t)) <= m:
            raise ValidationError(f"{t} is not in a {m}-level signed grid")
        t = int(t)
        return t + m if t < 0 else t + m - 1


@dataclass(frozen=True)
class IntInterval:
    """Contiguous integer support [lo, hi], used for translation-table sums."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise ValidationError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    @property
    def values(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    @property
    def negation_closed(self) -> bool:
        return self.lo == -self.hi

    def index(self, t: int) -> int:
        if not self.lo <= t <= self.hi:
            raise ValidationError(f"{t} outside interval [{self.lo}, {self.hi}]")
        return int(t) - self.lo


Support = SignedAlphabet | SignedGrid | IntInterval


class JointBitDist:
    """Immutable joint probability table p(b, t) for b in {0,1}, t in ``support``.

    ``mass`` has shape (2, support.size); row 0 is bit 0.  Entries must be
    nonnegative and sum to one within ``MASS_TOL`` unless ``normalize`` is set,
    in which case the table is rescaled first.
    """

    __slots__ = ("support", "mass")

    def __init__(self, support: Support, mass, *, normalize: bool = False):
        mass = np.array(mass, dtype=np.float64)
        if mass.shape != (2, support.size):
            raise ValidationError(
                f"mass shape {mass.shape} does not match (2, {support.size})"
            )
        if np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ValidationError("mass entries must be finite and nonnegative")
        mass[mass < FLUSH_EPS] = 0.0
        total = _stable_sum(mass.ravel())
        if normalize:
            if total <= 0:
                raise ValidationError("cannot normalize zero mass")
            mass /= total
        elif abs(total - 1.0) > MASS_TOL:
            raise ValidationError(f"mass sums to {total!r}, expected 1 within {MASS_TOL}")
        mass.setflags(write=False)
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mass", mass)

    def __setattr__(self, name, value):
        raise AttributeError("JointBitDist is immutable")

    @property
    def total_mass(self) -> float:
        return _stable_sum(self.mass.ravel())

    def bit_marginal(self) -> np.ndarray:
        """p(b), order-canonical summation."""
        return np.array([_stable_sum(self.mass[0]), _stable_sum(self.mass[1])])

    def message_marginal(self) -> np.ndarray:
        """p(t); the two-term sum is exact regardless of axis orientation."""
        return self.mass[0] + self.mass[1]

    def conditional(self, bit: int) -> np.ndarray:
        """p(t | b = bit), renormalized."""
        row = self.mass[bit]
        total = _stable_sum(row)
        if total <= 0:
            raise ValidationError(f"p(b={bit}) is zero; conditional undefined")
        return row / total

    def mirrored(self) -> "JointBitDist":
        """The bit-flipped, message-negated relabeling p(1-b, -t)."""
        if not self.support.negation_closed:
            raise ValidationError("support is not closed under negation")
        return JointBitDist(self.support, self.mass[::-1, ::-1])

    def symmetry_error(self) -> float:
        """max_t |p(0, t) - p(1, -t)| over any negation-closed support."""
        if not self.support.negation_closed:
            raise ValidationError("support is not closed under negation")
        return float(np.max(np.abs(self.mass[0] - self.mass[1][::-1])))

    def __repr__(self):
        return f"JointBitDist(support={self.support!r}, mass_sum={self.total_mass:.6f})"


def _stable_sum(a: np.ndarray) -> float:
    """Sum in ascending order so the result is invariant under axis reversal."""
    return float(np.sum(np.sort(a, kind="stable")))


def mutual_information(joint: JointBitDist) -> float:
    """Mutual information I(B;T) of a joint table, in bits.

    Equals the p(t)-weighted sum of Kullback-Leibler divergences
    D_KL(p(b|t) || p(b)).  The 0*log(0) convention is 0.  Summation runs in a
    canonical order, so simultaneous bit-flip and message negation leave the
    result bit-for-bit unchanged.
    """
    total = joint.total_mass
    if abs(total - 1.0) > MASS_TOL:
        raise ValidationError(f"joint mass {total!r} is not normalized")
    p_b = joint.bit_marginal()
    p_t = joint.message_marginal()
    mass = joint.mass
    denom = p_b[:, None] * p_t[None, :]
    terms = np.zeros_like(mass)
    pos = mass > 0
    terms[pos] = mass[pos] * (np.log(mass[pos] / denom[pos]) / _LOG2)
    mi = _stable_sum(terms.ravel())
    if mi < 0:
        if mi < -1e-9:
            raise ValidationError(f"mutual information {mi} < 0; inconsistent table")
        mi = 0.0
    return min(mi, 1.0)


def kl_divergence(post_dist, prior) -> float:
    """D_KL(post || prior) over a binary outcome, in bits.

    Both arguments are probability pairs.  Raises if the posterior puts mass
    on an outcome of zero prior probability.
    """
    p = np.asarray(post_dist, dtype=np.float64)
    q = np.asarray(prior, dtype=np.float64)
    if p.shape != (2,) or q.shape != (2,):
        raise ValidationError("expected probability pairs over {0, 1}")
    for name, v in (("posterior", p), ("prior", q)):
        if np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
            raise ValidationError(f"{name} {v} is not a normalized pair")
    if np.any((q == 0) & (p > 0)):
        raise ValidationError("posterior mass on a zero-prior outcome")
    sel = p > 0
    return float(np.sum(p[sel] * np.log(p[sel] / q[sel]) / _LOG2))


def check_symmetry(joint: JointBitDist, tol: float = MASS_TOL) -> bool:
    """True iff p(0, t) = p(1, -t) for all t, within ``tol``.

    Only defined on sign-magnitude supports where every value has a +/-
    partner; integer intervals are rejected.
    """
    if isinstance(joint.support, IntInterval):
        raise ValidationError("symmetry check requires a sign-magnitude support")
    return joint.symmetry_error() <= tol
