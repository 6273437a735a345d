"""BPSK-over-AWGN modeling and the MI-maximizing symmetric channel quantizer.

The receiver sees y = x + n with x = +1 for bit 0 (so positive LLR favors
bit 0) and n ~ N(0, sigma^2).  The channel LLR is 2y/sigma^2.  The quantizer
applies sign plus ascending magnitude thresholds to the LLR and is designed
by dynamic programming over a fine symmetric LLR grid, which is exact on the
grid: no symmetric threshold quantizer representable on the grid preserves
more mutual information.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .dist import JointBitDist, SignedAlphabet, SignedGrid, _stable_sum, mutual_information
from .errors import ConfigurationError, ValidationError

DEFAULT_BINS = 4000


@dataclass(frozen=True)
class ChannelModel:
    """AWGN channel operating point: E_b/N_0 in dB at code rate R.

    With unit-energy BPSK, sigma^2 = 1 / (2 * R * 10^(ebno_db/10)).
    """

    ebno_db: float
    rate: float

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise ValidationError(f"rate must be in (0, 1], got {self.rate}")

    @property
    def sigma(self) -> float:
        return float(1.0 / np.sqrt(2.0 * self.rate * 10.0 ** (self.ebno_db / 10.0)))

    @property
    def llr_scale(self) -> float:
        """LLR(y) = llr_scale * y."""
        return 2.0 / self.sigma**2


def default_llr_clip(model: ChannelModel) -> float:
    """Grid half-range covering the LLR mean plus several standard deviations."""
    return 6.0 / model.sigma + 8.0


def fine_llr_density(model: ChannelModel, bins: int = DEFAULT_BINS,
                     llr_clip: float | None = None) -> JointBitDist:
    """Joint p(b, cell) of the channel LLR on a uniform symmetric grid.

    The grid spans [-llr_clip, +llr_clip] with ``bins`` cells (bins even);
    tail mass beyond the clip range is folded into the edge cells.  Cells are
    indexed as a zero-free signed grid so that cell -t mirrors cell +t, and
    the bit-1 row is the exact mirror of the bit-0 row by construction.
    """
    if bins < 64 or bins % 2:
        raise ValidationError(f"bins must be even and >= 64, got {bins}")
    if llr_clip is None:
        llr_clip = default_llr_clip(model)
    if llr_clip <= 0:
        raise ValidationError(f"llr_clip must be positive, got {llr_clip}")
    sigma = model.sigma
    # Conditioned on bit 0, LLR ~ N(2/sigma^2, 4/sigma^2).
    mu = 2.0 / sigma**2
    sd = 2.0 / sigma
    edges = np.linspace(-llr_clip, llr_clip, bins + 1)
    z = (edges - mu) / sd
    cdf = ndtr(z)
    cdf[0] = 0.0
    cdf[-1] = 1.0
    p0 = 0.5 * np.diff(cdf)
    mass = np.vstack([p0, p0[::-1]])
    return JointBitDist(SignedGrid(bins // 2), mass, normalize=True)


def grid_cell_width(joint: JointBitDist, llr_clip: float) -> float:
    return 2.0 * llr_clip / joint.support.size


@dataclass(frozen=True)
class ChannelQuantizer:
    """Symmetric LLR threshold quantizer with its induced joint p(b, t^ch).

    ``thresholds`` are the 2^(w_ch-1) - 1 ascending positive magnitude
    boundaries in LLR units; the sign bit is implicit.  The quantizer output
    for LLR value L is sign(L) * (1 + #{thresholds < |L|}).
    """

    width_bits: int
    thresholds: np.ndarray
    joint: JointBitDist = field(repr=False)

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=np.float64)
        if t.shape != (2 ** (self.width_bits - 1) - 1,):
            raise ValidationError("threshold count does not match width")
        if t.size and np.any(np.diff(t) <= 0):
            raise ValidationError("thresholds must be strictly ascending")
        t.setflags(write=False)
        object.__setattr__(self, "thresholds", t)

    @property
    def alphabet(self) -> SignedAlphabet:
        return SignedAlphabet(self.width_bits)

    def quantize_llr(self, llr: np.ndarray) -> np.ndarray:
        """Map LLR values to alphabet messages; exact zeros map to +1."""
        llr = np.asarray(llr, dtype=np.float64)
        level = 1 + np.searchsorted(self.thresholds, np.abs(llr), side="right")
        sign = np.where(llr < 0, -1, 1)
        return (sign * level).astype(np.int64)


def _level_mi_terms(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-group MI contribution of a positive level with joint mass (a, b).

    a = p(b=0, level), b = p(b=1, level); the mirrored negative level
    contributes the same amount, so the total MI is twice the sum of these.
    """
    p = a + b
    out = np.zeros_like(p)
    pos = a > 0
    out[pos] += a[pos] * np.log2(2.0 * a[pos] / p[pos])
    pos = b > 0
    out[pos] += b[pos] * np.log2(2.0 * b[pos] / p[pos])
    return out


def design_channel_quantizer(fine: JointBitDist, w_ch: int,
                             llr_clip: float | None = None) -> ChannelQuantizer:
    """MI-optimal symmetric threshold quantizer of a fine LLR density.

    Dynamic programming over the magnitude half-axis of the grid finds the
    contiguous partition into 2^(w_ch-1) groups maximizing I(B; T^ch); by the
    enforced symmetry this is globally optimal among symmetric threshold
    quantizers on the grid.  Thresholds are reported in LLR units when
    ``llr_clip`` is given (the grid's half-range), otherwise in grid cells.
    """
    if not isinstance(fine.support, (SignedGrid, SignedAlphabet)):
        raise ValidationError("fine density must live on a signed grid")
    if not 1 <= w_ch <= 6:
        raise ValidationError(f"w_ch must be in 1..6, got {w_ch}")
    if fine.symmetry_error() > 1e-9:
        raise ValidationError("fine density must be symmetric")
    m = fine.support.levels
    k_levels = 2 ** (w_ch - 1)
    if k_levels > m:
        raise ConfigurationError(
            f"grid with {m} magnitude cells cannot host {k_levels} levels"
        )
    # Cumulative mass over positive cells; group (i, j] has mass A[j]-A[i].
    pos0 = fine.mass[0][m:]
    pos1 = fine.mass[1][m:]
    A = np.concatenate([[0.0], np.cumsum(pos0)])
    B = np.concatenate([[0.0], np.cumsum(pos1)])

    # D[j] = best objective for partitioning cells (0, j] into k groups.
    neg_inf = -np.inf
    D = np.full(m + 1, neg_inf)
    D[1:] = _level_mi_terms(A[1:], B[1:])
    back = np.zeros((k_levels, m + 1), dtype=np.int64)
    for k in range(1, k_levels):
        D_new = np.full(m + 1, neg_inf)
        for j in range(k + 1, m + 1):
            i = np.arange(k, j)
            cand = D[i] + _level_mi_terms(A[j] - A[i], B[j] - B[i])
            best = int(np.argmax(cand))
            D_new[j] = cand[best]
            back[k, j] = i[best]
        D = D_new

    # Recover boundaries (in cells): 0 = c_0 < c_1 < ... < c_K = m.
    bounds = [m]
    j = m
    for k in range(k_levels - 1, 0, -1):
        j = int(back[k, j])
        bounds.append(j)
    bounds.append(0)
    bounds = np.array(bounds[::-1])

    # Induced joint over the signed alphabet.
    q0_pos = A[bounds[1:]] - A[bounds[:-1]]
    q1_pos = B[bounds[1:]] - B[bounds[:-1]]
    mass = np.zeros((2, 2 * k_levels))
    mass[0, k_levels:] = q0_pos
    mass[1, k_levels:] = q1_pos
    mass[0, :k_levels] = q1_pos[::-1]
    mass[1, :k_levels] = q0_pos[::-1]
    joint = JointBitDist(SignedAlphabet(w_ch), mass, normalize=True)

    cell = 1.0 if llr_clip is None else llr_clip / m
    thresholds = bounds[1:-1].astype(np.float64) * cell
    return ChannelQuantizer(w_ch, thresholds, joint)


def requantize(fine: JointBitDist, quantizer: ChannelQuantizer,
               llr_clip: float) -> JointBitDist:
    """Re-bin a fine grid density through quantizer thresholds (by cell midpoints)."""
    m = fine.support.levels
    cell = llr_clip / m
    mids = (np.arange(1, m + 1) - 0.5) * cell
    level = 1 + np.searchsorted(quantizer.thresholds, mids, side="right")
    k_levels = quantizer.alphabet.levels
    mass = np.zeros((2, 2 * k_levels))
    for b in (0, 1):
        pos = np.bincount(level - 1, weights=fine.mass[b][m:], minlength=k_levels)
        neg = np.bincount(level - 1, weights=fine.mass[b][:m][::-1], minlength=k_levels)
        mass[b, k_levels:] = pos
        mass[b, :k_levels] = neg[::-1]
    return JointBitDist(quantizer.alphabet, mass, normalize=True)


def bi_awgn_capacity(sigma: float) -> float:
    """Binary-input AWGN capacity in bits via Gauss-Hermite-free quadrature.

    Independent reference for the fine-grid mutual information: evaluates
    1 - E_y[log2(1 + exp(-2y/sigma^2))] with y ~ N(1, sigma^2) by adaptive
    quadrature.
    """
    from scipy.integrate import quad

    def integrand(y):
        llr = 2.0 * y / sigma**2
        return (
            np.exp(-((y - 1.0) ** 2) / (2 * sigma**2))
            / np.sqrt(2 * np.pi * sigma**2)
            * np.logaddexp(0.0, -llr)
            / np.log(2.0)
        )

    lo = 1.0 - 12.0 * sigma
    hi = 1.0 + 12.0 * sigma
    loss, _ = quad(integrand, lo, hi, limit=400)
    return 1.0 - loss
