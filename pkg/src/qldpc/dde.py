"""Discrete density evolution and check-node-aware quantizer optimization.

The design phase tracks joint bit/message distributions through one decoding
iteration: translate-and-sum at the variable node, uniform quantization, and
the min-approximation check node.  A check-node-aware design picks the
quantizer parameters (delta, r) to maximize the mutual information preserved
*after* the check node, I(X;T^c); the conventional (unaware) design maximizes
I(B;T^v) before it.  Both are exhaustive scans over a (delta, r) grid.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelQuantizer
from .dist import (
    FLUSH_EPS,
    IntInterval,
    JointBitDist,
    SignedAlphabet,
    mutual_information,
)
from .errors import ConfigurationError, DesignError, ValidationError
from .translate import TranslationTable, build_phi, scale_phi

MODES = ("aware", "unaware")


@dataclass(frozen=True)
class NodeDegrees:
    """Regular code degrees: every variable node d_v, every check node d_c."""

    d_v: int
    d_c: int

    def __post_init__(self):
        if self.d_v < 2:
            raise ValidationError(f"d_v must be >= 2, got {self.d_v}")
        if self.d_c < 3:
            raise ValidationError(f"d_c must be >= 3, got {self.d_c}")


@dataclass(frozen=True)
class GridSpec:
    """Search grid over the quantizer step delta and right shift r."""

    delta_values: np.ndarray
    r_values: tuple
    w_phi: int = 8
    width_bits: int = 2

    def __post_init__(self):
        dv = np.asarray(self.delta_values, dtype=np.float64)
        if dv.size == 0 or len(self.r_values) == 0:
            raise ConfigurationError("grid must contain at least one (delta, r) point")
        if np.any(dv <= 0) or np.any(np.diff(dv) <= 0):
            raise ConfigurationError("delta_values must be positive and strictly ascending")
        rv = tuple(int(r) for r in self.r_values)
        if any(r < 0 for r in rv):
            raise ConfigurationError("r_values must be >= 0")
        if self.width_bits < 2:
            raise ConfigurationError("message width must be >= 2 bits")
        dv.setflags(write=False)
        object.__setattr__(self, "delta_values", dv)
        object.__setattr__(self, "r_values", rv)

    @classmethod
    def default(cls, width_bits: int, w_phi: int = 8,
                delta_points: int = 256, r_max: int = 8) -> "GridSpec":
        deltas = np.logspace(-12, 0, delta_points, base=2.0)
        return cls(deltas, tuple(range(r_max + 1)), w_phi, width_bits)


@dataclass(frozen=True)
class IterationDesign:
    """One designed variable-node update: (delta, r) plus translation tables."""

    iteration: int
    delta: float
    r: int
    width_bits: int
    channel_table: TranslationTable
    check_table: TranslationTable | None
    mi_vtc: float
    mi_ctv: float
    mi_app: float

    def __post_init__(self):
        if self.delta <= 0 or self.r < 0:
            raise ValidationError("invalid (delta, r)")
        for name in ("mi_vtc", "mi_ctv", "mi_app"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v} outside [0, 1]")


@dataclass(frozen=True)
class EvolutionTrace:
    """Per-iteration designs for a full decoder, plus the starting channel joint."""

    channel_joint: JointBitDist = field(repr=False)
    iterations: tuple

    def __post_init__(self):
        idx = [d.iteration for d in self.iterations]
        if idx != list(range(1, len(idx) + 1)):
            raise ValidationError(f"iteration indices not contiguous from 1: {idx}")
        object.__setattr__(self, "iterations", tuple(self.iterations))

    CSV_HEADER = "iteration,delta,r,mi_vtc,mi_ctv,mi_app"

    def csv_lines(self) -> list[str]:
        lines = [self.CSV_HEADER]
        for d in self.iterations:
            lines.append(
                f"{d.iteration},{d.delta!r},{d.r},{d.mi_vtc!r},{d.mi_ctv!r},{d.mi_app!r}"
            )
        return lines

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.csv_lines()) + "\n")


def _required_bits(max_abs: int) -> int:
    """Two's-complement width holding every value in [-max_abs, +max_abs]."""
    bits = 1
    while (1 << (bits - 1)) - 1 < max_abs:
        bits += 1
    return bits


def vn_sum_density(ch_joint: JointBitDist, cn_joint: JointBitDist | None,
                   d_v: int, ch_table: TranslationTable,
                   cn_table: TranslationTable | None,
                   accumulator_bits: int | None = None) -> JointBitDist:
    """Density of the variable-node adder output y^v = phi_ch(t^ch) + sum phi_c(t^c_k).

    The channel translation is convolved with d_v - 1 conditionally
    independent check-message translations (none for d_v = 1, the initial
    compression design).  The support is the exact reachable integer interval.
    Raises :class:`DesignError` reporting the required width when the sum
    exceeds a configured two's-complement accumulator.
    """
    if d_v < 1:
        raise ValidationError(f"d_v must be >= 1, got {d_v}")
    if d_v >= 2 and (cn_joint is None or cn_table is None):
        raise ValidationError("check-message joint and table required for d_v >= 2")
    pd_ch = ch_table.phi_delta
    lo = int(pd_ch.min())
    hi = int(pd_ch.max())
    mass = np.zeros((2, hi - lo + 1))
    for b in (0, 1):
        mass[b] = np.bincount(pd_ch - lo, weights=ch_joint.mass[b],
                              minlength=hi - lo + 1)
    if d_v >= 2:
        pd_c = cn_table.phi_delta
        klo = int(pd_c.min())
        khi = int(pd_c.max())
        p_b = cn_joint.bit_marginal()
        if np.any(p_b <= 0):
            raise ValidationError("degenerate check-message bit marginal")
        kern = np.zeros((2, khi - klo + 1))
        for b in (0, 1):
            kern[b] = np.bincount(pd_c - klo, weights=cn_joint.mass[b] / p_b[b],
                                  minlength=khi - klo + 1)
        for _ in range(d_v - 1):
            mass = np.vstack([np.convolve(mass[0], kern[0]),
                              np.convolve(mass[1], kern[1])])
            lo += klo
            hi += khi
    if accumulator_bits is not None:
        need = _required_bits(max(abs(lo), abs(hi)))
        if need > accumulator_bits:
            raise DesignError(
                f"adder range [{lo}, {hi}] needs {need}-bit two's complement, "
                f"got {accumulator_bits}",
                required_bits=need,
            )
    mass[mass < FLUSH_EPS] = 0.0
    return JointBitDist(IntInterval(lo, hi), mass)


def quantize_density(yv_joint: JointBitDist, r: int, w: int) -> JointBitDist:
    """Push an adder-output density through the uniform quantizer Q^v.

    Deterministic mapping for y != 0; mass at y = 0 splits half to +1 and
    half to -1, preserving symmetry.
    """
    if not isinstance(yv_joint.support, IntInterval):
        raise ValidationError("quantize_density expects an integer-interval density")
    if r < 0 or w < 2:
        raise ValidationError(f"invalid quantizer parameters r={r}, w={w}")
    values = yv_joint.support.values
    m_out = 1 << (w - 1)
    mags = np.minimum((np.abs(values) >> r) + 1, m_out)
    idx = np.where(values < 0, m_out - mags, m_out + mags - 1)
    out = np.zeros((2, 2 * m_out))
    zero_at = None
    if yv_joint.support.lo <= 0 <= yv_joint.support.hi:
        zero_at = yv_joint.support.index(0)
    for b in (0, 1):
        row = yv_joint.mass[b]
        if zero_at is not None:
            row = row.copy()
            half = 0.5 * row[zero_at]
            row[zero_at] = 0.0
            out[b, m_out] += half      # +1
            out[b, m_out - 1] += half  # -1
        out[b] += np.bincount(idx, weights=row, minlength=2 * m_out)
    out[out < FLUSH_EPS] = 0.0
    return JointBitDist(SignedAlphabet(w), out)


def _min_sign_table(alphabet: SignedAlphabet) -> np.ndarray:
    """Index table of the two-input min approximation over an alphabet."""
    vals = alphabet.values
    a = vals[:, None]
    b = vals[None, :]
    out = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    m = alphabet.levels
    return np.where(out < 0, out + m, out + m - 1).astype(np.int64)


def cn_out_density(tv_joint: JointBitDist, d_c: int) -> JointBitDist:
    """Joint p(x, t^c) of a min-approximation check node with d_c - 1 inputs.

    x is the XOR of the participating code bits; the pairwise recursion mixes
    bits through the parity constraint and maps message pairs through
    sign-product / magnitude-minimum.  d_c = 2 degenerates to the input.
    """
    if d_c < 2:
        raise ValidationError(f"d_c must be >= 2, got {d_c}")
    support = tv_joint.support
    if not isinstance(support, SignedAlphabet):
        raise ValidationError("check-node recursion requires a SignedAlphabet density")
    n = support.size
    out_idx = _min_sign_table(support).ravel()
    q0, q1 = tv_joint.mass
    p = tv_joint.mass.copy()
    for _ in range(d_c - 2):
        m0 = np.outer(p[0], q0) + np.outer(p[1], q1)
        m1 = np.outer(p[1], q0) + np.outer(p[0], q1)
        p = np.vstack([
            np.bincount(out_idx, weights=m0.ravel(), minlength=n),
            np.bincount(out_idx, weights=m1.ravel(), minlength=n),
        ])
    p[p < FLUSH_EPS] = 0.0
    return JointBitDist(support, p)


def apply_design(design: IterationDesign, ch_joint: JointBitDist,
                 cn_joint: JointBitDist | None, degrees: NodeDegrees):
    """Re-run a designed pipeline; returns (yv_joint, tv_joint, cn_out_joint)."""
    d_v_eff = degrees.d_v if cn_joint is not None else 1
    yv = vn_sum_density(ch_joint, cn_joint, d_v_eff,
                        design.channel_table, design.check_table)
    tv = quantize_density(yv, design.r, design.width_bits)
    cn = cn_out_density(tv, degrees.d_c)
    return yv, tv, cn


def optimize_vn(mode: str, ch_joint: JointBitDist, cn_joint: JointBitDist | None,
                degrees: NodeDegrees, grid: GridSpec,
                iteration: int = 1) -> IterationDesign:
    """Exhaustive (delta, r) scan returning the argmax design for one iteration.

    mode "aware" maximizes I(X;T^c) through a d_c-input check node; mode
    "unaware" maximizes I(B;T^v).  Ties break toward smaller delta, then
    smaller r, independent of evaluation order.  With ``cn_joint`` absent the
    variable node degenerates to the initial channel-compression mapping.
    """
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    d_v_eff = degrees.d_v if cn_joint is not None else 1
    phi_ch = build_phi(ch_joint)
    phi_c = build_phi(cn_joint) if cn_joint is not None else None

    best = None  # (score, delta_idx, r, tv_mi, cn_mi)
    for di, delta in enumerate(grid.delta_values):
        ch_table = TranslationTable(
            ch_joint.support, phi_ch, scale_phi(phi_ch, delta, grid.w_phi),
            float(delta), grid.w_phi)
        if phi_c is not None:
            cn_table = TranslationTable(
                cn_joint.support, phi_c, scale_phi(phi_c, delta, grid.w_phi),
                float(delta), grid.w_phi)
        else:
            cn_table = None
        yv = vn_sum_density(ch_joint, cn_joint, d_v_eff, ch_table, cn_table)
        for r in grid.r_values:
            tv = quantize_density(yv, r, grid.width_bits)
            mi_vtc = mutual_information(tv)
            if mode == "aware":
                mi_ctv = mutual_information(cn_out_density(tv, degrees.d_c))
                score = mi_ctv
            else:
                mi_ctv = None
                score = mi_vtc
            if best is None or score > best[0]:
                best = (score, di, r, mi_vtc, mi_ctv)

    score, di, r, mi_vtc, mi_ctv = best
    delta = float(grid.delta_values[di])
    ch_table = TranslationTable.design(ch_joint, delta, grid.w_phi)
    cn_table = (TranslationTable.design(cn_joint, delta, grid.w_phi)
                if cn_joint is not None else None)
    if mi_ctv is None:
        yv = vn_sum_density(ch_joint, cn_joint, d_v_eff, ch_table, cn_table)
        tv = quantize_density(yv, r, grid.width_bits)
        mi_ctv = mutual_information(cn_out_density(tv, degrees.d_c))
    if cn_joint is not None:
        app = vn_sum_density(ch_joint, cn_joint, degrees.d_v + 1, ch_table, cn_table)
    else:
        app = vn_sum_density(ch_joint, None, 1, ch_table, None)
    mi_app = mutual_information(app)
    return IterationDesign(iteration, delta, int(r), grid.width_bits,
                           ch_table, cn_table, mi_vtc, mi_ctv, mi_app)


def evolve(mode: str, degrees: NodeDegrees, ch_quantizer: ChannelQuantizer,
           iterations: int, grid: GridSpec) -> EvolutionTrace:
    """Design every iteration of a decoder by density evolution.

    Iteration 1 designs the channel-compression mapping; later iterations
    design the full variable node against the previous iteration's
    check-message density.  The APP score uses all d_v check inputs plus the
    channel with no output quantization.
    """
    if iterations < 1:
        raise ValidationError(f"iterations must be >= 1, got {iterations}")
    ch_joint = ch_quantizer.joint
    designs = []
    cn_joint = None
    for it in range(1, iterations + 1):
        design = optimize_vn(mode, ch_joint, cn_joint, degrees, grid, iteration=it)
        _, _, cn_joint = apply_design(design, ch_joint, cn_joint, degrees)
        designs.append(design)
    return EvolutionTrace(ch_joint, tuple(designs))


def find_design_ebno(mode: str, degrees: NodeDegrees, w: int, w_ch: int,
                     iterations: int, rate: float,
                     lo_db: float = 1.0, hi_db: float = 8.0,
                     tol_db: float = 0.05, mi_target: float = 0.995,
                     grid: GridSpec | None = None) -> float:
    """Lowest E_b/N_0 (dB) where density evolution converges within the budget.

    Converged means the final-iteration APP mutual information reaches
    ``mi_target``.  Bisection to ``tol_db``; used to pick design operating
    points the way the waterfall region is located experimentally.
    """
    from .channel import ChannelModel, design_channel_quantizer, fine_llr_density

    if grid is None:
        grid = GridSpec.default(w, delta_points=64)

    def converges(ebno_db: float) -> bool:
        model = ChannelModel(ebno_db, rate)
        fine = fine_llr_density(model)
        quant = design_channel_quantizer(fine, w_ch)
        trace = evolve(mode, degrees, quant, iterations, grid)
        return trace.iterations[-1].mi_app >= mi_target

    if not converges(hi_db):
        raise DesignError(f"no convergence up to {hi_db} dB")
    lo, hi = lo_db, hi_db
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if converges(mid):
            hi = mid
        else:
            lo = mid
    return hi
