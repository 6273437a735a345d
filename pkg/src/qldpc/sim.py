"""Monte Carlo BER/FER measurement with reproducible per-frame randomness.

Every frame draws its noise (and tie bits) from counter-based splitmix64
streams keyed by (seed, frame index, salt), so counters are a pure function
of (config, seed): batch size, thread count, and scheduling cannot change
results.  Points stop at a frame-error target or a frame cap, evaluated in
frame order.
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .channel import ChannelModel
from .codes import CodeGraph, Gf2Encoder
from .decoder import DecoderSpec, stream_key_py
from .dist import JointBitDist, SignedAlphabet
from .errors import ConfigurationError, ValidationError

log = logging.getLogger(__name__)

WILSON_Z = 1.959963984540054  # 95% normal quantile


@dataclass(frozen=True)
class BpBaseline:
    """Floating-point BP stand-in for a DecoderSpec in simulations."""

    max_iters: int = 50
    check_rule: str = "boxplus"

    def __post_init__(self):
        if self.max_iters < 1 or self.check_rule not in ("boxplus", "min"):
            raise ConfigurationError("invalid BP baseline configuration")


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo campaign: code + decoder + SNR grid + stopping rule."""

    graph: CodeGraph
    spec: DecoderSpec | BpBaseline
    ebno_db_grid: tuple
    max_frames: int = 1_000_000
    min_frame_errors: int = 100
    seed: int = 0
    codeword_mode: str = "all_zero"
    batch_frames: int = 4096

    def __post_init__(self):
        if len(self.ebno_db_grid) == 0:
            raise ConfigurationError("E_b/N_0 grid must not be empty")
        if self.min_frame_errors < 1:
            raise ConfigurationError("min_frame_errors must be >= 1")
        if self.max_frames < 1 or self.batch_frames < 1:
            raise ConfigurationError("frame counts must be >= 1")
        if self.codeword_mode not in ("all_zero", "random_info"):
            raise ConfigurationError(f"unknown codeword mode {self.codeword_mode!r}")
        object.__setattr__(self, "ebno_db_grid",
                           tuple(float(x) for x in self.ebno_db_grid))


@dataclass(frozen=True)
class SimRecord:
    """One measured operating point."""

    ebno_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    fer_ci_lo: float
    fer_ci_hi: float
    mean_iters: float
    seconds: float

    CSV_HEADER = ("ebno_db,frames,bit_errors,frame_errors,ber,fer,"
                  "fer_ci_lo,fer_ci_hi,mean_iters,seconds")

    def csv_line(self) -> str:
        return (f"{self.ebno_db!r},{self.frames},{self.bit_errors},"
                f"{self.frame_errors},{self.ber!r},{self.fer!r},"
                f"{self.fer_ci_lo!r},{self.fer_ci_hi!r},{self.mean_iters!r},"
                f"{self.seconds:.3f}")


def wilson_interval(errors: int, n: int, z: float = WILSON_Z):
    """95% Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def set_worker_cap(n: int | None = None) -> None:
    """Cap numba worker threads; reads QLDPC_THREADS when ``n`` is None."""
    import numba

    if n is None:
        env = os.environ.get("QLDPC_THREADS")
        if not env:
            return
        n = int(env)
    n = max(1, min(n, numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)


def _count_mask(config: SimConfig) -> tuple[np.ndarray, Gf2Encoder | None]:
    """Positions counted for bit errors: all N (all_zero) or the information
    positions (random_info)."""
    n = config.graph.n_vars
    if config.codeword_mode == "all_zero":
        return np.ones(n, dtype=np.uint8), None
    encoder = Gf2Encoder(config.graph)
    mask = np.zeros(n, dtype=np.uint8)
    mask[encoder.info_cols] = 1
    return mask, encoder


def _codewords_for(config: SimConfig, encoder: Gf2Encoder | None,
                   frame_lo: int, n_frames: int) -> np.ndarray:
    if config.codeword_mode == "all_zero":
        return np.zeros((1, config.graph.n_vars), dtype=np.uint8)
    out = np.empty((n_frames, config.graph.n_vars), dtype=np.uint8)
    for i in range(n_frames):
        key = stream_key_py(config.seed, frame_lo + i, _kernels.SALT_INFO)
        rng = np.random.Generator(np.random.Philox(key=key))
        info = rng.integers(0, 2, encoder.k_info).astype(np.uint8)
        out[i] = encoder.encode(info)
    return out


def _run_batch(config: SimConfig, ebno_db: float, frame_lo: int,
               n_frames: int, mask: np.ndarray, encoder):
    graph = config.graph
    model = ChannelModel(ebno_db, graph.actual_rate())
    codewords = _codewords_for(config, encoder, frame_lo, n_frames)
    all_zero = config.codeword_mode == "all_zero"
    err = np.zeros(n_frames, dtype=np.int64)
    succ = np.zeros(n_frames, dtype=np.uint8)
    iters = np.zeros(n_frames, dtype=np.int64)
    if isinstance(config.spec, BpBaseline):
        _kernels.run_frames_bp(
            frame_lo, n_frames, np.uint64(config.seed), model.sigma,
            model.llr_scale, codewords, all_zero, mask,
            graph.check_ptr, graph.check_vars, graph.var_ptr, graph.var_edges,
            config.spec.max_iters, config.spec.check_rule == "min",
            err, succ, iters)
    else:
        spec = config.spec
        phi_ch, phi_c, r_shift = spec.kernel_tables()
        _kernels.run_frames_fixed(
            frame_lo, n_frames, np.uint64(config.seed), model.sigma,
            model.llr_scale, spec.channel_thresholds, codewords, all_zero,
            mask, graph.check_ptr, graph.check_vars, graph.var_ptr,
            graph.var_edges, phi_ch, phi_c, r_shift,
            np.int64(1 << (spec.width_bits - 1)), spec.max_iters,
            spec.tie_rule == "random", err, succ, iters)
    return err, succ, iters


def run_point(config: SimConfig, ebno_db: float) -> SimRecord:
    """Simulate one E_b/N_0 point until the error target or frame cap.

    Deterministic given (config, seed): frames are scanned in index order and
    the stopping frame is exact, so batch size cannot change the counters.
    """
    if isinstance(config.spec, DecoderSpec):
        from .decoder import _validate_graph_spec

        _validate_graph_spec(config.graph, config.spec)
    set_worker_cap()
    start = time.perf_counter()
    mask, encoder = _count_mask(config)
    counted_positions = int(mask.sum())
    frames = bit_errors = frame_errors = 0
    iter_sum = 0
    frame_lo = 0
    while frames < config.max_frames and frame_errors < config.min_frame_errors:
        n_batch = min(config.batch_frames, config.max_frames - frame_lo)
        err, succ, iters = _run_batch(config, ebno_db, frame_lo, n_batch,
                                      mask, encoder)
        frame_err = (err > 0).astype(np.int64)
        cum = frame_errors + np.cumsum(frame_err)
        hit = np.flatnonzero(cum >= config.min_frame_errors)
        take = n_batch if hit.size == 0 else int(hit[0]) + 1
        frames += take
        bit_errors += int(err[:take].sum())
        frame_errors += int(frame_err[:take].sum())
        iter_sum += int(iters[:take].sum())
        frame_lo += n_batch
    seconds = time.perf_counter() - start
    fer = frame_errors / frames
    lo, hi = wilson_interval(frame_errors, frames)
    return SimRecord(
        ebno_db=float(ebno_db), frames=frames, bit_errors=bit_errors,
        frame_errors=frame_errors,
        ber=bit_errors / (frames * counted_positions), fer=fer,
        fer_ci_lo=lo, fer_ci_hi=hi,
        mean_iters=iter_sum / frames, seconds=seconds)


def sweep(config: SimConfig) -> list[SimRecord]:
    """run_point per grid entry; warns when FER rises significantly with SNR."""
    records = [run_point(config, e) for e in config.ebno_db_grid]
    order = np.argsort(config.ebno_db_grid)
    for a, b in zip(order[:-1], order[1:]):
        ra, rb = records[a], records[b]
        sd = np.sqrt(max(ra.fer * (1 - ra.fer) / ra.frames
                         + rb.fer * (1 - rb.fer) / rb.frames, 1e-30))
        if rb.fer - ra.fer > 3.0 * sd:
            log.warning("FER increased from %g (%.2f dB) to %g (%.2f dB) "
                        "by more than 3 sigma", ra.fer, ra.ebno_db,
                        rb.fer, rb.ebno_db)
    return records


def records_to_csv(records) -> str:
    return "\n".join([SimRecord.CSV_HEADER] + [r.csv_line() for r in records]) + "\n"


def write_csv(records, path) -> None:
    with open(path, "w") as fh:
        fh.write(records_to_csv(records))


def measure_edge_density(config: SimConfig, iteration: int,
                         min_edges: int = 1_000_000) -> JointBitDist:
    """Empirical joint p(b, t^v) at one iteration over simulated edges.

    Decodes without early termination through ``iteration`` variable-node
    passes, histogramming the extrinsic outputs against the known code bits.
    The number of frames is the smallest count reaching ``min_edges`` edges.
    """
    if not isinstance(config.spec, DecoderSpec):
        raise ConfigurationError("edge density measurement needs a DecoderSpec")
    if iteration < 1:
        raise ValidationError("iteration must be >= 1")
    from .decoder import _validate_graph_spec

    _validate_graph_spec(config.graph, config.spec)
    graph = config.graph
    spec = config.spec
    model = ChannelModel(config.ebno_db_grid[0], graph.actual_rate())
    n_frames = min(config.max_frames,
                   -(-min_edges // graph.n_edges))
    _, encoder = _count_mask(config)
    codewords = _codewords_for(config, encoder, 0, n_frames)
    phi_ch, phi_c, r_shift = spec.kernel_tables()
    m_out = 1 << (spec.width_bits - 1)
    hist = np.zeros((2, 2 * m_out + 1), dtype=np.int64)
    _kernels.edge_histogram_frames(
        0, n_frames, np.uint64(config.seed), model.sigma, model.llr_scale,
        spec.channel_thresholds, codewords,
        config.codeword_mode == "all_zero",
        graph.check_ptr, graph.check_vars, graph.var_ptr, graph.var_edges,
        phi_ch, phi_c, r_shift, np.int64(m_out), iteration,
        spec.tie_rule == "random", hist)
    if hist[:, m_out].any():
        raise ValidationError("zero-valued messages observed; kernel bug")
    counts = np.concatenate([hist[:, :m_out], hist[:, m_out + 1:]], axis=1)
    return JointBitDist(SignedAlphabet(spec.width_bits),
                        counts.astype(np.float64), normalize=True)
