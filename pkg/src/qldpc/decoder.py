"""Bit-exact fixed-point flooding decoder plus a float box-plus BP baseline.

The hot path lives in numba kernels (:mod:`qldpc._kernels`); this module
holds the node-update reference implementations the kernels are tested
against, the serializable :class:`DecoderSpec`, and the public
:func:`decode` / :func:`decode_bp` entry points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .codes import CodeGraph
from .dde import EvolutionTrace, IterationDesign, NodeDegrees
from .dist import SignedAlphabet
from .errors import ConfigurationError, ValidationError
from .translate import TranslationTable, UniformQuantizerParams, uniform_quantize

_MASK64 = (1 << 64) - 1


def _sm64_py(state: int):
    """Pure-Python splitmix64 step; mirrors the kernel stream bit for bit."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def stream_key_py(seed: int, frame: int, salt: int) -> int:
    s = (seed ^ ((salt * 0x9E3779B97F4A7C15) & _MASK64)) & _MASK64
    s, z = _sm64_py(s)
    s = (z ^ frame) & _MASK64
    _, z = _sm64_py(s)
    return z


class TieStream:
    """Deterministic tie-break bit source shared by reference and kernels."""

    def __init__(self, key: int, mirror: bool = False):
        self.state = key & _MASK64
        self.mirror = mirror

    def next_bit(self) -> int:
        self.state, z = _sm64_py(self.state)
        b = (z >> 63) & 1
        return b ^ 1 if self.mirror else b


def cn_update_min(inputs, mode: str = "two_minima") -> np.ndarray:
    """Extrinsic min-approximation outputs of one check node.

    Output j carries the sign product and the magnitude minimum of all inputs
    except j.  ``tree`` evaluates the pairwise reduction on a balanced binary
    tree (the 3(d_c - 2)-comparison schedule); ``two_minima`` tracks the two
    smallest magnitudes.  Both are bit-identical.
    """
    t = np.asarray(inputs, dtype=np.int64)
    if np.any(t == 0):
        raise ValidationError("zero is not a sign-magnitude message")
    if mode == "two_minima":
        mags = np.abs(t)
        order = np.argsort(mags, kind="stable")
        min1 = mags[order[0]]
        min2 = mags[order[1]] if t.size > 1 else min1
        sprod = 1 if np.count_nonzero(t < 0) % 2 == 0 else -1
        out = np.empty_like(t)
        for j in range(t.size):
            a = min2 if j == order[0] else min1
            own = 1 if t[j] > 0 else -1
            out[j] = sprod * own * a
        return out
    if mode == "tree":
        def agg(lo, hi):
            if hi - lo == 1:
                return int(t[lo])
            mid = (lo + hi) // 2
            return _pair_min(agg(lo, mid), agg(mid, hi))

        out = np.empty_like(t)

        def down(lo, hi, carry):
            if hi - lo == 1:
                out[lo] = carry
                return
            mid = (lo + hi) // 2
            left = agg(lo, mid)
            right = agg(mid, hi)
            down(lo, mid, right if carry is None else _pair_min(carry, right))
            down(mid, hi, left if carry is None else _pair_min(carry, left))

        if t.size == 1:
            raise ValidationError("extrinsic update needs at least two inputs")
        down(0, t.size, None)
        return out
    raise ValidationError(f"unknown mode {mode!r}")


def _pair_min(a: int, b: int) -> int:
    sign = 1 if (a > 0) == (b > 0) else -1
    return sign * min(abs(a), abs(b))


def cn_update_boolean(t1: int, t2: int, w: int) -> int:
    """Gate-level two-input update; equals the arithmetic pair rule."""
    from .circuits import cn_min_circuit, decode_sign_mag, encode_sign_mag

    circuit = cn_min_circuit(w)
    bits = encode_sign_mag(t1, w) + encode_sign_mag(t2, w)
    return decode_sign_mag(circuit.eval(bits), w)


def vn_update_fixed(ch_msg: int, cn_msgs, design: IterationDesign,
                    tie_rule: str = "deterministic_plus",
                    ties: TieStream | None = None):
    """Reference variable-node update: translate, sum, subtract-own, quantize.

    Returns (extrinsic outputs per edge, app_sum).  ``cn_msgs`` may be empty
    (first-iteration compression).  All arithmetic is exact integer.
    """
    params = UniformQuantizerParams(design.r, design.width_bits, tie_rule)
    ch = design.channel_table.lookup_phi_delta(int(ch_msg))
    terms = []
    for t in cn_msgs:
        if design.check_table is None:
            raise ValidationError("design has no check table but check messages given")
        terms.append(design.check_table.lookup_phi_delta(int(t)))
    app = ch + sum(terms)
    out = np.empty(len(terms) if terms else 0, dtype=np.int64)
    rng = _TieAdapter(ties) if ties is not None else None
    for j, term in enumerate(terms):
        out[j] = uniform_quantize(app - term, params, rng)
    if not terms:
        out = np.array([uniform_quantize(app, params, rng)], dtype=np.int64)
    return out, app


class _TieAdapter:
    """Adapts a TieStream to the rng.integers(2) interface of uniform_quantize."""

    def __init__(self, ties: TieStream):
        self._ties = ties

    def integers(self, _n):
        return self._ties.next_bit()


@dataclass(frozen=True)
class DecoderSpec:
    """Complete runtime description of a designed finite-alphabet decoder."""

    width_bits: int
    channel_bits: int
    accumulator_bits: int
    degrees: NodeDegrees
    max_iters: int
    tie_rule: str
    channel_thresholds: np.ndarray
    iterations: tuple
    design_mode: str = "aware"
    design_ebno_db: float = float("nan")

    def __post_init__(self):
        if self.width_bits < 2:
            raise ConfigurationError("message width must be >= 2 bits")
        if self.tie_rule not in ("deterministic_plus", "random"):
            raise ConfigurationError(f"unknown tie rule {self.tie_rule!r}")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if len(self.iterations) < self.max_iters:
            raise ConfigurationError(
                f"{len(self.iterations)} designed iterations < max_iters "
                f"{self.max_iters}")
        w_phi = self.iterations[0].channel_table.w_phi
        need = w_phi + math.ceil(math.log2(self.degrees.d_v + 1))
        if self.accumulator_bits < need:
            raise ConfigurationError(
                f"accumulator width {self.accumulator_bits} < required {need}")
        th = np.asarray(self.channel_thresholds, dtype=np.float64)
        if th.shape != (2 ** (self.channel_bits - 1) - 1,):
            raise ConfigurationError("threshold count does not match channel width")
        th.setflags(write=False)
        object.__setattr__(self, "channel_thresholds", th)
        object.__setattr__(self, "iterations", tuple(self.iterations))
        for d in self.iterations:
            if d.width_bits != self.width_bits:
                raise ConfigurationError("iteration design width mismatch")

    @classmethod
    def from_trace(cls, trace: EvolutionTrace, channel_thresholds,
                   degrees: NodeDegrees, max_iters: int | None = None,
                   tie_rule: str = "random", design_mode: str = "aware",
                   design_ebno_db: float = float("nan")) -> "DecoderSpec":
        designs = trace.iterations
        w = designs[0].width_bits
        w_ch = designs[0].channel_table.alphabet.width_bits
        w_phi = designs[0].channel_table.w_phi
        w_y = w_phi + math.ceil(math.log2(degrees.d_v + 1))
        return cls(w, w_ch, w_y, degrees,
                   max_iters if max_iters is not None else len(designs),
                   tie_rule, channel_thresholds, designs,
                   design_mode, design_ebno_db)

    @property
    def channel_alphabet(self) -> SignedAlphabet:
        return SignedAlphabet(self.channel_bits)

    def kernel_tables(self):
        """Stacked dense per-iteration tables for the decoding kernels."""
        n = len(self.iterations)
        m_ch = self.channel_alphabet.levels
        m = SignedAlphabet(self.width_bits).levels
        phi_ch = np.zeros((n, 2 * m_ch + 1), dtype=np.int64)
        phi_c = np.zeros((n, 2 * m + 1), dtype=np.int64)
        r_shift = np.zeros(n, dtype=np.int64)
        for i, d in enumerate(self.iterations):
            phi_ch[i] = d.channel_table.dense_phi_delta()
            if d.check_table is not None:
                phi_c[i] = d.check_table.dense_phi_delta()
            r_shift[i] = d.r
        return phi_ch, phi_c, r_shift

    def quantize_channel(self, llrs) -> np.ndarray:
        llrs = np.asarray(llrs, dtype=np.float64)
        level = 1 + np.searchsorted(self.channel_thresholds, np.abs(llrs),
                                    side="right")
        return np.where(llrs < 0, -level, level).astype(np.int64)

    # -- JSON round trip ----------------------------------------------------

    def to_json_dict(self) -> dict:
        its = []
        for d in self.iterations:
            entry = {
                "iteration": d.iteration,
                "delta": d.delta,
                "r": d.r,
                "mi_vtc": d.mi_vtc,
                "mi_ctv": d.mi_ctv,
                "mi_app": d.mi_app,
                "channel_phi": [float(x) for x in d.channel_table.phi],
                "channel_phi_delta": [int(x) for x in d.channel_table.phi_delta],
            }
            if d.check_table is not None:
                entry["check_phi"] = [float(x) for x in d.check_table.phi]
                entry["check_phi_delta"] = [int(x) for x in d.check_table.phi_delta]
            else:
                entry["check_phi"] = None
                entry["check_phi_delta"] = None
            its.append(entry)
        return {
            "format": "qldpc-decoder-spec",
            "version": 1,
            "message_bits": self.width_bits,
            "channel_bits": self.channel_bits,
            "accumulator_bits": self.accumulator_bits,
            "phi_bits": self.iterations[0].channel_table.w_phi,
            "dv": self.degrees.d_v,
            "dc": self.degrees.d_c,
            "max_iterations": self.max_iters,
            "tie_rule": self.tie_rule,
            "design_mode": self.design_mode,
            "design_ebno_db": self.design_ebno_db,
            "channel_thresholds": [float(x) for x in self.channel_thresholds],
            "iterations": its,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DecoderSpec":
        if doc.get("format") != "qldpc-decoder-spec":
            raise ConfigurationError("not a decoder spec document")
        w = int(doc["message_bits"])
        w_ch = int(doc["channel_bits"])
        w_phi = int(doc["phi_bits"])
        designs = []
        for entry in doc["iterations"]:
            ch_table = TranslationTable(
                SignedAlphabet(w_ch),
                np.array(entry["channel_phi"], dtype=np.float64),
                np.array(entry["channel_phi_delta"], dtype=np.int64),
                float(entry["delta"]), w_phi)
            if entry["check_phi"] is not None:
                cn_table = TranslationTable(
                    SignedAlphabet(w),
                    np.array(entry["check_phi"], dtype=np.float64),
                    np.array(entry["check_phi_delta"], dtype=np.int64),
                    float(entry["delta"]), w_phi)
            else:
                cn_table = None
            designs.append(IterationDesign(
                int(entry["iteration"]), float(entry["delta"]), int(entry["r"]),
                w, ch_table, cn_table, float(entry["mi_vtc"]),
                float(entry["mi_ctv"]), float(entry["mi_app"])))
        return cls(w, w_ch, int(doc["accumulator_bits"]),
                   NodeDegrees(int(doc["dv"]), int(doc["dc"])),
                   int(doc["max_iterations"]), str(doc["tie_rule"]),
                   np.array(doc["channel_thresholds"], dtype=np.float64),
                   tuple(designs), str(doc["design_mode"]),
                   float(doc["design_ebno_db"]))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DecoderSpec":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of one decode: hard bits, syndrome status, iteration stats."""

    bits: np.ndarray
    success: bool
    iterations: int
    syndrome_weights: tuple = field(repr=False)


def _validate_graph_spec(graph: CodeGraph, spec: DecoderSpec) -> None:
    if not graph.is_regular:
        raise ConfigurationError("decoder specs target regular graphs")
    if graph.d_v != spec.degrees.d_v or graph.d_c != spec.degrees.d_c:
        raise ConfigurationError(
            f"graph degrees ({graph.d_v}, {graph.d_c}) do not match spec "
            f"({spec.degrees.d_v}, {spec.degrees.d_c})")


def _prepare_channel(llrs_or_msgs, spec: DecoderSpec) -> np.ndarray:
    arr = np.asarray(llrs_or_msgs)
    if np.issubdtype(arr.dtype, np.floating):
        return spec.quantize_channel(arr)
    arr = arr.astype(np.int64)
    m = spec.channel_alphabet.levels
    if np.any(arr == 0) or np.any(np.abs(arr) > m):
        raise ValidationError("channel messages outside the w_ch alphabet")
    return arr


def decode(llrs_or_channel_msgs, graph: CodeGraph, spec: DecoderSpec,
           seed: int = 0, mirror_ties: bool = False) -> DecodeResult:
    """Flooding fixed-point decode of one frame.

    Accepts float LLRs (quantized through the spec's channel thresholds) or
    already-quantized integer messages.  Deterministic given ``seed``; with
    ``mirror_ties`` every tie-break bit is inverted, which together with
    negated inputs exactly mirrors a run (used to validate sign symmetry).
    """
    _validate_graph_spec(graph, spec)
    msgs = _prepare_channel(llrs_or_channel_msgs, spec)
    if msgs.size != graph.n_vars:
        raise ConfigurationError(
            f"input length {msgs.size} != N = {graph.n_vars}")
    phi_ch, phi_c, r_shift = spec.kernel_tables()
    bits = np.empty(graph.n_vars, dtype=np.uint8)
    syn = np.zeros(spec.max_iters, dtype=np.int64)
    key = np.uint64(stream_key_py(seed & _MASK64, 0, _kernels.SALT_TIE))
    success, iters = _kernels.decode_fixed_frame(
        msgs, graph.check_ptr, graph.check_vars, graph.var_ptr,
        graph.var_edges, phi_ch, phi_c, r_shift,
        np.int64(1 << (spec.width_bits - 1)), spec.max_iters,
        spec.tie_rule == "random", key, mirror_ties, bits, syn)
    return DecodeResult(bits, bool(success), int(iters),
                        tuple(int(x) for x in syn[:iters]))


def decode_reference(llrs_or_channel_msgs, graph: CodeGraph, spec: DecoderSpec,
                     seed: int = 0, mirror_ties: bool = False) -> DecodeResult:
    """Slow decode composed from the reference node updates.

    Same contract and identical output to :func:`decode`; exists so the
    kernel can be cross-checked bit for bit.
    """
    _validate_graph_spec(graph, spec)
    msgs = _prepare_channel(llrs_or_channel_msgs, spec)
    n, n_checks = graph.n_vars, graph.n_checks
    key = stream_key_py(seed & _MASK64, 0, _kernels.SALT_TIE)
    ties = TieStream(key, mirror_ties)
    tie_rule = spec.tie_rule
    c2v = np.zeros(graph.n_edges, dtype=np.int64)
    v2c = np.zeros(graph.n_edges, dtype=np.int64)
    bits = np.zeros(n, dtype=np.uint8)
    syn_weights = []
    success = False
    iters = 0
    for it in range(spec.max_iters):
        design = spec.iterations[min(it, len(spec.iterations) - 1)]
        for v in range(n):
            edges = graph.var_edges[graph.var_ptr[v]:graph.var_ptr[v + 1]]
            cn_in = [int(c2v[e]) for e in edges] if it > 0 else []
            out, app = vn_update_fixed(int(msgs[v]), cn_in, design,
                                       tie_rule, ties)
            if app > 0:
                bits[v] = 0
            elif app < 0:
                bits[v] = 1
            else:
                bits[v] = ties.next_bit() if tie_rule == "random" else 0
            if it > 0:
                v2c[edges] = out
            else:
                v2c[edges] = out[0]
        weight = 0
        for c in range(n_checks):
            weight += int(np.bitwise_xor.reduce(bits[graph.check_neighbors(c)]))
        syn_weights.append(weight)
        iters = it + 1
        if weight == 0:
            success = True
            break
        if it == spec.max_iters - 1:
            break
        for c in range(n_checks):
            lo, hi = graph.check_ptr[c], graph.check_ptr[c + 1]
            c2v[lo:hi] = cn_update_min(v2c[lo:hi])
    return DecodeResult(bits, success, iters, tuple(syn_weights))


def boxplus(a: float, b: float) -> float:
    """Exact pairwise box-plus of two LLRs (natural units)."""
    return float(_kernels._boxplus(float(a), float(b), False))


def boxplus_correction(x: float, y: float) -> float:
    """Correction magnitude log(1+e^-|x-y|) - log(1+e^-|x+y|) for |LLR| pairs."""
    return float(np.log1p(np.exp(-abs(x - y))) - np.log1p(np.exp(-abs(x + y))))


def decode_bp(llrs, graph: CodeGraph, max_iters: int = 50,
              check_rule: str = "boxplus") -> DecodeResult:
    """Floating-point flooding BP baseline (exact box-plus or min-sum).

    Hard-decision ties at exactly zero go to bit 0; no randomness is used.
    """
    if check_rule not in ("boxplus", "min"):
        raise ConfigurationError(f"unknown check rule {check_rule!r}")
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.size != graph.n_vars:
        raise ConfigurationError(f"input length {llrs.size} != N = {graph.n_vars}")
    bits = np.empty(graph.n_vars, dtype=np.uint8)
    syn = np.zeros(max_iters, dtype=np.int64)
    success, iters = _kernels.decode_bp_frame(
        llrs, graph.check_ptr, graph.check_vars, graph.var_ptr,
        graph.var_edges, max_iters, check_rule == "min", bits, syn)
    return DecodeResult(bits, bool(success), int(iters),
                        tuple(int(x) for x in syn[:iters]))
