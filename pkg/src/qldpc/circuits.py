"""Gate-level two-input check-node circuits for 2- and 3-bit messages.

Messages are encoded in sign-magnitude form with the magnitude field storing
|t| - 1 (the alphabet has no zero, so a w-bit message is one sign bit plus
w - 1 magnitude bits).  The networks below are the minimized disjunctive
normal forms of the sign-product / magnitude-minimum update; their outputs
match the arithmetic min approximation on every input pair.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class Gate:
    """One logic gate; ``inputs`` index earlier signals (circuit inputs first)."""

    kind: str  # NOT, AND, OR, XOR
    inputs: tuple

    def __post_init__(self):
        if self.kind not in ("NOT", "AND", "OR", "XOR"):
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        if self.kind == "NOT" and len(self.inputs) != 1:
            raise ValidationError("NOT takes exactly one input")
        if self.kind != "NOT" and len(self.inputs) < 2:
            raise ValidationError(f"{self.kind} needs at least two inputs")

    def eval(self, signals) -> int:
        vals = [signals[i] for i in self.inputs]
        if self.kind == "NOT":
            return 1 - vals[0]
        if self.kind == "AND":
            return int(all(vals))
        if self.kind == "OR":
            return int(any(vals))
        out = 0
        for v in vals:
            out ^= v
        return out


@dataclass(frozen=True)
class GateCircuit:
    """Feed-forward gate network; gate i drives signal n_inputs + i."""

    n_inputs: int
    gates: tuple
    outputs: tuple

    def eval(self, bits) -> tuple:
        if len(bits) != self.n_inputs:
            raise ValidationError(f"expected {self.n_inputs} input bits")
        signals = [int(b) & 1 for b in bits]
        for gate in self.gates:
            signals.append(gate.eval(signals))
        return tuple(signals[i] for i in self.outputs)

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    @property
    def depth(self) -> int:
        """Longest input-to-output path, in gate levels."""
        level = [0] * self.n_inputs
        for gate in self.gates:
            level.append(1 + max(level[i] for i in gate.inputs))
        return max(level[i] for i in self.outputs)


def encode_sign_mag(t: int, w: int) -> tuple:
    """Message value -> (sign, mag_{w-2}, ..., mag_0) with magnitude |t| - 1."""
    if t == 0 or abs(t) > (1 << (w - 1)):
        raise ValidationError(f"{t} is not a {w}-bit sign-magnitude message")
    mag = abs(t) - 1
    bits = [1 if t < 0 else 0]
    for k in range(w - 2, -1, -1):
        bits.append((mag >> k) & 1)
    return tuple(bits)


def decode_sign_mag(bits, w: int) -> int:
    mag = 0
    for b in bits[1:]:
        mag = (mag << 1) | int(b)
    value = mag + 1
    return -value if bits[0] else value


def cn_min_circuit(w: int) -> GateCircuit:
    """Two-input min-approximation update as a gate netlist (w in {2, 3})."""
    if w == 2:
        # Inputs: s_a, m_a, s_b, m_b.  Sign XOR plus magnitude AND.
        return GateCircuit(
            n_inputs=4,
            gates=(Gate("XOR", (0, 2)), Gate("AND", (1, 3))),
            outputs=(4, 5),
        )
    if w == 3:
        # Inputs: s_a, a1, a0, s_b, b1, b0 (magnitude high bit first).
        # out1 = a1 b1;  out0 = a0 b0 + !a1 a0 b1 + a1 !b1 b0 (minimized DNF).
        return GateCircuit(
            n_inputs=6,
            gates=(
                Gate("XOR", (0, 3)),      # 6: output sign
                Gate("AND", (1, 4)),      # 7: out1
                Gate("NOT", (1,)),        # 8: !a1
                Gate("NOT", (4,)),        # 9: !b1
                Gate("AND", (2, 5)),      # 10: a0 b0
                Gate("AND", (8, 2, 4)),   # 11: !a1 a0 b1
                Gate("AND", (1, 9, 5)),   # 12: a1 !b1 b0
                Gate("OR", (10, 11, 12)),  # 13: out0
            ),
            outputs=(6, 7, 13),
        )
    raise ValidationError(f"no optimized circuit for w={w} (only 2 and 3)")


def min_approx_pair(t1: int, t2: int) -> int:
    """Arithmetic reference: sgn(t1) sgn(t2) min(|t1|, |t2|)."""
    sign = 1 if (t1 > 0) == (t2 > 0) else -1
    return sign * min(abs(t1), abs(t2))


def verify_cn_circuit(w: int):
    """Exhaustively compare the gate network against the arithmetic update.

    Returns (n_match, n_total, gate_count, depth); n_match == n_total iff the
    circuit is equivalent on the full encoded domain.
    """
    circuit = cn_min_circuit(w)
    values = [t for t in range(-(1 << (w - 1)), (1 << (w - 1)) + 1) if t != 0]
    total = 0
    match = 0
    for t1 in values:
        for t2 in values:
            bits = encode_sign_mag(t1, w) + encode_sign_mag(t2, w)
            got = decode_sign_mag(circuit.eval(bits), w)
            total += 1
            match += got == min_approx_pair(t1, t2)
    return match, total, circuit.gate_count, circuit.depth
