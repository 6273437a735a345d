"""Parity-check matrix ingestion, PEG generation, and Tanner graph adjacency.

Graphs are stored as flat CSR adjacency in both directions with mutual edge
cross-references, the layout the flooding decoder consumes directly.  Edge
ids are assigned in check-major order.  On disk the MacKay alist format is
used (1-based indices); in memory everything is 0-based.
"""

from __future__ import annotations

import numpy as np

from .errors import AlistParseError, ConstructionError, ValidationError


class CodeGraph:
    """Immutable bipartite graph of N variable nodes and n_checks check nodes.

    ``check_ptr``/``check_vars`` give each check's variable neighbors; the
    position inside ``check_vars`` is the edge id.  ``var_ptr``/``var_edges``
    list the edge ids incident to each variable, ascending.
    """

    __slots__ = ("n_vars", "n_checks", "check_ptr", "check_vars",
                 "var_ptr", "var_edges", "_rank")

    def __init__(self, n_vars: int, check_neighbor_lists):
        if n_vars < 1 or len(check_neighbor_lists) < 1:
            raise ValidationError("graph needs at least one variable and one check")
        n_checks = len(check_neighbor_lists)
        degs = np.array([len(lst) for lst in check_neighbor_lists], dtype=np.int64)
        check_ptr = np.concatenate([[0], np.cumsum(degs)])
        check_vars = np.zeros(check_ptr[-1], dtype=np.int64)
        var_count = np.zeros(n_vars, dtype=np.int64)
        for c, lst in enumerate(check_neighbor_lists):
            arr = np.asarray(sorted(int(v) for v in lst), dtype=np.int64)
            if arr.size and (arr[0] < 0 or arr[-1] >= n_vars):
                raise ValidationError(f"check {c}: variable index out of range")
            if arr.size != np.unique(arr).size:
                raise ValidationError(f"check {c}: duplicate edge")
            check_vars[check_ptr[c]:check_ptr[c + 1]] = arr
            var_count[arr] += 1
        var_ptr = np.concatenate([[0], np.cumsum(var_count)])
        var_edges = np.zeros(check_ptr[-1], dtype=np.int64)
        fill = var_ptr[:-1].copy()
        for e in range(check_vars.size):
            v = check_vars[e]
            var_edges[fill[v]] = e
            fill[v] += 1
        for arr in (check_ptr, check_vars, var_ptr, var_edges):
            arr.setflags(write=False)
        object.__setattr__(self, "n_vars", int(n_vars))
        object.__setattr__(self, "n_checks", int(n_checks))
        object.__setattr__(self, "check_ptr", check_ptr)
        object.__setattr__(self, "check_vars", check_vars)
        object.__setattr__(self, "var_ptr", var_ptr)
        object.__setattr__(self, "var_edges", var_edges)
        object.__setattr__(self, "_rank", None)

    def __setattr__(self, name, value):
        raise AttributeError("CodeGraph is immutable")

    @property
    def n_edges(self) -> int:
        return int(self.check_vars.size)

    @property
    def check_degrees(self) -> np.ndarray:
        return np.diff(self.check_ptr)

    @property
    def var_degrees(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    @property
    def is_regular(self) -> bool:
        cd = self.check_degrees
        vd = self.var_degrees
        return bool(np.all(cd == cd[0]) and np.all(vd == vd[0]))

    @property
    def d_v(self) -> int:
        vd = self.var_degrees
        if not np.all(vd == vd[0]):
            raise ValidationError("graph is not variable-regular")
        return int(vd[0])

    @property
    def d_c(self) -> int:
        cd = self.check_degrees
        if not np.all(cd == cd[0]):
            raise ValidationError("graph is not check-regular")
        return int(cd[0])

    @property
    def design_rate(self) -> float:
        return 1.0 - self.n_checks / self.n_vars

    def var_neighbors(self, v: int) -> np.ndarray:
        """Check indices adjacent to variable v, ascending edge order."""
        edges = self.var_edges[self.var_ptr[v]:self.var_ptr[v + 1]]
        return np.searchsorted(self.check_ptr, edges, side="right") - 1

    def check_neighbors(self, c: int) -> np.ndarray:
        return self.check_vars[self.check_ptr[c]:self.check_ptr[c + 1]]

    def edge_endpoints(self, e: int) -> tuple[int, int]:
        """(check, variable) of edge id e."""
        c = int(np.searchsorted(self.check_ptr, e, side="right") - 1)
        return c, int(self.check_vars[e])

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.n_checks, self.n_vars), dtype=np.uint8)
        for c in range(self.n_checks):
            H[c, self.check_neighbors(c)] = 1
        return H

    def rank(self) -> int:
        """GF(2) rank of the parity-check matrix (cached)."""
        if self._rank is None:
            rows = []
            for c in range(self.n_checks):
                mask = 0
                for v in self.check_neighbors(c):
                    mask |= 1 << int(v)
                rows.append(mask)
            object.__setattr__(self, "_rank", _gf2_rank(rows))
        return self._rank

    def actual_rate(self) -> float:
        """Code rate from the GF(2) rank (handles rank-deficient matrices)."""
        return 1.0 - self.rank() / self.n_vars

    def __eq__(self, other):
        return (isinstance(other, CodeGraph)
                and self.n_vars == other.n_vars
                and self.n_checks == other.n_checks
                and np.array_equal(self.check_ptr, other.check_ptr)
                and np.array_equal(self.check_vars, other.check_vars))

    def __repr__(self):
        return (f"CodeGraph(N={self.n_vars}, N_c={self.n_checks}, "
                f"edges={self.n_edges})")


def _gf2_rank(rows: list[int]) -> int:
    rank = 0
    pivots = []
    for row in rows:
        for p in pivots:
            row = min(row, row ^ p)
        if row:
            pivots.append(row)
            pivots.sort(reverse=True)
            rank += 1
    return rank


def parse_alist(text: str) -> CodeGraph:
    """Parse MacKay-style alist text into a validated CodeGraph.

    Layout: ``N N_c`` header, max degrees, N variable degrees, N_c check
    degrees, then 1-based neighbor lists (variables first).  Zero padding is
    stripped.  Both adjacency views must agree.
    """
    lines = text.splitlines()

    def ints(lineno: int, expect_len: int | None = None) -> list[int]:
        if lineno > len(lines):
            raise AlistParseError("unexpected end of file", line=lineno)
        try:
            vals = [int(tok) for tok in lines[lineno - 1].split()]
        except ValueError:
            raise AlistParseError("non-integer token", line=lineno) from None
        if expect_len is not None and len(vals) != expect_len:
            raise AlistParseError(
                f"expected {expect_len} entries, got {len(vals)}", line=lineno)
        return vals

    header = ints(1)
    if len(header) != 2:
        raise AlistParseError("header must be 'N N_c'", line=1)
    n_vars, n_checks = header
    if n_vars < 1 or n_checks < 1:
        raise AlistParseError("dimensions must be positive", line=1)
    ints(2)  # max degrees; informational only
    var_degs = ints(3)
    if len(var_degs) != n_vars:
        raise AlistParseError(
            f"degree list length {len(var_degs)} != N = {n_vars}", line=3)
    check_degs = ints(4)
    if len(check_degs) != n_checks:
        raise AlistParseError(
            f"degree list length {len(check_degs)} != N_c = {n_checks}", line=4)
    if sum(var_degs) != sum(check_degs):
        raise AlistParseError("variable and check degree sums differ", line=4)

    var_lists = []
    for v in range(n_vars):
        lineno = 5 + v
        vals = [x for x in ints(lineno) if x != 0]
        if len(vals) != var_degs[v]:
            raise AlistParseError(
                f"variable {v + 1} lists {len(vals)} neighbors, degree says "
                f"{var_degs[v]}", line=lineno)
        if any(not 1 <= x <= n_checks for x in vals):
            raise AlistParseError(f"check index out of range", line=lineno)
        if len(set(vals)) != len(vals):
            raise AlistParseError(f"duplicate edge at variable {v + 1}", line=lineno)
        var_lists.append([x - 1 for x in vals])

    check_lists = []
    for c in range(n_checks):
        lineno = 5 + n_vars + c
        vals = [x for x in ints(lineno) if x != 0]
        if len(vals) != check_degs[c]:
            raise AlistParseError(
                f"check {c + 1} lists {len(vals)} neighbors, degree says "
                f"{check_degs[c]}", line=lineno)
        if any(not 1 <= x <= n_vars for x in vals):
            raise AlistParseError(f"variable index out of range", line=lineno)
        if len(set(vals)) != len(vals):
            raise AlistParseError(f"duplicate edge at check {c + 1}", line=lineno)
        check_lists.append([x - 1 for x in vals])

    # Cross-validate the two views.
    from_checks = [set() for _ in range(n_vars)]
    for c, lst in enumerate(check_lists):
        for v in lst:
            from_checks[v].add(c)
    for v, lst in enumerate(var_lists):
        if set(lst) != from_checks[v]:
            raise AlistParseError(
                f"adjacency views disagree at variable {v + 1}", line=5 + v)
    return CodeGraph(n_vars, check_lists)


def write_alist(graph: CodeGraph) -> str:
    """Canonical alist text: ascending unpadded neighbor lists, 1-based."""
    var_lists = [sorted(graph.var_neighbors(v) + 1) for v in range(graph.n_vars)]
    check_lists = [sorted(graph.check_neighbors(c) + 1) for c in range(graph.n_checks)]
    out = [
        f"{graph.n_vars} {graph.n_checks}",
        f"{int(graph.var_degrees.max())} {int(graph.check_degrees.max())}",
        " ".join(str(len(l)) for l in var_lists),
        " ".join(str(len(l)) for l in check_lists),
    ]
    out.extend(" ".join(str(x) for x in lst) for lst in var_lists)
    out.extend(" ".join(str(x) for x in lst) for lst in check_lists)
    return "\n".join(out) + "\n"


def _near_checks(v: int, var_lists, check_lists) -> set:
    """Checks within Tanner distance 3 of variable v; joining one makes a 4-cycle."""
    near = set(var_lists[v])
    for c in var_lists[v]:
        for u in check_lists[c]:
            near.update(var_lists[u])
    return near


def generate_regular_code(d_v: int, d_c: int, n_vars: int, seed: int,
                          girth_min: int = 6) -> CodeGraph:
    """Progressive-edge-growth construction of a (d_v, d_c)-regular graph.

    Edges are placed round-robin (every variable gets its k-th edge before any
    gets its (k+1)-th): each edge goes to a check with remaining capacity
    outside the variable's distance-3 neighborhood (no 4-cycles), minimum
    current degree first, seeded random tie-break.  When the neighborhood
    covers every check with capacity, an edge of a full far check is swapped
    out to a check with capacity; if repair fails the construction restarts
    with the next substream.  Deterministic given the seed.  girth_min = 6
    demands a 4-cycle-free result; girth_min = 4 accepts nearer checks.
    """
    if girth_min not in (4, 6):
        raise ValidationError(f"girth_min must be 4 or 6, got {girth_min}")
    if d_v < 1 or d_c < 2 or n_vars < d_c:
        raise ConstructionError(f"infeasible degrees ({d_v}, {d_c}) for N={n_vars}")
    if (n_vars * d_v) % d_c:
        raise ConstructionError(
            f"N*d_v = {n_vars * d_v} not divisible by d_c = {d_c}")
    n_checks = n_vars * d_v // d_c
    rng = np.random.default_rng(seed)
    last_error = "construction failed"
    for _ in range(50):
        try:
            check_lists = _peg_attempt(d_v, d_c, n_vars, n_checks, rng, girth_min)
        except ConstructionError as err:
            last_error = str(err)
            continue
        graph = CodeGraph(n_vars, check_lists)
        if girth_min >= 6 and has_four_cycle(graph):
            raise ConstructionError("construction produced a 4-cycle")
        return graph
    raise ConstructionError(last_error)


def _peg_attempt(d_v, d_c, n_vars, n_checks, rng, girth_min):
    check_deg = np.zeros(n_checks, dtype=np.int64)
    check_lists: list[list[int]] = [[] for _ in range(n_checks)]
    var_lists: list[list[int]] = [[] for _ in range(n_vars)]

    def place(v: int):
        near = _near_checks(v, var_lists, check_lists)
        exclude = np.zeros(n_checks, dtype=bool)
        if near:
            exclude[list(near)] = True
        pool = np.flatnonzero((check_deg < d_c) & ~exclude)
        if pool.size == 0 and girth_min < 6:
            dup = np.zeros(n_checks, dtype=bool)
            dup[var_lists[v]] = True
            pool = np.flatnonzero((check_deg < d_c) & ~dup)
        if pool.size == 0:
            pool = _repair(v, near)
        degs = check_deg[pool]
        cand = pool[degs == degs.min()]
        c = int(cand[rng.integers(cand.size)])
        check_deg[c] += 1
        check_lists[c].append(v)
        var_lists[v].append(c)

    def _repair(v: int, near: set) -> np.ndarray:
        # Free a slot on some check far from v by moving one of its edges to
        # a check that still has capacity.
        far = [c for c in range(n_checks) if c not in near]
        rng.shuffle(far)
        cap = [c for c in range(n_checks) if check_deg[c] < d_c]
        for c_far in far[:256]:
            for u in list(check_lists[c_far]):
                u_near = _near_checks(u, var_lists, check_lists)
                for c_new in cap:
                    if c_new in u_near or check_deg[c_new] >= d_c:
                        continue
                    check_lists[c_far].remove(u)
                    var_lists[u].remove(c_far)
                    check_deg[c_far] -= 1
                    check_lists[c_new].append(u)
                    var_lists[u].append(c_new)
                    check_deg[c_new] += 1
                    return np.array([c_far], dtype=np.int64)
        raise ConstructionError(
            f"cannot keep girth >= {girth_min} at variable {v}; "
            f"reduce N or girth_min")

    for _ in range(d_v):
        for v in range(n_vars):
            place(v)
    return check_lists


def has_four_cycle(graph: CodeGraph) -> bool:
    """True iff two checks share two variables (neighbor-pair scan)."""
    seen = set()
    for v in range(graph.n_vars):
        checks = sorted(graph.var_neighbors(v))
        for i in range(len(checks)):
            for j in range(i + 1, len(checks)):
                pair = (checks[i], checks[j])
                if pair in seen:
                    return True
                seen.add(pair)
    return False


class Gf2Encoder:
    """Systematic GF(2) encoder derived from the parity-check matrix by
    Gaussian elimination.

    Information bits occupy the non-pivot columns; pivot-column bits are
    solved from the reduced system so that H b = 0 holds for every output.
    """

    def __init__(self, graph: CodeGraph):
        n = graph.n_vars
        rows = []
        for c in range(graph.n_checks):
            mask = 0
            for v in graph.check_neighbors(c):
                mask |= 1 << int(v)
            rows.append(mask)
        pivots = {}  # column -> reduced row
        for row in rows:
            for col, prow in pivots.items():
                if (row >> col) & 1:
                    row ^= prow
            if row:
                col = row.bit_length() - 1
                pivots[col] = row
        # Back-substitute to reduced row echelon form.
        cols = sorted(pivots)
        for i, col in enumerate(cols):
            for other in cols[i + 1:]:
                if (pivots[other] >> col) & 1:
                    pivots[other] ^= pivots[col]
        self.n_vars = n
        self.pivot_cols = np.array(sorted(pivots), dtype=np.int64)
        self.info_cols = np.array(
            sorted(set(range(n)) - set(pivots)), dtype=np.int64)
        self._rows = [pivots[c] for c in sorted(pivots)]

    @property
    def k_info(self) -> int:
        return int(self.info_cols.size)

    def encode(self, info_bits: np.ndarray) -> np.ndarray:
        """Map k_info information bits to a codeword b with H b^T = 0."""
        info_bits = np.asarray(info_bits, dtype=np.uint8)
        if info_bits.shape != (self.k_info,):
            raise ValidationError(
                f"expected {self.k_info} information bits, got {info_bits.shape}")
        word = 0
        for col, bit in zip(self.info_cols, info_bits):
            if bit:
                word |= 1 << int(col)
        for col, row in zip(self.pivot_cols, self._rows):
            if ((row & word).bit_count()) & 1:
                word |= 1 << int(col)
        out = np.zeros(self.n_vars, dtype=np.uint8)
        for col in range(self.n_vars):
            out[col] = (word >> col) & 1
        return out
