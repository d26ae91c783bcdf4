"""Linear block code construction, systematic encoding and padding.

Bit words are numpy arrays of {0, 1} with dtype uint8.  A trailing batch
convention is used throughout: operations accept a single word of shape
(n,) or a batch of shape (B, n) and return matching shapes.
"""

import math

import numpy as np

__all__ = [
    "ParityCheckMatrix",
    "LinearCode",
    "AlistFormatError",
    "build_regular_code",
    "load_alist",
    "save_alist",
    "derive_generator",
    "encode",
    "syndrome",
    "zero_pad",
    "strip_pad_llrs",
]


class AlistFormatError(ValueError):
    """Raised when alist text does not parse or is internally inconsistent."""


class ParityCheckMatrix:
    """Sparse binary parity-check matrix, stored as per-row column indices.

    Attributes
    ----------
    rows, cols : int
        Number of check equations and code bits.
    row_index_lists : tuple of tuple of int
        Sorted column indices of the ones in each row.
    col_weights, row_weights : ndarray of int
        Number of ones per column / per row.
    """

    def __init__(self, cols, row_index_lists):
        self.cols = int(cols)
        self.row_index_lists = tuple(tuple(sorted(int(i) for i in r)) for r in row_index_lists)
        self.rows = len(self.row_index_lists)
        if self.rows > self.cols:
            raise ValueError(f"more rows ({self.rows}) than columns ({self.cols})")
        col_w = np.zeros(self.cols, dtype=np.int64)
        for r, idx in enumerate(self.row_index_lists):
            if len(set(idx)) != len(idx):
                raise ValueError(f"duplicate column index in row {r}")
            for c in idx:
                if not 0 <= c < self.cols:
                    raise ValueError(f"column index {c} out of range in row {r}")
                col_w[c] += 1
        if (col_w == 0).any():
            bad = int(np.flatnonzero(col_w == 0)[0])
            raise ValueError(f"column {bad} has no parity check (unprotected bit)")
        self.col_weights = col_w
        self.row_weights = np.array([len(r) for r in self.row_index_lists], dtype=np.int64)

    @property
    def is_regular(self):
        return (
            len(set(self.col_weights.tolist())) == 1
            and len(set(self.row_weights.tolist())) == 1
        )

    @property
    def col_weight(self):
        """Common column weight; only defined for regular matrices."""
        if len(set(self.col_weights.tolist())) != 1:
            raise ValueError("matrix has irregular column weights")
        return int(self.col_weights[0])

    @property
    def row_weight(self):
        if len(set(self.row_weights.tolist())) != 1:
            raise ValueError("matrix has irregular row weights")
        return int(self.row_weights[0])

    def to_dense(self):
        H = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for r, idx in enumerate(self.row_index_lists):
            H[r, list(idx)] = 1
        return H

    @classmethod
    def from_dense(cls, H):
        H = np.asarray(H)
        return cls(H.shape[1], [np.flatnonzero(row).tolist() for row in H])

    def __eq__(self, other):
        return (
            isinstance(other, ParityCheckMatrix)
            and self.cols == other.cols
            and self.row_index_lists == other.row_index_lists
        )

    def __repr__(self):
        return f"ParityCheckMatrix({self.rows}x{self.cols}, {int(self.row_weights.sum())} ones)"


def build_regular_code(n, col_weight, row_weight, seed, max_attempts=200):
    """Construct a random (col_weight, row_weight)-regular parity-check matrix.

    Columns are filled one at a time with distinct rows that still have
    spare capacity, preferring assignments that do not close a length-4
    cycle (two columns sharing the same row pair).  If the greedy pass
    dead-ends, the whole construction restarts with fresh randomness, up
    to ``max_attempts`` times; 4-cycle avoidance is then relaxed before
    regularity ever is.  Deterministic for a given seed.
    """
    n = int(n)
    col_weight = int(col_weight)
    row_weight = int(row_weight)
    if col_weight < 2:
        raise ValueError(f"column weight must be >= 2, got {col_weight}")
    if (n * col_weight) % row_weight != 0:
        raise ValueError(
            f"infeasible weights: n*col_weight = {n * col_weight} is not divisible "
            f"by row_weight = {row_weight}, so no integral row count exists"
        )
    m = n * col_weight // row_weight
    if col_weight > m:
        raise ValueError(f"column weight {col_weight} exceeds row count {m}")
    rng = np.random.default_rng(seed)

    for attempt in range(max_attempts):
        avoid_4cycles = attempt < max_attempts // 2
        capacity = np.full(m, row_weight, dtype=np.int64)
        used_pairs = set()
        columns = []
        ok = True
        for _ in range(n):
            candidates = np.flatnonzero(capacity > 0)
            rng.shuffle(candidates)
            # fill fullest-capacity rows first so the tail never starves
            candidates = candidates[np.argsort(-capacity[candidates], kind="stable")]
            picked = []
            for r in candidates:
                if len(picked) == col_weight:
                    break
                if avoid_4cycles and any(
                    (min(r, p), max(r, p)) in used_pairs for p in picked
                ):
                    continue
                picked.append(int(r))
            if len(picked) < col_weight:
                ok = False
                break
            for i, a in enumerate(picked):
                for b in picked[i + 1 :]:
                    used_pairs.add((min(a, b), max(a, b)))
            capacity[picked] -= 1
            columns.append(sorted(picked))
        if ok and (capacity == 0).all():
            rows = [[] for _ in range(m)]
            for c, picked in enumerate(columns):
                for r in picked:
                    rows[r].append(c)
            return ParityCheckMatrix(n, rows)
    raise ValueError(
        f"could not realize a ({col_weight},{row_weight})-regular {m}x{n} matrix "
        f"within {max_attempts} attempts"
    )


def save_alist(H):
    """Serialize a parity-check matrix to canonical alist text."""
    n, m = H.cols, H.rows
    col_lists = [[] for _ in range(n)]
    for r, idx in enumerate(H.row_index_lists):
        for c in idx:
            col_lists[c].append(r)
    wc_max = int(H.col_weights.max())
    wr_max = int(H.row_weights.max()) if m else 0
    lines = [
        f"{n} {m}",
        f"{wc_max} {wr_max}",
        " ".join(str(int(w)) for w in H.col_weights),
        " ".join(str(int(w)) for w in H.row_weights),
    ]
    for c in range(n):
        entries = [r + 1 for r in col_lists[c]] + [0] * (wc_max - len(col_lists[c]))
        lines.append(" ".join(str(e) for e in entries))
    for r in range(m):
        entries = [c + 1 for c in H.row_index_lists[r]] + [0] * (wr_max - len(H.row_index_lists[r]))
        lines.append(" ".join(str(e) for e in entries))
    return "\n".join(lines) + "\n"


def load_alist(text):
    """Parse alist text into a ParityCheckMatrix.

    Raises AlistFormatError with the offending 1-based line number when the
    header and body disagree.
    """
    raw = [ln for ln in text.splitlines()]
    lines = [(i + 1, ln.split()) for i, ln in enumerate(raw) if ln.strip()]
    if not lines:
        raise AlistFormatError("line 1: empty alist text")

    def ints(entry, expect=None):
        lineno, toks = entry
        try:
            vals = [int(t) for t in toks]
        except ValueError:
            raise AlistFormatError(f"line {lineno}: non-integer token") from None
        if expect is not None and len(vals) != expect:
            raise AlistFormatError(
                f"line {lineno}: expected {expect} entries, found {len(vals)}"
            )
        return lineno, vals

    _, header = ints(lines[0], 2)
    n, m = header
    if n <= 0 or m <= 0:
        raise AlistFormatError("line 1: matrix dimensions must be positive")
    if len(lines) < 4 + n + m:
        raise AlistFormatError(
            f"line {len(raw)}: truncated alist, need {4 + n + m} non-empty lines, found {len(lines)}"
        )
    _, (wc_max, wr_max) = ints(lines[1], 2)
    _, col_w = ints(lines[2], n)
    _, row_w = ints(lines[3], m)

    col_lists = []
    for c in range(n):
        lineno, vals = ints(lines[4 + c])
        nz = [v for v in vals if v != 0]
        if len(nz) != col_w[c]:
            raise AlistFormatError(
                f"line {lineno}: column {c} lists {len(nz)} entries, header says {col_w[c]}"
            )
        if any(not 1 <= v <= m for v in nz):
            raise AlistFormatError(f"line {lineno}: row index out of range 1..{m}")
        col_lists.append([v - 1 for v in nz])

    rows = [[] for _ in range(m)]
    for c, rs in enumerate(col_lists):
        for r in rs:
            rows[r].append(c)

    for r in range(m):
        lineno, vals = ints(lines[4 + n + r])
        nz = sorted(v - 1 for v in vals if v != 0)
        if len(nz) != row_w[r]:
            raise AlistFormatError(
                f"line {lineno}: row {r} lists {len(nz)} entries, header says {row_w[r]}"
            )
        if nz != sorted(rows[r]):
            raise AlistFormatError(
                f"line {lineno}: row {r} disagrees with the column-index section"
            )
    return ParityCheckMatrix(n, rows)


class LinearCode:
    """Systematic linear code derived from a parity-check matrix.

    ``col_perm`` maps permuted coordinates to original codeword positions:
    positions ``col_perm[:k_info]`` of a codeword carry the message bits
    verbatim.  ``G`` is the systematic generator in permuted coordinates,
    G = [I | P^T].
    """

    def __init__(self, H, G_permuted, col_perm, rank):
        self.H = H
        self.n = H.cols
        self.rank = int(rank)
        self.k_info = self.n - self.rank
        self.col_perm = np.asarray(col_perm, dtype=np.int64)
        self.G = np.zeros((self.k_info, self.n), dtype=np.uint8)
        self.G[:, self.col_perm] = G_permuted
        self.info_positions = self.col_perm[: self.k_info].copy()

    @property
    def rate(self):
        return self.k_info / self.n

    def __repr__(self):
        return f"LinearCode(n={self.n}, k={self.k_info}, rank={self.rank})"


def derive_generator(H):
    """Gauss-eliminate H over GF(2) and return the systematic LinearCode.

    Pivot columns are chosen left to right (lowest index wins ties), so the
    result is deterministic.  Rank-deficient H is accepted; the actual rank
    is recorded on the returned code and k_info = n - rank.
    """
    dense = H.to_dense().copy()
    m, n = dense.shape
    pivot_cols = []
    r = 0
    for c in range(n):
        hits = np.flatnonzero(dense[r:, c])
        if hits.size == 0:
            continue
        p = int(hits[0]) + r
        if p != r:
            dense[[r, p]] = dense[[p, r]]
        elim = dense[:, c].astype(bool).copy()
        elim[r] = False
        dense[elim] ^= dense[r]
        pivot_cols.append(c)
        r += 1
        if r == m:
            break
    rank = r
    pivot_set = set(pivot_cols)
    free_cols = [c for c in range(n) if c not in pivot_set]
    k = n - rank
    # row i of the reduced matrix reads: c[pivot_i] = sum_j Q[i, j] * c[free_j]
    Q = dense[:rank][:, free_cols]
    G_permuted = np.concatenate([np.eye(k, dtype=np.uint8), Q.T.astype(np.uint8)], axis=1)
    col_perm = np.array(free_cols + pivot_cols, dtype=np.int64)
    return LinearCode(H, G_permuted, col_perm, rank)


def _as_bits(b):
    b = np.asarray(b)
    if not np.isin(b, (0, 1)).all():
        raise ValueError("bit words must contain only 0 and 1")
    return b.astype(np.uint8)


def encode(code, b):
    """Systematically encode message bits; accepts (k,) or (B, k)."""
    b = _as_bits(b)
    if b.shape[-1] != code.k_info:
        raise ValueError(f"message length {b.shape[-1]} != k_info {code.k_info}")
    return (b.astype(np.int32) @ code.G.astype(np.int32) % 2).astype(np.uint8)


def syndrome(H, c):
    """GF(2) product H c^T; accepts (n,) or (B, n)."""
    c = _as_bits(c)
    if c.shape[-1] != H.cols:
        raise ValueError(f"codeword length {c.shape[-1]} != n {H.cols}")
    dense = H.to_dense().astype(np.int32)
    return (c.astype(np.int32) @ dense.T % 2).astype(np.uint8)


def zero_pad(c, bits_per_symbol):
    """Append the fewest zero bits making the length a symbol multiple."""
    c = _as_bits(c)
    n = c.shape[-1]
    pad = (-n) % int(bits_per_symbol)
    if pad == 0:
        return c
    width = [(0, 0)] * (c.ndim - 1) + [(0, pad)]
    return np.pad(c, width)


def strip_pad_llrs(llrs, n):
    """Drop trailing pad-position LLRs, keeping the first n."""
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape[-1] < n:
        raise ValueError(f"only {llrs.shape[-1]} LLRs for codeword length {n}")
    return llrs[..., :n]
