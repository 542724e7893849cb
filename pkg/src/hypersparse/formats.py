"""Text formats for hypergraphs and overestimates.

``.hgr`` (graphical)::

    HGR 1
    <n> <k>
    <weight> <size> <v_0> ... <v_{size-1}>      (k lines, 0-based vertices)

``.mhg`` (matrix)::

    MHG 1
    <m> <n> <k> <nnz>
    <k group weights> | unit
    <group_id>                                  (m lines)
    <row> <col> <value>                         (nnz lines, strictly increasing (row, col))

``.tau``::

    TAU 1
    <k> <m> <nu> <T>
    <tau_i>                                     (k lines)
    <wbar_j>                                    (m lines)

Lines starting with ``#`` and blank lines are skipped. Floats are written
with ``repr`` so they read back bit-exactly.
"""

import os
import tempfile

import numpy as np
import scipy.sparse as sp

from .errors import FormatError, InvalidArgument
from .hypergraph import GraphicalHypergraph, MatrixHypergraph
from .overestimates import GroupOverestimates

HGR_MAGIC = "HGR 1"
MHG_MAGIC = "MHG 1"
TAU_MAGIC = "TAU 1"


def _fmt(x):
    return repr(float(x))


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Lines:
    """Iterator over meaningful lines that remembers line numbers."""

    def __init__(self, text, path=None):
        self.path = path
        self._items = [(i + 1, ln.strip()) for i, ln in enumerate(text.split("\n"))
                       if ln.strip() and not ln.lstrip().startswith("#")]
        self._pos = 0

    def error(self, message, line=None):
        if line is None:
            line = self._items[self._pos - 1][0] if self._pos else 1
        return FormatError(message, line, self.path)

    def next(self, what):
        if self._pos >= len(self._items):
            last = self._items[-1][0] if self._items else 1
            raise FormatError(f"unexpected end of file, expected {what}", last, self.path)
        item = self._items[self._pos]
        self._pos += 1
        return item

    def fields(self, what, count=None):
        _, text = self.next(what)
        parts = text.split()
        if count is not None and len(parts) != count:
            raise self.error(f"expected {count} fields for {what}, got {len(parts)}")
        return parts

    def ints(self, what, count=None):
        try:
            return [int(p) for p in self.fields(what, count)]
        except ValueError:
            raise self.error(f"expected integers for {what}") from None

    def finish(self):
        if self._pos < len(self._items):
            line, _ = self._items[self._pos]
            raise FormatError("unexpected trailing content", line, self.path)


def _float(lines, token, what):
    try:
        x = float(token)
    except ValueError:
        raise lines.error(f"invalid number {token!r} for {what}") from None
    if not np.isfinite(x):
        raise lines.error(f"non-finite {what}")
    return x


def _magic(lines, magic):
    _, text = lines.next("header")
    if text != magic:
        raise lines.error(f"expected header {magic!r}, got {text!r}")


def sniff(text):
    """``"hgr"``, ``"mhg"`` or ``"tau"`` from the first meaningful line."""
    for ln in text.split("\n"):
        s = ln.strip()
        if not s or s.startswith("#"):
            continue
        for kind, magic in (("hgr", HGR_MAGIC), ("mhg", MHG_MAGIC), ("tau", TAU_MAGIC)):
            if s == magic:
                return kind
        break
    raise FormatError("unrecognized file header")


def parse_hgr(text, path=None) -> GraphicalHypergraph:
    lines = _Lines(text, path)
    _magic(lines, HGR_MAGIC)
    n, k = lines.ints("'<n> <k>'", 2)
    if n < 1 or k < 0:
        raise lines.error(f"invalid sizes n={n}, k={k}")
    edges, weights = [], []
    for e in range(k):
        parts = lines.fields(f"hyperedge {e}")
        if len(parts) < 2:
            raise lines.error("hyperedge line needs a weight and a size")
        w = _float(lines, parts[0], "weight")
        if w < 0:
            raise lines.error("negative hyperedge weight")
        try:
            size = int(parts[1])
            verts = [int(v) for v in parts[2:]]
        except ValueError:
            raise lines.error("expected integer size and vertices") from None
        if size != len(verts):
            raise lines.error(f"declared size {size} but {len(verts)} vertices listed")
        if size < 2:
            raise lines.error("hyperedge has fewer than 2 vertices")
        if len(set(verts)) != len(verts):
            raise lines.error("duplicate vertex in hyperedge")
        if min(verts) < 0 or max(verts) >= n:
            raise lines.error(f"vertex out of range [0, {n})")
        edges.append(verts)
        weights.append(w)
    lines.finish()
    return GraphicalHypergraph.from_edges(n, edges, weights)


def format_hgr(G: GraphicalHypergraph):
    out = [HGR_MAGIC, f"{G.n} {G.k}"]
    for e in range(G.k):
        verts = G.edge(e)
        out.append(" ".join([_fmt(G.weights[e]), str(len(verts))] + [str(int(v)) for v in verts]))
    return "\n".join(out) + "\n"


def parse_mhg(text, path=None) -> MatrixHypergraph:
    lines = _Lines(text, path)
    _magic(lines, MHG_MAGIC)
    m, n, k, nnz = lines.ints("'<m> <n> <k> <nnz>'", 4)
    if m < 0 or n < 1 or k < 0 or nnz < 0:
        raise lines.error("invalid sizes")
    parts = lines.fields("group weights")
    if parts == ["unit"]:
        gw = None
    else:
        if len(parts) != k:
            raise lines.error(f"expected {k} group weights or 'unit', got {len(parts)} fields")
        gw = np.array([_float(lines, p, "group weight") for p in parts])
        if np.any(gw < 0):
            raise lines.error("negative group weight")
    row_group = np.empty(m, dtype=np.int64)
    for j in range(m):
        (g,) = lines.ints(f"group id of row {j}", 1)
        if not 0 <= g < k:
            raise lines.error(f"group id {g} out of range [0, {k})")
        row_group[j] = g
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    prev = (-1, -1)
    for t in range(nnz):
        parts = lines.fields("matrix entry", 3)
        try:
            i, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise lines.error("expected integer row and column") from None
        if not (0 <= i < m and 0 <= c < n):
            raise lines.error(f"entry ({i}, {c}) out of range")
        if (i, c) <= prev:
            raise lines.error("entries must be in strictly increasing (row, col) order")
        prev = (i, c)
        rows[t], cols[t], vals[t] = i, c, _float(lines, parts[2], "matrix value")
    lines.finish()
    counts = np.bincount(row_group, minlength=k)
    if np.any(counts == 0):
        raise FormatError(f"group {int(np.argmin(counts))} has no rows", None, path)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))
    try:
        return MatrixHypergraph(A, row_group, gw)
    except InvalidArgument as exc:
        raise FormatError(str(exc), None, path) from None


def format_mhg(G: MatrixHypergraph):
    A = G.rows
    out = [MHG_MAGIC, f"{G.m} {G.n} {G.k} {A.nnz}"]
    out.append("unit" if G.group_weights is None else " ".join(_fmt(v) for v in G.group_weights))
    out.extend(str(int(g)) for g in G.row_group)
    for i in range(G.m):
        for t in range(A.indptr[i], A.indptr[i + 1]):
            out.append(f"{i} {int(A.indices[t])} {_fmt(A.data[t])}")
    return "\n".join(out) + "\n"


def parse_tau(text, path=None) -> GroupOverestimates:
    lines = _Lines(text, path)
    _magic(lines, TAU_MAGIC)
    parts = lines.fields("'<k> <m> <nu> <T>'", 4)
    try:
        k, m, T = int(parts[0]), int(parts[1]), int(parts[3])
    except ValueError:
        raise lines.error("expected integer k, m and T") from None
    nu = _float(lines, parts[2], "nu")
    tau = np.array([_float(lines, lines.fields("tau", 1)[0], "tau") for _ in range(k)])
    w = np.array([_float(lines, lines.fields("witness weight", 1)[0], "witness weight") for _ in range(m)])
    lines.finish()
    return GroupOverestimates(tau, w, nu, T)


def format_tau(O: GroupOverestimates):
    out = [TAU_MAGIC, f"{len(O.tau)} {len(O.witness_weights)} {_fmt(O.nu)} {O.iterations}"]
    out.extend(_fmt(t) for t in O.tau)
    out.extend(_fmt(w) for w in O.witness_weights)
    return "\n".join(out) + "\n"


def _read(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def read_hypergraph(path):
    """Read a ``.hgr`` or ``.mhg`` file, chosen by its header line."""
    text = _read(path)
    kind = sniff(text)
    if kind == "hgr":
        return parse_hgr(text, path)
    if kind == "mhg":
        return parse_mhg(text, path)
    raise FormatError("expected a hypergraph file, found overestimates", 1, path)


def read_hgr(path):
    return parse_hgr(_read(path), path)


def read_mhg(path):
    return parse_mhg(_read(path), path)


def read_tau(path):
    return parse_tau(_read(path), path)


def write_hgr(path, G):
    atomic_write(path, format_hgr(G))


def write_mhg(path, G):
    atomic_write(path, format_mhg(G))


def write_tau(path, O):
    atomic_write(path, format_tau(O))
