"""Readers and writers for Matrix Market symmetric matrices, edge lists and vectors."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .linalg import StructuralError, WeightedGraph


class ParseError(ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _number(tok: str, path, lineno: int, kind=float):
    try:
        return kind(tok)
    except ValueError:
        raise ParseError(path, lineno, f"expected {kind.__name__}, got {tok!r}") from None


def read_matrix_market(path) -> np.ndarray:
    """Read a real ``coordinate`` Matrix Market file into a dense symmetric array.

    Both ``symmetric`` (lower or upper triangle stored) and ``general`` files
    are accepted; a general file must itself be symmetric.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ParseError(path, 1, "empty file")
    head = lines[0].split()
    if len(head) != 5 or head[0].lower() != "%%matrixmarket":
        raise ParseError(path, 1, "missing %%MatrixMarket header")
    obj, fmt, field, sym = (h.lower() for h in head[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise ParseError(path, 1, f"unsupported layout {obj} {fmt}")
    if field not in ("real", "integer", "double"):
        raise ParseError(path, 1, f"unsupported field {field}")
    if sym not in ("symmetric", "general"):
        raise ParseError(path, 1, f"unsupported symmetry {sym}")

    size = None
    M = None
    count = 0
    for lineno, raw in enumerate(lines[1:], start=2):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        toks = text.split()
        if size is None:
            if len(toks) != 3:
                raise ParseError(path, lineno, "size line must be 'rows cols nnz'")
            rows, cols, nnz = (_number(t, path, lineno, int) for t in toks)
            if rows != cols:
                raise ParseError(path, lineno, f"matrix is not square ({rows}x{cols})")
            size = (rows, nnz)
            M = np.zeros((rows, rows))
            continue
        if len(toks) != 3:
            raise ParseError(path, lineno, "entry line must be 'i j value'")
        i = _number(toks[0], path, lineno, int) - 1
        j = _number(toks[1], path, lineno, int) - 1
        v = _number(toks[2], path, lineno)
        n = size[0]
        if not (0 <= i < n and 0 <= j < n):
            raise ParseError(path, lineno, f"index ({i + 1}, {j + 1}) out of range")
        if not np.isfinite(v):
            raise ParseError(path, lineno, f"non-finite value {toks[2]}")
        M[i, j] = v
        if sym == "symmetric":
            M[j, i] = v
        count += 1
    if size is None:
        raise ParseError(path, len(lines), "missing size line")
    if count != size[1]:
        raise ParseError(path, len(lines), f"expected {size[1]} entries, found {count}")
    if sym == "general" and not np.array_equal(M, M.T):
        i, j = np.argwhere(M != M.T)[0]
        raise StructuralError(f"{path}: general matrix is not symmetric at ({i + 1}, {j + 1})")
    return M


def write_matrix_market(path, M, comment: str | None = None) -> None:
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    iu, ju = np.nonzero(np.tril(M))
    out = ["%%MatrixMarket matrix coordinate real symmetric"]
    if comment:
        out += [f"% {line}" for line in comment.splitlines()]
    out.append(f"{n} {n} {len(iu)}")
    out += [f"{i + 1} {j + 1} {float(M[i, j])!r}" for i, j in zip(iu, ju)]
    Path(path).write_text("\n".join(out) + "\n")


def read_edge_list(path, n: int | None = None) -> WeightedGraph:
    """Read ``i j w`` lines (0-based ids, ``#`` comments) into a graph.

    The node count defaults to one more than the largest id.
    """
    path = Path(path)
    edges = []
    seen = {}
    top = -1
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        toks = text.split()
        if len(toks) != 3:
            raise ParseError(path, lineno, "edge line must be 'i j w'")
        i = _number(toks[0], path, lineno, int)
        j = _number(toks[1], path, lineno, int)
        w = _number(toks[2], path, lineno)
        if i < 0 or j < 0:
            raise ParseError(path, lineno, "node ids must be non-negative")
        if i == j:
            raise ParseError(path, lineno, f"self-loop at node {i}")
        if not (np.isfinite(w) and w > 0):
            raise ParseError(path, lineno, f"weight must be positive, got {toks[2]}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(path, lineno, f"duplicate edge {key} (first on line {seen[key]})")
        seen[key] = lineno
        top = max(top, i, j)
        edges.append((i, j, w))
    return WeightedGraph(top + 1 if n is None else n, tuple(edges))


def write_edge_list(path, G: WeightedGraph) -> None:
    Path(path).write_text("".join(f"{i} {j} {w!r}\n" for i, j, w in G.edges))


def read_vector(path) -> np.ndarray:
    """Whitespace-separated reals, ``#`` comments allowed."""
    path = Path(path)
    vals = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        for tok in raw.split("#", 1)[0].split():
            vals.append(_number(tok, path, lineno))
    return np.array(vals, dtype=float)


def write_vector(path, v) -> None:
    Path(path).write_text("".join(f"{float(x)!r}\n" for x in np.asarray(v, dtype=float)))
