"""Plain-text mesh format.

    vem-mesh 1
    vertices N
    x y            (N lines, 17 significant digits)
    cells M
    i j k ...      (M lines, 0-based counterclockwise vertex indices)
    domain square|lshape
"""

from pathlib import Path
from typing import List, Union

import numpy as np

from src.errors import MeshFormatError
from src.mesh.builder import validate_mesh
from src.mesh.types import Domain, Mesh

HEADER = "vem-mesh 1"


def write_mesh(mesh: Mesh, path: Union[str, Path]) -> None:
    lines = [HEADER, f"vertices {mesh.n_vertices}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines.append(f"cells {mesh.n_cells}")
    lines += [" ".join(str(v) for v in cell) for cell in mesh.cells]
    lines.append(f"domain {mesh.domain.value}")
    Path(path).write_text("\n".join(lines) + "\n")


def _expect(tokens: List[str], keyword: str, lineno: int) -> int:
    if len(tokens) != 2 or tokens[0] != keyword:
        raise MeshFormatError(f"line {lineno}: expected '{keyword} <count>'")
    try:
        return int(tokens[1])
    except ValueError as exc:
        raise MeshFormatError(f"line {lineno}: bad {keyword} count {tokens[1]!r}") from exc


def read_mesh(path: Union[str, Path]) -> Mesh:
    """Read a mesh file and check every tessellation invariant.

    Nonconvex cells are accepted as long as they are simple.
    """
    lines = [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0] != HEADER:
        raise MeshFormatError(f"{path}: missing '{HEADER}' header")
    pos = 1
    try:
        n_vertices = _expect(lines[pos].split(), "vertices", pos + 1)
        pos += 1
        vertices = np.array(
            [[float(t) for t in lines[pos + i].split()] for i in range(n_vertices)], dtype=float
        )
        if vertices.shape != (n_vertices, 2):
            raise MeshFormatError(f"{path}: vertex lines must hold exactly two coordinates")
        pos += n_vertices
        n_cells = _expect(lines[pos].split(), "cells", pos + 1)
        pos += 1
        cells = tuple(tuple(int(t) for t in lines[pos + i].split()) for i in range(n_cells))
        pos += n_cells
        tokens = lines[pos].split()
    except (IndexError, ValueError) as exc:
        raise MeshFormatError(f"{path}: truncated or malformed near line {pos + 1}") from exc
    if len(tokens) != 2 or tokens[0] != "domain":
        raise MeshFormatError(f"{path}: expected 'domain square|lshape'")
    try:
        domain = Domain(tokens[1])
    except ValueError as exc:
        raise MeshFormatError(f"{path}: unknown domain {tokens[1]!r}") from exc
    for ci, cell in enumerate(cells):
        if any(v < 0 or v >= n_vertices for v in cell):
            raise MeshFormatError(f"{path}: cell {ci} references a missing vertex")
    mesh = Mesh(vertices=vertices, cells=cells, domain=domain)
    validate_mesh(mesh)
    return mesh
