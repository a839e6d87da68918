# Open-boundary square lattice with qubits on the edges.
#
# "rows x cols" counts vertices.  Horizontal edges are indexed first in
# row-major order, then vertical edges in row-major order, so qubit
# numbering is deterministic across runs and file formats.
import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LatticeGeometry:
    rows: int
    cols: int
    num_qubits: int
    edges: tuple  # ((vertex, vertex), ...) indexed by edge/qubit id
    stars: tuple  # per-vertex tuple of incident edge ids
    plaquettes: tuple  # per-face 4-tuple of bounding edge ids, raster order

    @property
    def num_stars(self) -> int:
        return len(self.stars)

    @property
    def num_plaquettes(self) -> int:
        return len(self.plaquettes)


def build_lattice(rows: int, cols: int) -> LatticeGeometry:
    """Build the OBC geometry for a rows x cols grid of vertices."""
    if rows < 1 or cols < 1:
        raise ValueError(f"lattice dimensions must be >= 1, got {rows}x{cols}")
    if rows * cols < 2:
        raise ValueError("lattice needs at least 2 vertices")

    def vid(r, c):
        return r * cols + c

    edges = []
    # horizontal edges, row-major
    for r in range(rows):
        for c in range(cols - 1):
            edges.append((vid(r, c), vid(r, c + 1)))
    # vertical edges, row-major
    for r in range(rows - 1):
        for c in range(cols):
            edges.append((vid(r, c), vid(r + 1, c)))

    num_qubits = len(edges)
    stars = [[] for _ in range(rows * cols)]
    for e, (a, b) in enumerate(edges):
        stars[a].append(e)
        stars[b].append(e)

    def eh(r, c):
        return r * (cols - 1) + c

    def ev(r, c):
        return rows * (cols - 1) + r * cols + c

    plaquettes = []
    for r in range(rows - 1):
        for c in range(cols - 1):
            plaquettes.append((eh(r, c), ev(r, c), ev(r, c + 1), eh(r + 1, c)))

    return LatticeGeometry(
        rows=rows,
        cols=cols,
        num_qubits=num_qubits,
        edges=tuple(edges),
        stars=tuple(tuple(s) for s in stars),
        plaquettes=tuple(plaquettes),
    )


def effective_length(geometry: LatticeGeometry) -> float:
    """Effective linear size sqrt(p) used in the finite-size extrapolation."""
    p = geometry.num_plaquettes
    if p < 1:
        raise ValueError("effective length undefined for a plaquette-free lattice")
    return math.sqrt(p)


def plaquette_mask(geometry: LatticeGeometry, p: int) -> int:
    """Bitmask over qubits of the edges bounding plaquette p."""
    mask = 0
    for e in geometry.plaquettes[p]:
        mask |= 1 << e
    return mask


def star_mask(geometry: LatticeGeometry, s: int) -> int:
    """Bitmask over qubits of the edges meeting vertex s."""
    mask = 0
    for e in geometry.stars[s]:
        mask |= 1 << e
    return mask
