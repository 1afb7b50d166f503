"""Combinatorics of closed triangulated surfaces.

A :class:`SurfaceComplex` stores the face-vertex incidence structure of a
closed surface together with the derived edge list, incidence maps and Euler
characteristic.  Vertices are dense integers ``0..N-1`` and edges are
canonicalized as ``(min, max)`` pairs so that map keys and file formats are
deterministic.  Only closed surfaces are accepted: every edge must lie in
exactly two faces and the faces around each vertex must form a single cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BadFaceError, DisconnectedLinkError, NonManifoldError


@dataclass(frozen=True)
class SurfaceComplex:
    """Immutable incidence structure of a closed triangulated surface.

    Attributes
    ----------
    vertex_count : int
        Number of vertices N.
    faces : (F, 3) int array
        Vertex triples, each row sorted ascending, rows in lexicographic order.
    edges : (E, 2) int array
        Canonical (min, max) vertex pairs in lexicographic order.
    edge_index : dict
        Maps a canonical pair (i, j) to its row in ``edges``.
    edge_faces : (E, 2) int array
        The two faces incident to each edge.
    vertex_faces : tuple of tuples
        Faces incident to each vertex.
    vertex_degree : (N,) int array
        Valence of each vertex.
    euler_characteristic : int
        N - E + F.
    face_opposite_edges : (F, 3) int array
        ``face_opposite_edges[f, m]`` is the edge of face f opposite its m-th
        vertex, i.e. the edge joining the other two vertices.
    """

    vertex_count: int
    faces: np.ndarray
    edges: np.ndarray
    edge_index: dict
    edge_faces: np.ndarray
    vertex_faces: tuple
    vertex_degree: np.ndarray
    euler_characteristic: int
    face_opposite_edges: np.ndarray

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def face_count(self) -> int:
        return len(self.faces)

    def edge_id(self, i: int, j: int) -> int:
        """Row of edge {i, j} in the canonical edge order."""
        key = (i, j) if i < j else (j, i)
        return self.edge_index[key]


def _link_is_single_cycle(pairs: list[tuple[int, int]]) -> bool:
    """True iff the given link edges form one cycle covering all of them."""
    if not pairs:
        return False
    adjacency: dict[int, list[int]] = {}
    for a, b in pairs:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    if any(len(nbrs) != 2 for nbrs in adjacency.values()):
        return False
    if len(adjacency) != len(pairs):
        return False
    start = min(adjacency)
    prev, cur = start, adjacency[start][0]
    steps = 1
    while cur != start:
        a, b = adjacency[cur]
        prev, cur = cur, (b if a == prev else a)
        steps += 1
        if steps > len(pairs):
            return False
    return steps == len(pairs)


def build_complex(faces: Sequence[Sequence[int]]) -> SurfaceComplex:
    """Build and validate a closed triangulated surface from vertex triples.

    Raises
    ------
    BadFaceError
        A face has a repeated vertex or a negative vertex index.
    NonManifoldError
        Some edge is not in exactly two faces, or a face is duplicated.
    DisconnectedLinkError
        The faces around some vertex do not form a single cycle.
    """
    if len(faces) == 0:
        raise BadFaceError("face list is empty")

    rows = []
    for face in faces:
        triple = tuple(int(v) for v in face)
        if len(triple) != 3:
            raise BadFaceError(f"face {face!r} does not have three vertices")
        if len(set(triple)) != 3:
            raise BadFaceError(f"face {face!r} has a repeated vertex")
        if min(triple) < 0:
            raise BadFaceError(f"face {face!r} has a negative vertex index")
        rows.append(tuple(sorted(triple)))

    seen = set()
    for row in rows:
        if row in seen:
            raise NonManifoldError(f"face {row} appears more than once")
        seen.add(row)

    face_arr = np.array(sorted(rows), dtype=np.int64)
    n_vertices = int(face_arr.max()) + 1

    # Canonical edge order: lexicographic over (min, max) pairs.
    edge_faces_map: dict[tuple[int, int], list[int]] = {}
    for f, (v0, v1, v2) in enumerate(face_arr):
        for a, b in ((v0, v1), (v0, v2), (v1, v2)):
            edge_faces_map.setdefault((int(a), int(b)), []).append(f)

    bad = {e: fs for e, fs in edge_faces_map.items() if len(fs) != 2}
    if bad:
        detail = ", ".join(f"{e} in {len(fs)} faces" for e, fs in sorted(bad.items()))
        raise NonManifoldError(f"not a closed surface: {detail}")

    edge_arr = np.array(sorted(edge_faces_map), dtype=np.int64)
    edge_index = {(int(i), int(j)): k for k, (i, j) in enumerate(edge_arr)}
    edge_faces = np.array(
        [sorted(edge_faces_map[(int(i), int(j))]) for i, j in edge_arr], dtype=np.int64
    )

    vertex_faces_map: dict[int, list[int]] = {v: [] for v in range(n_vertices)}
    for f, face in enumerate(face_arr):
        for v in face:
            vertex_faces_map[int(v)].append(f)

    for v in range(n_vertices):
        incident = vertex_faces_map[v]
        if not incident:
            raise DisconnectedLinkError(f"vertex {v} has no incident faces")
        link = [tuple(int(w) for w in face_arr[f] if w != v) for f in incident]
        if not _link_is_single_cycle(link):
            raise DisconnectedLinkError(f"link of vertex {v} is not a single cycle")

    degree = np.zeros(n_vertices, dtype=np.int64)
    np.add.at(degree, edge_arr.ravel(), 1)

    n_edges, n_faces = len(edge_arr), len(face_arr)
    assert 3 * n_faces == 2 * n_edges
    chi = n_vertices - n_edges + n_faces

    # Edge opposite vertex position m joins the other two (sorted) vertices.
    opposite = np.empty((n_faces, 3), dtype=np.int64)
    for f, (v0, v1, v2) in enumerate(face_arr):
        opposite[f, 0] = edge_index[(int(v1), int(v2))]
        opposite[f, 1] = edge_index[(int(v0), int(v2))]
        opposite[f, 2] = edge_index[(int(v0), int(v1))]

    for arr in (face_arr, edge_arr, edge_faces, degree, opposite):
        arr.setflags(write=False)

    return SurfaceComplex(
        vertex_count=n_vertices,
        faces=face_arr,
        edges=edge_arr,
        edge_index=edge_index,
        edge_faces=edge_faces,
        vertex_faces=tuple(tuple(fs) for fs in vertex_faces_map.values()),
        vertex_degree=degree,
        euler_characteristic=chi,
        face_opposite_edges=opposite,
    )


def normalize_subset(complex: SurfaceComplex, subset: Iterable[int]) -> frozenset:
    """Validate a nonempty proper vertex subset and return it as a frozenset."""
    members = frozenset(int(v) for v in subset)
    if not members:
        raise ValueError("vertex subset is empty")
    if not all(0 <= v < complex.vertex_count for v in members):
        raise ValueError("vertex subset references unknown vertices")
    if len(members) >= complex.vertex_count:
        raise ValueError("vertex subset must be a proper subset of the vertices")
    return members


def _subcomplex_counts(complex: SurfaceComplex, members: frozenset) -> tuple[int, int, int]:
    nv = len(members)
    ne = int(sum(1 for i, j in complex.edges if int(i) in members and int(j) in members))
    nf = int(sum(1 for face in complex.faces if all(int(v) in members for v in face)))
    return nv, ne, nf


def subcomplex_euler(complex: SurfaceComplex, subset: Iterable[int]) -> int:
    """Euler characteristic of the subcomplex induced by a vertex subset.

    Counts vertices in the subset, edges with both endpoints in it and faces
    with all three vertices in it.
    """
    members = normalize_subset(complex, subset)
    nv, ne, nf = _subcomplex_counts(complex, members)
    return nv - ne + nf


def link_pairs(
    complex: SurfaceComplex, subset: Iterable[int]
) -> list[tuple[tuple[int, int], int]]:
    """All (edge, vertex) pairs forming a triangle with the vertex in the subset.

    A pair qualifies when the edge's endpoints are both outside the subset,
    the vertex is inside it, and the edge plus vertex span a face.  Found by
    direct filtering over every (face, corner) incidence.
    """
    members = normalize_subset(complex, subset)
    pairs = []
    for face in complex.faces:
        for m in range(3):
            v = int(face[m])
            if v not in members:
                continue
            a, b = (int(w) for w in face if w != v)
            if a in members or b in members:
                continue
            pairs.append(((a, b), v))
    pairs.sort()
    return pairs


# ---------------------------------------------------------------------------
# Stock complexes used by tests, docs and the acceptance suite.
# ---------------------------------------------------------------------------

def tetrahedron() -> SurfaceComplex:
    """Boundary complex of the 3-simplex: N=4, E=6, F=4, chi=2."""
    return build_complex([(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)])


def octahedron() -> SurfaceComplex:
    """The octahedron: N=6, E=12, F=8, chi=2, every vertex of degree 4."""
    return build_complex(
        [
            (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 1),
            (5, 2, 1), (5, 3, 2), (5, 4, 3), (5, 1, 4),
        ]
    )


def icosahedron() -> SurfaceComplex:
    """The icosahedron: N=12, E=30, F=20, chi=2, every vertex of degree 5."""
    return build_complex(
        [
            (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1),
            (1, 6, 2), (2, 6, 7), (2, 7, 3), (3, 7, 8), (3, 8, 4),
            (4, 8, 9), (4, 9, 5), (5, 9, 10), (5, 10, 1), (1, 10, 6),
            (6, 11, 7), (7, 11, 8), (8, 11, 9), (9, 11, 10), (10, 11, 6),
        ]
    )


def triangulated_torus(rows: int = 3, cols: int = 3) -> SurfaceComplex:
    """Torus from an rows x cols periodic grid with diagonals, chi=0.

    Needs rows, cols >= 3 so the quotient stays a simplicial complex.
    """
    if rows < 3 or cols < 3:
        raise ValueError("torus grid needs at least 3 rows and 3 columns")
    vid = lambda i, j: (i % rows) * cols + (j % cols)
    faces = []
    for i in range(rows):
        for j in range(cols):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i, j + 1), vid(i + 1, j + 1)
            faces.append((a, b, d))
            faces.append((a, d, c))
    return build_complex(faces)


def genus2_surface() -> SurfaceComplex:
    """A genus-2 surface (chi=-2, N=15) as the connected sum of two tori.

    Remove one face from each 3x3 grid torus and identify the two boundary
    triangles vertex by vertex.
    """
    vid = lambda i, j: (i % 3) * 3 + (j % 3)
    torus = []
    for i in range(3):
        for j in range(3):
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i, j + 1), vid(i + 1, j + 1)
            torus.append((a, b, d))
            torus.append((a, d, c))

    glue_face = (0, 3, 4)  # a face of the grid torus, removed from both copies
    first = [f for f in torus if tuple(sorted(f)) != tuple(sorted(glue_face))]

    # Second copy: glued vertices keep their labels, the rest are shifted up.
    relabel = {}
    next_id = 9
    for v in range(9):
        if v in glue_face:
            relabel[v] = v
        else:
            relabel[v] = next_id
            next_id += 1
    second = [
        tuple(relabel[v] for v in f)
        for f in torus
        if tuple(sorted(f)) != tuple(sorted(glue_face))
    ]
    return build_complex(first + second)
