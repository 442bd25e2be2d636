"""Ray-tube launch directions from a subdivided icosahedron.

Subdividing each triangular face ``order`` times and projecting vertices to
the unit sphere gives 10*4^order + 2 near-uniform directions; the returned
angular spacing is the largest angle between mesh-adjacent directions and
drives the reception-sphere radius.
"""

from __future__ import annotations

import numpy as np

MAX_ORDER = 8  # 655362 directions; beyond this ray counts explode

_PHI = (1.0 + np.sqrt(5.0)) / 2.0

_ICO_VERTS = np.array(
    [
        [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
        [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
        [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
    ],
    dtype=float,
)

_ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ],
    dtype=int,
)


def launch_directions(tessellation_order: int):
    """Unit direction set and angular spacing for one launch tessellation.

    Returns (directions (N,3), angular_spacing radians).
    """
    if tessellation_order < 0:
        raise ValueError("tessellation order must be >= 0")
    if tessellation_order > MAX_ORDER:
        raise ValueError(
            f"tessellation order {tessellation_order} > {MAX_ORDER} rejected "
            "(ray-count explosion guard)"
        )

    verts = [v / np.linalg.norm(v) for v in _ICO_VERTS]
    faces = [tuple(f) for f in _ICO_FACES]
    midpoint_cache: dict[tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (a, b) if a < b else (b, a)
        idx = midpoint_cache.get(key)
        if idx is None:
            m = verts[a] + verts[b]
            verts.append(m / np.linalg.norm(m))
            idx = len(verts) - 1
            midpoint_cache[key] = idx
        return idx

    for _ in range(tessellation_order):
        next_faces = []
        midpoint_cache.clear()
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces

    directions = np.array(verts)
    edges = set()
    for a, b, c in faces:
        for i, j in ((a, b), (b, c), (c, a)):
            edges.add((i, j) if i < j else (j, i))
    e = np.array(sorted(edges))
    cosines = np.einsum("ij,ij->i", directions[e[:, 0]], directions[e[:, 1]])
    angular_spacing = float(np.max(np.arccos(np.clip(cosines, -1.0, 1.0))))
    return directions, angular_spacing
