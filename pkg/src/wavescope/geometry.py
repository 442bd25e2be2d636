"""Low-level geometric kernels: vectors, ray/plane and ray/cylinder tests.

Everything here is vectorized over rays so the tracer can advance a whole
wavefront of ray tubes per interaction depth with plain numpy.
"""

from __future__ import annotations

import numpy as np

EPS = 1e-9
HIT_EPS = 1e-6  # minimum travel distance before the next interaction, meters

KIND_NONE = -1
KIND_SURFACE = 0
KIND_CYLINDER = 1


def vec3(x, y, z) -> np.ndarray:
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector component: {v}")
    return v


def unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n < EPS:
        raise ValueError("cannot normalize near-zero vector")
    return v / n


def polygon_normal(vertices: np.ndarray) -> np.ndarray:
    """Newell's method; robust for any simple planar polygon."""
    v = np.asarray(vertices, dtype=float)
    nxt = np.roll(v, -1, axis=0)
    n = np.array(
        [
            np.sum((v[:, 1] - nxt[:, 1]) * (v[:, 2] + nxt[:, 2])),
            np.sum((v[:, 2] - nxt[:, 2]) * (v[:, 0] + nxt[:, 0])),
            np.sum((v[:, 0] - nxt[:, 0]) * (v[:, 1] + nxt[:, 1])),
        ]
    )
    return unit(n)


def points_in_polygon(px: np.ndarray, py: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd test of N points against one 2D polygon (K,2), vectorized on N."""
    inside = np.zeros(px.shape, dtype=bool)
    x0, y0 = poly[:, 0], poly[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for i in range(len(poly)):
        crosses = (y0[i] > py) != (y1[i] > py)
        if not crosses.any():
            continue
        x_at = (x1[i] - x0[i]) * (py - y0[i]) / (y1[i] - y0[i]) + x0[i]
        inside ^= crosses & (px < x_at)
    return inside


class SceneAccel:
    """Flat-array snapshot of a scene used for batched intersection queries."""

    def __init__(self, surfaces, cylinders):
        m = len(surfaces)
        self.n_surfaces = m
        self.normals = np.zeros((m, 3))
        self.offsets = np.zeros(m)
        self.basis_u = np.zeros((m, 3))
        self.basis_v = np.zeros((m, 3))
        self.polys2d = []
        for i, s in enumerate(surfaces):
            self.normals[i] = s.normal
            self.offsets[i] = float(np.dot(s.normal, s.vertices[0]))
            u = s.vertices[1] - s.vertices[0]
            u = unit(u - np.dot(u, s.normal) * s.normal)
            v = np.cross(s.normal, u)
            self.basis_u[i] = u
            self.basis_v[i] = v
            rel = s.vertices - s.vertices[0]
            self.polys2d.append(np.column_stack([rel @ u, rel @ v]))
        self.surf_origin = np.array(
            [s.vertices[0] for s in surfaces]
        ) if m else np.zeros((0, 3))

        c = len(cylinders)
        self.n_cylinders = c
        self.cyl_center = np.array([cy.center_base[:2] for cy in cylinders]) if c else np.zeros((0, 2))
        self.cyl_radius = np.array([cy.radius for cy in cylinders]) if c else np.zeros(0)
        self.cyl_z0 = np.array([cy.center_base[2] for cy in cylinders]) if c else np.zeros(0)
        self.cyl_z1 = self.cyl_z0 + (np.array([cy.height for cy in cylinders]) if c else np.zeros(0))

    def first_hits(self, origins: np.ndarray, dirs: np.ndarray):
        """Nearest hit per ray.

        Returns (t, kind, idx, normal): distance (inf if none), element kind,
        element index, and the outward surface normal at the hit, oriented
        against the incoming direction.
        """
        n = len(origins)
        best_t = np.full(n, np.inf)
        best_kind = np.full(n, KIND_NONE, dtype=int)
        best_idx = np.full(n, -1, dtype=int)
        best_normal = np.zeros((n, 3))

        for i in range(self.n_surfaces):
            nrm = self.normals[i]
            denom = dirs @ nrm
            valid = np.abs(denom) > EPS
            t = np.full(n, np.inf)
            t[valid] = (self.offsets[i] - origins[valid] @ nrm) / denom[valid]
            cand = valid & (t > HIT_EPS) & (t < best_t)
            if not cand.any():
                continue
            pts = origins[cand] + t[cand, None] * dirs[cand]
            rel = pts - self.surf_origin[i]
            px = rel @ self.basis_u[i]
            py = rel @ self.basis_v[i]
            inside = points_in_polygon(px, py, self.polys2d[i])
            hit = np.where(cand)[0][inside]
            best_t[hit] = t[hit]
            best_kind[hit] = KIND_SURFACE
            best_idx[hit] = i
            sign = np.where(dirs[hit] @ nrm < 0.0, 1.0, -1.0)
            best_normal[hit] = sign[:, None] * nrm

        for i in range(self.n_cylinders):
            cx, cy = self.cyl_center[i]
            r = self.cyl_radius[i]
            ox = origins[:, 0] - cx
            oy = origins[:, 1] - cy
            dx, dy = dirs[:, 0], dirs[:, 1]
            a = dx * dx + dy * dy
            b = 2.0 * (ox * dx + oy * dy)
            c = ox * ox + oy * oy - r * r
            disc = b * b - 4.0 * a * c
            # Only entry hits from outside count; rays born inside skip it.
            valid = (a > EPS) & (disc > 0.0) & (c > 0.0)
            if not valid.any():
                continue
            sq = np.sqrt(np.maximum(disc, 0.0))
            t = np.full(n, np.inf)
            t[valid] = (-b[valid] - sq[valid]) / (2.0 * a[valid])
            cand = valid & (t > HIT_EPS) & (t < best_t)
            zhit = origins[:, 2] + np.where(cand, t, 0.0) * dirs[:, 2]
            cand &= (zhit >= self.cyl_z0[i]) & (zhit <= self.cyl_z1[i])
            if not cand.any():
                continue
            pts = origins[cand] + t[cand, None] * dirs[cand]
            radial = pts[:, :2] - np.array([cx, cy])
            radial /= np.linalg.norm(radial, axis=1, keepdims=True)
            best_t[cand] = t[cand]
            best_kind[cand] = KIND_CYLINDER
            best_idx[cand] = i
            best_normal[cand] = np.column_stack(
                [radial[:, 0], radial[:, 1], np.zeros(len(pts))]
            )

        return best_t, best_kind, best_idx, best_normal

    def segment_blocked(self, p0: np.ndarray, p1: np.ndarray) -> bool:
        """True when any element interrupts the open segment p0 -> p1."""
        d = p1 - p0
        dist = np.linalg.norm(d)
        if dist < EPS:
            return False
        t, kind, _, _ = self.first_hits(p0[None, :], (d / dist)[None, :])
        return bool(kind[0] != KIND_NONE and t[0] < dist - HIT_EPS)
