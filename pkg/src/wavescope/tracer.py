"""Ray-tube tracing and RSS prediction.

The tracer advances a whole frontier of ray tubes one interaction depth at a
time (breadth-first, numpy-vectorized).  Receivers collect tubes through the
reception-sphere test; tube contributions with the same interaction signature
are deduplicated to the closest tube so each physical path counts once, and
pure specular paths get their unfolded length corrected by the image method.
Received rays are combined coherently (complex vector sum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .geometry import (
    HIT_EPS,
    KIND_CYLINDER,
    KIND_NONE,
    KIND_SURFACE,
    points_in_polygon,
    unit,
)
from .launch import launch_directions
from .materials import Material
from .scene import Scene, Transceiver
from . import utd

C_LIGHT = 299792458.0
NOISE_FLOOR_DBM = -100.0
_SQRT3 = math.sqrt(3.0)
# All-planar specular candidates are validated exactly against the image
# geometry afterwards, so their reception spheres can be generous: a larger
# radius makes path discovery symmetric under tx/rx exchange (reciprocity)
# without admitting false paths.
_PLANAR_CAPTURE_MARGIN = 3.0


@dataclass(frozen=True)
class PropagationConfig:
    max_depth: int = 4
    min_power_dbm: float = NOISE_FLOOR_DBM
    tessellation_order: int = 4
    max_diffraction_order: int = 1
    quantize_rss: bool = False

    def __post_init__(self):
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.min_power_dbm >= 0:
            raise ValueError("min_power_dbm must be negative")
        if self.max_diffraction_order not in (0, 1):
            raise ValueError("max_diffraction_order must be 0 or 1")

    def digest_fields(self):
        return [self.max_depth, self.min_power_dbm, self.tessellation_order,
                self.max_diffraction_order, self.quantize_rss]


@dataclass(frozen=True)
class RayTube:
    origin: np.ndarray
    direction: np.ndarray
    field: np.ndarray  # complex (3,), transverse to direction
    depth: int
    unfolded_length: float
    angular_spacing: float


@dataclass(frozen=True)
class ReceivedRay:
    receiver_id: str
    field: np.ndarray  # complex (3,)
    unfolded_length: float
    depth: int
    path_key: tuple = ()
    interaction_points: tuple = ()
    # Propagation direction at the receiver; defines the receiving antenna's
    # polarization projection.  Vertical dipoles at both ends keep the
    # tx->rx and rx->tx couplings identical (reciprocity).
    arrival_direction: tuple = (0.0, 0.0, 1.0)


def vertical_polarization(dirs: np.ndarray) -> np.ndarray:
    """Unit E-field vectors: vertical component transverse to each direction."""
    single = dirs.ndim == 1
    d = np.atleast_2d(dirs)
    z = np.zeros_like(d)
    z[:, 2] = 1.0
    e = z - d * d[:, 2:3]
    n = np.linalg.norm(e, axis=1)
    degen = n < 1e-9
    e[degen] = [1.0, 0.0, 0.0]
    n[degen] = 1.0
    e = e / n[:, None]
    return e[0] if single else e


def free_space_rss(tx: Transceiver, rx: Transceiver) -> float:
    """Friis free-space RSS in dBm; the analytic reference for validation."""
    d = float(np.linalg.norm(rx.position - tx.position))
    if d <= 0:
        raise ValueError("transmitter and receiver positions must be distinct")
    fspl = 20.0 * math.log10(4.0 * math.pi * d * tx.frequency_hz / C_LIGHT)
    pt_dbm = 10.0 * math.log10(tx.transmit_power_mw)
    return pt_dbm + tx.antenna_gain_dbi + rx.antenna_gain_dbi - fspl


def _slab_coeffs_vec(cos_i: np.ndarray, material: Material, frequency: float):
    """Vectorized slab coefficients over incidence cosines.

    Returns (r_s, r_p, t_s, t_p); matches fresnel.slab_coefficients.
    """
    if material.is_perfect_conductor:
        ones = np.ones_like(cos_i, dtype=complex)
        return -ones, ones, 0.0 * ones, 0.0 * ones
    eps = material.complex_permittivity(frequency)
    q1 = cos_i.astype(complex)
    q2 = np.sqrt(eps - (1.0 - cos_i ** 2))
    r_s = (q1 - q2) / (q1 + q2)
    r_p = (eps * q1 - q2) / (eps * q1 + q2)
    k0 = 2.0 * math.pi * frequency / C_LIGHT
    excess = np.exp(-1j * k0 * material.thickness * (q2 - q1))
    t_s = 4.0 * q1 * q2 / (q1 + q2) ** 2 * excess
    t_p = 4.0 * eps * q1 * q2 / (eps * q1 + q2) ** 2 * excess
    return r_s, r_p, t_s, t_p


def _mirror_point(p: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    return p - 2.0 * (np.dot(p, normal) - offset) * normal


def _scene_wedges(scene: Scene) -> list:
    """Diffracting edges: free polygon edges modeled as half-planes.

    Edges shared between two surfaces (wall/floor junctions, box corners) and
    edges flush against another surface are skipped; what remains are true
    silhouette edges such as doorway jambs and partition ends.
    """
    cached = scene.__dict__.get("_wedges")
    if cached is not None:
        return cached

    def edge_key(a, b):
        ka = tuple(np.round(a, 6))
        kb = tuple(np.round(b, 6))
        return (ka, kb) if ka <= kb else (kb, ka)

    counts: Dict[tuple, list] = {}
    for si, s in enumerate(scene.surfaces):
        verts = s.vertices
        for i in range(len(verts)):
            a, b = verts[i], verts[(i + 1) % len(verts)]
            counts.setdefault(edge_key(a, b), []).append((si, a.copy(), b.copy()))

    accel = scene.accel()
    wedges = []
    for users in counts.values():
        if len(users) != 1:
            continue
        si, a, b = users[0]
        if np.linalg.norm(b - a) < 1e-6:
            continue
        surf = scene.surfaces[si]
        mid = 0.5 * (a + b)
        # Skip edges flush on some other surface's plane (e.g. wall tops
        # touching the ceiling): diffraction there is geometrically blocked.
        flush = False
        for sj, other in enumerate(scene.surfaces):
            if sj == si:
                continue
            dist = abs(np.dot(other.normal, mid) - np.dot(other.normal, other.vertices[0]))
            if dist < 1e-6:
                rel = mid - other.vertices[0]
                u = accel.basis_u[sj]
                v = accel.basis_v[sj]
                from .geometry import points_in_polygon
                inside = points_in_polygon(
                    np.array([rel @ u]), np.array([rel @ v]), accel.polys2d[sj]
                )
                if inside[0]:
                    flush = True
                    break
        if flush:
            continue
        e_dir = unit(b - a)
        tangent = np.cross(surf.normal, e_dir)
        centroid = surf.vertices.mean(axis=0)
        if np.dot(tangent, centroid - mid) < 0:
            tangent = -tangent
        wedges.append(
            utd.Wedge(
                point_a=a,
                point_b=b,
                face0_tangent=tangent,
                face0_normal=surf.normal,
                interior_angle=0.0,
            )
        )
    object.__setattr__(scene, "_wedges", wedges)
    return wedges


class _Candidate:
    __slots__ = ("d_perp", "length", "field", "depth", "points", "direction")

    def __init__(self, d_perp, length, field, depth, points, direction):
        self.d_perp = d_perp
        self.length = length
        self.field = field
        self.depth = depth
        self.points = points
        self.direction = direction


def trace(
    scene: Scene,
    tx: Transceiver,
    receivers: Sequence[Transceiver],
    config: Optional[PropagationConfig] = None,
) -> Dict[str, List[ReceivedRay]]:
    """Trace ray tubes from tx and collect contributions at each receiver."""
    if not tx.is_transmitter:
        raise ValueError(f"transceiver {tx.id!r} is not a transmitter")
    if not receivers:
        raise ValueError("receivers must be non-empty")
    config = config or PropagationConfig()

    dirs, alpha = launch_directions(config.tessellation_order)
    n0 = len(dirs)
    freq = tx.frequency_hz
    lam = C_LIGHT / freq
    accel = scene.accel()
    rx_pos = np.array([r.position for r in receivers])

    # Tube-power budget relative to the transmitter, used for the minimum
    # power termination rule: P(L) = Pt*Gt*(lam/(4*pi*L))^2 * |E|^2.
    power_base_db = (
        10.0 * math.log10(tx.transmit_power_mw)
        + tx.antenna_gain_dbi
        + 20.0 * math.log10(lam / (4.0 * math.pi))
    )

    origins = np.tile(tx.position, (n0, 1))
    directions = dirs.copy()
    fields = vertical_polarization(dirs).astype(complex)
    lengths = np.zeros(n0)
    paths: List[tuple] = [() for _ in range(n0)]
    points: List[tuple] = [() for _ in range(n0)]

    surf_materials = [s.material for s in scene.surfaces]
    candidates: List[Dict[tuple, _Candidate]] = [dict() for _ in receivers]

    for depth in range(config.max_depth + 1):
        if len(origins) == 0:
            break
        t_hit, kind, idx, normal = accel.first_hits(origins, directions)

        # Reception-sphere capture along the current (unobstructed) segments.
        planar = np.array(
            [all(k == KIND_SURFACE for _, k, _ in p) for p in paths], dtype=bool
        )
        margin = np.where(planar, _PLANAR_CAPTURE_MARGIN, 1.0)
        for r_i in range(len(receivers)):
            to_rx = rx_pos[r_i] - origins
            t_star = np.einsum("ij,ij->i", to_rx, directions)
            d_perp = np.linalg.norm(to_rx - t_star[:, None] * directions, axis=1)
            l_tot = lengths + t_star
            ok = (t_star > HIT_EPS) & (t_star < t_hit)
            ok &= d_perp <= margin * alpha * l_tot / _SQRT3
            for i in np.nonzero(ok)[0]:
                key = paths[i]
                length = lengths[i] + float(np.linalg.norm(rx_pos[r_i] - origins[i]))
                prev = candidates[r_i].get(key)
                if prev is None or d_perp[i] < prev.d_perp:
                    candidates[r_i][key] = _Candidate(
                        float(d_perp[i]), length, fields[i].copy(), depth,
                        points[i], directions[i].copy(),
                    )

        if depth == config.max_depth:
            break

        hit = np.nonzero(kind != KIND_NONE)[0]
        if len(hit) == 0:
            break

        h_orig = origins[hit] + t_hit[hit, None] * directions[hit]
        h_dir = directions[hit]
        h_norm = normal[hit]
        h_field = fields[hit]
        h_len = lengths[hit] + t_hit[hit]
        cos_i = np.clip(-np.einsum("ij,ij->i", h_dir, h_norm), 0.0, 1.0)

        # s/p decomposition basis per hit ray.
        s_hat = np.cross(h_dir, h_norm)
        s_n = np.linalg.norm(s_hat, axis=1)
        degen = s_n < 1e-9
        if degen.any():
            alt = np.cross(h_norm[degen], np.array([1.0, 0.0, 0.0]))
            alt_n = np.linalg.norm(alt, axis=1)
            bad = alt_n < 1e-9
            alt[bad] = np.cross(h_norm[degen][bad], np.array([0.0, 1.0, 0.0]))
            alt_n[bad] = np.linalg.norm(alt[bad], axis=1)
            s_hat[degen] = alt / alt_n[:, None]
            s_n[degen] = 1.0
        s_hat = s_hat / s_n[:, None]
        p_in = np.cross(s_hat, h_dir)
        refl_dir = h_dir + 2.0 * cos_i[:, None] * h_norm
        p_out = np.cross(s_hat, refl_dir)

        e_s = np.einsum("ij,ij->i", h_field, s_hat.astype(complex))
        e_p = np.einsum("ij,ij->i", h_field, p_in.astype(complex))

        r_s = np.zeros(len(hit), dtype=complex)
        r_p = np.zeros(len(hit), dtype=complex)
        t_s = np.zeros(len(hit), dtype=complex)
        t_p = np.zeros(len(hit), dtype=complex)
        surf_hits = kind[hit] == KIND_SURFACE
        for mat in {surf_materials[i] for i in idx[hit[surf_hits]]}:
            sel = surf_hits & np.array([
                k == KIND_SURFACE and surf_materials[j] is mat
                for k, j in zip(kind[hit], idx[hit])
            ])
            rs, rp, ts, tp = _slab_coeffs_vec(cos_i[sel], mat, freq)
            r_s[sel], r_p[sel], t_s[sel], t_p[sel] = rs, rp, ts, tp
        cyl_hits = kind[hit] == KIND_CYLINDER
        if cyl_hits.any():
            # Specular bounce off the tangent plane; cylinders are opaque.
            for ci in set(idx[hit[cyl_hits]]):
                sel = cyl_hits & (idx[hit] == ci)
                mat = scene.cylinders[ci].material
                rs, rp, _, _ = _slab_coeffs_vec(cos_i[sel], mat, freq)
                r_s[sel], r_p[sel] = rs, rp

        new_origins, new_dirs, new_fields, new_lengths = [], [], [], []
        new_paths, new_points = [], []

        def admit(orig, dirv, fld, length, sel, mode, local_paths, local_points):
            mag = np.linalg.norm(fld, axis=1)
            power_db = power_base_db + 20.0 * np.log10(
                np.maximum(mag, 1e-30) / np.maximum(length, 1e-6)
            )
            keep = sel & (power_db >= config.min_power_dbm) & (mag > 1e-15)
            ki = np.nonzero(keep)[0]
            if len(ki) == 0:
                return
            new_origins.append(orig[ki])
            new_dirs.append(dirv[ki])
            new_fields.append(fld[ki])
            new_lengths.append(length[ki])
            for i in ki:
                new_paths.append(local_paths[i] + ((mode, int(kind[hit[i]]), int(idx[hit[i]])),))
                new_points.append(local_points[i] + (tuple(h_orig[i]),))

        local_paths = [paths[i] for i in hit]
        local_points = [points[i] for i in hit]

        refl_field = (
            r_s[:, None] * s_hat.astype(complex) * e_s[:, None]
            + r_p[:, None] * p_out.astype(complex) * e_p[:, None]
        )
        admit(h_orig, refl_dir, refl_field, h_len, np.ones(len(hit), bool), "R",
              local_paths, local_points)

        trans_field = (
            t_s[:, None] * s_hat.astype(complex) * e_s[:, None]
            + t_p[:, None] * p_in.astype(complex) * e_p[:, None]
        )
        admit(h_orig, h_dir, trans_field, h_len, surf_hits, "T",
              local_paths, local_points)

        if not new_origins:
            break
        origins = np.concatenate(new_origins)
        directions = np.concatenate(new_dirs)
        fields = np.concatenate(new_fields)
        lengths = np.concatenate(new_lengths)
        paths = new_paths
        points = new_points

    result: Dict[str, List[ReceivedRay]] = {r.id: [] for r in receivers}
    for r_i, rx in enumerate(receivers):
        rays = []
        pending = []  # exact candidates awaiting batched clearance checks
        seg_a, seg_b, seg_allowed = [], [], []
        for key, cand in candidates[r_i].items():
            if _is_planar_key(key):
                exact = _exact_specular_path(scene, tx, rx, key)
                if exact is None:
                    continue  # near-miss capture; no true specular path
                fld, length, arrival, nodes, t_per_seg = exact
                seg_range = (len(seg_a), len(seg_a) + len(nodes) - 1)
                for si, (a, b) in enumerate(zip(nodes, nodes[1:])):
                    seg_a.append(a)
                    seg_b.append(b)
                    seg_allowed.append(t_per_seg.get(si, ()))
                pending.append((key, cand, fld, length, arrival, seg_range))
                continue
            rays.append(
                ReceivedRay(
                    receiver_id=rx.id,
                    field=cand.field,
                    unfolded_length=cand.length,
                    depth=cand.depth,
                    path_key=key,
                    interaction_points=cand.points,
                    arrival_direction=tuple(cand.direction),
                )
            )
        if pending:
            clear = _segments_clear_batch(accel, seg_a, seg_b, seg_allowed)
            for key, cand, fld, length, arrival, (lo, hi) in pending:
                if not clear[lo:hi].all():
                    continue  # exact polyline blocked; no true specular path
                rays.append(
                    ReceivedRay(
                        receiver_id=rx.id,
                        field=fld,
                        unfolded_length=length,
                        depth=cand.depth,
                        path_key=key,
                        interaction_points=cand.points,
                        arrival_direction=tuple(arrival),
                    )
                )
        if config.max_diffraction_order >= 1:
            rays.extend(_diffraction_rays(scene, tx, rx, freq))
        rays.sort(key=lambda r: r.path_key)
        result[rx.id] = rays
    return result


def _exact_specular_path(scene, tx, rx, path_key):
    """Exact field and length for an all-planar reflection/transmission path.

    Ray tubes locate paths but carry fields sampled at the tube's launch
    direction; for specular paths over planar surfaces the image method gives
    the exact reflection points, so the polarization transport and Fresnel
    coefficients can be re-evaluated on the true geometry.  Returns
    (field, length, arrival_dir, polyline_nodes, wall_crossings_per_segment)
    or None when a reflection point falls off its polygon; segment blockage
    is checked separately (batched) by the caller.
    """
    events = []
    for mode, kind, idx in path_key:
        if kind != KIND_SURFACE or mode not in ("R", "T"):
            return None
        events.append((mode, idx))

    # Successive transmitter images: images[k] = tx mirrored through the
    # reflecting surfaces of the first k events.
    images = [tx.position.copy()]
    for mode, idx in events:
        p = images[-1]
        if mode == "R":
            s = scene.surfaces[idx]
            offset = float(np.dot(s.normal, s.vertices[0]))
            p = _mirror_point(p, s.normal, offset)
        images.append(p.copy())

    # Backward pass: each reflection point is where the segment from the
    # post-reflection image to the next path node crosses the mirror plane.
    accel = scene.accel()
    refl_points: Dict[int, np.ndarray] = {}
    target = rx.position.copy()
    for k in range(len(events) - 1, -1, -1):
        mode, idx = events[k]
        if mode != "R":
            continue
        s = scene.surfaces[idx]
        n = s.normal
        off = float(np.dot(n, s.vertices[0]))
        a, b = images[k + 1], target
        da, db = float(np.dot(n, a) - off), float(np.dot(n, b) - off)
        if abs(da - db) < 1e-12:
            return None
        t = da / (da - db)
        if not 1e-9 < t < 1.0 - 1e-9:
            return None
        q = a + t * (b - a)
        rel = q - s.vertices[0]
        inside = points_in_polygon(
            np.array([rel @ accel.basis_u[idx]]),
            np.array([rel @ accel.basis_v[idx]]),
            accel.polys2d[idx],
        )
        if not inside[0]:
            return None
        refl_points[k] = q
        target = q

    # Polyline nodes: tx, reflection points in event order, rx.  Transmission
    # events keep the segment direction, so each event's direction is that of
    # the segment its surface crossing lies on.
    nodes = [tx.position] + [refl_points[k] for k in sorted(refl_points)] + [rx.position]
    length = float(sum(np.linalg.norm(b - a) for a, b in zip(nodes, nodes[1:])))
    seg_dirs = []
    for a, b in zip(nodes, nodes[1:]):
        d = b - a
        norm = np.linalg.norm(d)
        if norm < 1e-9:
            return None
        seg_dirs.append(d / norm)

    freq = tx.frequency_hz
    e = vertical_polarization(seg_dirs[0]).astype(complex)
    seg = 0
    t_per_seg: Dict[int, List[int]] = {}
    for k, (mode, idx) in enumerate(events):
        if mode == "T":
            t_per_seg.setdefault(seg, []).append(idx)
        d = seg_dirs[seg]
        s = scene.surfaces[idx]
        n = s.normal if float(np.dot(d, s.normal)) < 0 else -s.normal
        cos_i = float(np.clip(-np.dot(d, n), 0.0, 1.0))
        s_hat = np.cross(d, n)
        s_n = float(np.linalg.norm(s_hat))
        if s_n < 1e-9:
            s_hat = np.cross(n, np.array([1.0, 0.0, 0.0]))
            s_n = float(np.linalg.norm(s_hat))
            if s_n < 1e-9:
                s_hat = np.cross(n, np.array([0.0, 1.0, 0.0]))
                s_n = float(np.linalg.norm(s_hat))
        s_hat = s_hat / s_n
        p_in = np.cross(s_hat, d)
        r_s, r_p, t_s, t_p = (
            c[0] for c in _slab_coeffs_vec(np.array([cos_i]), s.material, freq)
        )
        e_s = complex(np.dot(e, s_hat))
        e_p = complex(np.dot(e, p_in))
        if mode == "R":
            d_ref = d + 2.0 * cos_i * n
            p_out = np.cross(s_hat, d_ref)
            e = r_s * e_s * s_hat.astype(complex) + r_p * e_p * p_out.astype(complex)
            seg += 1
        else:
            e = t_s * e_s * s_hat.astype(complex) + t_p * e_p * p_in.astype(complex)

    return e, length, seg_dirs[-1], nodes, t_per_seg


def _is_planar_key(path_key) -> bool:
    return all(k == KIND_SURFACE and m in ("R", "T") for m, k, _ in path_key)


def _segments_clear_batch(accel, seg_a, seg_b, allowed) -> np.ndarray:
    """Which segments are clear apart from their own expected wall crossings.

    A segment is clear when marching a->b meets exactly its allowed wall
    indices (each once) and nothing else; all rays march together so each
    round is one vectorized intersection query.
    """
    a = np.asarray(seg_a, dtype=float)
    b = np.asarray(seg_b, dtype=float)
    n = len(a)
    result = np.ones(n, dtype=bool)
    d = b - a
    total = np.linalg.norm(d, axis=1)
    active = total > 1e-9
    dirv = np.where(active[:, None], d / np.maximum(total, 1e-12)[:, None], 0.0)
    origin = a.copy()
    traveled = np.zeros(n)
    remaining = [list(al) for al in allowed]
    for _ in range(16):
        idxs = np.nonzero(active)[0]
        if len(idxs) == 0:
            break
        t, kind, sidx, _ = accel.first_hits(origin[idxs], dirv[idxs])
        for j, i in enumerate(idxs):
            if kind[j] == KIND_NONE or traveled[i] + t[j] >= total[i] - 1e-6:
                # Every expected wall crossing must actually have happened.
                result[i] = not remaining[i]
                active[i] = False
            elif kind[j] != KIND_SURFACE or int(sidx[j]) not in remaining[i]:
                result[i] = False
                active[i] = False
            else:
                remaining[i].remove(int(sidx[j]))
                step = float(t[j]) + HIT_EPS
                origin[i] += step * dirv[i]
                traveled[i] += step
    result[active] = False  # exhausted the march budget
    return result


def _diffraction_rays(scene, tx, rx, freq):
    """First-order edge diffraction, computed deterministically per edge."""
    accel = scene.accel()
    out = []
    for wi, wedge in enumerate(_scene_wedges(scene)):
        q = utd.snell_point(wedge, tx.position, rx.position)
        if q is None:
            continue
        if accel.segment_blocked(tx.position, q) or accel.segment_blocked(q, rx.position):
            continue
        e0 = vertical_polarization(unit(q - tx.position)).astype(complex)
        res = utd.utd_diffraction(wedge, tx.position, rx.position, e0, freq)
        if res is None:
            continue
        field, length = res
        if not np.all(np.isfinite(field)):
            continue
        out.append(
            ReceivedRay(
                receiver_id=rx.id,
                field=field * length,  # framework divides by unfolded length
                unfolded_length=length,
                depth=1,
                path_key=(("D", 2, wi),),
                interaction_points=(tuple(q),),
                arrival_direction=tuple(unit(rx.position - q)),
            )
        )
    return out


def receive(
    rays: Sequence[ReceivedRay],
    rx: Transceiver,
    tx: Transceiver,
    quantize: bool = False,
) -> float:
    """Coherent combination of received rays into an RSS value in dBm."""
    if not rays:
        return NOISE_FLOOR_DBM
    freq = tx.frequency_hz
    lam = C_LIGHT / freq
    k = 2.0 * math.pi / lam
    total = 0.0 + 0.0j
    for ray in sorted(rays, key=lambda r: r.path_key):
        # Project onto the receiving antenna's polarization (vertical dipole
        # seen from the ray's arrival direction), mirroring the launch side.
        e_rx = vertical_polarization(np.asarray(ray.arrival_direction))
        amp = complex(np.dot(ray.field, e_rx.astype(complex)))
        total += amp * np.exp(-1j * k * ray.unfolded_length) / ray.unfolded_length
    g_t = 10.0 ** (tx.antenna_gain_dbi / 10.0)
    g_r = 10.0 ** (rx.antenna_gain_dbi / 10.0)
    p_mw = (
        tx.transmit_power_mw
        * g_t
        * g_r
        * (lam / (4.0 * math.pi)) ** 2
        * abs(total) ** 2
    )
    if p_mw <= 0:
        return NOISE_FLOOR_DBM
    rss = 10.0 * math.log10(p_mw)
    rss = max(rss, NOISE_FLOOR_DBM)
    return float(round(rss)) if quantize else rss


def predict_rss(
    scene: Scene,
    tx: Transceiver,
    rx: Transceiver,
    config: Optional[PropagationConfig] = None,
) -> float:
    """Trace + receive for a single transmitter/receiver pair."""
    config = config or PropagationConfig()
    rays = trace(scene, tx, [rx], config)[rx.id]
    return receive(rays, rx, tx, quantize=config.quantize_rss)


def rss_grid(
    scene: Scene,
    tx: Transceiver,
    nx: int,
    ny: int,
    height: float,
    config: Optional[PropagationConfig] = None,
    rx_gain_dbi: float = 3.0,
):
    """RSS over a horizontal nx-by-ny grid spanning the scene bounds.

    Returns (xs, ys, values) with values row-major over y then x, in dBm.
    Grid cells collocated with the transmitter report the noise floor.
    """
    if nx < 1 or ny < 1:
        raise ValueError("grid must have at least one cell per axis")
    config = config or PropagationConfig()
    xs = np.linspace(scene.bounds_min[0], scene.bounds_max[0], nx)
    ys = np.linspace(scene.bounds_min[1], scene.bounds_max[1], ny)
    receivers = []
    for j, y in enumerate(ys):
        for i, x in enumerate(xs):
            receivers.append(
                Transceiver(
                    f"grid_{i}_{j}",
                    np.array([x, y, height]),
                    role="monitoring_point",
                    antenna_gain_dbi=rx_gain_dbi,
                    frequency_hz=tx.frequency_hz,
                )
            )
    receivers = [
        r for r in receivers
        if float(np.linalg.norm(r.position - tx.position)) > HIT_EPS
    ] or receivers[:1]
    rays = trace(scene, tx, receivers, config)
    by_id = {
        r.id: receive(rays[r.id], r, tx, quantize=config.quantize_rss)
        for r in receivers
    }
    values = np.full((ny, nx), NOISE_FLOOR_DBM)
    for j in range(ny):
        for i in range(nx):
            rid = f"grid_{i}_{j}"
            if rid in by_id:
                values[j, i] = by_id[rid]
    return xs, ys, values
