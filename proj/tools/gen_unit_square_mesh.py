#!/usr/bin/env python3
"""Generate a Delaunay triangulation of the unit square suitable for TPFA.

The output uses the plain-text mesh format read by `sqra`:

    nodes N
    x y            (N lines)
    triangles M
    i j k          (M lines, 0-based)
    boundary B
    i j marker     (B lines; 1=bottom 2=right 3=top 4=left)

Interior nodes start on a triangular lattice and are relaxed by a few Laplacian
sweeps. The script rejects meshes where a boundary triangle has an angle of
more than `--max-boundary-angle` degrees opposite its boundary edge (the
circumcenter would leave the domain) or where two neighbouring circumcenters
are closer than `--min-center-gap` times the nominal edge length.
"""

import argparse
import math
import sys

import numpy as np
from scipy.spatial import Delaunay


def boundary_points(n):
    h = 1.0 / n
    pts = []
    for i in range(n):
        pts.append((i * h, 0.0))
    for i in range(n):
        pts.append((1.0, i * h))
    for i in range(n):
        pts.append((1.0 - i * h, 1.0))
    for i in range(n):
        pts.append((0.0, 1.0 - i * h))
    return np.array(pts)


def lattice_points(n, rng, jitter):
    h = 1.0 / n
    dy = h * math.sqrt(3.0) / 2.0
    pts = []
    j = 1
    while j * dy < 1.0:
        y = j * dy
        shift = 0.5 * h if j % 2 else 0.0
        x = shift
        while x < 1.0 + 1e-12:
            if min(x, 1.0 - x, y, 1.0 - y) > 0.6 * h:
                pts.append((x, y))
            x += h
        j += 1
    pts = np.array(pts)
    pts += rng.uniform(-jitter * h, jitter * h, size=pts.shape)
    return pts


def relax(points, n_fixed, sweeps):
    for _ in range(sweeps):
        tri = Delaunay(points)
        indptr, indices = tri.vertex_neighbor_vertices
        new = points.copy()
        for v in range(n_fixed, len(points)):
            nb = indices[indptr[v]:indptr[v + 1]]
            new[v] = points[nb].mean(axis=0)
        points = new
    return points


def circumcenter(a, b, c):
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    ux = ((a @ a) * (b[1] - c[1]) + (b @ b) * (c[1] - a[1]) + (c @ c) * (a[1] - b[1])) / d
    uy = ((a @ a) * (c[0] - b[0]) + (b @ b) * (a[0] - c[0]) + (c @ c) * (b[0] - a[0])) / d
    return np.array([ux, uy])


def angle_at(p, q, r):
    u = q - p
    v = r - p
    return math.degrees(math.acos(np.clip(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)), -1.0, 1.0)))


def side_marker(p, q):
    if abs(p[1]) < 1e-12 and abs(q[1]) < 1e-12:
        return 1
    if abs(p[0] - 1.0) < 1e-12 and abs(q[0] - 1.0) < 1e-12:
        return 2
    if abs(p[1] - 1.0) < 1e-12 and abs(q[1] - 1.0) < 1e-12:
        return 3
    return 4


def build(n, seed, sweeps, jitter):
    rng = np.random.default_rng(seed)
    bnd = boundary_points(n)
    pts = np.vstack([bnd, lattice_points(n, rng, jitter)])
    pts = relax(pts, len(bnd), sweeps)
    tri = Delaunay(pts)
    simplices = tri.simplices.copy()
    # counter-clockwise orientation
    for s in simplices:
        a, b, c = pts[s]
        if (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < 0:
            s[1], s[2] = s[2], s[1]
    return pts, simplices


def check(pts, simplices, n, max_boundary_angle, min_center_gap):
    h = 1.0 / n
    edges = {}
    for t, s in enumerate(simplices):
        for k in range(3):
            e = tuple(sorted((s[k], s[(k + 1) % 3])))
            edges.setdefault(e, []).append((t, s[(k + 2) % 3]))
    centers = [circumcenter(*pts[s]) for s in simplices]
    worst_angle = 0.0
    min_gap = math.inf
    boundary = []
    for (i, j), owners in edges.items():
        if len(owners) == 1:
            t, opp = owners[0]
            ang = angle_at(pts[opp], pts[i], pts[j])
            worst_angle = max(worst_angle, ang)
            boundary.append((i, j, side_marker(pts[i], pts[j])))
        else:
            (t0, _), (t1, _) = owners
            min_gap = min(min_gap, np.linalg.norm(centers[t0] - centers[t1]) / h)
    ok = worst_angle <= max_boundary_angle and min_gap >= min_center_gap
    return ok, worst_angle, min_gap, boundary


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--segments", type=int, required=True, help="boundary segments per side")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--sweeps", type=int, default=30)
    ap.add_argument("--jitter", type=float, default=0.05)
    ap.add_argument("--max-boundary-angle", type=float, default=85.0)
    ap.add_argument("--min-center-gap", type=float, default=0.02)
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args()

    pts, simplices = build(args.segments, args.seed, args.sweeps, args.jitter)
    ok, worst, gap, boundary = check(pts, simplices, args.segments, args.max_boundary_angle, args.min_center_gap)
    print(f"nodes={len(pts)} triangles={len(simplices)} worst_boundary_angle={worst:.2f} "
          f"min_center_gap/h={gap:.4f}", file=sys.stderr)
    if not ok:
        print("mesh rejected", file=sys.stderr)
        return 1
    with open(args.output, "w") as f:
        f.write(f"nodes {len(pts)}\n")
        for p in pts:
            f.write(f"{p[0]:.17g} {p[1]:.17g}\n")
        f.write(f"triangles {len(simplices)}\n")
        for s in simplices:
            f.write(f"{s[0]} {s[1]} {s[2]}\n")
        f.write(f"boundary {len(boundary)}\n")
        for i, j, m in boundary:
            f.write(f"{i} {j} {m}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
