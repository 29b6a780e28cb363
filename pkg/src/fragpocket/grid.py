"""Uniform spatial hash grid for neighbor candidate generation.

Cell size equals the query cutoff, so every point within the cutoff of a
query sits in one of the 27 cells around the query's cell. Results are
exact (candidates are distance-filtered), making the grid observationally
identical to a brute-force scan.
"""

import numpy as np


class SpatialGrid:
    def __init__(self, points, cell_size):
        if cell_size <= 0:
            raise ValueError("cell size must be positive")
        self.points = np.asarray(points, dtype=float).reshape(-1, 3)
        self.cell_size = float(cell_size)
        self._cells = {}
        keys = np.floor(self.points / self.cell_size).astype(np.int64)
        for idx, key in enumerate(map(tuple, keys)):
            self._cells.setdefault(key, []).append(idx)

    def query(self, center, radius):
        """Indices of stored points with distance < radius from center.

        Radius must not exceed the cell size (the 27-cell stencil is only
        complete up to that cutoff).
        """
        if radius > self.cell_size + 1e-12:
            raise ValueError("query radius exceeds grid cell size")
        center = np.asarray(center, dtype=float)
        base = np.floor(center / self.cell_size).astype(np.int64)
        hits = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    bucket = self._cells.get((base[0] + dx, base[1] + dy, base[2] + dz))
                    if bucket:
                        hits.extend(bucket)
        if not hits:
            return []
        hits = np.asarray(hits)
        d2 = np.sum((self.points[hits] - center) ** 2, axis=1)
        return hits[d2 < radius * radius].tolist()

    def candidates(self, centers, radius):
        """Superset of indices within radius of ANY center (no distance filter).

        Unions the 27-cell stencils around the centers' cells; exactness
        comes from the caller's distance filter.
        """
        if radius > self.cell_size + 1e-12:
            raise ValueError("query radius exceeds grid cell size")
        centers = np.asarray(centers, dtype=float).reshape(-1, 3)
        bases = {tuple(k) for k in
                 np.floor(centers / self.cell_size).astype(np.int64)}
        hits = []
        seen = set()
        for bx, by, bz in bases:
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        key = (bx + dx, by + dy, bz + dz)
                        if key in seen:
                            continue
                        seen.add(key)
                        bucket = self._cells.get(key)
                        if bucket:
                            hits.extend(bucket)
        return np.asarray(sorted(hits), dtype=int)


def brute_force_within(points, center, radius):
    """Reference O(n) scan: indices of points with distance < radius."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    d2 = np.sum((points - np.asarray(center, dtype=float)) ** 2, axis=1)
    return np.nonzero(d2 < radius * radius)[0].tolist()
