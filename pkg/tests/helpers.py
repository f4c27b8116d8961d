"""Independent oracles used across the suite.

Each oracle deliberately takes the dumbest correct route (rasterized
counting, exhaustive enumeration, textbook dense linear algebra) so it
shares no code path with the implementation it checks.
"""

import numpy as np

from dropkit.geometry import BBox


def raster_iou(a: BBox, b: BBox, cells_per_unit: int = 1) -> float:
    """IoU by counting grid cells inside each box.

    Exact for integer-coordinate boxes at one cell per unit; finer grids
    approximate real-valued boxes.
    """
    x0 = min(a.x, b.x)
    y0 = min(a.y, b.y)
    x1 = max(a.x + a.w, b.x + b.w)
    y1 = max(a.y + a.h, b.y + b.h)
    nx = int(round((x1 - x0) * cells_per_unit))
    ny = int(round((y1 - y0) * cells_per_unit))
    xs = x0 + (np.arange(nx) + 0.5) / cells_per_unit
    ys = y0 + (np.arange(ny) + 0.5) / cells_per_unit
    gx, gy = np.meshgrid(xs, ys)

    def inside(box):
        return (
            (gx > box.x)
            & (gx < box.x + box.w)
            & (gy > box.y)
            & (gy < box.y + box.h)
        )

    in_a = inside(a)
    in_b = inside(b)
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def brute_force_assignment(costs: np.ndarray):
    """(cardinality, total cost, lexicographically smallest pair list) of the
    optimal matching, by recursive enumeration with cardinality pruning."""
    n_rows, n_cols = costs.shape
    best = None

    def rec(row, used, pairs, cost):
        nonlocal best
        if best is not None and len(pairs) + (n_rows - row) < -best[0]:
            return
        if row == n_rows:
            key = (-len(pairs), cost, tuple(pairs))
            if best is None or key < best:
                best = key
            return
        for col in range(n_cols):
            if col not in used and np.isfinite(costs[row, col]):
                rec(row + 1, used | {col}, pairs + [(row, col)], cost + costs[row, col])
        rec(row + 1, used, pairs, cost)

    rec(0, set(), [], 0.0)
    card, cost, pairs = best
    return -card, cost, pairs


class DenseKalmanOracle:
    """Textbook constant-velocity filter over the same 8-d box state.

    Written independently of the package implementation: plain matrix
    products and explicit inverses, no gain tricks, no symmetrization.
    """

    def __init__(self, pos_std=1 / 20, vel_std=1 / 160, meas_std=1 / 20):
        self.pos_std = pos_std
        self.vel_std = vel_std
        self.meas_std = meas_std
        self.F = np.eye(8)
        for i in range(4):
            self.F[i, i + 4] = 1.0
        self.H = np.hstack([np.eye(4), np.zeros((4, 4))])

    def initiate(self, m):
        m = np.asarray(m, dtype=float)
        x = np.concatenate([m, np.zeros(4)])
        h = m[3]
        std = np.array(
            [
                2 * self.pos_std * h,
                2 * self.pos_std * h,
                self.pos_std * 0.2,
                2 * self.pos_std * h,
                10 * self.vel_std * h,
                10 * self.vel_std * h,
                self.vel_std * 0.0016,
                10 * self.vel_std * h,
            ]
        )
        return x, np.diag(std**2)

    def _q(self, h):
        std = np.array(
            [
                self.pos_std * h,
                self.pos_std * h,
                self.pos_std * 0.2,
                self.pos_std * h,
                self.vel_std * h,
                self.vel_std * h,
                self.vel_std * 0.0016,
                self.vel_std * h,
            ]
        )
        return np.diag(std**2)

    def _r(self, h):
        std = np.array(
            [self.meas_std * h, self.meas_std * h, self.meas_std * 2.0, self.meas_std * h]
        )
        return np.diag(std**2)

    def predict(self, x, P):
        x = self.F @ x
        x[2] = max(x[2], 1e-3)
        x[3] = max(x[3], 1e-3)
        P = self.F @ P @ self.F.T + self._q(x[3])
        return x, P

    def update(self, x, P, m):
        m = np.asarray(m, dtype=float)
        S = self.H @ P @ self.H.T + self._r(x[3])
        K = P @ self.H.T @ np.linalg.inv(S)
        x = x + K @ (m - self.H @ x)
        P = (np.eye(8) - K @ self.H) @ P
        return x, P

    def gating(self, x, P, m):
        m = np.asarray(m, dtype=float)
        S = self.H @ P @ self.H.T + self._r(x[3])
        z = m - self.H @ x
        return float(z @ np.linalg.solve(S, z))


def flood_fill_regions(mask: np.ndarray) -> int:
    """Number of 4-connected True regions (tiny BFS, no scipy)."""
    seen = np.zeros_like(mask, dtype=bool)
    regions = 0
    h, w = mask.shape
    for sy in range(h):
        for sx in range(w):
            if not mask[sy, sx] or seen[sy, sx]:
                continue
            regions += 1
            stack = [(sy, sx)]
            seen[sy, sx] = True
            while stack:
                y, x = stack.pop()
                for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                    if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                        seen[ny, nx] = True
                        stack.append((ny, nx))
    return regions
