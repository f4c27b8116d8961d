"""Minimum-cost maximum-cardinality assignment on a rectangular cost matrix.

Pairs that must never be matched carry the :data:`FORBIDDEN` sentinel
(``+inf``) and are excluded structurally, not through a large finite
penalty, so a gated pair can never leak into the result. Among all
maximum-cardinality matchings on allowed pairs the solver returns one of
minimum total cost; exact cost ties are broken toward the
lexicographically smallest (row, col) pair list so repeated runs and
golden files stay stable. (For costs whose tied totals are not exactly
representable in float64 the result is still deterministic, just not
guaranteed lexicographically minimal.)

The core is the Hungarian method in successive-shortest-augmenting-path
form with Johnson potentials, solved independently per connected
component of the allowed-pair graph. Tie handling is two-stage: a cheap
certificate test on the zero-reduced-cost digraph decides whether an
equal-cost alternative exists at all, and only then does a greedy
per-row refinement (validated by exact re-solves) run.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

FORBIDDEN = float("inf")

_INF = float("inf")


@dataclass(frozen=True)
class CostMatrix:
    """Dense rows x cols matrix of finite costs with FORBIDDEN holes."""

    costs: np.ndarray

    def __post_init__(self):
        c = np.array(self.costs, dtype=float, copy=True)
        if c.ndim != 2:
            raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
        if np.isnan(c).any():
            raise ValueError("cost matrix contains NaN")
        if np.isneginf(c).any():
            raise ValueError("cost matrix contains -inf; use FORBIDDEN (+inf)")
        object.__setattr__(self, "costs", c)

    @property
    def rows(self) -> int:
        return self.costs.shape[0]

    @property
    def cols(self) -> int:
        return self.costs.shape[1]


@dataclass(frozen=True)
class Assignment:
    """Matched (row, col) pairs plus the rows/cols left unmatched."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...]
    unmatched_cols: tuple[int, ...]
    total_cost: float


def solve(cost_matrix: CostMatrix | np.ndarray) -> Assignment:
    """Optimal assignment avoiding FORBIDDEN pairs.

    Returns the maximum-cardinality matching of minimum total cost,
    lexicographically smallest pair list under exact ties. An empty
    matrix yields an empty assignment with everything unmatched.
    """
    if not isinstance(cost_matrix, CostMatrix):
        cost_matrix = CostMatrix(np.asarray(cost_matrix, dtype=float))
    costs = cost_matrix.costs
    n_rows, n_cols = costs.shape
    allowed = np.isfinite(costs)

    match_row = np.full(n_rows, -1, dtype=int)
    for rows_idx, cols_idx in _components(allowed):
        sub = costs[np.ix_(rows_idx, cols_idx)]
        sub_match = _solve_component(sub, allowed[np.ix_(rows_idx, cols_idx)])
        for local_r, local_c in enumerate(sub_match):
            if local_c >= 0:
                match_row[rows_idx[local_r]] = cols_idx[local_c]

    pairs = tuple((r, int(c)) for r, c in enumerate(match_row) if c >= 0)
    used_cols = {c for _, c in pairs}
    total = float(sum(costs[r, c] for r, c in pairs))
    return Assignment(
        pairs=pairs,
        unmatched_rows=tuple(r for r in range(n_rows) if match_row[r] < 0),
        unmatched_cols=tuple(c for c in range(n_cols) if c not in used_cols),
        total_cost=total,
    )


def _solve_component(costs: np.ndarray, allowed: np.ndarray) -> list[int]:
    state = _SolverState(costs, allowed)
    state.run()
    if state.cardinality and state.has_equal_cost_alternative():
        refined = state.lexicographic_refinement()
        if refined is not None:
            return refined
    return state.match_row


def _components(allowed: np.ndarray):
    """Connected components of the allowed-pair bipartite graph.

    Tracker matrices are heavily gated, so components are typically tiny;
    solving them independently preserves optimality and the lexicographic
    tie-break while cutting the cubic solver cost.
    """
    n_rows, n_cols = allowed.shape
    row_seen = np.zeros(n_rows, dtype=bool)
    col_seen = np.zeros(n_cols, dtype=bool)
    for start in range(n_rows):
        if row_seen[start] or not allowed[start].any():
            continue
        rows, cols = [], []
        stack_r, stack_c = [start], []
        row_seen[start] = True
        while stack_r or stack_c:
            if stack_r:
                r = stack_r.pop()
                rows.append(r)
                for c in np.nonzero(allowed[r] & ~col_seen)[0]:
                    col_seen[c] = True
                    stack_c.append(int(c))
            else:
                c = stack_c.pop()
                cols.append(c)
                for r in np.nonzero(allowed[:, c] & ~row_seen)[0]:
                    row_seen[r] = True
                    stack_r.append(int(r))
        yield np.array(sorted(rows)), np.array(sorted(cols))


class _SolverState:
    """Successive shortest augmenting paths over one component.

    Costs are shifted so the minimum allowed entry is zero (a constant
    shift cannot change which fixed-cardinality matching is cheapest),
    then each round runs a multi-source Dijkstra over columns from all
    free rows and augments along the globally shortest path. Johnson
    potentials keep reduced costs nonnegative, so every intermediate
    matching is minimum-cost for its cardinality and the loop stops
    exactly at maximum cardinality.
    """

    def __init__(self, costs: np.ndarray, allowed: np.ndarray):
        self.n_rows, self.n_cols = costs.shape
        self.costs = costs
        finite = costs[allowed]
        self.offset = float(finite.min()) if finite.size else 0.0
        self.w = (np.where(allowed, costs - self.offset, np.inf)).tolist()
        self.adj = [[int(c) for c in np.flatnonzero(allowed[r])] for r in range(self.n_rows)]
        self.pot_r = [0.0] * self.n_rows
        self.pot_c = [0.0] * self.n_cols
        self.pot_t = 0.0
        self.match_row = [-1] * self.n_rows
        self.match_col = [-1] * self.n_cols
        self.cardinality = 0

    def run(self) -> None:
        free_rows = list(range(self.n_rows))
        while free_rows:
            target, dist_c, parent_c = self._dijkstra(free_rows)
            if target < 0:
                break
            self._update_potentials(dist_c)
            self._augment(target, parent_c, free_rows)
            self.cardinality += 1

    def _dijkstra(self, free_rows):
        w, adj = self.w, self.adj
        pot_r, pot_c = self.pot_r, self.pot_c
        dist_c = [_INF] * self.n_cols
        parent_c = [-1] * self.n_cols
        done_c = [False] * self.n_cols
        for r in free_rows:
            wr, pr = w[r], pot_r[r]
            for c in adj[r]:
                rc = wr[c] + pr - pot_c[c]
                if rc < 0.0:
                    rc = 0.0  # clamp float drift
                if rc < dist_c[c]:
                    dist_c[c] = rc
                    parent_c[c] = r
        dist_t, target = _INF, -1
        while True:
            best, best_c = _INF, -1
            for c in range(self.n_cols):
                if not done_c[c] and dist_c[c] < best:
                    best = dist_c[c]
                    best_c = c
            if dist_t <= best:
                self._last_dist_t = dist_t
                return target, dist_c, parent_c
            done_c[best_c] = True
            i = self.match_col[best_c]
            if i == -1:
                arrival = best + pot_c[best_c] - self.pot_t
                if arrival < dist_t:
                    dist_t = arrival
                    target = best_c
            else:
                wi, pi = w[i], pot_r[i]
                for c in adj[i]:
                    if done_c[c]:
                        continue
                    rc = wi[c] + pi - pot_c[c]
                    if rc < 0.0:
                        rc = 0.0
                    nd = best + rc
                    if nd < dist_c[c]:
                        dist_c[c] = nd
                        parent_c[c] = i

        # unreachable

    def _update_potentials(self, dist_c) -> None:
        bound = self._last_dist_t
        for c in range(self.n_cols):
            bump = dist_c[c] if dist_c[c] < bound else bound
            self.pot_c[c] += bump
            i = self.match_col[c]
            if i != -1:
                self.pot_r[i] += bump  # matched row rides its column
        self.pot_t += bound

    def _augment(self, target, parent_c, free_rows) -> None:
        j = target
        while True:
            i = parent_c[j]
            prev = self.match_row[i]
            self.match_row[i] = j
            self.match_col[j] = i
            if prev == -1:
                free_rows.remove(i)
                return
            j = prev

    # -- tie handling ---------------------------------------------------

    def _tolerance(self) -> float:
        scale = 1.0
        for row in self.w:
            for v in row:
                if v != _INF and abs(v) > scale:
                    scale = abs(v)
        top = max((abs(p) for p in self.pot_c), default=0.0)
        return 1e-9 * max(scale, top, 1.0)

    def _zero_arcs(self, tol):
        """Out-arcs of the zero-reduced-cost digraph: row -> col across
        unmatched zero-rc pairs, col -> its matched row."""
        arcs_from_row = [[] for _ in range(self.n_rows)]
        for r in range(self.n_rows):
            wr, pr, mr = self.w[r], self.pot_r[r], self.match_row[r]
            for c in self.adj[r]:
                if c != mr and abs(wr[c] + pr - self.pot_c[c]) <= tol:
                    arcs_from_row[r].append(c)
        return arcs_from_row

    def has_equal_cost_alternative(self) -> bool:
        """Exact certificate for ties, from complementary slackness.

        Any second optimum differs from the solver's matching by a
        component that is (a) an alternating cycle of zero-reduced-cost
        pairs, (b) a zero-rc alternating path from a free row to a
        matched row of zero potential (row swap at equal cost), or (c)
        a zero-rc alternating path from a matched column at the sink
        potential to a free column at the sink potential (column swap).
        Absence of all three proves the optimum unique.
        """
        tol = self._tolerance()
        arcs = self._zero_arcs(tol)

        # (a) cycle: Kahn's algorithm on the digraph (rows + cols)
        indeg_c = [0] * self.n_cols
        indeg_r = [0] * self.n_rows
        for r in range(self.n_rows):
            for c in arcs[r]:
                indeg_c[c] += 1
        for c, r in enumerate(self.match_col):
            if r != -1:
                indeg_r[r] += 1
        queue = deque(
            [("r", r) for r in range(self.n_rows) if indeg_r[r] == 0]
            + [("c", c) for c in range(self.n_cols) if indeg_c[c] == 0]
        )
        removed = 0
        while queue:
            kind, idx = queue.popleft()
            removed += 1
            if kind == "r":
                for c in arcs[idx]:
                    indeg_c[c] -= 1
                    if indeg_c[c] == 0:
                        queue.append(("c", c))
            else:
                r = self.match_col[idx]
                if r != -1:
                    indeg_r[r] -= 1
                    if indeg_r[r] == 0:
                        queue.append(("r", r))
        if removed < self.n_rows + self.n_cols:
            return True

        # (b) free row -> matched row with potential ~0
        seen_r = [False] * self.n_rows
        seen_c = [False] * self.n_cols
        stack = [r for r in range(self.n_rows) if self.match_row[r] == -1]
        for r in stack:
            seen_r[r] = True
        while stack:
            r = stack.pop()
            if self.match_row[r] != -1 and abs(self.pot_r[r]) <= tol:
                return True
            for c in arcs[r]:
                if not seen_c[c]:
                    seen_c[c] = True
                    nxt = self.match_col[c]
                    if nxt != -1 and not seen_r[nxt]:
                        seen_r[nxt] = True
                        stack.append(nxt)

        # (c) matched col at sink potential -> free col at sink potential
        seen_r = [False] * self.n_rows
        seen_c = [False] * self.n_cols
        stack = []
        for c in range(self.n_cols):
            if self.match_col[c] != -1 and abs(self.pot_c[c] - self.pot_t) <= tol:
                seen_c[c] = True
                stack.append(c)
        while stack:
            c = stack.pop()
            if self.match_col[c] == -1:
                if abs(self.pot_c[c] - self.pot_t) <= tol:
                    return True
                continue
            r = self.match_col[c]
            if not seen_r[r]:
                seen_r[r] = True
                for c2 in arcs[r]:
                    if not seen_c[c2]:
                        seen_c[c2] = True
                        stack.append(c2)
        return False

    def lexicographic_refinement(self):
        """Greedy per-row scan for the lexicographically smallest optimum.

        Candidate pairs are limited to zero-reduced-cost edges (every
        optimal matching lives there); each tentative fix is validated by
        re-solving the remaining subproblem and comparing total cost
        exactly. Returns None when exact validation is impossible (float
        near-ties), in which case the caller keeps the solver matching.
        """
        target_cost = sum(
            self.costs[r][c] for r, c in enumerate(self.match_row) if c >= 0
        )
        tol = self._tolerance()
        costs, n_rows, n_cols = self.costs, self.n_rows, self.n_cols
        allowed = np.isfinite(costs)
        reduced_ok = [
            [
                abs(self.w[r][c] + self.pot_r[r] - self.pot_c[c]) <= tol
                for c in range(n_cols)
            ]
            for r in range(n_rows)
        ]
        chosen = [-1] * n_rows
        used_cols = [False] * n_cols
        fixed_cost = 0.0
        remaining = self.cardinality
        for r in range(n_rows):
            if remaining == 0:
                break
            row_keep = [i for i in range(r + 1, n_rows)]
            for c in self.adj[r]:
                if used_cols[c] or not reduced_ok[r][c]:
                    continue
                col_keep = [j for j in range(n_cols) if not used_cols[j] and j != c]
                sub = costs[np.ix_(row_keep, col_keep)] if row_keep and col_keep else np.zeros((len(row_keep), len(col_keep)))
                sub_state = _SolverState(sub, allowed[np.ix_(row_keep, col_keep)] if row_keep and col_keep else np.zeros((len(row_keep), len(col_keep)), dtype=bool))
                sub_state.run()
                if sub_state.cardinality != remaining - 1:
                    continue
                rest = sum(
                    sub[i][j] for i, j in enumerate(sub_state.match_row) if j >= 0
                )
                if fixed_cost + costs[r][c] + rest == target_cost:
                    chosen[r] = c
                    used_cols[c] = True
                    fixed_cost += costs[r][c]
                    remaining -= 1
                    break
        return chosen if remaining == 0 else None
