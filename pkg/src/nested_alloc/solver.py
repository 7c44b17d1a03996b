"""Decomposition solver: bound tightening, feasibility, level-ordered recursion.

The solve pipeline works on the zero-based form of the instance (variables
shifted down by their lower bounds) for tightening and feasibility, exactly as
the crashing/fuel families reduce to the core model, while the RAP kernels run
in original coordinates with the lower bounds folded into the working boxes.

The recursion splits the block range [v, w] at t = (v + w) // 2, solves both
halves, converts their solutions into per-variable bounds (left half may only
shrink, right half may only grow), and re-solves the merged range as a single
RAP. It is executed iteratively, deepest level first, so that a million-block
instance neither recurses a million frames deep nor pays per-subproblem Python
overhead: all subproblems of one level are disjoint and solved as a batch.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .model import (
    Mode,
    NestedInstance,
    Solution,
    SolveStats,
    Status,
    objective_value,
)
from .oracles import count_active_constraints
from .rap import (
    SolveTimeout,
    _concat_ranges,
    solve_segments_continuous,
    solve_segments_integer,
)


@dataclass
class WorkingBounds:
    """Per-variable interval arrays in the zero-based form.

    `abar` has m+1 entries with abar[0] = 0 and abar[m] = B - sum(lower);
    `cbar`/`dbar` are the current per-variable bounds (initially 0 and
    upper - lower).
    """

    cbar: np.ndarray
    dbar: np.ndarray
    abar: np.ndarray


def tighten(inst: NestedInstance) -> WorkingBounds:
    """Cap the partial-sum bounds by reachable box capacity.

    In the zero-based form: abar[i] = min(abar[i-1] + block capacity, a[i]),
    after first capping each a[i] by every later bound (prefix sums cannot
    decrease, so a bound larger than a later one is slack that only appears
    once lower bounds have been shifted out).
    """
    P = inst.positions
    d_shift = inst.upper - inst.lower
    lower_cum = np.concatenate([[0.0], np.cumsum(inst.lower)])
    a_shift = inst.a - lower_cum[inst.s[:-1]]
    b_shift = inst.B - lower_cum[inst.n]

    tail = np.append(a_shift, b_shift)
    capped = np.minimum.accumulate(tail[::-1])[::-1][:-1]

    # capacities beyond the total act like the total; the clamp keeps the
    # unrolled recurrence finite under infinite upper bounds
    block_cap = np.minimum(np.add.reduceat(d_shift, P[:-1]), max(b_shift, 0.0))
    cum_cap = np.cumsum(block_cap)
    abar = np.empty(inst.m + 1)
    abar[0] = 0.0
    abar[-1] = b_shift
    if inst.m > 1:
        # unrolled recurrence: abar[i] = cum_cap[i] + min_{j<=i}(capped[j] - cum_cap[j])
        # with the j = 0 term (capacity alone, no bound) entering as 0
        g = np.concatenate([[0.0], capped - cum_cap[: inst.m - 1]])
        abar[1:-1] = cum_cap[: inst.m - 1] + np.minimum.accumulate(g)[1:]
    return WorkingBounds(cbar=np.zeros(inst.n), dbar=d_shift.copy(), abar=abar)


def check_feasible(inst: NestedInstance, wb: WorkingBounds) -> bool:
    """Feasibility after tightening: every suffix must be able to carry the
    resource left over by the tightened prefix bound, and the tightened
    bounds must still ascend (they cannot when lower bounds alone overshoot
    some partial-sum bound). Comparisons carry a round-off allowance."""
    tol = 1e-9 * (1.0 + abs(wb.abar[-1]))
    if np.any(np.diff(wb.abar) < -tol):
        return False
    P = inst.positions
    suffix = np.concatenate([np.cumsum(wb.dbar[::-1])[::-1], [0.0]])[P[:-1]]
    return not np.any(suffix < wb.abar[-1] - wb.abar[:-1] - tol)


def block_feasible_fill(inst: NestedInstance, wb: WorkingBounds, v: int) -> np.ndarray:
    """Feasible allocation for block v (zero-based form): fill left to right,
    each variable takes what remains up to its bound."""
    P = inst.positions
    lo, hi = P[v - 1], P[v]
    cap = wb.abar[v] - wb.abar[v - 1]
    x = np.empty(hi - lo)
    for j in range(hi - lo):
        x[j] = min(wb.dbar[lo + j], max(cap - x[:j].sum(), 0.0))
    return x


def _build_levels(m: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-depth (v, w) block ranges of the midpoint-split recursion tree."""
    levels = [(np.array([1], dtype=np.int64), np.array([m], dtype=np.int64))]
    while True:
        v, w = levels[-1]
        split = v < w
        if not split.any():
            break
        sv, sw = v[split], w[split]
        t = (sv + sw) // 2
        nv = np.empty(2 * sv.size, dtype=np.int64)
        nw = np.empty(2 * sv.size, dtype=np.int64)
        nv[0::2], nw[0::2] = sv, t
        nv[1::2], nw[1::2] = t + 1, sw
        levels.append((nv, nw))
    return levels


def solve(
    inst: NestedInstance,
    eps: float | None = None,
    time_limit_s: float | None = None,
) -> tuple[Solution, SolveStats]:
    """Optimal integer or eps-accurate continuous solution with statistics.

    Continuous mode solves each subproblem to eps / levels so that bound
    transfers between levels cannot accumulate more than eps overall.
    """
    t0 = time.perf_counter()
    deadline = None if time_limit_s is None else t0 + time_limit_s
    if inst.mode is Mode.CONTINUOUS:
        if eps is None or eps <= 0:
            raise ValueError("continuous mode needs eps > 0")
        if not inst.objective.differentiable:
            raise ValueError("continuous mode needs a differentiable objective")
    stats = SolveStats()

    wb = tighten(inst)
    if not check_feasible(inst, wb):
        stats.wall_ms = (time.perf_counter() - t0) * 1e3
        return Solution(None, math.nan, Status.INFEASIBLE, eps), stats

    levels = _build_levels(inst.m)
    stats.recursion_levels = len(levels)
    eps_sub = None if eps is None else eps / len(levels)

    P = inst.positions
    lower_cum = np.concatenate([[0.0], np.cumsum(inst.lower)])
    abar = np.maximum.accumulate(wb.abar)  # iron out round-off dips
    cb = inst.lower.copy()
    db = inst.upper.copy()
    x = np.zeros(inst.n)

    for depth in range(len(levels) - 1, -1, -1):
        v, w = levels[depth]
        merge = v < w
        if merge.any():
            mv, mw = v[merge], w[merge]
            t = (mv + mw) // 2
            left = _concat_ranges(P[mv - 1], P[t])
            right = _concat_ranges(P[t], P[mw])
            cb[left] = inst.lower[left]
            db[left] = x[left]
            cb[right] = x[right]
            db[right] = inst.upper[right]

        starts, ends = P[v - 1], P[w]
        # targets in original coordinates: shifted block budget plus lower mass
        targets = (abar[w] - abar[v - 1]) + (lower_cum[ends] - lower_cum[starts])
        e_idx = _concat_ranges(starts, ends)
        offsets = np.concatenate([[0], np.cumsum(ends - starts)])
        if inst.mode is Mode.CONTINUOUS:
            vals = solve_segments_continuous(
                inst.objective, e_idx, cb[e_idx], db[e_idx], offsets, targets, eps_sub, deadline
            )
        else:
            vals = solve_segments_integer(
                inst.objective, e_idx, cb[e_idx], db[e_idx], offsets, targets, deadline
            )
        assert np.all(vals >= cb[e_idx] - 1e-9) and np.all(vals <= db[e_idx] + 1e-9)
        x[e_idx] = vals
        stats.rap_calls += int(v.size)
        if deadline is not None and time.perf_counter() > deadline:
            raise SolveTimeout("time limit exceeded")

    tol = 0.0 if inst.mode is Mode.INTEGER else active_tolerance(inst, eps)
    stats.active_constraints = count_active_constraints(inst, x, tol)
    sol = Solution(x, objective_value(inst, x), Status.OPTIMAL, eps)
    stats.wall_ms = (time.perf_counter() - t0) * 1e3
    return sol, stats


def active_tolerance(inst: NestedInstance, eps: float) -> float:
    """Slack threshold for counting a prefix bound as active: generous
    against accumulated per-coordinate error, still far under typical
    inter-bound spacing."""
    return max(1e-9, min(1e-4, 10.0 * inst.n * eps))
