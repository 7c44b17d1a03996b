"""Kernels for the box-constrained single-equality subproblem (RAP).

A RAP asks for min sum(f_i(x_i)) subject to sum(x_i) = R and c <= x <= d on a
contiguous slice of variables. The continuous kernel bisects the multiplier of
the coupling constraint: x_i(lam) = clamp(inv(f'_i)(lam), c_i, d_i) is
nondecreasing in lam, so the bracket [lam_lo, lam_hi] with
sum(x(lam_lo)) <= R <= sum(x(lam_hi)) narrows until every coordinate is pinned
to within the requested accuracy, after which the residual R - sum(x(lam_lo))
is distributed in index order inside the per-coordinate brackets. The integer
kernel runs the same search over unit marginal costs f_i(t) - f_i(t-1),
driving the float bracket down to adjacent representable values so that the
critical marginal is identified exactly; a heap greedy with the same
lowest-index tie-break is kept as an independent oracle.

All kernels operate on many disjoint segments at once: `offsets` delimits
segments inside compact arrays, and `idx` maps compact positions to variable
indices of the owning objective.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass

import numpy as np

from .model import ObjectiveSpec


class SolveTimeout(RuntimeError):
    """Cooperative time-limit cutoff raised from inside a kernel loop."""


_FEAS_SLACK = 1e-9


@dataclass(frozen=True)
class RapProblem:
    """One RAP: objective view, variable indices, working box, target sum."""

    objective: ObjectiveSpec
    indices: np.ndarray
    c_hat: np.ndarray
    d_hat: np.ndarray
    target: float

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        c = np.ascontiguousarray(self.c_hat, dtype=np.float64)
        d = np.ascontiguousarray(self.d_hat, dtype=np.float64)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "c_hat", c)
        object.__setattr__(self, "d_hat", d)
        object.__setattr__(self, "target", float(self.target))
        if idx.size == 0:
            raise ValueError("empty RAP")
        if np.any(c > d):
            raise ValueError("need c_hat <= d_hat")
        slack = _FEAS_SLACK * (1.0 + abs(self.target))
        if not (c.sum() - slack <= self.target <= d.sum() + slack):
            raise ValueError(
                f"infeasible RAP: sum bounds [{c.sum()}, {d.sum()}] exclude target {self.target}"
            )


@dataclass(frozen=True)
class LambdaBracket:
    """Multiplier interval and the allocations it maps to."""

    lam_lo: float
    lam_hi: float
    sum_lo: float
    sum_hi: float


def _concat_ranges(starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Concatenated aranges [starts[k], ends[k]) without a Python loop."""
    lengths = ends - starts
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    base = np.repeat(starts - np.concatenate([[0], np.cumsum(lengths)[:-1]]), lengths)
    return np.arange(total, dtype=np.int64) + base


def _segment_fill(lo, gaps, offsets, residuals, seg_of):
    """Distribute per-segment residuals into per-element gaps, index order."""
    cg = np.cumsum(gaps)
    seg_base = cg[offsets[:-1]] - gaps[offsets[:-1]]
    before = (cg - seg_base[seg_of]) - gaps  # gap mass strictly before each element
    take = np.clip(residuals[seg_of] - before, 0.0, gaps)
    return lo + take


def _clamped_inverse(obj, idx, lam_e, lo, hi):
    x = obj.inverse_derivative_at(idx, lam_e)
    if x is None:  # custom objective: invert f' by inner bisection
        x = _bisect_inverse(obj, idx, lam_e, lo, hi)
    return np.clip(x, lo, hi)


def _bisect_inverse(obj, idx, lam_e, lo, hi, iters: int = 80):
    a = lo.copy()
    b = np.where(np.isfinite(hi), hi, np.maximum(lo, 1.0) * 2.0**40)
    for _ in range(iters):
        mid = 0.5 * (a + b)
        up = obj.derivative_at(idx, mid) <= lam_e
        a = np.where(up, mid, a)
        b = np.where(up, b, mid)
    return a


def initial_bracket(p: RapProblem) -> LambdaBracket:
    """Multiplier interval [min f'(c), max f'(d)], with a fallback through a
    feasible interior point when a bound sits on a pole of f'."""
    lam_lo, lam_hi = _bracket_segments(
        p.objective,
        p.indices,
        p.c_hat,
        p.d_hat,
        np.array([0, p.indices.size]),
        np.array([p.target]),
    )
    lo, hi = float(lam_lo[0]), float(lam_hi[0])
    xl = _clamped_inverse(p.objective, p.indices, np.full(p.indices.size, lo), p.c_hat, p.d_hat)
    xh = _clamped_inverse(p.objective, p.indices, np.full(p.indices.size, hi), p.c_hat, p.d_hat)
    return LambdaBracket(lo, hi, float(xl.sum()), float(xh.sum()))


def _bracket_segments(obj, idx, lo, hi, offsets, targets):
    starts = offsets[:-1]
    free = hi > lo
    with np.errstate(divide="ignore", invalid="ignore"):
        d_lo = obj.derivative_at(idx, lo)
        d_hi = obj.derivative_at(idx, hi)
    lam_lo = np.minimum.reduceat(np.where(free, d_lo, np.inf), starts)
    lam_hi = np.maximum.reduceat(np.where(free, d_hi, -np.inf), starts)
    bad = ~np.isfinite(lam_lo) | ~np.isfinite(lam_hi)
    if np.any(bad):
        # pole or unbounded box at a bracket end: pass the bracket through a
        # strictly interior feasible point instead (room capped by the
        # residual keeps the arithmetic finite under infinite upper bounds)
        seg_of = np.repeat(np.arange(len(targets)), np.diff(offsets))
        resid = targets - np.add.reduceat(lo, starts)
        room = np.minimum(hi - lo, np.maximum(resid, 0.0)[seg_of])
        cap = np.add.reduceat(room, starts)
        share = np.where(cap > 0, resid / np.where(cap > 0, cap, 1.0), 0.0)
        x_f = lo + room * share[seg_of]
        d_f = obj.derivative_at(idx, x_f)
        lam_lo = np.where(bad, np.minimum.reduceat(np.where(free, d_f, np.inf), starts), lam_lo)
        lam_hi = np.where(bad, np.maximum.reduceat(np.where(free, d_f, -np.inf), starts), lam_hi)
    return lam_lo, lam_hi


def _fast_paths(lo, hi, offsets, targets):
    """Classify segments solvable without multiplier search.

    Returns (x, open_mask): x filled for closed segments, NaN elsewhere.
    """
    starts = offsets[:-1]
    lengths = np.diff(offsets)
    sum_lo = np.add.reduceat(lo, starts)
    sum_hi = np.add.reduceat(hi, starts)
    x = np.full(lo.shape, np.nan)
    seg_of = np.repeat(np.arange(len(targets)), lengths)
    at_lo = targets <= sum_lo
    at_hi = targets >= sum_hi
    single = lengths == 1
    closed = at_lo | at_hi | single
    m_lo = at_lo[seg_of]
    m_hi = (~at_lo & at_hi)[seg_of]
    m_single = (~at_lo & ~at_hi & single)[seg_of]
    x[m_lo] = lo[m_lo]
    x[m_hi] = hi[m_hi]
    x[m_single] = np.clip(targets[seg_of[m_single]], lo[m_single], hi[m_single])
    return x, ~closed


def _check_deadline(deadline):
    if deadline is not None and time.perf_counter() > deadline:
        raise SolveTimeout("time limit exceeded")


def solve_segments_continuous(
    obj: ObjectiveSpec,
    idx: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    offsets: np.ndarray,
    targets: np.ndarray,
    eps_x: float,
    deadline: float | None = None,
    max_iter: int = 2400,  # above the float-lattice halving depth, so the
    # adjacent-value detector is what actually ends pathological brackets
) -> np.ndarray:
    """Solve every segment to per-coordinate accuracy eps_x with exact sums."""
    x_out, open_seg = _fast_paths(lo, hi, offsets, targets)
    if not open_seg.any():
        return x_out

    # compact the open segments
    seg_ids = np.flatnonzero(open_seg)
    out_pos = _concat_ranges(offsets[:-1][seg_ids], offsets[1:][seg_ids])
    e_idx = idx[out_pos]
    e_lo = lo[out_pos]
    e_hi = hi[out_pos]
    lengths = (offsets[1:] - offsets[:-1])[seg_ids]
    seg_off = np.concatenate([[0], np.cumsum(lengths)])
    seg_tgt = targets[seg_ids]
    seg_of = np.repeat(np.arange(len(seg_ids)), lengths)

    lam_lo, lam_hi = _bracket_segments(obj, e_idx, e_lo, e_hi, seg_off, seg_tgt)
    # allocations at the bracket ends, maintained incrementally per bisection
    x_l = _clamped_inverse(obj, e_idx, lam_lo[seg_of], e_lo, e_hi)
    x_h = _clamped_inverse(obj, e_idx, lam_hi[seg_of], e_lo, e_hi)

    def finalize(sel):
        """Repair converged segments: fill residual gaps in index order."""
        elems = sel[seg_of]
        xl = x_l[elems]
        xh = x_h[elems]
        sub_len = lengths[sel]
        sub_off = np.concatenate([[0], np.cumsum(sub_len)])
        sub_of = np.repeat(np.arange(int(sel.sum())), sub_len)
        resid = seg_tgt[sel] - np.add.reduceat(xl, sub_off[:-1])
        gaps = xh - xl
        x = _segment_fill(xl, gaps, sub_off, resid, sub_of)
        leftover = seg_tgt[sel] - np.add.reduceat(x, sub_off[:-1])
        big = np.abs(leftover) > eps_x * sub_len
        if np.any(big):
            # flat-marginal segment: any feasible point is optimal there, so
            # restart from the floor and spread the budget uniformly
            np.copyto(x, e_lo[elems], where=big[sub_of])
            budget = seg_tgt[sel] - np.add.reduceat(x, sub_off[:-1])
            x = _waterfill(x, e_hi[elems], sub_off, budget, big)
        x_out[out_pos[elems]] = x

    it = 0
    while True:
        lam = 0.5 * (lam_lo + lam_hi)
        stuck = (lam <= lam_lo) | (lam >= lam_hi)  # float resolution exhausted
        xm = _clamped_inverse(obj, e_idx, lam[seg_of], e_lo, e_hi)
        sums = np.add.reduceat(xm, seg_off[:-1])
        ge = sums >= seg_tgt
        move_hi = ge & ~stuck
        move_lo = ~ge & ~stuck
        lam_hi = np.where(move_hi, lam, lam_hi)
        lam_lo = np.where(move_lo, lam, lam_lo)
        np.copyto(x_h, xm, where=move_hi[seg_of])
        np.copyto(x_l, xm, where=move_lo[seg_of])
        width = np.maximum.reduceat(x_h - x_l, seg_off[:-1])
        it += 1
        done = (width <= eps_x) | stuck | (it >= max_iter)
        if it % 8 == 0:
            _check_deadline(deadline)
        if done.all():
            finalize(np.ones(len(seg_ids), dtype=bool))
            return x_out
        if done.sum() * 2 >= len(seg_ids):
            # retire finished segments and compact the working set
            finalize(done)
            keep = ~done
            keep_elems = keep[seg_of]
            seg_ids = seg_ids[keep]
            out_pos = out_pos[keep_elems]
            e_idx = e_idx[keep_elems]
            e_lo = e_lo[keep_elems]
            e_hi = e_hi[keep_elems]
            x_l = x_l[keep_elems]
            x_h = x_h[keep_elems]
            lengths = lengths[keep]
            seg_off = np.concatenate([[0], np.cumsum(lengths)])
            seg_tgt = seg_tgt[keep]
            seg_of = np.repeat(np.arange(len(seg_ids)), lengths)
            lam_lo = lam_lo[keep]
            lam_hi = lam_hi[keep]


def _waterfill(x, hi, offsets, leftover, which):
    """Uniformly absorb per-segment leftovers into remaining capacity."""
    for k in np.flatnonzero(which):
        s, e = offsets[k], offsets[k + 1]
        resid = leftover[k]
        xs = x[s:e].copy()
        for _ in range(64):
            room = hi[s:e] - xs
            active = room > 0
            if resid <= 0 or not active.any():
                break
            share = resid / active.sum()
            add = np.minimum(np.where(active, share, 0.0), room)
            xs += add
            resid -= add.sum()
        x[s:e] = xs
    return x


def _int_alloc(obj, idx, lo, hi, lam_e):
    """Largest integer t in [lo, hi] whose unit marginal stays <= lam."""
    tl = lo.copy()
    th = hi.copy()
    while True:
        open_mask = tl < th
        if not open_mask.any():
            return tl
        tm = np.floor((tl + th + 1.0) * 0.5)
        marg = obj.value_at(idx, tm) - obj.value_at(idx, tm - 1.0)
        ok = open_mask & (marg <= lam_e)
        tl = np.where(ok, tm, tl)
        th = np.where(open_mask & ~ok, tm - 1.0, th)


def solve_segments_integer(
    obj: ObjectiveSpec,
    idx: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    offsets: np.ndarray,
    targets: np.ndarray,
    deadline: float | None = None,
) -> np.ndarray:
    """Exact integer optimum per segment, greedy-equivalent tie-breaking."""
    x_out, open_seg = _fast_paths(lo, hi, offsets, targets)
    if not open_seg.any():
        return x_out

    seg_ids = np.flatnonzero(open_seg)
    out_pos = _concat_ranges(offsets[:-1][seg_ids], offsets[1:][seg_ids])
    e_idx = idx[out_pos]
    e_lo = lo[out_pos]
    e_hi = hi[out_pos]
    lengths = (offsets[1:] - offsets[:-1])[seg_ids]
    seg_off = np.concatenate([[0], np.cumsum(lengths)])
    seg_tgt = targets[seg_ids]
    seg_of = np.repeat(np.arange(len(seg_ids)), lengths)
    starts = seg_off[:-1]

    free = e_hi > e_lo
    first = obj.value_at(e_idx, e_lo + 1.0) - obj.value_at(e_idx, e_lo)
    last = obj.value_at(e_idx, e_hi) - obj.value_at(e_idx, e_hi - 1.0)
    lam_lo = np.minimum.reduceat(np.where(free, first, np.inf), starts)
    lam_lo = np.nextafter(lam_lo - 1.0, -np.inf)  # strictly below every marginal
    lam_hi = np.maximum.reduceat(np.where(free, last, -np.inf), starts)

    it = 0
    while True:
        lam = 0.5 * (lam_lo + lam_hi)
        stuck = (lam <= lam_lo) | (lam >= lam_hi)
        if stuck.all():
            break
        lam = np.where(stuck, lam_lo, lam)  # keep frozen segments in place
        xm = _int_alloc(obj, e_idx, e_lo, e_hi, lam[seg_of])
        sums = np.add.reduceat(xm, starts)
        ge = (sums >= seg_tgt) & ~stuck
        lt = ~ge & ~stuck
        lam_hi = np.where(ge, lam, lam_hi)
        lam_lo = np.where(lt, lam, lam_lo)
        it += 1
        if it % 4 == 0:
            _check_deadline(deadline)

    # adjacent-float bracket: marginals in (lam_lo, lam_hi] all equal lam_hi
    xl = _int_alloc(obj, e_idx, e_lo, e_hi, lam_lo[seg_of])
    xh = _int_alloc(obj, e_idx, e_lo, e_hi, lam_hi[seg_of])
    resid = seg_tgt - np.add.reduceat(xl, starts)
    x = _segment_fill(xl, xh - xl, seg_off, resid, seg_of)
    x_out[out_pos] = x
    return x_out


# -- single-problem front ends -------------------------------------------


def rap_continuous(p: RapProblem, eps_x: float) -> np.ndarray:
    """Continuous RAP solution, each coordinate within eps_x of an optimum."""
    if eps_x <= 0:
        raise ValueError("need eps_x > 0")
    if not p.objective.differentiable:
        raise ValueError("continuous kernel needs a derivative")
    offsets = np.array([0, p.indices.size])
    return solve_segments_continuous(
        p.objective, p.indices, p.c_hat, p.d_hat, offsets, np.array([p.target]), eps_x
    )


def _require_integral(p: RapProblem):
    for name, arr in (("c_hat", p.c_hat), ("d_hat", p.d_hat)):
        if not np.all(arr == np.floor(arr)):
            raise ValueError(f"integer kernel needs integral {name}")
    if p.target != np.floor(p.target):
        raise ValueError("integer kernel needs an integral target")


def rap_integer(p: RapProblem) -> np.ndarray:
    """Exact integer RAP optimum via multiplier search over unit marginals."""
    _require_integral(p)
    offsets = np.array([0, p.indices.size])
    return solve_segments_integer(
        p.objective, p.indices, p.c_hat, p.d_hat, offsets, np.array([p.target])
    )


def rap_integer_greedy(p: RapProblem) -> np.ndarray:
    """Heap greedy oracle: one unit at a time to the cheapest marginal,
    lowest index on ties. Same allocation as rap_integer by construction."""
    _require_integral(p)
    x = p.c_hat.copy()
    remaining = int(round(p.target - x.sum()))
    heap = []
    for j in range(p.indices.size):
        if x[j] < p.d_hat[j]:
            i = int(p.indices[j])
            marg = p.objective.value(i, x[j] + 1.0) - p.objective.value(i, x[j])
            heapq.heappush(heap, (marg, j))
    while remaining > 0 and heap:
        _, j = heapq.heappop(heap)
        x[j] += 1.0
        remaining -= 1
        if x[j] < p.d_hat[j]:
            i = int(p.indices[j])
            marg = p.objective.value(i, x[j] + 1.0) - p.objective.value(i, x[j])
            heapq.heappush(heap, (marg, j))
    if remaining > 0:
        raise ValueError("infeasible RAP: box capacity exhausted")
    return x
