"""Seeded instance generators for the five benchmark families.

Reproducibility contract: instances are a pure function of
(family, n, m, seed). The RNG is numpy's PCG64 stream seeded with the given
64-bit integer, and draws happen in a fixed order: breakpoints (only when
m < n), then the per-family parameter vectors, then the per-variable bound
increments alpha. Published seeds stay valid as long as that stream and order
are unchanged.

Every family draws one alpha per variable; the partial-sum bounds are the
alpha prefix sums read off at the breakpoints, and B is the full sum. This
keeps lower bounds (which are coupled to alpha in the crashing family)
feasible against every prefix bound for any choice of m.

The two F sorts are stated here in the minimized (upper-bounded) form the
solver consumes. The family originates in a covering formulation whose
change of variables reverses the index order, so "sorted" parameters flip
direction: F places its cheap-to-fill costs late (p descending, leaving
almost no bound active) and F-Active ascends its bound increments (driving
many bounds active). Sorted this way, solved instances reproduce the
reference active-constraint statistics the acceptance suite checks; sorted
the other way, they produce the opposite regime.
"""

from __future__ import annotations

import enum

import numpy as np

from .model import Family, Mode, NestedInstance, ObjectiveSpec


class InstanceFamily(str, enum.Enum):
    """Benchmark families (generator-level; the two F variants share the
    F objective but differ in how parameters are drawn)."""

    F = "f"
    F_UNIFORM = "f-uniform"
    F_ACTIVE = "f-active"
    CRASHING = "crashing"
    FUELOPT = "fuelopt"


def _sample_breakpoints(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    if m == n:
        return np.arange(1, n + 1, dtype=np.int64)
    inner = rng.choice(np.arange(1, n, dtype=np.int64), size=m - 1, replace=False)
    inner.sort()
    return np.concatenate([inner, [n]])


def generate_instance(
    family: InstanceFamily | str, n: int, m: int, seed: int
) -> NestedInstance:
    """Build a deterministic continuous-mode benchmark instance.

    Feasibility is not guaranteed: the exponential crashing draws can produce
    instances whose box capacity cannot reach B, exactly as the distributions
    allow. Callers doing statistics should skip infeasible draws.
    """
    family = InstanceFamily(family)
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n={n}, got m={m}")
    rng = np.random.Generator(np.random.PCG64(seed))
    s = _sample_breakpoints(rng, n, m)

    if family in (InstanceFamily.F, InstanceFamily.F_UNIFORM, InstanceFamily.F_ACTIVE):
        p = rng.uniform(0.0, 1.0, size=n)
        if family is InstanceFamily.F:
            p = -np.sort(-p, kind="stable")  # hungry (small-p) variables last
            alpha = rng.uniform(0.0, 1.0, size=n)
        else:
            alpha = rng.uniform(0.0, 0.5, size=n)
            if family is InstanceFamily.F_ACTIVE:
                alpha = np.sort(alpha, kind="stable")  # convex bound path
        lower = np.zeros(n)
        upper = np.ones(n)
        objective = ObjectiveSpec(Family.F, {"p": p})
    elif family is InstanceFamily.CRASHING:
        p = rng.exponential(1.0, size=n)
        d = rng.exponential(1.0, size=n)
        alpha = rng.exponential(0.75, size=n)
        lower = np.minimum(alpha, d / 2.0)
        upper = d
        objective = ObjectiveSpec(Family.CRASHING, {"k": np.zeros(n), "p": p})
    elif family is InstanceFamily.FUELOPT:
        p = rng.uniform(0.8, 1.2, size=n)
        c = rng.uniform(0.7, 1.0, size=n)
        alpha = rng.uniform(1.0, 1.2, size=n)
        lower = c
        upper = 1.5 * c
        objective = ObjectiveSpec(Family.FUELOPT, {"p": p, "c": c})
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown family {family!r}")

    cum = np.cumsum(alpha)
    a = cum[s[:-1] - 1]
    B = float(cum[-1])
    return NestedInstance(
        n=n,
        m=m,
        s=s,
        a=a,
        B=B,
        lower=lower,
        upper=upper,
        objective=objective,
        mode=Mode.CONTINUOUS,
    )
