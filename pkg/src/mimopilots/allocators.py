"""Pilot allocation strategies.

Five allocators share one output type:

* loc_aware  — tiered location-aware assignment driven by the pairwise LOS
               interference score (the main algorithm).
* random     — balanced uniform assignment, the usual baseline; a
               "random_iid" variant draws pilots i.i.d. per user instead.
* greedy     — iterative repair of the worst large-scale-interference user.
* sector     — equal angular sectors, one pilot per sector.
* exhaustive — brute-force argmax of an evaluator over every assignment
               (small scenarios only).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .los_metric import los_interference
from .model import ConfigError, NetworkConfig, UserRecord, group_users
from .pilots import AllocationPlan

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass
class TierPartition:
    """Users of one cell grouped by estimated distance.

    Tiers hold local user indices; every tier except possibly the last has
    exactly pilot_len members, and their concatenation enumerates the cell
    sorted by estimated distance.
    """

    tiers: list[np.ndarray]

    @property
    def n_tiers(self) -> int:
        return len(self.tiers)


def _distance_order(cell_users: list[UserRecord]) -> list[int]:
    """Local indices sorted by estimated distance at the serving BS.

    Ties break on estimated angle and then the stable index, so the order
    depends on locations rather than on how the input list was built.
    """
    return sorted(range(len(cell_users)),
                  key=lambda j: (cell_users[j].d_est, cell_users[j].theta_est,
                                 cell_users[j].index))


def partition_tiers(cell_users: list[UserRecord], pilot_len: int) -> TierPartition:
    """Chunk one cell's users, sorted by estimated distance, into tiers."""
    order = _distance_order(cell_users)
    tiers = [np.array(order[start:start + pilot_len])
             for start in range(0, len(order), pilot_len)]
    return TierPartition(tiers=tiers)


def allocate_loc_aware(cfg: NetworkConfig, users: list[UserRecord],
                       rng: np.random.Generator | None = None) -> AllocationPlan:
    """Tiered assignment minimizing average LOS interference.

    Cell 0 first, then the rest in index order. In each cell the closest
    tier takes the pilots in order of estimated distance; every later user
    (closest first) takes the pilot, still unused inside its tier, whose
    already-assigned co-pilot users — earlier tiers of the same cell plus
    every previously finished cell — have the smallest mean interference
    score toward it. Ties go to the lowest pilot index. Deterministic.
    """
    groups = group_users(users, cfg)
    n_pilots = cfg.pilot_len
    plan = np.full((cfg.L, cfg.N), -1, dtype=int)
    holders: list[list[UserRecord]] = [[] for _ in range(n_pilots)]

    for cell in range(cfg.L):
        tiers = partition_tiers(groups[cell], n_pilots)
        for slot, j in enumerate(tiers.tiers[0]):
            plan[cell, j] = slot
            holders[slot].append(groups[cell][j])
        for tier in tiers.tiers[1:]:
            used: set[int] = set()
            for j in tier:
                u = groups[cell][j]
                best_pilot = -1
                best_score = np.inf
                for p in range(n_pilots):
                    if p in used:
                        continue
                    score = float(np.mean([
                        los_interference(other, u, bs=cell, m=cfg.M).score
                        for other in holders[p]]))
                    if score < best_score:
                        best_score = score
                        best_pilot = p
                plan[cell, j] = best_pilot
                used.add(best_pilot)
                holders[best_pilot].append(u)

    return AllocationPlan(cells=plan, allocator="loc_aware")


def allocate_random(cfg: NetworkConfig, users: list[UserRecord],
                    rng: np.random.Generator,
                    balanced: bool = True) -> AllocationPlan:
    """Random assignment, balanced by default.

    Balanced mode shuffles the pilot multiset per cell (which pilots get the
    extra use when N is not a multiple of pilot_len is itself randomized, so
    all balanced assignments are equally likely). With balanced=False each
    user draws a pilot i.i.d. uniformly, so per-pilot reuse counts fluctuate
    — the heavier collision tail the simple baseline has in practice.
    """
    n_pilots = cfg.pilot_len
    if not balanced:
        return AllocationPlan(
            cells=rng.integers(0, n_pilots, size=(cfg.L, cfg.N)),
            allocator="random_iid")
    plan = np.empty((cfg.L, cfg.N), dtype=int)
    for cell in range(cfg.L):
        labels = rng.permutation(n_pilots)
        seq = np.array([labels[t % n_pilots] for t in range(cfg.N)])
        rng.shuffle(seq)
        plan[cell] = seq
    return AllocationPlan(cells=plan, allocator="random")


def allocate_sector(cfg: NetworkConfig, users: list[UserRecord],
                    rng: np.random.Generator | None = None) -> AllocationPlan:
    """One pilot per equal angular sector, same grid in every cell.

    Sector plans need not be balanced: co-located users share a pilot by
    construction.
    """
    groups = group_users(users, cfg)
    width = TWO_PI / cfg.pilot_len
    plan = np.empty((cfg.L, cfg.N), dtype=int)
    for cell in range(cfg.L):
        for j, u in enumerate(groups[cell]):
            plan[cell, j] = min(int(u.theta_est // width), cfg.pilot_len - 1)
    return AllocationPlan(cells=plan, allocator="sector")


def _copilot_proxy(cfg: NetworkConfig, groups: list[list[UserRecord]],
                   plan: np.ndarray, cell: int, j: int, pilot: int) -> float:
    """Large-scale interference proxy of user (cell, j) if it held `pilot`.

    Sums, over every co-pilot user in the network, the estimated-gain ratio
    at the victim's BS plus the pair's LOS interference score.
    """
    u = groups[cell][j]
    own = float(u.alpha_est[cell])
    total = 0.0
    for i in range(cfg.L):
        row = plan[i]
        for jj in np.flatnonzero(row == pilot):
            if i == cell and jj == j:
                continue
            other = groups[i][jj]
            total += float(other.alpha_est[cell]) / own
            total += los_interference(other, u, bs=cell, m=cfg.M).score
    return total


def allocate_greedy(cfg: NetworkConfig, users: list[UserRecord],
                    rng: np.random.Generator, max_iters: int = 10) -> AllocationPlan:
    """Iterative repair: move the worst-proxy user to its best pilot.

    Starts from a random balanced plan. Each iteration scores every user
    with the co-pilot interference proxy, picks the worst, and reassigns it
    to the pilot minimizing its own proxy; if the move would unbalance the
    cell, the displaced pilot is swapped onto the cell member of the target
    pilot with the cheapest proxy under it. Stops on no strict improvement
    or after max_iters.
    """
    if max_iters < 1:
        raise ConfigError(f"max_iters must be >= 1, got {max_iters}")
    groups = group_users(users, cfg)
    plan = allocate_random(cfg, users, rng).cells.copy()
    n_pilots = cfg.pilot_len
    lo, hi = cfg.N // n_pilots, -(-cfg.N // n_pilots)

    for _ in range(max_iters):
        proxies = np.array([[_copilot_proxy(cfg, groups, plan, cell, j, plan[cell, j])
                             for j in range(cfg.N)] for cell in range(cfg.L)])
        cell, j = np.unravel_index(int(np.argmax(proxies)), proxies.shape)
        current = plan[cell, j]
        current_score = proxies[cell, j]
        best_pilot, best_score = current, current_score
        for p in range(n_pilots):
            if p == current:
                continue
            s = _copilot_proxy(cfg, groups, plan, cell, j, p)
            if s < best_score:
                best_score, best_pilot = s, p
        if best_pilot == current:
            break
        counts = np.bincount(plan[cell], minlength=n_pilots)
        counts[current] -= 1
        counts[best_pilot] += 1
        if counts[current] < lo or counts[best_pilot] > hi:
            # keep the cell balanced: hand `current` to the cheapest holder
            partners = [jj for jj in np.flatnonzero(plan[cell] == best_pilot) if jj != j]
            swap = min(partners, key=lambda jj: (_copilot_proxy(
                cfg, groups, plan, cell, jj, current), jj))
            plan[cell, swap] = current
        plan[cell, j] = best_pilot

    return AllocationPlan(cells=plan, allocator="greedy")


def _balanced_assignments(n_users: int, n_pilots: int):
    """Distinct permutations of the balanced pilot multiset, lexicographic."""
    base = [t % n_pilots for t in range(n_users)]
    counts = np.bincount(base, minlength=n_pilots)

    def rec(prefix, counts):
        if len(prefix) == n_users:
            yield tuple(prefix)
            return
        for p in range(n_pilots):
            if counts[p] > 0:
                counts[p] -= 1
                prefix.append(p)
                yield from rec(prefix, counts)
                prefix.pop()
                counts[p] += 1

    yield from rec([], list(counts))


def _count_balanced(n_users: int, n_pilots: int) -> int:
    counts = [len(range(t, n_users, n_pilots)) for t in range(n_pilots)]
    total = 1
    remaining = n_users
    for c in counts:
        total *= math.comb(remaining, c)
        remaining -= c
    return total


def exhaustive_search(cfg: NetworkConfig, users: list[UserRecord],
                      evaluator: Callable[[AllocationPlan], float],
                      balanced_only: bool = False,
                      max_plans: int = 10 ** 6) -> tuple[AllocationPlan, float]:
    """Brute-force argmax of `evaluator` over every per-cell assignment.

    Evaluates pilots**N assignments per cell (their product across cells),
    or only the balanced ones when requested, in lexicographic order; ties
    keep the first (lowest) plan. The evaluator should fix its own RNG seed
    so candidates are scored on common random numbers. Refuses search spaces
    larger than max_plans.
    """
    n_pilots = cfg.pilot_len
    if balanced_only:
        per_cell_count = _count_balanced(cfg.N, n_pilots)
    else:
        per_cell_count = n_pilots ** cfg.N
    total = per_cell_count ** cfg.L
    if total > max_plans:
        raise ConfigError(
            f"exhaustive search space has {total} plans "
            f"({per_cell_count} per cell over {cfg.L} cells), limit {max_plans}")
    logger.info("exhaustive search over %d plans (%d per cell); "
                "users**pilot_len bookkeeping would give %d per cell",
                total, per_cell_count, cfg.N ** n_pilots)

    if balanced_only:
        per_cell = list(_balanced_assignments(cfg.N, n_pilots))
    else:
        per_cell = list(itertools.product(range(n_pilots), repeat=cfg.N))

    best_plan = None
    best_score = -np.inf
    for combo in itertools.product(per_cell, repeat=cfg.L):
        plan = AllocationPlan(cells=np.array(combo, dtype=int), allocator="exhaustive")
        score = float(evaluator(plan))
        if score > best_score:
            best_score = score
            best_plan = plan
    assert best_plan is not None
    return best_plan, best_score


def _allocate_random_iid(cfg, users, rng):
    return allocate_random(cfg, users, rng, balanced=False)


ALLOCATORS: dict[str, Callable] = {
    "loc_aware": allocate_loc_aware,
    "random": allocate_random,
    "random_iid": _allocate_random_iid,
    "greedy": allocate_greedy,
    "sector": allocate_sector,
}
