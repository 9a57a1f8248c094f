"""Exact covering radius of PGL(2,q) in S_{q+1} by pruned exhaustive search.

Left-multiplying by a group element preserves distance to the group, and
the group is sharply 3-transitive, so every permutation reduces to one
fixing the points 0, 1 and infinity.  The search therefore enumerates the
(q-2)! permutations of the remaining points in lexicographic image order,
tracks a running maximum, and abandons a candidate as soon as some group
element agrees with it in enough places that it can no longer beat that
maximum.  Batches are merged strictly in rank order, so the result and the
reported maximizer never depend on thread count, and a checkpoint of the
merge frontier makes long runs resumable.
"""

from __future__ import annotations

import itertools
import json
import logging
import math
import os
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._parallel import ordered_map
from .metric import expected_cr
from .projline import Permutation, ProjLine

logger = logging.getLogger(__name__)

# (q-2)! candidates: instant through q = 9, opt-in for 11 and 13.
EXACT_MAX_Q = 9
LONG_RUN_QS = (11, 13)


class SearchBudgetError(Exception):
    """The requested exact search exceeds the configured budget."""

    def __init__(self, q: int, message: str):
        super().__init__(message)
        self.q = q


@dataclass(frozen=True)
class SearchReport:
    """Result of an exact covering-radius search."""

    q: int
    covering_radius: int
    witness_of_max: Permutation
    permutations_scanned: int
    wall_time: float
    mode: str  # "exact" or "sampled"

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "covering_radius": self.covering_radius,
            "witness_of_max": list(self.witness_of_max.images),
            "permutations_scanned": self.permutations_scanned,
            "wall_time": self.wall_time,
            "mode": self.mode,
        }


def stabilize_triple(line: ProjLine, v: Permutation) -> Permutation:
    """g*v for the unique g sending v(0), v(1), v(inf) back to 0, 1, inf.

    Distance to the group is preserved, and the result fixes those three
    points, so searching only such permutations loses nothing.
    """
    inf = line.infinity
    g = line.invert(line.from_triple(v[0], v[1], v[inf]))
    return line.perm_of(g).compose(v)


# ---------------------------------------------------------------------------
# Candidate enumeration: permutations fixing 0, 1 and infinity, ranked in
# lexicographic order of the image array on the free points 2..q-1.


def _unrank_free_block(ranks: np.ndarray, m: int) -> np.ndarray:
    """Row k is the permutation of 0..m-1 with lexicographic rank ranks[k]."""
    b = ranks.size
    avail = np.tile(np.arange(m, dtype=np.int16), (b, 1))
    out = np.empty((b, m), dtype=np.int16)
    rem = ranks.astype(np.int64).copy()
    for i in range(m):
        digit, rem = np.divmod(rem, math.factorial(m - 1 - i))
        out[:, i] = np.take_along_axis(avail, digit[:, None], axis=1)[:, 0]
        k = avail.shape[1]
        idx = np.arange(k - 1, dtype=np.int64)[None, :]
        idx = idx + (idx >= digit[:, None])
        avail = np.take_along_axis(avail, idx, axis=1)
    return out

def candidate_batch(line: ProjLine, ranks: np.ndarray) -> np.ndarray:
    """Image arrays (len(ranks), q+1) of the triple-fixing candidates."""
    q = line.q
    free = _unrank_free_block(ranks, q - 2)
    out = np.empty((ranks.size, q + 1), dtype=np.int16)
    out[:, 0] = 0
    out[:, 1] = 1
    out[:, 2:q] = free + 2
    out[:, q] = q
    return out


def candidate_of_rank(line: ProjLine, rank: int) -> Permutation:
    images = candidate_batch(line, np.asarray([rank], dtype=np.int64))[0]
    return Permutation(tuple(int(v) for v in images))


# ---------------------------------------------------------------------------
# Checkpointing.


def save_checkpoint(path: str, state: dict) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(state, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def load_checkpoint(path: str) -> Optional[dict]:
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------


class _RunningMax:
    """Shared pruning hint; stale reads only weaken pruning, never results."""

    def __init__(self, value: int):
        self.value = value


def exact_covering_radius(line: ProjLine, *, long_run: bool = False,
                          threads: int = 1, batch_size: int = 4096,
                          group_chunk: int = 256,
                          checkpoint_path: Optional[str] = None,
                          checkpoint_interval: int = 10_000_000) -> SearchReport:
    """Exact max over S_{q+1} of the distance to PGL(2,q).

    Equals the naive maximum over all (q+1)! permutations; only the
    (q-2)! triple-fixing representatives are enumerated.  The reported
    witness is the lexicographically smallest maximizing candidate.
    """
    q = line.q
    if q > EXACT_MAX_Q and not (long_run and q in LONG_RUN_QS):
        if q in LONG_RUN_QS:
            raise SearchBudgetError(
                q, f"exact search at q={q} enumerates {math.factorial(q - 2)} "
                   f"candidates; pass long_run (--long) to opt in")
        raise SearchBudgetError(
            q, f"exact search is not supported beyond q={max(LONG_RUN_QS)}")

    n = line.n_points
    total = math.factorial(q - 2)
    group = line.group_images()
    running = _RunningMax(-1)

    best = -1
    best_rank = -1
    start_rank = 0
    prior_elapsed = 0.0
    if checkpoint_path:
        state = load_checkpoint(checkpoint_path)
        if state is not None:
            if state["q"] != q:
                raise ValueError(
                    f"checkpoint {checkpoint_path} is for q={state['q']}, not q={q}")
            start_rank = state["next_candidate_rank"]
            best = state["current_max"]
            best_rank = state.get("best_rank", -1)
            prior_elapsed = state.get("elapsed", 0.0)
            running.value = best
            logger.info("resuming q=%d at rank %d with current max %d",
                        q, start_rank, best)

    def scan_batch(bounds: tuple[int, int]):
        r0, r1 = bounds
        ranks = np.arange(r0, r1, dtype=np.int64)
        cand = candidate_batch(line, ranks)
        alive = np.arange(ranks.size, dtype=np.int64)
        max_agree = np.zeros(ranks.size, dtype=np.int16)
        for c0 in range(0, group.shape[0], group_chunk):
            block = group[c0:c0 + group_chunk]
            agree = (cand[alive][:, None, :] == block[None, :, :]).sum(
                axis=2, dtype=np.int16)
            max_agree[alive] = np.maximum(max_agree[alive], agree.max(axis=1))
            # A candidate can still beat the running max only while every
            # group element seen so far disagrees with it in more places.
            keep = max_agree[alive] < n - running.value
            alive = alive[keep]
            if alive.size == 0:
                break
        return r1, r0 + alive, n - max_agree[alive]

    t0 = time.perf_counter()
    sized = max(1, batch_size)
    bounds = ((r, min(r + sized, total)) for r in range(start_rank, total, sized))
    done = start_rank
    since_checkpoint = 0

    def write_checkpoint():
        if checkpoint_path:
            save_checkpoint(checkpoint_path, {
                "q": q,
                "next_candidate_rank": done,
                "current_max": best,
                "best_rank": best_rank,
                "witness_so_far": (list(candidate_of_rank(line, best_rank).images)
                                   if best_rank >= 0 else None),
                "elapsed": prior_elapsed + time.perf_counter() - t0,
            })

    try:
        for r1, survivor_ranks, survivor_dists in ordered_map(scan_batch, bounds, threads):
            for rank, dist in zip(survivor_ranks.tolist(), survivor_dists.tolist()):
                if dist > best:
                    best = dist
                    best_rank = rank
                    running.value = max(running.value, best)
            since_checkpoint += r1 - done
            done = r1
            if checkpoint_path and since_checkpoint >= checkpoint_interval:
                write_checkpoint()
                since_checkpoint = 0
    except BaseException:
        write_checkpoint()
        raise

    wall = prior_elapsed + time.perf_counter() - t0
    if checkpoint_path:
        write_checkpoint()
    return SearchReport(
        q=q,
        covering_radius=best,
        witness_of_max=candidate_of_rank(line, best_rank),
        permutations_scanned=total,
        wall_time=wall,
        mode="exact",
    )


def naive_covering_radius(line: ProjLine) -> tuple[int, Permutation]:
    """Brute-force max over all (q+1)! permutations; oracle for small q."""
    q = line.q
    if q > 5:
        raise ValueError("naive search is an oracle for q <= 5 only")
    n = line.n_points
    group = line.group_images()
    best = -1
    best_perm = None
    for images in itertools.permutations(range(n)):
        row = np.asarray(images, dtype=np.int16)
        dist = n - int((group == row).sum(axis=1).max())
        if dist > best:
            best = dist
            best_perm = images
    return best, Permutation(best_perm)


def sample_distances(line: ProjLine, trials: int, seed: int, *,
                     threads: int = 1, sample_chunk: int = 2048,
                     group_batch: int = 1 << 15) -> np.ndarray:
    """Histogram of distance-to-group over uniform random permutations.

    Deterministic for a given seed regardless of thread count: permutations
    come from a single counter-based stream in trial order, and only the
    distance evaluations are parallelized.  Index d of the result holds the
    number of sampled permutations at distance d.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n = line.n_points
    rng = np.random.Generator(np.random.Philox(key=seed))
    counts = np.zeros(n + 1, dtype=np.int64)
    materialized = line.group_images() if line.q <= 64 else None

    def distances(rows: np.ndarray) -> np.ndarray:
        best_agree = np.zeros(rows.shape[0], dtype=np.int16)
        if materialized is not None:
            blocks = (materialized[i:i + group_batch]
                      for i in range(0, materialized.shape[0], group_batch))
        else:
            blocks = (imgs for _, imgs in line.group_image_batches(batch_size=group_batch))
        for block in blocks:
            agree = (rows[:, None, :] == block[None, :, :]).sum(axis=2, dtype=np.int16)
            np.maximum(best_agree, agree.max(axis=1), out=best_agree)
        return np.bincount(n - best_agree, minlength=n + 1)

    done = 0
    while done < trials:
        c = min(sample_chunk, trials - done)
        rows = np.tile(np.arange(n, dtype=np.int16), (c, 1))
        rng.permuted(rows, axis=1, out=rows)
        pieces = np.array_split(rows, max(1, threads))
        for hist in ordered_map(distances, (p for p in pieces if p.size), threads):
            counts += hist
        done += c

    observed_max = int(np.nonzero(counts)[0].max())
    try:
        bound = expected_cr(line.q)
    except ValueError:
        bound = None
    if bound is not None and observed_max > bound:
        logger.critical(
            "sampled a permutation at distance %d > %d from PGL(2,%d); "
            "this contradicts the covering-radius formula",
            observed_max, bound, line.q)
    return counts
