"""
Replica Execution

Replicas are grouped into fixed-size blocks. Block b of stream s draws from
its own PCG64 generator seeded by SeedSequence(master, spawn_key=(s, b)),
blocks run on a thread pool and results are reassembled in block order, so
the output does not depend on the number of workers.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, TypeVar

import numpy as np

from ..config import get_settings
from ..errors import ParameterError, ResourceLimitError
from ..schemas.dynamics import BatchPath

logger = logging.getLogger(__name__)

T = TypeVar("T")


@dataclass(frozen=True)
class ReplicaBlock:
    index: int
    first: int   # global index of the block's first replica
    size: int


def block_rng(master_seed: int, block_index: int, stream: int = 0) -> np.random.Generator:
    seq = np.random.SeedSequence(master_seed, spawn_key=(stream, block_index))
    return np.random.Generator(np.random.PCG64(seq))


def replica_blocks(n_replicas: int, block_size: int) -> list[ReplicaBlock]:
    if n_replicas < 1 or block_size < 1:
        raise ParameterError("replica count and block size must be positive")
    return [
        ReplicaBlock(index=i, first=first, size=min(block_size, n_replicas - first))
        for i, first in enumerate(range(0, n_replicas, block_size))
    ]


class ReplicaRunner:
    """Runs a block function over all replica blocks of one random stream."""

    def __init__(
        self,
        master_seed: Optional[int] = None,
        workers: Optional[int] = None,
        block_size: Optional[int] = None,
    ):
        settings = get_settings()
        self.master_seed = settings.seed if master_seed is None else master_seed
        self.workers = max(1, workers or settings.workers)
        self.block_size = block_size or settings.block_size

    def map_blocks(
        self,
        fn: Callable[[ReplicaBlock, np.random.Generator], T],
        n_replicas: int,
        stream: int = 0,
    ) -> list[T]:
        blocks = replica_blocks(n_replicas, self.block_size)
        started = time.perf_counter()

        def run(block: ReplicaBlock) -> T:
            result = fn(block, block_rng(self.master_seed, block.index, stream))
            logger.debug("stream %d block %d (%d replicas) done", stream, block.index, block.size)
            return result

        if self.workers == 1 or len(blocks) == 1:
            results = [run(block) for block in blocks]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(run, blocks))
        logger.info(
            "stream %d: %d replicas in %d blocks on %d workers, %.2fs",
            stream, n_replicas, len(blocks), self.workers, time.perf_counter() - started,
        )
        return results

    def run_batches(
        self,
        fn: Callable[[ReplicaBlock, np.random.Generator], BatchPath],
        n_replicas: int,
        stream: int = 0,
    ) -> BatchPath:
        """Join the block paths; on a step-budget failure the error carries every block's partial path."""

        def guarded(block: ReplicaBlock, rng: np.random.Generator):
            try:
                return fn(block, rng)
            except ResourceLimitError as exc:
                if not isinstance(exc.partial, BatchPath):
                    raise
                return exc

        results = self.map_blocks(guarded, n_replicas, stream)
        failures = [r for r in results if isinstance(r, ResourceLimitError)]
        if not failures:
            return concat_batches(results)
        grid = failures[0].partial.times
        partials = [r.partial if isinstance(r, ResourceLimitError) else r for r in results]
        partials = [p for p in partials if np.array_equal(p.times, grid)]
        raise ResourceLimitError(str(failures[0]), partial=concat_batches(partials))

    def map_arrays(
        self,
        fn: Callable[[ReplicaBlock, np.random.Generator], np.ndarray],
        n_replicas: int,
        stream: int = 0,
    ) -> np.ndarray:
        """Concatenate per-block arrays along the replica axis."""
        return np.concatenate(self.map_blocks(fn, n_replicas, stream), axis=0)


def concat_batches(batches: list[BatchPath]) -> BatchPath:
    """Join block results (already in block order) into one BatchPath."""
    if not batches:
        raise ParameterError("nothing to concatenate")
    head = batches[0]

    def join(attr):
        parts = [getattr(b, attr) for b in batches]
        return None if any(p is None for p in parts) else np.concatenate(parts, axis=0)

    events = None
    if all(b.events is not None for b in batches):
        events = [e for b in batches for e in b.events]
    extras: dict = {}
    for b in batches:
        for key, value in b.extras.items():
            extras[key] = extras.get(key, 0) + value
    return BatchPath(
        times=head.times,
        totals=np.concatenate([b.totals for b in batches], axis=0),
        n_sites=head.n_sites,
        final_coords=join("final_coords"),
        snapshots=join("snapshots"),
        events=events,
        max_coordinate=join("max_coordinate"),
        first_replica=head.first_replica,
        time_scale=head.time_scale,
        extras=extras,
    )
