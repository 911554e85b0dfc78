"""Serial and thread-pool execution of grid stencils.

The contract that everything else leans on: a stencil kernel computes each
output cell with one fixed arithmetic expression, so splitting its index
range into chunks cannot change a single bit of the result. There are no
reductions inside kernels, hence no reassociation. Serial and parallel
execution of the same plan therefore produce byte-identical arrays, and
Parallel(1) behaves exactly like Serial.

Kernels receive a half-open range ``[lo, hi)`` over the leading axis and must
write only cells inside it. Work units are contiguous blocks of at least
``MIN_CHUNK_CELLS`` cells; grids too small to split run serially whatever the
backend says.
"""

from __future__ import annotations

import math
import os
import statistics
from concurrent.futures import Future, ThreadPoolExecutor, wait
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

# Smallest work unit, in cells. Anything finer would be dominated by
# dispatch overhead.
MIN_CHUNK_CELLS = 4096

# Environment override for the worker count of `parallel` without an
# explicit count (and the CLI's default parallel backend).
WORKERS_ENV_VAR = "FDTDKIT_WORKERS"

Kernel = Callable[[int, int], None]


class BackendResourceError(RuntimeError):
    """Worker pool could not be created or came up unusable."""


class InsufficientSamplesError(ValueError):
    """Fewer timing samples than the minimum needed for a robust median."""

    def __init__(self, got: int, need: int = 3):
        self.got = got
        self.need = need
        super().__init__(f"need at least {need} timing samples, got {got}")


def default_worker_count() -> int:
    """Worker count for a bare `parallel` backend: env override, else CPU count."""
    env = os.environ.get(WORKERS_ENV_VAR)
    if env is not None:
        count = int(env)
        if count < 1:
            raise ValueError(f"{WORKERS_ENV_VAR} must be >= 1, got {env!r}")
        return count
    return os.cpu_count() or 1


@dataclass(frozen=True)
class Backend:
    """Execution strategy: serial, or a fork-join pool of ``workers`` threads."""

    kind: str
    workers: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("serial", "parallel"):
            raise ValueError(f"backend kind must be 'serial' or 'parallel', got {self.kind!r}")
        if self.kind == "serial" and self.workers != 1:
            raise ValueError("serial backend always has exactly one worker")
        if self.workers < 1:
            raise ValueError(f"worker count must be >= 1, got {self.workers}")

    @classmethod
    def serial(cls) -> "Backend":
        return cls("serial", 1)

    @classmethod
    def parallel(cls, workers: int | None = None) -> "Backend":
        return cls("parallel", default_worker_count() if workers is None else workers)

    @classmethod
    def parse(cls, text: str) -> "Backend":
        """Parse 'serial', 'parallel', or 'parallel:<k>'."""
        if text == "serial":
            return cls.serial()
        if text == "parallel":
            return cls.parallel()
        if text.startswith("parallel:"):
            return cls.parallel(int(text.split(":", 1)[1]))
        raise ValueError(f"unknown backend {text!r}, expected 'serial' or 'parallel[:k]'")

    @property
    def is_parallel(self) -> bool:
        return self.kind == "parallel"

    def __str__(self) -> str:
        return "serial" if self.kind == "serial" else f"parallel:{self.workers}"


@dataclass(frozen=True)
class KernelPlan:
    """Partition of a leading-axis range into disjoint, covering work units.

    ``cells_per_index`` scales an index to a cell count: 1 for flat 1D
    arrays, ny*nz when an index selects a full slab of a 3D grid.
    """

    start: int
    stop: int
    chunks: tuple[tuple[int, int], ...]
    cells_per_index: int = 1

    @classmethod
    def for_range(
        cls,
        start: int,
        stop: int,
        backend: Backend,
        cells_per_index: int = 1,
    ) -> "KernelPlan":
        """Build a plan that keeps every work unit at or above the chunk floor."""
        if stop < start:
            raise ValueError(f"empty range bounds reversed: [{start}, {stop})")
        if cells_per_index < 1:
            raise ValueError("cells_per_index must be >= 1")
        span = stop - start
        if span == 0:
            return cls(start, stop, (), cells_per_index)
        total_cells = span * cells_per_index
        if not backend.is_parallel or backend.workers == 1 or total_cells < 2 * MIN_CHUNK_CELLS:
            return cls(start, stop, ((start, stop),), cells_per_index)
        # Aim for a few chunks per worker, but never drop below the cell floor.
        floor_indices = max(1, math.ceil(MIN_CHUNK_CELLS / cells_per_index))
        max_chunks = max(1, span // floor_indices)
        n_chunks = min(backend.workers * 4, max_chunks)
        bounds = [start + (span * c) // n_chunks for c in range(n_chunks + 1)]
        chunks = tuple(
            (lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo
        )
        return cls(start, stop, chunks, cells_per_index)

    def __post_init__(self) -> None:
        prev = self.start
        for lo, hi in self.chunks:
            if lo != prev or hi <= lo:
                raise ValueError(f"chunks must tile [{self.start}, {self.stop}) in order")
            prev = hi
        if self.chunks and prev != self.stop:
            raise ValueError("chunks do not cover the full range")
        if not self.chunks and self.stop > self.start:
            raise ValueError("non-empty range needs at least one chunk")


class StencilExecutor:
    """Owns the worker pool for a run; reusable across many stencil calls.

    Entering the context builds the pool once (parallel backends only) so a
    time-stepping loop does not pay pool construction per half-step. Exiting
    joins and tears it down.
    """

    def __init__(self, backend: Backend):
        self.backend = backend
        self._pool: ThreadPoolExecutor | None = None

    def __enter__(self) -> "StencilExecutor":
        if self.backend.is_parallel and self.backend.workers > 1:
            try:
                self._pool = ThreadPoolExecutor(max_workers=self.backend.workers)
            except Exception as exc:
                raise BackendResourceError(
                    f"could not start {self.backend.workers}-thread pool: {exc}"
                ) from exc
        return self

    def __exit__(self, *exc_info) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def run(self, kernel: Kernel, plan: KernelPlan) -> None:
        """Apply ``kernel`` to every chunk of ``plan``; fork-join, no partial results.

        Single-chunk plans (and serial backends, by construction) run inline.
        Worker failures surface after all submitted chunks have settled, so a
        raise can never leave threads still writing.
        """
        if len(plan.chunks) <= 1 or self._pool is None:
            for lo, hi in plan.chunks:
                kernel(lo, hi)
            return
        futures: list[Future] = [
            self._pool.submit(kernel, lo, hi) for lo, hi in plan.chunks
        ]
        wait(futures)
        for fut in futures:
            exc = fut.exception()
            if exc is not None:
                raise exc


def execute_stencil(
    kernel: Kernel,
    plan: KernelPlan,
    backend: Backend,
    executor: StencilExecutor | None = None,
) -> None:
    """One-shot stencil execution; builds a transient pool if none is supplied."""
    if executor is not None:
        executor.run(kernel, plan)
        return
    with StencilExecutor(backend) as ex:
        ex.run(kernel, plan)


def backend_report(
    backend: Backend,
    elapsed_samples: Sequence[float] | Iterable[float],
    cell_updates: int,
) -> float:
    """Median throughput in cell-updates/second for one backend.

    ``elapsed_samples`` are wall-clock seconds, each covering ``cell_updates``
    cell updates. Fewer than three samples raises
    :class:`InsufficientSamplesError` rather than reporting a fragile number.
    """
    samples = [float(s) for s in elapsed_samples]
    if len(samples) < 3:
        raise InsufficientSamplesError(len(samples))
    if any(s <= 0 for s in samples):
        raise ValueError("elapsed samples must be positive")
    if cell_updates <= 0:
        raise ValueError("cell_updates must be positive")
    return cell_updates / statistics.median(samples)
