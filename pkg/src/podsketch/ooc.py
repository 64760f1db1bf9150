"""One-pass incremental POD for matrices too large for memory.

A :class:`BlockReader` walks a PODM file in t contiguous column blocks
(block i covers columns floor(i n/t) .. floor((i+1) n/t) - 1, so widths
differ by at most one and the blocks partition the columns exactly).
:func:`incremental_pod` runs the sampling iteration on each block as it
arrives and folds the block factors into a running accumulator with the
rank-r merge, touching every column exactly once.

The block factors are merged at their full rank r (not pre-truncated to
k); the final truncation to k happens once at the end.  A single random
stream is threaded through the per-block runs in file order, so the t=1
case is bit-identical to an in-memory run with the same seed.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import FormatError, ParameterError
from .isma import isma_run
from .matcore import as_dense
from .merge import block_merge
from .podio import HEADER_BYTES, read_matrix_header


class BlockReader:
    """Sequential column-block reader over a PODM file.

    Tracks ``blocks_read`` so callers (and tests) can verify the one-pass
    property.  Usable as a context manager and as an iterator over blocks.
    """

    def __init__(self, path_or_file, block_count):
        if hasattr(path_or_file, "read"):
            self._file = path_or_file
            self._owns = False
        else:
            self._file = open(path_or_file, "rb")
            self._owns = True
        try:
            self.rows, self.cols = read_matrix_header(self._file)
        except FormatError as exc:
            self.close()
            raise FormatError(f"{exc} (header at byte offset 0)") from None
        if self.rows < 1 or self.cols < 1:
            self.close()
            raise FormatError("PODM matrix has zero rows or columns")
        if not 1 <= block_count <= self.cols:
            self.close()
            raise ParameterError(
                f"block count must lie in 1..{self.cols}, got {block_count}"
            )
        self.block_count = int(block_count)
        self.cursor = 0
        self.blocks_read = 0

    def block_bounds(self, i):
        """Half-open column range [start, stop) of block i."""
        if not 0 <= i < self.block_count:
            raise ParameterError(f"block index {i} outside 0..{self.block_count - 1}")
        t = self.block_count
        return (i * self.cols) // t, ((i + 1) * self.cols) // t

    def read_block(self):
        """Return the next column block, or None after the last one."""
        if self.cursor >= self.block_count:
            return None
        start, stop = self.block_bounds(self.cursor)
        offset = HEADER_BYTES + start * self.rows * 8
        need = (stop - start) * self.rows * 8
        self._file.seek(offset)
        raw = self._file.read(need)
        if len(raw) < need:
            raise FormatError(
                f"truncated PODM payload: wanted {need} bytes at byte offset "
                f"{offset}, got {len(raw)}"
            )
        block = np.frombuffer(raw, dtype="<f8").reshape(
            (self.rows, stop - start), order="F"
        )
        self.cursor += 1
        self.blocks_read += 1
        return as_dense(block)

    def __iter__(self):
        while (block := self.read_block()) is not None:
            yield block

    def close(self):
        if self._owns:
            self._file.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def incremental_pod(reader, config, scale_count_by_blocks=False):
    """One-pass POD over a block reader.

    Each block gets its own sampling iteration (finalize suppressed — there
    is no second pass to refine against), then its rank-r factor is merged
    into the accumulator.  Block references are dropped before the merge so
    peak memory stays near one block plus the sampled columns and the
    factor.

    scale_count_by_blocks divides the per-round column budget by t (the
    convention used when splitting a fixed global budget across blocks);
    the default keeps the full budget per block.

    Returns ``(factor, traces)`` with the top-k factor and the per-round
    traces of all block runs, renumbered sequentially.
    """
    t = reader.block_count
    block_cfg = dataclasses.replace(config, finalize=False)
    if scale_count_by_blocks:
        block_cfg = dataclasses.replace(
            block_cfg, c=max(1, math.ceil(block_cfg.column_budget() / t))
        )
    rng = np.random.default_rng(config.seed)
    acc = None
    traces = []
    while True:
        block = reader.read_block()
        if block is None:
            break
        # A block narrower than k still contributes: run it at a reduced
        # target and let the merge absorb the short factor.
        cfg_i = block_cfg
        if config.k > min(block.shape):
            cfg_i = dataclasses.replace(block_cfg, k=min(block.shape))
        factor, block_traces = isma_run(block, cfg_i, rng=rng, keep=config.r)
        del block
        traces.extend(block_traces)
        acc = factor if acc is None else block_merge(acc, factor, config.r)
    if acc is None:
        raise ParameterError("reader produced no blocks")
    traces = [
        dataclasses.replace(tr, iteration=i) for i, tr in enumerate(traces)
    ]
    return acc.truncate(config.k), traces


def pass_count(mode, rows_flag, iterations):
    """Analytic count of full passes over the data for reporting.

    mode "full": an in-memory iterative run — i+1 passes for column-only
    sampling, at most 3i+1 when rows are sampled too (i update rounds
    plus the final refinement).  mode "incremental": always 1 by
    construction.
    """
    if mode == "incremental":
        return 1
    if mode == "full":
        if iterations < 0:
            raise ParameterError("iterations must be >= 0")
        return 3 * iterations + 1 if rows_flag else iterations + 1
    raise ParameterError("mode must be 'full' or 'incremental'")
