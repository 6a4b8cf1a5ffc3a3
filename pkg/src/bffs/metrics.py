"""Streaming latency statistics, trend sampling and derived run metrics.

Abbreviations follow the published table columns:

    TFWT/TFRT    folder+subfolder create / search time
    TfWT/TfRT    file data write / read time
    TFCWT/TFORT  file create-for-write / open-for-read time
    TWT/TRead    write phase (TFWT+TfWT) / read phase (TFRT+TfRT) time
    TRT_run      wall time of the whole run

All internal times are integer microseconds.
"""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field

from .errors import InconsistentMetricsError

DEFAULT_EDGES_US = (
    0, 5, 10, 15, 20, 25, 30, 40, 50, 75, 100, 250, 500, 1000,
    10**4, 10**5, 10**6, 10**7,
)
TREND_BUCKETS = 20


@dataclass
class LatencyTracker:
    count: int = 0
    sum_us: int = 0
    min_us: int = 0
    max_us: int = 0

    def record(self, sample_us: int):
        if self.count == 0:
            self.min_us = self.max_us = sample_us
        else:
            if sample_us < self.min_us:
                self.min_us = sample_us
            if sample_us > self.max_us:
                self.max_us = sample_us
        self.count += 1
        self.sum_us += sample_us

    @property
    def average_us(self) -> float:
        return self.sum_us / self.count if self.count else 0.0


class LatencyHistogram:
    """Fixed-edge histogram; bucket ``i`` holds samples in ``[edges[i], edges[i+1])``."""

    def __init__(self, edges=DEFAULT_EDGES_US):
        edges = tuple(edges)
        if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("histogram edges must be strictly ascending, at least two")
        self.edges = edges
        self.counts = [0] * (len(edges) - 1)
        self.underflow = 0
        self.overflow = 0

    def record(self, sample_us):
        if sample_us < self.edges[0]:
            self.underflow += 1
        elif sample_us >= self.edges[-1]:
            self.overflow += 1
        else:
            self.counts[bisect.bisect_right(self.edges, sample_us) - 1] += 1

    @property
    def total(self) -> int:
        return sum(self.counts) + self.underflow + self.overflow

    def buckets(self):
        """Yield ``(low, high, count)`` rows, open ends as +/-inf."""
        yield (-math.inf, self.edges[0], self.underflow)
        for i, c in enumerate(self.counts):
            yield (self.edges[i], self.edges[i + 1], c)
        yield (self.edges[-1], math.inf, self.overflow)


@dataclass(frozen=True)
class FolderSample:
    folder_ordinal: int
    phase: str  # "write" or "read"
    total_us: int
    files: int
    failures: int = 0

    @property
    def throughput(self) -> float:
        """Files per second."""
        return self.files * 1e6 / self.total_us if self.total_us else 0.0


def trend_series(aggregates, bucket_count: int = TREND_BUCKETS) -> list[FolderSample]:
    """Evenly spaced subset of per-folder aggregates, first folder always kept.

    With 100 folders and 20 buckets this keeps folders 1, 6, 11, ..., 96.
    """
    aggregates = list(aggregates)
    if bucket_count < 1:
        raise ValueError("bucket_count must be >= 1")
    if len(aggregates) <= bucket_count:
        return aggregates
    step = -(-len(aggregates) // bucket_count)
    return aggregates[::step]


class SampleLog:
    """CSV log of every ``every``-th file's raw timings."""

    def __init__(self, path, every: int, header):
        if every < 1:
            raise ValueError("sample log interval must be >= 1")
        self.every = every
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(header)

    def maybe_write(self, ordinal: int, *fields):
        if ordinal % self.every == 0:
            self._writer.writerow((ordinal, *fields))

    def close(self):
        self._fh.close()


@dataclass
class MetricsSink:
    """Per-phase trackers, histograms and folder aggregates owned by the run thread."""

    edges: tuple = DEFAULT_EDGES_US
    file_write: LatencyTracker = field(default_factory=LatencyTracker)
    file_create: LatencyTracker = field(default_factory=LatencyTracker)
    file_read: LatencyTracker = field(default_factory=LatencyTracker)
    file_open: LatencyTracker = field(default_factory=LatencyTracker)
    write_hist: LatencyHistogram = None
    read_hist: LatencyHistogram = None
    write_folders: list = field(default_factory=list)
    read_folders: list = field(default_factory=list)
    write_log: SampleLog | None = None
    read_log: SampleLog | None = None

    def __post_init__(self):
        if self.write_hist is None:
            self.write_hist = LatencyHistogram(self.edges)
        if self.read_hist is None:
            self.read_hist = LatencyHistogram(self.edges)

    def record_write(self, ordinal, size, create_us, write_us):
        self.file_create.record(create_us)
        self.file_write.record(write_us)
        self.write_hist.record(write_us)
        if self.write_log:
            self.write_log.maybe_write(ordinal, size, create_us, write_us)

    def record_read(self, ordinal, size, open_us, read_us, status):
        self.file_open.record(open_us)
        self.file_read.record(read_us)
        self.read_hist.record(read_us)
        if self.read_log:
            self.read_log.maybe_write(ordinal, size, open_us, read_us, status)

    def folder_done(self, sample: FolderSample):
        (self.write_folders if sample.phase == "write" else self.read_folders).append(sample)

    def close(self):
        for lg in (self.write_log, self.read_log):
            if lg:
                lg.close()


@dataclass(frozen=True)
class PrimaryCells:
    """The measured totals every derived metric is computed from.

    Times are microseconds (floats allowed for replayed values); ``blocks_used``
    is the block delta of the storage snapshots.
    """

    files_written: int = 0
    bytes_written: float = 0
    folder_write_us: float = 0  # TFWT
    file_create_us: float = 0  # TFCWT
    file_write_us: float = 0  # TfWT
    files_read: int = 0
    bytes_read: float = 0
    folder_search_us: float = 0  # TFRT
    file_open_us: float = 0  # TFORT
    file_read_us: float = 0  # TfRT
    blocks_used: float = 0
    block_size: int = 4096
    inodes_used: int = 0
    run_us: float = 0  # TRT_run


@dataclass(frozen=True)
class DerivedMetrics:
    wth: float = 0.0  # bytes/us
    rth: float = 0.0
    fws: int = 0  # files/s
    frs: int = 0
    bkws: int = 0  # blocks/s
    bkrs: int = 0
    fcwt_us: float = 0.0
    fort_us: float = 0.0
    tbyw: float = 0  # bytes
    tbyr: float = 0
    tbkw: float = 0  # blocks
    tbkr: float = 0
    dsu: float = 0  # bytes
    dsuo_pct: float = 0.0
    inodes: int = 0
    twt_us: float = 0
    tread_us: float = 0
    trt_run_us: float = 0
    cpuo_pct: float = 0.0


def cpu_overhead(run_us, twt_us, tfcwt_us, tread_us, tfort_us) -> float:
    """Share of run time outside the timed I/O windows, in percent."""
    if run_us <= 0:
        return 0.0
    return (run_us - (twt_us + tfcwt_us + tread_us + tfort_us)) / run_us * 100.0


def _per_second(count, total_us) -> int:
    return math.floor(count * 1e6 / total_us) if total_us > 0 else 0


def derive(cells: PrimaryCells, strict: bool = True) -> DerivedMetrics:
    """Compute the derived table columns from primary cells.

    With ``strict`` a non-empty write phase with zero write time or zero disk
    usage raises :class:`InconsistentMetricsError`; otherwise the undefined
    ratios are reported as 0.
    """
    c = cells
    dsu = c.blocks_used * c.block_size
    if c.files_written > 0 and strict:
        if c.file_write_us <= 0:
            raise InconsistentMetricsError("files were written but total file write time is 0")
        if dsu <= 0:
            raise InconsistentMetricsError("files were written but no disk space was consumed")
    if c.files_read > 0 and strict and c.file_read_us <= 0:
        raise InconsistentMetricsError("files were read but total file read time is 0")
    tbkw = c.blocks_used
    # Blocks read: the footprint of the tree that was read back.
    tbkr = c.blocks_used if c.files_read else 0
    twt = c.folder_write_us + c.file_write_us
    tread = c.folder_search_us + c.file_read_us
    return DerivedMetrics(
        wth=c.bytes_written / c.file_write_us if c.file_write_us > 0 else 0.0,
        rth=c.bytes_read / c.file_read_us if c.file_read_us > 0 else 0.0,
        fws=_per_second(c.files_written, c.file_write_us),
        frs=_per_second(c.files_read, c.file_read_us),
        bkws=_per_second(tbkw, c.file_write_us),
        bkrs=_per_second(tbkr, c.file_read_us),
        fcwt_us=c.file_create_us / c.files_written if c.files_written else 0.0,
        fort_us=c.file_open_us / c.files_read if c.files_read else 0.0,
        tbyw=c.bytes_written,
        tbyr=c.bytes_read,
        tbkw=tbkw,
        tbkr=tbkr,
        dsu=dsu,
        dsuo_pct=(dsu - c.bytes_written) / dsu * 100.0 if dsu > 0 else 0.0,
        inodes=c.inodes_used,
        twt_us=twt,
        tread_us=tread,
        trt_run_us=c.run_us,
        cpuo_pct=cpu_overhead(c.run_us, twt, c.file_create_us, tread, c.file_open_us),
    )


def compute_derived(create, read, storage, block_size=None, wall_clock_total=0, strict=True):
    """Derived metrics for a run from its phase results and storage delta.

    ``create``/``read`` may be ``None`` for a phase that did not run;
    ``storage`` is the :class:`~bffs.storage.StorageDelta` of the create phase.
    """
    cells = PrimaryCells(
        files_written=create.files_written if create else 0,
        bytes_written=create.bytes_written if create else 0,
        folder_write_us=create.folder_create_total if create else 0,
        file_create_us=create.file_create_total if create else 0,
        file_write_us=create.file_write_total if create else 0,
        files_read=read.files_read if read else 0,
        bytes_read=read.bytes_read if read else 0,
        folder_search_us=read.folder_search_total if read else 0,
        file_open_us=read.file_open_total if read else 0,
        file_read_us=read.file_read_total if read else 0,
        blocks_used=storage.blocks_used if storage else 0,
        block_size=block_size or (storage.block_size if storage else 4096),
        inodes_used=storage.inodes_used if storage else 0,
        run_us=wall_clock_total,
    )
    return derive(cells, strict=strict)
