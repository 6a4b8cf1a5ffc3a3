"""Write phase: build the folder tree and write every framed file."""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field

from .errors import RunAbortError, RunAborted
from .metrics import TREND_BUCKETS, FolderSample, MetricsSink, trend_series
from .storage import StorageDelta, capture_delta
from .workload import FileSizeDistribution, RunSchedule, WorkloadRng, make_file


@dataclass
class CreatePhaseResult:
    files_written: int = 0
    bytes_written: int = 0  # TByW
    folder_create_total: int = 0  # TFWT, us
    file_create_total: int = 0  # TFCWT, us
    file_write_total: int = 0  # TfWT, us
    per_folder_series: list = field(default_factory=list)  # trend-sampled
    errors: int = 0
    directories_created: int = 0
    storage: StorageDelta | None = None
    elapsed_us: int = 0  # backend clock, first to last operation

    @property
    def write_total(self) -> int:
        """TWT: folder creation plus file writes."""
        return self.folder_create_total + self.file_write_total


@dataclass
class ProgressState:
    phase: str
    folders_done: int
    folders_total: int
    files_done: int
    elapsed_s: float


def progress_report(state: ProgressState) -> str:
    rate = state.files_done / state.elapsed_s if state.elapsed_s > 0 else 0.0
    return (
        f"[{state.phase}] {state.folders_done}/{state.folders_total} folders, "
        f"{state.files_done} files, {rate:.1f} files/s"
    )


class Progress:
    """Prints a status line at folder boundaries, at most once per ``interval`` seconds."""

    def __init__(self, stream=None, interval: float = 5.0):
        self.stream = stream if stream is not None else sys.stderr
        self.interval = interval
        self._last = None

    def update(self, state: ProgressState, final: bool = False):
        now = time.monotonic()
        if final or self._last is None or now - self._last >= self.interval:
            self._last = now
            print(progress_report(state), file=self.stream, flush=True)


def run_create(
    schedule: RunSchedule,
    dist: FileSizeDistribution,
    backend,
    sink: MetricsSink,
    progress: Progress | None = None,
    buckets: int = TREND_BUCKETS,
) -> CreatePhaseResult:
    """Create the scheduled tree, timing every folder, file create and file write.

    Sink bookkeeping and size/payload generation happen between timed calls.
    Per-file failures are counted and skipped; :class:`RunAbortError` from the
    backend, or an interrupt, ends the phase with :class:`RunAborted` carrying
    the partial result.
    """
    rng = WorkloadRng(dist.seed)
    result = CreatePhaseResult()
    before = backend.storage_stats()
    start = backend.clock_us()
    try:
        for i in range(1, schedule.folders + 1):
            folder_us = backend.create_directory(schedule.folder_path(i))
            result.folder_create_total += folder_us
            result.directories_created += 1
            files_us = 0
            files = failures = 0
            for j in range(1, schedule.subfolders_per_folder + 1):
                sub = schedule.subfolder_path(i, j)
                sub_us = backend.create_directory(sub)
                result.folder_create_total += sub_us
                folder_us += sub_us
                result.directories_created += 1
                for k in range(1, schedule.files_per_subfolder + 1):
                    content = make_file(dist, rng)
                    ordinal = ((i - 1) * schedule.subfolders_per_folder + j - 1) * (
                        schedule.files_per_subfolder
                    ) + k
                    try:
                        create_us, write_us = backend.create_and_write_file(
                            schedule.file_path(i, j, k), content
                        )
                    except OSError:
                        failures += 1
                        result.errors += 1
                        continue
                    sink.record_write(ordinal, len(content), create_us, write_us)
                    result.file_create_total += create_us
                    result.file_write_total += write_us
                    result.bytes_written += len(content)
                    result.files_written += 1
                    files += 1
                    files_us += create_us + write_us
            sample = FolderSample(i, "write", folder_us + files_us, files, failures)
            sink.folder_done(sample)
            if progress:
                progress.update(
                    ProgressState(
                        "write", i, schedule.folders, result.files_written,
                        (backend.clock_us() - start) / 1e6,
                    ),
                    final=i == schedule.folders,
                )
    except (RunAbortError, KeyboardInterrupt) as exc:
        result.per_folder_series = trend_series(sink.write_folders, buckets)
        result.elapsed_us = backend.clock_us() - start
        try:
            result.storage = capture_delta(backend, before)
        except RunAbortError:
            pass
        raise RunAborted(str(exc) or "interrupted", result) from exc
    result.per_folder_series = trend_series(sink.write_folders, buckets)
    result.elapsed_us = backend.clock_us() - start
    result.storage = capture_delta(backend, before, schedule)
    return result
