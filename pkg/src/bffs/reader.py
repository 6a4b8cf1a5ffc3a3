"""Read phase: revisit the scheduled tree, read and verify every file."""

from __future__ import annotations

from dataclasses import dataclass, field

from .creator import Progress, ProgressState
from .errors import RunAborted
from .metrics import TREND_BUCKETS, FolderSample, MetricsSink, trend_series
from .workload import FrameStatus, RunSchedule, verify_frame


@dataclass
class ReadPhaseResult:
    files_read: int = 0
    bytes_read: int = 0  # TByR
    folder_search_total: int = 0  # TFRT, us
    file_open_total: int = 0  # TFORT, us
    file_read_total: int = 0  # TfRT, us
    checksum_failures: int = 0
    missing_files: int = 0
    read_errors: int = 0  # unreadable files; also counted in missing_files
    per_folder_series: list = field(default_factory=list)  # trend-sampled
    elapsed_us: int = 0
    cache_drop_requested: bool = False
    cache_dropped: bool = False

    @property
    def read_total(self) -> int:
        """Read-phase time: folder search plus file reads."""
        return self.folder_search_total + self.file_read_total


def folder_search(backend, path: str) -> int:
    """Time to locate and open a directory before its files are visited."""
    return backend.search_directory(path)


def run_read(
    schedule: RunSchedule,
    backend,
    sink: MetricsSink,
    progress: Progress | None = None,
    buckets: int = TREND_BUCKETS,
    drop_cache: bool = False,
) -> ReadPhaseResult:
    """Read back every scheduled file in creation order and verify its trailer.

    Missing folders, subfolders and files are counted, never fatal. Checksum
    verification runs after the timed read window closes.
    """
    result = ReadPhaseResult(cache_drop_requested=drop_cache)
    if drop_cache:
        result.cache_dropped = backend.drop_caches()
    per_sub = schedule.files_per_subfolder
    start = backend.clock_us()
    try:
        for i in range(1, schedule.folders + 1):
            folder_us = files_us = 0
            files = failures = 0
            try:
                us = folder_search(backend, schedule.folder_path(i))
            except OSError:
                missed = schedule.subfolders_per_folder * per_sub
                result.missing_files += missed
                failures += missed
                us = None
            if us is not None:
                folder_us += us
                for j in range(1, schedule.subfolders_per_folder + 1):
                    try:
                        folder_us += folder_search(backend, schedule.subfolder_path(i, j))
                    except OSError:
                        result.missing_files += per_sub
                        failures += per_sub
                        continue
                    base = ((i - 1) * schedule.subfolders_per_folder + j - 1) * per_sub
                    for k in range(1, per_sub + 1):
                        try:
                            open_us, read_us, content = backend.open_and_read_file(
                                schedule.file_path(i, j, k)
                            )
                        except FileNotFoundError:
                            result.missing_files += 1
                            failures += 1
                            continue
                        except OSError:
                            result.read_errors += 1
                            result.missing_files += 1
                            failures += 1
                            continue
                        status = verify_frame(content)
                        if status is not FrameStatus.PASS:
                            result.checksum_failures += 1
                            failures += 1
                        sink.record_read(base + k, len(content), open_us, read_us, status.value)
                        result.files_read += 1
                        result.bytes_read += len(content)
                        result.file_open_total += open_us
                        result.file_read_total += read_us
                        files += 1
                        files_us += open_us + read_us
            result.folder_search_total += folder_us
            sink.folder_done(FolderSample(i, "read", folder_us + files_us, files, failures))
            if progress:
                progress.update(
                    ProgressState(
                        "read", i, schedule.folders, result.files_read,
                        (backend.clock_us() - start) / 1e6,
                    ),
                    final=i == schedule.folders,
                )
    except KeyboardInterrupt as exc:
        result.per_folder_series = trend_series(sink.read_folders, buckets)
        result.elapsed_us = backend.clock_us() - start
        raise RunAborted("interrupted", result) from exc
    result.per_folder_series = trend_series(sink.read_folders, buckets)
    result.elapsed_us = backend.clock_us() - start
    return result
