"""Run reports: canonical JSON archive, text tables and plottable CSVs.

Every numeric JSON field name ends in its unit (``_us``, ``_bytes``,
``_count``, ``_pct``, ``_files_per_s`` ...). In the text table, phase totals
are seconds, per-file times microseconds, byte totals GB where 1 GB = 10**9
bytes.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import tempfile
import typing
from dataclasses import dataclass, field

from .metrics import DerivedMetrics, LatencyHistogram, LatencyTracker, PrimaryCells

SCHEMA_VERSION = 1
GB = 10**9


def _f(x) -> float:
    """Canonical float: 6 decimals, so JSON text is stable across runs."""
    return round(float(x), 6)


@dataclass
class SnapshotData:
    inodes_free_count: int
    blocks_free_count: int
    block_size_bytes: int
    total_bytes: int
    timestamp_us: int


@dataclass
class StorageBlock:
    before: SnapshotData
    after: SnapshotData
    inodes_used_count: int
    blocks_used_count: int
    used_bytes: int


@dataclass
class HistogramData:
    edges_us: list[int]
    counts: list[int]
    underflow_count: int = 0
    overflow_count: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts) + self.underflow_count + self.overflow_count

    @classmethod
    def from_histogram(cls, h: LatencyHistogram) -> "HistogramData":
        return cls(list(h.edges), list(h.counts), h.underflow, h.overflow)


@dataclass
class TrendPoint:
    sample_ordinal: int
    folder_ordinal: int
    total_us: int
    files_count: int
    failures_count: int
    throughput_files_per_s: float


@dataclass
class WriteBlock:
    files_written_count: int = 0
    errors_count: int = 0
    directories_created_count: int = 0
    fwt_min_us: int = 0
    fwt_ave_us: float = 0.0
    fwt_max_us: int = 0
    wth_bytes_per_us: float = 0.0
    folder_write_total_us: float = 0  # TFWT
    file_write_total_us: float = 0  # TfWT
    write_total_us: float = 0  # TWT
    fws_files_per_s: int = 0
    bkws_blocks_per_s: int = 0
    file_create_total_us: float = 0  # TFCWT
    fcwt_us: float = 0.0
    tbyw_bytes: float = 0
    tbkw_blocks: float = 0
    dsu_bytes: float = 0
    dsuo_pct: float = 0.0
    inodes_count: int = 0
    elapsed_us: float = 0


@dataclass
class ReadBlock:
    files_read_count: int = 0
    checksum_failures_count: int = 0
    missing_files_count: int = 0
    read_errors_count: int = 0
    frt_min_us: int = 0
    frt_ave_us: float = 0.0
    frt_max_us: int = 0
    rth_bytes_per_us: float = 0.0
    folder_search_total_us: float = 0  # TFRT
    file_read_total_us: float = 0  # TfRT
    read_total_us: float = 0  # TRead
    frs_files_per_s: int = 0
    bkrs_blocks_per_s: int = 0
    file_open_total_us: float = 0  # TFORT
    fort_us: float = 0.0
    tbyr_bytes: float = 0
    tbkr_blocks: float = 0
    elapsed_us: float = 0


@dataclass
class RunBlock:
    trt_run_us: float = 0
    cpuo_pct: float = 0.0
    bksize_bytes: int = 0


@dataclass
class RunIdentity:
    label: str
    backend: str
    root: str
    reports_inodes: bool
    block_size_bytes: int
    folders_count: int
    subfolders_count: int
    files_per_subfolder_count: int
    total_files_count: int
    seed: int
    size_mean_bytes: float
    size_sd_bytes: float
    size_min_bytes: int
    size_max_bytes: int
    started_at_us: int = 0
    finished_at_us: int = 0
    complete: bool = True
    cache_drop_requested: bool = False
    cache_dropped: bool = False
    timer_overhead_ns: float = 0.0
    config: dict[str, str] = field(default_factory=dict)


@dataclass
class RunReport:
    identity: RunIdentity
    write: WriteBlock | None = None
    read: ReadBlock | None = None
    storage: StorageBlock | None = None
    run: RunBlock | None = None
    write_histogram: HistogramData | None = None
    read_histogram: HistogramData | None = None
    write_trend: list[TrendPoint] = field(default_factory=list)
    read_trend: list[TrendPoint] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return _build(cls, data)


def _build(tp, value):
    if value is None:
        return None
    origin = typing.get_origin(tp)
    if origin is typing.Union or type(tp).__name__ == "UnionType":
        inner = [a for a in typing.get_args(tp) if a is not type(None)]
        return _build(inner[0], value)
    if origin is list:
        (item,) = typing.get_args(tp)
        return [_build(item, v) for v in value]
    if origin is dict:
        return dict(value)
    if dataclasses.is_dataclass(tp):
        hints = typing.get_type_hints(tp)
        known = {f.name for f in dataclasses.fields(tp)}
        unknown = set(value) - known
        if unknown:
            raise ValueError(f"unknown fields for {tp.__name__}: {sorted(unknown)}")
        return tp(**{k: _build(hints[k], v) for k, v in value.items()})
    return value


# --- assembly ---------------------------------------------------------------


def identity_for(label, backend, schedule, dist, config=None, **extra) -> RunIdentity:
    caps = backend.capabilities
    return RunIdentity(
        label=label,
        backend=backend.kind,
        root=schedule.root_path,
        reports_inodes=caps.reports_inodes,
        block_size_bytes=caps.block_size,
        folders_count=schedule.folders,
        subfolders_count=schedule.subfolders_per_folder,
        files_per_subfolder_count=schedule.files_per_subfolder,
        total_files_count=schedule.total_files,
        seed=dist.seed,
        size_mean_bytes=_f(dist.mean_bytes),
        size_sd_bytes=_f(dist.std_dev_bytes),
        size_min_bytes=dist.min_bytes,
        size_max_bytes=dist.max_bytes,
        config=dict(config or {}),
        **extra,
    )


def _trend(series) -> list[TrendPoint]:
    return [
        TrendPoint(n, s.folder_ordinal, s.total_us, s.files, s.failures, _f(s.throughput))
        for n, s in enumerate(series, 1)
    ]


def _snapshot(s) -> SnapshotData:
    return SnapshotData(s.inodes_free, s.blocks_free, s.block_size, s.total_bytes, s.timestamp)


def write_block(create, tracker: LatencyTracker, derived: DerivedMetrics) -> WriteBlock:
    return WriteBlock(
        files_written_count=create.files_written,
        errors_count=create.errors,
        directories_created_count=create.directories_created,
        fwt_min_us=tracker.min_us,
        fwt_ave_us=_f(tracker.average_us),
        fwt_max_us=tracker.max_us,
        wth_bytes_per_us=_f(derived.wth),
        folder_write_total_us=create.folder_create_total,
        file_write_total_us=create.file_write_total,
        write_total_us=create.write_total,
        fws_files_per_s=derived.fws,
        bkws_blocks_per_s=derived.bkws,
        file_create_total_us=create.file_create_total,
        fcwt_us=_f(derived.fcwt_us),
        tbyw_bytes=create.bytes_written,
        tbkw_blocks=derived.tbkw,
        dsu_bytes=derived.dsu,
        dsuo_pct=_f(derived.dsuo_pct),
        inodes_count=derived.inodes,
        elapsed_us=create.elapsed_us,
    )


def read_block(read, tracker: LatencyTracker, derived: DerivedMetrics) -> ReadBlock:
    return ReadBlock(
        files_read_count=read.files_read,
        checksum_failures_count=read.checksum_failures,
        missing_files_count=read.missing_files,
        read_errors_count=read.read_errors,
        frt_min_us=tracker.min_us,
        frt_ave_us=_f(tracker.average_us),
        frt_max_us=tracker.max_us,
        rth_bytes_per_us=_f(derived.rth),
        folder_search_total_us=read.folder_search_total,
        file_read_total_us=read.file_read_total,
        read_total_us=read.read_total,
        frs_files_per_s=derived.frs,
        bkrs_blocks_per_s=derived.bkrs,
        file_open_total_us=read.file_open_total,
        fort_us=_f(derived.fort_us),
        tbyr_bytes=read.bytes_read,
        tbkr_blocks=derived.tbkr,
        elapsed_us=read.elapsed_us,
    )


def storage_block(delta) -> StorageBlock | None:
    if delta is None:
        return None
    return StorageBlock(
        _snapshot(delta.before), _snapshot(delta.after),
        delta.inodes_used, delta.blocks_used, delta.bytes_used,
    )


def attach_create(report: RunReport, create, sink, derived: DerivedMetrics):
    report.write = write_block(create, sink.file_write, derived)
    report.storage = storage_block(create.storage)
    report.write_histogram = HistogramData.from_histogram(sink.write_hist)
    report.write_trend = _trend(create.per_folder_series)


def attach_read(report: RunReport, read, sink, derived: DerivedMetrics):
    report.read = read_block(read, sink.file_read, derived)
    report.read_histogram = HistogramData.from_histogram(sink.read_hist)
    report.read_trend = _trend(read.per_folder_series)
    report.identity.cache_drop_requested = read.cache_drop_requested
    report.identity.cache_dropped = read.cache_dropped


def attach_run(report: RunReport, derived: DerivedMetrics, block_size: int):
    report.run = RunBlock(_f(derived.trt_run_us), _f(derived.cpuo_pct), block_size)


def cells_from_report(report: RunReport, read=None, run_us=0) -> PrimaryCells:
    """Primary cells from a stored write block, optionally joined with a new read phase."""
    w = report.write or WriteBlock()
    st = report.storage
    return PrimaryCells(
        files_written=w.files_written_count,
        bytes_written=w.tbyw_bytes,
        folder_write_us=w.folder_write_total_us,
        file_create_us=w.file_create_total_us,
        file_write_us=w.file_write_total_us,
        files_read=read.files_read if read else 0,
        bytes_read=read.bytes_read if read else 0,
        folder_search_us=read.folder_search_total if read else 0,
        file_open_us=read.file_open_total if read else 0,
        file_read_us=read.file_read_total if read else 0,
        blocks_used=st.blocks_used_count if st else 0,
        block_size=report.identity.block_size_bytes,
        inodes_used=st.inodes_used_count if st else 0,
        run_us=run_us,
    )


def report_from_cells(label: str, cells: PrimaryCells, derived: DerivedMetrics, **fwt) -> RunReport:
    """Report for replayed primary cells (no live measurement)."""
    identity = RunIdentity(
        label=label, backend="replay", root="", reports_inodes=cells.inodes_used > 0,
        block_size_bytes=cells.block_size, folders_count=0, subfolders_count=0,
        files_per_subfolder_count=0, total_files_count=cells.files_written, seed=0,
        size_mean_bytes=0.0, size_sd_bytes=0.0, size_min_bytes=0, size_max_bytes=0,
    )
    write = WriteBlock(
        files_written_count=cells.files_written,
        fwt_min_us=fwt.get("fwt_min_us", 0), fwt_ave_us=_f(fwt.get("fwt_ave_us", 0)),
        fwt_max_us=fwt.get("fwt_max_us", 0),
        wth_bytes_per_us=_f(derived.wth),
        folder_write_total_us=_f(cells.folder_write_us),
        file_write_total_us=_f(cells.file_write_us),
        write_total_us=_f(derived.twt_us),
        fws_files_per_s=derived.fws, bkws_blocks_per_s=derived.bkws,
        file_create_total_us=_f(cells.file_create_us), fcwt_us=_f(derived.fcwt_us),
        tbyw_bytes=_f(cells.bytes_written), tbkw_blocks=_f(derived.tbkw),
        dsu_bytes=_f(derived.dsu), dsuo_pct=_f(derived.dsuo_pct), inodes_count=derived.inodes,
    )
    read = ReadBlock(
        files_read_count=cells.files_read,
        frt_min_us=fwt.get("frt_min_us", 0), frt_ave_us=_f(fwt.get("frt_ave_us", 0)),
        frt_max_us=fwt.get("frt_max_us", 0),
        rth_bytes_per_us=_f(derived.rth),
        folder_search_total_us=_f(cells.folder_search_us),
        file_read_total_us=_f(cells.file_read_us), read_total_us=_f(derived.tread_us),
        frs_files_per_s=derived.frs, bkrs_blocks_per_s=derived.bkrs,
        file_open_total_us=_f(cells.file_open_us), fort_us=_f(derived.fort_us),
        tbyr_bytes=_f(cells.bytes_read), tbkr_blocks=_f(derived.tbkr),
    )
    run = RunBlock(_f(derived.trt_run_us), _f(derived.cpuo_pct), cells.block_size)
    return RunReport(identity=identity, write=write, read=read, run=run)


# --- emitters ---------------------------------------------------------------


def dumps(report: RunReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads(text: str) -> RunReport:
    return RunReport.from_dict(json.loads(text))


def load_json(path) -> RunReport:
    with open(path) as fh:
        return loads(fh.read())


def emit_json(report: RunReport, path):
    """Atomically write the canonical JSON form; no partial file survives a failure."""
    path = os.fspath(path)
    text = dumps(report)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path) or ".", prefix=".report-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


WRITE_COLUMNS = (
    "Filesystem", "FWT(min,ave,max)", "WTh", "TFWT", "TfWT", "TWT", "FWs(K)", "BkWs(K)",
    "TFCWT", "FCWT", "TByW", "TBkW", "DSU", "DSUO", "Inodes",
)
READ_COLUMNS = (
    "Filesystem", "FRT(min,ave,max)", "RTh", "TFRT", "TfRT", "TRead", "FRs(K)", "BkRs(K)",
    "TFORT", "FORT", "TByR", "TBkR", "TRT", "CPUO", "BkSize",
)


def _sec(us) -> str:
    return f"{us / 1e6:.2f}"


def _gb(b) -> str:
    return f"{b / GB:.2f}"


def _int(x) -> str:
    return str(math.floor(x))


def _kilo(rate) -> str:
    # per-second rates are tabulated in thousands
    return str(math.floor(rate / 1000))


def write_row(report: RunReport) -> list[str]:
    w = report.write or WriteBlock()
    return [
        report.identity.label,
        f"{w.fwt_min_us}, {w.fwt_ave_us:.0f}, {w.fwt_max_us}",
        _int(w.wth_bytes_per_us),
        _sec(w.folder_write_total_us),
        _sec(w.file_write_total_us),
        _sec(w.write_total_us),
        _kilo(w.fws_files_per_s),
        _kilo(w.bkws_blocks_per_s),
        _sec(w.file_create_total_us),
        f"{w.fcwt_us:.0f}",
        _gb(w.tbyw_bytes),
        _int(w.tbkw_blocks),
        _gb(w.dsu_bytes),
        f"{w.dsuo_pct:.0f}%",
        str(w.inodes_count),
    ]


def read_row(report: RunReport) -> list[str]:
    r = report.read or ReadBlock()
    run = report.run or RunBlock(bksize_bytes=report.identity.block_size_bytes)
    return [
        report.identity.label,
        f"{r.frt_min_us}, {r.frt_ave_us:.0f}, {r.frt_max_us}",
        _int(r.rth_bytes_per_us),
        _sec(r.folder_search_total_us),
        _sec(r.file_read_total_us),
        _sec(r.read_total_us),
        _kilo(r.frs_files_per_s),
        _kilo(r.bkrs_blocks_per_s),
        _sec(r.file_open_total_us),
        f"{r.fort_us:.0f}",
        _gb(r.tbyr_bytes),
        _int(r.tbkr_blocks),
        _sec(run.trt_run_us),
        f"{run.cpuo_pct:.0f}%",
        str(run.bksize_bytes),
    ]


def _render(header, rows, delimiter):
    if delimiter is not None:
        return "\n".join(delimiter.join(r) for r in [list(header), *rows]) + "\n"
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def emit_table(reports, delimiter: str | None = None) -> str:
    """Write and read metric tables, one row per report.

    Units: totals in seconds, per-file times in microseconds, throughput in
    bytes/us, byte totals in GB (10**9). ``delimiter`` switches to delimited
    text with the same columns.
    """
    if isinstance(reports, RunReport):
        reports = [reports]
    write = _render(WRITE_COLUMNS, [write_row(r) for r in reports], delimiter)
    read = _render(READ_COLUMNS, [read_row(r) for r in reports], delimiter)
    if delimiter is not None:
        return write + read
    return "File write metrics\n" + write + "\nFile read metrics\n" + read


def _write_hist(path, hist: HistogramData | None):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["bucket_low", "bucket_high", "count"])
        if hist is None:
            return
        edges = hist.edges_us
        out.writerow(["-inf", edges[0], hist.underflow_count])
        for i, count in enumerate(hist.counts):
            out.writerow([edges[i], edges[i + 1], count])
        out.writerow([edges[-1], "inf", hist.overflow_count])


def _write_trend(path, trend):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["sample_ordinal", "folder_ordinal", "throughput"])
        for p in trend:
            out.writerow([p.sample_ordinal, p.folder_ordinal, f"{p.throughput_files_per_s:.6f}"])


def emit_plotdata(report: RunReport, out_dir) -> list[str]:
    """Write histogram and trend CSVs for both phases (header only if absent)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name) for name in (
        "hist_write.csv", "hist_read.csv", "trend_write.csv", "trend_read.csv")}
    _write_hist(paths["hist_write.csv"], report.write_histogram)
    _write_hist(paths["hist_read.csv"], report.read_histogram)
    _write_trend(paths["trend_write.csv"], report.write_trend)
    _write_trend(paths["trend_read.csv"], report.read_trend)
    return list(paths.values())
