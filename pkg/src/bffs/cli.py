"""Command-line entry point: ``bffs {create,read,run,advise,replay}``.

Exit codes: 0 clean, 2 invalid flags, 3 run aborted, 4 integrity
discrepancies (checksum failures or missing files).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import signal
import sys

from . import report as rpt
from .backends import LatencyModel, MockBackend, RealBackend, calibrate_timer
from .creator import Progress, run_create
from .errors import (
    ConfigError,
    DistributionError,
    InconsistentMetricsError,
    RunAborted,
    RunAbortError,
    ScheduleError,
)
from .metrics import DEFAULT_EDGES_US, MetricsSink, SampleLog, compute_derived, derive
from .reader import run_read
from .reference import reference_cells, reference_file_times, reference_labels
from .storage import expected_inodes
from .workload import FileSizeDistribution, plan_schedule

log = logging.getLogger("bffs")

EXIT_OK, EXIT_USAGE, EXIT_ABORT, EXIT_INTEGRITY = 0, 2, 3, 4

DEFAULTS = {
    "root": None,
    "backend": "real",
    "folders": 100,
    "subfolders": 1,
    "files_per_subfolder": 100_000,
    "size_mean": 5500.0,
    "size_sd": 1024.0,
    "size_min": 1024,
    "size_max": 10240,
    "seed": 1,
    "buckets": 20,
    "out": "bffs-out",
    "label": "run",
    "sample_log": 0,
    "drop_cache_hint": False,
    "durability_sync": False,
    "progress_interval": 5.0,
    "mock_block_size": 4096,
    "mock_reports_inodes": True,
}
for _name in LatencyModel.fields():
    DEFAULTS["mock_" + _name] = getattr(LatencyModel(), _name)

_INT_KEYS = {
    "folders", "subfolders", "files_per_subfolder", "size_min", "size_max", "seed",
    "buckets", "sample_log", "mock_block_size",
}
_FLOAT_KEYS = {"size_mean", "size_sd", "progress_interval"}
_BOOL_KEYS = {"drop_cache_hint", "durability_sync", "mock_reports_inodes"}
_LATENCY_KEYS = {"mock_" + n for n in LatencyModel.fields()}


def _coerce(key, value):
    if key not in DEFAULTS:
        raise ConfigError(key, "unknown configuration key")
    if value is None or not isinstance(value, str):
        return value
    try:
        if key in _INT_KEYS:
            return int(float(value)) if "e" in value.lower() else int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            low = value.strip().lower()
            if low not in {"1", "0", "true", "false", "yes", "no", "on", "off"}:
                raise ValueError(value)
            return low in {"1", "true", "yes", "on"}
        if key in _LATENCY_KEYS:
            if ":" in value:
                low, high = value.split(":", 1)
                return (int(low), int(high))
            return int(value)
    except ValueError:
        raise ConfigError(key, f"cannot parse {value!r}") from None
    return value


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{n}", "expected key = value")
            key, value = (p.strip() for p in line.split("=", 1))
            key = key.replace("-", "_")
            values[key] = _coerce(key, value)
    return values


def effective_config(args, base=None) -> dict:
    """Defaults < stored report config < BFFS_CONFIG file < command-line flags."""
    cfg = dict(DEFAULTS)
    for key, value in (base or {}).items():
        if key in cfg:
            cfg[key] = _coerce(key, value)
    env = os.environ.get("BFFS_CONFIG")
    if env:
        try:
            cfg.update(read_config_file(env))
        except OSError as exc:
            raise ConfigError("BFFS_CONFIG", str(exc)) from None
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for item in getattr(args, "mock_latency", None) or []:
        if "=" not in item:
            raise ConfigError("--mock-latency", f"expected name=value, got {item!r}")
        name, value = item.split("=", 1)
        key = "mock_" + name.strip()
        if key not in _LATENCY_KEYS:
            raise ConfigError("--mock-latency", f"unknown latency {name!r}")
        cfg[key] = _coerce(key, value.strip())
    return cfg


def _config_strings(cfg) -> dict:
    out = {}
    for k, v in sorted(cfg.items()):
        if isinstance(v, tuple):
            v = f"{v[0]}:{v[1]}"
        out[k] = "" if v is None else str(v)
    return out


def validate(cfg):
    """Check every value before any filesystem access; raises ConfigError naming the flag."""
    if cfg["backend"] not in ("real", "mock"):
        raise ConfigError("--backend", "must be 'real' or 'mock'")
    if not cfg["root"]:
        if cfg["backend"] == "mock":
            cfg["root"] = "/mock"
        else:
            raise ConfigError("--root", "required for the real backend")
    for key in ("folders", "subfolders", "files_per_subfolder", "buckets"):
        if not isinstance(cfg[key], int) or cfg[key] < 1:
            raise ConfigError("--" + key.replace("_", "-"), "must be an integer >= 1")
    if cfg["sample_log"] < 0:
        raise ConfigError("--sample-log", "must be >= 0")
    if not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("--seed", "must be an unsigned 64-bit integer")
    for key in _LATENCY_KEYS:
        v = cfg[key]
        bad = (v[0] < 0 or v[1] <= v[0]) if isinstance(v, tuple) else v < 0
        if bad:
            raise ConfigError("--mock-latency", f"{key[5:]} must be >= 0 (ranges low:high, high > low)")
    try:
        schedule = plan_schedule(
            cfg["folders"], cfg["subfolders"], cfg["files_per_subfolder"], cfg["root"]
        )
    except ScheduleError as exc:
        raise ConfigError("--folders/--subfolders/--files-per-subfolder", str(exc)) from None
    try:
        dist = FileSizeDistribution(
            cfg["size_mean"], cfg["size_sd"], cfg["size_min"], cfg["size_max"], cfg["seed"]
        )
    except DistributionError as exc:
        raise ConfigError("--size-mean/--size-sd/--size-min/--size-max", str(exc)) from None
    if cfg["backend"] == "real" and not os.path.isdir(cfg["root"]):
        raise ConfigError("--root", f"{cfg['root']} is not an existing directory")
    if cfg["backend"] == "mock":
        bs = cfg["mock_block_size"]
        if bs < 512 or bs & (bs - 1):
            raise ConfigError("--mock-latency/mock_block_size", "block size must be a power of two >= 512")
    return schedule, dist


def make_backend(cfg):
    if cfg["backend"] == "mock":
        latency = LatencyModel(
            **{n: cfg["mock_" + n] for n in LatencyModel.fields()}, jitter_seed=cfg["seed"]
        )
        return MockBackend(
            cfg["root"], latency, block_size=cfg["mock_block_size"],
            reports_inodes=cfg["mock_reports_inodes"],
        )
    return RealBackend(cfg["root"], durability_sync=cfg["durability_sync"])


def _sink(cfg, out_dir) -> MetricsSink:
    sink = MetricsSink(DEFAULT_EDGES_US)
    n = cfg["sample_log"]
    if n:
        sink.write_log = SampleLog(
            os.path.join(out_dir, "samples_write.csv"), n,
            ["path_ordinal", "size", "create_us", "write_us"],
        )
        sink.read_log = SampleLog(
            os.path.join(out_dir, "samples_read.csv"), n,
            ["path_ordinal", "size", "open_us", "read_us", "verify"],
        )
    return sink


def _derived(report, create, read, storage, block_size, run_us):
    try:
        return compute_derived(create, read, storage, block_size, run_us)
    except InconsistentMetricsError as exc:
        log.warning("derived metrics: %s; undefined ratios reported as 0", exc)
        report.warnings.append(str(exc))
        return compute_derived(create, read, storage, block_size, run_us, strict=False)


def _derived_cells(report, cells):
    try:
        return derive(cells)
    except InconsistentMetricsError as exc:
        log.warning("derived metrics: %s; undefined ratios reported as 0", exc)
        report.warnings.append(str(exc))
        return derive(cells, strict=False)


def write_outputs(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    rpt.emit_json(report, os.path.join(out_dir, "report.json"))
    with open(os.path.join(out_dir, "table.txt"), "w") as fh:
        fh.write(rpt.emit_table(report))
    rpt.emit_plotdata(report, out_dir)


def _summary(report) -> str:
    parts = [f"label={report.identity.label}"]
    if report.write:
        parts.append(f"{report.write.files_written_count} files written")
        if report.write.errors_count:
            parts.append(f"{report.write.errors_count} write errors")
    if report.read:
        parts.append(f"{report.read.files_read_count} files read")
        parts.append(f"{report.read.checksum_failures_count} failed checksums")
        parts.append(f"{report.read.missing_files_count} missing files")
    if report.run:
        parts.append(f"CPUO {report.run.cpuo_pct:.1f}%")
    if not report.identity.complete:
        parts.append("INCOMPLETE")
    return ", ".join(parts)


def _integrity_code(report) -> int:
    r = report.read
    if r and (r.checksum_failures_count or r.missing_files_count):
        return EXIT_INTEGRITY
    return EXIT_OK


def _raise_interrupt(signum, frame):
    raise KeyboardInterrupt


class _Run:
    """State shared by create/read/run for a single invocation."""

    def __init__(self, args, base_config=None):
        self.cfg = effective_config(args, base_config)
        self.schedule, self.dist = validate(self.cfg)
        self.out = self.cfg["out"]
        os.makedirs(self.out, exist_ok=True)
        self.backend = make_backend(self.cfg)
        self.sink = _sink(self.cfg, self.out)
        quiet = getattr(args, "quiet", False)
        self.progress = None if quiet else Progress(interval=self.cfg["progress_interval"])
        self.report = rpt.RunReport(
            identity=rpt.identity_for(
                self.cfg["label"], self.backend, self.schedule, self.dist,
                _config_strings(self.cfg),
                timer_overhead_ns=calibrate_timer() if self.backend.kind == "real" else 0.0,
            )
        )

    def create(self):
        return run_create(
            self.schedule, self.dist, self.backend, self.sink, self.progress, self.cfg["buckets"]
        )

    def read(self):
        return run_read(
            self.schedule, self.backend, self.sink, self.progress, self.cfg["buckets"],
            drop_cache=self.cfg["drop_cache_hint"],
        )

    def finish(self, code):
        self.sink.close()
        self.report.identity.finished_at_us = self.backend.timestamp_us()
        write_outputs(self.report, self.out)
        print(_summary(self.report), file=sys.stderr)
        return code


def _abort(run, exc, phase):
    log.error("%s phase aborted: %s", phase, exc)
    run.report.identity.complete = False
    run.report.warnings.append(f"{phase} aborted: {exc}")
    return exc.partial


def cmd_create(args) -> int:
    run = _Run(args)
    run.report.identity.started_at_us = run.backend.timestamp_us()
    t0 = run.backend.clock_us()
    code = EXIT_OK
    try:
        create = run.create()
    except RunAborted as exc:
        create, code = _abort(run, exc, "create"), EXIT_ABORT
    run_us = run.backend.clock_us() - t0
    derived = _derived(run.report, create, None, create.storage, None, run_us)
    rpt.attach_create(run.report, create, run.sink, derived)
    rpt.attach_run(run.report, derived, run.backend.capabilities.block_size)
    return run.finish(code)


def cmd_read(args) -> int:
    base_report = None
    base_config = None
    if args.from_report:
        base_report = rpt.load_json(args.from_report)
        base_config = dict(base_report.identity.config)
        if args.out is None:
            base_config["out"] = os.path.dirname(os.path.abspath(args.from_report))
    run = _Run(args, base_config)
    if base_report is not None:
        identity = run.report.identity
        run.report = base_report
        run.report.identity.config = identity.config
        run.report.warnings = list(base_report.warnings)
    else:
        run.report.identity.started_at_us = run.backend.timestamp_us()
    if isinstance(run.backend, MockBackend):
        # The in-memory tree does not outlive a process: rebuild it, untimed.
        run_create(run.schedule, run.dist, run.backend, MetricsSink(), None, run.cfg["buckets"])
    t0 = run.backend.clock_us()
    code = EXIT_OK
    try:
        read = run.read()
    except RunAborted as exc:
        read, code = _abort(run, exc, "read"), EXIT_ABORT
    read_us = run.backend.clock_us() - t0
    prior_us = base_report.run.trt_run_us if base_report and base_report.run else 0
    derived = _derived_cells(run.report, rpt.cells_from_report(run.report, read, prior_us + read_us))
    rpt.attach_read(run.report, read, run.sink, derived)
    rpt.attach_run(run.report, derived, run.report.identity.block_size_bytes)
    if code == EXIT_OK:
        code = _integrity_code(run.report)
    return run.finish(code)


def cmd_run(args) -> int:
    run = _Run(args)
    run.report.identity.started_at_us = run.backend.timestamp_us()
    t0 = run.backend.clock_us()
    create = read = None
    code = EXIT_OK
    try:
        create = run.create()
        read = run.read()
    except RunAborted as exc:
        partial = _abort(run, exc, "read" if create else "create")
        if create is None:
            create = partial
        else:
            read = partial
        code = EXIT_ABORT
    run_us = run.backend.clock_us() - t0
    derived = _derived(
        run.report, create, read, create.storage, run.backend.capabilities.block_size, run_us
    )
    rpt.attach_create(run.report, create, run.sink, derived)
    if read is not None:
        rpt.attach_read(run.report, read, run.sink, derived)
    rpt.attach_run(run.report, derived, run.backend.capabilities.block_size)
    if code == EXIT_OK:
        code = _integrity_code(run.report)
    return run.finish(code)


# --- advise -------------------------------------------------------------------

FS_TYPES = ("ext4", "xfs", "btrfs", "zfs", "f2fs")
SAFETY_FACTOR = 1.2
F2FS_INODE_CEILING = 630_000_000


def advise(fs_type, target_files, disk_bytes, folders=100, files_per_subfolder=100_000,
           max_file_bytes=10240, block_size=4096) -> str:
    """Text advice for preparing a filesystem for ``target_files`` files. Never executes anything."""
    if fs_type not in FS_TYPES:
        raise ConfigError("--fs", f"must be one of {', '.join(FS_TYPES)}")
    if target_files < 1 or disk_bytes < 1:
        raise ConfigError("--files/--disk-bytes", "must be >= 1")
    subfolders = max(1, math.ceil(target_files / (folders * files_per_subfolder)))
    per_sub = max(1, math.ceil(target_files / (folders * subfolders)))
    schedule = plan_schedule(folders, subfolders, per_sub, "/")
    inodes = expected_inodes(schedule)
    wanted = math.ceil(inodes * SAFETY_FACTOR)
    lines = [
        f"# {fs_type}: {target_files:,} files in {folders} folders x {subfolders} subfolders "
        f"x {per_sub:,} files",
        f"# inodes needed: {inodes:,}; with x{SAFETY_FACTOR} safety: {wanted:,}",
        "# Commands are printed only; review the device name before running anything.",
    ]
    fs_block = 131072 if fs_type == "zfs" else block_size
    worst = target_files * -(-max_file_bytes // fs_block) * fs_block
    if worst > disk_bytes:
        lines.append(
            f"# WARNING: worst-case data footprint {worst / 1e12:.2f} TB exceeds the "
            f"{disk_bytes / 1e12:.2f} TB disk"
        )
    if fs_type == "ext4":
        lines.append(f"mkfs.ext4 -N {wanted} -b {block_size} /dev/xxx")
        ratio = 65536 if disk_bytes > 4 * 2**40 else 16384
        lines.append(
            f"# mke2fs defaults would give about {disk_bytes // ratio:,} inodes "
            f"(one per {ratio // 1024} KiB); -N overrides that."
        )
        if wanted > disk_bytes // block_size:
            lines.append("# WARNING: more inodes than blocks; ext4 will refuse this -N value")
    elif fs_type == "xfs":
        pct = max(10, math.ceil(wanted * 512 / disk_bytes * 100))
        lines.append(f"mkfs.xfs -i maxpct={pct} -f /dev/xxx")
        lines.append(
            "# XFS allocates inodes on demand; maxpct caps the share of space inodes may use "
            "(512-byte inodes assumed). Expect brief stalls while inode chunks are allocated."
        )
    elif fs_type == "btrfs":
        lines.append("mkfs.btrfs -f /dev/xxx")
        lines.append(
            "# BtrFS does not use inodes like other filesystems: inodes are allocated "
            "dynamically and df/statvfs report 0, so inode accounting is skipped."
        )
    elif fs_type == "zfs":
        lines.append("zpool create -f zfspoolname /dev/xxx")
        lines.append(
            "# The pool must be created and mounted before use. Default recordsize is "
            "128 KiB, so block accounting uses 131072-byte blocks."
        )
    else:
        lines.append("mkfs.f2fs -i -s 10 -z 10 -f /dev/xxx")
        if inodes > F2FS_INODE_CEILING:
            lines.append(
                f"# WARNING: {inodes:,} inodes requested; F2FS formatting is known to fail "
                f"above about 630 million inodes, so limit the run to about 100 million files."
            )
    return "\n".join(lines) + "\n"


def cmd_advise(args) -> int:
    try:
        text = advise(args.fs, int(float(args.files)), int(float(args.disk_bytes)))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("--files/--disk-bytes", str(exc)) from None
    sys.stdout.write(text)
    return EXIT_OK


def cmd_replay(args) -> int:
    """Recompute derived metrics from stored primary cells, no filesystem access."""
    import json

    from .metrics import PrimaryCells

    if args.reference:
        if args.reference not in reference_labels():
            raise ConfigError("--reference", f"choose from {', '.join(reference_labels())}")
        cells = reference_cells(args.reference)
        extra = reference_file_times(args.reference)
        label = args.label or args.reference
    else:
        try:
            with open(args.cells) as fh:
                raw = json.load(fh)
            extra = {k: raw.pop(k) for k in list(raw) if k.startswith(("fwt_", "frt_"))}
            cells = PrimaryCells(**raw)
        except (OSError, TypeError, ValueError) as exc:
            raise ConfigError("--cells", str(exc)) from None
        label = args.label or os.path.splitext(os.path.basename(args.cells))[0]
    report = rpt.report_from_cells(label, cells, derive(cells, strict=False), **extra)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        rpt.emit_json(report, os.path.join(args.out, "report.json"))
    sys.stdout.write(rpt.emit_table(report, delimiter=args.delimiter))
    return EXIT_OK


# --- argument parsing -----------------------------------------------------------


def _run_flags(p: argparse.ArgumentParser):
    p.add_argument("--root", help="target directory (mounted filesystem under test)")
    p.add_argument("--backend", choices=["real", "mock"])
    p.add_argument("--folders", type=int)
    p.add_argument("--subfolders", type=int)
    p.add_argument("--files-per-subfolder", type=int, dest="files_per_subfolder")
    p.add_argument("--size-mean", type=float, dest="size_mean")
    p.add_argument("--size-sd", type=float, dest="size_sd")
    p.add_argument("--size-min", type=int, dest="size_min")
    p.add_argument("--size-max", type=int, dest="size_max")
    p.add_argument("--seed", type=int)
    p.add_argument("--buckets", type=int, help="trend samples per phase (default 20)")
    p.add_argument("--out", help="output directory for report.json, table.txt and CSVs")
    p.add_argument("--label", help="run label, e.g. ext4_10m")
    p.add_argument("--sample-log", type=int, dest="sample_log", metavar="N",
                   help="log raw timings of every N-th file")
    p.add_argument("--drop-cache-hint", action="store_const", const=True, dest="drop_cache_hint",
                   help="sync and try to drop page caches before reading")
    p.add_argument("--durability-sync", action="store_const", const=True, dest="durability_sync",
                   help="fsync every file before close")
    p.add_argument("--progress-interval", type=float, dest="progress_interval")
    p.add_argument("--mock-latency", action="append", metavar="NAME=US",
                   help="mock latency override, e.g. create_us=25 or write_base_us=10:20")
    p.add_argument("-q", "--quiet", action="store_true", help="no progress lines")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bffs", description="Small-file metadata scalability benchmark"
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("create", help="write phase: build the tree, record write metrics")
    _run_flags(p)
    p.set_defaults(func=cmd_create)

    p = sub.add_parser("read", help="read phase: verify the tree, merge read metrics")
    _run_flags(p)
    p.add_argument("--from-report", dest="from_report",
                   help="report.json from a create run; reuses its parameters")
    p.set_defaults(func=cmd_read)

    p = sub.add_parser("run", help="create then read in one process")
    _run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("advise", help="print filesystem preparation commands (never runs them)")
    p.add_argument("--fs", required=True)
    p.add_argument("--files", required=True, help="target file count, e.g. 1e9")
    p.add_argument("--disk-bytes", required=True, dest="disk_bytes", help="e.g. 14e12")
    p.set_defaults(func=cmd_advise)

    p = sub.add_parser("replay", help="derive table metrics from stored primary cells")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--reference", help=f"built-in row: {', '.join(reference_labels())}")
    g.add_argument("--cells", help="JSON file of primary cells")
    p.add_argument("--label")
    p.add_argument("--out")
    p.add_argument("--delimiter", help="emit delimited rows instead of an aligned table")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    previous = signal.signal(signal.SIGTERM, _raise_interrupt)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"bffs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RunAbortError as exc:
        print(f"bffs: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    finally:
        signal.signal(signal.SIGTERM, previous)


if __name__ == "__main__":
    sys.exit(main())
