"""Storage backends: the real OS filesystem and a deterministic in-memory model.

Every timed call returns elapsed microseconds as an integer. Backends also
expose ``clock_us()`` (a monotonic run clock) and ``timestamp_us()`` (wall
time for report identity); the mock backend serves both from a virtual clock
so its reports are reproducible.
"""

from __future__ import annotations

import errno
import logging
import os
import posixpath
import random
import statistics
import time
from dataclasses import dataclass
from typing import Union

from .errors import RunAbortError

log = logging.getLogger(__name__)

_ABORT_ERRNOS = {errno.ENOSPC, errno.EDQUOT, errno.EROFS}


@dataclass(frozen=True)
class StorageSnapshot:
    inodes_free: int
    blocks_free: int
    block_size: int
    total_bytes: int
    timestamp: int  # microseconds since epoch

    @property
    def bytes_free(self) -> int:
        return self.blocks_free * self.block_size


@dataclass(frozen=True)
class BackendCapabilities:
    reports_inodes: bool
    block_size: int

    def __post_init__(self):
        bs = self.block_size
        if bs < 512 or bs & (bs - 1):
            raise ValueError(f"block size must be a power of two >= 512, got {bs}")


def elapsed_us(start_ns: int, end_ns: int) -> int:
    """Round a nanosecond interval to microseconds, never below 1."""
    return max(1, (end_ns - start_ns + 500) // 1000)


def calibrate_timer(samples: int = 1000) -> float:
    """Median cost, in nanoseconds, of an empty timed interval.

    Diagnostic only; it is never subtracted from measurements.
    """
    clock = time.perf_counter_ns
    costs = []
    for _ in range(samples):
        t0 = clock()
        costs.append(clock() - t0)
    return float(statistics.median(costs))


class RealBackend:
    """Backend over a mounted directory, using raw ``os`` calls.

    Exactly one file descriptor is open at a time and it is closed before the
    call returns.
    """

    kind = "real"

    def __init__(self, root: str, durability_sync: bool = False):
        self.root = os.fspath(root)
        self.durability_sync = durability_sync
        self._caps = None

    @property
    def capabilities(self) -> BackendCapabilities:
        if self._caps is None:
            st = self._statvfs()
            self._caps = BackendCapabilities(st.f_files > 0, st.f_frsize or st.f_bsize)
        return self._caps

    def clock_us(self) -> int:
        return time.perf_counter_ns() // 1000

    def timestamp_us(self) -> int:
        return time.time_ns() // 1000

    def create_directory(self, path: str) -> int:
        t0 = time.perf_counter_ns()
        try:
            os.mkdir(path)
        except OSError as exc:
            raise RunAbortError(f"mkdir {path}: {exc.strerror}") from exc
        return elapsed_us(t0, time.perf_counter_ns())

    def create_and_write_file(self, path: str, content: bytes) -> tuple[int, int]:
        clock = time.perf_counter_ns
        try:
            t0 = clock()
            fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o644)
            t1 = clock()
            try:
                view = memoryview(content)
                while view:
                    view = view[os.write(fd, view):]
                if self.durability_sync:
                    os.fsync(fd)
            finally:
                os.close(fd)
            t2 = clock()
        except OSError as exc:
            if exc.errno in _ABORT_ERRNOS:
                raise RunAbortError(f"write {path}: {exc.strerror}") from exc
            raise
        return elapsed_us(t0, t1), elapsed_us(t1, t2)

    def open_and_read_file(self, path: str) -> tuple[int, int, bytes]:
        clock = time.perf_counter_ns
        t0 = clock()
        fd = os.open(path, os.O_RDONLY)
        t1 = clock()
        try:
            want = os.fstat(fd).st_size
            chunks = []
            got = 0
            while True:
                chunk = os.read(fd, max(want - got, 4096))
                if not chunk:
                    break
                chunks.append(chunk)
                got += len(chunk)
        finally:
            os.close(fd)
        t2 = clock()
        return elapsed_us(t0, t1), elapsed_us(t1, t2), b"".join(chunks)

    def search_directory(self, path: str) -> int:
        t0 = time.perf_counter_ns()
        fd = os.open(path, os.O_RDONLY | os.O_DIRECTORY)
        os.close(fd)
        return elapsed_us(t0, time.perf_counter_ns())

    def _statvfs(self):
        try:
            return os.statvfs(self.root)
        except OSError as exc:
            raise RunAbortError(f"statvfs {self.root}: {exc.strerror}") from exc

    def storage_stats(self) -> StorageSnapshot:
        st = self._statvfs()
        block_size = st.f_frsize or st.f_bsize
        return StorageSnapshot(
            inodes_free=st.f_ffree if st.f_files > 0 else 0,
            blocks_free=st.f_bfree,
            block_size=block_size,
            total_bytes=st.f_blocks * block_size,
            timestamp=self.timestamp_us(),
        )

    def drop_caches(self) -> bool:
        """Flush dirty pages and ask the kernel to drop clean caches (needs root)."""
        os.sync()
        try:
            with open("/proc/sys/vm/drop_caches", "w") as fh:
                fh.write("3\n")
        except OSError as exc:
            log.warning("cache drop not applied: %s", exc)
            return False
        return True


Latency = Union[int, tuple]


@dataclass(frozen=True)
class LatencyModel:
    """Per-operation costs, in microseconds, charged by :class:`MockBackend`.

    Each cost is either a fixed integer or a ``(low, high)`` pair, drawn
    uniformly as an integer in ``[low, high)`` from a generator seeded with
    ``jitter_seed``. ``app_gap_us`` is virtual application time that passes
    before every operation, outside its timed window.
    """

    mkdir_us: Latency = 20
    dir_search_us: Latency = 3
    create_us: Latency = 25
    write_base_us: Latency = 5
    write_per_block_us: Latency = 5
    open_us: Latency = 2
    read_base_us: Latency = 5
    read_per_block_us: Latency = 3
    app_gap_us: Latency = 2
    jitter_seed: int = 0

    @classmethod
    def zero(cls, app_gap_us: Latency = 2) -> "LatencyModel":
        return cls(0, 0, 0, 0, 0, 0, 0, 0, app_gap_us)

    @classmethod
    def fields(cls) -> list[str]:
        return [f for f in cls.__dataclass_fields__ if f != "jitter_seed"]


class MockBackend:
    """Deterministic in-memory filesystem with a block and latency model.

    Block accounting: each file consumes ``ceil(size / block_size)`` blocks
    and each created directory one block; the root is free. Every created
    file or directory consumes one inode.
    """

    kind = "mock"

    def __init__(
        self,
        root: str = "/mock",
        latency: LatencyModel | None = None,
        block_size: int = 4096,
        total_bytes: int = 1 << 40,
        total_inodes: int = 1 << 32,
        reports_inodes: bool = True,
        epoch_us: int = 1_700_000_000_000_000,
    ):
        self.root = posixpath.normpath(os.fspath(root))
        self.latency = latency or LatencyModel()
        self._caps = BackendCapabilities(reports_inodes, block_size)
        self.total_blocks = total_bytes // block_size
        self.total_inodes = total_inodes if reports_inodes else 0
        self.epoch_us = epoch_us
        self.now = 0
        self._jitter = random.Random(self.latency.jitter_seed)
        self._dirs = {self.root}
        self._files: dict[str, bytes] = {}
        self.blocks_used = 0
        self.inodes_used = 0

    @property
    def capabilities(self) -> BackendCapabilities:
        return self._caps

    @property
    def block_size(self) -> int:
        return self._caps.block_size

    def clock_us(self) -> int:
        return self.now

    def timestamp_us(self) -> int:
        return self.epoch_us + self.now

    def _cost(self, value: Latency) -> int:
        if isinstance(value, tuple):
            low, high = value
            return self._jitter.randrange(low, high)
        return value

    def _spend(self, *costs: Latency, blocks: int = 0, per_block: Latency = 0) -> int:
        self.now += self._cost(self.latency.app_gap_us)
        total = sum(self._cost(c) for c in costs) + blocks * self._cost(per_block)
        self.now += total
        return total

    def blocks_for(self, size: int) -> int:
        return -(-size // self.block_size)

    def _norm(self, path: str) -> str:
        return posixpath.normpath(os.fspath(path))

    def _require_parent(self, path: str):
        parent = posixpath.dirname(path)
        if parent not in self._dirs:
            raise FileNotFoundError(errno.ENOENT, "no such directory", parent)

    def create_directory(self, path: str) -> int:
        path = self._norm(path)
        if path in self._dirs or path in self._files:
            raise RunAbortError(f"mkdir {path}: already exists")
        if posixpath.dirname(path) not in self._dirs:
            raise RunAbortError(f"mkdir {path}: missing parent")
        self._take(1)
        self._dirs.add(path)
        return self._spend(self.latency.mkdir_us)

    def _take(self, blocks: int):
        if self.blocks_used + blocks > self.total_blocks:
            raise RunAbortError("no space left on mock device")
        if self._caps.reports_inodes and self.inodes_used + 1 > self.total_inodes:
            raise RunAbortError("no inodes left on mock device")
        self.blocks_used += blocks
        self.inodes_used += 1

    def create_and_write_file(self, path: str, content: bytes) -> tuple[int, int]:
        path = self._norm(path)
        self._require_parent(path)
        if path in self._dirs:
            raise IsADirectoryError(errno.EISDIR, "is a directory", path)
        if path in self._files:
            self._release(path)
        blocks = self.blocks_for(len(content))
        self._take(blocks)
        self._files[path] = bytes(content)
        create = self._spend(self.latency.create_us)
        write = self._spend(
            self.latency.write_base_us, blocks=blocks, per_block=self.latency.write_per_block_us
        )
        return create, write

    def open_and_read_file(self, path: str) -> tuple[int, int, bytes]:
        path = self._norm(path)
        if path not in self._files:
            self._spend(self.latency.open_us)
            raise FileNotFoundError(errno.ENOENT, "no such file", path)
        content = self._files[path]
        opened = self._spend(self.latency.open_us)
        read = self._spend(
            self.latency.read_base_us,
            blocks=self.blocks_for(len(content)),
            per_block=self.latency.read_per_block_us,
        )
        return opened, read, content

    def search_directory(self, path: str) -> int:
        path = self._norm(path)
        elapsed = self._spend(self.latency.dir_search_us)
        if path not in self._dirs:
            raise FileNotFoundError(errno.ENOENT, "no such directory", path)
        return elapsed

    def storage_stats(self) -> StorageSnapshot:
        inodes_free = self.total_inodes - self.inodes_used if self._caps.reports_inodes else 0
        return StorageSnapshot(
            inodes_free=inodes_free,
            blocks_free=self.total_blocks - self.blocks_used,
            block_size=self.block_size,
            total_bytes=self.total_blocks * self.block_size,
            timestamp=self.timestamp_us(),
        )

    def drop_caches(self) -> bool:
        return True

    # Test and fault-injection helpers; these never advance the clock.

    def _release(self, path: str):
        self.blocks_used -= self.blocks_for(len(self._files.pop(path)))
        self.inodes_used -= 1

    def delete_file(self, path: str):
        self._release(self._norm(path))

    def remove_directory(self, path: str):
        path = self._norm(path)
        if any(posixpath.dirname(p) == path for p in (*self._dirs, *self._files)):
            raise OSError(errno.ENOTEMPTY, "directory not empty", path)
        self._dirs.remove(path)
        self.blocks_used -= 1
        self.inodes_used -= 1

    def corrupt_file(self, path: str, offset: int, mask: int = 0xFF):
        path = self._norm(path)
        data = bytearray(self._files[path])
        data[offset] ^= mask
        self._files[path] = bytes(data)

    def file_bytes(self, path: str) -> bytes:
        return self._files[self._norm(path)]

    def list_files(self) -> list[str]:
        return sorted(self._files)

    def list_directories(self) -> list[str]:
        return sorted(self._dirs - {self.root})


def make_backend(kind: str, root: str, **kwargs):
    if kind == "real":
        return RealBackend(root, durability_sync=kwargs.get("durability_sync", False))
    if kind == "mock":
        kwargs.pop("durability_sync", None)
        return MockBackend(root, **kwargs)
    raise ValueError(f"unknown backend {kind!r}")
