"""Run schedules, file-size sampling and checksummed file framing.

On-disk frame layout::

    +----------------------+-------------------------------+
    | payload (size - 8 B) | CRC-32 of payload, u64 LE (8) |
    +----------------------+-------------------------------+

The CRC is the reflected IEEE 802.3 CRC-32 (the one produced by
``zlib.crc32``); its upper 32 bits in the trailer are always zero.
"""

from __future__ import annotations

import enum
import math
import os
import struct
import zlib
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DistributionError, PayloadError, ScheduleError, ScheduleOverflowError

TRAILER_SIZE = 8
MIN_FRAME_SIZE = TRAILER_SIZE + 1
MAX_COUNT = 2**64 - 1
MAX_RESAMPLES = 10_000

_TRAILER = struct.Struct("<Q")


@dataclass(frozen=True)
class NameTemplate:
    folder: str = "f%04d"
    subfolder: str = "s%04d"
    file: str = "file%07d"


@dataclass(frozen=True)
class FileEntry:
    ordinal: int  # 1-based position in enumeration order
    folder: int
    subfolder: int
    index: int
    path: str


@dataclass(frozen=True)
class RunSchedule:
    folders: int
    subfolders_per_folder: int
    files_per_subfolder: int
    root_path: str
    name_template: NameTemplate = field(default_factory=NameTemplate)

    @property
    def total_files(self) -> int:
        return self.folders * self.subfolders_per_folder * self.files_per_subfolder

    @property
    def total_directories(self) -> int:
        return self.folders * (1 + self.subfolders_per_folder)

    def folder_path(self, folder: int) -> str:
        return os.path.join(self.root_path, self.name_template.folder % folder)

    def subfolder_path(self, folder: int, subfolder: int) -> str:
        return os.path.join(self.folder_path(folder), self.name_template.subfolder % subfolder)

    def file_path(self, folder: int, subfolder: int, index: int) -> str:
        return os.path.join(
            self.subfolder_path(folder, subfolder), self.name_template.file % index
        )

    def iter_directories(self) -> Iterator[str]:
        """Directories in creation order: each folder, then its subfolders."""
        for i in range(1, self.folders + 1):
            yield self.folder_path(i)
            for j in range(1, self.subfolders_per_folder + 1):
                yield self.subfolder_path(i, j)

    def iter_files(self) -> Iterator[FileEntry]:
        ordinal = 0
        for i in range(1, self.folders + 1):
            for j in range(1, self.subfolders_per_folder + 1):
                sub = self.subfolder_path(i, j)
                for k in range(1, self.files_per_subfolder + 1):
                    ordinal += 1
                    yield FileEntry(
                        ordinal, i, j, k, os.path.join(sub, self.name_template.file % k)
                    )


def plan_schedule(folders, subfolders, files_per_subfolder, root, names=None) -> RunSchedule:
    """Validate counts and build a :class:`RunSchedule`.

    >>> plan_schedule(100, 1, 100_000, "/mnt/t").total_files
    10000000
    """
    for name, value in (
        ("folders", folders),
        ("subfolders", subfolders),
        ("files_per_subfolder", files_per_subfolder),
    ):
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ScheduleError(f"{name} must be an integer >= 1, got {value!r}")
    if folders * subfolders * files_per_subfolder > MAX_COUNT:
        raise ScheduleOverflowError("total file count overflows an unsigned 64-bit counter")
    if not isinstance(root, (str, os.PathLike)) or not os.fspath(root) or "\0" in os.fspath(root):
        raise ScheduleError(f"invalid root path {root!r}")
    return RunSchedule(
        folders, subfolders, files_per_subfolder, os.fspath(root), names or NameTemplate()
    )


@dataclass(frozen=True)
class FileSizeDistribution:
    mean_bytes: float = 5500
    std_dev_bytes: float = 1024
    min_bytes: int = 1024
    max_bytes: int = 10240
    seed: int = 0

    def __post_init__(self):
        if self.min_bytes < MIN_FRAME_SIZE:
            raise DistributionError(f"min_bytes must be >= {MIN_FRAME_SIZE}")
        if not self.min_bytes <= self.mean_bytes <= self.max_bytes:
            raise DistributionError("require min_bytes <= mean_bytes <= max_bytes")
        if self.std_dev_bytes < 0:
            raise DistributionError("std_dev_bytes must be >= 0")
        if not 0 <= self.seed <= MAX_COUNT:
            raise DistributionError("seed must be an unsigned 64-bit integer")


class WorkloadRng:
    """Seeded random state shared by the size sampler and payload generator.

    Backed by numpy's PCG64 bit generator. Gaussian draws use the polar
    Box-Muller method; the second deviate of each pair is cached and returned
    by the next call, so both outputs are consumed.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._spare: float | None = None

    def uniform(self) -> float:
        return self._gen.random()

    def random_bytes(self, n: int) -> bytes:
        return self._gen.bytes(n)

    def gaussian(self) -> float:
        if self._spare is not None:
            g, self._spare = self._spare, None
            return g
        while True:
            u = 2.0 * self._gen.random() - 1.0
            v = 2.0 * self._gen.random() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                break
        scale = math.sqrt(-2.0 * math.log(s) / s)
        self._spare = v * scale
        return u * scale


def sample_file_size(dist: FileSizeDistribution, rng: WorkloadRng) -> int:
    """Draw one integer file size from Normal(mean, sd) truncated to [min, max].

    Out-of-range draws are rejected and redrawn, never clamped.
    """
    if dist.std_dev_bytes == 0:
        return int(math.floor(dist.mean_bytes + 0.5))
    for _ in range(MAX_RESAMPLES):
        size = math.floor(dist.mean_bytes + dist.std_dev_bytes * rng.gaussian() + 0.5)
        if dist.min_bytes <= size <= dist.max_bytes:
            return int(size)
    raise DistributionError(f"no in-range sample after {MAX_RESAMPLES} draws")


def generate_payload(size: int, rng: WorkloadRng) -> bytes:
    if size < 0:
        raise PayloadError("payload size must be >= 0")
    return rng.random_bytes(size)


def crc32(data) -> int:
    return zlib.crc32(data) & 0xFFFFFFFF


@dataclass(frozen=True)
class FramedFile:
    payload: bytes
    trailer: bytes

    @property
    def total_size(self) -> int:
        return len(self.payload) + len(self.trailer)

    def to_bytes(self) -> bytes:
        return self.payload + self.trailer


def encode_trailer(payload: bytes) -> FramedFile:
    if not payload:
        raise PayloadError("cannot frame an empty payload")
    return FramedFile(bytes(payload), _TRAILER.pack(crc32(payload)))


class FrameStatus(enum.Enum):
    PASS = "pass"
    CHECKSUM_MISMATCH = "checksum-mismatch"
    TOO_SHORT = "too-short"


def verify_frame(file_bytes) -> FrameStatus:
    if len(file_bytes) < MIN_FRAME_SIZE:
        return FrameStatus.TOO_SHORT
    view = memoryview(file_bytes)
    (stored,) = _TRAILER.unpack(view[-TRAILER_SIZE:])
    if stored != crc32(view[:-TRAILER_SIZE]):
        return FrameStatus.CHECKSUM_MISMATCH
    return FrameStatus.PASS


def make_file(dist: FileSizeDistribution, rng: WorkloadRng) -> bytes:
    """Sample a size, fill a payload and frame it; result length is the sampled size."""
    size = sample_file_size(dist, rng)
    return encode_trailer(generate_payload(size - TRAILER_SIZE, rng)).to_bytes()
