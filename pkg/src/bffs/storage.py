"""Before/used/after storage accounting around a run."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .backends import StorageSnapshot

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StorageDelta:
    before: StorageSnapshot
    after: StorageSnapshot
    inodes_used: int
    blocks_used: int
    bytes_used: int

    @property
    def block_size(self) -> int:
        return self.before.block_size


def expected_inodes(schedule) -> int:
    """One inode per file, folder and subfolder."""
    return (
        schedule.total_files
        + schedule.folders
        + schedule.folders * schedule.subfolders_per_folder
    )


def delta_between(before: StorageSnapshot, after: StorageSnapshot) -> StorageDelta:
    if (before.block_size, before.total_bytes) != (after.block_size, after.total_bytes):
        log.warning(
            "snapshot geometry changed during run: %s/%s -> %s/%s",
            before.block_size, before.total_bytes, after.block_size, after.total_bytes,
        )
    blocks = before.blocks_free - after.blocks_free
    return StorageDelta(
        before=before,
        after=after,
        inodes_used=before.inodes_free - after.inodes_free,
        blocks_used=blocks,
        bytes_used=blocks * before.block_size,
    )


def capture_delta(backend, before: StorageSnapshot, schedule=None) -> StorageDelta:
    """Take the after-snapshot and diff it against ``before``.

    When a schedule is given and the backend reports inodes, a mismatch with
    :func:`expected_inodes` is logged as a warning; other activity on the
    filesystem can legitimately consume inodes.
    """
    delta = delta_between(before, backend.storage_stats())
    if schedule is not None and backend.capabilities.reports_inodes:
        want = expected_inodes(schedule)
        if delta.inodes_used != want:
            log.warning("inode delta %d differs from expected %d", delta.inodes_used, want)
    if delta.inodes_used < 0 or delta.blocks_used < 0:
        log.warning(
            "negative storage delta (inodes %d, blocks %d); concurrent activity on target?",
            delta.inodes_used, delta.blocks_used,
        )
    return delta
