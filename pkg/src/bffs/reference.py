"""Published billion-file measurements (14 TB HDD), kept as formula fixtures.

Values are the printed primary cells: byte totals in GB (10**9), phase totals
in seconds. They are replayed through :func:`bffs.metrics.derive`; they are
not targets for live measurement.
"""

from __future__ import annotations

from .metrics import PrimaryCells

_S = 1e6
_GB = 1e9

# label: files, TByW, TFWT, TfWT, TFCWT, DSU, inodes, TFRT, TfRT, TFORT, TByR, TRT_run, bksize
_ROWS = {
    "ext4_10m": (10**7, 54.99, 0.02, 157, 253, 78.93, 10000200, 0.00, 108, 23, 54.99, 683.66, 4096),
    "ext4_100m": (10**8, 549.95, 0.12, 2452, 3103, 789.29, 100001100, 0.05, 6226, 1688, 549.95, 15049.99, 4096),
    "ext4_1b": (10**9, 5507.59, 18.33, 14387, 24762, 7898.75, 1000010100, 185.42, 62200, 20181, 5507.59, 136914.58, 4096),
    "xfs_10m": (10**7, 54.99, 0.09, 124, 224, 138.34, 10000200, 0.00, 53, 23, 54.99, 571.45, 4096),
    "xfs_100m": (10**8, 549.96, 0.31, 2871, 2425, 903.31, 100001100, 0.09, 6285, 1351, 549.96, 14560.15, 4096),
    "xfs_1b": (10**9, 5499.58, 8.07, 31208, 26242, 8432.62, 1000010100, 253.65, 73852, 39588, 5499.58, 188036.72, 4096),
    "btrfs_10m": (10**7, 54.99, 0.01, 118, 220, 85.23, 0, 0.00, 40, 24, 54.99, 553.70, 4096),
    "btrfs_100m": (10**8, 549.93, 0.07, 1234, 4968, 911.62, 0, 0.08, 7071, 1759, 549.93, 16674.51, 4096),
    "f2fs_10m": (10**7, 55.00, 0.01, 110, 1131, 118.99, 10000400, 0.00, 26, 23, 55.00, 1436.08, 4096),
    "f2fs_100m": (10**8, 549.97, 0.05, 1166, 11969, 1189.78, 100003100, 1.36, 13163, 20780, 549.97, 48771.11, 4096),
    "zfs_10m": (10**7, 55.00, 0.02, 169, 394, 82.33, 10000200, 0.00, 165, 30, 55.00, 912.24, 131072),
    "zfs_100m": (10**8, 549.94, 5.92, 1535, 3901, 823.22, 100001100, 2.91, 21707, 3961, 549.94, 32981.95, 131072),
    "zfs_1b": (10**9, 5499.59, 13.76, 16316, 40887, 8232.76, 1000010100, 10.52, 230447, 41671, 5499.59, 348312.94, 131072),
}

# Exact block delta from the before/after disk snapshot of the EXT4 10M run.
_EXACT_BLOCKS = {"ext4_10m": 19270745}

# Per-file (min, ave, max) write and read times, microseconds.
_FILE_TIMES = {
    "ext4_10m": ((5, 15, 2_530_000), (2, 10, 4_120_000)),
    "xfs_10m": ((7, 12, 220_000), (2, 5, 2_160_000)),
    "zfs_1b": ((11, 16, 130_000), (73, 230, 830_000)),
}


def reference_labels() -> list[str]:
    return sorted(_ROWS)


def reference_cells(label: str) -> PrimaryCells:
    (files, tbyw, tfwt, tfilewt, tfcwt, dsu, inodes, tfrt, tfilert, tfort, tbyr, trt,
     bksize) = _ROWS[label]
    blocks = _EXACT_BLOCKS.get(label, dsu * _GB / bksize)
    return PrimaryCells(
        files_written=files,
        bytes_written=tbyw * _GB,
        folder_write_us=tfwt * _S,
        file_create_us=tfcwt * _S,
        file_write_us=tfilewt * _S,
        files_read=files,
        bytes_read=tbyr * _GB,
        folder_search_us=tfrt * _S,
        file_open_us=tfort * _S,
        file_read_us=tfilert * _S,
        blocks_used=blocks,
        block_size=bksize,
        inodes_used=inodes,
        run_us=trt * _S,
    )


def reference_file_times(label: str) -> dict:
    if label not in _FILE_TIMES:
        return {}
    (wmin, wave, wmax), (rmin, rave, rmax) = _FILE_TIMES[label]
    return dict(
        fwt_min_us=wmin, fwt_ave_us=wave, fwt_max_us=wmax,
        frt_min_us=rmin, frt_ave_us=rave, frt_max_us=rmax,
    )
