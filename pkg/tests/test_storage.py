import logging

import pytest

from bffs.backends import MockBackend, StorageSnapshot
from bffs.creator import run_create
from bffs.metrics import MetricsSink
from bffs.reference import reference_cells
from bffs.storage import capture_delta, delta_between, expected_inodes
from bffs.workload import FileSizeDistribution, plan_schedule


@pytest.mark.parametrize(
    "counts, inodes",
    [
        ((100, 1, 100_000), 10_000_200),
        ((100, 10, 100_000), 100_001_100),
        ((100, 100, 100_000), 1_000_010_100),
        ((1, 1, 1), 3),
    ],
)
def test_expected_inodes(counts, inodes):
    assert expected_inodes(plan_schedule(*counts, "/x")) == inodes


def test_mock_delta_closed_form():
    be = MockBackend("/m")
    dist = FileSizeDistribution(mean_bytes=5500, std_dev_bytes=0)
    res = run_create(plan_schedule(1, 2, 5, "/m"), dist, be, MetricsSink())
    # 10 files of two blocks each plus three directories
    assert res.storage.blocks_used == 23
    assert res.storage.inodes_used == 13
    assert res.storage.bytes_used == 23 * 4096


def test_no_op_delta():
    be = MockBackend("/m")
    snap = be.storage_stats()
    d = capture_delta(be, snap)
    assert (d.inodes_used, d.blocks_used, d.bytes_used) == (0, 0, 0)


def test_inode_less_backend_reports_zero():
    be = MockBackend("/m", reports_inodes=False)
    res = run_create(plan_schedule(1, 1, 4, "/m"), FileSizeDistribution(), be, MetricsSink())
    assert res.storage.inodes_used == 0 and res.storage.blocks_used > 0


def test_reference_block_count_to_bytes():
    cells = reference_cells("ext4_10m")
    assert cells.blocks_used == 19_270_745
    assert cells.blocks_used * cells.block_size == 78_932_971_520


def test_geometry_change_warns(caplog):
    a = StorageSnapshot(10, 100, 4096, 409600, 0)
    b = StorageSnapshot(9, 90, 4096, 819200, 1)
    with caplog.at_level(logging.WARNING):
        d = delta_between(a, b)
    assert d.blocks_used == 10 and "geometry" in caplog.text


def test_inode_mismatch_warns(caplog):
    be = MockBackend("/m")
    before = be.storage_stats()
    be.create_directory("/m/extra")
    with caplog.at_level(logging.WARNING):
        capture_delta(be, before, plan_schedule(1, 1, 1, "/m"))
    assert "differs from expected 3" in caplog.text
