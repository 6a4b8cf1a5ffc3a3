import os
import random

import pytest

from bffs.backends import (
    BackendCapabilities,
    LatencyModel,
    MockBackend,
    RealBackend,
    calibrate_timer,
    elapsed_us,
)
from bffs.errors import RunAbortError


def test_elapsed_rounding():
    assert elapsed_us(0, 0) == 1
    assert elapsed_us(0, 1499) == 1
    assert elapsed_us(0, 1500) == 2
    assert elapsed_us(100, 10_100) == 10


def test_calibration_is_nonnegative():
    assert calibrate_timer(100) >= 0


@pytest.mark.parametrize("bs", [511, 1000, 0, 3000])
def test_capabilities_reject_bad_block_size(bs):
    with pytest.raises(ValueError):
        BackendCapabilities(True, bs)


def test_capabilities_accept_common_sizes():
    assert BackendCapabilities(True, 4096).block_size == 4096
    assert BackendCapabilities(False, 131072).reports_inodes is False


class TestRealBackend:
    def test_directory(self, tmp_path):
        be = RealBackend(tmp_path)
        assert be.create_directory(str(tmp_path / "a")) > 0
        assert (tmp_path / "a").is_dir()
        with pytest.raises(RunAbortError):
            be.create_directory(str(tmp_path / "missing" / "b"))
        with pytest.raises(RunAbortError):
            be.create_directory(str(tmp_path / "a"))

    def test_write_read_round_trip(self, tmp_path):
        be = RealBackend(tmp_path)
        data = os.urandom(5500)
        path = str(tmp_path / "f")
        create_us, write_us = be.create_and_write_file(path, data)
        assert create_us > 0 and write_us > 0
        assert os.path.getsize(path) == 5500
        open_us, read_us, back = be.open_and_read_file(path)
        assert open_us > 0 and read_us > 0 and back == data

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            RealBackend(tmp_path).open_and_read_file(str(tmp_path / "nope"))

    def test_write_without_parent_is_per_file_error(self, tmp_path):
        with pytest.raises(OSError) as info:
            RealBackend(tmp_path).create_and_write_file(str(tmp_path / "x" / "f"), b"abc")
        assert not isinstance(info.value, RunAbortError)

    def test_search(self, tmp_path):
        be = RealBackend(tmp_path)
        assert be.search_directory(str(tmp_path)) > 0
        with pytest.raises(FileNotFoundError):
            be.search_directory(str(tmp_path / "nope"))

    def test_bulk_round_trip(self, tmp_path):
        be = RealBackend(tmp_path, durability_sync=False)
        r = random.Random(1)
        written = {}
        for i in range(10_000):
            data = r.randbytes(r.randint(1, 300))
            path = str(tmp_path / f"f{i:05d}")
            be.create_and_write_file(path, data)
            written[path] = data
        for path, data in written.items():
            assert be.open_and_read_file(path)[2] == data

    def test_durability_sync(self, tmp_path):
        be = RealBackend(tmp_path, durability_sync=True)
        be.create_and_write_file(str(tmp_path / "f"), b"x" * 100)
        assert (tmp_path / "f").read_bytes() == b"x" * 100

    def test_storage_stats(self, tmp_path):
        be = RealBackend(tmp_path)
        snap = be.storage_stats()
        assert snap.block_size > 0
        assert snap.blocks_free * snap.block_size <= snap.total_bytes
        again = be.storage_stats()
        assert (again.block_size, again.total_bytes) == (snap.block_size, snap.total_bytes)
        assert be.capabilities.block_size == snap.block_size

    def test_stats_failure_aborts(self, tmp_path):
        with pytest.raises(RunAbortError):
            RealBackend(tmp_path / "gone").storage_stats()


class TestMockBackend:
    def test_mkdir_latency(self):
        be = MockBackend("/m", LatencyModel(mkdir_us=7))
        assert be.create_directory("/m/a") == 7
        with pytest.raises(RunAbortError):
            be.create_directory("/m/x/y")
        with pytest.raises(RunAbortError):
            be.create_directory("/m/a")

    def test_create_write_latency_per_block(self):
        be = MockBackend("/m", LatencyModel(create_us=25, write_base_us=0, write_per_block_us=10))
        # ceil(5500 / 4096) = 2 blocks
        assert be.create_and_write_file("/m/f", b"\0" * 5500) == (25, 20)

    def test_open_latency(self):
        be = MockBackend("/m", LatencyModel(open_us=2))
        be.create_and_write_file("/m/f", b"abc")
        opened, _, content = be.open_and_read_file("/m/f")
        assert opened == 2 and content == b"abc"
        with pytest.raises(FileNotFoundError):
            be.open_and_read_file("/m/g")

    def test_write_needs_parent(self):
        with pytest.raises(FileNotFoundError):
            MockBackend("/m").create_and_write_file("/m/d/f", b"a")

    def test_empty_snapshot(self):
        snap = MockBackend("/m", total_bytes=4096 * 1000).storage_stats()
        assert snap.blocks_free * snap.block_size == snap.total_bytes == 4096 * 1000

    def test_block_accounting(self):
        be = MockBackend("/m")
        before = be.storage_stats()
        be.create_and_write_file("/m/f", b"\0" * 5500)
        after = be.storage_stats()
        assert before.blocks_free - after.blocks_free == 2
        assert before.inodes_free - after.inodes_free == 1
        be.create_directory("/m/d")
        assert after.blocks_free - be.storage_stats().blocks_free == 1
        be.delete_file("/m/f")
        assert be.blocks_used == 1 and be.inodes_used == 1

    def test_inode_less(self):
        be = MockBackend("/m", reports_inodes=False)
        be.create_directory("/m/d")
        assert be.storage_stats().inodes_free == 0
        assert be.capabilities.reports_inodes is False

    def test_no_space(self):
        be = MockBackend("/m", total_bytes=4096 * 2)
        be.create_and_write_file("/m/a", b"\0" * 4096)
        with pytest.raises(RunAbortError):
            be.create_and_write_file("/m/b", b"\0" * 4097)

    def test_virtual_clock(self):
        be = MockBackend("/m", LatencyModel(mkdir_us=10, app_gap_us=3))
        be.create_directory("/m/a")
        assert be.clock_us() == 13
        assert be.timestamp_us() == be.epoch_us + 13

    def test_jitter_range_and_determinism(self):
        model = LatencyModel(create_us=(10, 20), write_base_us=(10, 20), write_per_block_us=0)

        def trace():
            be = MockBackend("/m", model)
            return [be.create_and_write_file(f"/m/f{i}", b"ab") for i in range(500)]

        first = trace()
        assert first == trace()
        assert all(10 <= c < 20 and 10 <= w < 20 for c, w in first)
        assert {c for c, _ in first} == set(range(10, 20))

    def test_corrupt_helper(self):
        be = MockBackend("/m")
        be.create_and_write_file("/m/f", b"\x00\x01")
        be.corrupt_file("/m/f", 1)
        assert be.file_bytes("/m/f") == b"\x00\xfe"
