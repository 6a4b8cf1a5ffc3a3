"""Small-file metadata scalability benchmark harness."""

from .backends import BackendCapabilities, LatencyModel, MockBackend, RealBackend, StorageSnapshot
from .creator import CreatePhaseResult, run_create
from .metrics import (
    DerivedMetrics,
    LatencyHistogram,
    LatencyTracker,
    MetricsSink,
    PrimaryCells,
    compute_derived,
    derive,
    trend_series,
)
from .reader import ReadPhaseResult, run_read
from .storage import StorageDelta, capture_delta, expected_inodes
from .workload import (
    FileSizeDistribution,
    FramedFile,
    FrameStatus,
    RunSchedule,
    WorkloadRng,
    encode_trailer,
    generate_payload,
    plan_schedule,
    sample_file_size,
    verify_frame,
)

__version__ = "0.1.0"
