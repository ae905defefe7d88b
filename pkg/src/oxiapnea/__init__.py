"""Oximetry-based detection of sleep apnea/hypopnea desaturation events.

Quick start::

    from oxiapnea import read_records, analyze
    report = analyze(read_records("night.csv"))
    print(report.severity)
"""

__version__ = "0.1.0"

from .errors import (ConsistencyError, FlatSignalError, GapError, InputError,  # noqa: E402
                     InsufficientDataError, OxiApneaError, ParseError, TimeAxisError)
from .events import ApneaEvent, DetectorConfig, SecondaryIndices, detect_events  # noqa: E402
from .gradient import State, backpatch, state_series  # noqa: E402
from .ingest import RawRecord, RecordBatch, normalize_time, parse_records, read_records  # noqa: E402
from .pipeline import AnalysisConfig, analyze, run_pipeline  # noqa: E402
from .preprocess import PreprocessConfig, Signal, preprocess  # noqa: E402
from .rates import RateAnalysis, Severity, max_rate, severity  # noqa: E402
from .report import Report, serialize  # noqa: E402
from .rlm import Run, RunLengthMatrix, build_rlm, enumerate_runs  # noqa: E402
from .stream import Emission, StreamEngine  # noqa: E402
from .estimator import GradientSignTransformer, OSAHSDetector, SpO2Preprocessor  # noqa: E402

__all__ = [
    "AnalysisConfig", "ApneaEvent", "ConsistencyError", "DetectorConfig", "Emission",
    "FlatSignalError", "GapError", "GradientSignTransformer", "InputError", "InsufficientDataError",
    "OSAHSDetector", "OxiApneaError", "ParseError", "PreprocessConfig", "RateAnalysis", "RawRecord",
    "RecordBatch", "Report", "Run", "RunLengthMatrix", "SecondaryIndices", "Severity", "Signal",
    "SpO2Preprocessor", "State", "StreamEngine", "TimeAxisError", "analyze", "backpatch", "build_rlm",
    "detect_events", "enumerate_runs", "max_rate", "normalize_time", "parse_records", "preprocess",
    "read_records", "run_pipeline", "serialize", "severity", "state_series",
]
