"""Batch pipeline: ingest -> preprocess -> gradient -> runs/RLM -> events -> rates -> report."""

from dataclasses import asdict, dataclass, field
from typing import List, NamedTuple

import numpy as np

from .events import ApneaEvent, DetectorConfig, SecondaryIndices, detect_events, secondary_indices
from .gradient import KERNEL_WIDTHS, gradient_states
from .ingest import RecordBatch, normalize_time
from .preprocess import PreprocessConfig, Signal, preprocess
from .rates import DEFAULT_WINDOW_S, RateAnalysis, max_rate
from .report import Report, SignalStats, build_report, make_meta, records_digest
from .rlm import DEFAULT_RLM_LIMIT, Run, RunLengthMatrix, build_rlm, enumerate_runs


@dataclass(frozen=True)
class AnalysisConfig:
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    kernel_width: int = 2
    rlm_limit: int = DEFAULT_RLM_LIMIT
    window_s: float = DEFAULT_WINDOW_S

    def __post_init__(self):
        if self.kernel_width not in KERNEL_WIDTHS:
            raise ValueError("kernel_width must be 2 or 3")
        if int(self.rlm_limit) != self.rlm_limit or self.rlm_limit < 1:
            raise ValueError("rlm_limit must be a positive integer")
        if not self.window_s > 0:
            raise ValueError("window_s must be positive")

    def to_dict(self):
        det = asdict(self.detector)
        det["odi_thresholds_pct"] = list(det["odi_thresholds_pct"])
        det["tsa_levels_pct"] = list(det["tsa_levels_pct"])
        return {
            "preprocess": asdict(self.preprocess),
            "detector": det,
            "kernel_width": self.kernel_width,
            "rlm_limit": self.rlm_limit,
            "window_s": float(self.window_s),
        }


class PipelineResult(NamedTuple):
    signal: Signal
    states: np.ndarray
    runs: List[Run]
    rlm: RunLengthMatrix
    events: List[ApneaEvent]
    indices: SecondaryIndices
    rates: RateAnalysis
    input_digest: str


def analyze_signal(signal: Signal, config: AnalysisConfig = AnalysisConfig()):
    """Stages 1-5 on an already clean signal."""
    states = gradient_states(signal.values, config.kernel_width)
    runs = enumerate_runs(states, signal.sample_rate_hz)
    rlm = build_rlm(runs, config.rlm_limit)
    events = detect_events(signal, runs, config.detector)
    indices = secondary_indices(signal, runs, config.detector)
    rates = max_rate(events, config.window_s, signal.duration_s)
    return states, runs, rlm, events, indices, rates


def run_pipeline(batch: RecordBatch, config: AnalysisConfig = AnalysisConfig()) -> PipelineResult:
    batch = normalize_time(batch)
    signal = preprocess(batch, config.preprocess)
    digest = records_digest(batch.timestamps, batch.values)
    return PipelineResult(signal, *analyze_signal(signal, config), digest)


def report_from_result(result: PipelineResult, config: AnalysisConfig, emit_runs=False) -> Report:
    return build_report(
        SignalStats.from_signal(result.signal),
        result.rlm,
        result.events,
        result.indices,
        result.rates,
        make_meta(config.to_dict(), result.input_digest),
        runs=result.runs,
        emit_runs=emit_runs,
    )


def analyze(batch: RecordBatch, config: AnalysisConfig = AnalysisConfig(), emit_runs=False) -> Report:
    """Full batch analysis of one recording."""
    return report_from_result(run_pipeline(batch, config), config, emit_runs)
