"""Command-line front end: ``analyze``, ``stream`` and ``synth``.

Exit codes: 0 success, 1 input or usage error, 2 internal-consistency error.
"""

import argparse
import json
import logging
import sys

from .errors import ConsistencyError, OxiApneaError, ParseError
from .events import DetectorConfig
from .ingest import RolloverClock, _parse_float, _parse_time, parse_records
from .pipeline import AnalysisConfig, analyze
from .preprocess import PreprocessConfig
from .rates import DEFAULT_WINDOW_S
from .report import dumps, serialize
from .rlm import DEFAULT_RLM_LIMIT
from .stream import BlockReplayer, StreamEngine
from .synth import ScenarioSpec, generate, parse_dropout_spec, parse_event_spec

logger = logging.getLogger("oxiapnea")

FORMAT_NAMES = {"json": "json", "csv": "events-csv", "summary": "summary-text"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _analysis_flags():
    p = argparse.ArgumentParser(add_help=False)
    pp, det = PreprocessConfig(), DetectorConfig()
    g = p.add_argument_group("preprocessing")
    g.add_argument("--rate-hz", type=float, default=1.0, help="input sampling rate (default 1.0)")
    g.add_argument("--valid-low", type=float, default=pp.valid_low)
    g.add_argument("--valid-high", type=float, default=pp.valid_high)
    g.add_argument("--max-gap-s", type=float, default=pp.max_gap_s)
    g.add_argument("--median-width", type=int, default=pp.median_width, help="odd width, 0 disables")
    g.add_argument("--downsample", type=int, default=pp.downsample_factor)
    g = p.add_argument_group("detection")
    g.add_argument("--kernel", type=int, choices=(2, 3), default=2)
    g.add_argument("--drop-threshold", type=float, default=det.drop_threshold_pct)
    g.add_argument("--time-window", type=float, default=det.time_window_s)
    g.add_argument("--rlm-limit", type=int, default=DEFAULT_RLM_LIMIT)
    g.add_argument("--rate-window-s", type=float, default=DEFAULT_WINDOW_S)
    g.add_argument("--odi", type=float, action="append", help="ODI drop threshold (repeatable)")
    g.add_argument("--tsa", type=float, action="append", help="TSA level (repeatable)")
    g = p.add_argument_group("output")
    g.add_argument("--output", "-o", help="report path (default: stdout)")
    g.add_argument("--format", choices=sorted(FORMAT_NAMES), default="json")
    g.add_argument("--emit-runs", action="store_true", help="include the full run list")
    g.add_argument("--time-style", choices=("auto", "relative", "clock"), default="auto")
    return p


def build_parser():
    parser = _Parser(prog="oxiapnea", description="SpO2 desaturation event detection and OSAHS severity")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    shared = _analysis_flags()

    a = sub.add_parser("analyze", parents=[shared], help="batch analysis of a recording")
    a.add_argument("--input", "-i", required=True, help="CSV (timestamp,spo2) or bare file; '-' for stdin")
    a.add_argument("--layout", choices=("csv", "bare"), default="csv")

    s = sub.add_parser("stream", parents=[shared], help="online analysis of 'timestamp,value' lines")
    s.add_argument("--input", "-i", default="-", help="default: stdin")
    s.add_argument("--block-replay", action="store_true",
                   help="rerun the batch pipeline on overlapping rate-window blocks")

    y = sub.add_parser("synth", help="write a synthetic scenario CSV and its labels")
    y.add_argument("--output", "-o", required=True, help="CSV path")
    y.add_argument("--labels", help="labels JSON path (default: <output>.labels.json)")
    y.add_argument("--seed", type=int, default=0)
    y.add_argument("--duration", type=float, default=3600.0)
    y.add_argument("--events", default="", help="onset:fall:depth:recovery[,...] in s / points")
    y.add_argument("--dropouts", default="", help="onset:length[,...] in s")
    y.add_argument("--baseline", type=float, default=96.0)
    y.add_argument("--noise-sd", type=float, default=0.15)
    y.add_argument("--rate-hz", type=float, default=1.0)
    return parser


def config_from_args(args) -> AnalysisConfig:
    det_defaults = DetectorConfig()
    return AnalysisConfig(
        preprocess=PreprocessConfig(args.valid_low, args.valid_high, args.max_gap_s,
                                    args.median_width, args.downsample),
        detector=DetectorConfig(
            args.drop_threshold, args.time_window,
            tuple(args.odi) if args.odi else det_defaults.odi_thresholds_pct,
            tuple(args.tsa) if args.tsa else det_defaults.tsa_levels_pct,
        ),
        kernel_width=args.kernel,
        rlm_limit=args.rlm_limit,
        window_s=args.rate_window_s,
    )


def _open_in(path):
    return sys.stdin if path == "-" else open(path, encoding="utf-8")


def _write(path, data: bytes):
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def cmd_analyze(args):
    config = config_from_args(args)
    fh = _open_in(args.input)
    try:
        batch = parse_records(fh, layout=args.layout, time_style=args.time_style, rate_hz=args.rate_hz)
    finally:
        if fh is not sys.stdin:
            fh.close()
    report = analyze(batch, config, emit_runs=args.emit_runs)
    _write(args.output, serialize(report, FORMAT_NAMES[args.format]))
    logger.info("%d events, max rate %d/h, severity %s",
                len(report.events), report.rates.max_rate_per_hour, report.severity.value)
    return 0


def iter_stream_lines(lines, time_style="auto", rate_hz=1.0):
    """Yield ``(relative_seconds, value)`` from ``t,value`` or bare-value lines.

    A non-numeric first line is taken as a header and skipped.
    """
    clock = RolloverClock()
    count = 0
    first = True
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        try:
            if len(fields) == 1:
                t, v = count / rate_hz, _parse_float(fields[0])
            elif len(fields) == 2:
                t, v = _parse_time(fields[0], time_style), _parse_float(fields[1])
            else:
                raise ValueError(f"expected 1 or 2 fields, got {len(fields)}")
        except ValueError as exc:
            if first:
                first = False
                continue
            raise ParseError(str(exc), lineno) from None
        first = False
        count += 1
        yield clock(t), v


def cmd_stream(args):
    config = config_from_args(args)
    if args.block_replay:
        engine = BlockReplayer(config, args.rate_hz, emit_runs=args.emit_runs)
    else:
        engine = StreamEngine(config, args.rate_hz, emit_runs=args.emit_runs)
    out = sys.stdout
    fh = _open_in(args.input)
    try:
        for t, v in iter_stream_lines(fh, args.time_style, args.rate_hz):
            for em in engine.push(t, v):
                out.write(dumps(em.to_dict(), indent=None) + "\n")
            out.flush()
    finally:
        if fh is not sys.stdin:
            fh.close()
    report = engine.finalize()
    for em in getattr(engine, "final_emissions", []):
        out.write(dumps(em.to_dict(), indent=None) + "\n")
    out.flush()
    _write(args.output, serialize(report, FORMAT_NAMES[args.format]))
    return 0


def cmd_synth(args):
    spec = ScenarioSpec(
        duration_s=args.duration,
        baseline_pct=args.baseline,
        noise_sd_pct=args.noise_sd,
        events=parse_event_spec(args.events),
        dropout_runs=parse_dropout_spec(args.dropouts),
        seed=args.seed,
        sample_rate_hz=args.rate_hz,
    )
    batch, labels = generate(spec)
    rows = ["timestamp,spo2"] + [f"{t:.3f},{v:.3f}" for t, v in zip(batch.timestamps, batch.values)]
    _write(args.output, ("\n".join(rows) + "\n").encode("utf-8"))
    labels_path = args.labels or f"{args.output}.labels.json"
    payload = {"seed": spec.seed, "duration_s": spec.duration_s, "events": [lb.to_dict() for lb in labels]}
    with open(labels_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return 0


COMMANDS = {"analyze": cmd_analyze, "stream": cmd_stream, "synth": cmd_synth}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConsistencyError as exc:
        logger.error("internal consistency error: %s", exc)
        return 2
    except (OxiApneaError, ValueError, OSError) as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
