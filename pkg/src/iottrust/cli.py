"""``tms`` command line: run, query, validate and sort event streams.

Exit codes: 0 success, 1 validation found problems, 2 bad input,
3 replay failure, 4 output I/O failure. ``TMS_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

from .aggregation import TrustReport
from .engine import (
    Engine,
    EventKind,
    iter_event_lines,
    load_scenario,
    read_events,
    sort_events,
    write_events,
)
from .errors import EventParseError, ReplayError, TmsError, UnknownDevice, UnknownUser
from .feed import feed_index, load_feed

log = logging.getLogger("iottrust")

EXIT_OK, EXIT_INVALID, EXIT_INPUT, EXIT_REPLAY, EXIT_IO = 0, 1, 2, 3, 4

CSV_COLUMNS = (
    "ts", "device", "evaluator", "sbt", "bbt", "abt", "lta", "ut", "ts_score",
    "sbt_i", "sbt_v", "bbt_c", "bbt_n", "bbt_m", "sra_n", "accen",
)


class InputError(Exception):
    pass


def csv_row(r: TrustReport) -> list[str]:
    scores = (r.sbt, r.bbt, r.abt, r.lta, r.ut, r.ts,
              r.sbt_i, r.sbt_v, r.bbt_c, r.bbt_n, r.bbt_m, r.sra_n, r.accen)
    return [str(r.at), r.device, r.evaluator_owner, *(f"{x:.6f}" for x in scores)]


def _load_inputs(scenario: str, events: str | None, feed: str | None):
    for label, path in (("scenario", scenario), ("events", events), ("feed", feed)):
        if path is not None and not Path(path).is_file():
            raise InputError(f"{label} file not found: {path}")
    try:
        index = feed_index(load_feed(feed)) if feed else {}
        engine = Engine(load_scenario(scenario), index)
        stream = read_events(events) if events else []
    except (TmsError, OSError, UnicodeDecodeError) as exc:
        raise InputError(str(exc)) from None
    return engine, stream


def cmd_run(args: argparse.Namespace) -> int:
    try:
        engine, events = _load_inputs(args.scenario, args.events, args.feed)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    registered_later = any(
        e.kind is EventKind.USER_REGISTERED and e.payload.get("user") == args.evaluator
        for e in events
    )
    if args.evaluator not in engine.state.users.users and not registered_later:
        print(f"error: unknown evaluator {args.evaluator!r}", file=sys.stderr)
        return EXIT_INPUT

    out = Path(args.out)
    try:
        fd, tmp = tempfile.mkstemp(prefix=".tms-", dir=out.parent if str(out.parent) else ".")
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    rows = 0
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            reports = engine.iter_reports(events, args.evaluator, args.sample_every)
            if args.format == "csv":
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(CSV_COLUMNS)
                for r in reports:
                    writer.writerow(csv_row(r))
                    rows += 1
            else:
                for r in reports:
                    fh.write(json.dumps(r.to_dict()) + "\n")
                    rows += 1
        os.replace(tmp, out)
    except ReplayError as exc:
        print(f"error: replay failed at {exc}", file=sys.stderr)
        os.unlink(tmp)
        return EXIT_REPLAY
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        if os.path.exists(tmp):
            os.unlink(tmp)
        return EXIT_IO
    log.info("wrote %d rows to %s", rows, out)
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    try:
        engine, events = _load_inputs(args.scenario, args.events, args.feed)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        engine.replay(e for e in events if e.ts <= args.at)
        engine.advance_to(args.at)
        report = engine.report(args.device, args.evaluator)
    except (UnknownDevice, UnknownUser) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ReplayError, TmsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REPLAY
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def validate(scenario: str, events: str) -> list[str]:
    """Every problem found in the inputs, one human-readable line each."""
    problems: list[str] = []
    engine = None
    try:
        engine = Engine(load_scenario(scenario))
    except (TmsError, OSError, UnicodeDecodeError) as exc:
        problems.append(f"scenario: {exc}")
    try:
        with open(events, encoding="utf-8") as fh:
            for item in iter_event_lines(fh):
                if isinstance(item, EventParseError):
                    problems.append(str(item))
                    continue
                if engine is None:
                    continue
                try:
                    engine.apply(item)
                except TmsError as exc:
                    problems.append(f"line {item.line}: {type(exc).__name__}: {exc}")
    except (OSError, UnicodeDecodeError) as exc:
        problems.append(f"events: {exc}")
    return problems


def cmd_validate(args: argparse.Namespace) -> int:
    problems = validate(args.scenario, args.events)
    for p in problems:
        print(p)
    print(f"{len(problems)} errors")
    return EXIT_OK if not problems else EXIT_INVALID


def cmd_sort(args: argparse.Namespace) -> int:
    try:
        events = read_events(args.events)
    except (TmsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        write_events(sort_events(events), args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tms", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="replay events and write a trust time series")
    run.add_argument("--scenario", required=True)
    run.add_argument("--events", required=True)
    run.add_argument("--evaluator", required=True, help="user id of the evaluating TMS owner")
    run.add_argument("--out", required=True)
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    run.add_argument("--sample-every", type=_positive_int, default=None, metavar="MS",
                     help="sample on a fixed grid of MS milliseconds (default: after every event)")
    run.add_argument("--feed", help="CVE feed used to resolve vulnerabilities named only by id")
    run.set_defaults(func=cmd_run)

    query = sub.add_parser("query", help="trust report for one device at a point in time")
    query.add_argument("--scenario", required=True)
    query.add_argument("--events", required=True)
    query.add_argument("--device", required=True)
    query.add_argument("--evaluator", required=True)
    query.add_argument("--at", type=int, required=True, help="timestamp in ms")
    query.add_argument("--feed")
    query.set_defaults(func=cmd_query)

    val = sub.add_parser("validate", help="check scenario and event stream")
    val.add_argument("--scenario", required=True)
    val.add_argument("--events", required=True)
    val.set_defaults(func=cmd_validate)

    srt = sub.add_parser("sort", help="stable-sort an event stream by (ts, seq)")
    srt.add_argument("--events", required=True)
    srt.add_argument("--out", required=True)
    srt.set_defaults(func=cmd_sort)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("TMS_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
