"""Command-line entry point.

Exit status: 0 success, 1 verification failure or law violation, 2 usage or
input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from . import laws, netsim, notice
from .ledger import MalformedChain, MalformedToken, dumps_record, load_chain
from .transactions import request_to_record

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _parse_bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _write_records(path: Optional[str], records: list[dict]) -> None:
    if not path:
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")


def cmd_generate(args) -> int:
    config, schedule = netsim.generate(args.seed, args.max_ops)
    with open(args.config_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(config.to_record(), sort_keys=True, indent=2) + "\n")
    _write_records(args.schedule_out, [{"tick": t, **request_to_record(r)} for t, r in schedule])
    print(f"wrote config ({len(config.agents)} agents, {len(config.nodes)} nodes) "
          f"and {len(schedule)} requests")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = netsim.load_config(args.config)
    if args.seed is not None:
        config = netsim.Config.from_record({**config.to_record(), "seed": args.seed})
    schedule = netsim.load_schedule(args.schedule)
    trace = netsim.simulate(config, schedule, args.ticks)
    if args.out:
        netsim.save_trace(trace, args.out)
    kinds: dict[str, int] = {}
    for e in trace.events:
        kinds[e.kind] = kinds.get(e.kind, 0) + 1
    print(f"simulated {trace.sim.tick} ticks, chain height {trace.chain.height}")
    for kind in sorted(kinds):
        print(f"  {kind}: {kinds[kind]}")
    print(f"digest {trace.digest()}")
    return EXIT_OK


def cmd_verify(args) -> int:
    stored = netsim.load_trace(args.trace)
    trace = netsim.replay(stored)
    lines = []
    replayed = [e.to_record() for e in trace.events]
    recorded = [e.to_record() for e in stored.events]
    if replayed != recorded:
        first = next((i for i, (a, b) in enumerate(zip(replayed, recorded)) if a != b),
                     min(len(replayed), len(recorded)))
        lines.append(f"replay diverges from the recorded trace at event {first}")
    if list(trace.chain.blocks) != stored.blocks:
        lines.append("replayed chain differs from the recorded chain")
    report = netsim.verify_theorem1(trace)
    lines += report.lines
    ok = not lines
    for line in lines:
        print(line)
    print(f"ownership and certification {'hold' if ok else 'FAIL'} on {args.trace} "
          f"({trace.chain.height} blocks, {len(trace.sim.all_agents)} agents)")
    _write_records(args.out, [{"record": "verify", "ok": ok, "problems": lines,
                               "missing": [list(m) for m in report.missing]}])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_check_laws(args) -> int:
    chain = load_chain(args.chainfile)
    history = laws.History.from_chain(chain)
    records = []
    failed = False
    for report in laws.check_all(history):
        for line in report.lines():
            print(line)
        failed |= not report.holds
        records.append({"record": "law", "law": report.law, "holds": report.holds,
                        "violations": [[t, d] for t, d in report.violations]})
        status = "ok" if report.holds else f"{len(report.violations)} violation(s)"
        print(f"law {report.law} ({laws.LAW_NAMES[report.law]}): {status}")
    _write_records(args.out, records)
    return EXIT_FAIL if failed else EXIT_OK


def _profile_record(method: notice.Method, profile: notice.PropertyProfile) -> dict:
    return {"record": "profile", "method": method.value, "a": profile.a, "b": profile.b,
            "c": profile.c, "d": profile.d, "warnings": list(profile.warnings)}


def cmd_serve_notice(args) -> int:
    method = notice.Method(args.method)
    scenario = notice.NoticeScenario(method, email_delivered=args.email_delivered)
    profile = notice.evaluate_properties(notice.serve(scenario))
    print(notice.format_profile(method, profile))
    _write_records(args.out, [_profile_record(method, profile)])
    return EXIT_OK


def cmd_notice_table(args) -> int:
    table = notice.method_table()
    print(notice.format_table(table))
    _write_records(args.out, [_profile_record(m, p) for m, p in table.items()])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nftsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a schedule and write a trace")
    p.add_argument("--config", required=True)
    p.add_argument("--schedule", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--ticks", type=int, help="run exactly this many ticks")
    p.add_argument("--out", help="trace file to write")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="replay a trace and check ownership laws and token certification")
    p.add_argument("--trace", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("check-laws", help="check the six ownership laws on a chain file")
    p.add_argument("chainfile")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_laws)

    p = sub.add_parser("serve-notice", help="serve notice by one method and print its profile")
    p.add_argument("--method", required=True, choices=[m.value for m in notice.Method])
    p.add_argument("--email-delivered", type=_parse_bool, nargs="?", const=True, default=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_serve_notice)

    p = sub.add_parser("notice-table", help="print the method/property table")
    p.add_argument("--out")
    p.set_defaults(func=cmd_notice_table)

    p = sub.add_parser("generate", help="write a random config and schedule")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-ops", type=int, default=100)
    p.add_argument("--config-out", required=True)
    p.add_argument("--schedule-out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (OSError, netsim.BadConfig, netsim.BadSchedule, MalformedChain, MalformedToken,
            notice.BadScenario, ValueError) as exc:
        print(f"nftsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
