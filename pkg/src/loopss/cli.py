"""Command-line front end: a thin client over the same operations the
HTTP service exposes.

By default everything runs in-process; with ``--server URL`` the command
is forwarded to a running service instead.  Exit codes: 0 success, 2
scenario/input error, 3 internal consistency failure (``audit`` uses 1
for "discrepancies found").
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from .errors import ConsistencyError, ScenarioError
from .report import (
    AuditOutcome,
    audit_outcome,
    build_report,
    render_page,
    report_from_json,
    report_to_json,
)
from .scenarios import parse_scenario, run_bundle

EXIT_OK = 0
EXIT_DISCREPANCIES = 1
EXIT_SCENARIO = 2
EXIT_INTERNAL = 3


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(f"{path.name}.tmp.{os.getpid()}")
    tmp.write_text(text)
    os.replace(tmp, path)


def _worker_count(n_jobs: int) -> int:
    env = os.environ.get("LOOPSS_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ScenarioError(f"LOOPSS_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise ScenarioError("LOOPSS_THREADS must be at least 1")
        return min(cap, n_jobs)
    return min(4, n_jobs)


def _http_error_code(payload) -> int:
    detail = payload.get("detail") if isinstance(payload, dict) else None
    if isinstance(detail, dict) and detail.get("kind") == "consistency":
        return EXIT_INTERNAL
    return EXIT_SCENARIO


def _post(server: str, endpoint: str, body: dict):
    import httpx

    response = httpx.post(server.rstrip("/") + endpoint, json=body, timeout=600.0)
    if response.status_code != 200:
        try:
            payload = response.json()
        except json.JSONDecodeError:
            payload = {"detail": {"message": response.text}}
        detail = payload.get("detail", payload)
        message = detail.get("message", str(detail)) if isinstance(detail, dict) else str(detail)
        raise _HttpFailure(_http_error_code(payload), message)
    return response.json()


class _HttpFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _run_one(path: str, pages: Optional[int], server: Optional[str]) -> tuple[int, Optional[str], str]:
    """Returns (exit code, report text or None, diagnostic)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        return EXIT_SCENARIO, None, f"{path}: {exc}"
    if server:
        try:
            payload = _post(server, "/run", {"scenario": json.loads(text), "max_page": pages})
        except json.JSONDecodeError as exc:
            return EXIT_SCENARIO, None, f"{path}: not valid JSON: {exc}"
        except _HttpFailure as exc:
            return exc.code, None, f"{path}: {exc}"
        return EXIT_OK, json.dumps(payload, indent=2) + "\n", ""
    try:
        bundle = parse_scenario(text)
        result = run_bundle(bundle, max_page=pages)
        return EXIT_OK, report_to_json(build_report(result)), ""
    except ScenarioError as exc:
        return EXIT_SCENARIO, None, f"{path}: {exc}"
    except ConsistencyError as exc:
        return EXIT_INTERNAL, None, f"{path}: {exc}"


def _cmd_run(args) -> int:
    paths = args.scenarios
    if len(paths) > 1 and not args.out_dir:
        print("run: multiple scenario files need --out-dir", file=sys.stderr)
        return EXIT_SCENARIO
    if args.out and args.out_dir:
        print("run: use either --out or --out-dir, not both", file=sys.stderr)
        return EXIT_SCENARIO
    workers = _worker_count(len(paths))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda p: _run_one(p, args.pages, args.server), paths))
    else:
        results = [_run_one(p, args.pages, args.server) for p in paths]
    worst = EXIT_OK
    for path, (code, text, diagnostic) in zip(paths, results):
        if code != EXIT_OK:
            print(diagnostic, file=sys.stderr)
            worst = max(worst, code)
            continue
        if args.out_dir:
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            _atomic_write(out_dir / (Path(path).stem + ".report.json"), text)
        elif args.out:
            _atomic_write(Path(args.out), text)
        else:
            sys.stdout.write(text)
    return worst


def _cmd_render(args) -> int:
    try:
        text = Path(args.report).read_text()
    except OSError as exc:
        print(f"{args.report}: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        if args.server:
            payload = _post(args.server, "/render", {
                "report": json.loads(text), "page": args.page, "format": args.format})
            rendered = payload["text"]
        else:
            rendered = render_page(report_from_json(text), args.page, args.format)
    except (ScenarioError, json.JSONDecodeError) as exc:
        print(f"render: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except _HttpFailure as exc:
        print(f"render: {exc}", file=sys.stderr)
        return exc.code
    if args.out:
        _atomic_write(Path(args.out), rendered)
    else:
        sys.stdout.write(rendered)
    return EXIT_OK


def _print_audit(outcome: AuditOutcome) -> None:
    degrees = outcome.checked_degrees
    span = f"{degrees[0]}..{degrees[-1]}" if degrees else "none"
    if outcome.consistent:
        print(f"audit: consistent with the target on reliable total degrees {span}")
        return
    print(f"audit: {len(outcome.discrepancies)} discrepancies on reliable total degrees {span}")
    for disc in outcome.discrepancies:
        print(f"  total degree {disc.total_degree} [{disc.mode}]: expected "
              f"rank {disc.expected.free_rank} torsion {disc.expected.torsion}, found "
              f"rank {disc.found.free_rank} torsion {disc.found.torsion}")
        for survivor in disc.survivors:
            reps = ", ".join(survivor.representatives)
            print(f"    survivor at ({survivor.p},{survivor.q}): {reps}")
    if outcome.survivor_details:
        print("annihilator candidates for contradicting survivors:")
        for detail in outcome.survivor_details:
            print(f"  ({detail.p},{detail.q}) {detail.representative}:")
            if not detail.candidates:
                print("    none in window (class is permanent)")
            for cand in detail.candidates:
                arrow = "from" if cand.direction == "in" else "to"
                basis = ", ".join(cand.partner_basis)
                print(f"    d_{cand.page} {arrow} ({cand.p},{cand.q}) [{cand.direction}]: {basis}")


def _cmd_audit(args) -> int:
    try:
        text = Path(args.scenario).read_text()
    except OSError as exc:
        print(f"{args.scenario}: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        if args.server:
            payload = _post(args.server, "/audit", {"scenario": json.loads(text)})
            outcome = AuditOutcome.model_validate(payload)
        else:
            result = run_bundle(parse_scenario(text))
            outcome = audit_outcome(result)
    except (ScenarioError, json.JSONDecodeError) as exc:
        print(f"audit: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except ConsistencyError as exc:
        print(f"audit: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except _HttpFailure as exc:
        print(f"audit: {exc}", file=sys.stderr)
        return exc.code
    _print_audit(outcome)
    return EXIT_OK if outcome.consistent else EXIT_DISCREPANCIES


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loopss",
        description="Exact spectral sequence runs for fibration scenarios",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run scenario files and write reports")
    run_p.add_argument("scenarios", nargs="+", help="scenario JSON files")
    run_p.add_argument("--pages", type=int, default=None,
                       help="stop after this page index")
    run_p.add_argument("--out", default=None, help="report path (single scenario)")
    run_p.add_argument("--out-dir", default=None, help="directory for one report per scenario")
    run_p.add_argument("--server", default=None, help="forward to a running service URL")
    run_p.set_defaults(func=_cmd_run)

    render_p = sub.add_parser("render", help="render a page of a report")
    render_p.add_argument("report", help="report JSON file")
    render_p.add_argument("--page", type=int, default=None, help="page index")
    render_p.add_argument("--format", choices=("ascii", "latex", "json"), default="ascii")
    render_p.add_argument("--out", default=None)
    render_p.add_argument("--server", default=None)
    render_p.set_defaults(func=_cmd_render)

    audit_p = sub.add_parser("audit", help="check a scenario against its target")
    audit_p.add_argument("scenario", help="scenario JSON file")
    audit_p.add_argument("--server", default=None)
    audit_p.set_defaults(func=_cmd_audit)

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8350)
    serve_p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
