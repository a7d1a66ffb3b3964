"""Command-line entry point.

Exit codes: 0 success / all queries hold, 1 some query fails, 2 parse error,
3 validation error, 4 pattern precondition, 5 state-limit exceeded, 6 port
unavailable.  Data goes to stdout, diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import os
import pathlib
import sys
from dataclasses import replace
from typing import Optional

from . import engine, text, verifier
from .model import Model, validate_model
from .patterns import PatternError, apply_pattern
from .text import ParseError

EXIT_OK = 0
EXIT_QUERY_FAILED = 1
EXIT_PARSE = 2
EXIT_VALIDATE = 3
EXIT_PATTERN = 4
EXIT_RESOURCE = 5
EXIT_PORT = 6

CONFIG_NAME = "statepat.toml"


def load_config(path: Optional[pathlib.Path] = None) -> dict:
    """Flat `key = value` subset of TOML: ints, bools, quoted/bare strings."""
    path = path or pathlib.Path.cwd() / CONFIG_NAME
    config: dict = {}
    if not path.exists():
        return config
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or "=" not in line:
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if value.startswith(('"', "'")):
            config[key] = value[1:-1]
        elif value in ("true", "false"):
            config[key] = value == "true"
        else:
            try:
                config[key] = int(value)
            except ValueError:
                config[key] = value
    return config


def default_state_limit(config: dict) -> int:
    env = os.environ.get("STATEPAT_STATE_LIMIT")
    if env is not None:
        return int(env)
    return int(config.get("limit", verifier.DEFAULT_STATE_LIMIT))


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_model(path: str) -> Model:
    return text.parse_model(pathlib.Path(path).read_text())


def _prepare_model(args, source: Model) -> Model:
    model = source
    if getattr(args, "order", None):
        order = tuple(int(p) for p in args.order.split(","))
        model = replace(model, interface=replace(model.interface, exe_orders=order))
    if getattr(args, "pattern", None):
        model = apply_pattern(model, args.pattern)
    diags = validate_model(model)
    if diags:
        raise PatternError("transformed model failed validation: " + "; ".join(map(str, diags)))
    return model


def cmd_check(args, config) -> int:
    try:
        model = _load_model(args.model)
    except ParseError as exc:
        return _fail(EXIT_PARSE, str(exc))
    diags = validate_model(model)
    for d in diags:
        print(str(d), file=sys.stderr)
    if diags:
        return EXIT_VALIDATE
    print(f"{args.model}: ok ({len(model.charts)} charts, {len(model.interface.events)} events)")
    return EXIT_OK


def cmd_transform(args, config) -> int:
    try:
        source = _load_model(args.model)
        diags = validate_model(source)
        if diags:
            for d in diags:
                print(str(d), file=sys.stderr)
            return EXIT_VALIDATE
        model = _prepare_model(args, source)
    except ParseError as exc:
        return _fail(EXIT_PARSE, str(exc))
    except PatternError as exc:
        return _fail(EXIT_PATTERN, str(exc))
    out_path = pathlib.Path(args.out) if args.out else pathlib.Path(args.model).with_suffix(f".{args.pattern}.scm")
    rendered = text.serialize_model(model)
    out_path.write_text(rendered)
    guards = sum(
        1
        for c in model.user_charts
        for t in c.transitions
        if t.guard is not None
    )
    pushes = rendered.count("TWC.push(")
    print(f"wrote {out_path}")
    print(f"pattern={args.pattern} charts={len(model.charts)} rewritten_guards={guards} queue_pushes={pushes}")
    if model.interface.exe_orders:
        print("order=" + ",".join(map(str, model.interface.exe_orders)))
    return EXIT_OK


def cmd_verify(args, config) -> int:
    try:
        source = _load_model(args.model)
        diags = validate_model(source)
        if diags:
            for d in diags:
                print(str(d), file=sys.stderr)
            return EXIT_VALIDATE
        model = _prepare_model(args, source)
    except ParseError as exc:
        return _fail(EXIT_PARSE, str(exc))
    except PatternError as exc:
        return _fail(EXIT_PATTERN, str(exc))

    queries = []
    try:
        for spec_text in args.query or []:
            queries.append(text.parse_query(spec_text))
        if args.queries:
            queries.extend(text.parse_query_file(pathlib.Path(args.queries).read_text()))
    except ParseError as exc:
        return _fail(EXIT_PARSE, f"bad query: {exc}")
    if not queries:
        print("warning: no queries given", file=sys.stderr)
        return EXIT_OK

    policy = args.env or config.get("env", "one-or-none")
    limit = args.limit if args.limit is not None else default_state_limit(config)
    trace_dir = args.trace_dir or config.get("trace_dir")
    cm = engine.compile_model(model)
    any_failed = False
    for i, query in enumerate(queries):
        try:
            result = verifier.check_query(cm, query, policy=policy, limit=limit)
        except verifier.QueryError as exc:
            return _fail(EXIT_PARSE, str(exc))
        except verifier.ResourceLimitError as exc:
            return _fail(EXIT_RESOURCE, str(exc))
        verdict = "HOLDS" if result.holds else "FAILS"
        any_failed = any_failed or not result.holds
        print(f"{query.text} : {verdict} states={result.states} trace_len={result.trace_len}")
        if result.trace is not None and trace_dir:
            directory = pathlib.Path(trace_dir)
            directory.mkdir(parents=True, exist_ok=True)
            steps = verifier.replay_step_traces(cm, result.trace)
            (directory / f"query{i}.trace").write_text(engine.format_trace(cm, steps))
    return EXIT_QUERY_FAILED if any_failed else EXIT_OK


SIM_HELP = "commands: step [k] | raise <event> | state | vars | queue | quit"


def _sim_exec(session: engine.Session, cm, command: str, out, collected) -> bool:
    """Returns False when the session should end."""
    parts = command.split()
    if not parts:
        return True
    op, rest = parts[0], parts[1:]
    if op == "quit":
        return False
    if op == "step":
        count = int(rest[0]) if rest else 1
        collected.extend(session.step(count))
        print(f"clock={session.state.clock}", file=out)
    elif op == "raise":
        if not rest:
            print("error: raise needs an event name", file=out)
            return True
        try:
            session.inject(rest[0])
            print(f"queued {rest[0]}", file=out)
        except engine.EngineError as exc:
            print(f"error: {exc}", file=out)
    elif op == "state":
        described = cm.describe(session.state)
        print(" ".join(f"{c}={s}" for c, s in described["active"].items()), file=out)
    elif op == "vars":
        described = cm.describe(session.state)
        print(" ".join(f"{n}={v}" for n, v in described["vars"].items()), file=out)
    elif op == "queue":
        described = cm.describe(session.state)
        entries = ",".join(f"{e['event']}<-{e['sender']}" for e in described["queue"])
        token = described["token"]
        print(f"queue=[{entries}] cycle={described['cycle_counter']} token={token}", file=out)
    else:
        print(f"unknown command {op!r}; {SIM_HELP}", file=out)
    return True


def cmd_simulate(args, config) -> int:
    try:
        source = _load_model(args.model)
        diags = validate_model(source)
        if diags:
            for d in diags:
                print(str(d), file=sys.stderr)
            return EXIT_VALIDATE
        model = _prepare_model(args, source)
    except ParseError as exc:
        return _fail(EXIT_PARSE, str(exc))
    except PatternError as exc:
        return _fail(EXIT_PATTERN, str(exc))
    cm = engine.compile_model(model)
    session = engine.Session(model)
    collected: list[engine.StepTrace] = []

    if args.script:
        script = pathlib.Path(args.script).read_text()
        commands = [c.strip() for chunk in script.splitlines() for c in chunk.split(";")]
        for command in commands:
            if command and not command.startswith("#"):
                if not _sim_exec(session, cm, command, sys.stderr, collected):
                    break
        dump = engine.format_trace(cm, collected)
        if args.out:
            pathlib.Path(args.out).write_text(dump)
        else:
            sys.stdout.write(dump)
        return EXIT_OK

    print(SIM_HELP, file=sys.stderr)
    while True:
        try:
            line = input("statepat> ")
        except EOFError:
            break
        if not _sim_exec(session, cm, line.strip(), sys.stdout, collected):
            break
    return EXIT_OK


def cmd_serve(args, config) -> int:
    import errno

    import uvicorn

    from .service import create_app

    model_text = None
    if args.model:
        try:
            source = _load_model(args.model)
            diags = validate_model(source)
            if diags:
                for d in diags:
                    print(str(d), file=sys.stderr)
                return EXIT_VALIDATE
            model_text = text.serialize_model(source)
        except ParseError as exc:
            return _fail(EXIT_PARSE, str(exc))
    port = args.port if args.port is not None else int(config.get("port", 8080))
    if not (0 < port < 65536):
        return _fail(EXIT_PORT, f"invalid port {port}")
    ui_dir = pathlib.Path.cwd() / "frontend"
    app = create_app(
        default_model_text=model_text,
        state_limit=default_state_limit(config),
        ui_dir=str(ui_dir) if (ui_dir / "index.html").exists() else None,
    )
    try:
        uvicorn.run(app, host=args.host, port=port, log_level="warning")
    except (SystemExit, OSError) as exc:
        if isinstance(exc, OSError) and exc.errno not in (errno.EADDRINUSE, errno.EACCES):
            raise
        return _fail(EXIT_PORT, f"cannot bind port {port}: {exc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="statepat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, pattern=True):
        if pattern:
            p.add_argument("--pattern", choices=("twc", "ceo", "both"))
            p.add_argument("--order", help="execution order as source-model chart IDs, e.g. 2,1")

    p = sub.add_parser("check", help="parse and validate a model file")
    p.add_argument("model")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("transform", help="apply a model pattern and write the result")
    p.add_argument("model")
    add_common(p)
    p.add_argument("--out", help="output path (default: <model>.<pattern>.scm)")
    p.set_defaults(fn=cmd_transform, pattern_required=True)

    p = sub.add_parser("verify", help="model-check TCTL-lite queries")
    p.add_argument("model")
    p.add_argument("query", nargs="*", help="inline formulas, e.g. 'A[] SpO >= 95'")
    add_common(p)
    p.add_argument("--queries", help="query file, one formula per line")
    p.add_argument("--env", choices=verifier.ENV_POLICIES)
    p.add_argument("--limit", type=int)
    p.add_argument("--trace-dir", dest="trace_dir")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", help="interactive or scripted simulation")
    p.add_argument("model")
    add_common(p)
    p.add_argument("--script", help="command file replayed instead of the REPL")
    p.add_argument("--out", help="write the script-mode trace dump here")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP simulation service")
    p.add_argument("model", nargs="?")
    p.add_argument("--port", type=int)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "pattern_required", False) and not args.pattern:
        return _fail(EXIT_PATTERN, "transform requires --pattern {twc|ceo|both}")
    if getattr(args, "order", None) and getattr(args, "pattern", None) not in ("ceo", "both"):
        return _fail(EXIT_PATTERN, "--order requires --pattern ceo or both")
    config = load_config()
    return args.fn(args, config)


if __name__ == "__main__":
    sys.exit(main())
