"""``ecmctl``: validate models, render content, trace programs, compile schemas.

Exit status: 0 success, 1 domain error (reported on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import amcm
from .content_model import ContentModelError
from .personalization import access_allowed, apply_functional, parse_context
from .schema import NotRepresentable, SchemaError, compile_all, emit_ddl
from .syntax import ParseError
from .template import (
    SuppressedObject, TemplateError, UnboundSlots, bind, parse_document, parse_model, render,
)

OK, DOMAIN_ERROR, USAGE_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _err(msg: str):
    print(msg, file=sys.stderr)


def _read(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        return p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _report_parse(path: str, exc: ParseError):
    for d in exc.diagnostics:
        _err(f"{path}:{d}")


def _load_model(path: str):
    text = _read(path)
    try:
        return parse_model(text)
    except ParseError as exc:
        _report_parse(path, exc)
        return None


def cmd_validate(model_path: str) -> int:
    model = _load_model(model_path)
    if model is None:
        return DOMAIN_ERROR
    print(
        f"{model_path}: {len(model.classes)} classes, {model.slot_count} slots, "
        f"{len(model.rules)} rules, {len(model.domains)} domains"
    )
    return OK


def cmd_render(model_path: str, content_dir: str, out_dir: str, context_path: str | None = None) -> int:
    cdir = Path(content_dir)
    if not cdir.is_dir():
        raise UsageError(f"no such directory: {content_dir}")
    ctx_text = _read(context_path) if context_path is not None else None
    model = _load_model(model_path)
    if model is None:
        return DOMAIN_ERROR
    ctx = None
    if ctx_text is not None:
        try:
            ctx = parse_context(ctx_text)
        except ParseError as exc:
            _report_parse(context_path, exc)
            return DOMAIN_ERROR
    odir = Path(out_dir)
    try:
        odir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out_dir}: {exc}") from None

    failed = False
    written: dict[str, Path] = {}
    for path in sorted(cdir.glob("*.ecd"), key=lambda p: p.name):
        label = str(path)
        try:
            doc = parse_document(path.read_text(encoding="utf-8"))
        except ParseError as exc:
            _report_parse(label, exc)
            failed = True
            continue
        try:
            d = bind(doc, model)
            if ctx is not None:
                if not access_allowed(ctx, model.cls(doc.class_name).min_status):
                    _err(f"{label}: skipped {doc.object_name}: requires "
                         f"{model.cls(doc.class_name).min_status.label}, context is {ctx.p.label}")
                    continue
                d = apply_functional(d, model.rules, ctx)
            page = render(d, model, doc.object_name)
        except SuppressedObject:
            _err(f"{label}: skipped {doc.object_name}: withheld by a personalization rule")
            continue
        except UnboundSlots as exc:
            _err(f"{label}: {doc.object_name} is not fully evaluated; unbound slots: {', '.join(exc.slots)}")
            failed = True
            continue
        except amcm.MachineError as exc:
            _err(f"{label}: {exc.render()}")
            failed = True
            continue
        except (TemplateError, ContentModelError) as exc:
            _err(f"{label}: {exc}")
            failed = True
            continue
        if page.name in written:
            _err(f"{label}: object {page.name} already rendered from {written[page.name]}")
            failed = True
            continue
        target = odir / f"{page.name}.html"
        try:
            target.write_text(page.markup, encoding="utf-8", newline="\n")
        except OSError as exc:
            raise UsageError(f"cannot write {target}: {exc}") from None
        written[page.name] = path
    return DOMAIN_ERROR if failed else OK


def cmd_trace(program_path: str, input_path: str | None = None) -> int:
    text = _read(program_path)
    input_text = _read(input_path) if input_path is not None else ""
    try:
        program = amcm.parse_program(text)
    except ParseError as exc:
        _report_parse(program_path, exc)
        return DOMAIN_ERROR
    try:
        inputs = amcm.parse_inputs(input_text)
    except ParseError as exc:
        _report_parse(input_path, exc)
        return DOMAIN_ERROR
    tr = amcm.trace(program, inputs)
    sys.stdout.write(tr.render())
    return DOMAIN_ERROR if tr.error is not None else OK


def cmd_schema(model_path: str, out_path: str) -> int:
    model = _load_model(model_path)
    if model is None:
        return DOMAIN_ERROR
    try:
        ddl = emit_ddl(compile_all(model))
    except NotRepresentable as exc:
        _err(f"{model_path}: class {exc.class_name}, slot {exc.slot}: not representable as a column")
        return DOMAIN_ERROR
    except SchemaError as exc:
        _err(f"{model_path}: {exc}")
        return DOMAIN_ERROR
    try:
        Path(out_path).write_text(ddl, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot write {out_path}: {exc}") from None
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ecmctl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("model")

    p = sub.add_parser("render", help="bind and render a directory of content documents")
    p.add_argument("--model", required=True)
    p.add_argument("--content", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--context")

    p = sub.add_parser("trace", help="print the state trace of a machine program")
    p.add_argument("--program", required=True)
    p.add_argument("--input")

    p = sub.add_parser("schema", help="emit the relational schema of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.model)
        if args.command == "render":
            return cmd_render(args.model, args.content, args.out, args.context)
        if args.command == "trace":
            return cmd_trace(args.program, args.input)
        if args.command == "schema":
            return cmd_schema(args.model, args.out)
    except UsageError as exc:
        _err(f"ecmctl: {exc}")
        return USAGE_ERROR
    return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
