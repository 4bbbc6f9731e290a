"""Abstract machine for content management.

State is memory x input x output. Expressions are pure; commands change the
state. The command language is loop-free: assignment, branching comparison,
read from input and emit to output. Every error is final and carries the step
at which it happened together with the state after the last completed step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

from .syntax import (
    ParseError, TokenStream, parse_atom_literal, parse_literal, parse_type,
)
from .values import (
    UNBOUND, TupleV, Val, join_shapes, render_type, render_value,
    same_type, shape_of, typecheck,
)


# -- syntax -----------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: Val

    def __post_init__(self):
        # tuple values are written as Tuple expressions so text round-trips
        if isinstance(self.value, TupleV):
            raise ValueError("use Tuple(...) for tuple-valued expressions")


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Tuple:
    items: tuple["Expression", ...]

    def __post_init__(self):
        if len(self.items) < 2:
            raise ValueError("tuple expressions have at least two components")


@dataclass(frozen=True)
class Proj:
    expr: "Expression"
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("projection index starts at 1")


Expression = Union[Lit, Ident, Tuple, Proj]


@dataclass(frozen=True)
class Assign:
    target: str
    value: Expression


@dataclass(frozen=True)
class Cmp:
    left: Expression
    right: Expression
    then_block: tuple["Command", ...] = ()
    else_block: tuple["Command", ...] = ()


@dataclass(frozen=True)
class Read:
    target: str


@dataclass(frozen=True)
class Emit:
    value: Expression


Command = Union[Assign, Cmp, Read, Emit]


@dataclass(frozen=True)
class Program:
    declarations: Mapping[str, object] = field(default_factory=dict)
    commands: tuple[Command, ...] = ()


def literal_expr(v: Val) -> Expression:
    """Expression that evaluates to ``v``."""
    if isinstance(v, TupleV):
        return Tuple(tuple(literal_expr(x) for x in v.items))
    return Lit(v)


def render_expr(e: Expression) -> str:
    if isinstance(e, Lit):
        return render_value(e.value)
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, Tuple):
        return "(" + ", ".join(render_expr(x) for x in e.items) + ")"
    if isinstance(e, Proj):
        return f"{render_expr(e.expr)}.{e.index}"
    raise TypeError(f"not an expression: {e!r}")


def _render_block(cmds) -> str:
    if not cmds:
        return "{ }"
    return "{ " + "; ".join(render_command(c) for c in cmds) + " }"


def render_command(c: Command) -> str:
    if isinstance(c, Assign):
        return f"{c.target} = {render_expr(c.value)}"
    if isinstance(c, Read):
        return f"read {c.target}"
    if isinstance(c, Emit):
        return f"emit {render_expr(c.value)}"
    if isinstance(c, Cmp):
        return (
            f"cmp {render_expr(c.left)} {render_expr(c.right)} "
            f"{_render_block(c.then_block)} {_render_block(c.else_block)}"
        )
    raise TypeError(f"not a command: {c!r}")


def render_program(p: Program) -> str:
    lines = [f"var {name}: {render_type(ty)}" for name, ty in p.declarations.items()]
    lines.extend(render_command(c) for c in p.commands)
    return "".join(line + "\n" for line in lines)


def _parse_expr(ts: TokenStream) -> Expression:
    tok = ts.peek()
    if ts.accept_op("("):
        first = _parse_expr(ts)
        if ts.accept_op(")"):
            node = first
        else:
            items = [first]
            while ts.accept_op(","):
                items.append(_parse_expr(ts))
            ts.expect_op(")")
            node = Tuple(tuple(items))
    elif ts.is_op("[") or ts.is_op("@"):
        v = parse_literal(ts)
        node = literal_expr(v)
    else:
        v = parse_atom_literal(ts)
        if v is not None:
            node = Lit(v)
        elif tok.kind == "IDENT":
            ts.next()
            node = Ident(tok.text)
        else:
            ts.error(f"expected an expression, found {tok.text or 'end of input'!r}")
    while ts.is_op(".") and ts.peek(1).kind == "INT":
        ts.next()
        idx = ts.next()
        if idx.value < 1:
            ts.error("projection index starts at 1", idx)
        node = Proj(node, idx.value)
    return node


def _parse_block(ts: TokenStream) -> tuple:
    ts.expect_op("{")
    cmds = []
    ts.skip_separators()
    while not ts.is_op("}"):
        if ts.at_end():
            ts.error("unterminated block")
        cmds.append(_parse_command(ts))
        ts.skip_separators()
    ts.expect_op("}")
    return tuple(cmds)


def _parse_command(ts: TokenStream) -> Command:
    tok = ts.peek()
    if tok.kind == "IDENT" and ts.is_op("=", 1):
        target = ts.expect_ident().text
        ts.next()
        return Assign(target, _parse_expr(ts))
    if ts.is_word("read"):
        ts.next()
        return Read(ts.expect_ident().text)
    if ts.is_word("emit"):
        ts.next()
        return Emit(_parse_expr(ts))
    if ts.is_word("cmp"):
        ts.next()
        left = _parse_expr(ts)
        right = _parse_expr(ts)
        then_block = _parse_block(ts)
        else_block = _parse_block(ts)
        return Cmp(left, right, then_block, else_block)
    if ts.is_word("var"):
        ts.error("declarations must precede commands")
    ts.error(f"expected a command, found {tok.text or 'end of input'!r}")


def parse_program(text: str) -> Program:
    ts = TokenStream(text)
    decls: dict = {}
    ts.skip_separators()
    while ts.is_word("var"):
        ts.next()
        name_tok = ts.expect_ident()
        ts.expect_op(":")
        ty = parse_type(ts)
        if name_tok.text in decls:
            ts.error(f"identifier {name_tok.text!r} declared twice", name_tok)
        decls[name_tok.text] = ty
        ts.skip_separators()
    cmds = []
    while not ts.at_end():
        cmds.append(_parse_command(ts))
        ts.skip_separators()
    return Program(decls, tuple(cmds))


def parse_command(text: str) -> Command:
    ts = TokenStream(text)
    c = _parse_command(ts)
    if not ts.at_end():
        ts.error(f"unexpected {ts.peek().text!r} after command")
    return c


def parse_inputs(text: str) -> list:
    """One literal per non-blank line; ``#`` comments allowed."""
    values = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            ts = TokenStream(line)
            v = parse_literal(ts)
            if not ts.at_end():
                ts.error(f"unexpected {ts.peek().text!r} after literal")
        except ParseError as exc:
            raise ParseError(
                [type(d)(lineno, d.col, d.message) for d in exc.diagnostics]
            ) from None
        values.append(v)
    return values


# -- state and errors ---------------------------------------------------------------

@dataclass(frozen=True)
class MachineState:
    """Memory, remaining input and produced output.

    ``types`` records the fixed type of each identifier: the declared type, or
    for undeclared identifiers the shape accumulated over their bindings.
    """

    mem: Mapping[str, object] = field(default_factory=dict)
    input: tuple = ()
    output: tuple = ()
    types: Mapping[str, object] = field(default_factory=dict)

    @classmethod
    def initial(cls, program: Program, inputs: Sequence = ()) -> "MachineState":
        return cls(
            mem={name: UNBOUND for name in program.declarations},
            input=tuple(inputs),
            output=(),
            types={name: ("decl", ty) for name, ty in program.declarations.items()},
        )

    def render(self) -> str:
        mem = ",".join(f"{k}={render_value(self.mem[k])}" for k in sorted(self.mem))
        inp = ", ".join(render_value(v) for v in self.input)
        out = ", ".join(render_value(v) for v in self.output)
        return f"mem={{{mem}}} in=[{inp}] out=[{out}]"


class ErrorKind(enum.Enum):
    UNBOUND_IDENTIFIER = "UnboundIdentifier"
    TYPE_MISMATCH = "TypeMismatch"
    INPUT_EXHAUSTED = "InputExhausted"
    BAD_PROJECTION = "BadProjection"
    COMPARE_TYPE_MISMATCH = "CompareTypeMismatch"


class MachineError(Exception):
    """A terminal machine error.

    ``state`` is the state after the last fully completed step; ``step`` the
    1-based index of the step that failed (0 when raised by a bare expression
    evaluation outside a run).
    """

    def __init__(self, kind: ErrorKind, detail: str, step: int = 0, state: MachineState | None = None):
        self.kind = kind
        self.detail = detail
        self.step = step
        self.state = state
        super().__init__(self.render())

    def render(self) -> str:
        return f"{self.kind.value}({self.detail}) at step {self.step}"

    def at(self, step: int, state: MachineState) -> "MachineError":
        return MachineError(self.kind, self.detail, step, state)

    def __eq__(self, other):
        if not isinstance(other, MachineError):
            return NotImplemented
        return (self.kind, self.detail, self.step, self.state) == (
            other.kind, other.detail, other.step, other.state)

    __hash__ = None


# -- semantics ------------------------------------------------------------------------

def eval_expr(e: Expression, st: MachineState) -> tuple:
    """Evaluate ``e``; returns ``(value, st)`` with the state untouched."""
    return _eval(e, st), st


def _eval(e: Expression, st: MachineState):
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Ident):
        v = st.mem.get(e.name, UNBOUND)
        if v is UNBOUND:
            raise MachineError(ErrorKind.UNBOUND_IDENTIFIER, e.name)
        return v
    if isinstance(e, Tuple):
        return TupleV(tuple(_eval(x, st) for x in e.items))
    if isinstance(e, Proj):
        v = _eval(e.expr, st)
        if not isinstance(v, TupleV) or e.index > len(v.items):
            raise MachineError(ErrorKind.BAD_PROJECTION, render_expr(e))
        return v.items[e.index - 1]
    raise TypeError(f"not an expression: {e!r}")


def _bind(st: MachineState, name: str, v, **changes) -> MachineState:
    fixed = st.types.get(name)
    if fixed is not None and fixed[0] == "decl":
        if not typecheck(v, fixed[1]):
            raise MachineError(
                ErrorKind.TYPE_MISMATCH,
                f"{name}: {render_value(v)} is not a {render_type(fixed[1])}",
            )
        new_fixed = fixed
    else:
        try:
            shape = shape_of(v)
            if fixed is not None:
                shape = join_shapes(fixed[1], shape)
        except ValueError:
            raise MachineError(
                ErrorKind.TYPE_MISMATCH,
                f"{name}: {render_value(v)} does not match its earlier bindings",
            ) from None
        new_fixed = ("shape", shape)
    mem = dict(st.mem)
    mem[name] = v
    types = dict(st.types)
    types[name] = new_fixed
    return MachineState(mem, changes.get("input", st.input), st.output, types)


def _steps(cmds, st: MachineState, counter: list):
    """Yield ``(command, state_after)`` for each executed step, depth first."""
    for c in cmds:
        counter[0] += 1
        step = counter[0]
        try:
            if isinstance(c, Cmp):
                a = _eval(c.left, st)
                b = _eval(c.right, st)
                if not same_type(a, b):
                    raise MachineError(
                        ErrorKind.COMPARE_TYPE_MISMATCH,
                        f"{render_value(a)} vs {render_value(b)}",
                    )
                yield c, st
                for item in _steps(c.then_block if a == b else c.else_block, st, counter):
                    yield item
                    st = item[1]
                continue
            st = _exec_simple(c, st)
        except MachineError as exc:
            if exc.step:
                raise
            raise exc.at(step, st) from None
        yield c, st


def _exec_simple(c: Command, st: MachineState) -> MachineState:
    if isinstance(c, Assign):
        return _bind(st, c.target, _eval(c.value, st))
    if isinstance(c, Read):
        if not st.input:
            raise MachineError(ErrorKind.INPUT_EXHAUSTED, c.target)
        return _bind(st, c.target, st.input[0], input=st.input[1:])
    if isinstance(c, Emit):
        v = _eval(c.value, st)
        return MachineState(st.mem, st.input, st.output + (v,), st.types)
    raise TypeError(f"not a command: {c!r}")


def exec_command(c: Command, st: MachineState) -> MachineState:
    """Execute one command (a comparison runs its chosen block)."""
    for _, st in _steps((c,), st, [0]):
        pass
    return st


@dataclass(frozen=True)
class TraceEntry:
    step: int
    command_text: str
    state_after: MachineState

    def render(self) -> str:
        return f"step {self.step}: {self.command_text} | {self.state_after.render()}"


@dataclass(frozen=True)
class Trace:
    entries: tuple[TraceEntry, ...]
    error: MachineError | None = None

    @property
    def final_state(self) -> MachineState | None:
        return self.entries[-1].state_after if self.entries else None

    def render(self) -> str:
        lines = [e.render() for e in self.entries]
        if self.error is not None:
            lines.append(self.error.render())
        return "".join(line + "\n" for line in lines)


def trace(p: Program, inputs: Sequence = ()) -> Trace:
    """Every state change of a run, one entry per executed step."""
    entries = []
    try:
        for i, (c, st) in enumerate(_steps(p.commands, MachineState.initial(p, inputs), [0]), start=1):
            entries.append(TraceEntry(i, render_command(c), st))
    except MachineError as exc:
        return Trace(tuple(entries), exc)
    return Trace(tuple(entries))


@dataclass(frozen=True)
class RunResult:
    output: tuple
    mem: Mapping[str, object]
    state: MachineState


def run(p: Program, inputs: Sequence = ()) -> RunResult:
    """Run ``p`` to completion; raises the first MachineError encountered."""
    st = MachineState.initial(p, inputs)
    for _, st in _steps(p.commands, st, [0]):
        pass
    return RunResult(st.output, dict(st.mem), st)
