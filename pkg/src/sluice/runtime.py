"""Call-by-value interpreter with threads and buffered channels.

A channel is two one-place slots; each end holds the pair crossed, so one
end's write slot is the other end's read slot. Putting into a full slot and
taking from an empty one block, which gives the asynchronous
buffer-of-size-one semantics: a single write/read crossing cannot deadlock,
a doubled one can.

The typechecker is the safety front-end; the runtime moves untyped payloads
and never re-checks. Select/match labels travel in-band through the same
slots as data, wrapped in a distinct tag.

A watchdog aborts the run when every live thread has been blocked on a slot,
with no progress, for a quiescence interval; the report lists each thread's
blocking site.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass

from . import syntax as S
from .syntax import (
    Expr, Lit, Var, Lam, App, PairE, LetPair, Let, Case, If as IfE, TypeApp,
    Fork, New, Send, Receive, Select, Match,
)

_INT_MIN = -(2 ** 63)
_INT_MAX = 2 ** 63 - 1


class RuntimeAbort(Exception):
    """A runtime error in the evaluated program (overflow, division by zero)."""


class WatchdogAbort(Exception):
    """Every live thread was blocked on a slot for the whole quiescence window."""

    def __init__(self, report: list[str]):
        super().__init__("deadlock: " + "; ".join(report))
        self.report = report


class _Cancelled(Exception):
    """The main thread finished; forked threads unwind quietly."""


class _RunState:
    """Shared bookkeeping for one program run: live/blocked thread counts, a
    progress version stamp, and the seeded jitter source."""

    def __init__(self, seed: int | None, quiescence: float):
        self.lock = threading.Lock()
        self.live = 0
        self.blocked: dict[int, str] = {}
        self.version = 0
        self.aborted = False
        self.finished = False
        self.quiescence = quiescence
        self.rng = random.Random(seed)
        self.report: list[str] = []

    def thread_started(self) -> None:
        with self.lock:
            self.live += 1
            self.version += 1

    def thread_finished(self) -> None:
        with self.lock:
            self.live -= 1
            ident = threading.get_ident()
            self.blocked.pop(ident, None)
            self.version += 1

    def set_blocked(self, site: str) -> None:
        with self.lock:
            self.blocked[threading.get_ident()] = site
            self.version += 1

    def clear_blocked(self) -> None:
        with self.lock:
            self.blocked.pop(threading.get_ident(), None)
            self.version += 1

    def progressed(self) -> None:
        with self.lock:
            self.version += 1

    def jitter(self) -> None:
        # scheduling noise at communication points; the seed fixes the sequence
        with self.lock:
            r = self.rng.random()
        if r < 0.4:
            time.sleep(r * 0.003)

    def check_liveness(self) -> None:
        if self.aborted:
            raise _Cancelled()
        if self.finished:
            raise _Cancelled()


def _watchdog(state: _RunState) -> None:
    last_version = -1
    quiet_since: float | None = None
    while True:
        time.sleep(0.01)
        with state.lock:
            if state.finished or state.aborted:
                return
            stuck = state.live > 0 and len(state.blocked) == state.live
            if not stuck or state.version != last_version:
                last_version = state.version
                quiet_since = None
                continue
            if quiet_since is None:
                quiet_since = time.monotonic()
            elif time.monotonic() - quiet_since >= state.quiescence:
                state.report = sorted(set(state.blocked.values()))
                state.aborted = True
                return


# ---------------------------------------------------------------------------
# Channels

_EMPTY = object()


class Slot:
    """A one-place buffer: put blocks while full, take blocks while empty."""

    def __init__(self) -> None:
        self.cond = threading.Condition()
        self.value: object = _EMPTY

    def put(self, v: object, state: _RunState, site: str) -> None:
        with self.cond:
            waiting = False
            while self.value is not _EMPTY:
                state.check_liveness()
                if not waiting:
                    state.set_blocked(site)
                    waiting = True
                self.cond.wait(0.01)
            if waiting:
                state.clear_blocked()
            self.value = v
            state.progressed()
            self.cond.notify_all()

    def take(self, state: _RunState, site: str) -> object:
        with self.cond:
            waiting = False
            while self.value is _EMPTY:
                state.check_liveness()
                if not waiting:
                    state.set_blocked(site)
                    waiting = True
                self.cond.wait(0.01)
            if waiting:
                state.clear_blocked()
            v = self.value
            self.value = _EMPTY
            state.progressed()
            self.cond.notify_all()
            return v


@dataclass
class ChannelEnd:
    read: Slot
    write: Slot


def new_channel() -> tuple[ChannelEnd, ChannelEnd]:
    """Two fresh slots, handed out crossed: what one end writes the other reads."""
    s1, s2 = Slot(), Slot()
    return ChannelEnd(s1, s2), ChannelEnd(s2, s1)


def channel_send(v: object, end: ChannelEnd, state: _RunState, site: str = "send") -> ChannelEnd:
    state.jitter()
    end.write.put(v, state, site)
    return end


def channel_receive(end: ChannelEnd, state: _RunState, site: str = "receive") -> tuple[object, ChannelEnd]:
    state.jitter()
    return end.read.take(state, site), end


# ---------------------------------------------------------------------------
# Values


@dataclass
class Closure:
    param: str
    body: Expr
    env: dict[str, object]


@dataclass
class CtorVal:
    tag: str
    args: tuple
    arity: int


@dataclass(frozen=True)
class LabelVal:
    name: str


@dataclass
class Builtin:
    name: str
    arity: int
    args: tuple = ()


def _builtin_apply(b: Builtin, args: tuple) -> object:
    x, *rest = args
    match b.name:
        case "not":
            return not x
        case "+" | "-" | "*" | "div" | "mod":
            y = rest[0]
            if b.name == "+":
                r = x + y
            elif b.name == "-":
                r = x - y
            elif b.name == "*":
                r = x * y
            elif b.name == "div":
                if y == 0:
                    raise RuntimeAbort("division by zero")
                r = x // y
            else:
                if y == 0:
                    raise RuntimeAbort("division by zero")
                r = x % y
            if not (_INT_MIN <= r <= _INT_MAX):
                raise RuntimeAbort("integer overflow")
            return r
        case "==":
            return x == rest[0]
        case "<":
            return x < rest[0]
        case "<=":
            return x <= rest[0]
        case ">":
            return x > rest[0]
        case ">=":
            return x >= rest[0]
        case "&&":
            return x and rest[0]
        case "||":
            return x or rest[0]
    raise RuntimeAbort(f"unknown builtin {b.name}")


_BUILTIN_ARITY = {"not": 1, "+": 2, "-": 2, "*": 2, "div": 2, "mod": 2,
                  "==": 2, "<": 2, "<=": 2, ">": 2, ">=": 2, "&&": 2, "||": 2}


@dataclass
class _SendPartial:
    value: object


def pretty_value(v: object) -> str:
    return _pv(v, 0)


def _pv(v: object, level: int) -> str:
    if isinstance(v, bool):
        return "True" if v else "False"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, str):
        return f"'{v}'"
    if isinstance(v, tuple):
        if not v:
            return "()"
        return f"({_pv(v[0], 0)}, {_pv(v[1], 0)})"
    if isinstance(v, CtorVal):
        if not v.args:
            return v.tag
        inner = " ".join(_pv(a, 1) for a in v.args)
        s = f"{v.tag} {inner}"
        return f"({s})" if level > 0 else s
    if isinstance(v, ChannelEnd):
        return "<channel>"
    if isinstance(v, (Closure, Builtin, _SendPartial)):
        return "<fun>"
    if isinstance(v, LabelVal):
        return f"<label {v.name}>"
    return repr(v)


# ---------------------------------------------------------------------------
# Evaluation


class _Interp:
    def __init__(self, program: S.Program, state: _RunState):
        self.program = program
        self.state = state
        self.globals: dict[str, object] = {}
        self.glock = threading.Lock()

    def global_value(self, name: str) -> object:
        with self.glock:
            if name in self.globals:
                return self.globals[name]
        d = self.program.definitions.get(name)
        if d is None:
            if name in _BUILTIN_ARITY:
                v: object = Builtin(name, _BUILTIN_ARITY[name])
            else:
                v = self._ctor_value(name)
        elif d.params:
            body: Expr = d.body
            for param in reversed(d.params[1:]):
                body = Lam(S.UNRESTRICTED, param, body)
            v = Closure(d.params[0], body, {})
        else:
            v = self.eval(d.body, {})
        with self.glock:
            self.globals[name] = v
        return v

    def _ctor_value(self, name: str) -> object:
        for decl in self.program.datatypes.values():
            if name in decl.ctors:
                arity = len(decl.ctors[name])
                v = CtorVal(name, (), arity)
                return v
        raise RuntimeAbort(f"unbound name {name}")

    def apply(self, f: object, a: object, site: str) -> object:
        match f:
            case Closure(param, body, env):
                env2 = dict(env)
                env2[param] = a
                return self.eval(body, env2)
            case CtorVal(tag, args, arity):
                args = args + (a,)
                if len(args) > arity:
                    raise RuntimeAbort(f"constructor {tag} applied to too many arguments")
                return CtorVal(tag, args, arity)
            case Builtin(name, arity, args):
                args = args + (a,)
                if len(args) == arity:
                    return _builtin_apply(f, args)
                return Builtin(name, arity, args)
            case _SendPartial(value):
                return channel_send(value, a, self.state, site)
        raise RuntimeAbort(f"applying a non-function value {pretty_value(f)}")

    def eval(self, e: Expr, env: dict[str, object]) -> object:
        state = self.state
        match e:
            case Lit(value):
                return value
            case Var(name):
                if name in env:
                    return env[name]
                return self.global_value(name)
            case TypeApp(name, _):
                if name in env:
                    return env[name]
                return self.global_value(name)
            case Lam(_, param, body):
                return Closure(param, body, env)
            case App(fun, arg):
                f = self.eval(fun, env)
                a = self.eval(arg, env)
                return self.apply(f, a, _site("send", e))
            case PairE(fst, snd):
                v1 = self.eval(fst, env)
                v2 = self.eval(snd, env)
                return (v1, v2)
            case LetPair(x, y, bound, body):
                v = self.eval(bound, env)
                assert isinstance(v, tuple) and len(v) == 2
                env2 = dict(env)
                if x != "_":
                    env2[x] = v[0]
                if y != "_":
                    env2[y] = v[1]
                return self.eval(body, env2)
            case Let(x, bound, body):
                v = self.eval(bound, env)
                env2 = dict(env)
                if x != "_":
                    env2[x] = v
                return self.eval(body, env2)
            case Case(scrutinee, branches):
                v = self.eval(scrutinee, env)
                assert isinstance(v, CtorVal)
                for ctor, params, body in branches:
                    if ctor == v.tag:
                        env2 = dict(env)
                        for p, a in zip(params, v.args):
                            if p != "_":
                                env2[p] = a
                        return self.eval(body, env2)
                raise RuntimeAbort(f"no case branch for {v.tag}")
            case IfE(cond, then, els):
                return self.eval(then if self.eval(cond, env) else els, env)
            case Fork(inner):
                state.thread_started()

                def child() -> None:
                    try:
                        self.eval(inner, env)
                    except (_Cancelled, RuntimeAbort):
                        pass
                    finally:
                        state.thread_finished()

                threading.Thread(target=child, daemon=True).start()
                state.jitter()
                return ()
            case New(_):
                return new_channel()
            case Send(inner):
                return _SendPartial(self.eval(inner, env))
            case Receive(chan):
                end = self.eval(chan, env)
                assert isinstance(end, ChannelEnd)
                return channel_receive(end, state, _site("receive", e))
            case Select(label, chan):
                end = self.eval(chan, env)
                assert isinstance(end, ChannelEnd)
                return channel_send(LabelVal(label), end, state, _site(f"select {label}", e))
            case Match(scrutinee, branches):
                end = self.eval(scrutinee, env)
                assert isinstance(end, ChannelEnd)
                v, end = channel_receive(end, state, _site("match", e))
                assert isinstance(v, LabelVal), "protocol mismatch: expected a label"
                for label, binder, body in branches:
                    if label == v.name:
                        env2 = dict(env)
                        if binder != "_":
                            env2[binder] = end
                        return self.eval(body, env2)
                raise RuntimeAbort(f"no match branch for label {v.name}")
        raise RuntimeAbort(f"cannot evaluate {e!r}")


def _site(op: str, e: Expr) -> str:
    if e.pos:
        return f"{op} at line {e.pos[0]}"
    return op


def run(program: S.Program, *, seed: int | None = None, quiescence: float = 2.0) -> object:
    """Evaluate `main` under call-by-value and return its value. The program
    must already have passed the checker. Forked threads are not awaited:
    when main finishes they are quietly cancelled at their next channel
    operation. Raises WatchdogAbort when all live threads stay blocked for
    the quiescence interval."""
    main = program.definitions.get("main")
    if main is None:
        raise RuntimeAbort("missing main")
    state = _RunState(seed, quiescence)
    interp = _Interp(program, state)
    watchdog = threading.Thread(target=_watchdog, args=(state,), daemon=True)
    watchdog.start()
    state.thread_started()
    try:
        return interp.eval(main.body, {})
    except _Cancelled:
        raise WatchdogAbort(state.report)
    finally:
        state.thread_finished()
        with state.lock:
            state.finished = True
