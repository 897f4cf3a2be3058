"""Algorithmic linear typechecking against explicit signatures.

Contexts thread left to right through subexpressions; using a linear binding
removes it from the residual context, and every binder is checked for
consumption when its scope ends. Type comparisons go through the equivalence
decision procedure, so anything that differs only by the sequential-composition
laws checks interchangeably. Session operations first expose the head of the
channel's type by unfolding recursion and pushing continuations under
composition.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .diagnostics import Diagnostic, DiagnosticError
from . import equiv
from . import kinds as K
from . import syntax as S
from .dual import dual
from .syntax import (
    Kind, Type, Basic, Arrow, Pair, DataRef, Skip, Semi, Message, Choice, Rec, TVar,
    Scheme, SESSION, FUNCTIONAL, UNRESTRICTED, LINEAR,
    Expr, Lit, Var, Lam, App, PairE, LetPair, Let, Case, If as IfE, TypeApp,
    Fork, New, Send, Receive, Select, Match,
    INT, BOOL, UNIT,
)


class CheckError(DiagnosticError):
    pass


def _fail(msg: str, pos: S.Pos | None = None) -> CheckError:
    line, col = pos or (0, 0)
    return CheckError(Diagnostic(line, col, msg))


# ---------------------------------------------------------------------------
# Global environment


def _arrow(*tys: Type) -> Type:
    out = tys[-1]
    for t in reversed(tys[:-1]):
        out = Arrow(UNRESTRICTED, t, out)
    return out


BUILTINS: dict[str, Scheme] = {
    "+": Scheme((), _arrow(INT, INT, INT)),
    "-": Scheme((), _arrow(INT, INT, INT)),
    "*": Scheme((), _arrow(INT, INT, INT)),
    "div": Scheme((), _arrow(INT, INT, INT)),
    "mod": Scheme((), _arrow(INT, INT, INT)),
    "==": Scheme((), _arrow(INT, INT, BOOL)),
    "<": Scheme((), _arrow(INT, INT, BOOL)),
    "<=": Scheme((), _arrow(INT, INT, BOOL)),
    ">": Scheme((), _arrow(INT, INT, BOOL)),
    ">=": Scheme((), _arrow(INT, INT, BOOL)),
    "&&": Scheme((), _arrow(BOOL, BOOL, BOOL)),
    "||": Scheme((), _arrow(BOOL, BOOL, BOOL)),
    "not": Scheme((), _arrow(BOOL, BOOL)),
}


@dataclass
class GlobalEnv:
    schemes: dict[str, Scheme] = field(default_factory=dict)
    ctors: dict[str, tuple[str, tuple[Type, ...]]] = field(default_factory=dict)
    datakinds: dict[str, Kind] = field(default_factory=dict)
    abbrevs: dict[str, Type] = field(default_factory=dict)

    def kind_of(self, kenv: K.KindEnv, t: Type) -> Kind:
        return K.synth_kind(kenv, t, self.datakinds)

    def equivalent(self, t1: Type, t2: Type, kenv: K.KindEnv) -> bool:
        return equiv.equivalent(t1, t2, kenv, datakinds=self.datakinds)


def resolve_type(env: GlobalEnv, t: Type) -> Type:
    """Replace abbreviation references by their recursive expansions; leave
    datatype references nominal."""
    match t:
        case DataRef(name):
            if name in env.abbrevs:
                return env.abbrevs[name]
            if name in env.datakinds:
                return t
            raise _fail(f"unknown type name {name}")
        case Semi(lhs, rhs):
            return Semi(resolve_type(env, lhs), resolve_type(env, rhs))
        case Arrow(mult, dom, cod):
            return Arrow(mult, resolve_type(env, dom), resolve_type(env, cod))
        case Pair(fst, snd):
            return Pair(resolve_type(env, fst), resolve_type(env, snd))
        case Choice(view, branches):
            return Choice(view, tuple((lab, resolve_type(env, ty)) for lab, ty in branches))
        case Rec(var, body):
            return Rec(var, resolve_type(env, body))
        case _:
            return t


def _expand_abbrev(env: GlobalEnv, decls: dict[str, S.TypeAbbrev], name: str,
                   active: dict[str, str]) -> Type:
    if name in env.abbrevs:
        return env.abbrevs[name]
    var = S.fresh_name(name.lower())
    body_src = decls[name].body

    def walk(t: Type) -> Type:
        match t:
            case DataRef(n):
                if n in active:
                    return TVar(active[n])
                if n in decls:
                    return _expand_abbrev(env, decls, n, active)
                if n in env.datakinds:
                    return t
                raise _fail(f"unknown type name {n}", decls[name].pos)
            case Semi(lhs, rhs):
                return Semi(walk(lhs), walk(rhs))
            case Choice(view, branches):
                return Choice(view, tuple((lab, walk(ty)) for lab, ty in branches))
            case Rec(v, b):
                return Rec(v, walk(b))
            case Arrow(mult, dom, cod):
                return Arrow(mult, walk(dom), walk(cod))
            case Pair(fst, snd):
                return Pair(walk(fst), walk(snd))
            case _:
                return t

    active[name] = var
    body = walk(body_src)
    del active[name]
    expanded = Rec(var, body) if var in S.free_tvars(body) else body
    env.abbrevs[name] = expanded
    return expanded


# ---------------------------------------------------------------------------
# Typing contexts


@dataclass(frozen=True)
class Ctx:
    bindings: dict[str, tuple[Type, Kind]] = field(default_factory=dict)
    consumed: frozenset[str] = field(default_factory=frozenset)

    def bind(self, name: str, ty: Type, kind: Kind, pos: S.Pos | None) -> "Ctx":
        if name in self.bindings and self.bindings[name][1].mult == LINEAR:
            raise _fail(f"linear variable {name} would be shadowed before it is used", pos)
        b = dict(self.bindings)
        b[name] = (ty, kind)
        return Ctx(b, self.consumed - {name})

    def use(self, name: str, pos: S.Pos | None) -> tuple[Type, "Ctx"]:
        if name not in self.bindings:
            if name in self.consumed:
                raise _fail(f"linear variable {name} is used more than once", pos)
            raise KeyError(name)
        ty, kind = self.bindings[name]
        if kind.mult == LINEAR:
            b = dict(self.bindings)
            del b[name]
            return ty, Ctx(b, self.consumed | {name})
        return ty, self

    def drop_scope(self, names: list[str], outer: "Ctx", pos: S.Pos | None) -> "Ctx":
        """Leave the scope of `names`: linear leftovers are errors, and any
        shadowed outer bindings come back."""
        b = dict(self.bindings)
        consumed = set(self.consumed)
        for name in names:
            if name in b:
                _, kind = b[name]
                if kind.mult == LINEAR:
                    raise _fail(f"linear variable {name} is not used", pos)
                del b[name]
            consumed.discard(name)
            if name in outer.bindings:
                b[name] = outer.bindings[name]
            elif name in outer.consumed:
                consumed.add(name)
        return Ctx(b, frozenset(consumed))

    def linear_names(self) -> frozenset[str]:
        return frozenset(n for n, (_, k) in self.bindings.items() if k.mult == LINEAR)


# ---------------------------------------------------------------------------
# Head exposure for session operations


@dataclass(frozen=True)
class HeadSkip:
    pass


@dataclass(frozen=True)
class HeadMsg:
    polarity: str
    payload: str
    cont: Type


@dataclass(frozen=True)
class HeadChoice:
    view: str
    branches: tuple[tuple[str, Type], ...]
    cont: Type


@dataclass(frozen=True)
class HeadVar:
    name: str
    cont: Type


def _seq(a: Type, b: Type) -> Type:
    if isinstance(a, Skip):
        return b
    if isinstance(b, Skip):
        return a
    return Semi(a, b)


def expose(t: Type, fuel: int = 1000):
    """Expose the first communication action of a session type by unfolding
    recursion and pushing continuations under sequential composition."""
    if fuel <= 0:
        raise _fail("recursion does not reach an action (non-contractive type)")
    match t:
        case Skip():
            return HeadSkip()
        case Message(polarity, payload):
            return HeadMsg(polarity, payload, Skip())
        case Choice(view, branches):
            return HeadChoice(view, branches, Skip())
        case TVar(name):
            return HeadVar(name, Skip())
        case Rec(var, body):
            return expose(S.subst(body, {var: t}), fuel - 1)
        case Semi(lhs, rhs):
            head = expose(lhs, fuel - 1)
            match head:
                case HeadSkip():
                    return expose(rhs, fuel - 1)
                case HeadMsg(p, b, cont):
                    return HeadMsg(p, b, _seq(cont, rhs))
                case HeadChoice(v, bs, cont):
                    return HeadChoice(v, bs, _seq(cont, rhs))
                case HeadVar(n, cont):
                    return HeadVar(n, _seq(cont, rhs))
    raise _fail(f"not a session type: {S.pretty(t)}")


# ---------------------------------------------------------------------------
# Expression synthesis


def synth(ctx: Ctx, env: GlobalEnv, kenv: K.KindEnv, e: Expr) -> tuple[Type, Ctx]:
    match e:
        case Lit(value):
            if isinstance(value, bool):
                return BOOL, ctx
            if isinstance(value, int):
                return INT, ctx
            if isinstance(value, str):
                return S.CHAR, ctx
            return UNIT, ctx

        case Var(name):
            try:
                return ctx.use(name, e.pos)
            except KeyError:
                pass
            if name in env.schemes:
                scheme = env.schemes[name]
                if scheme.binders:
                    raise _fail(f"{name} is polymorphic and needs a type application", e.pos)
                return scheme.body, ctx
            raise _fail(f"unbound variable {name}", e.pos)

        case TypeApp(name, args):
            if name in ctx.bindings:
                raise _fail(f"{name} is not polymorphic", e.pos)
            if name not in env.schemes:
                raise _fail(f"unbound variable {name}", e.pos)
            scheme = env.schemes[name]
            if not scheme.binders:
                raise _fail(f"{name} is not polymorphic", e.pos)
            if len(args) != len(scheme.binders):
                raise _fail(f"{name} expects {len(scheme.binders)} type arguments, got {len(args)}", e.pos)
            mapping: dict[str, Type] = {}
            for (bname, bkind), arg in zip(scheme.binders, args):
                arg = resolve_type(env, arg)
                try:
                    akind = env.kind_of(kenv, arg)
                except K.KindError as err:
                    raise _fail(f"bad type argument for {bname}: {err.diag.message}", e.pos)
                if not K.subkind(akind, bkind):
                    raise _fail(
                        f"type argument {S.pretty(arg)} has kind {akind}, not a subkind of {bkind}", e.pos)
                mapping[bname] = arg
            return S.subst(scheme.body, mapping), ctx

        case Lam(_, _, _):
            raise _fail("cannot synthesize the type of an unannotated function", e.pos)

        case App(fun, arg):
            if isinstance(fun, Send):
                tv, ctx1 = synth(ctx, env, kenv, fun.expr)
                if not isinstance(tv, Basic):
                    raise _fail(f"send carries basic values only, got {S.pretty(tv)}", e.pos)
                tc, ctx2 = synth(ctx1, env, kenv, arg)
                head = _expose_channel(env, tc, e.pos)
                if not isinstance(head, HeadMsg) or head.polarity != S.OUT:
                    raise _fail(f"channel of type {S.pretty(tc)} has no output action", e.pos)
                if head.payload != tv.name:
                    raise _fail(f"channel expects !{head.payload}, got {tv.name}", e.pos)
                return head.cont, ctx2
            tf, ctx1 = synth(ctx, env, kenv, fun)
            if not isinstance(tf, Arrow):
                raise _fail(f"applying a non-function of type {S.pretty(tf)}", e.pos)
            ta, ctx2 = synth(ctx1, env, kenv, arg)
            if not env.equivalent(ta, tf.dom, kenv):
                raise _fail(
                    f"argument type {S.pretty(ta)} does not match parameter type {S.pretty(tf.dom)}",
                    e.pos)
            return tf.cod, ctx2

        case Send(_):
            raise _fail("send must be applied to a value and then a channel", e.pos)

        case Receive(chan):
            tc, ctx1 = synth(ctx, env, kenv, chan)
            head = _expose_channel(env, tc, e.pos)
            if not isinstance(head, HeadMsg) or head.polarity != S.IN:
                raise _fail(f"channel of type {S.pretty(tc)} has no input action", e.pos)
            return Pair(Basic(head.payload), head.cont), ctx1

        case New(session):
            ty = resolve_type(env, session)
            try:
                kind = env.kind_of(kenv, ty)
            except K.KindError as err:
                raise _fail(err.diag.message, e.pos)
            if kind.prekind != SESSION:
                raise _fail(f"new requires a session type, got {S.pretty(session)} : {kind}", e.pos)
            if not K.contractive(kenv, ty):
                raise _fail(f"new requires a contractive session type", e.pos)
            return Pair(ty, dual(ty)), ctx

        case Select(label, chan):
            tc, ctx1 = synth(ctx, env, kenv, chan)
            head = _expose_channel(env, tc, e.pos)
            if not isinstance(head, HeadChoice) or head.view != S.INTERNAL:
                raise _fail(f"channel of type {S.pretty(tc)} offers no internal choice", e.pos)
            picked = dict(head.branches).get(label)
            if picked is None:
                raise _fail(f"label {label} is not offered by {S.pretty(tc)}", e.pos)
            return _seq(picked, head.cont), ctx1

        case Match(scrutinee, branches):
            tc, ctx1 = synth(ctx, env, kenv, scrutinee)
            head = _expose_channel(env, tc, e.pos)
            if not isinstance(head, HeadChoice) or head.view != S.EXTERNAL:
                raise _fail(f"channel of type {S.pretty(tc)} offers no external choice", e.pos)
            offered = dict(head.branches)
            covered = {lab for lab, _, _ in branches}
            if covered != set(offered):
                missing = sorted(set(offered) - covered)
                extra = sorted(covered - set(offered))
                what = (f"missing {', '.join(missing)}" if missing else
                        f"unknown {', '.join(extra)}")
                raise _fail(f"match branches do not cover the choice: {what}", e.pos)
            outs = []
            for lab, binder, body in branches:
                chan_ty = _seq(offered[lab], head.cont)
                outs.append(_branch(ctx1, env, kenv, [(binder, chan_ty)], body, e.pos))
            return _join_branches(ctx1, env, kenv, outs, e.pos)

        case Fork(inner):
            ti, ctx1 = synth(ctx, env, kenv, inner)
            kind = env.kind_of(kenv, ti)
            if kind.mult != UNRESTRICTED:
                raise _fail(
                    f"forked expression has linear type {S.pretty(ti)}; its value would be lost",
                    e.pos)
            return UNIT, ctx1

        case PairE(fst, snd):
            t1, ctx1 = synth(ctx, env, kenv, fst)
            t2, ctx2 = synth(ctx1, env, kenv, snd)
            return Pair(t1, t2), ctx2

        case LetPair(x, y, bound, body):
            tb, ctx1 = synth(ctx, env, kenv, bound)
            if not isinstance(tb, Pair):
                raise _fail(f"let x, y = ... needs a pair, got {S.pretty(tb)}", e.pos)
            if x == y and x != "_":
                raise _fail(f"duplicate binder {x}", e.pos)
            inner, names = _bind_all(ctx1, env, kenv, [(x, tb.fst), (y, tb.snd)], e.pos)
            tr, ctx2 = synth(inner, env, kenv, body)
            return tr, ctx2.drop_scope(names, ctx1, e.pos)

        case Let(x, bound, body):
            tb, ctx1 = synth(ctx, env, kenv, bound)
            inner, names = _bind_all(ctx1, env, kenv, [(x, tb)], e.pos)
            tr, ctx2 = synth(inner, env, kenv, body)
            return tr, ctx2.drop_scope(names, ctx1, e.pos)

        case Case(scrutinee, branches):
            ts, ctx1 = synth(ctx, env, kenv, scrutinee)
            if not isinstance(ts, DataRef):
                raise _fail(f"case needs a datatype value, got {S.pretty(ts)}", e.pos)
            all_ctors = {c: fields for c, (d, fields) in env.ctors.items() if d == ts.name}
            covered = {c for c, _, _ in branches}
            if covered != set(all_ctors):
                missing = sorted(set(all_ctors) - covered)
                extra = sorted(covered - set(all_ctors))
                what = (f"missing {', '.join(missing)}" if missing else
                        f"unknown {', '.join(extra)}")
                raise _fail(f"case branches do not cover {ts.name}: {what}", e.pos)
            outs = []
            for ctor, params, body in branches:
                fields = all_ctors[ctor]
                if len(params) != len(fields):
                    raise _fail(f"constructor {ctor} has {len(fields)} fields, pattern binds {len(params)}",
                                e.pos)
                dup = [p for p in params if p != "_" and params.count(p) > 1]
                if dup:
                    raise _fail(f"duplicate binder {dup[0]}", e.pos)
                outs.append(_branch(ctx1, env, kenv, list(zip(params, fields)), body, e.pos))
            return _join_branches(ctx1, env, kenv, outs, e.pos)

        case IfE(cond, then, els):
            tc, ctx1 = synth(ctx, env, kenv, cond)
            if not env.equivalent(tc, BOOL, kenv):
                raise _fail(f"if condition must be Bool, got {S.pretty(tc)}", e.pos)
            outs = [_branch(ctx1, env, kenv, [], then, e.pos),
                    _branch(ctx1, env, kenv, [], els, e.pos)]
            return _join_branches(ctx1, env, kenv, outs, e.pos)

    raise _fail(f"cannot type expression {e!r}", getattr(e, "pos", None))


def _expose_channel(env: GlobalEnv, t: Type, pos: S.Pos | None):
    try:
        return expose(t)
    except CheckError:
        raise _fail(f"expected a channel, got {S.pretty(t)}", pos)


def _bind_all(ctx: Ctx, env: GlobalEnv, kenv: K.KindEnv,
              pairs: list[tuple[str, Type]], pos: S.Pos | None) -> tuple[Ctx, list[str]]:
    """Bind pattern names; a wildcard must be droppable on the spot."""
    names: list[str] = []
    for name, ty in pairs:
        try:
            kind = env.kind_of(kenv, ty)
        except K.KindError as err:
            raise _fail(err.diag.message, pos)
        if name == "_":
            if kind.mult != UNRESTRICTED:
                raise _fail(f"cannot discard a value of linear type {S.pretty(ty)} : {kind}", pos)
            continue
        ctx = ctx.bind(name, ty, kind, pos)
        names.append(name)
    return ctx, names


def _branch(ctx: Ctx, env: GlobalEnv, kenv: K.KindEnv,
            binders: list[tuple[str, Type]], body: Expr,
            pos: S.Pos | None) -> tuple[Type, Ctx, frozenset[str]]:
    inner, names = _bind_all(ctx, env, kenv, binders, pos)
    ty, after = synth(inner, env, kenv, body)
    residual = after.drop_scope(names, ctx, pos)
    consumed = ctx.linear_names() - residual.linear_names()
    return ty, residual, consumed


def _join_branches(ctx: Ctx, env: GlobalEnv, kenv: K.KindEnv,
                   outs: list[tuple[Type, Ctx, frozenset[str]]],
                   pos: S.Pos | None) -> tuple[Type, Ctx]:
    ty0, res0, used0 = outs[0]
    for i, (ty, _, used) in enumerate(outs[1:], start=2):
        if used != used0:
            diff = sorted(used ^ used0)
            raise _fail(
                f"branches disagree on consuming linear variables: {', '.join(diff)} "
                f"(branch {i} vs branch 1)", pos)
        if not env.equivalent(ty, ty0, kenv):
            raise _fail(
                f"branch {i} has type {S.pretty(ty)}, not equivalent to {S.pretty(ty0)}", pos)
    return ty0, res0


def check_against(ctx: Ctx, env: GlobalEnv, kenv: K.KindEnv, e: Expr, t: Type) -> Ctx:
    """Synthesize and compare by equivalence. Functions cannot be synthesized
    without an annotation, so a function checked against an arrow pushes the
    arrow inward instead."""
    if isinstance(e, Lam) and isinstance(t, Arrow):
        if e.mult == LINEAR and t.mult == UNRESTRICTED:
            raise _fail("a one-shot function cannot be used where an unrestricted one is expected",
                        e.pos)
        inner, names = _bind_all(ctx, env, kenv, [(e.param, t.dom)], e.pos)
        residual = check_against(inner, env, kenv, e.body, t.cod)
        residual = residual.drop_scope(names, ctx, e.pos)
        if e.mult == UNRESTRICTED:
            captured = sorted(ctx.linear_names() - residual.linear_names())
            if captured:
                raise _fail(
                    f"unrestricted function consumes linear variables: {', '.join(captured)}",
                    e.pos)
        return residual
    ty, residual = synth(ctx, env, kenv, e)
    if not env.equivalent(ty, t, kenv):
        raise _fail(f"expected type {S.pretty(t)}, found {S.pretty(ty)}", getattr(e, "pos", None))
    return residual


# ---------------------------------------------------------------------------
# Programs


def build_global_env(p: S.Program, diags: list[Diagnostic]) -> GlobalEnv:
    env = GlobalEnv(schemes=dict(BUILTINS))

    # datatype kinds: functional prekind, multiplicity the join over the fields,
    # computed as a fixed point so recursive datatypes work
    for name in p.datatypes:
        env.datakinds[name] = S.TU
    changed = True
    while changed:
        changed = False
        for name, decl in p.datatypes.items():
            mult = UNRESTRICTED
            for fields in decl.ctors.values():
                for fty in fields:
                    try:
                        k = K.synth_kind({}, _resolve_quiet(env, p, fty), env.datakinds)
                    except (K.KindError, CheckError):
                        continue  # reported below, once abbreviations exist
                    if k.mult == LINEAR:
                        mult = LINEAR
            new = Kind(FUNCTIONAL, mult)
            if env.datakinds[name] != new:
                env.datakinds[name] = new
                changed = True

    # abbreviations expand to closed recursive forms and must be session-kinded
    for name, decl in p.abbrevs.items():
        try:
            expanded = _expand_abbrev(env, p.abbrevs, name, {})
            kind = env.kind_of({}, expanded)
            if kind.prekind != SESSION:
                diags.append(Diagnostic(decl.pos[0], decl.pos[1],
                                        f"type abbreviation {name} must be a session type"))
        except (CheckError, K.KindError) as err:
            diags.append(Diagnostic(decl.pos[0], decl.pos[1], err.diag.message))

    # constructors become curried unrestricted functions
    for dname, decl in p.datatypes.items():
        for cname, fields in decl.ctors.items():
            if cname in env.ctors:
                diags.append(Diagnostic(decl.pos[0], decl.pos[1],
                                        f"constructor {cname} declared twice"))
                continue
            try:
                rfields = tuple(resolve_type(env, f) for f in fields)
                for f in rfields:
                    env.kind_of({}, f)
            except (CheckError, K.KindError) as err:
                diags.append(Diagnostic(decl.pos[0], decl.pos[1], err.diag.message))
                continue
            env.ctors[cname] = (dname, rfields)
            env.schemes[cname] = Scheme((), _arrow(*rfields, DataRef(dname)))

    # signatures: resolve and kind-check under their binders
    for name, sig in p.signatures.items():
        binders = sig.scheme.binders
        kenv = {b: k for b, k in binders}
        try:
            body = resolve_type(env, sig.scheme.body)
            env.kind_of(kenv, body)
        except (CheckError, K.KindError) as err:
            diags.append(Diagnostic(sig.pos[0], sig.pos[1], err.diag.message))
            continue
        env.schemes[name] = Scheme(binders, body)
    return env


def _resolve_quiet(env: GlobalEnv, p: S.Program, t: Type) -> Type:
    try:
        return resolve_type(env, t)
    except CheckError:
        # during the datakind fixed point, abbreviations may not be expanded yet
        return _expand_and_resolve(env, p, t)


def _expand_and_resolve(env: GlobalEnv, p: S.Program, t: Type) -> Type:
    match t:
        case DataRef(name) if name in p.abbrevs:
            return _expand_abbrev(env, p.abbrevs, name, {})
        case _:
            return resolve_type(env, t)


def check_program(p: S.Program) -> list[Diagnostic]:
    """Kind-check all declarations and type-check every definition against its
    signature. All signatures are in scope everywhere, so definitions may be
    mutually recursive. Diagnostics accumulate per definition."""
    diags: list[Diagnostic] = []
    env = build_global_env(p, diags)

    for name, d in p.definitions.items():
        sig = p.signatures.get(name)
        if sig is None:
            diags.append(Diagnostic(d.pos[0], d.pos[1], f"definition of {name} has no signature"))
            continue
        if name not in env.schemes:
            continue  # the signature itself failed to resolve
        scheme = env.schemes[name]
        kenv: K.KindEnv = {b: k for b, k in scheme.binders}
        try:
            ty = scheme.body
            ctx = Ctx()
            names: list[str] = []
            for param in d.params:
                if not isinstance(ty, Arrow):
                    raise _fail(f"{name} has more parameters than its signature has arrows", d.pos)
                ctx, bound = _bind_all(ctx, env, kenv, [(param, ty.dom)], d.pos)
                names.extend(bound)
                ty = ty.cod
            residual = check_against(ctx, env, kenv, d.body, ty)
            residual.drop_scope(names, Ctx(), d.pos)
        except CheckError as err:
            line, col = (err.diag.line, err.diag.col) if err.diag.line else d.pos
            diags.append(Diagnostic(line, col, f"in {name}: {err.diag.message}"))
        except equiv.Inconclusive:
            diags.append(Diagnostic(d.pos[0], d.pos[1],
                                    f"in {name}: type equivalence check was inconclusive"))

    main = p.definitions.get("main")
    if main is None:
        diags.append(Diagnostic(1, 1, "missing main"))
    else:
        scheme = env.schemes.get("main")
        if scheme is not None:
            if scheme.binders:
                diags.append(Diagnostic(main.pos[0], main.pos[1], "main cannot be polymorphic"))
            else:
                if isinstance(scheme.body, Arrow) or main.params:
                    diags.append(Diagnostic(main.pos[0], main.pos[1],
                                            "main must have a non-function type"))
                else:
                    try:
                        k = env.kind_of({}, scheme.body)
                        if k.prekind == SESSION:
                            diags.append(Diagnostic(main.pos[0], main.pos[1],
                                                    "main must have a non-session type"))
                    except K.KindError:
                        pass
    return diags


def dump_types(p: S.Program) -> str:
    """One line per top-level name with its resolved scheme."""
    diags: list[Diagnostic] = []
    env = build_global_env(p, diags)
    lines = []
    for name in p.signatures:
        if name in env.schemes:
            lines.append(f"{name} : {S.pretty_scheme(env.schemes[name])}")
    return "\n".join(lines)
