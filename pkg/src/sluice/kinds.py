"""The four-point kind lattice, kind synthesis, and the contractivity check.

The lattice is the diamond with SU at the bottom and TL at the top: session
sits below functional in the prekind order, unrestricted below linear in the
multiplicity order, and TU, SL are incomparable.
"""

from __future__ import annotations

from .diagnostics import Diagnostic, DiagnosticError
from . import syntax as S
from .syntax import (
    Kind, SU, SL, TU, TL, SESSION, FUNCTIONAL, UNRESTRICTED, LINEAR,
    Basic, Arrow, Pair, DataRef, Skip, Semi, Message, Choice, Rec, TVar, Type,
)

KindEnv = dict[str, Kind]

_PRE_ORDER = {SESSION: 0, FUNCTIONAL: 1}
_MULT_ORDER = {UNRESTRICTED: 0, LINEAR: 1}


def subkind(k1: Kind, k2: Kind) -> bool:
    return (_PRE_ORDER[k1.prekind] <= _PRE_ORDER[k2.prekind]
            and _MULT_ORDER[k1.mult] <= _MULT_ORDER[k2.mult])


def lub(k1: Kind, k2: Kind) -> Kind:
    pre = FUNCTIONAL if FUNCTIONAL in (k1.prekind, k2.prekind) else SESSION
    mult = LINEAR if LINEAR in (k1.mult, k2.mult) else UNRESTRICTED
    return Kind(pre, mult)


def _mult_join(m1: str, m2: str) -> str:
    return LINEAR if LINEAR in (m1, m2) else UNRESTRICTED


class KindError(DiagnosticError):
    pass


def _fail(msg: str) -> KindError:
    return KindError(Diagnostic(0, 0, msg))


def synth_kind(env: KindEnv, t: Type, datatypes: dict[str, Kind] | None = None) -> Kind:
    """Least kind of a type. Raises KindError on ill-formed types, unbound
    variables, and non-contractive recursion.

    `datatypes` maps declared datatype names to their kinds; without it any
    DataRef is rejected as unknown.
    """
    k = _synth(env, t, datatypes or {})
    _check_contractive(env, t)
    return k


def _synth(env: KindEnv, t: Type, datatypes: dict[str, Kind]) -> Kind:
    match t:
        case Basic(_):
            return TU
        case Arrow(mult, dom, cod):
            _synth(env, dom, datatypes)
            _synth(env, cod, datatypes)
            return TU if mult == UNRESTRICTED else TL
        case Pair(fst, snd):
            k1 = _synth(env, fst, datatypes)
            k2 = _synth(env, snd, datatypes)
            return Kind(FUNCTIONAL, _mult_join(k1.mult, k2.mult))
        case DataRef(name):
            if name not in datatypes:
                raise _fail(f"unknown type name {name}")
            return datatypes[name]
        case Skip():
            return SU
        case Semi(lhs, rhs):
            k1 = _synth(env, lhs, datatypes)
            k2 = _synth(env, rhs, datatypes)
            for side, k in (("left", k1), ("right", k2)):
                if k.prekind != SESSION:
                    raise _fail(f"sequential composition requires session types; "
                                f"{side} operand {S.pretty(lhs if side == 'left' else rhs)} has kind {k}")
            return SU if k1 == SU and k2 == SU else SL
        case Message(_, _):
            return SL
        case Choice(_, branches):
            for lab, ty in branches:
                k = _synth(env, ty, datatypes)
                if k.prekind != SESSION:
                    raise _fail(f"choice branch {lab} must be a session type, got kind {k}")
            return SL
        case Rec(var, body):
            inner = dict(env)
            inner[var] = SU  # recursion variables are monomorphic session atoms
            k = _synth(inner, body, datatypes)
            if k.prekind != SESSION:
                raise _fail("only session types can be recursive")
            return k
        case TVar(name):
            if name not in env:
                raise _fail(f"unbound type variable {name}")
            return env[name]
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Contractivity


def _no_action(t: Type) -> bool:
    """Does this session type contribute no communication action on its own?
    Skip and bare variables guard nothing, and neither do compositions of
    them."""
    match t:
        case Skip() | TVar(_):
            return True
        case Semi(lhs, rhs):
            return _no_action(lhs) and _no_action(rhs)
        case Rec(_, body):
            return _no_action(body)
        case _:
            return False


def _unguarded(t: Type) -> frozenset[str]:
    """Variables reachable from the head of `t` without crossing an action."""
    match t:
        case TVar(name):
            return frozenset({name})
        case Rec(var, body):
            return _unguarded(body) - {var}
        case Semi(lhs, rhs):
            out = _unguarded(lhs)
            if _no_action(lhs):
                out |= _unguarded(rhs)
            return out
        case _:
            return frozenset()


def contractive(env: KindEnv, t: Type) -> bool:
    """True when every rec binder in `t` is guarded by at least one action."""
    match t:
        case Rec(var, body):
            return var not in _unguarded(body) and contractive(env, body)
        case Semi(lhs, rhs):
            return contractive(env, lhs) and contractive(env, rhs)
        case Choice(_, branches):
            return all(contractive(env, ty) for _, ty in branches)
        case Arrow(_, dom, cod):
            return contractive(env, dom) and contractive(env, cod)
        case Pair(fst, snd):
            return contractive(env, fst) and contractive(env, snd)
        case _:
            return True


def _check_contractive(env: KindEnv, t: Type) -> None:
    if not contractive(env, t):
        raise _fail(f"non-contractive recursive type {S.pretty(t)}")
