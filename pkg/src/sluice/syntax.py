"""Abstract syntax: kinds, types, expressions, declarations, and the type pretty-printer.

Types are immutable and hashable so later stages can memoize on structure.
Expressions carry source positions for diagnostics; positions never take part
in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Optional, Union

# ---------------------------------------------------------------------------
# Kinds

SESSION = "S"
FUNCTIONAL = "T"
UNRESTRICTED = "U"
LINEAR = "L"


@dataclass(frozen=True)
class Kind:
    """A prekind (session/functional) paired with a multiplicity (linear/unrestricted)."""

    prekind: str
    mult: str

    def __str__(self) -> str:
        return f"{self.prekind}{self.mult}"


SU = Kind(SESSION, UNRESTRICTED)
SL = Kind(SESSION, LINEAR)
TU = Kind(FUNCTIONAL, UNRESTRICTED)
TL = Kind(FUNCTIONAL, LINEAR)

ALL_KINDS = (SU, SL, TU, TL)

KIND_NAMES = {"SU": SU, "SL": SL, "TU": TU, "TL": TL}

# ---------------------------------------------------------------------------
# Types

BASIC_NAMES = ("Int", "Bool", "Char", "Unit")


@dataclass(frozen=True)
class Basic:
    name: str  # one of BASIC_NAMES


@dataclass(frozen=True)
class Arrow:
    mult: str  # UNRESTRICTED for ->, LINEAR for -o
    dom: "Type"
    cod: "Type"


@dataclass(frozen=True)
class Pair:
    fst: "Type"
    snd: "Type"


@dataclass(frozen=True)
class DataRef:
    """A reference to a declared datatype or (before resolution) a type abbreviation."""

    name: str


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Semi:
    lhs: "Type"
    rhs: "Type"


OUT = "!"
IN = "?"


@dataclass(frozen=True)
class Message:
    polarity: str  # OUT or IN
    payload: str  # a basic type name


INTERNAL = "+"
EXTERNAL = "&"


@dataclass(frozen=True)
class Choice:
    view: str  # INTERNAL or EXTERNAL
    branches: tuple[tuple[str, "Type"], ...]  # ordered, labels pairwise distinct

    def branch(self, label: str) -> Optional["Type"]:
        for lab, ty in self.branches:
            if lab == label:
                return ty
        return None

    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.branches)


@dataclass(frozen=True)
class Rec:
    var: str
    body: "Type"


@dataclass(frozen=True)
class TVar:
    name: str


Type = Union[Basic, Arrow, Pair, DataRef, Skip, Semi, Message, Choice, Rec, TVar]

UNIT = Basic("Unit")
INT = Basic("Int")
BOOL = Basic("Bool")
CHAR = Basic("Char")


@dataclass(frozen=True)
class Scheme:
    """A rank-1 polymorphic signature: zero or more kinded binders over a type."""

    binders: tuple[tuple[str, Kind], ...]
    body: Type


# ---------------------------------------------------------------------------
# Type utilities


def free_tvars(t: Type) -> frozenset[str]:
    match t:
        case TVar(name):
            return frozenset({name})
        case Rec(var, body):
            return free_tvars(body) - {var}
        case Semi(lhs, rhs):
            return free_tvars(lhs) | free_tvars(rhs)
        case Arrow(_, dom, cod):
            return free_tvars(dom) | free_tvars(cod)
        case Pair(fst, snd):
            return free_tvars(fst) | free_tvars(snd)
        case Choice(_, branches):
            out: frozenset[str] = frozenset()
            for _, ty in branches:
                out |= free_tvars(ty)
            return out
        case _:
            return frozenset()


_fresh_counter = count(1)


def fresh_name(base: str) -> str:
    return f"{base}_{next(_fresh_counter)}"


def subst(t: Type, mapping: dict[str, Type]) -> Type:
    """Capture-avoiding substitution of type variables."""
    if not mapping:
        return t
    match t:
        case TVar(name):
            return mapping.get(name, t)
        case Rec(var, body):
            inner = {k: v for k, v in mapping.items() if k != var}
            if not inner:
                return t
            if any(var in free_tvars(v) for v in inner.values()):
                renamed = fresh_name(var)
                body = subst(body, {var: TVar(renamed)})
                var = renamed
            return Rec(var, subst(body, inner))
        case Semi(lhs, rhs):
            return Semi(subst(lhs, mapping), subst(rhs, mapping))
        case Arrow(mult, dom, cod):
            return Arrow(mult, subst(dom, mapping), subst(cod, mapping))
        case Pair(fst, snd):
            return Pair(subst(fst, mapping), subst(snd, mapping))
        case Choice(view, branches):
            return Choice(view, tuple((lab, subst(ty, mapping)) for lab, ty in branches))
        case _:
            return t


def reassoc_semi(t: Type) -> Type:
    """Right-associate every sequential composition; used to compare parse trees."""
    match t:
        case Semi(Semi(a, b), c):
            return reassoc_semi(Semi(a, Semi(b, c)))
        case Semi(lhs, rhs):
            lhs2 = reassoc_semi(lhs)
            if isinstance(lhs2, Semi):
                return reassoc_semi(Semi(lhs2, reassoc_semi(rhs)))
            return Semi(lhs2, reassoc_semi(rhs))
        case Arrow(mult, dom, cod):
            return Arrow(mult, reassoc_semi(dom), reassoc_semi(cod))
        case Pair(fst, snd):
            return Pair(reassoc_semi(fst), reassoc_semi(snd))
        case Choice(view, branches):
            return Choice(view, tuple((lab, reassoc_semi(ty)) for lab, ty in branches))
        case Rec(var, body):
            return Rec(var, reassoc_semi(body))
        case _:
            return t


def session_form(t: Type) -> bool:
    """Syntactic test: could this constructor head a session type?"""
    return isinstance(t, (Skip, Semi, Message, Choice, Rec, TVar))


# ---------------------------------------------------------------------------
# Pretty-printing types

_ARROW_LEVEL = 0
_SEMI_LEVEL = 1
_ATOM_LEVEL = 2


def pretty(t: Type, level: int = _ARROW_LEVEL) -> str:
    match t:
        case Basic("Unit"):
            return "()"
        case Basic(name):
            return name
        case TVar(name):
            return name
        case DataRef(name):
            return name
        case Skip():
            return "Skip"
        case Message(polarity, payload):
            return f"{polarity}{payload}" if payload != "Unit" else f"{polarity}()"
        case Choice(view, branches):
            inner = ", ".join(f"{lab}: {pretty(ty)}" for lab, ty in branches)
            return f"{view}{{{inner}}}"
        case Pair(fst, snd):
            return f"({pretty(fst)}, {pretty(snd)})"
        case Semi(lhs, rhs):
            s = f"{pretty(lhs, _ATOM_LEVEL)};{pretty(rhs, _SEMI_LEVEL)}"
            return f"({s})" if level > _SEMI_LEVEL else s
        case Arrow(mult, dom, cod):
            op = "->" if mult == UNRESTRICTED else "-o"
            s = f"{pretty(dom, _SEMI_LEVEL)} {op} {pretty(cod, _ARROW_LEVEL)}"
            return f"({s})" if level > _ARROW_LEVEL else s
        case Rec(var, body):
            s = f"rec {var}. {pretty(body, _ARROW_LEVEL)}"
            return f"({s})" if level > _ARROW_LEVEL else s
    raise TypeError(f"not a type: {t!r}")


def pretty_scheme(s: Scheme) -> str:
    if not s.binders:
        return pretty(s.body)
    binders = ", ".join(f"{name}:{kind}" for name, kind in s.binders)
    return f"forall {binders} => {pretty(s.body)}"


# ---------------------------------------------------------------------------
# Expressions

Pos = tuple[int, int]


@dataclass
class Expr:
    pos: Optional[Pos] = field(default=None, compare=False, kw_only=True)


@dataclass
class Lit(Expr):
    value: object = None  # int | bool | 1-char str | () for unit


@dataclass
class Var(Expr):
    name: str = ""


@dataclass
class Lam(Expr):
    mult: str = UNRESTRICTED
    param: str = ""
    body: Expr = None  # type: ignore[assignment]


@dataclass
class App(Expr):
    fun: Expr = None  # type: ignore[assignment]
    arg: Expr = None  # type: ignore[assignment]


@dataclass
class PairE(Expr):
    fst: Expr = None  # type: ignore[assignment]
    snd: Expr = None  # type: ignore[assignment]


@dataclass
class LetPair(Expr):
    x: str = ""
    y: str = ""
    bound: Expr = None  # type: ignore[assignment]
    body: Expr = None  # type: ignore[assignment]


@dataclass
class Let(Expr):
    x: str = ""
    bound: Expr = None  # type: ignore[assignment]
    body: Expr = None  # type: ignore[assignment]


@dataclass
class Case(Expr):
    scrutinee: Expr = None  # type: ignore[assignment]
    branches: tuple[tuple[str, tuple[str, ...], Expr], ...] = ()


@dataclass
class If(Expr):
    cond: Expr = None  # type: ignore[assignment]
    then: Expr = None  # type: ignore[assignment]
    els: Expr = None  # type: ignore[assignment]


@dataclass
class TypeApp(Expr):
    name: str = ""
    args: tuple[Type, ...] = ()


@dataclass
class Fork(Expr):
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class New(Expr):
    session: Type = None  # type: ignore[assignment]


@dataclass
class Send(Expr):
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class Receive(Expr):
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class Select(Expr):
    label: str = ""
    expr: Expr = None  # type: ignore[assignment]


@dataclass
class Match(Expr):
    scrutinee: Expr = None  # type: ignore[assignment]
    branches: tuple[tuple[str, str, Expr], ...] = ()


# ---------------------------------------------------------------------------
# Declarations and programs


@dataclass
class TypeAbbrev:
    name: str
    body: Type
    pos: Pos


@dataclass
class DataDecl:
    name: str
    ctors: dict[str, tuple[Type, ...]]  # constructor -> field types, in order
    pos: Pos


@dataclass
class SigDecl:
    name: str
    scheme: Scheme
    pos: Pos


@dataclass
class FunDef:
    name: str
    params: tuple[str, ...]
    body: Expr
    pos: Pos


@dataclass
class Program:
    abbrevs: dict[str, TypeAbbrev]
    datatypes: dict[str, DataDecl]
    signatures: dict[str, SigDecl]
    definitions: dict[str, FunDef]

    @property
    def entry(self) -> Optional[FunDef]:
        return self.definitions.get("main")
