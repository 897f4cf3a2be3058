"""Type equivalence: bisimilarity of grammar words via an expansion tree.

The search alternates two phases. Expansion steps every pair of words in a
node through the grammar; a node whose pairs disagree on available actions
fails to expand, killing that branch. Simplification shrinks the expanded
node with the reflexivity, congruence, and word-decomposition rules, branching
into sibling nodes where a decomposition must guess a witness. The tree is
walked breadth-first over a double-ended queue that bumps shrinking nodes to
the front; reaching an empty node decides positively, exhausting the frontier
decides negatively, and blowing the node budget is reported as inconclusive
rather than silently as a verdict.

Functional types compare structurally, descending into session components
with the same machinery.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from . import kinds as K
from . import syntax as S
from .grammar import (
    Grammar, Word, build, compute_norms, prune, step, truncate, word_norm,
)
from .syntax import (
    Basic, Arrow, Pair, DataRef, TVar, Type, SESSION,
)

WordPair = tuple[Word, Word]
Node = frozenset[WordPair]

DEFAULT_BUDGET = 100_000

# Keeps one pathological simplification from exploding before the search's own
# budget can see it.
_SIMPLIFY_CAP = 4000


class Inconclusive(Exception):
    """The node budget ran out before either verdict was reached."""


@dataclass
class SearchConfig:
    budget: int = DEFAULT_BUDGET
    prioritize: bool = True
    simplify: str = "full"  # 'full' | 'single' | 'off'


TraceFn = Callable[[int, int, str], None]  # depth, pair count, action


# ---------------------------------------------------------------------------
# Expansion


def expand(g: Grammar, pairs: Iterable[WordPair]) -> Optional[Node]:
    """Step every pair through the grammar. Returns the successor node, or
    None when some pair offers mismatched action sets (including a terminated
    word against a live one)."""
    out: set[WordPair] = set()
    for w1, w2 in pairs:
        s1 = step(g, w1)
        s2 = step(g, w2)
        if s1.keys() != s2.keys():
            return None
        for a in s1:
            out.add((s1[a], s2[a]))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Congruence test

def congruent(pair: WordPair, rel: Iterable[WordPair]) -> bool:
    """Bounded membership test for the congruence (over concatenation)
    generated by `rel`: peel equal head symbols or matching relation-member
    prefixes from both sides. Only ever answers True when a derivation
    exists, so deleting a pair it approves is always sound."""
    rules: list[WordPair] = []
    for p, q in rel:
        if p or q:
            rules.append((p, q))
            rules.append((q, p))
    seen: set[WordPair] = set()

    def go(u: Word, v: Word) -> bool:
        if u == v:
            return True
        if (u, v) in seen:
            return False
        seen.add((u, v))
        if u and v and u[0] == v[0] and go(u[1:], v[1:]):
            return True
        for p, q in rules:
            if u[: len(p)] == p and v[: len(q)] == q and go(u[len(p):], v[len(q):]):
                return True
        return False

    return go(*pair)


# ---------------------------------------------------------------------------
# Simplification


def _canon_pairs(g: Grammar, pairs: Iterable[WordPair]) -> Node:
    # Words are cut behind their first unnormed symbol (unreachable suffixes);
    # pairs that become identical dissolve by reflexivity later.
    return frozenset((truncate(g, a), truncate(g, b)) for a, b in pairs)


def _b2_candidates(g: Grammar, y: int, steps: int) -> set[Word]:
    """Words reachable from Y by norm-reducing transition sequences of the
    given length; every witness of a decomposition must be among them."""
    frontier: set[Word] = {(y,)}
    for _ in range(steps):
        nxt: set[Word] = set()
        for w in frontier:
            n = word_norm(g, w)
            for w2 in step(g, w).values():
                if word_norm(g, w2) == (n or 0) - 1:
                    nxt.add(w2)
        frontier = nxt
    return frontier


def simplify(g: Grammar, pairs: Iterable[WordPair], history: Iterable[WordPair],
             fixed_point: bool = True) -> set[Node]:
    """Shrink a node with the reflexivity (R), congruence (C), and
    decomposition (B1/B2) rules, iterating to a fixed point when asked.
    B2 branches: one sibling per candidate witness plus one keeping the pair
    untouched, so the result is a set of alternative nodes."""
    hist = frozenset(history)
    results: set[Node] = set()
    work: list[tuple[Node, frozenset[WordPair], bool]] = [(_canon_pairs(g, pairs), frozenset(), True)]
    seen: set[tuple[Node, frozenset[WordPair]]] = set()
    spent = 0
    while work:
        P, b2done, live = work.pop()
        spent += 1
        if not live or spent > _SIMPLIFY_CAP:
            results.add(P)
            continue
        if (P, b2done) in seen:
            continue
        seen.add((P, b2done))

        # (R) drop reflexive pairs
        P1 = frozenset(p for p in P if p[0] != p[1])

        # (C) drop pairs derivable from the surviving pairs plus the history;
        # one at a time, so every deletion is justified by what remains
        kept = set(P1)
        for p in sorted(P1):
            if p in kept and congruent(p, (kept - {p}) | hist):
                kept.discard(p)

        # (B1) cancel equal normed head symbols
        P2: set[WordPair] = set()
        for u, v in kept:
            while u and v and u[0] == v[0] and g.norms.get(u[0]) is not None:
                u, v = u[1:], v[1:]
            if u != v:
                P2.add((u, v))
        node = frozenset(P2)

        changed = node != P

        # (B2) decompose one pair with distinct normed heads, guessing the
        # witness among the norm-reducing reachables
        target = None
        for p in sorted(node):
            u, v = p
            if p in b2done or not u or not v:
                continue
            nu, nv = g.norms.get(u[0]), g.norms.get(v[0])
            if u[0] != v[0] and nu is not None and nv is not None:
                target = p
                break
        if target is not None:
            u, v = target
            if g.norms[u[0]] > g.norms[v[0]]:  # type: ignore[operator]
                u, v = v, u
            x, gamma = u[0], u[1:]
            y, delta = v[0], v[1:]
            base = node - {target}
            done = b2done | {target}
            for beta in sorted(_b2_candidates(g, y, g.norms[x])):  # type: ignore[arg-type]
                child = base | {((y,), (x,) + beta), (gamma, beta + delta)}
                work.append((_canon_pairs(g, child), done, fixed_point))
            work.append((node, done, fixed_point))
            continue

        if fixed_point and changed:
            work.append((node, b2done, True))
        else:
            results.add(node)
    return results


# ---------------------------------------------------------------------------
# Search


@dataclass
class _Entry:
    pairs: Node
    history: frozenset[WordPair]
    depth: int
    parent_count: int
    parent_size: int


# Refutation probe: a bounded chain of pure expansions from a single pair. An
# action mismatch at any depth is definitive evidence the pair is not
# bisimilar, and a node containing such a pair can never reach the empty node,
# so the whole subtree (including every decomposition sibling sharing the
# pair) dies at once. Inconclusive probes change nothing.
_PROBE_DEPTH = 14
_PROBE_WIDTH = 192


def _pair_refuted(g: Grammar, pair: WordPair, cache: dict[WordPair, bool]) -> bool:
    if pair in cache:
        return cache[pair]
    current: Node = frozenset({pair})
    refuted = False
    for _ in range(_PROBE_DEPTH):
        nxt = expand(g, current)
        if nxt is None:
            refuted = True
            break
        if not nxt or len(nxt) > _PROBE_WIDTH or nxt == current:
            break
        current = nxt
    cache[pair] = refuted
    return refuted


@dataclass
class Frontier:
    queue: deque[_Entry] = field(default_factory=deque)
    visited: set[tuple[WordPair, ...]] = field(default_factory=set)


def _node_key(pairs: Node) -> tuple[WordPair, ...]:
    return tuple(sorted(pairs))


def _node_size(pairs: Node) -> int:
    return sum(len(a) + len(b) for a, b in pairs)


def prioritize(frontier: Frontier, entry: _Entry) -> Frontier:
    """Shrinking nodes (no more pairs, no longer words, smaller in at least
    one) jump the queue; everything else waits at the back."""
    count, size = len(entry.pairs), _node_size(entry.pairs)
    if (count <= entry.parent_count and size <= entry.parent_size
            and (count < entry.parent_count or size < entry.parent_size)):
        frontier.queue.appendleft(entry)
    else:
        frontier.queue.append(entry)
    return frontier


def search(g: Grammar, w1: Word, w2: Word, config: SearchConfig | None = None,
           trace: TraceFn | None = None) -> bool:
    """Decide bisimilarity of two start words over a pruned grammar."""
    config = config or SearchConfig()
    if config.simplify != "off":
        w1, w2 = truncate(g, w1), truncate(g, w2)
    root = frozenset({(w1, w2)})
    frontier = Frontier()
    frontier.queue.append(_Entry(root, frozenset(), 0, 1 + len(root), 1 + _node_size(root)))
    frontier.visited.add(_node_key(root))
    probe_cache: dict[WordPair, bool] = {}
    probing = config.simplify != "off"
    processed = 0
    fail_seen = False

    while frontier.queue:
        entry = frontier.queue.popleft()
        if not entry.pairs:
            if trace:
                trace(entry.depth, 0, "empty: equivalent")
            return True
        processed += 1
        if processed > config.budget:
            raise Inconclusive(f"node budget of {config.budget} exhausted")

        expanded = expand(g, entry.pairs)
        if expanded is None:
            fail_seen = True
            if trace:
                trace(entry.depth, len(entry.pairs), "expansion failed")
            continue
        if probing and any(_pair_refuted(g, p, probe_cache) for p in expanded):
            fail_seen = True
            if trace:
                trace(entry.depth, len(entry.pairs), "refuted by expansion probe")
            continue

        assumed = entry.history | entry.pairs
        if config.simplify == "off":
            siblings: Iterable[Node] = (expanded,)
            child_history = assumed
        else:
            siblings = simplify(g, expanded, assumed, fixed_point=config.simplify == "full")
            child_history = assumed | expanded

        pushed = 0
        for sib in siblings:
            if not sib:
                if trace:
                    trace(entry.depth + 1, 0, "empty: equivalent")
                return True
            key = _node_key(sib)
            if key in frontier.visited:
                continue
            frontier.visited.add(key)
            child = _Entry(sib, child_history, entry.depth + 1,
                           len(entry.pairs), _node_size(entry.pairs))
            if config.prioritize:
                prioritize(frontier, child)
            else:
                frontier.queue.append(child)
            pushed += 1
        if trace:
            trace(entry.depth, len(entry.pairs), f"expanded, {pushed} new siblings")

    if config.simplify == "off" and not fail_seen:
        # Pure expansion closed every branch by revisiting nodes; without the
        # simplification rules that is not evidence either way.
        raise Inconclusive("expansion-only search closed all branches by revisits")
    return False


# ---------------------------------------------------------------------------
# The public decision procedure


def equivalent(t1: Type, t2: Type, env: K.KindEnv | None = None, *,
               datakinds: dict[str, S.Kind] | None = None,
               budget: int = DEFAULT_BUDGET,
               prioritize_nodes: bool = True,
               simplify_mode: str = "full",
               trace: TraceFn | None = None) -> bool:
    """Sound-and-complete equivalence of kinded types. Session types go
    through the grammar pipeline; functional types descend structurally,
    comparing session components the same way. Comparing a session type
    against a functional one is False, not an error."""
    env = dict(env or {})
    dk = datakinds or {}

    def go(a: Type, b: Type) -> bool:
        ka = K.synth_kind(env, a, dk)
        kb = K.synth_kind(env, b, dk)
        if (ka.prekind == SESSION) != (kb.prekind == SESSION):
            return False
        if ka.prekind == SESSION:
            g, wa, wb = build(a, b)
            compute_norms(g)
            prune(g)
            cfg = SearchConfig(budget, prioritize_nodes, simplify_mode)
            return search(g, wa, wb, cfg, trace)
        match (a, b):
            case (Basic(x), Basic(y)):
                return x == y
            case (TVar(x), TVar(y)):
                return x == y
            case (DataRef(x), DataRef(y)):
                return x == y
            case (Arrow(m1, d1, c1), Arrow(m2, d2, c2)):
                return m1 == m2 and go(d1, d2) and go(c1, c2)
            case (Pair(f1, s1), Pair(f2, s2)):
                return go(f1, f2) and go(s1, s2)
            case _:
                return False

    return go(t1, t2)
