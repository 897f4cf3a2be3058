"""Linear typechecking of expressions and programs."""

import random

import pytest

from sluice import syntax as S
from sluice.equiv import equivalent
from sluice.kinds import synth_kind
from sluice.parser import parse_expr, parse_program, parse_type
from sluice.syntax import SL, Scheme, TVar, Basic, Pair
from sluice.typecheck import (
    BUILTINS, CheckError, Ctx, GlobalEnv, build_global_env, check_against,
    check_program, dump_types, expose, resolve_type, synth, HeadMsg,
)

from gen import rand_session

TREE_C = parse_type("rec x. +{Leaf: Skip, Node: !Int;x;x;?Int}")


def check_source(source: str):
    prog, diags = parse_program(source)
    assert not diags, [d.message for d in diags]
    return check_program(prog)


def fresh_env() -> GlobalEnv:
    env = GlobalEnv(schemes=dict(BUILTINS))
    env.abbrevs["TreeC"] = TREE_C
    return env


def linear_ctx(**bindings) -> Ctx:
    ctx = Ctx()
    kenv = {"alpha": SL}
    env = fresh_env()
    for name, text in bindings.items():
        ty = resolve_type(env, parse_type(text))
        ctx = ctx.bind(name, ty, synth_kind(kenv, ty), None)
    return ctx


class TestPrograms:
    def test_tree_program_checks(self, tree_source):
        assert check_source(tree_source) == []

    def test_cross_program_checks(self, cross_source):
        assert check_source(cross_source) == []

    def test_cross_doubled_checks(self, cross_doubled_source):
        assert check_source(cross_doubled_source) == []

    def test_main_must_not_be_a_function(self):
        diags = check_source("main : Int -> Int\nmain x = x")
        assert any("non-function" in d.message for d in diags)

    def test_main_must_not_be_a_session(self):
        diags = check_source("main : Skip\nmain = new !Int\n")
        assert diags  # (Skip, ?Int) against Skip, and a session-typed main

    def test_missing_main(self):
        diags = check_source("f : Int\nf = 1")
        assert any("missing main" in d.message for d in diags)

    def test_type_error_is_reported_not_raised(self):
        diags = check_source("f : Int\nf = 1 + True\nmain : Int\nmain = f")
        assert any("f" in d.message for d in diags)

    def test_mutual_recursion(self):
        src = (
            "even : Int -> Bool\n"
            "even n = if n == 0 then True else odd (n - 1)\n"
            "odd : Int -> Bool\n"
            "odd n = if n == 0 then False else even (n - 1)\n"
            "main : Bool\nmain = even 10")
        assert check_source(src) == []


class TestSend:
    def test_send_consumes_channel_not_int(self):
        ctx = linear_ctx(x="Int", c="!Int;alpha")
        env, kenv = fresh_env(), {"alpha": SL}
        ty, residual = synth(ctx, env, kenv, parse_expr("send x c"))
        assert equivalent(ty, TVar("alpha"), kenv)
        assert "c" not in residual.bindings and "c" in residual.consumed
        assert "x" in residual.bindings

    def test_send_against_input_head(self):
        ctx = linear_ctx(x="Int", c="?Int;alpha")
        with pytest.raises(CheckError, match="output"):
            synth(ctx, fresh_env(), {"alpha": SL}, parse_expr("send x c"))

    def test_send_payload_mismatch(self):
        ctx = linear_ctx(x="Bool", c="!Int;alpha")
        with pytest.raises(CheckError, match="!Int"):
            synth(ctx, fresh_env(), {"alpha": SL}, parse_expr("send x c"))


class TestSessionOps:
    def test_new_returns_dual_pair(self):
        env = fresh_env()
        ty, _ = synth(Ctx(), env, {}, parse_expr("new TreeC"))
        assert isinstance(ty, Pair)
        tree_s = parse_type("rec y. &{Leaf: Skip, Node: ?Int;y;y;!Int}")
        assert equivalent(ty.fst, TREE_C)
        assert equivalent(ty.snd, tree_s)

    def test_select_pushes_continuation(self):
        ctx = linear_ctx(c="+{Leaf: Skip, Node: !Int};alpha")
        ty, _ = synth(ctx, fresh_env(), {"alpha": SL}, parse_expr("select Leaf c"))
        assert equivalent(ty, TVar("alpha"), {"alpha": SL})
        ctx = linear_ctx(c="+{Leaf: Skip, Node: !Int};alpha")
        ty, _ = synth(ctx, fresh_env(), {"alpha": SL}, parse_expr("select Node c"))
        assert equivalent(ty, parse_type("!Int;alpha"), {"alpha": SL})

    def test_select_absent_label(self):
        ctx = linear_ctx(c="+{Leaf: Skip};alpha")
        with pytest.raises(CheckError, match="not offered"):
            synth(ctx, fresh_env(), {"alpha": SL}, parse_expr("select Node c"))

    def test_receive_on_skip_rejected(self):
        ctx = linear_ctx(c="Skip")
        with pytest.raises(CheckError, match="input"):
            synth(ctx, fresh_env(), {}, parse_expr("receive c"))

    def test_receive_yields_pair(self):
        ctx = linear_ctx(c="?Bool;alpha")
        ty, _ = synth(ctx, fresh_env(), {"alpha": SL}, parse_expr("receive c"))
        assert isinstance(ty, Pair) and ty.fst == Basic("Bool")

    def test_head_normalization_through_composition(self):
        # ((!Int;Skip);gamma) types like !Int;gamma
        ctx = linear_ctx(x="Int", c="(!Int;Skip);?Bool")
        ty, _ = synth(ctx, fresh_env(), {}, parse_expr("send x c"))
        assert equivalent(ty, parse_type("?Bool"))

    def test_match_requires_external_choice(self):
        ctx = linear_ctx(c="+{Leaf: Skip};alpha")
        with pytest.raises(CheckError, match="external"):
            synth(ctx, fresh_env(), {"alpha": SL},
                  parse_expr("match c with Leaf c -> c"))

    def test_fork_requires_droppable(self):
        ctx = linear_ctx(c="!Int;Skip")
        with pytest.raises(CheckError, match="linear"):
            synth(ctx, fresh_env(), {}, parse_expr("fork c"))

    def test_fork_on_unrestricted_ok(self):
        ty, _ = synth(Ctx(), fresh_env(), {}, parse_expr("fork (1 + 2)"))
        assert ty == S.UNIT


class TestLinearity:
    def test_discarding_linear_channel_rejected(self):
        ctx = linear_ctx(c="!Int;Skip")
        with pytest.raises(CheckError, match="discard"):
            synth(ctx, fresh_env(), {}, parse_expr("let _ = c in 5"))

    def test_discarding_skip_is_legal(self):
        ctx = linear_ctx(c="Skip")
        ty, residual = synth(ctx, fresh_env(), {}, parse_expr("let _ = c in 5"))
        assert ty == Basic("Int")

    def test_unused_linear_binding_rejected(self):
        ctx = linear_ctx(c="!Int;Skip")
        with pytest.raises(CheckError, match="not used"):
            synth(ctx, fresh_env(), {}, parse_expr("let d = c in 5"))

    def test_linear_use_twice_rejected(self):
        ctx = linear_ctx(x="Int", c="!Int;!Int")
        with pytest.raises(CheckError, match="more than once"):
            synth(ctx, fresh_env(), {}, parse_expr("(send x c, send x c)"))

    def test_branches_must_agree_on_linear_consumption(self):
        ctx = linear_ctx(b="Bool", c="!Int;Skip")
        with pytest.raises(CheckError, match="branches disagree"):
            synth(ctx, fresh_env(), {}, parse_expr("if b then let _ = send 1 c in 2 else 2"))

    def test_unrestricted_lambda_cannot_capture_linear(self):
        env = fresh_env()
        ctx = linear_ctx(c="!Int;Skip")
        lam = parse_expr("\\x -> let _ = send x c in 0")
        with pytest.raises(CheckError, match="unrestricted function consumes"):
            check_against(ctx, env, {}, lam, parse_type("Int -> Int"))

    def test_linear_lambda_may_capture_linear(self):
        env = fresh_env()
        ctx = linear_ctx(c="!Int;Skip")
        lam = parse_expr("\\x -o let _ = send x c in 0")
        residual = check_against(ctx, env, {}, lam, parse_type("Int -o Int"))
        assert "c" not in residual.bindings

    def test_shadowing_unconsumed_linear_rejected(self):
        ctx = linear_ctx(c="!Int;Skip")
        with pytest.raises(CheckError, match="shadow"):
            synth(ctx, fresh_env(), {}, parse_expr("let c = 5 in c"))

    def test_residual_is_submap(self):
        rng = random.Random(77)
        ctx = linear_ctx(x="Int", c="!Int;?Bool", d="Skip")
        ty, residual = synth(ctx, fresh_env(), {}, parse_expr("send x c"))
        assert set(residual.bindings) <= set(ctx.bindings)
        dropped = set(ctx.bindings) - set(residual.bindings)
        assert all(ctx.bindings[n][1].mult == S.LINEAR for n in dropped)


class TestTypeApplication:
    TRANSFORM = "forall alpha => Tree -> TreeC;alpha -> (Tree, alpha)"

    def env_with_transform(self):
        src = (
            "type TreeC = +{Leaf: Skip, Node: !Int;TreeC;TreeC;?Int}\n"
            "data Tree = Leaf | Node Int Tree Tree\n"
            f"transform : {self.TRANSFORM}\n"
            "transform tree c = (tree, c)\n"  # body irrelevant here
            "main : Int\nmain = 0\n")
        prog, diags = parse_program(src)
        assert not diags
        env = build_global_env(prog, [])
        return env

    def test_instantiation_matches_by_hand_substitution(self):
        env = self.env_with_transform()
        kenv = {"alpha": SL}
        expr = parse_expr("transform[TreeC;?Int;alpha]")
        ty, _ = synth(Ctx(), env, kenv, expr)
        want = resolve_type(
            env, parse_type("Tree -> TreeC;TreeC;?Int;alpha -> (Tree, TreeC;?Int;alpha)"))
        assert equivalent(ty, want, kenv, datakinds=env.datakinds)

    def test_kind_mismatch_rejected(self):
        env = self.env_with_transform()
        with pytest.raises(CheckError, match="kind"):
            synth(Ctx(), env, {}, parse_expr("transform[Int]"))

    def test_arity_checked(self):
        env = self.env_with_transform()
        with pytest.raises(CheckError, match="type argument"):
            synth(Ctx(), env, {}, parse_expr("transform[Skip, Skip]"))

    def test_polymorphic_name_needs_application(self):
        env = self.env_with_transform()
        with pytest.raises(CheckError, match="type application"):
            synth(Ctx(), env, {}, parse_expr("transform"))

    def test_application_equals_substitution(self):
        rng = random.Random(31)
        for _ in range(60):
            body = rand_session(rng, rng.randint(0, 3), binders=("a",))
            arg = rand_session(rng, rng.randint(0, 3))
            env = GlobalEnv(schemes=dict(BUILTINS))
            env.schemes["f"] = Scheme((("a", SL),), S.Arrow(S.UNRESTRICTED, body, Basic("Int")))
            env.schemes["g"] = Scheme((), S.Arrow(S.UNRESTRICTED, S.subst(body, {"a": arg}),
                                                  Basic("Int")))
            t1, _ = synth(Ctx(), env, {}, S.TypeApp("f", (arg,)))
            t2, _ = synth(Ctx(), env, {}, S.Var("g"))
            assert equivalent(t1, t2)


class TestMutationsSample:
    def test_dropped_rebinding(self, tree_source):
        mutated = tree_source.replace("let c   = send x c in", "let _   = send x c in", 1)
        assert any("c" in d.message for d in check_source(mutated))

    def test_swapped_channel_end(self, tree_source):
        mutated = tree_source.replace("transform[Skip] aTree w", "transform[Skip] aTree r", 1)
        assert check_source(mutated)

    @staticmethod
    def _flip_occurrences(source: str, old: str, new: str):
        start = 0
        while True:
            i = source.find(old, start)
            if i < 0:
                return
            yield source[:i] + new + source[i + len(old):]
            start = i + 1

    def test_every_primitive_flip_is_detected(self, tree_source):
        """Flipping any one send<->receive or select<->match occurrence in the
        tree program produces at least one diagnostic (possibly a parse
        error, since the forms differ in shape)."""
        flips = [("send ", "receive "), ("receive ", "send "),
                 ("select ", "match "), ("match ", "select ")]
        tried = 0
        for old, new in flips:
            for mutated in self._flip_occurrences(tree_source, old, new):
                tried += 1
                prog, parse_diags = parse_program(mutated)
                diags = list(parse_diags)
                if prog is not None and not diags:
                    diags = check_program(prog)
                assert diags, f"undetected flip {old!r}->{new!r}"
        assert tried >= 7


class TestErrorPaths:
    def test_case_on_non_datatype(self):
        diags = check_source("main : Int\nmain = case 3 of A -> 1")
        assert any("datatype" in d.message for d in diags)

    def test_non_exhaustive_match(self):
        ctx = linear_ctx(c="&{Leaf: Skip, Node: !Int};alpha")
        with pytest.raises(CheckError, match="missing Node"):
            synth(ctx, fresh_env(), {"alpha": SL},
                  parse_expr("match c with Leaf c -> c"))

    def test_constructor_pattern_arity(self):
        src = ("data Tree = Leaf | Node Int Tree Tree\n"
               "f : Tree -> Int\n"
               "f t = case t of Leaf -> 0, Node x l -> x\n"
               "main : Int\nmain = f Leaf")
        diags = check_source(src)
        assert any("fields" in d.message for d in diags)

    def test_unknown_type_name_in_signature(self):
        diags = check_source("f : Wibble -> Int\nf x = 0\nmain : Int\nmain = 1")
        assert any("unknown type name Wibble" in d.message for d in diags)

    def test_new_requires_contractive(self):
        diags = check_source("main : Int\nmain = let a, b = new rec x. x;!Int in 1")
        assert diags

    def test_applying_non_function(self):
        diags = check_source("main : Int\nmain = 3 4")
        assert any("non-function" in d.message for d in diags)

    def test_case_must_cover_all_constructors(self):
        src = ("data Tree = Leaf | Node Int Tree Tree\n"
               "f : Tree -> Int\n"
               "f t = case t of Leaf -> 0\n"
               "main : Int\nmain = f Leaf")
        diags = check_source(src)
        assert any("missing Node" in d.message for d in diags)

    def test_duplicate_constructor_across_datatypes(self):
        src = ("data A = Mk\ndata B = Mk Int\n"
               "main : Int\nmain = 1")
        diags = check_source(src)
        assert any("declared twice" in d.message for d in diags)


class TestCheckAgainst:
    def test_accepts_up_to_the_laws(self):
        ctx = linear_ctx(c="Skip;!Int")
        residual = check_against(ctx, fresh_env(), {}, parse_expr("c"), parse_type("!Int"))
        assert "c" not in residual.bindings

    def test_rejects_mismatch_quoting_both_types(self):
        ctx = linear_ctx(c="!Int")
        with pytest.raises(CheckError, match=r"\?Int.*!Int|!Int.*\?Int"):
            check_against(ctx, fresh_env(), {}, parse_expr("c"), parse_type("?Int"))


def test_dump_types(tree_source):
    prog, _ = parse_program(tree_source)
    out = dump_types(prog)
    assert "transform : forall alpha:SL =>" in out
    assert "main : Tree" in out


def test_dump_types_reparses(tree_source):
    from sluice.parser import parse_scheme

    prog, _ = parse_program(tree_source)
    for line in dump_types(prog).splitlines():
        _, scheme_text = line.split(" : ", 1)
        parse_scheme(scheme_text)


def test_expose_exposes_message():
    head = expose(parse_type("(!Int;Skip);?Bool"))
    assert isinstance(head, HeadMsg) and head.polarity == S.OUT
    assert equivalent(head.cont, parse_type("?Bool"))
