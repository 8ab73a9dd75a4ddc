import pytest

from conftest import icfa_of, load
from lockhound.errors import MissingMainError, ParseError, TypeCheckError
from lockhound.frontend import build_icfa, parse, preprocess, remove_fp_calls, single_exit
from lockhound.frontend.lexer import tokenize
from lockhound.frontend.icfa import (
    CreateOp, FuncEntryOp, FuncExitOp, JoinOp, LockOp, ThreadEntryOp,
    ThreadExitOp, ThreadJoinOp, UnlockOp,
)
from lockhound.frontend.syntax import (
    INT, MUTEX, Binary, Block, FuncRef, If, IntLit, PointerType, Return,
    StructType, Unary, VarRef,
)
from lockhound.frontend.transform import address_taken_functions


# ----------------------------------------------------------------- lexer


def test_tokenize_kinds():
    toks = tokenize("int x; x = x + 41; // tail\n")
    assert [(t.kind, t.text) for t in toks[:4]] == [
        ("kw", "int"), ("ident", "x"), (";", ";"), ("ident", "x")]
    assert toks[-1].kind == "eof"
    assert [t.text for t in toks if t.kind == "int"] == ["41"]


def test_tokenize_longest_symbol_wins():
    toks = tokenize("a->b == c - > d")
    kinds = [t.kind for t in toks[:-1]]
    assert kinds == ["ident", "->", "ident", "==", "ident", "-", ">", "ident"]


def test_tokenize_positions_and_comments():
    toks = tokenize("/* skip\nme */ x\n  y")
    assert [(t.text, t.line, t.col) for t in toks[:-1]] == [("x", 2, 7), ("y", 3, 3)]


def test_tokenize_errors():
    with pytest.raises(ParseError):
        tokenize("int $;")
    with pytest.raises(ParseError):
        tokenize("/* never closed")


# ---------------------------------------------------------------- parser


def test_parse_shapes_and_qualification():
    prog = parse("""
        struct pair { int a; mutex m; };
        mutex g;
        int t[3];
        int helper(int v) { int loc; loc = v + 1; return loc; }
        int main() { int z; z = helper(2); return z; }
    """)
    assert set(prog.functions) == {"helper", "main"}
    assert set(prog.globals) == {"g", "t"}
    assert [d.name for d in prog.structs["pair"]] == ["a", "m"]
    helper = prog.functions["helper"]
    assert [p.name for p in helper.params] == ["helper::v"]
    assert [d.name for d in helper.locals] == ["helper::loc"]
    assert prog.var_types["helper::loc"] == INT
    assert prog.var_types["g"] == MUTEX


def test_parse_expression_structure():
    prog = parse("int main() { int a; int b; a = 0; b = a + 1 == 2; return b; }")
    assign = prog.functions["main"].body.stmts[3]
    assert isinstance(assign.rhs, Binary) and assign.rhs.op == "=="
    assert isinstance(assign.rhs.left, Binary) and assign.rhs.left.op == "+"


def test_parse_function_pointer_declarator():
    prog = parse("""
        int f(int x) { return x; }
        int main() { int (*fp)(int); int r; fp = f; r = fp(1); return r; }
    """)
    fp_t = prog.var_types["main::fp"]
    assert isinstance(fp_t, PointerType) and fp_t.pointee.params == (INT,)
    assign = prog.functions["main"].body.stmts[2]
    assert isinstance(assign.rhs, FuncRef) and assign.rhs.name == "f"


def test_parse_field_and_deref():
    prog = parse("""
        struct node { mutex m; int v; };
        struct node *h;
        int main() { h = malloc(struct node); h->v = 1; lock(&h->m); unlock(&h->m); return 0; }
    """)
    lockstmt = prog.functions["main"].body.stmts[2]
    assert isinstance(lockstmt.arg, Unary) and lockstmt.arg.op == "&"
    assert lockstmt.arg.operand.arrow and lockstmt.arg.operand.name == "m"


@pytest.mark.parametrize("src,err", [
    ("int main() { return 0 }", ParseError),
    ("int main() { lock(5); return 0; }", TypeCheckError),
    ("mutex m; int main() { lock(m); return 0; }", TypeCheckError),  # needs mutex*
    ("int main(int x) { return 0; }", TypeCheckError),
    ("void main() { }", TypeCheckError),
    ("int f() { return 1; } int f() { return 2; }", ParseError),
    ("int main() { int x; int x; return 0; }", TypeCheckError),
    ("int main() { y = 1; return 0; }", TypeCheckError),
    ("int main() { int p; p = malloc(void); return 0; }", TypeCheckError),
    ("struct s { struct t x; }; int main() { return 0; }", TypeCheckError),
    ("int w(int a) { return 0; } int main() { thread_t t; create(t, w, 0); return 0; }",
     TypeCheckError),  # create needs thread_t*
    ("void w(int a) { } int main() { thread_t t; create(&t, w, 0); return 0; }",
     TypeCheckError),  # thread functions return int
    ("int main() { struct nope *p; return 0; }", TypeCheckError),
    ("int main() { if (1) { } return 0; }", None),
])
def test_parse_and_check_errors(src, err):
    if err is None:
        parse(src)
    else:
        with pytest.raises(err):
            parse(src)


# ------------------------------------------------------------- transforms


def test_single_exit_rewrites_early_returns():
    prog = parse("""
        int f(int x) { if (x == 0) { return 7; } return x; }
        int main() { int r; r = f(1); return r; }
    """)
    single_exit(prog)
    f = prog.functions["f"]
    returns = [s for s in f.body.stmts if isinstance(s, Return)]
    assert len(returns) == 1 and f.body.stmts[-1] is returns[0]
    assert isinstance(returns[0].expr, VarRef) and returns[0].expr.name == "f::__ret"
    before = [type(s).__name__ for s in f.body.stmts]
    single_exit(prog)  # idempotent
    assert [type(s).__name__ for s in prog.functions["f"].body.stmts] == before


def test_address_taken_and_fp_dispatch():
    prog = parse("""
        int w1(int a) { return 1; }
        int w2(int a) { return 2; }
        int other(int a, int b) { return a; }
        int main() {
            int (*fp)(int);
            int r;
            fp = w1;
            if (0) { fp = w2; }
            r = fp(3);
            return r;
        }
    """)
    assert address_taken_functions(prog) == {"w1", "w2"}
    remove_fp_calls(prog)
    body = prog.functions["main"].body.stmts
    disp = body[4]
    assert isinstance(disp, If)  # if (fp == w1) ... else if (fp == w2) ...
    assert disp.cond.op == "==" and disp.cond.right.name == "w1"
    inner = disp.els.stmts[0]
    assert isinstance(inner, If) and inner.cond.right.name == "w2"
    assert inner.then.stmts[0].callee.name == "w2"


def test_fp_call_with_no_candidates_warns():
    prog = parse("""
        int main() { int (*fp)(int); int r; r = fp(3); return r; }
    """)
    remove_fp_calls(prog)
    assert any("no candidates" in w for w in prog.warnings)


# ------------------------------------------------------------------ icfa


def test_icfa_requires_main():
    with pytest.raises(MissingMainError):
        icfa_of("int f() { return 0; }")


def test_icfa_showcase_wiring(showcase_icfa):
    icfa = showcase_icfa
    assert icfa.entry_fn == "main"
    assert set(icfa.functions) == {"thread1", "func2", "main"}
    assert icfa.thread_entry_sources() == {18}

    kinds = {}
    for e in icfa.edges:
        kinds.setdefault(type(e.op).__name__, []).append(e)
    assert len(kinds["LockOp"]) == 10 and len(kinds["UnlockOp"]) == 10
    assert len(kinds["ThreadEntryOp"]) == 1
    te = kinds["ThreadEntryOp"][0]
    assert icfa.func_of(te.tgt) == "thread1" and te.src == 18

    # the thread's exit resumes after the create and feeds the join target
    tx = kinds["ThreadExitOp"][0]
    assert tx.call_site == 18 and icfa.func_of(tx.tgt) == "main"
    tj = kinds["ThreadJoinOp"][0]
    join_edges = [e for e in icfa.edges if isinstance(e.op, JoinOp)]
    assert len(join_edges) == 1 and tj.tgt == join_edges[0].tgt

    # direct call wiring for func2: entry from main, exit back after the call
    fe = [e for e in kinds["FuncEntryOp"] if icfa.func_of(e.tgt) == "func2"]
    fx = [e for e in kinds["FuncExitOp"] if icfa.func_of(e.src) == "func2"]
    assert len(fe) == 1 and len(fx) == 1
    assert fx[0].call_site == fe[0].src
    assert icfa.func_of(fx[0].tgt) == "main"

    # no plain intra edge skips over a call site
    call_src = fe[0].src
    assert all(isinstance(e.op, FuncEntryOp) for e in icfa.out_edges[call_src])


def test_icfa_seed_and_lock_helpers(showcase_icfa):
    icfa = showcase_icfa
    seeds = icfa.seed_edges()
    assert {type(e.op).__name__ for e in seeds} == \
        {"LockOp", "UnlockOp", "CreateOp", "JoinOp"}
    assert len(icfa.lock_edges()) == 10
    assert icfa.place_length_bound() >= 3


def test_icfa_dead_function_warning():
    icfa = icfa_of("""
        void unused() { }
        int main() { return 0; }
    """)
    assert list(icfa.dead_functions()) == ["unused"]
    assert any("unused" in w for w in icfa.warnings)


def test_icfa_to_dot_smoke(showcase_icfa):
    dot = showcase_icfa.to_dot()
    assert dot.startswith("digraph") and "thread1" in dot
