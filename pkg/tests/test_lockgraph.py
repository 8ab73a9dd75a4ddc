"""Lock-order graph construction, STAR closure, and cycle reporting."""

import random
from collections import Counter

from conftest import icfa_of, load
from lockhound.generator import generate
from lockhound.lockgraph import (
    Cycle,
    CycleSearch,
    LockEdge,
    cl,
    close_lock_edges,
    edge_locks,
    enumerate_cycles,
    filter_cycles,
    find_deadlocks,
    lockgraph_dot,
    pair_concurrent,
)
from lockhound.pipeline import POTENTIAL, PROVED_FREE, Config, analyze_icfa
from lockhound.pointsto import STAR, GlobalObj, obj_label

A, B, C = GlobalObj("a"), GlobalObj("b"), GlobalObj("c")
P, Q = ("p",), ("q",)


def edge(held, acquired, place=P, line=1) -> LockEdge:
    return LockEdge(held, place, acquired, line)


def label_pairs(edges):
    return Counter((obj_label(e.held), obj_label(e.acquired)) for e in edges)


# ------------------------------------------------------------ built graph


def test_showcase_lock_graph_edges(showcase_icfa):
    a = analyze_icfa(showcase_icfa)
    assert len(a.lock_edges) == 8
    assert label_pairs(a.lock_edges) == Counter({
        ("m1", "m2"): 2,   # thread1 and main both order m1 before m2
        ("m1", "m3"): 2,
        ("m2", "m3"): 1,
        ("m3", "m2"): 1,
        ("m4", "m5"): 1,
        ("m5", "m4"): 1,
    })
    assert a.verdict == PROVED_FREE
    assert sorted(c.pruned_by for c in a.search.cycles) == [
        "create_join", "gatelock"]
    assert {frozenset(c.locks) for c in a.search.cycles} == {
        frozenset({"m2", "m3"}), frozenset({"m4", "m5"})}


def test_find_deadlocks_agrees_with_pipeline(showcase_icfa):
    a = analyze_icfa(showcase_icfa)
    edges, search = find_deadlocks(showcase_icfa, a.locks, a.pt, a.nonconc)
    assert label_pairs(edges) == label_pairs(a.lock_edges)
    assert len(search.cycles) == len(a.search.cycles)
    assert {frozenset(c.locks) for c in search.cycles} == \
        {frozenset(c.locks) for c in a.search.cycles}


# ------------------------------------------------------------ triple closure


def test_cl_star_tail_expands_to_every_lock():
    L = frozenset({("a", P, STAR), ("b", Q, "c")})
    assert cl(L) == frozenset({
        ("a", P, STAR), ("b", Q, "c"),
        ("a", P, "a"), ("a", P, "b"), ("a", P, "c"),
    })


def test_cl_star_head_expands_to_every_lock():
    L = frozenset({(STAR, P, "a"), ("b", Q, "c")})
    assert cl(L) == frozenset({
        (STAR, P, "a"), ("b", Q, "c"),
        ("a", P, "a"), ("b", P, "a"), ("c", P, "a"),
    })


def test_cl_both_star_expands_to_all_pairs():
    L = frozenset({(STAR, P, STAR), ("a", Q, "b")})
    every = {"a", "b", STAR}
    assert cl(L) == frozenset(
        {(x, P, y) for x in every for y in every} | {("a", Q, "b")})


def _random_triples(rng, with_star=True):
    locks = ["a", "b", "c", "d"] + ([STAR] if with_star else [])
    places = [P, Q, ("r",)]
    n = rng.randint(1, 5)
    return frozenset(
        (rng.choice(locks), rng.choice(places), rng.choice(locks))
        for _ in range(n))


def test_cl_identity_without_star():
    rng = random.Random(11)
    for _ in range(200):
        s = _random_triples(rng, with_star=False)
        assert cl(s) == s


def test_cl_algebra():
    rng = random.Random(12)
    for _ in range(200):
        s = _random_triples(rng)
        closed = cl(s)
        assert s <= closed                       # extensive
        assert cl(closed) == closed              # idempotent
        assert edge_locks(closed) == edge_locks(s)  # mentions no new locks
        t = s | _random_triples(rng)
        assert closed <= cl(t)                   # monotone


def test_cl_two_edge_paths_cover_value_set_products():
    # Two acquisitions whose static value sets share at least one possible
    # lock must, after closure, be linkable by a two-edge path for every
    # choice of held/acquired lock: this is what makes cycle enumeration on
    # the closed graph sound when STAR stands in for unknown locks.
    rng = random.Random(13)
    universe = ["l0", "l1", "l2", "l3", "l4"]

    def concretize(ls):
        return set(universe) if STAR in ls else set(ls)

    done = 0
    while done < 500:
        sets = [frozenset(rng.sample(universe + [STAR], rng.randint(1, 3)))
                for _ in range(4)]
        ls1, ls2, ls3, ls4 = sets
        if not (concretize(ls2) & concretize(ls3)):
            continue  # the acquisitions cannot be the same lock
        done += 1
        L = frozenset({(a, P, b) for a in ls1 for b in ls2}
                      | {(a, Q, b) for a in ls3 for b in ls4})
        closed = cl(L)
        linkers = edge_locks(L) | {STAR}
        for l1 in ls1:
            for l2 in ls4:
                assert any((l1, P, x) in closed and (x, Q, l2) in closed
                           for x in linkers), (ls1, ls2, ls3, ls4, l1, l2)


# ------------------------------------------------------------ edge closure


def test_close_lock_edges_spawns_concrete_variants():
    raw = [edge(A, STAR, place=P, line=3), edge(B, A, place=Q, line=9)]
    closed = close_lock_edges(raw)
    assert closed[:2] == raw  # originals first, untouched
    spawned = closed[2:]
    assert all(e.place == P and e.line == 3 for e in spawned)
    assert label_pairs(spawned) == Counter({("a", "a"): 1, ("a", "b"): 1})
    keys = [(obj_label(e.held), e.place, obj_label(e.acquired))
            for e in closed]
    assert len(keys) == len(set(keys))  # no duplicates


def test_close_lock_edges_identity_without_star(showcase_icfa):
    a = analyze_icfa(showcase_icfa)
    assert close_lock_edges(a.lock_edges) == a.lock_edges


def test_closure_lets_star_cycle_surface():
    raw = [edge(A, STAR, place=P, line=3), edge(B, A, place=Q, line=9)]
    assert enumerate_cycles(raw).cycles == []  # a->*, b->a: no raw cycle
    search = enumerate_cycles(close_lock_edges(raw))
    assert len(search.cycles) == 1
    assert sorted(search.cycles[0].locks) == ["a", "b"]
    assert set(search.cycles[0].places) == {P, Q}


STAR_CYCLE_SRC = """
mutex m1;
mutex m2;

int t1(int x) {
  lock(&m2);
  lock(&m1);
  unlock(&m1);
  unlock(&m2);
  return 0;
}

int main() {
  thread_t t;
  create(&t, t1, 0);
  lock(&m1);
  mutex* p;
  lock(p);
  unlock(p);
  unlock(&m1);
  join(t);
  return 0;
}
"""


def test_star_cycle_reported_end_to_end():
    # Main acquires an unresolved lock while holding m1; the thread orders
    # m2 before m1. The raw graph is acyclic (the unresolved node has no
    # outgoing edge), so only the closure exposes the m1/m2 reversal.
    a = analyze_icfa(icfa_of(STAR_CYCLE_SRC))
    assert a.verdict == POTENTIAL
    assert any(frozenset(c.locks) == frozenset({"m1", "m2"})
               for c in a.reported_cycles())
    # Reported edges stay raw: two of them, one with the unresolved target.
    assert len(a.lock_edges) == 2
    assert "*" in {obj_label(e.acquired) for e in a.lock_edges}
    # Without the closure the candidate is invisible.
    assert enumerate_cycles(a.lock_edges).cycles == []


# ------------------------------------------------------------ enumeration


def test_enumerate_parallel_edges_multiply():
    raw = [edge(A, B, place=("p2",), line=2),
           edge(A, B, place=("p1",), line=1),
           edge(B, A, place=Q, line=3)]
    search = enumerate_cycles(raw)
    assert len(search.cycles) == 2
    assert search.combos_seen == 2
    assert not search.truncated
    # Cycles start from the smallest lock and expand pools in line order.
    first, second = search.cycles
    assert [e.line for e in first.edges] == [1, 3]
    assert [e.line for e in second.edges] == [2, 3]
    assert first.locks == ["b", "a"]


def test_enumerate_cap_truncates():
    raw = [edge(A, B, place=("p1",), line=1),
           edge(A, B, place=("p2",), line=2),
           edge(B, A, place=Q, line=3)]
    search = enumerate_cycles(raw, cap=1)
    assert search.truncated
    assert search.combos_seen == 1
    assert len(search.cycles) == 1


def test_enumerate_skips_single_lock_loops():
    search = enumerate_cycles([edge(A, A, place=P, line=1)])
    assert search.cycles == []
    assert search.combos_seen == 0
    assert not search.truncated


def test_enumerate_orders_short_cycles_first():
    raw = [edge(A, B, line=1), edge(B, C, line=2), edge(C, A, line=3),
           edge(C, B, line=4)]
    search = enumerate_cycles(raw)
    sizes = [len(c.edges) for c in search.cycles]
    assert sizes == sorted(sizes)
    assert sizes[0] == 2 and sizes[-1] == 3
    assert sorted(search.cycles[0].locks) == ["b", "c"]


# ------------------------------------------------------------ pruning


class _FakeNC:
    """check() stand-in that prunes exactly one unordered place pair."""

    def __init__(self, bad_pair, reason="gatelock"):
        self.bad_pair = frozenset(bad_pair)
        self.reason = reason

    def check(self, p1, p2):
        return self.reason if frozenset({p1, p2}) == self.bad_pair else None


def test_pair_concurrent_delegates():
    nc = _FakeNC({P, Q}, reason="create_join")
    assert pair_concurrent(nc, P, Q) == (False, "create_join")
    assert pair_concurrent(nc, P, ("r",)) == (True, None)


def test_filter_cycles_marks_failed_pair():
    cyc = Cycle(edges=(edge(A, B, place=P, line=1),
                       edge(B, A, place=Q, line=2)))
    search = CycleSearch(cycles=[cyc])
    filter_cycles(search, _FakeNC({P, Q}))
    assert cyc.pruned_by == "gatelock"
    assert set(cyc.failed_pair) == {P, Q}

    kept = Cycle(edges=(edge(A, B, place=P, line=1),
                        edge(B, A, place=("r",), line=2)))
    search = CycleSearch(cycles=[kept])
    filter_cycles(search, _FakeNC({P, Q}))
    assert kept.pruned_by is None and kept.failed_pair is None


def test_filter_cycles_without_nc_keeps_everything():
    cyc = Cycle(edges=(edge(A, B, place=P, line=1),
                       edge(B, A, place=Q, line=2)))
    search = CycleSearch(cycles=[cyc])
    filter_cycles(search, None)
    assert cyc.pruned_by is None


def _report_keys(a):
    return Counter((tuple(c.locks), tuple(c.places))
                   for c in a.reported_cycles())


def test_disabling_concurrency_pruning_only_adds_reports():
    sources = [load(n) for n in
               ("showcase.mc", "wrapper_ok.mc", "mutant_nogate.mc",
                "mutant_nojoin.mc", "mutant_double.mc")]
    sources += [generate(seed) for seed in range(20)]
    for src in sources:
        icfa = icfa_of(src)
        with_prune = _report_keys(analyze_icfa(icfa))
        without = _report_keys(analyze_icfa(icfa, Config(no_nonconc=True)))
        assert with_prune <= without


# ------------------------------------------------------------ dot output


def test_lockgraph_dot_shape():
    raw = [edge(A, STAR, place=P, line=3), edge(B, A, place=Q, line=9)]
    dot = lockgraph_dot(raw)
    assert dot.startswith("digraph lockgraph {")
    assert '"*" [label="*", style=dashed];' in dot
    assert '"a" -> "*" [label="line 3"];' in dot
    assert '"b" -> "a" [label="line 9"];' in dot
