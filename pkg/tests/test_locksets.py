from checks import check_may_covers, check_must_subset
from conftest import analyzed, icfa_of
from lockhound.frontend.icfa import Edge, LockOp, ThreadEntryOp, UnlockOp
from lockhound.frontend.syntax import VarRef
from lockhound.generator import generate, random_config
from lockhound.locksets import MayLockset, MustLockset, solve_locksets
from lockhound.pipeline import analyze_source
from lockhound.pointsto import GlobalObj, STAR


class StubPt:
    """Points-to stand-in: one preset answer per query."""

    def __init__(self, answer):
        self.answer = answer

    def value_set(self, p, expr, at_sync=False):
        return self.answer


M1, M2 = GlobalObj("m1"), GlobalObj("m2")
ARG = VarRef("p")


def lock_edge():
    return Edge(0, 0, 1, LockOp(ARG), 1)


def unlock_edge():
    return Edge(0, 0, 1, UnlockOp(ARG), 1)


def test_may_transfer():
    may = MayLockset(StubPt(frozenset([M1])))
    assert may.transfer(lock_edge(), (0,), frozenset()) == {M1}
    assert may.transfer(unlock_edge(), (0,), frozenset([M1, M2])) == {M2}
    may = MayLockset(StubPt(STAR))
    assert may.transfer(lock_edge(), (0,), frozenset()) == {STAR}
    # ambiguous release keeps everything possibly held
    assert may.transfer(unlock_edge(), (0,), frozenset([M1, STAR])) == {M1, STAR}
    may = MayLockset(StubPt(frozenset([M1, M2])))
    assert may.transfer(unlock_edge(), (0,), frozenset([M1, M2])) == {M1, M2}
    te = Edge(0, 0, 1, ThreadEntryOp(VarRef("f"), ARG, "w::a"), 1)
    assert may.transfer(te, (0,), frozenset([M1])) == frozenset()


def test_must_transfer():
    must = MustLockset(StubPt(frozenset([M1])))
    assert must.transfer(lock_edge(), (0,), frozenset()) == {M1}
    assert must.transfer(unlock_edge(), (0,), frozenset([M1, M2])) == {M2}
    # ambiguous acquisition cannot be definitely held
    must = MustLockset(StubPt(frozenset([M1, M2])))
    assert must.transfer(lock_edge(), (0,), frozenset()) == frozenset()
    # ambiguous release removes everything it might hit
    assert must.transfer(unlock_edge(), (0,), frozenset([M1, M2])) == frozenset()
    must = MustLockset(StubPt(STAR))
    assert must.transfer(lock_edge(), (0,), frozenset()) == frozenset()
    assert must.transfer(unlock_edge(), (0,), frozenset([M1])) == frozenset()
    assert must.join(frozenset([M1, M2]), frozenset([M2])) == {M2}


def test_self_lock_report():
    must = MustLockset(StubPt(frozenset([M1])))
    out = must.transfer(lock_edge(), (7,), frozenset([M1]))
    assert out == {M1}
    (rep,) = must.self_locks
    assert rep.place == (7,) and rep.lock == M1
    # the same place is reported once
    must.transfer(lock_edge(), (7,), frozenset([M1]))
    assert len(must.self_locks) == 1


def locksets_by_line(a):
    """(may, must) at the source of each lock/unlock edge, keyed by line."""
    out = {}
    may = a.locks.may
    must = a.locks.must
    for pid in may.states:
        p = may.places.resolve(pid)
        for e in a.icfa.out_edges[p[-1]]:
            if isinstance(e.op, (LockOp, UnlockOp)):
                mpid = must.places.lookup(p)
                out[e.line] = (a.locks.may_at(pid),
                               a.locks.must_at(mpid) if mpid is not None else None)
    return out


def test_straight_line_sets():
    src = """
        mutex m1; mutex m2;
        int main() {
            lock(&m1);
            lock(&m2);
            unlock(&m2);
            unlock(&m1);
            return 0;
        }
    """
    a = analyze_source(src)
    by_line = locksets_by_line(a)
    assert by_line[4] == (frozenset(), frozenset())          # entering lock(&m1)
    assert by_line[5] == (frozenset([M1]), frozenset([M1]))  # entering lock(&m2)
    assert by_line[6] == (frozenset([M1, M2]), frozenset([M1, M2]))
    assert by_line[7] == (frozenset([M1]), frozenset([M1]))


def test_branch_merge_may_union_must_intersection():
    src = """
        mutex m1; mutex m2;
        int g;
        int main() {
            if (g) { lock(&m1); }
            lock(&m2);
            unlock(&m2);
            if (g) { unlock(&m1); }
            return 0;
        }
    """
    a = analyze_source(src)
    by_line = locksets_by_line(a)
    may, must = by_line[6]  # entering lock(&m2) after the branch merge
    assert may == frozenset([M1])
    assert must == frozenset()
    may, must = by_line[7]  # entering unlock(&m2)
    assert may == frozenset([M1, M2])
    assert must == frozenset([M2])


def test_thread_starts_with_empty_sets():
    src = """
        mutex m1; mutex m2;
        int worker(int x) {
            lock(&m2);
            unlock(&m2);
            return 0;
        }
        int main() {
            thread_t t;
            lock(&m1);
            create(&t, worker, 0);
            join(t);
            unlock(&m1);
            return 0;
        }
    """
    a = analyze_source(src)
    by_line = locksets_by_line(a)
    # the worker's acquisition does not inherit main's held lock
    assert by_line[4] == (frozenset(), frozenset())
    assert by_line[5] == (frozenset([M2]), frozenset([M2]))
    # main still holds m1 at the final unlock
    assert by_line[13][0] == frozenset([M1])


def test_pipeline_self_lock_diagnostic():
    a = analyze_source("""
        mutex ma;
        int main() {
            lock(&ma);
            lock(&ma);
            unlock(&ma);
            unlock(&ma);
            return 0;
        }
    """)
    assert a.stats["self_locks"] == 1
    (rep,) = a.locks.must_client.self_locks
    assert rep.line == 5
    assert repr(rep.lock) == "ma"


def test_star_lock_sticks_in_may():
    src = """
        mutex ma;
        int x;
        int main() {
            mutex* p;
            p = x;
            lock(p);
            lock(&ma);
            unlock(&ma);
            unlock(p);
            return 0;
        }
    """
    a = analyze_source(src)
    by_line = locksets_by_line(a)
    may, must = by_line[8]  # entering lock(&ma)
    assert STAR in may
    assert must == frozenset()  # nothing is definitely held via p


def test_solver_results_order_independent(showcase_icfa):
    a = analyze_source_fixture(showcase_icfa)
    base = sets_by_place(a)
    for seed in (3, 11):
        model_pt = a.pt
        shuffled = solve_locksets(showcase_icfa, model_pt, shuffle_seed=seed)
        assert sets_by_place_raw(shuffled) == base


def analyze_source_fixture(icfa):
    from lockhound.pipeline import analyze_icfa
    return analyze_icfa(icfa)


def sets_by_place(a):
    return sets_by_place_raw(a.locks)


def sets_by_place_raw(locks):
    may = {locks.may.places.resolve(pid): ls
           for pid, (_, ls) in locks.may.states.items()}
    must = {locks.must.places.resolve(pid): ls
            for pid, (_, ls) in locks.must.states.items()}
    return may, must


def test_order_independence_on_corpus():
    for seed in range(15):
        src = generate(seed, random_config(seed))
        icfa = icfa_of(src)
        from lockhound.pipeline import analyze_icfa
        a = analyze_icfa(icfa)
        base = sets_by_place(a)
        other = solve_locksets(icfa, a.pt, shuffle_seed=seed + 99)
        assert sets_by_place_raw(other) == base, f"seed {seed}"


def test_soundness_against_oracle_fixtures():
    for name in ("showcase.mc", "wrapper_ok.mc", "mutant_nogate.mc",
                 "mutant_heap.mc", "mutant_ring.mc"):
        from conftest import load
        a, res = analyzed(load(name))
        assert res is not None
        assert check_may_covers(a, res) == [], name
        assert check_must_subset(a, res) == [], name


def test_soundness_against_oracle_corpus():
    checked = 0
    for seed in range(25):
        src = generate(seed, random_config(seed))
        a, res = analyzed(src)
        if res is None:
            continue
        assert check_may_covers(a, res) == [], f"seed {seed}"
        assert check_must_subset(a, res) == [], f"seed {seed}"
        checked += 1
    assert checked >= 15
