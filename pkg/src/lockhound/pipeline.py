"""End-to-end analysis pipeline and report shaping."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .depend import DependResult, affecting_edges
from .errors import DivergedError
from .framework import solve_fi
from .frontend import build_icfa, parse, preprocess
from .frontend.icfa import ICFA
from .lockgraph import (
    CycleSearch, LockEdge, close_lock_edges, enumerate_cycles,
    build_lock_graph, filter_cycles, lockgraph_dot,
)
from .locksets import LocksetResults, solve_locksets
from .nonconc import GraphFacts, NonConcurrency
from .places import MAIN_THREAD, Place, PlaceMap, get_thread
from .pointsto import ObjectModel, PointsToClient, PointsToResult, obj_label

PROVED_FREE = "PROVED_DEADLOCK_FREE"
POTENTIAL = "POTENTIAL_DEADLOCKS"
INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class Config:
    no_depend: bool = False
    no_nonconc: bool = False
    ctx_insensitive: bool = False  # ablation: merge pointer contexts
    cycle_cap: int = 2000
    shuffle_seed: int | None = None


@dataclass
class Analysis:
    """Everything the pipeline computed, for programmatic consumers."""
    icfa: ICFA
    depend: DependResult | None
    pt: PointsToResult
    locks: LocksetResults
    nonconc: NonConcurrency | None
    lock_edges: list[LockEdge]
    search: CycleSearch
    verdict: str
    warnings: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    stats: dict = field(default_factory=dict)
    error: str | None = None

    def reported_cycles(self):
        return [c for c in self.search.cycles if c.pruned_by is None]


def analyze_source(source: str, cfg: Config | None = None) -> Analysis:
    cfg = cfg if cfg is not None else Config()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    prog = preprocess(parse(source))
    icfa = build_icfa(prog)
    timings["frontend"] = time.perf_counter() - t0
    return analyze_icfa(icfa, cfg, timings)


def analyze_icfa(icfa: ICFA, cfg: Config | None = None,
                 timings: dict[str, float] | None = None) -> Analysis:
    cfg = cfg if cfg is not None else Config()
    timings = timings if timings is not None else {}
    warnings = list(icfa.warnings)

    t0 = time.perf_counter()
    dep = None if cfg.no_depend else affecting_edges(icfa)
    timings["depend"] = time.perf_counter() - t0

    model = ObjectModel(icfa)
    client = PointsToClient(model)
    t0 = time.perf_counter()
    try:
        fi = solve_fi(icfa, client,
                      edge_filter=dep.allows if dep is not None else None)
    except DivergedError as ex:
        return _aborted(icfa, dep, warnings, timings, f"pointer analysis: {ex}")
    timings["pointsto"] = time.perf_counter() - t0
    pt = PointsToResult(icfa, model, fi, merge_contexts=cfg.ctx_insensitive)

    t0 = time.perf_counter()
    try:
        locks = solve_locksets(icfa, pt, shuffle_seed=cfg.shuffle_seed)
    except DivergedError as ex:
        return _aborted(icfa, dep, warnings, timings, f"lockset analysis: {ex}")
    timings["locksets"] = time.perf_counter() - t0
    for s in locks.must_client.self_locks:
        warnings.append(
            f"line {s.line}: lock() on {obj_label(s.lock)} already held "
            "on every path here (certain self-deadlock)")

    t0 = time.perf_counter()
    nc = None if cfg.no_nonconc else NonConcurrency(icfa, locks, pt)
    edges = build_lock_graph(icfa, locks, pt)
    # Enumerate over the STAR-closed graph; report the raw edges themselves.
    search = enumerate_cycles(close_lock_edges(edges), cap=cfg.cycle_cap)
    filter_cycles(search, nc)
    timings["lockgraph"] = time.perf_counter() - t0

    if search.truncated:
        warnings.append(
            f"cycle expansion exceeded {cfg.cycle_cap} combinations; "
            "results were truncated (EXPLOSION)")
    reported = [c for c in search.cycles if c.pruned_by is None]
    if reported:
        verdict = POTENTIAL
    elif search.truncated:
        verdict = INCONCLUSIVE
    else:
        verdict = PROVED_FREE

    stats = {
        "locations": len(icfa.locations),
        "edges": len(icfa.edges),
        "places_fs": len(locks.may.places),
        "places_fi": len(fi.places),
        "pointsto_steps": fi.steps,
        "lockset_steps": locks.may.steps + locks.must.steps,
        "binding_applications": client.visits,
        "lock_graph_edges": len(edges),
        "cycles_examined": len(search.cycles),
        "cycles_reported": len(reported),
        "cycles_pruned": len(search.cycles) - len(reported),
        **locks.stats,
    }
    if dep is not None:
        stats["depend"] = dep.stats

    return Analysis(icfa, dep, pt, locks, nc, edges, search, verdict,
                    warnings, timings, stats)


def _aborted(icfa, dep, warnings, timings, msg) -> Analysis:
    model = ObjectModel(icfa)
    empty_pt = PointsToResult(icfa, model, _EmptySolve())
    return Analysis(icfa, dep, empty_pt,
                    LocksetResults(_EmptySolve(), _EmptySolve(), None, None),
                    None, [], CycleSearch(), INCONCLUSIVE,
                    warnings + [msg], timings, {}, error=msg)


class _EmptySolve:
    def __init__(self) -> None:
        self.places = PlaceMap()
        self.states: dict = {}
        self.steps = 0


# ------------------------------------------------------------------ report


def place_str(icfa: ICFA, p: Place) -> str:
    return " > ".join(f"{icfa.func_of(loc)}:{icfa.line_of(loc)}" for loc in p)


def thread_str(icfa: ICFA, t: Place) -> str:
    if t == MAIN_THREAD:
        return "main"
    site = t[-1]
    return f"thread@{icfa.func_of(site)}:{icfa.line_of(site)}"


def report_dict(a: Analysis) -> dict:
    cycles = []
    order = sorted(a.search.cycles,
                   key=lambda c: (c.pruned_by is not None, c.locks,
                                  [e.place for e in c.edges]))
    for c in order:
        cycles.append({
            "locks": c.locks,
            "places": [{
                "callString": place_str(a.icfa, e.place),
                "threadId": thread_str(
                    a.icfa, get_thread(e.place, a.icfa.create_sites)),
            } for e in c.edges],
            "pruned_by": c.pruned_by,
        })
    return {
        "verdict": a.verdict,
        "cycles": cycles,
        "warnings": a.warnings,
        "stats": a.stats,
        "timings": {k: round(v, 6) for k, v in a.timings.items()},
        "error": a.error,
    }


def report_text(a: Analysis, color: bool = False) -> str:
    def paint(s: str, code: str) -> str:
        return f"\x1b[{code}m{s}\x1b[0m" if color else s

    lines = []
    v = a.verdict
    shade = {"PROVED_DEADLOCK_FREE": "32", "POTENTIAL_DEADLOCKS": "31"}.get(v, "33")
    lines.append(paint(f"verdict: {v}", shade))
    reported = a.reported_cycles()
    pruned = [c for c in a.search.cycles if c.pruned_by is not None]
    lines.append(f"lock graph: {len(a.lock_edges)} edge(s); "
                 f"{len(a.search.cycles)} cycle candidate(s), "
                 f"{len(reported)} reported, {len(pruned)} pruned")
    for i, c in enumerate(sorted(reported, key=lambda c: c.locks)):
        lines.append(paint(f"  cycle {i + 1}: locks {' -> '.join(c.locks)}", "31"))
        for e in c.edges:
            t = thread_str(a.icfa, get_thread(e.place, a.icfa.create_sites))
            lines.append(f"    holds {obj_label(e.held)}, wants "
                         f"{obj_label(e.acquired)} at {place_str(a.icfa, e.place)}"
                         f" [{t}]")
    for c in pruned:
        lines.append(f"  pruned ({c.pruned_by}): locks {' -> '.join(c.locks)}")
    for w in a.warnings:
        lines.append(paint(f"warning: {w}", "33"))
    if a.timings:
        total = sum(a.timings.values())
        lines.append(f"time: {total:.3f}s ("
                     + ", ".join(f"{k} {v:.3f}s" for k, v in a.timings.items())
                     + ")")
    return "\n".join(lines) + "\n"


def icfa_dot(a: Analysis) -> str:
    return a.icfa.to_dot()


def lock_dot(a: Analysis) -> str:
    return lockgraph_dot(a.lock_edges)
