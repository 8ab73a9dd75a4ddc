"""Seeded random program generator for differential testing.

Emitted programs are well-defined by construction: every local is written
before it is read, lock/unlock pairs nest properly per scope, loops are
bounded, and joins only target threads that were certainly created. Lock
ORDER is deliberately random, so a fair share of programs can deadlock —
that's the point: the reference executor decides which.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass
class GenConfig:
    max_threads: int = 3        # created threads (main comes on top)
    max_locks: int = 4
    wrappers: bool = False      # route some lock ops through helper functions
    heap: bool = False          # a heap-allocated record carrying a mutex
    loop_create: bool = False   # start threads from a bounded loop
    join_style: str = "maybe"   # "always" | "never" | "maybe"
    max_regions: int = 3        # lock regions per body
    max_depth: int = 2          # region nesting
    noise: bool = True          # irrelevant integer traffic for pruning tests
    star: bool = False          # launder one lock address through an int


class _Writer:
    def __init__(self) -> None:
        self.lines: list[str] = []
        self.depth = 0

    def put(self, s: str = "") -> None:
        self.lines.append("    " * self.depth + s if s else "")

    def text(self) -> str:
        return "\n".join(self.lines) + "\n"


class _Gen:
    def __init__(self, seed: int, cfg: GenConfig):
        self.rng = random.Random(seed)
        self.cfg = cfg
        self.w = _Writer()
        self.n_locks = self.rng.randint(2, max(2, cfg.max_locks))
        self.n_threads = self.rng.randint(1, max(1, cfg.max_threads))
        self.fresh = 0

    def name(self, base: str) -> str:
        self.fresh += 1
        return f"{base}{self.fresh}"

    # ------------------------------------------------------------- pieces

    def lock_exprs(self, held: list[str]) -> list[tuple[str, str]]:
        """(lock expression, key) pairs currently legal to acquire."""
        out = []
        for i in range(self.n_locks):
            key = f"m{i}"
            if key not in held:
                out.append((f"&m{i}", key))
        if self.cfg.heap and "heap" not in held:
            out.append(("&h->m", "heap"))
        if self.cfg.star and "m0" not in held:
            out.append(("q", "m0"))  # q is laundered &m0
        return out

    def emit_noise(self) -> None:
        if self.cfg.noise and self.rng.random() < 0.5:
            if self.rng.random() < 0.5:
                self.w.put("tick();")
            else:
                self.w.put("g0 = g0 + 1;")

    def emit_region(self, held: list[str], depth: int) -> None:
        choices = self.lock_exprs(held)
        if not choices:
            return
        expr, key = self.rng.choice(choices)
        use_wrap = self.cfg.wrappers and not expr == "q" and self.rng.random() < 0.5
        self.w.put(f"acquire({expr});" if use_wrap else f"lock({expr});")
        held.append(key)
        self.emit_noise()
        if depth < self.cfg.max_depth and self.rng.random() < 0.55:
            self.emit_region(held, depth + 1)
        self.emit_noise()
        held.pop()
        self.w.put(f"release({expr});" if use_wrap else f"unlock({expr});")

    def emit_body(self, arg: str | None) -> None:
        n = self.rng.randint(1, self.cfg.max_regions)
        for _ in range(n):
            style = self.rng.random()
            if style < 0.2 and arg is not None:
                self.w.put(f"if ({arg} == 0) {{")
                self.w.depth += 1
                self.emit_region([], 0)
                self.w.depth -= 1
                self.w.put("} else {")
                self.w.depth += 1
                self.emit_region([], 0)
                self.w.depth -= 1
                self.w.put("}")
            elif style < 0.35:
                i = self.name("i")
                self.w.put(f"int {i};")
                self.w.put(f"{i} = 0;")
                self.w.put(f"while ({i} < 2) {{")
                self.w.depth += 1
                self.emit_region([], 0)
                self.w.put(f"{i} = {i} + 1;")
                self.w.depth -= 1
                self.w.put("}")
            else:
                self.emit_region([], 0)
            self.emit_noise()

    # ------------------------------------------------------------ program

    def generate(self) -> str:
        w = self.w
        cfg = self.cfg
        if cfg.heap:
            w.put("struct node { mutex m; int v; };")
            w.put("")
        for i in range(self.n_locks):
            w.put(f"mutex m{i};")
        w.put("int g0;")
        w.put("int g1;")
        if cfg.heap:
            w.put("struct node *h;")
        if cfg.star:
            w.put("int laundry;")
            w.put("mutex *q;")
        w.put("")
        if cfg.noise:
            w.put("void tick() {")
            w.put("    g0 = g0 + 1;")
            w.put("}")
            w.put("")
        if cfg.wrappers:
            w.put("void acquire(mutex *x) {")
            w.put("    lock(x);")
            w.put("}")
            w.put("")
            w.put("void release(mutex *x) {")
            w.put("    unlock(x);")
            w.put("}")
            w.put("")
        for t in range(self.n_threads):
            w.put(f"int worker{t}(int a) {{")
            w.depth += 1
            self.emit_body("a")
            w.put("g1 = g1 + a;")
            w.put("return a;")
            w.depth -= 1
            w.put("}")
            w.put("")

        w.put("int main() {")
        w.depth += 1
        if cfg.heap:
            w.put("h = malloc(struct node);")
            w.put("h->v = 0;")
        if cfg.star:
            w.put("laundry = &m0;")
            w.put("q = laundry;")
        if cfg.loop_create and self.n_threads >= 1:
            w.put("thread_t tl;")
            w.put("int k;")
            w.put("k = 0;")
            w.put("while (k < 2) {")
            w.depth += 1
            w.put("create(&tl, worker0, k);")
            if cfg.join_style == "always" or \
                    (cfg.join_style == "maybe" and self.rng.random() < 0.5):
                w.put("join(tl);")
            w.put("k = k + 1;")
            w.depth -= 1
            w.put("}")
            rest = range(1, self.n_threads)
        else:
            rest = range(self.n_threads)
        for t in rest:
            w.put(f"thread_t t{t};")
        for t in rest:
            w.put(f"create(&t{t}, worker{t}, {self.rng.randint(0, 1)});")
        if self.rng.random() < 0.6:
            self.emit_body(None)
        for t in rest:
            do_join = cfg.join_style == "always" or \
                (cfg.join_style == "maybe" and self.rng.random() < 0.7)
            if do_join:
                w.put(f"join(t{t});")
        if self.rng.random() < 0.4:
            self.emit_body(None)
        w.put("return 0;")
        w.depth -= 1
        w.put("}")
        return w.text()


def generate(seed: int, cfg: GenConfig | None = None) -> str:
    cfg = cfg if cfg is not None else GenConfig()
    return _Gen(seed, cfg).generate()


def random_config(seed: int) -> GenConfig:
    """Sample generator knobs themselves, for corpus diversity."""
    r = random.Random(seed ^ 0x5EED)
    return GenConfig(
        max_threads=r.randint(1, 3),
        max_locks=r.randint(2, 4),
        wrappers=r.random() < 0.4,
        heap=r.random() < 0.25,
        loop_create=r.random() < 0.2,
        join_style=r.choice(["always", "maybe", "maybe", "never"]),
        max_regions=r.randint(1, 3),
        max_depth=2,
        noise=r.random() < 0.8,
        star=r.random() < 0.15,
    )


def generate_corpus(n: int, base_seed: int = 0) -> list[str]:
    return [generate(base_seed + k, random_config(base_seed + k))
            for k in range(n)]
