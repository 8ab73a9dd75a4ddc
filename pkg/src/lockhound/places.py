"""Places: context-qualified program points, interned in a trie.

A place is a tuple of location ids. All elements but the last are call or
create sites recording how control got here; the last element is the current
location. Places are interned to dense integer ids; resolution walks parent
links, so shared prefixes are stored once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MainThreadError, UnknownPlaceError

Place = tuple[int, ...]

MAIN_THREAD: Place = ()


@dataclass
class _Node:
    loc: int
    parent: "_Node | None"
    place_id: int = -1
    children: dict[int, "_Node"] = field(default_factory=dict)
    depth: int = 0


class PlaceMap:
    """Bijective interning of places to dense integer ids."""

    def __init__(self) -> None:
        self._roots: dict[int, _Node] = {}
        self._by_id: list[_Node] = []

    def __len__(self) -> int:
        return len(self._by_id)

    def intern(self, place: Place) -> int:
        if not place:
            raise ValueError("cannot intern the empty place")
        node = self._roots.get(place[0])
        if node is None:
            node = self._roots[place[0]] = _Node(place[0], None, depth=1)
        for loc in place[1:]:
            child = node.children.get(loc)
            if child is None:
                child = node.children[loc] = _Node(loc, node, depth=node.depth + 1)
            node = child
        if node.place_id < 0:
            node.place_id = len(self._by_id)
            self._by_id.append(node)
        return node.place_id

    def resolve(self, place_id: int) -> Place:
        try:
            node = self._by_id[place_id]
        except IndexError:
            raise UnknownPlaceError(place_id) from None
        out: list[int] = []
        cur: _Node | None = node
        while cur is not None:
            out.append(cur.loc)
            cur = cur.parent
        return tuple(reversed(out))

    def lookup(self, place: Place) -> int | None:
        """Id of an already-interned place, or None."""
        if not place:
            return None
        node = self._roots.get(place[0])
        for loc in place[1:]:
            if node is None:
                return None
            node = node.children.get(loc)
        if node is None or node.place_id < 0:
            return None
        return node.place_id

    def node_count(self) -> int:
        count = 0
        stack = list(self._roots.values())
        while stack:
            n = stack.pop()
            count += 1
            stack.extend(n.children.values())
        return count

    def places(self) -> list[Place]:
        return [self.resolve(i) for i in range(len(self._by_id))]


def top(place: Place) -> int:
    return place[-1]


def get_thread(place: Place, create_sites: set[int]) -> Place:
    """Abstract thread id: prefix up to the last create site in the context.

    Only the context part is scanned; standing at a create site does not put
    the creator inside the thread it is about to start. The empty tuple is
    the main thread.
    """
    for i in range(len(place) - 2, -1, -1):
        if place[i] in create_sites:
            return place[: i + 1]
    return MAIN_THREAD


def common_prefix_len(p1: Place, p2: Place) -> int:
    n = 0
    for a, b in zip(p1, p2):
        if a != b:
            break
        n += 1
    return n


def multiple_thread_guard(t: Place) -> None:
    if t == MAIN_THREAD:
        raise MainThreadError("thread multiplicity asked for the main thread")
