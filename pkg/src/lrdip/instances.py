"""LR-sorting instances: generation, ground truth, and a JSON file format.

Every generated instance is outerplanar by construction. The Hamiltonian
path is laid on a line and every other edge is a chord drawn above the
line; chords come from a random triangulation of the polygon 0..n-1, so
no two of them cross.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable


class InvalidParameter(ValueError):
    pass


class InstanceFormatError(ValueError):
    """Raised by `load` / `LrInstance.validate` with a pointer to the bad field."""

    def __init__(self, msg: str, *, field: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {msg}" if where else msg)
        self.field = field
        self.line = line


@dataclass(frozen=True)
class GroundTruth:
    verdict: bool
    violating_edges: tuple[tuple[int, int], ...] = ()

    @property
    def label(self) -> str:
        return "yes" if self.verdict else "no"


@dataclass(frozen=True)
class LrInstance:
    n: int
    edges: tuple[tuple[int, int], ...]
    ham_path: tuple[int, ...]
    # generator bookkeeping, not part of equality or the file format
    reversed_chords: tuple[tuple[int, int], ...] = field(default=(), compare=False, repr=False)

    @cached_property
    def position(self) -> tuple[int, ...]:
        pos = [0] * self.n
        for i, v in enumerate(self.ham_path):
            pos[v] = i
        return tuple(pos)

    @cached_property
    def h_edges(self) -> frozenset[tuple[int, int]]:
        p = self.ham_path
        return frozenset((p[i], p[i + 1]) for i in range(self.n - 1))

    @cached_property
    def chords(self) -> tuple[tuple[int, int], ...]:
        h = self.h_edges
        return tuple(e for e in self.edges if e not in h)

    @cached_property
    def truth(self) -> GroundTruth:
        return brute_force_decide(self)

    @property
    def label(self) -> str:
        return self.truth.label

    def validate(self) -> None:
        n = self.n
        if not isinstance(n, int) or n < 1:
            raise InstanceFormatError(f"n must be a positive integer, got {n!r}", field="n")
        if sorted(self.ham_path) != list(range(n)):
            raise InstanceFormatError("ham_path is not a permutation of 0..n-1", field="ham_path")
        seen = set()
        for k, (u, v) in enumerate(self.edges):
            if not (0 <= u < n and 0 <= v < n):
                raise InstanceFormatError(f"edge #{k} ({u},{v}) has an endpoint outside [0,{n})", field="edges")
            if u == v:
                raise InstanceFormatError(f"edge #{k} is a self-loop at {u}", field="edges")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InstanceFormatError(f"edge #{k} ({u},{v}) duplicates an earlier edge", field="edges")
            seen.add(key)
        es = set(self.edges)
        p = self.ham_path
        for i in range(n - 1):
            if (p[i], p[i + 1]) not in es:
                raise InstanceFormatError(
                    f"missing H edge at path position {i}: ({p[i]},{p[i + 1]})", field="edges")

    def to_dict(self) -> dict:
        d = {"n": self.n, "edges": [list(e) for e in self.edges], "ham_path": list(self.ham_path)}
        d["label"] = self.label
        return d


def brute_force_decide(inst: LrInstance) -> GroundTruth:
    pos = inst.position
    h = inst.h_edges
    bad = tuple(e for e in inst.edges if e not in h and pos[e[1]] < pos[e[0]])
    return GroundTruth(verdict=not bad, violating_edges=bad)


def canonical_edges(ham_path: tuple[int, ...], chords: Iterable[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    """H edges in path order, then chords sorted by (left position, right position)."""
    pos = {v: i for i, v in enumerate(ham_path)}
    hs = [(ham_path[i], ham_path[i + 1]) for i in range(len(ham_path) - 1)]

    def key(e):
        a, b = pos[e[0]], pos[e[1]]
        return (min(a, b), max(a, b))

    return tuple(hs) + tuple(sorted(chords, key=key))


def _triangulation(n: int, rng: random.Random) -> list[tuple[int, int]]:
    # chords of a random triangulation of the polygon 0..n-1 (closing side included)
    if n < 3:
        return []
    out = [(0, n - 1)]
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        k = rng.randrange(i + 1, j)
        if k - i >= 2:
            out.append((i, k))
            stack.append((i, k))
        if j - k >= 2:
            out.append((k, j))
            stack.append((k, j))
    return out


def _rng(*parts) -> random.Random:
    return random.Random(":".join(map(str, parts)))


def _build(n: int, rng: random.Random, n_chords: int) -> tuple[tuple[int, ...], list[tuple[int, int]]]:
    ids = list(range(n))
    rng.shuffle(ids)
    tri = _triangulation(n, rng)
    picked = rng.sample(tri, n_chords) if n_chords < len(tri) else tri
    # positions -> node ids, forward orientation
    return tuple(ids), [(ids[a], ids[b]) for a, b in picked]


def generate_yes_instance(n: int, seed: int = 0, chord_density: float = 0.5) -> LrInstance:
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}")
    if not 0.0 <= chord_density <= 1.0:
        raise InvalidParameter(f"chord_density must be in [0,1], got {chord_density}")
    rng = _rng("yes", n, seed, chord_density)
    k = round(chord_density * max(n - 2, 0))
    path, chords = _build(n, rng, k)
    return LrInstance(n=n, edges=canonical_edges(path, chords), ham_path=path)


def generate_no_instance(n: int, seed: int = 0, violations: int = 1,
                         chord_density: float = 0.5) -> LrInstance:
    if n < 3:
        raise InvalidParameter(f"n must be >= 3 for a no-instance, got {n}")
    if violations < 1:
        raise InvalidParameter(f"violations must be >= 1, got {violations}")
    if violations > n - 2:
        raise InvalidParameter(f"{violations} violations requested but only {n - 2} chords fit on {n} nodes")
    rng = _rng("no", n, seed, violations, chord_density)
    k = max(round(chord_density * (n - 2)), violations)
    path, chords = _build(n, rng, k)
    flip = set(rng.sample(range(len(chords)), violations))
    rev = []
    out = []
    for i, (u, v) in enumerate(chords):
        if i in flip:
            out.append((v, u))
            rev.append((v, u))
        else:
            out.append((u, v))
    return LrInstance(n=n, edges=canonical_edges(path, out), ham_path=path,
                      reversed_chords=tuple(sorted(rev)))


def chords_non_crossing(inst: LrInstance) -> bool:
    """Laminar check on chord intervals (in path positions)."""
    pos = inst.position
    iv = sorted(((min(pos[u], pos[v]), max(pos[u], pos[v])) for u, v in inst.chords),
                key=lambda t: (t[0], -t[1]))
    stack: list[int] = []  # open right endpoints
    for a, b in iv:
        while stack and stack[-1] <= a:
            stack.pop()
        if stack and b > stack[-1]:
            return False
        stack.append(b)
    return True


def save(inst: LrInstance, path: str | Path) -> None:
    Path(path).write_text(dumps(inst), encoding="utf-8")


def dumps(inst: LrInstance) -> str:
    d = inst.to_dict()
    # one edge per line keeps diffs readable and error lines meaningful
    lines = ["{", f'  "n": {d["n"]},', f'  "label": "{d["label"]}",',
             f'  "ham_path": {json.dumps(d["ham_path"])},', '  "edges": [']
    es = [f"    [{u}, {v}]" for u, v in d["edges"]]
    lines.append(",\n".join(es))
    lines += ["  ]", "}"]
    return "\n".join(lines) + "\n"


def loads(text: str) -> LrInstance:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(exc.msg, line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise InstanceFormatError("top level must be an object", line=1)
    for key in ("n", "edges", "ham_path"):
        if key not in raw:
            raise InstanceFormatError("missing", field=key)
    n = raw["n"]
    if not isinstance(n, int):
        raise InstanceFormatError(f"expected integer, got {type(n).__name__}", field="n")
    try:
        edges = tuple((int(u), int(v)) for u, v in raw["edges"])
    except (TypeError, ValueError) as exc:
        raise InstanceFormatError(f"expected [u, v] integer pairs ({exc})", field="edges") from exc
    hp = raw["ham_path"]
    if not isinstance(hp, list) or not all(isinstance(x, int) for x in hp):
        raise InstanceFormatError("expected a list of integers", field="ham_path")
    inst = LrInstance(n=n, edges=edges, ham_path=tuple(hp))
    inst.validate()
    lab = raw.get("label")
    if lab is not None and lab not in ("yes", "no"):
        raise InstanceFormatError(f"expected 'yes' or 'no', got {lab!r}", field="label")
    if lab is not None and lab != inst.label:
        raise InstanceFormatError(f"stored label {lab!r} disagrees with the edges", field="label")
    return inst


def load(path: str | Path) -> LrInstance:
    return loads(Path(path).read_text(encoding="utf-8"))
