"""Execution engine for public-coin distributed interactive proofs.

A protocol is a round schedule ('P' prover, 'V' verifier), a width schema
per round, an honest prover, a coin schedule and a per-node decision
function. The runtime owns everything else: coin drawing, transcript
recording, width enforcement, locality enforcement and size accounting.

Prover labels are produced lazily per *region* (a protocol-defined group
of nodes, e.g. a block or a segment). A node's label is only computed
when somebody reads it, which lets a rejecting run stop after touching a
handful of regions. Coins are drawn from a generator keyed by
(seed, round, node), so the draw for a node does not depend on the order
in which nodes are visited.
"""
from __future__ import annotations

import math
import random
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

Label = dict  # field name -> int


class LocalityFault(RuntimeError):
    """A decision function read something outside its radius-1 view."""


class WidthViolation(RuntimeError):
    """The honest prover produced a label outside the declared schema."""


class ConfigError(ValueError):
    pass


@dataclass
class Network:
    n: int
    adj: list[frozenset]
    inputs: list[dict]

    @staticmethod
    def path(n: int, inputs: Sequence[dict] | None = None, extra_edges: Iterable[tuple[int, int]] = ()) -> "Network":
        nb = [set() for _ in range(n)]
        for i in range(n - 1):
            nb[i].add(i + 1)
            nb[i + 1].add(i)
        for u, v in extra_edges:
            nb[u].add(v)
            nb[v].add(u)
        inp = list(inputs) if inputs is not None else [{} for _ in range(n)]
        return Network(n, [frozenset(s) for s in nb], inp)

    @staticmethod
    def from_lr(inst) -> "Network":
        n = inst.n
        nb = [set() for _ in range(n)]
        inp = [{"out": [], "in": [], "hl": None, "hr": None} for _ in range(n)]
        h = inst.h_edges
        for u, v in inst.edges:
            nb[u].add(v)
            nb[v].add(u)
            if (u, v) in h:
                inp[u]["hr"] = v
                inp[v]["hl"] = u
            else:
                inp[u]["out"].append(v)
                inp[v]["in"].append(u)
        return Network(n, [frozenset(s) for s in nb], inp)


def ekey(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


def coin_bits(bound: int) -> int:
    return max(0, (bound - 1).bit_length())


class Protocol:
    """Base class; subclasses fill in the schedule and the four hooks."""

    name = "protocol"
    rounds: tuple[str, ...] = ()
    region_cache: int | None = None  # LRU bound on computed regions, None = keep all

    def __init__(self, net: Network):
        self.net = net
        self.schema: list[dict[str, int]] = [dict() for _ in self.rounds]
        self.edge_schema: list[dict[str, int]] = [dict() for _ in self.rounds]

    # --- hooks -------------------------------------------------------
    def region(self, rnd: int, v: int) -> Hashable:
        return 0

    def fill(self, rnd: int, tr: "Transcript", key: Hashable) -> dict[int, Label]:
        raise NotImplementedError

    def fill_edges(self, rnd: int, tr: "Transcript") -> dict[tuple[int, int], Label]:
        return {}

    def coin_request(self, rnd: int, tr: "Transcript", v: int) -> list[tuple[str, int]]:
        return []

    def coin_nodes(self, rnd: int, tr: "Transcript") -> Iterable[int]:
        return range(self.net.n)

    def decide(self, v: int, view: "View") -> bool:
        raise NotImplementedError

    # --- helpers -----------------------------------------------------
    @property
    def num_rounds(self) -> int:
        return len(self.rounds)

    def width_of(self, rnd: int, lab: Label) -> int:
        sch = self.schema[rnd]
        return sum(sch[k] for k in lab)

    def check_label(self, rnd: int, lab: Label, edge: bool = False) -> str | None:
        sch = (self.edge_schema if edge else self.schema)[rnd]
        for k, x in lab.items():
            w = sch.get(k)
            if w is None:
                return f"field {k!r} not in round-{rnd} schema"
            if type(x) is not int or x < 0 or x >> w:
                return f"field {k!r}={x!r} exceeds {w} bits"
        return None


class ProverMsg:
    def __init__(self, proto: Protocol, rnd: int, tr: "Transcript"):
        self.proto = proto
        self.rnd = rnd
        self.tr = tr
        self._regions: OrderedDict = OrderedDict()
        self.over: dict[int, Label] = {}
        self._edges: dict | None = None
        self.edge_over: dict[tuple[int, int], Label] = {}
        self.error: str | None = None
        self.filler: Callable | None = None

    def deviate(self, filler: Callable) -> None:
        """Replace the region filler for this round: filler(rnd, tr, key) -> {node: label}.

        Regions produced this way are width-checked when filled; a bad label
        marks the message as erroneous, which rejects the run.
        """
        self.filler = filler
        self._regions.clear()

    def honest(self, v: int) -> Label:
        key = self.proto.region(self.rnd, v)
        reg = self._regions.get(key)
        if reg is None:
            if self.filler is None:
                reg = self.proto.fill(self.rnd, self.tr, key)
            else:
                reg = self.filler(self.rnd, self.tr, key)
                if self.error is None:
                    for u, lab in reg.items():
                        err = self.proto.check_label(self.rnd, lab)
                        if err:
                            self.error = f"node {u}: {err}"
                            break
            self._regions[key] = reg
            lim = self.proto.region_cache
            if lim is not None and len(self._regions) > lim:
                self._regions.popitem(last=False)
        elif self.proto.region_cache is not None:
            self._regions.move_to_end(key)
        return reg.get(v, _EMPTY)

    def get(self, v: int) -> Label:
        o = self.over.get(v)
        return o if o is not None else self.honest(v)

    def set(self, v: int, lab: Label) -> None:
        self.over[v] = lab

    def honest_edge(self, key) -> Label:
        if self._edges is None:
            self._edges = self.proto.fill_edges(self.rnd, self.tr)
        return self._edges.get(key, _EMPTY)

    def edge(self, key) -> Label:
        o = self.edge_over.get(key)
        return o if o is not None else self.honest_edge(key)

    def set_edge(self, key, lab: Label) -> None:
        self.edge_over[key] = lab

    def validate_overrides(self) -> None:
        for v, lab in self.over.items():
            err = self.proto.check_label(self.rnd, lab)
            if err:
                self.error = f"node {v}: {err}"
                return
        for e, lab in self.edge_over.items():
            err = self.proto.check_label(self.rnd, lab, edge=True)
            if err:
                self.error = f"edge {e}: {err}"
                return


_EMPTY: Label = {}


class CoinMsg:
    def __init__(self, proto: Protocol, rnd: int, tr: "Transcript", seed, fixed: dict | None = None):
        self.proto = proto
        self.rnd = rnd
        self.tr = tr
        self.seed = seed
        self.fixed = fixed
        self._drawn: dict[int, dict] = {}

    def get(self, v: int) -> dict:
        c = self._drawn.get(v)
        if c is None:
            if self.fixed is not None:
                c = self.fixed.get(v, _EMPTY)
            else:
                reqs = self.proto.coin_request(self.rnd, self.tr, v)
                if reqs:
                    rng = random.Random(f"{self.seed}/{self.rnd}/{v}")
                    c = {name: rng.randrange(bound) for name, bound in reqs}
                else:
                    c = _EMPTY
            self._drawn[v] = c
        return c

    def bits(self, v: int) -> int:
        if self.fixed is not None:
            sch = self.proto.schema[self.rnd]
            return sum(sch.get(k, 0) for k in self.get(v))
        return sum(coin_bits(b) for _, b in self.proto.coin_request(self.rnd, self.tr, v))


class Transcript:
    def __init__(self, proto: Protocol, seed):
        self.proto = proto
        self.seed = seed
        self.msgs: list[Any] = []

    def lab(self, rnd: int, v: int) -> Label:
        return self.msgs[rnd].get(v)

    def coins(self, rnd: int, v: int) -> dict:
        return self.msgs[rnd].get(v)

    def elab(self, rnd: int, key) -> Label:
        return self.msgs[rnd].edge(key)

    def recorded_coins(self) -> dict[int, dict[int, dict]]:
        out = {}
        for rnd, m in enumerate(self.msgs):
            if isinstance(m, CoinMsg):
                out[rnd] = {v: dict(c) for v, c in m._drawn.items() if c}
        return out

    def dump_lines(self) -> list[str]:
        """Bit-exact text form: one line per (round, actor, node or edge)."""
        proto = self.proto
        lines = []
        n = proto.net.n
        for rnd, m in enumerate(self.msgs):
            if isinstance(m, CoinMsg):
                for v in range(n):
                    c = m.get(v)
                    if c:
                        lines.append(f"{rnd} V n{v} {_pack(proto.schema[rnd], c)}")
            else:
                for v in range(n):
                    lab = m.get(v)
                    if lab:
                        lines.append(f"{rnd} P n{v} {_pack(proto.schema[rnd], lab)}")
                keys = sorted(set(m.edge_over) | set(m._edges or {}))
                for e in keys:
                    lab = m.edge(e)
                    if lab:
                        lines.append(f"{rnd} P e{e[0]}-{e[1]} {_pack(proto.edge_schema[rnd], lab)}")
        return lines


def _pack(sch: dict[str, int], lab: Label) -> str:
    # presence mask over the schema (in sorted field order) then the payload
    names = sorted(sch)
    mask = 0
    payload = 0
    nbits = 0
    for i, k in enumerate(names):
        if k in lab:
            mask |= 1 << i
            w = sch[k]
            payload = (payload << w) | (lab[k] & ((1 << w) - 1) if w else 0)
            nbits += w
    return f"{mask:x}:{nbits}:{payload:x}"


def _unpack(sch: dict[str, int], text: str) -> dict:
    mask_s, nbits_s, payload_s = text.split(":")
    mask, nbits, payload = int(mask_s, 16), int(nbits_s), int(payload_s, 16)
    names = [k for i, k in enumerate(sorted(sch)) if mask >> i & 1]
    out = {}
    shift = nbits
    for k in names:
        w = sch[k]
        shift -= w
        out[k] = (payload >> shift) & ((1 << w) - 1)
    return out


def parse_coins(proto: Protocol, lines: Iterable[str]) -> dict[int, dict[int, dict]]:
    out: dict[int, dict[int, dict]] = {}
    for line in lines:
        rnd_s, actor, target, body = line.split()
        if actor != "V":
            continue
        rnd = int(rnd_s)
        out.setdefault(rnd, {})[int(target[1:])] = _unpack(proto.schema[rnd], body)
    return out


class View:
    """What node v may read: its input, its coins, its own and neighbours' labels, incident edge labels."""
    __slots__ = ("tr", "v", "nb", "inp")

    def __init__(self, tr: Transcript, v: int):
        self.tr = tr
        self.v = v
        net = tr.proto.net
        self.nb = net.adj[v]
        self.inp = net.inputs[v]

    def lab(self, rnd: int, u: int | None = None) -> Label:
        if u is None or u == self.v:
            return self.tr.msgs[rnd].get(self.v)
        if u not in self.nb:
            raise LocalityFault(f"node {self.v} read the label of non-neighbour {u}")
        return self.tr.msgs[rnd].get(u)

    def coins(self, rnd: int) -> dict:
        return self.tr.msgs[rnd].get(self.v)

    def elab(self, rnd: int, u: int) -> Label:
        if u not in self.nb:
            raise LocalityFault(f"node {self.v} read edge to non-neighbour {u}")
        return self.tr.msgs[rnd].edge(ekey(self.v, u))


class ProverStrategy:
    """Honest by default; deviations override `respond`."""

    name = "honest"
    scope: tuple[str, ...] = ()

    def respond(self, proto: Protocol, tr: Transcript, rnd: int, msg: ProverMsg) -> None:
        return None

    def __repr__(self):
        return f"<strategy {self.name}>"


HONEST = ProverStrategy()


@dataclass
class VerdictReport:
    per_node: list[bool]
    accepted: bool
    proof_size_bits: int
    total_bits_per_node: int
    num_rounds: int
    round_widths: list[int] = field(default_factory=list)
    protocol_error: str | None = None


def _play(proto: Protocol, prover: ProverStrategy, seed, coins: dict | None,
          first: ProverMsg | None = None) -> Transcript:
    tr = Transcript(proto, seed)
    for rnd, actor in enumerate(proto.rounds):
        if actor == "V":
            fixed = None if coins is None else coins.get(rnd, {})
            tr.msgs.append(CoinMsg(proto, rnd, tr, seed, fixed))
        elif rnd == 0 and first is not None:
            tr.msgs.append(first)
        else:
            msg = ProverMsg(proto, rnd, tr)
            tr.msgs.append(msg)
            prover.respond(proto, tr, rnd, msg)
            msg.validate_overrides()
    return tr


def run(proto: Protocol, prover: ProverStrategy = HONEST, seed=0, *,
        coins: dict | None = None) -> tuple[VerdictReport, Transcript]:
    """One full execution with exact size accounting.

    With `coins` given (round -> node -> {name: value}) the recorded coins are
    replayed instead of drawn.
    """
    tr = _play(proto, prover, seed, coins)
    n = proto.net.n
    widths = [0] * len(proto.rounds)
    total = [0] * n
    err = None
    for rnd, m in enumerate(tr.msgs):
        if isinstance(m, CoinMsg):
            for v in proto.coin_nodes(rnd, tr):
                b = m.bits(v)
                total[v] += b
                if b > widths[rnd]:
                    widths[rnd] = b
            continue
        if m.error and err is None:
            err = f"round {rnd}: {m.error}"
        sch = proto.schema[rnd]
        for v in range(n):
            lab = m.get(v)
            if not lab:
                continue
            if v not in m.over and m.filler is None:
                bad = proto.check_label(rnd, lab)
                if bad:
                    raise WidthViolation(f"honest prover, round {rnd}, node {v}: {bad}")
            b = sum(sch[k] for k in lab if k in sch)
            total[v] += b
            if b > widths[rnd]:
                widths[rnd] = b
        esch = proto.edge_schema[rnd]
        if esch:
            for key in set(m.edge_over) | set((m._edges if m._edges is not None else proto_edges(m))):
                lab = m.edge(key)
                if key not in m.edge_over:
                    bad = proto.check_label(rnd, lab, edge=True)
                    if bad:
                        raise WidthViolation(f"honest prover, round {rnd}, edge {key}: {bad}")
                b = sum(esch[k] for k in lab if k in esch)
                if b > widths[rnd]:
                    widths[rnd] = b
    per_node = [False] * n
    if err is None:
        for v in range(n):
            per_node[v] = bool(proto.decide(v, View(tr, v)))
        for rnd, m in enumerate(tr.msgs):
            if isinstance(m, ProverMsg) and m.error:
                err = f"round {rnd}: {m.error}"
                per_node = [False] * n
                break
    rep = VerdictReport(per_node=per_node, accepted=err is None and all(per_node),
                        proof_size_bits=max(widths) if widths else 0,
                        total_bits_per_node=max(total) if total else 0,
                        num_rounds=len(proto.rounds), round_widths=widths, protocol_error=err)
    return rep, tr


def proto_edges(m: ProverMsg) -> dict:
    if m._edges is None:
        m._edges = m.proto.fill_edges(m.rnd, m.tr)
    return m._edges


@dataclass
class Estimate:
    rate: float
    ci95: float
    accepted: int
    trials: int

    def __iter__(self):
        # unpacks as (rate, ci95)
        return iter((self.rate, self.ci95))


def wilson_halfwidth(k: int, n: int, z: float = 1.959963984540054) -> float:
    """Half-width of the 95% normal interval, floored by the Wilson width for extreme rates."""
    if n == 0:
        return 1.0
    p = k / n
    wald = z * math.sqrt(p * (1 - p) / n)
    denom = 1 + z * z / n
    wilson = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(wald, wilson)


def accepts(proto: Protocol, tr: Transcript, suspects: list[int] | None = None) -> bool:
    """Short-circuit decision: stop at the first rejecting node.

    `suspects` is a move-to-front list of nodes that rejected in earlier
    trials; they are visited first. Visiting order never changes the
    outcome, only the time taken to find a rejecting node.
    """
    for m in tr.msgs:
        if isinstance(m, ProverMsg) and m.error:
            return False
    decide = proto.decide
    if suspects:
        for i, v in enumerate(suspects):
            if not decide(v, View(tr, v)):
                if i:
                    suspects.insert(0, suspects.pop(i))
                return False
    seen = set(suspects) if suspects else ()
    for v in proto.decision_order() if hasattr(proto, "decision_order") else range(proto.net.n):
        if v in seen:
            continue
        if not decide(v, View(tr, v)):
            if suspects is not None:
                suspects.insert(0, v)
                del suspects[32:]
            return False
    # lazily filled deviations are width-checked as they are read
    return not any(isinstance(m, ProverMsg) and m.error for m in tr.msgs)


def estimate_acceptance(proto: Protocol, prover: ProverStrategy = HONEST, trials: int = 100,
                        seed=0) -> Estimate:
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    first = None
    if proto.rounds and proto.rounds[0] == "P":
        # round 0 sees no coins, so its message is the same in every trial
        t0 = Transcript(proto, f"{seed}.first")
        first = ProverMsg(proto, 0, t0)
        t0.msgs.append(first)
        prover.respond(proto, t0, 0, first)
        first.validate_overrides()
    suspects: list[int] = []
    ok = 0
    for t in range(trials):
        tr = _play(proto, prover, f"{seed}.{t}", None, first)
        if accepts(proto, tr, suspects):
            ok += 1
    return Estimate(ok / trials, wilson_halfwidth(ok, trials), ok, trials)
