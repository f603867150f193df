"""The three-round protocol for LR-sorting with O(log log n) proof size.

The Hamiltonian path is cut into blocks of ceil(log2 n) nodes. Inside a
block, the prover proves edge directions with a block-wide random tag and
per-node indices. Between blocks, the contracted block graph of a planar
instance has a degeneracy ordering with at most 5 back-neighbours per block,
so each block carries its own position plus up to five positions of
neighbouring blocks; equality of those claimed positions with the real ones
is tested by fingerprints.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .arith_schemes import EQ2, Eq2Base, eq2_modulus, gt_ok, gt_trace, nbits, smallest_prime_in
from .instances import LrInstance
from .path_encoding import BlockPartition, EqualityInstance, partition_blocks, write_string, to_bits
from .runtime import ConfigError, Network, Protocol, ekey

MAX_D = 5
NSLOT = MAX_D
STRINGS = 1 + NSLOT  # pos followed by the sigma slots


class NonPlanarInput(RuntimeError):
    """The contracted block graph is not 5-degenerate."""


def ceil_log2(n: int) -> int:
    return max(1, (n - 1).bit_length())


@dataclass
class AccountabilitySets:
    D: list[list[int]]
    S_minus: list[list[int]]
    S_plus: list[list[int]]
    order: list[int] = field(default_factory=list)

    def slots(self, b: int) -> list[int]:
        # S- then S+, both ascending: one sorted list
        return self.S_minus[b] + self.S_plus[b]

    def covers(self, b: int, b2: int) -> bool:
        return b2 in self.D[b] or b in self.D[b2]


def contracted_graph(inst: LrInstance, part: BlockPartition) -> list[set[int]]:
    pos = inst.position
    nb: list[set[int]] = [set() for _ in range(part.count)]
    for u, v in inst.edges:
        a, b = part.block_of(pos[u]), part.block_of(pos[v])
        if a != b:
            nb[a].add(b)
            nb[b].add(a)
    return nb


def degeneracy_order(nb: list[set[int]]) -> tuple[list[int], list[list[int]]]:
    """Repeatedly remove a minimum-degree node; report each node's neighbours still present."""
    deg = [len(s) for s in nb]
    alive = [True] * len(nb)
    heap = [(d, b) for b, d in enumerate(deg)]
    heapq.heapify(heap)
    order, later = [], [[] for _ in nb]
    while heap:
        d, b = heapq.heappop(heap)
        if not alive[b] or d != deg[b]:
            continue
        alive[b] = False
        order.append(b)
        for c in nb[b]:
            if alive[c]:
                later[b].append(c)
                deg[c] -= 1
                heapq.heappush(heap, (deg[c], c))
    return order, later


def build_accountability(inst: LrInstance, partition: BlockPartition) -> AccountabilitySets:
    nb = contracted_graph(inst, partition)
    order, later = degeneracy_order(nb)
    D = [sorted(x) for x in later]
    for b, d in enumerate(D):
        if len(d) > MAX_D:
            raise NonPlanarInput(f"block {b} keeps {len(d)} neighbours at removal")
    return AccountabilitySets(D=D, S_minus=[[c for c in d if c < b] for b, d in enumerate(D)],
                              S_plus=[[c for c in d if c > b] for b, d in enumerate(D)], order=order)


def edge_assignment(inst: LrInstance, part: BlockPartition, acc: AccountabilitySets) -> dict:
    """Honest edge fields: class (1 = outer-block), accountable endpoint (0 = tail, 1 = head), slot index."""
    pos = inst.position
    out = {}
    for u, w in inst.edges:
        bu, bw = part.block_of(pos[u]), part.block_of(pos[w])
        if bu == bw:
            out[ekey(u, w)] = {"cls": 0, "acc": 0, "ind": 0}
            continue
        su = acc.slots(bu)
        if bw in acc.D[bu]:
            out[ekey(u, w)] = {"cls": 1, "acc": 0, "ind": su.index(bw) + 1}
        else:
            out[ekey(u, w)] = {"cls": 1, "acc": 1, "ind": acc.slots(bw).index(bu) + 1}
    return out


class DoubleProtocol(Protocol):
    name = "double"
    rounds = ("P", "V", "P")

    def __init__(self, inst: LrInstance, n_known: int | None = None, base: Eq2Base = EQ2,
                 block_size: int | None = None):
        if not base.perfect_completeness:
            raise ConfigError("base equality protocol must have perfect completeness")
        self.inst = inst
        nk = n_known if n_known is not None else inst.n
        if nk < inst.n:
            raise ConfigError(f"n_known={nk} is below the real node count {inst.n}")
        self.lg = block_size or ceil_log2(nk)
        self.part = partition_blocks(inst.n, self.lg)
        self.rbits = max(1, ceil_log2(self.lg))
        # the last block absorbs the remainder; size q by the longest block so that a
        # fingerprint collision on any block stays below 1/lg
        lmax = max(len(b) for b in self.part.blocks)
        self.q = smallest_prime_in(self.lg * lmax, 2 * self.lg * lmax) if self.lg * lmax > 1 else 2
        self.acc = build_accountability(inst, self.part)
        super().__init__(Network.from_lr(inst))
        self.path = inst.ham_path
        self.pos = inst.position
        qb = nbits(self.q - 1)
        ib = nbits(max(len(b) for b in self.part.blocks))
        r0 = {"lf": 1, "s0": 1}
        for k in range(1, STRINGS):
            r0.update({f"s{k}": 1, f"p{k}": 1, f"d{k}": 1, f"x{k}": 1})
        self.schema[0] = r0
        self.edge_schema[0] = {"cls": 1, "acc": 1, "ind": 3}
        self.schema[1] = {"rb": self.rbits, "r": qb}
        r2 = {"rand": self.rbits, "idx": ib, "R": qb}
        for t in range(STRINGS):
            r2[f"P{t}"] = qb
            r2[f"T{t}"] = qb
        self.schema[2] = r2
        self._blk = [self.part.block_of(self.pos[v]) for v in range(inst.n)]
        self._edges = edge_assignment(inst, self.part, self.acc)
        self._order = None

    # ----------------------------------------------------------- honest prover
    def region(self, rnd, v):
        return self._blk[v]

    def strings_of(self, b: int) -> list[str]:
        W = self.part.pos_width
        L = len(self.part.blocks[b])
        out = [to_bits(b, W).ljust(L, "0")]
        for c in self.acc.slots(b):
            out.append(to_bits(c, W).ljust(L, "0"))
        return out

    def fill(self, rnd, tr, b):
        blk = self.part.blocks[b]
        nodes = [self.path[i] for i in blk]
        if rnd == 0:
            return self._fill0(b, nodes)
        return self._fill2(tr, b, nodes)

    def _fill0(self, b, nodes):
        L = len(nodes)
        ss = self.strings_of(b)
        labs = [{"lf": int(o == 0), "s0": int(ss[0][o])} for o in range(L)]
        pb = b
        for k in range(1, STRINGS):
            if k < len(ss):
                c = self.acc.slots(b)[k - 1]
                d = 1 if c > pb else 0
                # pos strings are left-aligned and zero padded, so compare them as L-bit values
                a_s, b_s = (ss[k], ss[0]) if d else (ss[0], ss[k])
                x = gt_trace(int(a_s, 2), int(b_s, 2), L)
                for o in range(L):
                    labs[o].update({f"s{k}": int(ss[k][o]), f"p{k}": 1, f"d{k}": d, f"x{k}": x[o]})
            else:
                for o in range(L):
                    labs[o].update({f"s{k}": 0, f"p{k}": 0, f"d{k}": 0, f"x{k}": 0})
        return dict(zip(nodes, labs))

    def fill_edges(self, rnd, tr):
        return self._edges if rnd == 0 else {}

    def _fill2(self, tr, b, nodes):
        q = self.q
        first = nodes[0]
        rb = tr.coins(1, first).get("rb", 0)
        R = tr.coins(1, self.path[0]).get("r", 0)
        out = {}
        acc_p = [0] * STRINGS
        p = 1
        labs = []
        for o, v in enumerate(nodes):
            p = p * R % q
            lab0 = tr.lab(0, v)
            lab = {"rand": rb, "idx": o + 1, "R": R}
            for t in range(STRINGS):
                if lab0.get(f"s{t}", 0):
                    acc_p[t] = (acc_p[t] + p) % q
                lab[f"P{t}"] = acc_p[t]
            labs.append(lab)
        for v, lab in zip(nodes, labs):
            for t in range(STRINGS):
                lab[f"T{t}"] = acc_p[t]
            out[v] = lab
        return out

    # ----------------------------------------------------------- coins
    def coin_request(self, rnd, tr, v):
        if rnd != 1:
            return []
        req = []
        if tr.lab(0, v).get("lf") == 1:
            req.append(("rb", 1 << self.rbits))
        if self.net.inputs[v]["hl"] is None:
            req.append(("r", self.q))
        return req

    def coin_nodes(self, rnd, tr):
        return [self.path[b.start] for b in self.part.blocks] if rnd == 1 else ()

    # ----------------------------------------------------------- verification
    def decision_order(self):
        # endpoints of chords first: that is where cheating shows up
        if self._order is None:
            inp = self.net.inputs
            hot = [v for v in range(self.net.n) if inp[v]["out"] or inp[v]["in"]]
            self._order = hot + [v for v in range(self.net.n) if not (inp[v]["out"] or inp[v]["in"])]
        return self._order

    def decide(self, v, view):
        inp = view.inp
        me0 = view.lab(0)
        lf = me0.get("lf")
        if lf not in (0, 1):
            return False
        hl, hr = inp["hl"], inp["hr"]
        if hl is None and lf != 1:
            return False
        left = hl if (hl is not None and lf == 0) else None
        right = hr if (hr is not None and view.lab(0, hr).get("lf") == 0) else None
        l0 = view.lab(0, left) if left is not None else None
        for t in range(STRINGS):
            if me0.get(f"s{t}") not in (0, 1):
                return False
        for k in range(1, STRINGS):
            pk, dk, xk = me0.get(f"p{k}"), me0.get(f"d{k}"), me0.get(f"x{k}")
            if pk not in (0, 1) or dk not in (0, 1):
                return False
            if l0 is not None and (l0.get(f"p{k}") != pk or l0.get(f"d{k}") != dk):
                return False
            if pk:
                a, b = (me0[f"s{k}"], me0["s0"]) if dk else (me0["s0"], me0[f"s{k}"])
                xl = l0.get(f"x{k}", 0) if l0 is not None else 0
                if not gt_ok(xk, xl, a, b, right is None):
                    return False
            elif xk != 0 or me0[f"s{k}"] != 0:
                return False
        # round 2: block tag, index, broadcast point, fingerprints
        me2 = view.lab(2)
        l2 = view.lab(2, left) if left is not None else None
        coins = view.coins(1)
        rand, idx, R = me2.get("rand"), me2.get("idx"), me2.get("R")
        if rand is None or idx is None or R is None or R >= self.q:
            return False
        if l2 is None:
            if rand != coins.get("rb") or idx != 1:
                return False
        elif rand != l2.get("rand") or idx != l2.get("idx", -2) + 1:
            return False
        if hl is None:
            if R != coins.get("r"):
                return False
        elif R != view.lab(2, hl).get("R"):
            return False
        q = self.q
        pw = pow(R, idx, q)
        for t in range(STRINGS):
            P, T = me2.get(f"P{t}"), me2.get(f"T{t}")
            if P is None or T is None or P >= q or T >= q:
                return False
            prev = l2.get(f"P{t}", 0) if l2 is not None else 0
            if l2 is not None and l2.get(f"T{t}") != T:
                return False
            if P != (prev + (pw if me0[f"s{t}"] else 0)) % q:
                return False
            if right is None and P != T:
                return False
        # edges
        for u in view.nb:
            e = view.elab(0, u)
            cls, acc, ind = e.get("cls"), e.get("acc"), e.get("ind")
            if cls not in (0, 1) or acc not in (0, 1) or ind is None or ind > 5:
                return False
            tail_is_me = u in inp["out"] or u == hr
            tail, head = (v, u) if tail_is_me else (u, v)
            if u == hr or u == hl:
                hd0 = me0 if head == v else view.lab(0, head)
                if cls != hd0.get("lf"):
                    return False
            if cls == 0:
                if u == hr or u == hl:
                    continue
                o2 = view.lab(2, u)
                if o2.get("rand") != rand:
                    return False
                ti, hi = (idx, o2.get("idx", -1)) if tail_is_me else (o2.get("idx", -1), idx)
                if not ti < hi:
                    return False
                continue
            if ind < 1:
                return False
            accountable = tail if acc == 0 else head
            if accountable != v:
                continue
            k = ind
            if me0.get(f"p{k}") != 1 or me0.get(f"d{k}") != (1 if tail_is_me else 0):
                return False
            if me2.get(f"T{k}") != view.lab(2, u).get("T0"):
                return False
        return True

    # ----------------------------------------------------------- inspection
    def equality_instances(self, tr) -> list[tuple[tuple[int, int], EqualityInstance]]:
        """Per accountable outer edge: (edge, sigma string of the accountable block vs pos string of the other)."""
        out = []
        for e, lab in self._edge_labels(tr).items():
            if lab.get("cls") != 1 or not 1 <= lab.get("ind", 0) <= 5:
                continue
            u, w = e
            tail, head = (u, w) if w in self.net.inputs[u]["out"] or w == self.net.inputs[u]["hr"] else (w, u)
            a, o = (tail, head) if lab.get("acc") == 0 else (head, tail)
            ba, bo = self._blk[a], self._blk[o]
            na = [self.path[i] for i in self.part.blocks[ba]]
            no = [self.path[i] for i in self.part.blocks[bo]]
            k = lab["ind"]
            sa = "".join(str(tr.lab(0, x).get(f"s{k}", 0)) for x in na)
            so = "".join(str(tr.lab(0, x).get("s0", 0)) for x in no)
            n = max(len(sa), len(so))
            out.append(((tail, head), _pair(sa.ljust(n, "0"), so.ljust(n, "0"))))
        return out

    def _edge_labels(self, tr):
        m = tr.msgs[0]
        keys = set(self._edges) | set(m.edge_over)
        return {k: m.edge(k) for k in keys}


def _pair(a: str, b: str) -> EqualityInstance:
    from .path_encoding import path_pair
    return path_pair(a, b)


def double_protocol(inst: LrInstance, n_known: int | None = None) -> DoubleProtocol:
    return DoubleProtocol(inst, n_known)


def outer_block_to_equality(inst: LrInstance, partition: BlockPartition | None = None,
                            eq_builder: Eq2Base = EQ2) -> DoubleProtocol:
    bs = partition.block_size if partition is not None else None
    if partition is not None and bs < ceil_log2(inst.n):
        raise ConfigError(f"block size {bs} is below log n = {ceil_log2(inst.n)}")
    return DoubleProtocol(inst, base=eq_builder, block_size=bs)


def double_soundness(n: int) -> float:
    return 1 / ceil_log2(n)
