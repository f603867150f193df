"""Recursive-block LR-sorting protocol with short block tags, and the layer geometry of
the multi-layer variant.

Every recursion level cuts each block of the previous level (its "piece") into
smaller blocks. Edges that leave a block at level t are checked by the
position/fingerprint argument of the double protocol restricted to the piece;
edges that stay inside are tagged with a 3-bit coin drawn by the block and
handed to the next level. Levels run in consecutive prover rounds, so level t's
fingerprints travel together with level t+1's block structure. Recursion stops
once no block can exceed three nodes; there a 2-bit index settles the order.

Layers beyond the first (fingerprints of fingerprints spread one bit per node)
need blocks far larger than any desk-scale graph. `LayerTree` computes that
requirement and `tradeoff_protocol` refuses such configurations with a
`GeometryError` that reports the numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from .arith_schemes import gt_ok, gt_trace, nbits, smallest_prime_in
from .eq_selfreduce import ClusterLayout, SelfReduce, sr_instance
from .instances import LrInstance
from .lr_double import MAX_D, NonPlanarInput, STRINGS, ceil_log2, degeneracy_order
from .path_encoding import to_bits
from .runtime import ConfigError, Network, Protocol, ekey


class GeometryError(ConfigError):
    def __init__(self, msg: str, *, layer: int, required: int, available: int):
        super().__init__(msg)
        self.layer = layer
        self.required = required
        self.available = available


# ------------------------------------------------------------------ layer arithmetic

def iter_log(x: float, j: int) -> float:
    """log2 applied j times (j=0 returns x)."""
    for _ in range(j):
        if x <= 0:
            return float("-inf")
        x = math.log2(x)
    return x


def layer_count(n: int, T: float) -> int:
    """Smallest d >= 1 with log^(d) n <= T."""
    if T <= 0:
        raise ConfigError("threshold T must be positive")
    d = 1
    while iter_log(n, d) > T:
        d += 1
    return d


def log_star(n: int) -> int:
    k, x = 0, float(n)
    while x > 1:
        x = math.log2(x)
        k += 1
    return k


@dataclass(frozen=True)
class IteratedConfig:
    T: float = 16
    c: float = 1.0
    tag_bits: int = 3

    def __post_init__(self):
        if self.tag_bits < 1:
            raise ConfigError("tag_bits must be >= 1")
        if self.c <= 0:
            raise ConfigError("c must be positive")


@dataclass(frozen=True)
class LayerTree:
    n: int
    d: int
    c: float = 1.0
    strings_per_block: int = STRINGS

    @staticmethod
    def for_threshold(n: int, T: float, c: float = 1.0) -> "LayerTree":
        return LayerTree(n, layer_count(n, T), c)

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        g = self.gaps
        for j in range(1, self.d):
            want = self.c * iter_log(self.n, j + 1) ** 2 * g[j]
            if not math.isclose(g[j - 1], want, rel_tol=1e-9):
                raise AssertionError(f"gap telescoping broken at layer {j}: {g[j - 1]} vs {want}")

    @cached_property
    def gaps(self) -> tuple[float, ...]:
        """g_j = prod_{i=j+1}^{d+1} c (log^(i) n)^2 for j = 1..d."""
        out = []
        for j in range(1, self.d + 1):
            p = 1.0
            for i in range(j + 1, self.d + 2):
                p *= self.c * iter_log(self.n, i) ** 2
            out.append(p)
        return tuple(out)

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(max(1, math.ceil(iter_log(self.n, j))) for j in range(1, self.d + 1))

    @property
    def top_block(self) -> int:
        return max(1, math.ceil(self.gaps[0] * self.lengths[0]))

    @staticmethod
    def _pow2(x: int) -> int:
        return max(4, 1 << (max(1, x) - 1).bit_length())

    def segment_strings(self) -> int:
        """Strings a self-reduction segment hands to the next layer (its base-equality conditions)."""
        return _segment_conditions()

    def required_nodes(self, layer: int = 1, ell: int | None = None) -> int:
        """Nodes one layer-`layer` string of `ell` bits occupies once every later layer is laid out."""
        ell = self.lengths[layer - 1] if ell is None else ell
        if layer >= self.d:
            return ell
        lay = ClusterLayout(self._pow2(ell))
        inner = self.segment_strings() * self.required_nodes(layer + 1, lay.seg_len)
        return lay.ell * lay.segs * max(lay.seg_len, inner)

    def required_block(self) -> int:
        return self.strings_per_block * self.required_nodes(1)

    def check_geometry(self) -> None:
        if self.d == 1:
            return
        need = self.required_block()
        have = self.n // 2
        if need > have:
            raise GeometryError(
                f"{self.d} layers on n={self.n}: a top block must hold {need} nodes "
                f"({self.strings_per_block} strings of {self.lengths[0]} bits laid out over "
                f"{self.d - 1} self-reduction layers), but two blocks leave at most {have}; "
                f"the gap formula gives a top block of {self.top_block}",
                layer=2, required=need, available=have)


def _segment_conditions() -> int:
    return _SEG_CONDS[0] if _SEG_CONDS else _count_segment_conditions()


_SEG_CONDS: list[int] = []


def _count_segment_conditions() -> int:
    sr = SelfReduce(sr_instance("0000", "0000"))
    k = max(len(v) for v in sr.conds.values())
    _SEG_CONDS.append(k)
    return k


# ------------------------------------------------------------------ recursion plan

@dataclass(frozen=True)
class LevelPlan:
    block: int       # nominal block size at this level
    max_piece: int   # largest piece (block of the previous level) this level cuts
    q: int           # fingerprint modulus

    @property
    def qbits(self) -> int:
        return nbits(self.q - 1)


def plan_levels(n: int) -> list[LevelPlan]:
    """Block sizes per recursion level, known to every node from n alone."""
    out = []
    M = n
    while M > 3:
        beta = max(1, min(ceil_log2(M), M // 2))
        lo = max(beta * beta, 16 * beta)
        out.append(LevelPlan(beta, M, smallest_prime_in(lo, 2 * lo)))
        M = min(M, 2 * beta - 1)
    return out


def cut(lo: int, hi: int, beta: int) -> list[tuple[int, int]]:
    """Blocks of [lo, hi): size beta, the last one absorbing the remainder."""
    N = hi - lo
    k = max(1, N // beta)
    out = [(lo + i * beta, lo + (i + 1) * beta) for i in range(k - 1)]
    out.append((lo + (k - 1) * beta, hi))
    return out


@dataclass
class LevelData:
    blocks: list[tuple[int, int]]          # path-index ranges
    piece: list[int]                       # block -> piece index (block of previous level)
    pos: list[int]                         # block -> position within its piece
    slots: list[list[int]]                 # block -> accountable blocks, ascending (global ids)
    block_at: list[int] = field(default_factory=list)   # path index -> block


class RecursiveBlocks(Protocol):
    """The single-layer protocol with recursive inner blocks (d = 1)."""

    name = "tradeoff"

    def __init__(self, inst: LrInstance, n_known: int | None = None, tag_bits: int = 3):
        self.inst = inst
        nk = n_known if n_known is not None else inst.n
        if nk < inst.n:
            raise ConfigError(f"n_known={nk} is below the real node count {inst.n}")
        self.tag_bits = tag_bits
        self.plan = plan_levels(nk)
        R = len(self.plan)
        self.R = R
        self.rounds = tuple("P" if i % 2 == 0 else "V" for i in range(2 * R + 1))
        super().__init__(Network.from_lr(inst))
        self.path = inst.ham_path
        self.pos_of = inst.position
        self.levels = self._build_levels()
        self._set_schema()
        self._order = None

    # ----------------------------------------------------------- construction
    def _build_levels(self) -> list[LevelData]:
        n = self.inst.n
        pieces = [(0, n)]
        pos = self.pos_of
        edges = [(pos[u], pos[w]) for u, w in self.inst.edges]
        out = []
        for lv in self.plan:
            blocks, piece, bpos = [], [], []
            for pi, (lo, hi) in enumerate(pieces):
                for k, b in enumerate(cut(lo, hi, lv.block)):
                    blocks.append(b)
                    piece.append(pi)
                    bpos.append(k)
            block_at = [0] * n
            for bi, (lo, hi) in enumerate(blocks):
                for i in range(lo, hi):
                    block_at[i] = bi
            nb: list[set[int]] = [set() for _ in blocks]
            prev = out[-1].block_at if out else None
            for a, b in edges:
                if prev is not None and prev[a] != prev[b]:
                    continue
                x, y = block_at[a], block_at[b]
                if x != y:
                    nb[x].add(y)
                    nb[y].add(x)
            _, later = degeneracy_order(nb)
            slots = [sorted(s) for s in later]
            for bi, s in enumerate(slots):
                if len(s) > MAX_D:
                    raise NonPlanarInput(f"block {bi} keeps {len(s)} neighbours at removal")
            out.append(LevelData(blocks, piece, bpos, slots, block_at))
            pieces = blocks
        return out

    def _set_schema(self):
        struct = {"lf": 1, "s0": 1}
        for k in range(1, STRINGS):
            struct.update({f"s{k}": 1, f"p{k}": 1, f"d{k}": 1, f"x{k}": 1})
        for t in range(self.R):
            rnd = 2 * t
            sch = dict(struct)
            if t:
                sch.update(self._fp_schema(t - 1))
            self.schema[rnd] = sch
            self.edge_schema[rnd] = {"cls": 1, "acc": 1, "ind": 3}
            self.schema[rnd + 1] = {"rb": self.tag_bits, "r": self.plan[t].qbits}
        last = 2 * self.R
        sch = {"idx": 2}
        if self.R:
            sch.update(self._fp_schema(self.R - 1))
        self.schema[last] = sch

    def _fp_schema(self, t: int) -> dict:
        qb = self.plan[t].qbits
        sch = {"rand": self.tag_bits, "R": qb}
        for k in range(STRINGS):
            sch[f"P{k}"] = qb
            sch[f"T{k}"] = qb
        return sch

    # ----------------------------------------------------------- honest prover
    def region(self, rnd, v):
        # the top-level block (or the whole path when there is no level)
        return self.levels[0].block_at[self.pos_of[v]] if self.R else 0

    def _range(self, key):
        if not self.R:
            return 0, self.inst.n
        return self.levels[0].blocks[key]

    def strings(self, t: int, b: int) -> list[int]:
        lv = self.levels[t]
        return [lv.pos[b]] + [lv.pos[c] for c in lv.slots[b]]

    def fill(self, rnd, tr, key):
        lo, hi = self._range(key)
        out = {self.path[i]: {} for i in range(lo, hi)}
        t = rnd // 2
        if t < self.R:
            self._fill_struct(t, lo, hi, out)
        if t >= 1:
            self._fill_fp(t - 1, tr, lo, hi, out)
        if t == self.R:
            self._fill_idx(lo, hi, out)
        return out

    def _sub_blocks(self, t, lo, hi):
        lv = self.levels[t]
        b = lv.block_at[lo]
        while b < len(lv.blocks) and lv.blocks[b][0] < hi:
            yield b, lv.blocks[b]
            b += 1

    def _fill_struct(self, t, lo, hi, out):
        lv = self.levels[t]
        path = self.path
        for b, (a, z) in self._sub_blocks(t, lo, hi):
            L = z - a
            vals = self.strings(t, b)
            me = vals[0]
            bits = [to_bits(x, L) for x in vals]
            for o in range(L):
                out[path[a + o]].update({"lf": int(o == 0), "s0": int(bits[0][o])})
            for k in range(1, STRINGS):
                if k < len(vals):
                    d = int(vals[k] > me)
                    x = gt_trace(vals[k], me, L) if d else gt_trace(me, vals[k], L)
                    for o in range(L):
                        out[path[a + o]].update({f"s{k}": int(bits[k][o]), f"p{k}": 1, f"d{k}": d, f"x{k}": x[o]})
                else:
                    for o in range(L):
                        out[path[a + o]].update({f"s{k}": 0, f"p{k}": 0, f"d{k}": 0, f"x{k}": 0})

    def _fill_fp(self, t, tr, lo, hi, out):
        q = self.plan[t].q
        path = self.path
        R = tr.coins(2 * t + 1, path[0]).get("r", 0)
        for b, (a, z) in self._sub_blocks(t, lo, hi):
            rb = tr.coins(2 * t + 1, path[a]).get("rb", 0)
            acc = [0] * STRINGS
            labs = []
            for i in range(a, z):
                l0 = tr.lab(2 * t, path[i])
                acc = [(acc[k] * R + l0.get(f"s{k}", 0)) % q for k in range(STRINGS)]
                labs.append(list(acc))
            for i, pref in zip(range(a, z), labs):
                lab = out[path[i]]
                lab.update({"rand": rb, "R": R})
                for k in range(STRINGS):
                    lab[f"P{k}"] = pref[k]
                    lab[f"T{k}"] = acc[k]

    def _fill_idx(self, lo, hi, out):
        path = self.path
        if not self.R:
            for i in range(lo, hi):
                out[path[i]]["idx"] = i - lo + 1
            return
        last = self.R - 1
        for b, (a, z) in self._sub_blocks(last, lo, hi):
            for i in range(a, z):
                out[path[i]]["idx"] = i - a + 1

    def fill_edges(self, rnd, tr):
        t = rnd // 2
        if t >= self.R:
            return {}
        lv = self.levels[t]
        prev = self.levels[t - 1].block_at if t else None
        pos = self.pos_of
        out = {}
        for u, w in self.inst.edges:
            a, b = pos[u], pos[w]
            if prev is not None and prev[a] != prev[b]:
                continue
            bu, bw = lv.block_at[a], lv.block_at[b]
            if bu == bw:
                out[ekey(u, w)] = {"cls": 0, "acc": 0, "ind": 0}
            elif bw in lv.slots[bu]:
                out[ekey(u, w)] = {"cls": 1, "acc": 0, "ind": lv.slots[bu].index(bw) + 1}
            else:
                out[ekey(u, w)] = {"cls": 1, "acc": 1, "ind": lv.slots[bw].index(bu) + 1}
        return out

    # ----------------------------------------------------------- coins
    def coin_request(self, rnd, tr, v):
        if rnd % 2 == 0:
            return []
        t = rnd // 2
        req = []
        if tr.lab(2 * t, v).get("lf") == 1:
            req.append(("rb", 1 << self.tag_bits))
        if self.net.inputs[v]["hl"] is None:
            req.append(("r", self.plan[t].q))
        return req

    def coin_nodes(self, rnd, tr):
        t = rnd // 2
        return [self.path[a] for a, _ in self.levels[t].blocks]

    # ----------------------------------------------------------- verification
    def decision_order(self):
        if self._order is None:
            inp = self.net.inputs
            hot = [v for v in range(self.net.n) if inp[v]["out"] or inp[v]["in"]]
            self._order = hot + [v for v in range(self.net.n) if not (inp[v]["out"] or inp[v]["in"])]
        return self._order

    def decide(self, v, view):
        inp = view.inp
        hl, hr = inp["hl"], inp["hr"]
        # edges still open (inner) at the current level; None = every edge
        open_nb = set(view.nb)
        for t in range(self.R):
            ok, open_nb = self._check_level(t, v, view, open_nb)
            if not ok:
                return False
        return self._check_idx(v, view, open_nb)

    def _block_nbrs(self, rnd, v, view):
        me = view.lab(rnd)
        hl, hr = view.inp["hl"], view.inp["hr"]
        left = hl if (hl is not None and me.get("lf") == 0) else None
        right = hr if (hr is not None and view.lab(rnd, hr).get("lf") == 0) else None
        return left, right

    def _check_level(self, t, v, view, open_nb):
        rnd = 2 * t
        inp = view.inp
        hl, hr = inp["hl"], inp["hr"]
        me0 = view.lab(rnd)
        lf = me0.get("lf")
        if lf not in (0, 1):
            return False, open_nb
        if hl is None and lf != 1:
            return False, open_nb
        if t and view.lab(rnd - 2).get("lf") == 1 and lf != 1:
            return False, open_nb   # a piece starts with a block
        left, right = self._block_nbrs(rnd, v, view)
        l0 = view.lab(rnd, left) if left is not None else None
        for k in range(STRINGS):
            if me0.get(f"s{k}") not in (0, 1):
                return False, open_nb
        for k in range(1, STRINGS):
            pk, dk, xk = me0.get(f"p{k}"), me0.get(f"d{k}"), me0.get(f"x{k}")
            if pk not in (0, 1) or dk not in (0, 1):
                return False, open_nb
            if l0 is not None and (l0.get(f"p{k}") != pk or l0.get(f"d{k}") != dk):
                return False, open_nb
            if pk:
                a, b = (me0[f"s{k}"], me0["s0"]) if dk else (me0["s0"], me0[f"s{k}"])
                xl = l0.get(f"x{k}", 0) if l0 is not None else 0
                if not gt_ok(xk, xl, a, b, right is None):
                    return False, open_nb
            elif xk != 0 or me0[f"s{k}"] != 0:
                return False, open_nb
        # fingerprints of this level travel in the next prover round
        frnd = rnd + 2
        me2 = view.lab(frnd)
        l2 = view.lab(frnd, left) if left is not None else None
        coins = view.coins(rnd + 1)
        q = self.plan[t].q
        rand, R = me2.get("rand"), me2.get("R")
        if rand is None or R is None or R >= q:
            return False, open_nb
        if l2 is None:
            if rand != coins.get("rb"):
                return False, open_nb
        elif rand != l2.get("rand"):
            return False, open_nb
        if hl is None:
            if R != coins.get("r"):
                return False, open_nb
        elif R != view.lab(frnd, hl).get("R"):
            return False, open_nb
        for k in range(STRINGS):
            P, T = me2.get(f"P{k}"), me2.get(f"T{k}")
            if P is None or T is None or P >= q or T >= q:
                return False, open_nb
            prev = l2.get(f"P{k}", 0) if l2 is not None else 0
            if l2 is not None and l2.get(f"T{k}") != T:
                return False, open_nb
            if P != (prev * R + me0[f"s{k}"]) % q:
                return False, open_nb
            if right is None and P != T:
                return False, open_nb
        # edges open at this level
        still = set()
        for u in open_nb:
            e = view.elab(rnd, u)
            cls, acc, ind = e.get("cls"), e.get("acc"), e.get("ind")
            if cls not in (0, 1) or acc not in (0, 1) or ind is None or ind > MAX_D:
                return False, open_nb
            tail_is_me = u in inp["out"] or u == hr
            if u == hr or u == hl:
                head = v if u == hl else u
                if cls != (me0 if head == v else view.lab(rnd, head)).get("lf"):
                    return False, open_nb
                if cls == 0:
                    still.add(u)
                continue
            if cls == 0:
                if view.lab(frnd, u).get("rand") != rand:
                    return False, open_nb
                still.add(u)
                continue
            if ind < 1:
                return False, open_nb
            tail = v if tail_is_me else u
            head = u if tail_is_me else v
            if (tail if acc == 0 else head) != v:
                continue
            if me0.get(f"p{ind}") != 1 or me0.get(f"d{ind}") != int(tail_is_me):
                return False, open_nb
            if me2.get(f"T{ind}") != view.lab(frnd, u).get("T0"):
                return False, open_nb
        return True, still

    def _check_idx(self, v, view, open_nb):
        rnd = 2 * self.R
        inp = view.inp
        hl = inp["hl"]
        idx = view.lab(rnd).get("idx")
        if idx is None:
            return False
        if self.R:
            left, _ = self._block_nbrs(rnd - 2, v, view)
        else:
            left = hl
        if left is None:
            if idx != 1:
                return False
        elif idx != view.lab(rnd, left).get("idx", -2) + 1:
            return False
        for u in open_nb:
            if u == hl or u == inp["hr"]:
                continue
            other = view.lab(rnd, u).get("idx", -1)
            if u in inp["out"]:
                if not idx < other:
                    return False
            elif not other < idx:
                return False
        return True


def check_d_consistency(proto: RecursiveBlocks, tr, level: int = 0) -> list[tuple[int, int]]:
    """Accountable edges of one level whose final fingerprint values disagree (sigma side vs pos side)."""
    bad = []
    rnd = 2 * level
    m = tr.msgs[rnd]
    keys = set(proto.fill_edges(rnd, tr)) | set(m.edge_over)
    for (x, y) in sorted(keys):
        lab = m.edge((x, y))
        if lab.get("cls") != 1 or not 1 <= lab.get("ind", 0) <= MAX_D:
            continue
        inp = proto.net.inputs[x]
        tail, head = (x, y) if (y in inp["out"] or y == inp["hr"]) else (y, x)
        a, o = (tail, head) if lab.get("acc") == 0 else (head, tail)
        if tr.lab(rnd + 2, a).get(f"T{lab['ind']}") != tr.lab(rnd + 2, o).get("T0"):
            bad.append((tail, head))
    return bad


def tradeoff_protocol(inst: LrInstance, d: int = 1, cfg: IteratedConfig = IteratedConfig(),
                      n_known: int | None = None) -> RecursiveBlocks:
    top = max(1, log_star(inst.n))
    if not 1 <= d <= top:
        raise ConfigError(f"d must lie in [1, {top}] for n={inst.n}, got {d}")
    if d > 1:
        tree = LayerTree(inst.n, d, cfg.c)
        tree.check_geometry()
        raise ConfigError(
            f"{d} layers fit geometrically on n={inst.n} (block of {tree.required_block()} nodes) "
            "but layers beyond the first are not built by this package")
    return RecursiveBlocks(inst, n_known, cfg.tag_bits)


def iterated_protocol(inst: LrInstance, cfg: IteratedConfig = IteratedConfig(),
                      n_known: int | None = None) -> RecursiveBlocks:
    d = layer_count(inst.n, cfg.T)
    if d > 1:
        LayerTree(inst.n, d, cfg.c).check_geometry()
    p = tradeoff_protocol(inst, d, cfg, n_known)
    p.name = "iterated"
    return p


def iterated_soundness(cfg: IteratedConfig = IteratedConfig()) -> float:
    return 1 / (1 << cfg.tag_bits)
