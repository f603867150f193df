"""Arithmetic labeling schemes and equality protocols on paths.

Numbers are written right-aligned on a segment of L nodes: the node at
offset o (0 = leftmost) holds bit L-1-o of the value, so the most
significant bit sits on the left. The fingerprint of a bitstring s is
sum_{i>=1} s[i] * r^i mod q with s[1] the leftmost bit.

The module has three layers:

* plain functions (poly_eval, primes, traces of honest labels),
* node-level check helpers shared by every protocol that embeds a gadget,
* standalone protocols: gt, add, modadd, eq2, mult, modmult.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .path_encoding import EqualityInstance, from_bits, read_string, to_bits
from .runtime import ConfigError, Network, Protocol, Transcript, View


# ---------------------------------------------------------------- numbers

def poly_eval(q: int, r: int, s: str) -> int:
    if not 0 <= r < q:
        raise ValueError(f"evaluation point {r} outside [0, {q})")
    acc = 0
    p = 1
    for ch in s:
        p = p * r % q
        if ch == "1":
            acc += p
    return acc % q


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


@lru_cache(maxsize=None)
def smallest_prime_in(lo: int, hi: int) -> int:
    for x in range(max(lo, 2), hi + 1):
        if is_prime(x):
            return x
    raise ValueError(f"no prime in [{lo}, {hi}]")


def eq2_modulus(ell: int) -> int:
    """Smallest prime in [l^2, 2 l^2]."""
    ell = max(ell, 2)
    return smallest_prime_in(ell * ell, 2 * ell * ell)


def collision_points(q: int, a: str, b: str) -> list[int]:
    """All r in [0, q) where the two fingerprints agree."""
    return [r for r in range(q) if poly_eval(q, r, a) == poly_eval(q, r, b)]


def nbits(x: int) -> int:
    return max(1, int(x).bit_length())


def vbit(value: int, L: int, o: int) -> int:
    return (value >> (L - 1 - o)) & 1


# ---------------------------------------------------------- honest traces
# Each returns one entry per offset 0..L-1 (left to right).

def gt_trace(a: int, b: int, L: int) -> list[int]:
    """1-bit GT labels: 0 left of the pivot, 1 from the pivot on."""
    out = []
    seen = 0
    for o in range(L):
        if not seen and vbit(a, L, o) != vbit(b, L, o):
            seen = 1
        out.append(seen)
    return out


def add_trace(a: int, b: int, L: int) -> list[int]:
    """Carry out of each position for a + b (carries flow right to left)."""
    out = [0] * L
    c = 0
    for o in range(L - 1, -1, -1):
        s = vbit(a, L, o) + vbit(b, L, o) + c
        c = s >> 1
        out[o] = c
    return out


def fp_trace(bits: Sequence[int], q: int, r: int) -> tuple[list[int], int]:
    """Prefix fingerprints z3 and the total z4 for a bit sequence."""
    pre = []
    acc = 0
    p = 1
    for b in bits:
        p = p * r % q
        if b:
            acc = (acc + p) % q
        pre.append(acc)
    return pre, acc


# ----------------------------------------------------- node check helpers

def gt_ok(x: int, xl: int, a: int, b: int, rightmost: bool) -> bool:
    if x == 0:
        ok = a == b and xl == 0
    elif x == 1:
        ok = xl == 1 or (a == 1 and b == 0)
    else:
        return False
    # the rightmost node must carry 1, which forces a pivot to exist
    return ok and (x == 1 or not rightmost)


def add_ok(k: int, kin: int, a: int, b: int, c: int, leftmost: bool) -> bool:
    s = a + b + kin
    if (s & 1) != c or (s >> 1) != k:
        return False
    return not leftmost or k == 0


def fp_ok(me: dict, lf: dict | None, keys: tuple, bit: int, q: int, last: bool, L: int | None = None) -> bool:
    """One node of a fingerprint chain (z1 point, z2 index, z3 prefix, z4 total)."""
    k1, k2, k3, k4 = keys
    z1 = me.get(k1)
    z2 = me.get(k2)
    z3 = me.get(k3)
    z4 = me.get(k4)
    if z1 is None or z2 is None or z3 is None or z4 is None:
        return False
    if z1 >= q or z3 >= q or z4 >= q:
        return False
    if lf is None:
        if z2 != 1:
            return False
        prev = 0
    else:
        if lf.get(k1) != z1 or lf.get(k4) != z4 or lf.get(k2) != z2 - 1:
            return False
        prev = lf.get(k3, 0)
    if z3 != (prev + (bit * pow(z1, z2, q) if bit else 0)) % q:
        return False
    if last:
        if z3 != z4:
            return False
        if L is not None and z2 != L:
            return False
    return True


# ------------------------------------------------- single-path PLS schemes

class PathScheme(Protocol):
    """Protocol on a bare path 0..L-1 whose nodes hold input bits."""

    def __init__(self, L: int, inputs: dict[str, int], rounds: tuple[str, ...]):
        self.rounds = rounds
        self.L = L
        self.values = inputs
        ins = [{k: vbit(val, L, o) for k, val in inputs.items()} for o in range(L)]
        for o in range(L):
            ins[o]["pl"] = o - 1 if o > 0 else None
            ins[o]["pr"] = o + 1 if o < L - 1 else None
        super().__init__(Network.path(L, ins))

    def nbrs(self, view: View):
        return view.inp["pl"], view.inp["pr"]


class GtScheme(PathScheme):
    name = "gt"

    def __init__(self, a: int, b: int, L: int):
        super().__init__(L, {"a": a, "b": b}, ("P",))
        self.schema[0] = {"x": 1}

    def fill(self, rnd, tr, key):
        a, b = self.values["a"], self.values["b"]
        return {o: {"x": x} for o, x in enumerate(gt_trace(a, b, self.L))}

    def decide(self, v, view):
        pl, pr = self.nbrs(view)
        me = view.lab(0)
        xl = view.lab(0, pl).get("x", 0) if pl is not None else 0
        return gt_ok(me.get("x", -1), xl, view.inp["a"], view.inp["b"], pr is None)


class AddScheme(PathScheme):
    name = "add"

    def __init__(self, a: int, b: int, c: int, L: int):
        super().__init__(L, {"a": a, "b": b, "c": c}, ("P",))
        self.schema[0] = {"k": 1}

    def fill(self, rnd, tr, key):
        a, b = self.values["a"], self.values["b"]
        return {o: {"k": k} for o, k in enumerate(add_trace(a, b, self.L))}

    def decide(self, v, view):
        pl, pr = self.nbrs(view)
        me = view.lab(0)
        kin = view.lab(0, pr).get("k", 0) if pr is not None else 0
        i = view.inp
        return add_ok(me.get("k", -1), kin, i["a"], i["b"], i["c"], pl is None)


class ModAddScheme(PathScheme):
    """a + b = c (mod N) via a case flag f: a + b = s and c + f*N = s, plus N > c."""
    name = "modadd"

    def __init__(self, N: int, a: int, b: int, c: int, L: int):
        super().__init__(L, {"a": a, "b": b, "c": c, "N": N}, ("P",))
        self.schema[0] = {"s": 1, "k1": 1, "k2": 1, "f": 1, "x": 1}

    def fill(self, rnd, tr, key):
        vals = self.values
        return modadd_fill(vals["a"], vals["b"], vals["c"], vals["N"], self.L, "")

    def decide(self, v, view):
        pl, pr = self.nbrs(view)
        me = view.lab(0)
        lf = view.lab(0, pl) if pl is not None else None
        rt = view.lab(0, pr) if pr is not None else None
        i = view.inp
        return modadd_ok(me, lf, rt, "", i["a"], i["b"], i["c"], i["N"])


def modadd_fill(a: int, b: int, c: int, N: int, L: int, p: str) -> dict[int, dict]:
    s = a + b
    f = 1 if s >= N else 0
    k1 = add_trace(a, b, L)
    k2 = add_trace(c, f * N, L)
    x = gt_trace(N, c, L)
    return {o: {p + "s": vbit(s, L, o), p + "k1": k1[o], p + "k2": k2[o], p + "f": f, p + "x": x[o]}
            for o in range(L)}


def modadd_ok(me: dict, lf: dict | None, rt: dict | None, p: str, a: int, b: int, c: int, N: int) -> bool:
    f = me.get(p + "f")
    s = me.get(p + "s")
    if f not in (0, 1) or s not in (0, 1):
        return False
    if lf is not None and lf.get(p + "f") != f:
        return False
    kin1 = rt.get(p + "k1", 0) if rt is not None else 0
    kin2 = rt.get(p + "k2", 0) if rt is not None else 0
    if not add_ok(me.get(p + "k1", -1), kin1, a, b, s, lf is None):
        return False
    if not add_ok(me.get(p + "k2", -1), kin2, c, f & N, s, lf is None):
        return False
    xl = lf.get(p + "x", 0) if lf is not None else 0
    return gt_ok(me.get(p + "x", -1), xl, N, c, rt is None)


def gt_scheme(alpha: int, beta: int, width: int | None = None) -> GtScheme:
    L = width or max(nbits(alpha), nbits(beta))
    return GtScheme(alpha, beta, L)


def add_scheme(alpha: int, beta: int, gamma: int, width: int | None = None) -> AddScheme:
    L = width or max(nbits(alpha), nbits(beta), nbits(gamma))
    return AddScheme(alpha, beta, gamma, L)


def mod_add_scheme(N: int, alpha: int, beta: int, gamma: int, width: int | None = None) -> ModAddScheme:
    if not (alpha < N and beta < N and gamma < N):
        raise ConfigError("modular addition needs alpha, beta, gamma < N")
    L = width or nbits(N) + 1
    if nbits(2 * N) > L:
        raise ConfigError(f"width {L} cannot hold a sum below 2N={2 * N}")
    return ModAddScheme(N, alpha, beta, gamma, L)


# ------------------------------------------------------------ equality

@dataclass(frozen=True)
class Eq2Base:
    """The two-round fingerprint equality protocol, as a reusable building block.

    An embedding protocol owns the coin at the leftmost node of P and the
    four label fields per node of P and P'.
    """
    rounds: tuple[str, ...] = ("V", "P")
    perfect_completeness: bool = True

    def modulus(self, L: int) -> int:
        return eq2_modulus(L)

    def widths(self, L: int) -> dict[str, int]:
        q = self.modulus(L)
        w = nbits(q - 1)
        return {"1": w, "2": nbits(L), "3": w, "4": w}

    def soundness(self, L: int) -> float:
        return L / self.modulus(L)


EQ2 = Eq2Base()


def eq_keys(pre: str) -> tuple[str, str, str, str]:
    return (pre + "1", pre + "2", pre + "3", pre + "4")


def eq_side_fill(bits: Sequence[int], q: int, r: int, pre: str) -> list[dict]:
    k1, k2, k3, k4 = eq_keys(pre)
    z3, z4 = fp_trace(bits, q, r)
    return [{k1: r, k2: i + 1, k3: z3[i], k4: z4} for i in range(len(bits))]


class Eq2Protocol(Protocol):
    """Equality of two strings on paths P and P' joined by a marked edge."""
    name = "eq2"
    rounds = ("V", "P")

    def __init__(self, inst: EqualityInstance):
        a, b = inst.alpha, inst.alpha2
        if a.gap != 1 or b.gap != 1:
            raise ConfigError("eq2 expects gap 1")
        self.inst = inst
        self.L = len(a.nodes)
        self.q = eq2_modulus(self.L)
        nodes = list(a.nodes) + list(b.nodes)
        n = max(nodes) + 1
        ins = [dict() for _ in range(n)]
        pa, pb = a.placement(), b.placement()
        extra = []
        for side, ds, pl in ((0, a, pa), (1, b, pb)):
            nd = ds.nodes
            for i, v in enumerate(nd):
                ins[v] = {"side": side, "bit": pl.get(v, 0),
                          "pl": nd[i - 1] if i else None, "pr": nd[i + 1] if i + 1 < len(nd) else None,
                          "bridge": None}
            extra += [(nd[i], nd[i + 1]) for i in range(len(nd) - 1)]
        u, w = inst.bridge
        ins[u]["bridge"] = w
        ins[w]["bridge"] = u
        extra.append((u, w))
        net = Network(n, [frozenset() for _ in range(n)], ins)
        nb = [set() for _ in range(n)]
        for x, y in extra:
            nb[x].add(y)
            nb[y].add(x)
        net.adj = [frozenset(s) for s in nb]
        super().__init__(net)
        self.schema[0] = {"r": nbits(self.q - 1)}
        self.schema[1] = {k: w for k, w in zip(eq_keys("z"), EQ2.widths(self.L).values())}
        self.leftP = a.nodes[0]

    def coin_request(self, rnd, tr, v):
        return [("r", self.q)] if v == self.leftP else []

    def coin_nodes(self, rnd, tr):
        return [self.leftP]

    def fill(self, rnd, tr, key):
        r = tr.coins(0, self.leftP)["r"]
        out = {}
        for ds in (self.inst.alpha, self.inst.alpha2):
            bits = [int(c) for c in ds.node_bits()]
            for v, lab in zip(ds.nodes, eq_side_fill(bits, self.q, r, "z")):
                out[v] = lab
        return out

    def decide(self, v, view):
        inp = view.inp
        pl, pr = inp["pl"], inp["pr"]
        me = view.lab(1)
        lf = view.lab(1, pl) if pl is not None else None
        keys = eq_keys("z")
        if not fp_ok(me, lf, keys, inp["bit"], self.q, pr is None, self.L):
            return False
        if v == self.leftP and me.get("z1") != view.coins(0).get("r"):
            return False
        w = inp["bridge"]
        if w is not None:
            other = view.lab(1, w)
            if other.get("z1") != me.get("z1") or other.get("z4") != me.get("z4"):
                return False
        return True


def eq2_protocol(inst: EqualityInstance) -> Eq2Protocol:
    return Eq2Protocol(inst)


def eq2_soundness(L: int) -> float:
    return L / eq2_modulus(L)


# ------------------------------------------------- segmented path framework

class PathAdj:
    """Adjacency of the path 0..n-1 computed on demand (no per-node sets)."""
    __slots__ = ("n",)

    def __init__(self, n: int):
        self.n = n

    def __getitem__(self, v: int) -> frozenset:
        s = []
        if v > 0:
            s.append(v - 1)
        if v + 1 < self.n:
            s.append(v + 1)
        return frozenset(s)

    def __len__(self):
        return self.n


class Ctx:
    """Per-node view of a segmented path: own, in-segment left and right labels per prover round."""
    __slots__ = ("v", "view", "me", "lf", "rt", "pl", "pr", "sl")

    def __init__(self, proto: "SegChain", v: int, view: View):
        self.v = v
        self.view = view
        n = proto.net.n
        self.pl = v - 1 if v > 0 else None
        self.pr = v + 1 if v + 1 < n else None
        prs = proto.prover_rounds
        me = {r: view.lab(r) for r in prs}
        self.me = me
        self.sl = me[0].get("sl", 0) == 1
        if self.pl is not None and not self.sl:
            self.lf = {r: view.lab(r, self.pl) for r in prs}
        else:
            self.lf = None
        if self.pr is not None and view.lab(0, self.pr).get("sl", 0) != 1:
            self.rt = {r: view.lab(r, self.pr) for r in prs}
        else:
            self.rt = None


class SegChain(Protocol):
    """A path cut into segments of a fixed length L, with base equality between adjacent segments.

    Subclasses supply the layout (round-0 field `sl` marks segment-leftmost
    nodes), `pair_type_right` / `pair_type_left` naming the condition set
    shared by a segment and its right / left neighbour, and `conds`: a map
    from pair type to tuples (name, key in left segment, key in right segment).
    The last two rounds are the base equality: coins, then labels.
    """

    L: int
    base: Eq2Base = EQ2
    key_round: dict[str, int]

    def __init__(self, n: int, inputs):
        net = Network(n, PathAdj(n), inputs)
        super().__init__(net)
        self.prover_rounds = tuple(i for i, a in enumerate(self.rounds) if a == "P")
        self.eq_coin_round = len(self.rounds) - 2
        self.eq_round = len(self.rounds) - 1
        self.q_eq = self.base.modulus(self.L)
        self._kcache: dict[str, tuple] = {}

    # -- condition plumbing
    conds: dict = {}

    def pair_type_right(self, lab0: dict):
        raise NotImplementedError

    def pair_type_left(self, lab0: dict):
        raise NotImplementedError

    def keys(self, side: str, name: str) -> tuple:
        k = side + name
        t = self._kcache.get(k)
        if t is None:
            t = self._kcache[k] = eq_keys(k + ".")
        return t

    def declare_eq_schema(self):
        w = self.base.widths(self.L)
        names = {c[0] for cs in self.conds.values() for c in cs}
        sch = {}
        for nm in names:
            for side in ("R", "L"):
                for k, ww in zip(self.keys(side, nm), w.values()):
                    sch[k] = ww
        self.schema[self.eq_round] = sch
        self.schema[self.eq_coin_round] = {"c" + nm: nbits(self.q_eq - 1) for nm in names}

    def region(self, rnd, v):
        return v // self.L

    def seg_nodes(self, s: int) -> range:
        return range(s * self.L, min((s + 1) * self.L, self.net.n))

    def track(self, tr: Transcript, v: int, key: str) -> int:
        r = self.key_round.get(key)
        if r is None:
            return self.net.inputs[v].get(key, 0)
        return tr.lab(r, v).get(key, 0)

    def coin_request(self, rnd, tr, v):
        if rnd == self.eq_coin_round:
            lab0 = tr.lab(0, v)
            if lab0.get("sl") != 1:
                return []
            t = self.pair_type_right(lab0)
            if t is None:
                return []
            return [("c" + c[0], self.q_eq) for c in self.conds[t]]
        return self.other_coin_request(rnd, tr, v)

    def other_coin_request(self, rnd, tr, v):
        return []

    def coin_nodes(self, rnd, tr):
        if rnd == self.eq_coin_round:
            return range(0, self.net.n, self.L)
        return self.other_coin_nodes(rnd, tr)

    def other_coin_nodes(self, rnd, tr):
        return range(self.net.n)

    def fill(self, rnd, tr, key):
        if rnd == self.eq_round:
            return self.fill_eq(tr, key)
        return self.fill_round(rnd, tr, key)

    def fill_round(self, rnd, tr, s):
        raise NotImplementedError

    def fill_eq(self, tr: Transcript, s: int) -> dict[int, dict]:
        nodes = self.seg_nodes(s)
        out = {v: {} for v in nodes}
        first = nodes[0]
        lab0 = tr.lab(0, first)
        q = self.q_eq
        tr_ = self.pair_type_right(lab0)
        if tr_ is not None:
            coins = tr.coins(self.eq_coin_round, first)
            for nm, lk, _ in self.conds[tr_]:
                r = coins.get("c" + nm, 0)
                bits = [self.track(tr, v, lk) for v in nodes]
                for v, lab in zip(nodes, eq_side_fill(bits, q, r, "R" + nm + ".")):
                    out[v].update(lab)
        tl = self.pair_type_left(lab0)
        if tl is not None and s > 0:
            coins = tr.coins(self.eq_coin_round, first - self.L)
            for nm, _, rk in self.conds[tl]:
                r = coins.get("c" + nm, 0)
                bits = [self.track(tr, v, rk) for v in nodes]
                for v, lab in zip(nodes, eq_side_fill(bits, q, r, "L" + nm + ".")):
                    out[v].update(lab)
        return out

    # -- verification
    def bit(self, c: Ctx, key: str) -> int:
        r = self.key_round.get(key)
        if r is None:
            return c.view.inp.get(key, 0)
        return c.me[r].get(key, 0)

    def check_eq(self, c: Ctx) -> bool:
        er = self.eq_round
        me = c.me[er]
        lf = c.lf[er] if c.lf is not None else None
        last = c.rt is None
        q = self.q_eq
        L = self.L
        lab0 = c.me[0]
        view = c.view
        t = self.pair_type_right(lab0)
        if t is not None:
            if last and c.pr is None:
                return False
            coins = view.coins(self.eq_coin_round) if c.sl else None
            other = view.lab(er, c.pr) if last else None
            for nm, lk, _ in self.conds[t]:
                ks = self.keys("R", nm)
                if not fp_ok(me, lf, ks, self.bit(c, lk), q, last, L):
                    return False
                if coins is not None and me.get(ks[0]) != coins.get("c" + nm):
                    return False
                if other is not None:
                    ko = self.keys("L", nm)
                    if other.get(ko[0]) != me[ks[0]] or other.get(ko[3]) != me[ks[3]]:
                        return False
        t = self.pair_type_left(lab0)
        if t is not None:
            if c.sl and c.pl is None:
                return False
            other = view.lab(er, c.pl) if c.sl else None
            for nm, _, rk in self.conds[t]:
                ks = self.keys("L", nm)
                if not fp_ok(me, lf, ks, self.bit(c, rk), q, last, L):
                    return False
                if other is not None:
                    ko = self.keys("R", nm)
                    if other.get(ko[0]) != me[ks[0]] or other.get(ko[3]) != me[ks[3]]:
                        return False
        if c.sl and c.pl is not None:
            # both sides of a segment boundary must agree on the condition set
            if self.pair_type_right(view.lab(0, c.pl)) != t:
                return False
        return True

    def decide(self, v, view):
        c = Ctx(self, v, view)
        if c.pl is None and not c.sl:
            return False
        return self.check_local(c) and self.check_eq(c)

    def check_local(self, c: Ctx) -> bool:
        raise NotImplementedError


# --------------------------------------------------------- multiplication

class MultGadget:
    """alpha * beta = gamma over m sub-clusters (one per bit of beta), each a segment of L nodes.

    Sub-cluster i (1-based) carries: z1 = alpha << (i-1), z2 = beta, z3 = gamma,
    z4 = beta mod 2^i, z5 = beta mod 2^(i-1), z6 = z2 AND marker, z7 = bit_i(beta) * z1,
    z8 = alpha * z5, z9 = alpha * z4 = z7 + z8 (carry c), and helper tracks:
    mk = marker 2^(i-1), lm = strictly-left-of-marker, bk = bit i of beta (uniform),
    sp / mp = copies of the previous sub-cluster's z1 / mk.
    """

    FIELDS = ("z1", "z2", "z3", "z4", "z5", "z6", "z7", "z8", "z9", "mk", "lm", "bk", "c", "sp", "mp")
    LINKS = (("z1", "sp"), ("mk", "mp"), ("z2", "z2"), ("z3", "z3"), ("z4", "z5"), ("z9", "z8"))

    def __init__(self, prefix: str):
        self.p = prefix
        self.k = {f: prefix + f for f in self.FIELDS}
        self.conds = tuple((prefix + "e" + str(j), prefix + a, prefix + b) for j, (a, b) in enumerate(self.LINKS))

    def widths(self) -> dict[str, int]:
        return {k: 1 for k in self.k.values()}

    def fill(self, alpha: int, beta: int, gamma: int, i: int, L: int) -> list[dict]:
        k = self.k
        z1 = alpha << (i - 1)
        mk = 1 << (i - 1)
        bi = (beta >> (i - 1)) & 1
        z4 = beta & ((1 << i) - 1)
        z5 = beta & (mk - 1)
        z7 = z1 if bi else 0
        z8 = alpha * z5
        z9 = alpha * z4
        carry = add_trace(z7, z8, L)
        vals = {"z1": z1, "z2": beta, "z3": gamma, "z4": z4, "z5": z5, "z6": beta & mk,
                "z7": z7, "z8": z8, "z9": z9, "mk": mk}
        if i > 1:
            vals["sp"] = alpha << (i - 2)
            vals["mp"] = mk >> 1
        out = []
        for o in range(L):
            pos = L - 1 - o
            lab = {k[f]: (x >> pos) & 1 for f, x in vals.items()}
            lab[k["lm"]] = 1 if pos > i - 1 else 0
            lab[k["bk"]] = bi
            lab[k["c"]] = carry[o]
            out.append(lab)
        if any(x >> L for x in vals.values()):
            raise ConfigError(f"sub-cluster {i} overflows {L} positions")
        return out

    def check(self, me: dict, lf: dict | None, rt: dict | None, first: bool, last: bool,
              a: int | None, b: int | None, cc: int | None) -> bool:
        k = self.k
        g = me.get
        z1, z2, z3 = g(k["z1"]), g(k["z2"]), g(k["z3"])
        z4, z5, z6 = g(k["z4"]), g(k["z5"]), g(k["z6"])
        z7, z8, z9 = g(k["z7"]), g(k["z8"]), g(k["z9"])
        mk, lm, bk = g(k["mk"]), g(k["lm"]), g(k["bk"])
        if None in (z1, z2, z3, z4, z5, z6, z7, z8, z9, mk, lm, bk):
            return False
        if first:
            if a is not None and z1 != a:
                return False
            if b is not None and z2 != b:
                return False
            if cc is not None and z3 != cc:
                return False
            if mk != (1 if rt is None else 0) or z5 or z8:
                return False
        else:
            if z1 != (rt.get(k["sp"], 0) if rt is not None else 0):
                return False
            if mk != (rt.get(k["mp"], 0) if rt is not None else 0):
                return False
            if lf is None and (g(k["sp"], 0) or g(k["mp"], 0)):
                return False  # the shift may not push a 1 out of the segment
        if rt is None:
            if lm != 0:
                return False
        elif lm != (rt.get(k["lm"], 0) | rt.get(k["mk"], 0)):
            return False
        if z6 != (z2 & mk) or z4 != (z5 | z6):
            return False
        if (mk or lm) and z5:
            return False
        if lm and z4:
            return False
        if lf is not None and lf.get(k["bk"]) != bk:
            return False
        if mk and bk != z2:
            return False
        if z7 != (bk & z1):
            return False
        kin = rt.get(k["c"], 0) if rt is not None else 0
        if not add_ok(g(k["c"], -1), kin, z7, z8, z9, lf is None):
            return False
        if last:
            if z9 != z3:
                return False
            if lm and z2:
                return False
        return True


class ModMultGadget:
    """alpha * beta = gamma (mod N): alpha*beta = P, t*N = R, R + gamma = P, and N > gamma."""

    def __init__(self, prefix: str):
        self.p = prefix
        self.A = MultGadget(prefix + "A")
        self.B = MultGadget(prefix + "B")
        self.kt, self.kk, self.kx = prefix + "t", prefix + "k", prefix + "x"
        self.conds = self.A.conds + self.B.conds

    def widths(self) -> dict[str, int]:
        w = self.A.widths()
        w.update(self.B.widths())
        w.update({self.kt: 1, self.kk: 1, self.kx: 1})
        return w

    def fill(self, alpha: int, beta: int, gamma: int, N: int, i: int, L: int) -> list[dict]:
        prod = alpha * beta
        t = prod // N
        la = self.A.fill(alpha, beta, prod, i, L)
        lb = self.B.fill(t, N, t * N, i, L)
        for o in range(L):
            la[o].update(lb[o])
        if i == 1:
            kk = add_trace(t * N, gamma, L)
            x = gt_trace(N, gamma, L)
            for o in range(L):
                la[o][self.kt] = vbit(t, L, o)
                la[o][self.kk] = kk[o]
                la[o][self.kx] = x[o]
        return la

    def check(self, me, lf, rt, first, last, a, b, cc, N) -> bool:
        if first:
            if not self.A.check(me, lf, rt, True, last, a, b, None):
                return False
            if not self.B.check(me, lf, rt, True, last, me.get(self.kt, 0), N, None):
                return False
            kin = rt.get(self.kk, 0) if rt is not None else 0
            if not add_ok(me.get(self.kk, -1), kin, me[self.B.k["z3"]], cc, me[self.A.k["z3"]], lf is None):
                return False
            xl = lf.get(self.kx, 0) if lf is not None else 0
            return gt_ok(me.get(self.kx, -1), xl, N, cc, rt is None)
        return (self.A.check(me, lf, rt, False, last, None, None, None)
                and self.B.check(me, lf, rt, False, last, None, None, None))


class _MultLayout(SegChain):
    """Shared layout of the standalone multiplication protocols: m sub-clusters of L nodes."""
    rounds = ("P", "V", "P")

    def __init__(self, m: int, L: int, values: dict[str, int], base: Eq2Base):
        if not base.perfect_completeness:
            raise ConfigError("base equality protocol must have perfect completeness")
        self.base = base
        self.m = m
        self.L = L
        self.values = values
        n = m * L
        ins = [{} for _ in range(n)]
        for o in range(L):
            ins[o] = {k: vbit(x, L, o) for k, x in values.items()}
        super().__init__(n, ins)
        self.key_round = {}

    def pair_type_right(self, lab0):
        return None if lab0.get("ls") else "m"

    def pair_type_left(self, lab0):
        return None if lab0.get("fs") else "m"

    def struct_labels(self, s: int) -> list[dict]:
        return [{"sl": 1 if o == 0 else 0, "fs": int(s == 0), "ls": int(s == self.m - 1)} for o in range(self.L)]

    def check_struct(self, c: Ctx) -> bool:
        me = c.me[0]
        fs, ls = me.get("fs"), me.get("ls")
        if fs not in (0, 1) or ls not in (0, 1):
            return False
        if c.lf is not None and (c.lf[0].get("fs") != fs or c.lf[0].get("ls") != ls):
            return False
        if c.sl and fs != (1 if c.pl is None else 0):
            return False
        if c.rt is None and ls != (1 if c.pr is None else 0):
            return False
        return True

    def fill_round(self, rnd, tr, s):
        nodes = self.seg_nodes(s)
        labs = self.gadget_labels(s + 1)
        st = self.struct_labels(s)
        return {v: {**st[o], **labs[o]} for o, v in enumerate(nodes)}


class MultToEq(_MultLayout):
    name = "mult"

    def __init__(self, alpha, beta, gamma, m, base=EQ2):
        self.g = MultGadget("")
        super().__init__(m, 2 * m, {"a": alpha, "b": beta, "c": gamma}, base)
        self.conds = {"m": self.g.conds}
        self.key_round = {k: 0 for k in self.g.k.values()}
        self.schema[0] = {"sl": 1, "fs": 1, "ls": 1, **self.g.widths()}
        self.declare_eq_schema()

    def gadget_labels(self, i):
        a, b = self.values["a"], self.values["b"]
        # the honest prover writes the true product; a false gamma then fails the last sub-cluster
        return self.g.fill(a, b, self.values["c"], i, self.L)

    def check_local(self, c):
        if not self.check_struct(c):
            return False
        me = c.me[0]
        first, last = me["fs"] == 1, me["ls"] == 1
        lf = c.lf[0] if c.lf is not None else None
        rt = c.rt[0] if c.rt is not None else None
        inp = c.view.inp
        return self.g.check(me, lf, rt, first, last, inp.get("a", 0), inp.get("b", 0), inp.get("c", 0))


class ModMultProtocol(_MultLayout):
    name = "modmult"

    def __init__(self, N, alpha, beta, gamma, m, base=EQ2):
        self.g = ModMultGadget("")
        super().__init__(m, 2 * m, {"a": alpha, "b": beta, "c": gamma, "N": N}, base)
        self.conds = {"m": self.g.conds}
        w = self.g.widths()
        self.key_round = {k: 0 for k in w}
        self.schema[0] = {"sl": 1, "fs": 1, "ls": 1, **w}
        self.declare_eq_schema()

    def gadget_labels(self, i):
        v = self.values
        return self.g.fill(v["a"], v["b"], v["c"], v["N"], i, self.L)

    def check_local(self, c):
        if not self.check_struct(c):
            return False
        me = c.me[0]
        first, last = me["fs"] == 1, me["ls"] == 1
        lf = c.lf[0] if c.lf is not None else None
        rt = c.rt[0] if c.rt is not None else None
        i = c.view.inp
        return self.g.check(me, lf, rt, first, last, i.get("a", 0), i.get("b", 0), i.get("c", 0), i.get("N", 0))


def _mult_width(values: Sequence[int], ell: int | None, ell_prime: int | None) -> int:
    need = max(nbits(x) for x in values)
    lp = ell_prime if ell_prime is not None else need
    if lp < need:
        raise ConfigError(f"inputs need {need} bits, ell'={lp}")
    if ell is not None and 2 * lp * lp > ell:
        raise ConfigError(f"ell'={lp} exceeds sqrt(ell/2) for ell={ell}")
    return lp


def mult_to_eq(alpha: int, beta: int, gamma: int, base_eq: Eq2Base = EQ2, *,
               ell: int | None = None, ell_prime: int | None = None) -> MultToEq:
    """Layout: ell' sub-clusters of 2*ell' nodes, inputs right-aligned in the first one."""
    lp = _mult_width((alpha, beta), ell, ell_prime)
    if gamma >> (2 * lp):
        raise ConfigError(f"gamma={gamma} does not fit in {2 * lp} bits")
    return MultToEq(alpha, beta, gamma, lp, base_eq)


def mod_mult(N: int, alpha: int, beta: int, gamma: int, base_eq: Eq2Base = EQ2, *,
             ell: int | None = None, ell_prime: int | None = None) -> ModMultProtocol:
    if not (alpha < N and beta < N and gamma < N):
        raise ConfigError("modular multiplication needs alpha, beta, gamma < N")
    lp = _mult_width((N,), ell, ell_prime)
    return ModMultProtocol(N, alpha, beta, gamma, lp, base_eq)


def composed_rounds(base_rounds: int) -> int:
    """Round count of a labeling round followed by a base protocol, merging adjacent prover rounds."""
    return base_rounds + 1 - (base_rounds % 2)
