"""Equality of long gapped strings reduced to equality of short segment strings.

Layout: each of the two paths is cut into ell clusters; bit i of the input
string sits on the first node of cluster i. A cluster is S segments of L
nodes. Every segment carries, one bit per node and right-aligned, the
values the cluster works with (q, r, powers of r, prefix fingerprints) and
the certificate that q is a prime in the right range. Adjacent segments
prove equalities between their strings with the base equality protocol.

Rounds: P (layout, q and its certificate) -> V (the marked nodes of q in
the first segment draw the bits of r) -> P (fingerprint values and their
arithmetic proofs) -> V (base-equality coins) -> P (base-equality labels).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .arith_schemes import (EQ2, Ctx, Eq2Base, ModMultGadget, SegChain, add_ok, gt_ok, is_prime,
                            modadd_fill, modadd_ok, nbits, poly_eval, smallest_prime_in, vbit)
from .path_encoding import EqualityInstance, path_pair, read_string
from .runtime import ConfigError


def sr_modulus(ell: int) -> int:
    """Smallest prime in [2 l^2, 3 l^2]."""
    return smallest_prime_in(2 * ell * ell, 3 * ell * ell)


@dataclass(frozen=True)
class ClusterLayout:
    ell: int
    c1: int = 6
    c2: int = 15

    def __post_init__(self):
        if self.ell < 4 or self.ell & (self.ell - 1):
            raise ConfigError(f"string length must be a power of two >= 4, got {self.ell}")
        B, L, S = self.qbits, self.seg_len, self.segs
        if L < 2 * B:
            raise ConfigError(f"segment of {L} nodes cannot hold a {2 * B}-bit product (raise c1)")
        if B + S - 1 > L:
            raise ConfigError(f"{S} segments per cluster shift a {B}-bit value past {L} positions")

    @property
    def k(self) -> int:
        return self.ell.bit_length() - 1

    @cached_property
    def q(self) -> int:
        return sr_modulus(self.ell)

    @property
    def qbits(self) -> int:
        # bits of any q in [2 l^2, 3 l^2] for l a power of two
        return 2 * self.k + 2

    @property
    def seg_len(self) -> int:
        return self.c1 * self.k

    @property
    def segs(self) -> int:
        return max(math.ceil(self.c2 * self.k / self.c1), self.qbits)

    @property
    def cluster(self) -> int:
        return self.segs * self.seg_len

    @property
    def path_len(self) -> int:
        return self.ell * self.cluster

    def where(self, v: int) -> tuple[int, int, int, int]:
        """node -> (side, cluster 1-based, segment-in-cluster 0-based, offset)."""
        m = self.path_len
        side, x = divmod(v, m)
        i, y = divmod(x, self.cluster)
        j, o = divmod(y, self.seg_len)
        return side, i + 1, j, o


def sr_instance(bits: str, bits2: str, c1: int = 6, c2: int = 15) -> EqualityInstance:
    lay = ClusterLayout(len(bits), c1, c2)
    if len(bits2) != len(bits):
        raise ConfigError("strings must have equal length")
    return path_pair(bits, bits2, size=lay.path_len, gap=lay.cluster)


class _Inputs:
    """Lazy per-node inputs: side, the input bit on cluster-first nodes, bridge marks."""

    def __init__(self, lay: ClusterLayout, a: str, a2: str):
        self.lay = lay
        self.s = (a, a2)

    def __getitem__(self, v):
        side, i, j, o = self.lay.where(v)
        d = {"side": side}
        if j == 0 and o == 0:
            d["a"] = int(self.s[side][i - 1])
        m = self.lay.path_len
        if v == m - 1 or v == m:
            d["br"] = 1
        return d

    def __len__(self):
        return 2 * self.lay.path_len


def slot_offsets(L: int, B: int) -> list[int]:
    """Offsets of the counter slots: even positions (from the right, LSB = 1) below the top bit of q."""
    return [L - p for p in range(2, B, 2)]


def counter_bits(value: int, L: int, B: int) -> dict[int, int]:
    return {o: (value >> j) & 1 for j, o in enumerate(slot_offsets(L, B))}


CERT_SAME = ("w1", "rz1", "y1", "y3")
CERT_LATE = ("rz2", "y2")
W_FIRST = ("w2", "w4", "w6", "w7")
W_ALL = ("w2", "w3", "w4", "w5", "w6", "w7")
CROSS_CERT = (("w1", "w1"), ("rz1", "rz2"), ("y1", "y2"))
CROSS_W = (("w2", "w2"), ("w7", "w7"), ("w4", "w3"), ("w6", "w5"))


class SelfReduce(SegChain):
    """The self-reduction protocol. With cert_only=True only q and its certificate are laid
    out and checked (three rounds)."""

    name = "selfreduce"
    region_cache = 512

    def __init__(self, inst: EqualityInstance, base: Eq2Base = EQ2, c1: int = 6, c2: int = 15,
                 q: int | None = None, cert_only: bool = False):
        if not base.perfect_completeness:
            raise ConfigError("base equality protocol must have perfect completeness")
        ell = inst.alpha.length
        lay = ClusterLayout(ell, c1, c2)
        m = lay.path_len
        if (inst.alpha.gap != lay.cluster or len(inst.alpha.nodes) != m
                or inst.alpha.nodes != tuple(range(m)) or inst.alpha2.nodes != tuple(range(m, 2 * m))
                or inst.bridge != (m - 1, m)):
            raise ConfigError(f"instance geometry must be two paths of {m} nodes with gap {lay.cluster} "
                              f"(ell={ell}, c1={c1}, c2={c2})")
        self.rounds = ("P", "V", "P") if cert_only else ("P", "V", "P", "V", "P")
        self.cert_only = cert_only
        self.base = base
        self.lay = lay
        self.L = lay.seg_len
        self.q = lay.q if q is None else q
        self.strings = (read_string(inst.alpha), read_string(inst.alpha2))
        self.inst = inst
        self.Y = ModMultGadget("Y")
        self.W = ModMultGadget("W")
        super().__init__(2 * m, _Inputs(lay, *self.strings))
        self._build_schema()

    # ---------------------------------------------------------- schema
    def _build_schema(self):
        B = self.lay.qbits
        r0 = {k: 1 for k in ("sl", "fs", "ls", "fc", "lc", "sd", "w1", "qm", "par", "cs", "tp",
                             "rz1", "rz2", "rk", "y1", "y2", "y3", "yk")}
        r0["rp"] = 2
        r0.update(self.Y.widths())
        self.schema[0] = r0
        self.key_round = {k: 0 for k in r0}
        ci = list(CERT_SAME)
        cross = list(CROSS_CERT)
        first = [(x, x, x) for x in CERT_SAME] + list(self.Y.conds)
        later = [(x, x, x) for x in CERT_SAME + CERT_LATE] + list(self.Y.conds)
        bridge = [("w1", "w1", "w1")]
        if not self.cert_only:
            self.schema[1] = {"rb": 1}
            r2 = {k: 1 for k in W_ALL + ("ab",)}
            r2.update(self.W.widths())
            r2.update({"D" + k: 1 for k in ("s", "k1", "k2", "f", "x")})
            self.schema[2] = r2
            self.key_round.update({k: 2 for k in r2})
            first += [(x, x, x) for x in W_FIRST]
            later += [(x, x, x) for x in W_ALL] + list(self.W.conds)
            cross += list(CROSS_W)
            bridge += [("w2", "w2", "w2"), ("w7", "w7", "w7")]
        self.conds = {"i1": tuple(first), "i": tuple(later),
                      "x": tuple(("x" + a + b, a, b) for a, b in cross),
                      "b": tuple(("b" + a, a, a) for a, _, _ in bridge)}
        self.declare_eq_schema()
        _ = B

    def pair_type_right(self, lab0):
        if not lab0.get("ls"):
            return "i1" if lab0.get("fc") else "i"
        if not lab0.get("lc"):
            return "x"
        return "b" if lab0.get("sd") == 0 else None

    def pair_type_left(self, lab0):
        if not lab0.get("fs"):
            return "i1" if lab0.get("fc") else "i"
        if not lab0.get("fc"):
            return "x"
        return "b" if lab0.get("sd") == 1 else None

    # ---------------------------------------------------------- honest values
    def cert_values(self, i: int) -> dict[str, int]:
        q = self.q
        y1 = 2 * i - 1
        try:
            y3 = pow(y1, -1, q)
        except ValueError:
            y3 = 0  # no inverse: the honest prover has nothing valid to write
        return {"y1": y1, "y2": 2 * i - 3 if i > 1 else 0, "y3": y3}

    def w_values(self, side: int, i: int, r: int) -> dict[str, int]:
        q = self.q
        a = self.strings[side]
        return {"w2": r, "w3": pow(r, i - 1, q) if i > 1 else 0, "w4": pow(r, i, q),
                "w5": poly_eval(q, r, a[:i - 1]) if i > 1 else 0, "w6": poly_eval(q, r, a[:i]),
                "w7": poly_eval(q, r, a)}

    def fill_round(self, rnd, tr, s):
        if rnd == 0:
            return self._fill0(s)
        return self._fill2(tr, s)

    def _fill0(self, s: int) -> dict[int, dict]:
        lay = self.lay
        L, B, q, ell = self.L, lay.qbits, self.q, lay.ell
        v0 = s * L
        side, i, j, _ = lay.where(v0)
        S = lay.segs
        qb = q.bit_length()
        cv = self.cert_values(i)
        z1 = counter_bits(i - 1, L, B)
        z2 = counter_bits(i - 2, L, B) if i > 1 else {}
        ykc = [0] * L if i == 1 else _carries(cv["y2"], 2, L)
        rkc = self._range_carries(i, z2, L, qb)
        ylabs = self.Y.fill(cv["y1"], cv["y3"], 1, q, j + 1, L)
        top_o = L - 2 * ((qb - 1) // 2) if qb > 2 else None
        out = {}
        for o in range(L):
            p = L - o
            marked = p <= qb
            lab = {"sl": int(o == 0), "fs": int(j == 0), "ls": int(j == S - 1), "fc": int(i == 1),
                   "lc": int(i == ell), "sd": side, "rp": min(p - 1, 2), "w1": vbit(q, L, o),
                   "qm": int(marked), "par": (p & 1) if marked else 0, "cs": (qb - (2 * lay.k + 1)) & 1,
                   "tp": int(marked and (top_o is None or o < top_o)),
                   "rz1": z1.get(o, 0), "rz2": z2.get(o, 0), "rk": rkc[o],
                   "y1": vbit(cv["y1"], L, o), "y2": vbit(cv["y2"], L, o), "y3": vbit(cv["y3"], L, o),
                   "yk": ykc[o]}
            lab.update(ylabs[o])
            out[v0 + o] = lab
        return out

    @staticmethod
    def _range_carries(i: int, z2: dict, L: int, qb: int) -> list[int]:
        # z1 = z2 + 1 with the 1 entering as the carry into position 1; odd positions relay
        out = [0] * L
        if i == 1:
            return out
        c = 1
        slots = set(slot_offsets(L, qb))
        for o in range(L - 1, -1, -1):
            if o in slots:
                s = z2.get(o, 0) + c
                c = s >> 1
            out[o] = c
        return out

    def r_value(self, tr) -> int:
        r = 0
        for v in range(self.L):
            if v < self.L - self.q.bit_length() + 1:
                continue
            r = (r << 1) | tr.coins(1, v).get("rb", 0)
        return r

    def _fill2(self, tr, s: int, r: int | None = None) -> dict[int, dict]:
        lay = self.lay
        L, q = self.L, self.q
        v0 = s * L
        side, i, j, _ = lay.where(v0)
        if r is None:
            r = self.r_value(tr)
        w = self.w_values(side, i, r)
        ab = int(self.strings[side][i - 1])
        vals = dict(w)
        if i == 1:
            vals["w3"] = vals["w5"] = 0
        wl = self.W.fill(w["w3"], r, w["w4"], q, j + 1, L) if i > 1 else None
        dl = modadd_fill(w["w5"], w["w4"], w["w6"], q, L, "D") if (i > 1 and j == 0 and ab) else None
        out = {}
        for o in range(L):
            lab = {k: vbit(x, L, o) for k, x in vals.items()}
            lab["ab"] = ab
            if wl is not None:
                lab.update(wl[o])
            if dl is not None:
                lab.update(dl[o])
            out[v0 + o] = lab
        return out

    # ---------------------------------------------------------- coins
    def _draws(self, tr, v) -> bool:
        if v >= self.L:
            return False
        lab = tr.lab(0, v)
        if lab.get("sd") != 0 or not lab.get("fc") or not lab.get("fs") or lab.get("qm") != 1:
            return False
        left = tr.lab(0, v - 1).get("qm", 0) if v > 0 and not lab.get("sl") else 0
        return left == 1

    def other_coin_request(self, rnd, tr, v):
        if rnd == 1 and not self.cert_only:
            return [("rb", 2)] if self._draws(tr, v) else []
        return []

    def other_coin_nodes(self, rnd, tr):
        return range(self.L)

    # ---------------------------------------------------------- checks
    def check_local(self, c: Ctx) -> bool:
        if not self._check0(c):
            return False
        if not self.cert_only and not self._check2(c):
            return False
        return True

    def _check0(self, c: Ctx) -> bool:
        me = c.me[0]
        lf = c.lf[0] if c.lf is not None else None
        rt = c.rt[0] if c.rt is not None else None
        inp = c.view.inp
        g = me.get
        for k in ("fs", "ls", "fc", "lc", "sd", "cs"):
            if g(k) not in (0, 1):
                return False
        if g("sd") != inp["side"]:
            return False
        if lf is not None:
            for k in ("fs", "ls", "fc", "lc", "sd", "cs"):
                if lf.get(k) != g(k):
                    return False
        bridge = inp.get("br") == 1
        # cluster and path boundaries
        if c.sl:
            if (g("fs") == 1) != ("a" in inp):
                return False
            start = c.pl is None or (bridge and inp["side"] == 1)
            if start:
                if not (g("fs") and g("fc")):
                    return False
                if c.pl is not None:
                    u = c.view.lab(0, c.pl)
                    if u.get("ls") != 1 or u.get("lc") != 1:
                        return False
            else:
                u = c.view.lab(0, c.pl)
                if u.get("ls") != g("fs"):
                    return False
                if g("fs"):
                    if u.get("lc") != 0 or g("fc") != 0:
                        return False
                elif u.get("fc") != g("fc") or u.get("lc") != g("lc"):
                    return False
        elif "a" in inp:
            return False
        if rt is None:
            end = c.pr is None or (bridge and inp["side"] == 0)
            if end and not (g("ls") and g("lc")):
                return False
            if bridge and inp["side"] == 0 and c.pr is not None and c.view.lab(0, c.pr).get("sl") != 1:
                return False
        # position-from-right counter
        rp = g("rp")
        if rp != (0 if rt is None else min(rt.get("rp", 0) + 1, 2)):
            return False
        # q: odd, marked span, parity of positions, top slot tracking
        w1, qm = g("w1"), g("qm")
        lqm = lf.get("qm", 0) if lf is not None else 0
        if w1 not in (0, 1) or qm != (lqm | w1):
            return False
        if rp == 0 and w1 != 1:
            return False
        par = g("par")
        if qm:
            if par != (1 if rt is None else 1 - rt.get("par", 0)):
                return False
        elif par != 0:
            return False
        msb = qm == 1 and lqm == 0
        if msb and par != (1 + g("cs")) % 2:
            return False
        slot = qm == 1 and par == 0 and not msb
        tp_in = lf.get("tp", 0) if lf is not None else 0
        tp = g("tp")
        if not qm:
            if tp != 0:
                return False
        elif msb:
            if tp != 1:
                return False
        elif slot:
            if tp != 0:
                return False
        elif tp != tp_in:
            return False
        top = slot and tp_in == 1
        # range counters
        rz1, rz2, rk = g("rz1"), g("rz2"), g("rk")
        if not slot and (rz1 or rz2):
            return False
        kin = rt.get("rk", 0) if rt is not None else 1
        if g("fc"):
            if rz1 or rz2 or rk:
                return False
        elif slot:
            if not add_ok(rk, kin, rz2, 0, rz1, lf is None):
                return False
        else:
            if rk != kin or (lf is None and rk != 0):
                return False
        if g("lc") and top and rz1 != 1:
            return False
        # odd numbers and their inverses
        y1, y2, y3 = g("y1"), g("y2"), g("y3")
        if y1 not in (0, 1) or y2 not in (0, 1) or y3 not in (0, 1):
            return False
        if g("fc"):
            if y1 != (1 if rp == 0 else 0) or y2 or g("yk"):
                return False
        else:
            ykin = rt.get("yk", 0) if rt is not None else 0
            if not add_ok(g("yk", -1), ykin, y2, 1 if rp == 1 else 0, y1, lf is None):
                return False
        return self.Y.check(me, lf, rt, g("fs") == 1, g("ls") == 1, y1, y3, 1 if rp == 0 else 0, w1)

    def _check2(self, c: Ctx) -> bool:
        me0 = c.me[0]
        me = c.me[2]
        lf = c.lf[2] if c.lf is not None else None
        rt = c.rt[2] if c.rt is not None else None
        g = me.get
        ws = [g(k) for k in W_ALL]
        if any(x not in (0, 1) for x in ws):
            return False
        w2, w3, w4, w5, w6, w7 = ws
        ab = g("ab")
        if ab not in (0, 1) or (lf is not None and lf.get("ab") != ab):
            return False
        inp = c.view.inp
        if "a" in inp and ab != inp["a"]:
            return False
        w1 = me0["w1"]
        fs, ls, fc, lc = me0["fs"] == 1, me0["ls"] == 1, me0["fc"] == 1, me0["lc"] == 1
        if fc:
            if w4 != w2 or w6 != (ab & w2) or w3 or w5:
                return False
            if fs and me0["sd"] == 0:
                lqm = c.lf[0].get("qm", 0) if c.lf is not None else 0
                draws = me0["qm"] == 1 and lqm == 1
                if w2 != (c.view.coins(1).get("rb", -1) if draws else 0):
                    return False
        else:
            if not self.W.check(me, lf, rt, fs, ls, w3, w2, w4, w1):
                return False
            if fs:
                if ab == 0:
                    if w6 != w5:
                        return False
                elif not modadd_ok(me, lf, rt, "D", w5, w4, w6, w1):
                    return False
        if lc and w6 != w7:
            return False
        return True


def _carries(a: int, b: int, L: int) -> list[int]:
    from .arith_schemes import add_trace
    return add_trace(a, b, L)


def self_reduce(base: Eq2Base, inst: EqualityInstance, c1: int = 6, c2: int = 15) -> SelfReduce:
    return SelfReduce(inst, base, c1, c2)


def certify_q(layout: ClusterLayout, q_value: int, base: Eq2Base = EQ2) -> SelfReduce:
    """The q-certificate alone, on the layout's two paths (input strings all zero)."""
    z = "0" * layout.ell
    inst = path_pair(z, z, size=layout.path_len, gap=layout.cluster)
    if q_value.bit_length() > layout.seg_len:
        raise ConfigError(f"q={q_value} does not fit a segment of {layout.seg_len} nodes")
    return SelfReduce(inst, base, layout.c1, layout.c2, q=q_value, cert_only=True)


def honest_certificate_exists(ell: int, q: int) -> bool:
    """Whether every value the honest certificate needs is well defined for this q."""
    k = ell.bit_length() - 1
    if q % 2 == 0 or q.bit_length() not in (2 * k + 1, 2 * k + 2):
        return False
    return all(math.gcd(2 * i - 1, q) == 1 for i in range(1, ell + 1))


def sr_soundness(ell: int, c1: int = 6, base: Eq2Base = EQ2) -> float:
    return base.soundness(c1 * (ell.bit_length() - 1)) + 1 / ell


def is_valid_q(ell: int, q: int) -> bool:
    return is_prime(q) and 2 * ell * ell <= q <= 3 * ell * ell
