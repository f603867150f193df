"""Cheating provers, the soundness sweep, and the round-collapse attack.

Every strategy is a `ProverStrategy`: the runtime hands it the transcript so
far (coins included) and the message being built, and it overrides labels.
Later fingerprint rounds of the LR protocols are forced by the earlier
labels and the coins, so the LR strategies only design structure rounds and
let the honest filler recompute everything downstream from the transcript.
"""
from __future__ import annotations

import csv
import itertools
import math
import random
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .arith_schemes import (EQ2, Eq2Protocol, eq2_modulus, eq2_protocol, eq2_soundness, gt_trace,
                            is_prime, poly_eval, vbit)
from .eq_selfreduce import SelfReduce, sr_instance, sr_soundness
from .instances import LrInstance, brute_force_decide, generate_no_instance
from .lr_double import MAX_D, STRINGS, DoubleProtocol, double_soundness
from .lr_iterated import IteratedConfig, RecursiveBlocks, iterated_protocol, iterated_soundness, tradeoff_protocol
from .path_encoding import EqualityInstance, path_pair, read_string, to_bits
from .runtime import (HONEST, ConfigError, Estimate, ProverMsg, ProverStrategy, Protocol, Transcript,
                      accepts, ekey, estimate_acceptance, wilson_halfwidth)
from . import runtime

LR_FAMILY = ("double", "iterated", "tradeoff")


# ====================================================================== LR geometry

@dataclass
class Level:
    """One block level of an LR protocol, as the adversary sees it."""
    t: int
    struct_rnd: int
    fp_rnd: int
    blocks: list[list[int]]
    pos: list[int]
    slots: list[list[int]]
    block_of: dict[int, int]
    q: int
    horner: bool           # fingerprint convention: Horner on right-aligned values, else sum bit * R^(i+1)
    width: int | None      # left-aligned position width (double), None for right-aligned values

    def enc(self, x: int, L: int) -> str:
        if self.width is None:
            return to_bits(x, L)
        return to_bits(x, self.width).ljust(L, "0")

    def exps(self, L: int) -> list[int]:
        return [L - 1 - o for o in range(L)] if self.horner else [o + 1 for o in range(L)]

    def fp_vector(self, bits: str) -> np.ndarray:
        """Fingerprint of a bit string at every evaluation point R in [0, q)."""
        R = np.arange(self.q, dtype=np.int64)
        acc = np.zeros(self.q, dtype=np.int64)
        for e, ch in zip(self.exps(len(bits)), bits):
            if ch == "1":
                acc = (acc + _powmod(R, e, self.q)) % self.q
        return acc


def _powmod(R: np.ndarray, e: int, q: int) -> np.ndarray:
    out = np.ones_like(R)
    base = R % q
    while e:
        if e & 1:
            out = out * base % q
        base = base * base % q
        e >>= 1
    return out


def levels_of(proto: Protocol) -> list[Level]:
    if isinstance(proto, DoubleProtocol):
        blocks = [[proto.path[i] for i in blk] for blk in proto.part.blocks]
        bo = {v: b for b, nodes in enumerate(blocks) for v in nodes}
        return [Level(0, 0, 2, blocks, list(range(len(blocks))), [proto.acc.slots(b) for b in range(len(blocks))],
                      bo, proto.q, False, proto.part.pos_width)]
    if isinstance(proto, RecursiveBlocks):
        out = []
        for t, lv in enumerate(proto.levels):
            blocks = [[proto.path[i] for i in range(a, z)] for a, z in lv.blocks]
            bo = {v: b for b, nodes in enumerate(blocks) for v in nodes}
            out.append(Level(t, 2 * t, 2 * t + 2, blocks, list(lv.pos), [list(s) for s in lv.slots], bo,
                             proto.plan[t].q, True, None))
        return out
    raise ConfigError(f"no block levels for protocol {proto.name!r}")


@lru_cache(maxsize=8)
def _candidate_table(L: int, q: int, horner: bool) -> np.ndarray:
    """Fingerprints of every L-bit string (rows, MSB first) at every point (columns)."""
    xs = np.arange(1 << L, dtype=np.int64)
    bits = (xs[:, None] >> np.arange(L - 1, -1, -1)) & 1
    exps = [L - 1 - o for o in range(L)] if horner else [o + 1 for o in range(L)]
    R = np.arange(q, dtype=np.int64)
    pw = np.stack([_powmod(R, e, q) for e in exps])
    return ((bits @ pw) % q).astype(np.int32)


MAX_EXHAUSTIVE_BITS = 14


def best_lie(level: Level, L: int, own: str, target: str, d: int, rng: random.Random | None = None) -> tuple[str, int]:
    """The L-bit string on the required side of `own` (above it when d=1) whose fingerprint
    agrees with the target's at the most evaluation points. Returns (string, #agreeing points)."""
    tgt = level.fp_vector(target)
    lo = int(own, 2) if own else 0
    if L <= MAX_EXHAUSTIVE_BITS:
        tab = _candidate_table(L, level.q, level.horner)
        cnt = (tab == tgt[None, :].astype(np.int32)).sum(axis=1)
        xs = np.arange(1 << L)
        ok = xs > lo if d else xs < lo
        if not ok.any():
            return own, 0
        cnt = np.where(ok, cnt, -1)
        x = int(np.argmax(cnt))
        return to_bits(x, L), int(cnt[x])
    # sampled candidates for long blocks
    rng = rng or random.Random(0)
    best, best_c = own, -1
    for _ in range(4096):
        x = rng.randrange(lo + 1, 1 << L) if d else (rng.randrange(0, lo) if lo else None)
        if x is None:
            break
        s = to_bits(x, L)
        c = int((level.fp_vector(s) == tgt).sum())
        if c > best_c:
            best, best_c = s, c
    return best, max(best_c, 0)


def struct_labels(s0: str, slots: Sequence[tuple[str, int]]) -> list[dict]:
    """Structure-round labels of one block: leftmost flag, own position, up to five (sigma, direction) slots."""
    L = len(s0)
    labs = [{"lf": int(o == 0), "s0": int(s0[o])} for o in range(L)]
    for k in range(1, STRINGS):
        if k <= len(slots):
            sig, d = slots[k - 1]
            a, b = (sig, s0) if d else (s0, sig)
            x = gt_trace(int(a, 2), int(b, 2), L)
            for o in range(L):
                labs[o].update({f"s{k}": int(sig[o]), f"p{k}": 1, f"d{k}": d, f"x{k}": x[o]})
        else:
            for o in range(L):
                labs[o].update({f"s{k}": 0, f"p{k}": 0, f"d{k}": 0, f"x{k}": 0})
    return labs


class Plan:
    """Structure-round designs per level: block -> (s0, slots) and edge label overrides."""

    def __init__(self, proto: Protocol):
        self.proto = proto
        self.levels = levels_of(proto)
        self.blocks: dict[int, dict[int, list]] = {lv.t: {} for lv in self.levels}
        self.edges: dict[int, dict] = {lv.t: {} for lv in self.levels}
        self._honest_edges: dict[int, dict] = {}
        self.notes: list[str] = []

    def honest_design(self, t: int, b: int) -> list:
        lv = self.levels[t]
        L = len(lv.blocks[b])
        me = lv.pos[b]
        return [lv.enc(me, L), [(lv.enc(lv.pos[c], L), int(lv.pos[c] > me)) for c in lv.slots[b]]]

    def design(self, t: int, b: int) -> list:
        d = self.blocks[t].get(b)
        if d is None:
            d = self.blocks[t][b] = self.honest_design(t, b)
        return d

    def add_slot(self, t: int, b: int, sigma: str, d: int) -> int | None:
        slots = self.design(t, b)[1]
        if (sigma, d) in slots:
            return slots.index((sigma, d)) + 1
        if len(slots) >= MAX_D:
            return None
        slots.append((sigma, d))
        return len(slots)

    def honest_edge(self, t: int, key) -> dict:
        e = self._honest_edges.get(t)
        if e is None:
            e = self._honest_edges[t] = self.proto.fill_edges(self.levels[t].struct_rnd, None)
        return e.get(key, {})

    def split_level(self, u: int, w: int) -> int | None:
        for lv in self.levels:
            if lv.block_of[u] != lv.block_of[w]:
                return lv.t
        return None

    def level_at(self, rnd: int) -> Level | None:
        for lv in self.levels:
            if lv.struct_rnd == rnd:
                return lv
        return None

    def apply(self, tr: Transcript, rnd: int, msg: ProverMsg) -> None:
        lv = self.level_at(rnd)
        if lv is None:
            return
        for b, (s0, slots) in self.blocks[lv.t].items():
            for v, lab in zip(lv.blocks[b], struct_labels(s0, slots)):
                full = dict(msg.honest(v))
                full.update(lab)
                msg.set(v, full)
        for key, lab in self.edges[lv.t].items():
            msg.set_edge(key, dict(lab))


INNER = {"cls": 0, "acc": 0, "ind": 0}


class PlannedStrategy(ProverStrategy):
    """Builds one static Plan per protocol object, then replays it every run."""
    key = "?"
    scope = LR_FAMILY

    def __init__(self):
        self._plans: dict[int, tuple[Protocol, Plan]] = {}

    def applies(self, proto: Protocol) -> bool:
        return proto.name in self.scope

    def plan(self, proto: Protocol) -> Plan:
        hit = self._plans.get(id(proto))
        if hit is not None and hit[0] is proto:
            return hit[1]
        p = Plan(proto)
        if p.levels:
            self.build(p, brute_force_decide(proto.inst).violating_edges)
        if len(self._plans) > 16:
            self._plans.clear()
        self._plans[id(proto)] = (proto, p)
        return p

    def build(self, plan: Plan, violations) -> None:
        raise NotImplementedError

    def respond(self, proto, tr, rnd, msg):
        if not self.applies(proto):
            return
        self.plan(proto).apply(tr, rnd, msg)


# ---------------------------------------------------------------- (a)

class Misclassify(PlannedStrategy):
    """Claim that each violating edge stays inside its block.

    At the level where the edge leaves its block it is labelled inner, so the
    two blocks' random tags must agree. On deeper levels (recursive blocks)
    the endpoints sit in different pieces; wherever the within-piece positions
    happen to point the right way the edge is closed cheaply as outer,
    otherwise it is called inner again.
    """
    name = "misclassify"
    key = "a"

    def build(self, plan, violations):
        for u, w in violations:
            t0 = plan.split_level(u, w)
            if t0 is None:
                continue
            key = ekey(u, w)
            plan.edges[t0][key] = INNER
            for lv in plan.levels[t0 + 1:]:
                x, y = lv.block_of[u], lv.block_of[w]
                if x != y and lv.pos[y] > lv.pos[x]:
                    ind = plan.add_slot(lv.t, x, lv.enc(lv.pos[y], len(lv.blocks[x])), 1)
                    if ind is not None:
                        plan.edges[lv.t][key] = {"cls": 1, "acc": 0, "ind": ind}
                        break
                plan.edges[lv.t][key] = INNER


# ---------------------------------------------------------------- (b), (c)

def _lie_slot(plan: Plan, lv: Level, a: int, o: int, d: int, pos: Sequence[int]) -> int | None:
    """Slot at block a claiming block o's position on side d; a lie when the real order disagrees."""
    La, Lo = len(lv.blocks[a]), len(lv.blocks[o])
    own = plan.design(lv.t, a)[0]
    if a != o and (pos[o] > pos[a]) == bool(d):
        return plan.add_slot(lv.t, a, lv.enc(pos[o], La), d)
    sig, _ = best_lie(lv, La, own, lv.enc(pos[o], Lo), d)
    return plan.add_slot(lv.t, a, sig, d)


class PermutePositions(PlannedStrategy):
    """Swap the claimed positions of the two blocks of a violating edge (top level).

    The violating edge then points forward, but some other edge (typically an
    H edge next to a swapped block) now points backward and needs a slot whose
    claimed position is a fingerprint lie.
    """
    name = "permute"
    key = "b"

    def __init__(self, perm: Sequence[int] | None = None):
        super().__init__()
        self.perm = None if perm is None else list(perm)

    def build(self, plan, violations):
        lv = plan.levels[0]
        pos = list(lv.pos)
        if self.perm is not None:
            if len(self.perm) != len(pos):
                raise ConfigError(f"{len(self.perm)} claimed positions for {len(pos)} blocks")
            pos = list(self.perm)
        else:
            for u, w in violations:
                x, y = lv.block_of[u], lv.block_of[w]
                if x != y:
                    pos[x], pos[y] = pos[y], pos[x]
                    break
        for b in range(len(lv.blocks)):
            plan.blocks[0][b] = [lv.enc(pos[b], len(lv.blocks[b])), []]
        for u, w in plan.proto.inst.edges:
            x, y = lv.block_of[u], lv.block_of[w]
            key = ekey(u, w)
            if x == y:
                continue
            acc = plan.honest_edge(0, key).get("acc", 0)
            a, o = (x, y) if acc == 0 else (y, x)
            ind = _lie_slot(plan, lv, a, o, 1 if acc == 0 else 0, pos)
            if ind is None:
                acc ^= 1
                a, o = o, a
                ind = _lie_slot(plan, lv, a, o, 1 if acc == 0 else 0, pos)
            plan.edges[0][key] = {"cls": 1, "acc": acc, "ind": ind or 1}


class FingerprintLie(PlannedStrategy):
    """Give each violating edge an accountable slot at its tail claiming a position after
    the tail's block, chosen to agree with the head block's real position at as many
    evaluation points as possible. The fingerprint chains are then computed honestly
    from the lying strings, so the lie survives exactly when the fingerprints collide."""
    name = "fp-lie"
    key = "c"
    scope = LR_FAMILY + ("eq2", "selfreduce")

    def build(self, plan, violations):
        for u, w in violations:
            t = plan.split_level(u, w)
            if t is None:
                t = plan.levels[-1].t
            lv = plan.levels[t]
            x, y = lv.block_of[u], lv.block_of[w]
            ind = _lie_slot(plan, lv, x, y, 1, lv.pos)
            acc = 0
            if ind is None:
                ind = _lie_slot(plan, lv, y, x, 0, lv.pos)
                acc = 1
            if ind is not None:
                plan.edges[t][ekey(u, w)] = {"cls": 1, "acc": acc, "ind": ind}

    def respond(self, proto, tr, rnd, msg):
        if isinstance(proto, Eq2Protocol):
            _eq2_lie(proto, tr, rnd, msg)
        elif isinstance(proto, SelfReduce):
            _sr_point_lie(proto, tr, rnd, msg)
        else:
            super().respond(proto, tr, rnd, msg)


def _eq2_lie(proto: Eq2Protocol, tr, rnd, msg):
    # copy P's total onto every node of P'; the chain on P' must then end on it
    if rnd != 1:
        return
    nodes_a, nodes_b = proto.inst.alpha.nodes, proto.inst.alpha2.nodes
    total = msg.honest(nodes_a[-1])["z4"]
    for v in nodes_b:
        lab = dict(msg.honest(v))
        lab["z4"] = total
        msg.set(v, lab)


def _sr_point_lie(proto: SelfReduce, tr, rnd, msg):
    """On P', evaluate at a different point r' whose fingerprint of the second string equals
    the first string's fingerprint at r; the only inconsistency left is the point itself,
    which crosses the bridge through one base-equality check."""
    if rnd != 2 or proto.cert_only:
        return
    r = proto.r_value(tr)
    alt = sr_alternative_point(proto, r)
    if alt is None:
        return
    m = proto.lay.path_len
    L = proto.L

    def fill(rnd_, tr_, s):
        if s * L >= m:
            return proto._fill2(tr_, s, r=alt)
        return proto.fill(rnd_, tr_, s)

    msg.deviate(fill)


@lru_cache(maxsize=32)
def _fp_all(q: int, bits: str) -> np.ndarray:
    R = np.arange(q, dtype=np.int64)
    acc = np.zeros(q, dtype=np.int64)
    p = np.ones(q, dtype=np.int64)
    for ch in bits:
        p = p * R % q
        if ch == "1":
            acc = (acc + p) % q
    return acc


def sr_alternative_point(proto: SelfReduce, r: int) -> int | None:
    """Best r' != r with equal q-fingerprints of the two strings, maximizing the chance that
    the point tracks (L-bit, right-aligned) collide in the base equality; None if none exists."""
    q, L = proto.q, proto.L
    a, a2 = proto.strings
    fa = _fp_all(q, a2)
    target = poly_eval(q, r, a)
    cand = [int(x) for x in np.nonzero(fa == target)[0] if x != r]
    if not cand:
        return None
    qe = proto.q_eq
    mine = _fp_all(qe, format(r, f"0{L}b"))
    return max(cand, key=lambda x: (int((_fp_all(qe, format(x, f"0{L}b")) == mine).sum()), -x))


# ---------------------------------------------------------------- (d)

class CertificateLie(PlannedStrategy):
    """Write an inverse for every odd number whose inverse modulo q does not exist (or, for a
    prime q, a wrong inverse for the first one), and fake the product's reduction in the first
    sub-cluster so every local check passes; the forged product then disagrees with the next
    sub-cluster's copy, which only a base-equality collision can hide."""
    name = "cert-lie"
    key = "d"
    scope = ("selfreduce",)

    def __init__(self, value: int = 1):
        super().__init__()
        self.value = value

    def applies(self, proto):
        return isinstance(proto, SelfReduce)

    def respond(self, proto, tr, rnd, msg):
        if rnd != 0 or not isinstance(proto, SelfReduce):
            return
        q, ell = proto.q, proto.lay.ell
        bad = [i for i in range(1, ell + 1) if math.gcd(2 * i - 1, q) != 1] or [1]
        bad = set(bad)
        lay, L = proto.lay, proto.L
        Y = proto.Y

        def fill(rnd_, tr_, s):
            out = proto.fill(rnd_, tr_, s)
            side, i, j, _ = lay.where(s * L)
            if i not in bad:
                return out
            y1 = 2 * i - 1
            v = self.value
            if math.gcd(y1, q) == 1 and (y1 * v) % q == 1:
                v += 1
            labs = Y.fill(y1, v, 1, q, j + 1, L)
            if j == 0:
                t = y1 * v // q
                forged = t * q + 1
                kz = Y.A.k["z3"]
                for o in range(L):
                    labs[o][kz] = vbit(forged, L, o)
            for o in range(L):
                lab = dict(out[s * L + o])
                lab.update(labs[o])
                lab["y3"] = vbit(v, L, o)
                out[s * L + o] = lab
            return out

        msg.deviate(fill)


# ---------------------------------------------------------------- (e)

class FlipAccountability(PlannedStrategy):
    """Flip which endpoint answers for each violating edge (one entry of the accountability
    sets) and point it at the existing slot of the other block whose claimed position
    collides most often with the real one."""
    name = "flip-d"
    key = "e"

    def build(self, plan, violations):
        for u, w in violations:
            t = plan.split_level(u, w)
            if t is None:
                continue
            lv = plan.levels[t]
            key = ekey(u, w)
            acc = 1 - plan.honest_edge(t, key).get("acc", 0)
            x, y = lv.block_of[u], lv.block_of[w]
            a, o = (x, y) if acc == 0 else (y, x)
            d = 1 if acc == 0 else 0
            tgt = lv.fp_vector(lv.enc(lv.pos[o], len(lv.blocks[o])))
            best, best_c = 1, -1
            for k, (sig, dk) in enumerate(plan.design(t, a)[1], start=1):
                if dk != d:
                    continue
                c = int((lv.fp_vector(sig) == tgt).sum())
                if c > best_c:
                    best, best_c = k, c
            plan.edges[t][key] = {"cls": 1, "acc": acc, "ind": best}


# ---------------------------------------------------------------- (f)

@dataclass
class BestResponseReport:
    strategy: str
    rate: float
    exact: bool
    candidates: int
    coin_points: int
    note: str = ""


def coin_space(proto: Protocol, prover: ProverStrategy = HONEST, seed=0) -> list[tuple[int, int, str, int]]:
    """(round, node, coin name, bound) for every coin drawn in one run with this prover."""
    tr = runtime._play(proto, prover, seed, None)
    out = []
    for rnd, m in enumerate(tr.msgs):
        if isinstance(m, runtime.CoinMsg):
            nodes = set(m._drawn) | set(proto.coin_nodes(rnd, tr))
            for v in sorted(nodes):
                for name, bound in proto.coin_request(rnd, tr, v):
                    out.append((rnd, v, name, bound))
    return out


def acceptance_on(proto: Protocol, prover: ProverStrategy, assignments: Iterable[dict]) -> tuple[int, int]:
    """Accepted runs over the given coin assignments (round -> node -> {name: value})."""
    first = None
    if proto.rounds and proto.rounds[0] == "P":
        t0 = Transcript(proto, "fixed.first")
        first = ProverMsg(proto, 0, t0)
        t0.msgs.append(first)
        prover.respond(proto, t0, 0, first)
        first.validate_overrides()
    ok = total = 0
    suspects: list[int] = []
    for coins in assignments:
        tr = runtime._play(proto, prover, "fixed", coins, first)
        total += 1
        ok += accepts(proto, tr, suspects)
    return ok, total


def _assignments(space, points: Iterable[tuple[int, ...]]):
    for vals in points:
        coins: dict = {}
        for (rnd, v, name, _), x in zip(space, vals):
            coins.setdefault(rnd, {}).setdefault(v, {})[name] = x
        yield coins


class BestResponse(ProverStrategy):
    """Best of a finite strategy family, scored on the coin space.

    The family is the honest prover plus every other library strategy that
    applies; when all permutations of the top-level block positions fit in
    `node_budget` candidates they are added too. Each candidate is scored on
    every coin outcome when the space has at most `coin_budget` points, else
    on `samples` sampled outcomes. The report is exact only when both the
    coin space and the permutation family were covered in full.
    """
    name = "best-response"
    key = "f"
    scope = LR_FAMILY + ("eq2", "selfreduce")

    def __init__(self, node_budget: int = 256, coin_budget: int = 1024, samples: int = 200, seed: int = 0):
        self.node_budget = node_budget
        self.coin_budget = coin_budget
        self.samples = samples
        self.seed = seed
        self.reports: dict[int, tuple[Protocol, BestResponseReport, ProverStrategy]] = {}

    def applies(self, proto):
        return proto.name in self.scope

    def family(self, proto: Protocol) -> tuple[list[tuple[str, ProverStrategy]], bool]:
        fam: list[tuple[str, ProverStrategy]] = [("honest", HONEST)]
        for s in strategy_library(include_best=False):
            if s.applies(proto):
                fam.append((s.name, s))
        complete = True
        if isinstance(proto, (DoubleProtocol, RecursiveBlocks)) and levels_of(proto):
            nb = len(levels_of(proto)[0].blocks)
            if math.factorial(nb) + len(fam) <= self.node_budget:
                for perm in itertools.permutations(range(nb)):
                    if list(perm) != list(range(nb)):
                        fam.append((f"permute{list(perm)}", PermutePositions(perm)))
            else:
                complete = False
        return fam, complete

    def evaluate(self, proto: Protocol) -> tuple[BestResponseReport, ProverStrategy]:
        hit = self.reports.get(id(proto))
        if hit is not None and hit[0] is proto:
            return hit[1], hit[2]
        fam, complete = self.family(proto)
        space = coin_space(proto, HONEST, self.seed)
        size = 1
        for *_, b in space:
            size *= b
        if size <= self.coin_budget:
            points = list(itertools.product(*[range(b) for *_, b in space]))
            exact = True
        else:
            rng = random.Random(f"best/{self.seed}")
            points = [tuple(rng.randrange(b) for *_, b in space) for _ in range(self.samples)]
            exact = False
        best, best_rate, best_name = HONEST, -1.0, "honest"
        for name, s in fam:
            ok, tot = acceptance_on(proto, s, _assignments(space, points))
            rate = ok / tot if tot else 0.0
            if rate > best_rate:
                best, best_rate, best_name = s, rate, name
        note = []
        if not exact:
            note.append(f"coins sampled: {len(points)} of about 2^{size.bit_length() - 1}")
        if not complete:
            note.append("block positions limited to the library's swap")
        rep = BestResponseReport(best_name, best_rate, exact and complete, len(fam), len(points), "; ".join(note))
        if len(self.reports) > 16:
            self.reports.clear()
        self.reports[id(proto)] = (proto, rep, best)
        return rep, best

    def respond(self, proto, tr, rnd, msg):
        if not self.applies(proto):
            return
        _, best = self.evaluate(proto)
        best.respond(proto, tr, rnd, msg)


def strategy_library(include_best: bool = True, **best_kw) -> list[ProverStrategy]:
    lib: list[ProverStrategy] = [Misclassify(), PermutePositions(), FingerprintLie(), CertificateLie(),
                                 FlipAccountability()]
    if include_best:
        lib.append(BestResponse(**best_kw))
    return lib


def strategy_by_name(name: str) -> ProverStrategy:
    if name == "honest":
        return HONEST
    lib = {s.name: s for s in strategy_library()}
    lib.update({s.key: s for s in lib.values()})
    if name not in lib:
        valid = ["honest"] + [s.name for s in strategy_library()]
        raise ConfigError(f"unknown strategy {name!r}; valid: {', '.join(valid)}")
    return lib[name]


def strategy_names() -> list[str]:
    return ["honest"] + [s.name for s in strategy_library()]


# ====================================================================== sweep

@dataclass
class SweepRow:
    protocol: str
    n: int
    instance_seed: int
    strategy: str
    trials: int
    accept_rate: float
    ci95: float
    paper_bound: float
    flag: str

    FIELDS = ("protocol", "n", "instance_seed", "strategy", "trials", "accept_rate", "ci95", "paper_bound", "flag")

    def as_row(self) -> list:
        return [self.protocol, self.n, self.instance_seed, self.strategy, self.trials,
                f"{self.accept_rate:.6f}", f"{self.ci95:.6f}", f"{self.paper_bound:.6f}", self.flag]


@dataclass
class SweepConfig:
    protocol: str = "double"
    sizes: tuple[int, ...] = (256,)
    instance_seeds: tuple[int, ...] = (0,)
    trials: int = 2000
    seed: int = 0
    violations: int = 1
    T: float = 16
    tag_bits: int = 3
    c1: int = 6
    c2: int = 15


def random_unequal(ell: int, rng: random.Random) -> tuple[str, str]:
    a = "".join(rng.choice("01") for _ in range(ell))
    while True:
        b = "".join(rng.choice("01") for _ in range(ell))
        if b != a:
            return a, b


def sweep_case(cfg: SweepConfig, n: int, iseed: int) -> tuple[Protocol, float]:
    """(protocol on a no-instance, the stated soundness bound) for one sweep cell."""
    name = cfg.protocol
    if name in LR_FAMILY:
        inst = generate_no_instance(n, iseed, cfg.violations)
        if name == "double":
            return DoubleProtocol(inst), double_soundness(n)
        icfg = IteratedConfig(T=cfg.T, tag_bits=cfg.tag_bits)
        p = iterated_protocol(inst, icfg) if name == "iterated" else tradeoff_protocol(inst, 1, icfg)
        return p, iterated_soundness(icfg)
    rng = random.Random(f"pair/{n}/{iseed}")
    a, b = random_unequal(n, rng)
    if name == "eq2":
        return eq2_protocol(path_pair(a, b)), eq2_soundness(n)
    if name == "selfreduce":
        inst = sr_instance(a, b, cfg.c1, cfg.c2)
        return SelfReduce(inst, EQ2, cfg.c1, cfg.c2), sr_soundness(n, cfg.c1)
    raise ConfigError(f"no soundness sweep for protocol {name!r}; valid: {', '.join(SWEEP_PROTOCOLS)}")


SWEEP_PROTOCOLS = LR_FAMILY + ("eq2", "selfreduce")


def soundness_sweep(cfg: SweepConfig, strategies: Sequence[ProverStrategy] | None = None,
                    log: Callable[[str], None] | None = None) -> list[SweepRow]:
    strategies = list(strategies) if strategies is not None else [HONEST] + strategy_library()
    rows = []
    for n in cfg.sizes:
        for iseed in cfg.instance_seeds:
            proto, bound = sweep_case(cfg, n, iseed)
            for s in strategies:
                if s is not HONEST and hasattr(s, "applies") and not s.applies(proto):
                    continue
                est = estimate_acceptance(proto, s, cfg.trials, f"{cfg.seed}/{n}/{iseed}/{s.name}")
                flag = "EXCEEDS" if est.rate > bound + est.ci95 else "ok"
                rows.append(SweepRow(cfg.protocol, n, iseed, s.name, cfg.trials, est.rate, est.ci95, bound, flag))
                if log:
                    log(f"{cfg.protocol} n={n} seed={iseed} {s.name}: {est.rate:.4f} +- {est.ci95:.4f} (bound {bound:.4f})")
    return rows


def write_csv(rows: Sequence, path, fields: Sequence[str] | None = None) -> None:
    fields = fields or rows[0].FIELDS
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            w.writerow(r.as_row())


# ====================================================================== round collapse

def next_prime(x: int) -> int:
    x = max(x, 2)
    while not is_prime(x):
        x += 1
    return x


def collapse_moduli(ell: int) -> tuple[int, int]:
    """q1: smallest prime >= ell^2; q2: smallest prime >= (log2 ell)^2."""
    k = max(1, math.ceil(math.log2(ell)))
    return next_prime(ell * ell), next_prime(k * k)


class _SecondLevel:
    """Fingerprints modulo q2 of the B-bit encodings of every value in [0, q1)."""

    def __init__(self, q1: int, q2: int):
        self.q1, self.q2 = q1, q2
        self.B = (q1 - 1).bit_length()
        xs = np.arange(q1, dtype=np.int64)
        self.bits = ((xs[:, None] >> np.arange(self.B - 1, -1, -1)) & 1).astype(np.int64)
        self._table = None

    def row(self, r2: int) -> np.ndarray:
        pw = np.array([pow(r2, i + 1, self.q2) for i in range(self.B)], dtype=np.int64)
        return (self.bits @ pw) % self.q2

    def table(self) -> np.ndarray:
        # all r2 at once; only affordable for small q2
        if self._table is None:
            pw = np.array([[pow(r, i + 1, self.q2) for r in range(self.q2)] for i in range(self.B)],
                          dtype=np.int64)
            self._table = ((self.bits @ pw) % self.q2).astype(np.int32)
        return self._table


@dataclass
class CollapseResult:
    ell: int
    q1: int
    q2: int
    draws: int
    search_hits: int          # draws where the two-equation search finds r'
    verifier_hits: int       # draws where some r' passes both second-level comparisons
    sequential_rate: float   # optimal cheating probability when r' must be fixed before r2
    bound: float

    FIELDS = ("ell", "q1", "q2", "draws", "search_rate", "collapsed_rate", "collapsed_ci95",
              "sequential_rate", "bound")

    @property
    def search_rate(self) -> float:
        return self.search_hits / self.draws

    @property
    def rate(self) -> float:
        return self.verifier_hits / self.draws

    @property
    def ci95(self) -> float:
        return wilson_halfwidth(self.verifier_hits, self.draws)

    def as_row(self) -> list:
        return [self.ell, self.q1, self.q2, self.draws, f"{self.search_rate:.6f}", f"{self.rate:.6f}",
                f"{self.ci95:.6f}", f"{self.sequential_rate:.6f}", f"{self.bound:.6f}"]


def collapse_bound(ell: int, q1: int, q2: int) -> float:
    """Sequential error: second-level fingerprint on B-bit strings modulo q2, plus 1/ell for the first."""
    B = (q1 - 1).bit_length()
    return B / q2 + 1 / ell


def round_collapse_attack(pairs: Sequence[tuple[str, str]] | EqualityInstance, ell: int | None = None,
                          q1: int | None = None, q2: int | None = None, draws: int = 500, seed: int = 0,
                          sequential: bool = True) -> CollapseResult:
    """Cheat the collapsed reduction, where r1 < q1 and r2, r3 < q2 are all public before the prover speaks.

    The prover runs the second string's fingerprint at a point r' of its choice.
    The collapsed verifier compares r' with r1, and the two first-level
    fingerprints, only through fingerprints modulo q2 (at r2 and r3). Two
    searches are reported: the two-equation search (exact first-level
    equality plus an r2-collision of r' with r1) and the full search over
    every r' the collapsed verifier accepts. With `sequential`, also the
    exact optimum of a prover that must fix r' before seeing r2 and r3.
    """
    if isinstance(pairs, EqualityInstance):
        pairs = [(read_string(pairs.alpha), read_string(pairs.alpha2))]
    pairs = list(pairs)
    if not pairs:
        raise ConfigError("need at least one pair")
    ell = ell or len(pairs[0][0])
    dq1, dq2 = collapse_moduli(ell)
    q1, q2 = q1 or dq1, q2 or dq2
    sl = _SecondLevel(q1, q2)
    rng = random.Random(f"collapse/{seed}")
    fps = {}
    search = verifier = 0
    seq = 0.0
    tab = sl.table() if sequential and q2 <= 4096 else None
    for t in range(draws):
        a, b = pairs[t % len(pairs)]
        if (a, b) not in fps:
            fps[(a, b)] = (_fp_all(q1, a), _fp_all(q1, b))
        Fa, Fb = fps[(a, b)]
        r1, r2, r3 = rng.randrange(q1), rng.randrange(q2), rng.randrange(q2)
        G, H = sl.row(r2), sl.row(r3)
        target = Fa[r1]
        A = np.nonzero(Fb == target)[0]
        if len(A) and (G[A] == G[r1]).any():
            search += 1
        if ((G == G[r1]) & (H[Fb] == H[target])).any():
            verifier += 1
        if tab is not None:
            c2 = (tab == tab[r1][None, :]).sum(axis=1)          # r2 hits per candidate r'
            c3 = (tab[Fb] == tab[target][None, :]).sum(axis=1)  # r3 hits per candidate r'
            seq += float((c2 * c3).max()) / (q2 * q2)
    return CollapseResult(ell, q1, q2, draws, search, verifier, seq / draws if tab is not None else float("nan"),
                          collapse_bound(ell, q1, q2))
