import random

import pytest
from hypothesis import given, strategies as st

from lrdip.instances import generate_no_instance, generate_yes_instance
from lrdip.lr_double import DoubleProtocol
from lrdip.runtime import (HONEST, CoinMsg, LocalityFault, Network, Protocol, ProverStrategy, View,
                           WidthViolation, coin_bits, estimate_acceptance, parse_coins, run, wilson_halfwidth)


class Toy(Protocol):
    """One coin round then one labelling round on a path; every node must echo the coin of node 0."""
    name = "toy"
    rounds = ("V", "P")

    def __init__(self, n, reach=1, wide=False):
        super().__init__(Network.path(n))
        self.reach = reach
        self.wide = wide
        self.schema[0] = {"c": 3}
        self.schema[1] = {"x": 3}

    def coin_request(self, rnd, tr, v):
        return [("c", 8)] if rnd == 0 and v == 0 else []

    def fill(self, rnd, tr, key):
        c = tr.coins(0, 0)["c"]
        return {v: {"x": 9 if self.wide else c} for v in range(self.net.n)}

    def decide(self, v, view):
        x = view.lab(1).get("x")
        if v == 0:
            return x == view.coins(0)["c"]
        return x == view.lab(1, v - self.reach).get("x")


class Wide(ProverStrategy):
    name = "wide"

    def respond(self, proto, tr, rnd, msg):
        if proto.rounds[rnd] == "P":
            msg.set(0, {"x": 200})


def test_locality_fault_on_distant_read():
    with pytest.raises(LocalityFault):
        run(Toy(5, reach=2))


def test_honest_width_violation_is_a_hard_error():
    with pytest.raises(WidthViolation):
        run(Toy(4, wide=True))


def test_adversarial_wide_label_rejects():
    rep, _ = run(Toy(4), Wide())
    assert not rep.accepted
    assert rep.protocol_error and "exceeds" in rep.protocol_error
    assert not any(rep.per_node)


def test_yes_instance_double_accepts():
    rep, _ = run(DoubleProtocol(generate_yes_instance(200, 3)), seed=11)
    assert rep.accepted and all(rep.per_node)
    assert rep.num_rounds == 3


def test_honest_cannot_prove_no_instance():
    proto = DoubleProtocol(generate_no_instance(64, 5))
    est = estimate_acceptance(proto, HONEST, 300, seed=1)
    assert est.accepted == 0


@given(st.integers(0, 10_000))
def test_run_is_deterministic(seed):
    proto = DoubleProtocol(generate_yes_instance(48, 2))
    a = run(proto, seed=seed)[1].dump_lines()
    b = run(proto, seed=seed)[1].dump_lines()
    assert a == b


@given(st.integers(0, 10_000), st.booleans())
def test_replaying_recorded_coins_reproduces_transcript(seed, no):
    inst = generate_no_instance(40, 1) if no else generate_yes_instance(40, 1)
    proto = DoubleProtocol(inst)
    rep, tr = run(proto, seed=seed)
    lines = tr.dump_lines()
    rep2, tr2 = run(proto, seed="unrelated", coins=parse_coins(proto, lines))
    assert tr2.dump_lines() == lines
    assert rep2.per_node == rep.per_node
    rep3, tr3 = run(proto, seed="unrelated", coins=tr.recorded_coins())
    assert tr3.dump_lines() == lines


def recount(proto, tr):
    widths = [0] * len(proto.rounds)
    total = [0] * proto.net.n
    for rnd, m in enumerate(tr.msgs):
        for v in range(proto.net.n):
            if isinstance(m, CoinMsg):
                b = sum(coin_bits(bound) for _, bound in proto.coin_request(rnd, tr, v))
            else:
                b = sum(proto.schema[rnd][k] for k in m.get(v))
            total[v] += b
            widths[rnd] = max(widths[rnd], b)
        if not isinstance(m, CoinMsg):
            for e in proto.fill_edges(rnd, tr):
                widths[rnd] = max(widths[rnd], sum(proto.edge_schema[rnd][k] for k in m.edge(e)))
    return widths, max(total)


@given(st.integers(3, 120), st.integers(0, 500))
def test_size_accounting_is_exact(n, seed):
    proto = DoubleProtocol(generate_yes_instance(n, seed))
    rep, tr = run(proto, seed=seed)
    widths, total = recount(proto, tr)
    assert rep.round_widths == widths
    assert rep.proof_size_bits == max(widths)
    assert rep.total_bits_per_node == total


class Scribble(ProverStrategy):
    """Honest except one node's last-round label, replaced by random in-width values."""
    name = "scribble"

    def __init__(self, node, rng):
        self.node, self.rng = node, rng

    def respond(self, proto, tr, rnd, msg):
        if rnd != len(proto.rounds) - 1:
            return
        lab = dict(msg.honest(self.node))
        sch = proto.schema[rnd]
        for k in lab:
            lab[k] = self.rng.randrange(1 << sch[k])
        msg.set(self.node, lab)


def distances(net, src):
    dist = {src: 0}
    frontier = [src]
    while frontier:
        nxt = []
        for v in frontier:
            for u in net.adj[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt
    return dist


@given(st.integers(8, 60), st.integers(0, 300), st.integers(0, 10_000))
def test_far_label_mutations_never_change_a_verdict(n, iseed, seed):
    proto = DoubleProtocol(generate_yes_instance(n, iseed))
    rng = random.Random(seed)
    v = rng.randrange(n)
    far = [u for u, d in distances(proto.net, v).items() if d >= 2]
    if not far:
        return
    u = rng.choice(far)
    rep, tr = run(proto, seed=seed)
    rep2, tr2 = run(proto, Scribble(u, rng), seed=seed)
    assert proto.decide(v, View(tr2, v)) == rep.per_node[v]


def test_estimate_single_trial_is_bernoulli():
    proto = DoubleProtocol(generate_no_instance(30, 2))
    est = estimate_acceptance(proto, HONEST, 1, seed=4)
    assert est.rate in (0.0, 1.0)
    rate, ci = est
    assert rate == est.rate and ci == est.ci95


def test_estimate_yes_is_exactly_one():
    proto = DoubleProtocol(generate_yes_instance(128, 9))
    est = estimate_acceptance(proto, HONEST, 1000, seed=2)
    assert est.rate == 1.0 and est.accepted == 1000


@given(st.integers(0, 400), st.integers(1, 400))
def test_wilson_halfwidth_sane(k, n):
    k = min(k, n)
    w = wilson_halfwidth(k, n)
    assert 0 < w <= 1
    assert w == pytest.approx(wilson_halfwidth(n - k, n))


def test_coin_bits():
    assert [coin_bits(b) for b in (1, 2, 3, 8, 9)] == [0, 1, 2, 3, 4]
