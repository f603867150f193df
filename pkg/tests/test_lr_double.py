import itertools
import math

import pytest
from hypothesis import given, strategies as st

from lrdip.adversary import PermutePositions
from lrdip.instances import LrInstance, generate_no_instance, generate_yes_instance
from lrdip.lr_double import (DoubleProtocol, MAX_D, build_accountability, ceil_log2, contracted_graph,
                             double_protocol, double_soundness, edge_assignment, outer_block_to_equality)
from lrdip.path_encoding import partition_blocks
from lrdip.runtime import ConfigError, estimate_acceptance, run

from oracles import first_prime_between


def outer_edges(inst, part):
    pos = inst.position
    for u, v in inst.edges:
        a, b = part.block_of(pos[u]), part.block_of(pos[v])
        if a != b:
            yield (u, v), a, b


def test_single_block_has_empty_accountability():
    inst = generate_yes_instance(6, 0)
    acc = build_accountability(inst, partition_blocks(6, 8))
    assert acc.D == [[]]


def test_two_blocks_joined_by_the_path_edge_only():
    inst = LrInstance(4, ((0, 1), (1, 2), (2, 3)), (0, 1, 2, 3))
    acc = build_accountability(inst, partition_blocks(4, 2))
    assert acc.covers(0, 1)
    assert sorted(map(len, acc.D)) == [0, 1]


def test_outerplanar_instance_is_two_degenerate():
    inst = generate_yes_instance(160, 3, 1.0)
    part = partition_blocks(160, 5)
    assert part.count == 32
    acc = build_accountability(inst, part)
    assert max(map(len, acc.D)) <= 2


@given(st.integers(4, 300), st.integers(0, 1000), st.booleans())
def test_every_outer_edge_has_exactly_one_slot(n, seed, no):
    inst = generate_no_instance(n, seed) if no else generate_yes_instance(n, seed)
    part = partition_blocks(n, ceil_log2(n))
    acc = build_accountability(inst, part)
    assert all(len(d) <= MAX_D for d in acc.D)
    labels = edge_assignment(inst, part, acc)
    for (u, v), a, b in outer_edges(inst, part):
        assert acc.covers(a, b)
        lab = labels[(min(u, v), max(u, v))]
        assert lab["cls"] == 1 and 1 <= lab["ind"] <= 5
        own = a if (lab["acc"] == 0) == (part.block_of(inst.position[u]) == a) else b
        other = b if own == a else a
        assert acc.slots(own)[lab["ind"] - 1] == other
    for b, d in enumerate(acc.D):
        assert acc.S_minus[b] == sorted(c for c in d if c < b)
        assert acc.S_plus[b] == sorted(c for c in d if c > b)
    nb = contracted_graph(inst, part)
    assert sum(map(len, acc.D)) == sum(map(len, nb)) // 2


@pytest.mark.parametrize("n,k", [(16, 4), (60, 6), (256, 8), (1020, 10), (65536, 16)])
def test_modulus_when_blocks_are_even(n, k):
    proto = DoubleProtocol(generate_yes_instance(n, 1, 0.1))
    assert proto.lg == k
    assert {len(b) for b in proto.part.blocks} == {k}
    assert proto.q == first_prime_between(k * k, 2 * k * k)


@given(st.integers(5, 600))
def test_modulus_covers_the_longest_block(n):
    proto = DoubleProtocol(generate_yes_instance(n, 0))
    lmax = max(len(b) for b in proto.part.blocks)
    assert proto.lg * lmax <= proto.q <= 2 * proto.lg * lmax
    assert lmax / proto.q <= 1 / proto.lg


@given(st.integers(2, 200), st.integers(0, 500), st.integers(0, 10_000))
def test_honest_completeness(n, iseed, seed):
    rep, _ = run(double_protocol(generate_yes_instance(n, iseed)), seed=seed)
    assert rep.accepted and rep.num_rounds == 3


def test_completeness_at_1024_many_seeds():
    est = estimate_acceptance(double_protocol(generate_yes_instance(1024, 5)), trials=200, seed=9)
    assert est.rate == 1.0


@given(st.integers(3, 120), st.integers(0, 500))
def test_honest_rejects_no_instances(n, iseed):
    proto = double_protocol(generate_no_instance(n, iseed))
    assert estimate_acceptance(proto, trials=20, seed=iseed).accepted == 0


@given(st.integers(8, 400), st.integers(0, 100))
def test_structure_round_width_is_constant(n, seed):
    rep, _ = run(double_protocol(generate_yes_instance(n, seed)), seed=seed)
    # one flag, own position, and five slots of (sigma, present, direction, GT) bits
    assert rep.round_widths[0] == 2 + 4 * 5


def test_proof_size_tracks_log_log_n():
    sizes = {}
    for k in range(10, 17, 2):
        n = 1 << k
        sizes[n] = run(double_protocol(generate_yes_instance(n, 1, 0.2)))[0].proof_size_bits
    ratios = [s / math.log2(math.log2(n)) for n, s in sizes.items()]
    assert max(ratios) / min(ratios) < 1.25
    assert ratios[-1] <= ratios[0]


def test_upper_bound_mode_uses_the_bound():
    inst = generate_yes_instance(100, 2)
    p = DoubleProtocol(inst, n_known=4096)
    assert p.lg == 12
    assert run(p)[0].accepted
    with pytest.raises(ConfigError):
        DoubleProtocol(inst, n_known=50)


def test_outer_block_reduction_yes_instance_pairs_are_equal():
    inst = generate_yes_instance(256, 4)
    proto = outer_block_to_equality(inst, partition_blocks(256, 8))
    assert proto.rounds == ("P", "V", "P")
    _, tr = run(proto)
    pairs = proto.equality_instances(tr)
    assert pairs and all(eq.is_yes for _, eq in pairs)


def test_outer_block_reduction_rejects_short_blocks():
    inst = generate_yes_instance(256, 4)
    with pytest.raises(ConfigError):
        outer_block_to_equality(inst, partition_blocks(256, 4))


def outer_violation_instance(n, start):
    for seed in itertools.count(start):
        inst = generate_no_instance(n, seed)
        proto = DoubleProtocol(inst)
        pos, part = inst.position, proto.part
        if any(part.block_of(pos[u]) != part.block_of(pos[v]) for u, v in inst.truth.violating_edges):
            return proto


def test_honest_labels_on_no_instance_fail_the_direction_proofs():
    # true positions make every pair equal, so the violating edge must break a comparison proof
    proto = outer_violation_instance(256, 8)
    rep, tr = run(proto)
    assert not rep.accepted
    assert all(eq.is_yes for _, eq in proto.equality_instances(tr))


@pytest.mark.parametrize("n,start", [(16, 0), (16, 40), (20, 1), (24, 2), (32, 5), (32, 60)])
def test_every_honorable_position_claim_leaves_a_lying_edge(n, start):
    proto = outer_violation_instance(n, start)
    nb = proto.part.count
    assert nb <= 6
    for perm in itertools.permutations(range(nb)):
        _, tr = run(proto, PermutePositions(perm), seed=0)
        pairs = proto.equality_instances(tr)
        assert any(not eq.is_yes for _, eq in pairs), perm


def test_soundness_figure():
    assert double_soundness(256) == 1 / 8
    assert double_soundness(4096) == 1 / 12
