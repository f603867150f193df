import math

import pytest
from hypothesis import given, settings, strategies as st

from lrdip.adversary import FlipAccountability
from lrdip.instances import brute_force_decide, generate_no_instance, generate_yes_instance
from lrdip.lr_iterated import (GeometryError, IteratedConfig, LayerTree, RecursiveBlocks, check_d_consistency, cut,
                               iter_log, iterated_protocol, iterated_soundness, layer_count, log_star, plan_levels,
                               tradeoff_protocol)
from lrdip.runtime import ConfigError, estimate_acceptance, run

from oracles import first_prime_between


def test_iter_log_values():
    assert iter_log(65536, 0) == 65536
    assert iter_log(65536, 1) == 16
    assert iter_log(65536, 2) == 4
    assert iter_log(65536, 3) == 2


@pytest.mark.parametrize("T,d", [(16, 1), (4, 2), (2, 3), (1, 4)])
def test_layer_count_at_1024(T, d):
    assert layer_count(1024, T) == d


@pytest.mark.parametrize("n,k", [(2, 1), (4, 2), (16, 3), (1024, 4), (65536, 4), (65537, 5)])
def test_log_star(n, k):
    assert log_star(n) == k


def test_layer_count_rejects_bad_threshold():
    with pytest.raises(ConfigError):
        layer_count(1024, 0)


@given(st.integers(64, 10**6), st.integers(1, 3), st.floats(0.5, 4))
def test_gaps_telescope(n, d, c):
    if iter_log(n, d + 1) <= 0:
        return
    tree = LayerTree(n, d, c)
    g = tree.gaps
    assert len(g) == d == len(tree.lengths)
    assert g[-1] == pytest.approx(c * iter_log(n, d + 1) ** 2)
    for j in range(1, d):
        assert g[j - 1] == pytest.approx(c * iter_log(n, j + 1) ** 2 * g[j])


def test_three_layers_do_not_fit_1024():
    tree = LayerTree.for_threshold(1024, 2)
    assert tree.d == 3
    with pytest.raises(GeometryError) as err:
        tree.check_geometry()
    e = err.value
    assert e.available == 512 and e.required > 10**9
    assert "1024" in str(e)


def test_iterated_threshold_two_raises_geometry():
    with pytest.raises(GeometryError):
        iterated_protocol(generate_yes_instance(1024, 0), IteratedConfig(T=2))


def test_tradeoff_depth_bounds():
    inst = generate_yes_instance(256, 0)
    with pytest.raises(ConfigError, match="d must lie"):
        tradeoff_protocol(inst, d=0)
    with pytest.raises(ConfigError, match="d must lie"):
        tradeoff_protocol(inst, d=log_star(256) + 1)
    with pytest.raises(ConfigError):
        tradeoff_protocol(inst, d=2)


def test_config_validation():
    with pytest.raises(ConfigError):
        IteratedConfig(tag_bits=0)
    with pytest.raises(ConfigError):
        IteratedConfig(c=0)
    assert iterated_soundness() == 1 / 8
    assert iterated_soundness(IteratedConfig(tag_bits=5)) == 1 / 32


@given(st.integers(2, 5000))
def test_plan_levels_shrink_to_three(n):
    plan = plan_levels(n)
    M = n
    for lv in plan:
        assert lv.max_piece == M
        assert 1 <= lv.block <= max(1, M // 2)
        lo = max(lv.block ** 2, 16 * lv.block)
        assert lv.q == first_prime_between(lo, 2 * lo)
        M = min(M, 2 * lv.block - 1)
    assert M <= 3


@given(st.integers(0, 500), st.integers(1, 500), st.integers(1, 40))
def test_cut_covers_range(lo, size, beta):
    blocks = cut(lo, lo + size, beta)
    assert blocks[0][0] == lo and blocks[-1][1] == lo + size
    assert all(a[1] == b[0] for a, b in zip(blocks, blocks[1:]))
    if size >= beta:
        assert all(beta <= b - a < 2 * beta for a, b in blocks)


def test_rounds_alternate_and_grow_with_levels():
    for n in (16, 256, 1024):
        p = tradeoff_protocol(generate_yes_instance(n, 1))
        assert p.rounds == tuple("PV" * p.R + "P")
        assert p.R == len(plan_levels(n))


def test_max_bits_flat_across_sizes():
    widths = [run(tradeoff_protocol(generate_yes_instance(n, 1)))[0].proof_size_bits for n in (256, 1024, 4096)]
    assert len(set(widths)) == 1


@settings(max_examples=40)
@given(st.integers(2, 150), st.integers(0, 500), st.integers(0, 10_000))
def test_honest_completeness_and_consistency(n, iseed, seed):
    p = tradeoff_protocol(generate_yes_instance(n, iseed))
    rep, tr = run(p, seed=seed)
    assert rep.accepted
    for t in range(p.R):
        assert check_d_consistency(p, tr, t) == []


@settings(max_examples=30)
@given(st.integers(3, 120), st.integers(0, 500))
def test_honest_rejects_no_instances(n, iseed):
    inst = generate_no_instance(n, iseed)
    assert not brute_force_decide(inst).verdict
    assert estimate_acceptance(tradeoff_protocol(inst), trials=10, seed=iseed).accepted == 0


def test_upper_bound_mode():
    inst = generate_yes_instance(100, 3)
    assert run(RecursiveBlocks(inst, n_known=1000))[0].accepted
    with pytest.raises(ConfigError):
        RecursiveBlocks(inst, n_known=99)


@pytest.mark.parametrize("n,iseed", [(256, 3), (200, 11), (64, 2)])
def test_flipped_accountability_shows_up_as_fingerprint_mismatch(n, iseed):
    inst = generate_no_instance(n, iseed)
    p = tradeoff_protocol(inst)
    bad = set(inst.truth.violating_edges)
    for seed in range(10):
        rep, tr = run(p, FlipAccountability(), seed=seed)
        found = {e for t in range(p.R) for e in check_d_consistency(p, tr, t)}
        assert found <= bad
        # a mismatched fingerprint is always visible to some node
        if found:
            assert not rep.accepted


def test_soundness_small_against_flip():
    p = tradeoff_protocol(generate_no_instance(128, 7))
    est = estimate_acceptance(p, FlipAccountability(), 200, seed=3)
    assert est.rate <= iterated_soundness() + est.ci95
    assert not math.isnan(est.rate)
