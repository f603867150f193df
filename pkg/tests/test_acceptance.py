"""The nine acceptance criteria at their stated sizes and tolerances.

Each test records its outcome; the terminal summary prints one PASS/FAIL line
per criterion. Parts that cannot be met are strict xfails, so they show up as
FAIL in the summary and would turn the run red if they ever started passing.
"""
import itertools
import random

import pytest

from acceptance_log import record
from labelings import accepting_labelings
from oracles import collision_fraction, prime

from lrdip.adversary import CertificateLie, FingerprintLie, random_unequal, round_collapse_attack, strategy_library
from lrdip.arith_schemes import (EQ2, add_scheme, eq2_protocol, gt_scheme, mod_add_scheme, mod_mult, mult_to_eq)
from lrdip.cli import collapse_pairs
from lrdip.eq_selfreduce import (ClusterLayout, SelfReduce, certify_q, honest_certificate_exists, sr_instance,
                                 sr_modulus, sr_soundness)
from lrdip.instances import brute_force_decide, generate_no_instance, generate_yes_instance
from lrdip.lr_double import DoubleProtocol, double_soundness
from lrdip.lr_iterated import GeometryError, IteratedConfig, iterated_protocol, iterated_soundness, tradeoff_protocol
from lrdip.path_encoding import path_pair
from lrdip.runtime import HONEST, estimate_acceptance, run

pytestmark = pytest.mark.acceptance

PER_PROTOCOL = 200


def _bits(rng, ell):
    return "".join(rng.choice("01") for _ in range(ell))


def _yes_arith(name, rng):
    w = rng.randint(1, 16)
    if name == "gt":
        a = rng.randrange(1, 1 << w)
        return gt_scheme(a, rng.randrange(a), w)
    if name == "add":
        c = rng.randrange(1 << w)
        a = rng.randint(0, c)
        return add_scheme(a, c - a, c, w)
    if name == "modadd":
        N = rng.randint(2, (1 << w) if w > 1 else 2)
        a, b = rng.randrange(N), rng.randrange(N)
        return mod_add_scheme(N, a, b, (a + b) % N)
    if name == "eq2":
        s = _bits(rng, w)
        return eq2_protocol(path_pair(s, s))
    if name == "mult":
        h = rng.randint(1, 8)
        a, b = rng.randrange(1 << h), rng.randrange(1 << h)
        return mult_to_eq(a, b, a * b, ell_prime=h)
    if name == "modmult":
        N = rng.randint(2, 1 << rng.randint(2, 8))
        a, b = rng.randrange(N), rng.randrange(N)
        return mod_mult(N, a, b, a * b % N)
    raise AssertionError(name)


# ---------------------------------------------------------------- 1

def test_criterion_1_completeness():
    rng = random.Random("acceptance/1")
    counts = {}
    ok = True
    for name in ("gt", "add", "modadd", "eq2", "mult", "modmult"):
        acc = sum(run(_yes_arith(name, rng), seed=i)[0].accepted for i in range(PER_PROTOCOL))
        counts[name] = acc
        ok &= acc == PER_PROTOCOL
    sizes = [1 << k for k in range(8, 13)]
    acc = 0
    for i in range(PER_PROTOCOL):
        n = sizes[i % len(sizes)]
        acc += run(DoubleProtocol(generate_yes_instance(n, 1000 + i, rng.random())), seed=i)[0].accepted
    counts["double"] = acc
    ok &= acc == PER_PROTOCOL
    acc = 0
    for i in range(PER_PROTOCOL):
        s = _bits(rng, 16)
        acc += run(SelfReduce(sr_instance(s, s)), seed=i)[0].accepted
    counts["selfreduce"] = acc
    ok &= acc == PER_PROTOCOL
    # the recursive-block protocol at its buildable depth, reported alongside
    acc = 0
    for i in range(PER_PROTOCOL):
        n = sizes[i % 3]
        acc += run(tradeoff_protocol(generate_yes_instance(n, 2000 + i)), seed=i)[0].accepted
    counts["tradeoff d=1"] = acc
    ok &= acc == PER_PROTOCOL
    record(1, "non-iterated", ok, ", ".join(f"{k} {v}/{PER_PROTOCOL}" for k, v in counts.items()))
    assert ok, counts


@pytest.mark.xfail(strict=True, raises=GeometryError, reason="three layers need blocks of ~1.5e10 nodes at n=1024")
def test_criterion_1_iterated_threshold_two():
    record(1, "iterated T=2", False, "GeometryError: d=3 layers do not fit n in 2^8..2^10")
    for k in range(8, 11):
        for i in range(PER_PROTOCOL // 3 + 1):
            p = iterated_protocol(generate_yes_instance(1 << k, 3000 + i), IteratedConfig(T=2))
            assert run(p, seed=i)[0].accepted
    # reaching here means the layers were built; the xfail then reports XPASS
    record(1, "iterated T=2", True, "all accepted")


# ---------------------------------------------------------------- 2

def test_criterion_2_deterministic_soundness():
    checked = found = 0
    for ell in range(1, 7):
        for a, b in itertools.product(range(1 << ell), repeat=2):
            if a > b:
                continue
            checked += 1
            found += accepting_labelings(gt_scheme(a, b, ell))
    gt_checked = checked
    for ell in range(1, 6):
        top = 1 << ell
        for a, b, c in itertools.product(range(top), repeat=3):
            if a + b == c:
                continue
            checked += 1
            found += accepting_labelings(add_scheme(a, b, c, ell))
    ok = found == 0
    record(2, "exhaustive", ok, f"{gt_checked} GT and {checked - gt_checked} ADD no-instances, "
                                f"{found} accepting labelings")
    assert ok


# ---------------------------------------------------------------- 3

def test_criterion_3_equality_exact():
    rng = random.Random("acceptance/3")
    worst, mismatches = 0.0, 0
    for _ in range(50):
        a, b = random_unequal(8, rng)
        proto = eq2_protocol(path_pair(a, b))
        assert proto.q == 67
        hits, total = collision_fraction(67, a, b)
        worst = max(worst, hits / total)
        acc = sum(run(proto, FingerprintLie(), coins={0: {proto.leftP: {"r": r}}})[0].accepted for r in range(67))
        mismatches += acc != hits
    ok = worst <= 8 / 67 and mismatches == 0
    record(3, "eq2 l=8 q=67", ok, f"max collision fraction {worst:.4f} <= {8 / 67:.4f}; "
                                  f"fp-lie acceptance differs from the fraction on {mismatches} of 50 pairs")
    assert ok


# ---------------------------------------------------------------- 4

def test_criterion_4_double_soundness():
    worst = []
    ok = True
    for n in (256, 1024, 4096):
        bound = double_soundness(n)
        for iseed in (0, 1):
            proto = DoubleProtocol(generate_no_instance(n, iseed))
            for s in [HONEST] + strategy_library():
                if s is not HONEST and not s.applies(proto):
                    continue
                est = estimate_acceptance(proto, s, 2000, seed=f"acceptance/4/{n}/{iseed}/{s.name}")
                good = est.rate <= bound + est.ci95
                ok &= good
                worst.append((est.rate - bound - est.ci95, n, s.name, est.rate, est.ci95))
    top = max(worst)
    record(4, "double", ok, f"{len(worst)} cells, closest: n={top[1]} {top[2]} {top[3]:.4f} +- {top[4]:.4f} "
                            f"vs 1/log n={double_soundness(top[1]):.4f}; cert-lie not applicable")
    assert ok


# ---------------------------------------------------------------- 5

def test_criterion_5_rounds_and_soundness():
    s = "1011001110001011"
    proto = SelfReduce(sr_instance(s, s))
    rounds = len(proto.rounds)
    base = len(EQ2.rounds)
    formula = base + 3 - (base % 2)
    rep, _ = run(proto, seed=1)
    ok_rounds = rounds == rep.num_rounds == formula == 5
    record(5, "rounds", ok_rounds, f"measured {rep.num_rounds}, formula {formula}")

    t = "1011001110001010"
    lie = SelfReduce(sr_instance(s, t))
    bound = sr_soundness(16)
    est = estimate_acceptance(lie, FingerprintLie(), 10_000, seed="acceptance/5")
    cert = estimate_acceptance(lie, CertificateLie(), 2000, seed="acceptance/5/cert")
    ok_sound = est.rate <= bound + est.ci95 and cert.rate <= bound + cert.ci95
    record(5, "soundness", ok_sound, f"fp-lie {est.rate:.4f} +- {est.ci95:.4f} over 10^4, cert-lie "
                                     f"{cert.rate:.4f} over 2000, bound {bound:.4f}")
    assert ok_rounds and ok_sound


def _declared_widths(ell):
    p = SelfReduce(sr_instance("0" * ell, "0" * ell))
    return [sum(p.schema[r].values()) for r in range(len(p.rounds))]


@pytest.mark.xfail(strict=True, raises=AssertionError, reason="base-equality label width grows with log of segment length")
def test_criterion_5_width_constant_in_ell():
    s = "1011001110001011"
    measured = run(SelfReduce(sr_instance(s, s)), seed=1)[0].round_widths
    declared = {ell: _declared_widths(ell) for ell in (16, 64, 256)}
    assert all(m <= d for m, d in zip(measured, declared[16]))
    constant = len({tuple(w) for w in declared.values()}) == 1
    detail = f"declared per-round widths {declared}; measured at 16: {measured}"
    record(5, "width", constant, detail)
    assert constant, detail


# ---------------------------------------------------------------- 6

@pytest.mark.xfail(strict=True, raises=GeometryError, reason="d=3 layers do not fit any desk-scale n")
def test_criterion_6_forced_depth():
    widths = {}
    for k in (8, 10, 12, 14):
        n = 1 << k
        widths[n] = run(tradeoff_protocol(generate_yes_instance(n, 1)))[0].proof_size_bits
    record(6, "forced depth", False, f"GeometryError at T=2 on n=1024; depth-1 max bits by n {widths}")
    proto = iterated_protocol(generate_no_instance(1024, 0), IteratedConfig(T=2))
    for s in strategy_library():
        if s.applies(proto):
            est = estimate_acceptance(proto, s, 2000, seed="acceptance/6")
            assert est.rate <= iterated_soundness() + est.ci95


# ---------------------------------------------------------------- 7

def test_criterion_7_q_certification():
    primes_ok = {}
    for ell in (8, 16, 32):
        lay = ClusterLayout(ell)
        q = sr_modulus(ell)
        assert prime(q) and 2 * ell * ell <= q <= 3 * ell * ell
        primes_ok[ell] = (q, run(certify_q(lay, q))[0].accepted)
    lay = ClusterLayout(8)
    comps = [q for q in range(2 * 64, 3 * 64 + 1) if q % 2 and not prime(q)]
    floor = 1 - EQ2.soundness(lay.seg_len)
    worst = 1.0
    ok = all(v for _, v in primes_ok.values())
    for q in comps:
        ok &= not honest_certificate_exists(8, q)
        ok &= not run(certify_q(lay, q))[0].accepted
        for value in (1, 2):
            est = estimate_acceptance(certify_q(lay, q), CertificateLie(value), 250, seed=f"acceptance/7/{q}/{value}")
            rej = 1 - est.rate
            worst = min(worst, rej)
            ok &= rej >= floor - est.ci95
    record(7, "certify", ok, f"smallest primes {primes_ok}; {len(comps)} composites at l=8 without honest "
                             f"certificate, worst forged rejection {worst:.4f} vs {floor:.4f}")
    assert ok


# ---------------------------------------------------------------- 8

def test_criterion_8_round_collapse():
    res = round_collapse_attack(collapse_pairs(256, 50, 0), 256, draws=500, seed=0)
    ok = res.rate - res.bound >= 10 * res.ci95 and res.sequential_rate <= res.bound
    record(8, "collapse l=256", ok, f"collapsed {res.rate:.4f} +- {res.ci95:.4f}, bound {res.bound:.4f}, "
                                    f"sequential optimum {res.sequential_rate:.4f}, q1={res.q1} q2={res.q2}")
    assert ok


# ---------------------------------------------------------------- 9

def test_criterion_9_oracle_equivalence():
    rng = random.Random("acceptance/9")
    agree = total = yes = 0
    for i in range(1000):
        no = rng.random() < 0.5
        n = rng.randint(3, 64)
        inst = generate_no_instance(n, i) if no else generate_yes_instance(n, i, rng.random())
        truth = brute_force_decide(inst).verdict
        yes += truth
        for proto in (DoubleProtocol(inst), iterated_protocol(inst)):
            total += 1
            agree += run(proto, seed=i)[0].accepted == truth
    ok = agree == total
    record(9, "honest vs brute force", ok, f"{agree}/{total} verdicts agree ({yes} yes, {1000 - yes} no instances)")
    assert ok
