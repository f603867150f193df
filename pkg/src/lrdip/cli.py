"""Command-line front end.

Subcommands
  gen        write a generated instance file (JSON)
  run        one execution; prints ACCEPT/REJECT and transcript statistics
  soundness  acceptance sweep over no-instances -> CSV
  proofsize  honest message sizes against n -> CSV
  attack     round-collapse demo -> CSV

CSV schemas
  soundness: protocol,n,instance_seed,strategy,trials,accept_rate,ci95,paper_bound,flag
  proofsize: protocol,n,rounds,max_bits,total_bits_per_node,round_widths
  attack:    ell,q1,q2,draws,search_rate,collapsed_rate,collapsed_ci95,sequential_rate,bound

Exit codes: 0 success, 1 reject while `--expect yes` (or accept while
`--expect no`, or a replay mismatch), 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import instances as I
from .adversary import (CollapseResult, SweepConfig, random_unequal, round_collapse_attack, soundness_sweep,
                        strategy_by_name, strategy_names, write_csv)
from .arith_schemes import (EQ2, add_scheme, eq2_protocol, gt_scheme, mod_add_scheme, mod_mult, mult_to_eq)
from .eq_selfreduce import SelfReduce, sr_instance
from .instances import InstanceFormatError, InvalidParameter, LrInstance
from .lr_double import DoubleProtocol, NonPlanarInput
from .lr_iterated import IteratedConfig, iterated_protocol, tradeoff_protocol
from .path_encoding import CapacityError, path_pair
from .runtime import ConfigError, Protocol, Transcript, parse_coins, run

PROTOCOLS = ("gt", "add", "modadd", "eq2", "mult", "modmult", "double", "selfreduce", "iterated", "tradeoff")
LR_PROTOCOLS = ("double", "iterated", "tradeoff")
STRING_PROTOCOLS = ("eq2", "selfreduce")
N_MODES = ("exact", "upper")
PROOFSIZE_FIELDS = ("protocol", "n", "rounds", "max_bits", "total_bits_per_node", "round_widths")


@dataclass
class RunConfig:
    subcommand: str = "run"
    instance: str | None = None
    n: int = 256
    seed: int = 0
    no: bool = False
    violations: int = 1
    density: float = 0.5
    protocol: str = "double"
    prover: str = "honest"
    trials: int = 2000
    output: str | None = None
    n_mode: str = "exact"
    n_known: int | None = None
    d: int = 1
    T: float = 16
    c: float = 1.0
    c1: int = 6
    c2: int = 15
    tag_bits: int = 3
    # arithmetic and string inputs
    alpha: int | None = None
    beta: int | None = None
    gamma: int | None = None
    modulus: int | None = None
    width: int | None = None
    bits: str | None = None
    bits2: str | None = None
    expect: str | None = None
    replay: str | None = None
    save_transcript: str | None = None
    sizes: tuple[int, ...] = ()
    instance_seeds: tuple[int, ...] = (0,)
    strategies: tuple[str, ...] = ()
    ell: int = 256
    pairs: int = 50
    draws: int = 500
    q1: int | None = None
    q2: int | None = None

    def validate(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}; valid: {', '.join(PROTOCOLS)}")
        if self.n_mode not in N_MODES:
            raise ConfigError(f"unknown n-mode {self.n_mode!r}; valid: {', '.join(N_MODES)}")
        for s in (self.prover, *self.strategies):
            strategy_by_name(s)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.expect not in (None, "yes", "no"):
            raise ConfigError(f"--expect must be yes or no, got {self.expect!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # argparse's own exit code is 2 already; keep the message on stderr
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _n_range(text: str) -> tuple[int, ...]:
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"must look like a:b, got {text!r}") from None
    if a < 2 or b < a:
        raise argparse.ArgumentTypeError(f"need 2 <= a <= b, got {text!r}")
    out, n = [], a
    while n <= b:
        out.append(n)
        n *= 2
    return tuple(out)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="lrdip", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def proto_opts(p, default="double"):
        p.add_argument("--proto", dest="protocol", default=default, help=f"one of: {', '.join(PROTOCOLS)}")
        p.add_argument("--n-mode", default="exact", help="exact: nodes know n; upper: nodes know an upper bound")
        p.add_argument("--n-known", type=int, help="the upper bound for --n-mode upper (default 2n)")
        p.add_argument("--d", type=int, default=1, help="layer count for tradeoff")
        p.add_argument("--T", type=float, default=16, help="iterated-log target for iterated")
        p.add_argument("--c", type=float, default=1.0, help="layer geometry constant")
        p.add_argument("--c1", type=int, default=6)
        p.add_argument("--c2", type=int, default=15)
        p.add_argument("--tag-bits", type=int, default=3)
        p.add_argument("--seed", type=int, default=0)

    g = sub.add_parser("gen", help="write an instance file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--no", action="store_true", help="generate a no-instance")
    g.add_argument("--violations", type=int, default=1)
    g.add_argument("--density", type=float, default=0.5, help="chord density in [0,1]")
    g.add_argument("--out", dest="output", help="path (default stdout)")

    r = sub.add_parser("run", help="single execution")
    proto_opts(r)
    r.add_argument("--in", dest="instance", help="instance file for double/iterated/tradeoff")
    r.add_argument("--prover", default="honest", help=f"one of: {', '.join(strategy_names())}")
    r.add_argument("--expect", help="yes or no")
    r.add_argument("--alpha", type=int)
    r.add_argument("--beta", type=int)
    r.add_argument("--gamma", type=int)
    r.add_argument("--N", dest="modulus", type=int, help="modulus for modadd/modmult")
    r.add_argument("--width", type=int)
    r.add_argument("--a", dest="bits", help="first bit string for eq2/selfreduce")
    r.add_argument("--b", dest="bits2", help="second bit string for eq2/selfreduce")
    r.add_argument("--replay", help="transcript file written by --save-transcript")
    r.add_argument("--save-transcript", help="write the transcript here")

    s = sub.add_parser("soundness", help="acceptance sweep over no-instances")
    proto_opts(s)
    s.add_argument("--sizes", type=_int_list, default=(256,), help="n values (string length for eq2/selfreduce)")
    s.add_argument("--instance-seeds", type=_int_list, default=(0,))
    s.add_argument("--strategies", default="", help="comma-separated; default all applicable")
    s.add_argument("--trials", type=int, default=2000)
    s.add_argument("--violations", type=int, default=1)
    s.add_argument("--out", dest="output", required=True)

    p = sub.add_parser("proofsize", help="honest message sizes against n")
    proto_opts(p)
    p.add_argument("--n-range", dest="sizes", type=_n_range, required=True, help="a:b, doubling from a")
    p.add_argument("--out", dest="output", help="path (default stdout)")

    a = sub.add_parser("attack", help="round-collapse demo")
    a.add_argument("--ell", type=int, default=256)
    a.add_argument("--pairs", type=int, default=50)
    a.add_argument("--draws", type=int, default=500)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--q1", type=int)
    a.add_argument("--q2", type=int)
    a.add_argument("--out", dest="output", help="path (default stdout)")
    return ap


def parse_config(argv) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    if isinstance(ns.get("strategies"), str):
        ns["strategies"] = tuple(x for x in ns["strategies"].split(",") if x)
    known = RunConfig.__dataclass_fields__
    cfg = RunConfig(**{k: v for k, v in ns.items() if k in known})
    cfg.validate()
    return cfg


# ---------------------------------------------------------------- protocol construction

def _n_known(cfg: RunConfig, n: int) -> int | None:
    if cfg.n_mode == "exact":
        return None
    return cfg.n_known if cfg.n_known is not None else 2 * n


def lr_protocol(cfg: RunConfig, inst: LrInstance) -> Protocol:
    nk = _n_known(cfg, inst.n)
    icfg = IteratedConfig(T=cfg.T, c=cfg.c, tag_bits=cfg.tag_bits)
    if cfg.protocol == "double":
        return DoubleProtocol(inst, nk)
    if cfg.protocol == "iterated":
        return iterated_protocol(inst, icfg, nk)
    return tradeoff_protocol(inst, cfg.d, icfg, nk)


def _need(cfg: RunConfig, *names: str) -> list:
    out = []
    for nm in names:
        v = getattr(cfg, nm)
        if v is None:
            flag = {"modulus": "N", "bits": "a", "bits2": "b"}.get(nm, nm)
            raise ConfigError(f"protocol {cfg.protocol} needs --{flag}")
        out.append(v)
    return out


def build_protocol(cfg: RunConfig, inst: LrInstance | None = None) -> Protocol:
    p = cfg.protocol
    if p in LR_PROTOCOLS:
        if inst is None:
            if cfg.instance is None:
                raise ConfigError(f"protocol {p} needs --in")
            inst = I.load(cfg.instance)
        return lr_protocol(cfg, inst)
    if p in STRING_PROTOCOLS:
        a, b = _need(cfg, "bits", "bits2")
        if set(a + b) - {"0", "1"} or len(a) != len(b):
            raise ConfigError("--a and --b must be bit strings of equal length")
        if p == "eq2":
            return eq2_protocol(path_pair(a, b))
        return SelfReduce(sr_instance(a, b, cfg.c1, cfg.c2), EQ2, cfg.c1, cfg.c2)
    if p == "gt":
        a, b = _need(cfg, "alpha", "beta")
        return gt_scheme(a, b, cfg.width)
    a, b, c = _need(cfg, "alpha", "beta", "gamma")
    if p == "add":
        return add_scheme(a, b, c, cfg.width)
    if p == "mult":
        return mult_to_eq(a, b, c, EQ2, ell_prime=cfg.width)
    (N,) = _need(cfg, "modulus")
    if p == "modadd":
        return mod_add_scheme(N, a, b, c, cfg.width)
    return mod_mult(N, a, b, c, EQ2, ell_prime=cfg.width)


# ---------------------------------------------------------------- subcommands

def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_gen(cfg: RunConfig) -> int:
    if cfg.no:
        inst = I.generate_no_instance(cfg.n, cfg.seed, cfg.violations, cfg.density)
    else:
        inst = I.generate_yes_instance(cfg.n, cfg.seed, cfg.density)
    text = I.dumps(inst)
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
        _err(f"wrote {inst.label} instance with n={inst.n} to {cfg.output}")
    else:
        sys.stdout.write(text)
    return 0


def _stats_lines(rep) -> list[str]:
    return [
        f"rounds: {rep.num_rounds}",
        f"max_message_bits: {rep.proof_size_bits}",
        f"total_bits_per_node: {rep.total_bits_per_node}",
        f"round_widths: {','.join(map(str, rep.round_widths))}",
        f"rejecting_nodes: {rep.per_node.count(False)}",
    ]


_REPLAY_KEYS = ("protocol", "prover", "seed", "n_mode", "n_known", "d", "T", "c", "c1", "c2", "tag_bits",
                "alpha", "beta", "gamma", "modulus", "width", "bits", "bits2")


def save_transcript(path: str, cfg: RunConfig, inst: LrInstance | None, tr: Transcript, accepted: bool) -> None:
    head = {k: getattr(cfg, k) for k in _REPLAY_KEYS}
    head["instance"] = inst.to_dict() if inst is not None else None
    head["verdict"] = "ACCEPT" if accepted else "REJECT"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(head, sort_keys=True) + "\n")
        for line in tr.dump_lines():
            fh.write(line + "\n")


def load_transcript(path: str) -> tuple[dict, list[str]]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read transcript: {exc}") from None
    if not lines or not lines[0].startswith("# "):
        raise ConfigError(f"{path}: missing transcript header")
    try:
        head = json.loads(lines[0][2:])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: bad transcript header ({exc.msg})") from None
    return head, lines[1:]


def cmd_replay(cfg: RunConfig) -> int:
    head, body = load_transcript(cfg.replay)
    rcfg = RunConfig(**{k: head[k] for k in _REPLAY_KEYS if k in head})
    rcfg.validate()
    inst = I.loads(json.dumps(head["instance"])) if head.get("instance") else None
    proto = build_protocol(rcfg, inst)
    coins = parse_coins(proto, body)
    rep, tr = run(proto, strategy_by_name(rcfg.prover), rcfg.seed, coins=coins)
    verdict = "ACCEPT" if rep.accepted else "REJECT"
    print(verdict)
    for line in _stats_lines(rep):
        print(line)
    same = verdict == head.get("verdict") and tr.dump_lines() == body
    print(f"replay: {'identical' if same else 'MISMATCH'} (recorded {head.get('verdict')})")
    return 0 if same else 1


def cmd_run(cfg: RunConfig) -> int:
    if cfg.replay:
        return cmd_replay(cfg)
    inst = None
    if cfg.protocol in LR_PROTOCOLS:
        if cfg.instance is None:
            raise ConfigError(f"protocol {cfg.protocol} needs --in")
        inst = I.load(cfg.instance)
    proto = build_protocol(cfg, inst)
    rep, tr = run(proto, strategy_by_name(cfg.prover), cfg.seed)
    print("ACCEPT" if rep.accepted else "REJECT")
    for line in _stats_lines(rep):
        print(line)
    if rep.protocol_error:
        _err(f"prover error: {rep.protocol_error}")
    if cfg.save_transcript:
        save_transcript(cfg.save_transcript, cfg, inst, tr, rep.accepted)
    if cfg.expect == "yes" and not rep.accepted:
        _err("expected ACCEPT")
        return 1
    if cfg.expect == "no" and rep.accepted:
        _err("expected REJECT")
        return 1
    return 0


def cmd_soundness(cfg: RunConfig) -> int:
    scfg = SweepConfig(protocol=cfg.protocol, sizes=tuple(cfg.sizes), instance_seeds=tuple(cfg.instance_seeds),
                       trials=cfg.trials, seed=cfg.seed, violations=cfg.violations, T=cfg.T,
                       tag_bits=cfg.tag_bits, c1=cfg.c1, c2=cfg.c2)
    strategies = [strategy_by_name(s) for s in cfg.strategies] if cfg.strategies else None
    rows = soundness_sweep(scfg, strategies, log=_err)
    write_csv(rows, cfg.output)
    bad = [r for r in rows if r.flag != "ok"]
    _err(f"wrote {len(rows)} rows to {cfg.output}; {len(bad)} above bound")
    return 0


def proofsize_rows(cfg: RunConfig) -> list[list]:
    rows = []
    for n in cfg.sizes:
        if cfg.protocol in LR_PROTOCOLS:
            proto = lr_protocol(cfg, I.generate_yes_instance(n, cfg.seed))
        elif cfg.protocol in STRING_PROTOCOLS:
            a = "".join(random.Random(f"proofsize/{n}/{cfg.seed}").choice("01") for _ in range(n))
            sub = RunConfig(**{**asdict(cfg), "bits": a, "bits2": a})
            proto = build_protocol(sub)
        else:
            raise ConfigError(f"proofsize supports {', '.join(LR_PROTOCOLS + STRING_PROTOCOLS)}; "
                              f"got {cfg.protocol!r}")
        rep, _ = run(proto, seed=cfg.seed)
        if not rep.accepted:
            raise RuntimeError(f"honest run rejected at n={n}")
        rows.append([cfg.protocol, n, rep.num_rounds, rep.proof_size_bits, rep.total_bits_per_node,
                     ";".join(map(str, rep.round_widths))])
    return rows


def write_table(fields, rows, path: str | None) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        w.writerows(rows)
    finally:
        if path:
            fh.close()


def cmd_proofsize(cfg: RunConfig) -> int:
    write_table(PROOFSIZE_FIELDS, proofsize_rows(cfg), cfg.output)
    return 0


def collapse_pairs(ell: int, count: int, seed: int) -> list[tuple[str, str]]:
    rng = random.Random(f"collapse-pairs/{ell}/{seed}")
    return [random_unequal(ell, rng) for _ in range(count)]


def cmd_attack(cfg: RunConfig) -> int:
    if cfg.ell < 2 or cfg.pairs < 1 or cfg.draws < 1:
        raise ConfigError("need --ell >= 2, --pairs >= 1 and --draws >= 1")
    res = round_collapse_attack(collapse_pairs(cfg.ell, cfg.pairs, cfg.seed), cfg.ell, cfg.q1, cfg.q2,
                                cfg.draws, cfg.seed)
    write_table(CollapseResult.FIELDS, [res.as_row()], cfg.output)
    _err(f"collapsed rate {res.rate:.4f} +- {res.ci95:.4f} against bound {res.bound:.4f}; "
         f"sequential optimum {res.sequential_rate:.4f}")
    return 0


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "soundness": cmd_soundness, "proofsize": cmd_proofsize,
            "attack": cmd_attack}


def cli_main(argv=None) -> int:
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.subcommand](cfg)
    except (ConfigError, InvalidParameter, InstanceFormatError, CapacityError, NonPlanarInput) as exc:
        _err(f"error: {exc}")
        return 2
    except OSError as exc:
        _err(f"error: {exc}")
        return 2


def main() -> None:
    sys.exit(cli_main())
