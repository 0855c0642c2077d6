"""Command line entry point ``trontrain``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import acceptance, recursion, relu_tron
from .adversary import ConstantBeta, HalfspaceBeta, OracleConfig
from .distributions import IsotropicGaussian, UniformBox, UnitBall, estimate_moments
from .errors import TronError
from .experiment import bundled_config, load_config, run_experiment


def parse_distribution(spec: str, n: int):
    """``uniform:LOW,HIGH`` (box in ``n`` dims), ``gaussian[:SIGMA]`` or ``unit_ball``."""
    kind, _, arg = spec.partition(":")
    if kind == "uniform":
        lo, hi = (float(v) for v in (arg or "-1,1").split(","))
        return UniformBox((lo,) * n, (hi,) * n)
    if kind == "gaussian":
        return IsotropicGaussian(n, float(arg) if arg else 1.0)
    if kind == "unit_ball":
        return UnitBall(n)
    raise argparse.ArgumentTypeError(f"unknown distribution {spec!r}")


def parse_beta(spec: str):
    """``P`` or ``constant:P`` for a constant, ``halfspace:P:V1,V2,...`` for a half space."""
    parts = spec.split(":")
    if len(parts) == 1:
        return ConstantBeta(float(parts[0]))
    if parts[0] == "constant":
        return ConstantBeta(float(parts[1]))
    if parts[0] == "halfspace":
        return HalfspaceBeta(tuple(float(v) for v in parts[2].split(",")), float(parts[1]))
    raise argparse.ArgumentTypeError(f"unknown beta {spec!r}")


def _resolve_config(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_config(p.name)
    if bundled.exists():
        return bundled
    raise FileNotFoundError(path)


def cmd_run(args) -> int:
    try:
        cfg = load_config(_resolve_config(args.config))
    except (OSError, ValueError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg, args.out, args.dry_run, args.seed)


def cmd_accept(args) -> int:
    results = acceptance.acceptance_suite(args.seed)
    for c in results:
        print(c.line())
    failed = [c.key for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 1 if failed else 0


def cmd_verify(args) -> int:
    res = recursion.verify_draws(args.lemma, args.draws, args.seed)
    print(json.dumps(res, sort_keys=True))
    return 0 if res["certified"] == args.draws else 1


def cmd_moments(args) -> int:
    w = np.asarray(args.w_star, dtype=float)
    dist = parse_distribution(args.dist, len(w))
    m = estimate_moments(dist, w, args.theta_star, args.beta, args.samples, args.seed)
    out = m.to_dict()
    if args.std_err:
        out["std_err"] = m.std_err
    print(json.dumps(out, indent=2))
    return 0


def cmd_relu(args) -> int:
    w = np.asarray(args.w_star, dtype=float)
    dist = parse_distribution(args.dist, len(w))
    oracle = OracleConfig(tuple(w), args.theta_star, args.beta)
    m = estimate_moments(dist, w, args.theta_star, args.beta, args.samples, args.seed)
    w_err0 = float(w @ w)
    if args.theta_star == 0:
        s = relu_tron.case1_schedule(m, args.batch, w_err0, args.eps, args.delta)
    else:
        s = relu_tron.case2_schedule(m, args.batch, w_err0, args.eps, args.delta, gamma=args.gamma)
    rep = relu_tron.relu_tron_train(dist, oracle, s, args.repeats, args.seed, args.eps, args.delta)
    text = rep.to_json()
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(text + "\n")
        for r in range(rep.n_repeats):
            rep.write_trace(out / f"trace_{r}.csv", r)
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trontrain", description="Provable training of ReLU gates and shallow nets.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a TOML-configured experiment")
    r.add_argument("config", help="config path or the name of a bundled config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default="out")
    r.add_argument("--dry-run", action="store_true", help="print constants and the predicted horizon only")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("accept", help="run the acceptance checks")
    a.add_argument("--seed", type=int, default=0)
    a.set_defaults(func=cmd_accept)

    v = sub.add_parser("verify-recursion", help="certify random recursion instances by unrolling")
    v.add_argument("--lemma", choices=sorted(recursion.LEMMAS), required=True)
    v.add_argument("--draws", type=int, default=500)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("moments", help="Monte Carlo moment constants")
    m.add_argument("dist", help="uniform:LOW,HIGH | gaussian[:SIGMA] | unit_ball")
    m.add_argument("--w-star", type=float, nargs="+", required=True)
    m.add_argument("--theta-star", type=float, default=0.0)
    m.add_argument("--beta", type=parse_beta, default=None)
    m.add_argument("--samples", type=int, default=10**6)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--std-err", action="store_true", help="also print standard errors")
    m.set_defaults(func=cmd_moments)

    t = sub.add_parser("relu-tron", help="train a ReLU gate against the corrupting oracle")
    t.add_argument("--dist", default="uniform:-1,1")
    t.add_argument("--w-star", type=float, nargs="+", default=[-1.0, 1.0])
    t.add_argument("--theta-star", type=float, default=0.0)
    t.add_argument("--beta", type=parse_beta, default=ConstantBeta(1.0))
    t.add_argument("--batch", type=int, default=8)
    t.add_argument("--eps", type=float, default=1e-2)
    t.add_argument("--delta", type=float, default=0.1)
    t.add_argument("--gamma", type=float, default=None)
    t.add_argument("--repeats", type=int, default=50)
    t.add_argument("--samples", type=int, default=10**6, help="Monte Carlo samples for the constants")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default=None)
    t.set_defaults(func=cmd_relu)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TronError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
