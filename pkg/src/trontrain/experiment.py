"""TOML-configured experiments with deterministic artifacts.

A config names an algorithm (``relu_tron``, ``glm_tron`` or ``neurotron``)
and its inputs. :func:`run_experiment` writes ``summary.json`` and one
``trace_{repeat}.csv`` per repeat; identical configs and seeds give
byte-identical files.
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import glm_tron, neurotron, relu_tron
from .adversary import OracleConfig, beta_from_dict, respond
from .data import Dataset
from .distributions import UnitBall, distribution_from_dict, estimate_moments
from .errors import ConfigError, TronError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

ALGORITHMS = ("relu_tron", "glm_tron", "neurotron")


def load_config(path) -> dict:
    """Parse a TOML config file."""
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package, e.g. ``case1_unif2d.toml``."""
    return Path(str(resources.files("trontrain") / "configs" / name))


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form of a config."""
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _require(cfg: dict, *keys):
    node = cfg
    for k in keys:
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"missing config key {'.'.join(keys)}")
        node = node[k]
    return node


def validate(cfg: dict) -> None:
    """Check the config shape before any computation."""
    algo = cfg.get("algorithm")
    if algo not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {algo!r}")
    if not isinstance(cfg.get("seed", 0), int):
        raise ConfigError("seed must be an integer")
    if algo == "relu_tron":
        for k in ("distribution", "oracle", "training"):
            _require(cfg, k)
        for k in ("batch", "eps", "delta", "repeats"):
            _require(cfg, "training", k)
        _require(cfg, "oracle", "w_star")
    elif algo == "glm_tron":
        for k in ("n", "samples", "epsilon", "repeats"):
            _require(cfg, "training", k)
    else:
        for k in ("r", "n", "k", "samples", "eps", "repeats"):
            _require(cfg, "training", k)


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _relu_constants(cfg: dict, seed: int):
    tr = cfg["training"]
    dist = distribution_from_dict(cfg["distribution"])
    oc = dict(cfg["oracle"])
    oc.setdefault("theta_star", 0.0)
    oracle = OracleConfig.from_dict(oc)
    w_star = np.asarray(oracle.w_star)
    beta = beta_from_dict(oc.get("beta", {"kind": "constant", "p": 1.0}))
    mc = int(tr.get("mc_samples", 10**6))
    m = estimate_moments(dist, w_star, oracle.theta_star, beta, mc, seed)
    w_err0 = float(np.sum(w_star**2))
    if oracle.theta_star == 0:
        sched = relu_tron.case1_schedule(m, int(tr["batch"]), w_err0, tr["eps"], tr["delta"], tr.get("delta0", 1.0))
    else:
        sched = relu_tron.case2_schedule(
            m, int(tr["batch"]), w_err0, tr["eps"], tr["delta"], tr.get("K"), tr.get("gamma")
        )
    constants = {
        "moments": m.to_dict(),
        "provenance": {"source": m.provenance, "n_samples": m.n_samples, "std_err": m.std_err},
        "schedule": sched.to_dict(),
    }
    return dist, oracle, sched, constants


def _run_relu(cfg, seed, out, dry_run):
    tr = cfg["training"]
    dist, oracle, sched, constants = _relu_constants(cfg, seed)
    summary = {"constants": constants, "predicted_T": sched.predicted_T}
    if dry_run:
        return summary, None
    rep = relu_tron.relu_tron_train(
        dist, oracle, sched, int(tr["repeats"]), seed, tr["eps"], tr["delta"], tr.get("n_steps")
    )
    summary["results"] = {
        "success_rate": rep.success_rate,
        "mean_final_sq_err": float(rep.final_sq_err.mean()),
        "empirical_T": rep.empirical_T(),
        "n_iterates": int(rep.sq_err.shape[1]),
    }
    checks = {}
    want = cfg.get("assertions", {})
    if "min_success_rate" in want:
        checks["min_success_rate"] = rep.success_rate >= want["min_success_rate"]
    if "max_mean_final_sq_err" in want:
        checks["max_mean_final_sq_err"] = float(rep.final_sq_err.mean()) <= want["max_mean_final_sq_err"]
    summary["assertions"] = checks
    writers = [lambda p, r=r: rep.write_trace(p, r) for r in range(rep.n_repeats)]
    return summary, writers


def _run_glm(cfg, seed, out, dry_run):
    tr = cfg["training"]
    n, S, R = int(tr["n"]), int(tr["samples"]), int(tr["repeats"])
    theta = float(tr.get("theta", 0.0))
    act = glm_tron.ACTIVATIONS[tr.get("activation", "relu")]()
    gcfg = glm_tron.GlmTronConfig(act, float(tr["epsilon"]), int(tr.get("max_iters", 10_000)))
    summary = {"predicted_T": glm_tron.iteration_count(1.0, gcfg.epsilon)}
    if dry_run:
        return summary, None
    traces, eff = [], []
    for rs in np.random.SeedSequence(seed).spawn(R):
        rng = np.random.default_rng(rs)
        X = UnitBall(n).draw(rng, S)
        w = rng.standard_normal(n)
        w /= np.linalg.norm(w)
        y = act(X @ w) + rng.uniform(-theta, theta, size=S)
        t = glm_tron.glm_tron_run(Dataset(X, y), gcfg, w)
        traces.append(t)
        eff.append(float(t.effective_erm[-1]))
    bound = glm_tron.noiseless_bound(act.lipschitz, gcfg.epsilon, theta, 1.0)
    summary["results"] = {"final_effective_erm": eff, "bound_at_unit_distance": bound}
    summary["assertions"] = {"effective_erm_below_bound": bool(max(eff) < bound)}
    return summary, [lambda p, t=t: t.to_csv(p) for t in traces]


def _run_neuro(cfg, seed, out, dry_run):
    tr = cfg["training"]
    r, n, k, S, R = (int(tr[key]) for key in ("r", "n", "k", "samples", "repeats"))
    rng = np.random.default_rng(seed)
    M = neurotron.sample_full_rank_M(r, n, int(tr.get("dof", 50)), rng)
    M /= np.linalg.norm(M, 2)
    C = float(tr.get("c_scale", 0.1)) * rng.standard_normal((r, n)) / np.sqrt(n)
    nc = neurotron.sample_net_class(M, C, k, float(tr.get("alpha", 0.0)))
    X = rng.standard_normal((S, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    X = np.vstack([X, -X])
    w_ref = rng.standard_normal(r)
    d = Dataset(X, neurotron.net_forward(nc, w_ref, X))
    lam = neurotron.data_lambda1(d, nc, M)
    inits = [rng.standard_normal(r) for _ in range(R)]
    w_err0 = max(float(np.sum((w0 - w_ref) ** 2)) for w0 in inits)
    sched = neurotron.theorem_schedule(nc, M, d.max_norm(), lam, 0.0, w_err0, float(tr["eps"]))
    summary = {"constants": {"schedule": sched.to_dict(), "net_class": nc.to_dict()}, "predicted_T": sched.predicted_T}
    if dry_run:
        return summary, None
    traces = [neurotron.neurotron_run(d, nc, M, sched.eta, sched.predicted_T, w0) for w0 in inits]
    errs = [float(np.linalg.norm(t.final - w_ref)) for t in traces]
    summary["results"] = {"final_distance": errs, "iterates": [len(t) for t in traces]}
    summary["assertions"] = {"within_eps": bool(max(errs) <= float(tr["eps"]))}
    return summary, [lambda p, t=t: t.to_csv(p) for t in traces]


RUNNERS = {"relu_tron": _run_relu, "glm_tron": _run_glm, "neurotron": _run_neuro}


def run_experiment(cfg: dict, out_dir=None, dry_run: bool = False, seed: int | None = None, stream=None) -> int:
    """Run a configured experiment.

    Parameters
    ----------
    cfg : dict
        Parsed config.
    out_dir : path-like, optional
        Artifact directory, created if needed. Defaults to ``./out``.
    dry_run : bool
        Print constants and the predicted horizon without training.
    seed : int, optional
        Overrides the config seed.
    stream : file-like, optional
        Where messages go, ``sys.stdout`` by default.

    Returns
    -------
    int
        0 on success, 1 when a configured assertion fails, 2 on an invalid
        config or a violated precondition.
    """
    stream = sys.stdout if stream is None else stream
    cfg = copy.deepcopy(cfg)
    if seed is not None:
        cfg["seed"] = int(seed)
    cfg.setdefault("seed", 0)
    try:
        validate(cfg)
        summary, writers = RUNNERS[cfg["algorithm"]](cfg, cfg["seed"], out_dir, dry_run)
    except (TronError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    summary.update(
        {"algorithm": cfg["algorithm"], "config": cfg, "config_hash": config_hash(cfg), "seed": cfg["seed"]}
    )
    if dry_run:
        print(json.dumps(summary, indent=2, sort_keys=True), file=stream)
        return 0
    out = Path(out_dir if out_dir is not None else "out")
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "summary.json", summary)
    for i, write in enumerate(writers):
        write(out / f"trace_{i}.csv")
    failed = [k for k, ok in summary.get("assertions", {}).items() if not ok]
    print(f"wrote {out / 'summary.json'} and {len(writers)} traces", file=stream)
    if failed:
        print(f"assertions failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0
