"""Command-line experiment driver.

    wickflow SUBCOMMAND [--config FILE] [--seed S] [--reps N] [--workers N|auto]
                        [--out DIR] [--no-timing]

Each subcommand has a default parameter record; a JSON config overrides it
key by key (unknown keys are rejected). Results go to DIR/results.csv with
the columns of :data:`wickflow.results.COLUMNS`, plus DIR/summary.json.

Exit codes: 0 all contracts pass, 1 a contract failed (results still
written), 2 the config or command line could not be parsed (nothing
written), 3 a parameter violates a precondition.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import acceptance as _acc
from . import basis as B
from . import milt, paths, polymers, she, shifts, skorokhod
from .estimate import (MCEstimate, combined_z, default_workers, resolve_workers,
                       set_default_workers)
from .results import ResultRow, rows_to_csv, shift_rows_to_csv
from .rng import derive_seed, normals

EXIT_OK, EXIT_CONTRACT, EXIT_PARSE, EXIT_PRECONDITION = 0, 1, 2, 3
DEFAULT_SEED = 20250101


class ConfigError(Exception):
    """Raised for configs that cannot be parsed (exit 2)."""


class Recorder:
    """Collects rows and stamps each with the time since the previous one."""

    def __init__(self, experiment: str, seed: int):
        self.experiment = experiment
        self.seed = seed
        self.rows = []
        self._t = time.perf_counter()

    def add(self, label, n, reps, mean, stderr, oracle=None, passed=True, z=None):
        now = time.perf_counter()
        self.rows.append(ResultRow(self.experiment, label, int(n), int(reps), float(mean),
                                   float(stderr), None if oracle is None else float(oracle), z,
                                   round(1000 * (now - self._t), 3), self.seed, bool(passed)))
        self._t = now

    def estimate(self, est: MCEstimate, oracle=None, passed=True, label=None):
        self.add(label or est.label, est.n, est.reps, est.mean, est.stderr, oracle, passed)


def _shift_from(cfg: dict) -> shifts.ShiftSampler:
    """Shift sampler named by cfg["shift"]."""
    kind, n = cfg["shift"], cfg["n"]
    steps = cfg.get("steps") or 16 * max(n, 1)
    t = cfg.get("t", 1.0)
    beta = cfg.get("beta", 1.0)
    if kind == "planar-bridge":
        law = paths.PathLaw("bridge", 2, 0.0, cfg.get("x", 0.0), t, 1.0, 0.0, steps)
        return shifts.PathShift(law, she.default_planar_basis(cfg.get("x", 0.0), t), False, beta)
    if kind == "planar-motion":
        law = paths.PathLaw("motion", 2, 0.0, 0.0, t, 1.0, 0.0, steps)
        return shifts.PathShift(law, she.default_planar_basis(0.0, t), False, beta)
    if kind == "bridge-1p1":
        law = paths.PathLaw("bridge", 1, 0.0, cfg.get("x", 0.0), t, 1.0, 0.0, steps)
        return shifts.PathShift(law, she.default_spacetime_basis(cfg.get("x", 0.0), t), True, beta)
    if kind == "gmc-circle":
        return shifts.CircleGMC(cfg.get("gamma", 0.5))
    if kind == "lattice":
        return polymers.LatticeShift(polymers.LatticeModel(cfg.get("n_steps", 4)))
    raise ValueError(f"unknown shift {kind!r}")


SHIFT_KINDS = ("planar-bridge", "planar-motion", "bridge-1p1", "gmc-circle", "lattice")


def _positive(cfg, *keys):
    for k in keys:
        if not cfg[k] > 0:
            raise ValueError(f"{k} must be positive")


# ---- runners: each takes (cfg, seed, rec, workers) and returns pass/fail ----

def run_gram(cfg, seed, rec, workers):
    spec = B.BasisSpec(cfg["basis"], cfg["scale_N"], tuple(cfg["length"]), tuple(cfg["center"]))
    _positive(cfg, "n")
    r = B.gram_residual(spec, cfg["n"], cfg["nodes"] or None)
    ok = r <= cfg["tolerance"]
    rec.add(f"{cfg['basis']} max|G - I|", cfg["n"], 0, r, 0.0, 0.0, ok)
    return ok


def run_hermite_check(cfg, seed, rec, workers):
    grid = np.asarray(cfg["grid"], float)
    ok = True
    for k in range(cfg["kmax"] + 1):
        err = float(np.max(np.abs(skorokhod.iterate_integral(k, grid) - skorokhod.hermite(k, grid))))
        for beta in cfg["betas"]:
            want = beta**k * skorokhod.hermite(k, 1 / beta + grid)
            err = max(err, float(np.max(np.abs(skorokhod.wick_recursion(beta, k, grid) - want))))
        fine = err <= cfg["tolerance"]
        ok &= fine
        rec.add(f"k={k}", k, grid.size, err, 0.0, 0.0, fine)
    return ok


def run_adjoint_check(cfg, seed, rec, workers):
    _positive(cfg, "reps")
    ok = True
    for i, (label, G, F, dF) in enumerate(_acc.adjoint_battery()):
        est = skorokhod.adjoint_residual(G, F, dF, cfg["reps"], derive_seed(seed, i), label)
        fine = abs(est.z(0.0)) <= cfg["z_threshold"]
        ok &= fine
        rec.estimate(est, 0.0, fine, f"case {i}: {label}")
    return ok


def run_zn(cfg, seed, rec, workers):
    _positive(cfg, "p_reps", "q_reps", "n")
    shift = _shift_from(cfg)
    est = shifts.mean_one_residual(shift, cfg["n"], cfg["p_reps"], cfg["q_reps"], seed,
                                   workers=workers, label=f"E_P Z_n - 1 ({cfg['shift']})")
    ok = abs(est.z(0.0)) <= cfg["z_threshold"]
    rec.estimate(est, 0.0, ok)
    z = shifts.partition_Zn(shift, normals(derive_seed(seed, 1 << 33), cfg["n"]), cfg["q_reps"],
                            derive_seed(seed, 1 << 34), "Z_n at one noise draw")
    rec.estimate(z)
    return ok


def _first(X, m):
    return X[..., 0]


def _cos_first(X, m):
    return np.cos(X[..., 0])


def _first_times_shift(X, m):
    return X[..., 0] * m[:, 0]


def _tanh_sum(X, m):
    return np.tanh(X.sum(-1))


def _first_two(X, m):
    return X[..., 0] * X[..., 1]


# module-level functions so worker processes can unpickle them
IDENTITY_OBSERVABLES = {
    "xi1": _first,
    "cos-xi1": _cos_first,
    "xi1*m1": _first_times_shift,
    "tanh-sum": _tanh_sum,
    "xi1*xi2": _first_two,
}


def run_shift_identity(cfg, seed, rec, workers):
    _positive(cfg, "p_reps", "q_reps", "n")
    shift = _shift_from(cfg)
    ok = True
    for i, name in enumerate(cfg["observables"]):
        if name not in IDENTITY_OBSERVABLES:
            raise ValueError(f"unknown observable {name!r}")
        if name == "xi1*xi2" and cfg["n"] < 2:
            raise ValueError("xi1*xi2 needs n >= 2")
        est = shifts.shift_identity_residual(shift, IDENTITY_OBSERVABLES[name], cfg["n"],
                                             cfg["p_reps"], cfg["q_reps"], derive_seed(seed, i),
                                             workers=workers, label=f"F={name}")
        fine = abs(est.z(0.0)) <= cfg["z_threshold"]
        ok &= fine
        rec.estimate(est, 0.0, fine)
    return ok


def run_gmc_circle(cfg, seed, rec, workers):
    _positive(cfg, "n", "reps")
    g = cfg["gamma"]
    closed = shifts.circle_intersection_exponential(g)
    quad = shifts.circle_intersection_quadrature(g)
    dual = abs(closed - quad) <= 1e-8
    rec.add("closed form vs quadrature", 0, 0, closed, 0.0, quad, dual)
    vals = np.exp(shifts.pair_alphas(shifts.CircleGMC(g), cfg["n"], cfg["reps"], seed, 5000, workers))
    est = MCEstimate.from_samples(vals, cfg["n"], seed, f"paired gamma={g}")
    fine = abs(est.mean / closed - 1) <= cfg["rel_tolerance"]
    rec.estimate(est, closed, fine)
    return dual and fine


def _milt_oracle(cfg, k):
    if cfg["shift"] == "bridge-1p1":
        return milt.bridge_1p1_moment_exact(k, cfg["t"])
    if cfg["shift"] == "planar-motion" and k == 1:
        return milt.expected_cross_alpha(cfg["t"], 2 * cfg["t"])
    return None


def run_milt_moments(cfg, seed, rec, workers):
    _positive(cfg, "n", "reps", "t")
    if cfg["shift"] not in ("bridge-1p1", "planar-motion", "planar-bridge"):
        raise ValueError("milt-moments needs a path shift")
    a = shifts.pair_alphas(_shift_from(cfg), cfg["n"], cfg["reps"], seed, workers=workers)
    ok = True
    for k, est in zip(cfg["ks"], milt.moments(a, cfg["ks"], cfg["n"], seed, "E alpha_n^")):
        oracle = _milt_oracle(cfg, k)
        fine = oracle is None or abs(est.mean / oracle - 1) <= cfg["rel_tolerance"]
        ok &= fine
        rec.estimate(est, oracle, fine)
    return ok


def run_chain(cfg, seed, rec, workers):
    _positive(cfg, "reps")
    model = polymers.ChainModel(tuple(map(tuple, cfg["generator"])), cfg["start"], cfg["t"])
    P = polymers.chain_transition_exact(model)
    ok = True
    for y, est in enumerate(polymers.chain_mean_solution(model, cfg["reps"], seed, workers=workers)):
        fine = abs(est.z(P[model.start, y])) <= cfg["z_threshold"]
        ok &= fine
        rec.estimate(est, P[model.start, y], fine)
    return ok


def run_lattice(cfg, seed, rec, workers):
    model = polymers.LatticeModel(cfg["n_steps"])
    tol = cfg["tolerance"]
    mean = polymers.lattice_mean_exact(model)
    ok = abs(mean - 1) <= tol
    rec.add("E_P Z", model.n_steps, 0, mean, 0.0, 1.0, ok)
    xi = normals(cfg["xi_seed"], model.n_sites)
    rec.add("Z at the seeded field", model.n_steps, 0, polymers.lattice_partition_exact(model, xi), 0.0)
    sites = range(model.n_sites)
    tests = [("F=1", {(): 1.0})] + [(f"F=xi_{s}", {(s,): 1.0}) for s in sites]
    tests += [(f"F=xi_{a} xi_{b}", {(a, b): 1.0}) for a in sites for b in sites if a <= b]
    for label, F in tests:
        lhs, rhs = polymers.lattice_shift_identity_exact(model, F)
        fine = abs(lhs - rhs) <= tol
        ok &= fine
        rec.add(label, model.n_steps, 0, lhs, 0.0, rhs, fine)
    return ok


def _she(cfg, seed, rec, workers, dimension):
    _positive(cfg, "n", "p_reps", "q_reps", "t")
    q = she.SheQuery(dimension, cfg["x"], cfg["t"], cfg["n"], cfg["nu"], cfg["beta"],
                     cfg["steps"] or None)
    est = she.solution_mean_residual(q, cfg["p_reps"], cfg["q_reps"], seed, workers)
    ok = abs(est.z(0.0)) <= cfg["z_threshold"]
    rec.estimate(est, 0.0, ok)
    rec.add("heat kernel", 0, 0, q.kernel(), 0.0)
    u = she.solve_wick(q, normals(derive_seed(seed, 1 << 33), q.n), cfg["q_reps"],
                       derive_seed(seed, 1 << 34))
    rec.estimate(u, label="u_n at one noise draw")
    if cfg.get("dump_paths"):
        p = paths.sample(q.shift().law, derive_seed(seed, 1 << 35))
        cols = np.column_stack([p.times, p.points])
        np.savetxt(cfg["dump_paths"], cols, delimiter=",", fmt="%.17g",
                   header="time,x" + (",y" if dimension == "planar" else ""), comments="")
    return ok


def run_she1d(cfg, seed, rec, workers):
    return _she(cfg, seed, rec, workers, "1+1")


def run_she2d(cfg, seed, rec, workers):
    return _she(cfg, seed, rec, workers, "planar")


def run_kpz_couple(cfg, seed, rec, workers):
    _positive(cfg, "n", "reps")
    if any(N <= 0 for N in cfg["Ns"]) or len(cfg["Ns"]) < 2:
        raise ValueError("need at least two positive N")
    out = she.kpz_coupling_experiment(cfg["Ns"], cfg["n"], cfg["reps"], seed, cfg["y"],
                                      steps=cfg["steps"] or None, workers=workers)
    for r in out:
        rec.add(f"d(N={r.N:g})", cfg["n"], cfg["reps"], r.d, 0.0)
        rec.add(f"log Z (N={r.N:g})", cfg["n"], cfg["reps"], r.log_Z, 0.0)
        rec.add(f"log scaling factor (N={r.N:g})", cfg["n"], 0, r.log_scale, 0.0)
    ok = out[-1].d <= out[0].d / 2
    rec.add("d(last) / d(first)", cfg["n"], cfg["reps"], out[-1].d / out[0].d, 0.0, None, ok)
    return ok


def run_alpha_variance(cfg, seed, rec, workers):
    _positive(cfg, "n", "reps")
    table = {}
    for i, y in enumerate(cfg["ys"]):
        for r in she.alpha_variance_convergence(cfg["nus"], y, cfg["reps"], derive_seed(seed, i),
                                                cfg["n"], cfg["steps"] or None, workers=workers):
            table[(r.nu, r.y)] = r
    small = min(cfg["nus"])
    ok = True
    for (nu, y), r in sorted(table.items()):
        fine = nu != small or abs(r.estimate.mean / r.oracle - 1) <= cfg["rel_tolerance"]
        ok &= fine
        rec.estimate(r.estimate, r.oracle, fine)
    ys = list(cfg["ys"])
    for nu in cfg["nus"]:
        for y in ys[1:]:
            z = combined_z(table[(float(nu), float(ys[0]))].estimate, table[(float(nu), float(y))].estimate)
            fine = abs(z) <= cfg["z_threshold"]
            ok &= fine
            rec.add(f"nu={nu} y={ys[0]} vs y={y}", cfg["n"], cfg["reps"], z, 0.0, None, fine)
    return ok


def run_acceptance(cfg, seed, rec, workers):
    numbers = cfg["criteria"] or None
    ok = True
    for v in _acc.run(numbers, cfg["scale"], workers, echo=print):
        ok &= v.passed
        for r in v.rows:
            rec.add(f"c{v.number} {r.label}", r.n, r.reps, r.mean, r.stderr, r.oracle, r.passed,
                    r.z_score)
    return ok


SUBCOMMANDS = {
    "gram": (run_gram, dict(basis="hermite-plane-tensor", n=64, scale_N=1.0, length=[1.0, 1.0],
                            center=[0.0, 0.0], nodes=0, tolerance=1e-10)),
    "hermite-check": (run_hermite_check, dict(kmax=8, betas=[0.5, 1.0, 2.0],
                                              grid=[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
                                              tolerance=1e-9)),
    "adjoint-check": (run_adjoint_check, dict(reps=100_000, z_threshold=4.0)),
    "zn": (run_zn, dict(shift="bridge-1p1", n=64, t=1.0, x=0.0, steps=0, beta=1.0, gamma=0.5,
                        n_steps=4, p_reps=10_000, q_reps=100, z_threshold=4.0)),
    "shift-identity": (run_shift_identity, dict(shift="planar-bridge", n=16, t=0.5, x=0.0, steps=0,
                                                beta=1.0, gamma=0.5, n_steps=4, p_reps=10_000,
                                                q_reps=50, observables=["xi1", "cos-xi1", "xi1*m1",
                                                                        "tanh-sum"],
                                                z_threshold=4.0)),
    "gmc-circle": (run_gmc_circle, dict(gamma=0.5, n=2048, reps=100_000, rel_tolerance=0.05)),
    "milt-moments": (run_milt_moments, dict(shift="bridge-1p1", n=256, t=1.0, x=0.0, steps=0,
                                            beta=1.0, ks=[1, 2], reps=10_000, rel_tolerance=0.03)),
    "chain": (run_chain, dict(generator=[[-1.0, 1.0], [1.0, -1.0]], start=0, t=1.0, reps=100_000,
                              z_threshold=4.0)),
    "lattice": (run_lattice, dict(n_steps=4, xi_seed=7, tolerance=1e-10)),
    "she1d": (run_she1d, dict(x=0.0, t=1.0, n=64, nu=1.0, beta=1.0, steps=0, p_reps=10_000,
                              q_reps=100, z_threshold=4.0, dump_paths="")),
    "she2d": (run_she2d, dict(x=[0.0, 0.0], t=0.5, n=32, nu=1.0, beta=1.0, steps=0, p_reps=10_000,
                              q_reps=100, z_threshold=4.0, dump_paths="")),
    "kpz-couple": (run_kpz_couple, dict(Ns=[4, 16, 64], n=16, y=0.0, steps=0, reps=10_000)),
    "alpha-variance": (run_alpha_variance, dict(nus=[0.2, 0.1, 0.05], ys=[0.0, 2.0], n=256,
                                                steps=1024, reps=10_000, rel_tolerance=0.1,
                                                z_threshold=4.0)),
    "acceptance": (run_acceptance, dict(criteria=[], scale=1.0)),
}

# which key --reps overrides
REPS_KEY = {"zn": "p_reps", "shift-identity": "p_reps", "she1d": "p_reps", "she2d": "p_reps"}


def _same_type(default, value) -> bool:
    if isinstance(default, bool) or isinstance(value, bool):
        return isinstance(default, bool) and isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float))
    if isinstance(default, int):
        return isinstance(value, int)
    if isinstance(default, list):
        return isinstance(value, (list, int, float))
    return isinstance(value, type(default))


def load_config(command: str, path) -> dict:
    """Defaults of ``command`` overridden by the JSON object in ``path``.

    Raises :class:`ConfigError` for unreadable or malformed JSON, unknown
    keys, and values of the wrong type.
    """
    cfg = dict(SUBCOMMANDS[command][1])
    if path is None:
        return cfg
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read config: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if data.pop("experiment", command) != command:
        raise ConfigError(f"config is for another experiment, not {command}")
    for k, v in data.items():
        if k not in cfg:
            raise ConfigError(f"unknown key {k!r} for {command}")
        if not _same_type(cfg[k], v):
            raise ConfigError(f"key {k!r} has the wrong type")
        cfg[k] = float(v) if isinstance(cfg[k], float) else v
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wickflow", description="Wick-ordered heat equation experiments")
    p.add_argument("command", choices=sorted(SUBCOMMANDS))
    p.add_argument("--config", help="JSON file overriding the default parameters")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="64-bit master seed")
    p.add_argument("--reps", type=int, help="replica count override")
    p.add_argument("--workers", help="worker processes: N or auto (default WICKFLOW_WORKERS or 1)")
    p.add_argument("--out", default="wickflow-out", help="output directory")
    p.add_argument("--no-timing", action="store_true",
                   help="leave wall_time_ms empty so reruns are byte-identical")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_PARSE
    if not 0 <= args.seed < 2**64:
        print("error: seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_PARSE
    try:
        cfg = load_config(args.command, args.config)
        workers = resolve_workers(args.workers)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    if args.reps is not None:
        key = REPS_KEY.get(args.command, "reps")
        if key not in cfg:
            print(f"error: {args.command} takes no replica count", file=sys.stderr)
            return EXIT_PARSE
        cfg[key] = args.reps
    runner = SUBCOMMANDS[args.command][0]
    rec = Recorder(args.command, args.seed)
    t0 = time.perf_counter()
    previous = default_workers()
    try:
        set_default_workers(workers)
        ok = runner(cfg, args.seed, rec, workers)
    except ValueError as e:
        print(f"precondition violated: {e}", file=sys.stderr)
        return EXIT_PRECONDITION
    finally:
        set_default_workers(previous)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timing = not args.no_timing
    (out / "results.csv").write_text(rows_to_csv(rec.rows, timing))
    if args.command in ("zn", "gmc-circle", "shift-identity"):
        (out / "shifts.csv").write_text(shift_rows_to_csv(rec.rows))
    summary = {"experiment": args.command, "seed": args.seed, "workers": workers,
               "passed": bool(ok), "rows": len(rec.rows), "config": cfg}
    if timing:
        summary["wall_time_ms"] = round(1000 * (time.perf_counter() - t0), 3)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for r in rec.rows:
        mark = "" if r.passed else "  <- FAIL"
        print(f"{r.label}: {r.mean:.6g} +- {r.stderr:.2g}"
              + ("" if r.oracle is None else f" (oracle {r.oracle:.6g})") + mark)
    return EXIT_OK if ok else EXIT_CONTRACT


__all__ = ["main", "load_config", "ResultRow", "SUBCOMMANDS", "ConfigError"]

if __name__ == "__main__":
    sys.exit(main())
