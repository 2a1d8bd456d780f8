"""Command-line experiment runner.

Every run writes <root>/<name>/manifest.json (effective config, versions,
wall time, verdicts, outputs) next to its CSV artifacts. The root is --out,
else $INLSLAB_OUT, else ./inlslab_out. `inlslab replay manifest.json`
re-runs a manifest with its stored config.

Exit codes: 0 success, 1 error, 2 inconclusive verdict.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import platform
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from . import corpus
from . import duhamel as du
from . import evolve as ev
from . import exponents as ex
from . import ineq_lab as iq
from . import propagator as pr
from . import spectral as sp

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class ConfigError(ValueError):
    """Schema violation; `path` names the offending field."""

    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = ""

    def to_json(self):
        return asdict(self)


# ------------------------------------------------------------ CSV / manifest

def fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return str(path)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def versions():
    return {"inlslab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def out_root(arg):
    return Path(arg or os.environ.get("INLSLAB_OUT") or "inlslab_out")


# ------------------------------------------------------------ parser

def _add_params(p, s=True, mu=False):
    p.add_argument("--N", type=int, required=True, help="space dimension")
    if s:
        p.add_argument("--s", type=float, required=True, help="Sobolev index")
    p.add_argument("--b", type=float, required=True, help="weight exponent")
    p.add_argument("--alpha", type=float, required=True, help="nonlinearity power")
    if mu:
        p.add_argument("--mu", type=int, default=1, choices=(1, -1), help="+1 focusing, -1 defocusing")


class _Parser(argparse.ArgumentParser):
    # usage errors are errors (exit 1); exit 2 is reserved for Inconclusive
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="inlslab", description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None, help="output root (default $INLSLAB_OUT or ./inlslab_out)")
    ap.add_argument("--name", default=None, help="experiment directory name (default: subcommand)")
    ap.add_argument("--seed", type=int, default=0, help="seed for random test families")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("classify", help="regime of a parameter tuple")
    _add_params(p)
    p.add_argument("--space", choices=("H", "Hdot"), default="H")

    p = sub.add_parser("feasible", help="Strichartz exponent certificate")
    _add_params(p)
    p.add_argument("--mode", choices=("Inhomogeneous", "Homogeneous", "Critical"), default="Inhomogeneous")
    p.add_argument("--eta", type=float, default=ex.DEFAULT_ETA)

    p = sub.add_parser("hfun", help="table of the oscillatory Beta integral H(y; theta, beta)")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--ymin", type=float, default=0.0)
    p.add_argument("--ymax", type=float, default=1e4)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--tol", type=float, default=pr.H_TOL)
    p.add_argument("--continued", action="store_true", help="allow theta in (-1, 0) via continuation")

    p = sub.add_parser("weight-evolve", help="e^{itΔ}|x|^{-lam} on a radial profile")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--lam", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--xmin", type=float, default=0.5)
    p.add_argument("--xmax", type=float, default=2.0)
    p.add_argument("--points", type=int, default=16)
    p.add_argument("--convention", choices=("quarter", "literal"), default="quarter")
    p.add_argument("--grid-eps", type=float, default=None,
                   help="also propagate the eps-regularized weight on a grid (N=1) and compare")

    p = sub.add_parser("duhamel-probe", help="refinement study of the first Picard iterate")
    _add_params(p, mu=True)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--ladder", default=None, help="comma list of M (default: standard ladder)")
    p.add_argument("--L", default=None, help="box half-width, one value or comma list matching --ladder")
    p.add_argument("--eps-rule", type=float, default=0.5, help="eps = factor * h")
    p.add_argument("--tau-nodes", type=int, default=64)
    p.add_argument("--refine", choices=("M", "L", "both"), default=None)
    p.add_argument("--threshold", type=float, default=0.05, help="divergence slope threshold")
    p.add_argument("--split", action="store_true", help="also report III1, III21, III22")

    p = sub.add_parser("evolve", help="split-step run from Gaussian data")
    _add_params(p, mu=True)
    p.add_argument("--M", type=int, default=512)
    p.add_argument("--L", type=float, default=16.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--adapt", action="store_true")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--cap", type=float, default=None, help="blow-up cap as a multiple of the initial H^s norm")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--width", type=float, default=1.0, help="Gaussian rate a in e^{-a|x|^2}")
    p.add_argument("--snapshot-every", type=int, default=100)
    p.add_argument("--max-steps", type=int, default=10 ** 6)

    p = sub.add_parser("ineq", help="ratio sweep of a fractional calculus inequality")
    p.add_argument("--lemma", required=True, choices=("gen_leib_1", "basic_interp", "chain_2", "chain_3",
                                                      "diff_estim"))
    p.add_argument("--M", type=int, default=4096)
    p.add_argument("--L", type=float, default=32.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--p1", type=float, default=4.0)
    p.add_argument("--p2", type=float, default=4.0)
    p.add_argument("--a", type=float, default=0.4, help="weight exponent for basic_interp")
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--sigma", type=float, default=0.9)

    p = sub.add_parser("regress", help="run the curated regression corpus")
    p.add_argument("--corpus", default=None, help="JSON list of entry ids to run (default: all)")
    p.add_argument("--tighten", type=float, default=1.0, help="multiply all tolerances by this factor")
    p.add_argument("--skip-slow", action="store_true", help="skip the 2D and split refinement entries")
    p.add_argument("--list", action="store_true", help="list entry ids and exit")

    p = sub.add_parser("replay", help="re-run a manifest")
    p.add_argument("manifest")
    return ap


SUBCOMMANDS = ("classify", "feasible", "hfun", "weight-evolve", "duhamel-probe", "evolve", "ineq", "regress")


def _schema(parser, sub):
    act = parser._subparsers._group_actions[0].choices[sub]
    return {a.dest: a for a in act._actions if a.dest != "help"}


def config_from_manifest(parser, data) -> ExperimentConfig:
    cfg = data.get("config", data)
    sub = cfg.get("subcommand")
    if sub not in SUBCOMMANDS:
        raise ConfigError("config.subcommand", f"unknown subcommand {sub!r}")
    schema = _schema(parser, sub)
    params = cfg.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("config.params", "must be an object")
    for k, v in params.items():
        if k not in schema:
            raise ConfigError(f"config.params.{k}", "unknown field")
        a = schema[k]
        if a.type is not None and v is not None:
            try:
                v = a.type(v)
            except (TypeError, ValueError):
                raise ConfigError(f"config.params.{k}", f"expected {a.type.__name__}, got {v!r}")
            if a.choices is not None and v not in a.choices:
                raise ConfigError(f"config.params.{k}", f"must be one of {list(a.choices)}")
        params[k] = v
    for k, a in schema.items():
        if a.required and k not in params:
            raise ConfigError(f"config.params.{k}", "required field missing")
        params.setdefault(k, a.default)
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError("config.seed", "must be an integer")
    return ExperimentConfig(sub, params, seed, cfg.get("output_dir", ""))


# ------------------------------------------------------------ runners
# Each returns (verdicts: dict, outputs: list of paths, exit code).

def _params(c, mu=False):
    return ex.ProblemParams(c["N"], c["s"], c["b"], c["alpha"], c["mu"] if mu else 1)


def run_classify(c, d, seed):
    rep = ex.classify(_params(c), space=c["space"])
    rec = rep.record()
    print(f"regime {rep.regime}")
    print(rec, end="")
    (d / "record.txt").write_text(rec, encoding="utf-8")
    rows = [line.split("=", 1) for line in rec.splitlines()]
    return {"regime": rep.regime}, [write_csv(d / "classify.csv", ["key", "value"], rows)], EXIT_OK


def run_feasible(c, d, seed):
    p = _params(c)
    cert = ex.strichartz_feasible(p, mode=c["mode"], eta=c["eta"])
    rec = cert.record()
    print(rec, end="")
    (d / "record.txt").write_text(rec, encoding="utf-8")
    rows = [line.split("=", 1) for line in rec.splitlines()]
    worst = max(abs(v) for v in cert.residuals.values()) if cert.residuals else 0.0
    return ({"feasible": True, "max_residual": worst},
            [write_csv(d / "certificate.csv", ["key", "value"], rows)], EXIT_OK)


def run_hfun(c, d, seed):
    th, be = c["theta"], c["beta"]
    n = c["points"]
    if n < 1:
        raise ConfigError("params.points", "must be >= 1")
    if c["ymin"] < 0 or c["ymax"] < c["ymin"]:
        raise ConfigError("params.ymin", "need 0 <= ymin <= ymax")
    if c["ymin"] > 0:
        ys = np.geomspace(c["ymin"], c["ymax"], n)
    else:
        # y = 0 plus log-spaced points
        ys = np.concatenate([[0.0], np.geomspace(max(c["ymax"] * 1e-4, 1e-3), c["ymax"], n - 1)]) \
            if n > 1 else np.array([0.0])
    fn = pr.h_continued if c["continued"] else pr.h_function
    rows = []
    for y in ys:
        h = fn(float(y), th, be, tol=c["tol"])
        rows.append((y, h.value.real, h.value.imag, h.abs_error_estimate, h.method))
    worst = max(r[3] for r in rows)
    return ({"max_abs_error_estimate": worst},
            [write_csv(d / "hfun.csv", ["y [1]", "Re H [1]", "Im H [1]", "abs_error [1]", "method"], rows)],
            EXIT_OK)


def run_weight_evolve(c, d, seed):
    N, lam, t = c["N"], c["lam"], c["t"]
    xs = np.linspace(c["xmin"], c["xmax"], c["points"])
    vals = [pr.weight_evolution_value(t, float(x), lam, N, convention=c["convention"]) for x in xs]
    header = ["|x| [length]", "Re value [1]", "Im value [1]", "abs_error [1]", "method"]
    rows = [[x, v.value.real, v.value.imag, v.abs_error_estimate, v.method] for x, v in zip(xs, vals)]
    verdicts = {}
    if c["grid_eps"] is not None:
        if N != 1:
            raise ConfigError("params.grid_eps", "grid comparison is available for N = 1 only")
        g, gv = pr.grid_weight_evolution(t, lam, N, c["grid_eps"], x_max=c["xmax"])
        gvp = np.interp(xs, g.x1, gv.real) + 1j * np.interp(xs, g.x1, gv.imag)
        header += ["Re grid [1]", "Im grid [1]", "rel_diff [1]"]
        worst = 0.0
        for r, v, gval in zip(rows, vals, gvp):
            rel = abs(gval - v.value) / abs(v.value)
            worst = max(worst, rel)
            r += [gval.real, gval.imag, rel]
        verdicts["max_rel_diff_grid"] = worst
        verdicts["grid_L"], verdicts["grid_M"] = g.L, g.M
    return verdicts, [write_csv(d / "weight_evolution.csv", header, rows)], EXIT_OK


def _ladder_from(c, p):
    if c["ladder"] is None:
        ladder, refine = du.standard_ladder(p)
        return [(L, M, None) for L, M, _ in ladder], c["refine"] or refine
    try:
        Ms = [int(m) for m in c["ladder"].split(",")]
    except ValueError:
        raise ConfigError("params.ladder", "comma list of integers expected")
    Ls = [float(x) for x in (c["L"] or "16").split(",")]
    if len(Ls) == 1:
        Ls = Ls * len(Ms)
    if len(Ls) != len(Ms):
        raise ConfigError("params.L", "needs one value or one per ladder entry")
    refine = c["refine"] or ("M" if len(set(Ls)) == 1 else "both")
    return list(zip(Ls, Ms, [None] * len(Ms))), refine


def run_duhamel_probe(c, d, seed):
    p = _params(c, mu=True)
    ladder, refine = _ladder_from(c, p)
    try:
        cfg = du.DuhamelConfig(p, c["t"], tau_nodes=c["tau_nodes"], ladder=ladder,
                               eps_factor=c["eps_rule"], refine=refine, slope_threshold=c["threshold"])
    except ValueError as e:
        raise ConfigError("params.ladder", str(e))
    rep = du.refinement_study(cfg, split=c["split"])
    keys = ["L", "M", "eps", "norm", "I", "II", "III", "split_residual"]
    if c["split"]:
        keys += ["III1", "III21", "III22"]
    units = {"L": "length", "M": "points", "eps": "length"}
    header = [f"{k} [{units.get(k, '1')}]" for k in keys]
    rows = [[r[k] for k in keys] for r in rep.rungs]
    out = [write_csv(d / "rungs.csv", header, rows),
           write_csv(d / "shells.csv", ["r_lo [length]", "r_hi [length]", "mass_fraction [1]"], rep.shells)]
    expected = du.expected_verdict(p)
    verdicts = {"verdict": rep.verdict, "expected_from_classify": expected, "label": rep.label,
                "fitted_slope": rep.fitted_slope, "slopes": rep.slopes, "refine": rep.refine,
                "slope_threshold": c["threshold"],
                "max_split_residual": max(r["split_residual"] for r in rep.rungs)}
    print(f"verdict {rep.verdict} (slope {rep.fitted_slope:.4g}, classify expects {expected})")
    return verdicts, out, EXIT_INCONCLUSIVE if rep.verdict == du.INCONCLUSIVE else EXIT_OK


def run_evolve(c, d, seed):
    p = _params(c, mu=True)
    g = sp.Grid(p.N, c["M"], c["L"])
    u0 = sp.gaussian(g, a=c["width"]).scale(c["amplitude"])
    cap = None if c["cap"] is None else c["cap"] * sp.sobolev_norm(u0, p.s)
    ctl = ev.IntegratorControls(c["dt"], adapt=c["adapt"], tol=c["tol"], blowup_norm_cap=cap,
                                snapshot_every=c["snapshot_every"], max_steps=c["max_steps"])
    err = None
    try:
        tr = ev.run(u0, p, c["T"], ctl)
    except ev.StepCollapse as e:
        tr, err = e.traj, str(e)
    fdir = d / "fields"
    fdir.mkdir(exist_ok=True)
    rows = tr.meta["rows"]
    by_t = {r[0]: r for r in rows}
    index = []
    for k, (t, f) in enumerate(zip(tr.times, tr.snapshots)):
        name = f"field_{k:05d}.inls"
        sp.save_field(fdir / name, f)
        r = by_t.get(t, (t, math.nan, math.nan, math.nan, math.nan, math.nan, math.nan))
        index.append((t, r[1], r[2], r[3], r[5], "fields/" + name))
    out = [write_csv(d / "index.csv", ["t [time]", "mass [1]", "energy [1]", "Hs_norm [1]", "dt [time]",
                                       "file"], index),
           write_csv(d / "diagnostics.csv", [f"{k} [{'time' if k in ('t', 'dt') else '1'}]"
                                             for k in ev.ROW_COLUMNS], rows)]
    m0, e0 = rows[0][1], rows[0][2]
    verdicts = {"blowup": tr.meta["blowup"], "reason": tr.meta["reason"] or err or "",
                "t_end": rows[-1][0], "steps": len(rows) - 1,
                "mass_drift": abs(rows[-1][1] - m0) / m0 if m0 else 0.0,
                "energy_drift": abs(rows[-1][2] - e0) / max(abs(e0), 1e-300)}
    code = EXIT_OK
    if tr.meta["blowup"] and p.s > p.s_c:
        try:
            rep = ev.blowup_rate(tr, p)
            verdicts.update(T_star=rep.T_star, rate_infimum=rep.infimum, rate_median=rep.median,
                            fitted_exponent=rep.fitted_exponent)
            out.append(write_csv(d / "blowup_rate.csv", ["t [time]", "rate_quantity [1]"], rep.rate_quantity))
        except ev.NotBlowingUp as e:
            verdicts["blowup_rate"] = f"inconclusive: {e}"
            code = EXIT_INCONCLUSIVE
    print(f"t_end {verdicts['t_end']:.6g}  blowup {verdicts['blowup']}  mass drift "
          f"{verdicts['mass_drift']:.3e}  energy drift {verdicts['energy_drift']:.3e}")
    return verdicts, out, code


def run_ineq(c, d, seed):
    g = sp.Grid(1, c["M"], c["L"])
    fam = iq.standard_family(g, seed=seed)
    lem = c["lemma"]
    if lem == "gen_leib_1":
        kw = dict(s=c["s"], p=c["p"], p1=c["p1"], q1=c["p1"] * c["p"] / (c["p1"] - c["p"]) if c["p1"] > c["p"]
                  else np.inf, p2=c["p2"], q2=c["p2"] * c["p"] / (c["p2"] - c["p"]) if c["p2"] > c["p"] else np.inf)
    elif lem == "basic_interp":
        kw = dict(a=c["a"], s=c["s"], p=c["p"], eta=c["eta"])
    elif lem == "chain_3":
        kw = dict(s=c["s"], alpha=c["alpha"], p=c["p"], p1=c["p1"], p2=c["p2"], sigma=c["sigma"])
    else:
        kw = dict(s=c["s"], alpha=c["alpha"], p=c["p"], p1=c["p1"], p2=c["p2"])
    try:
        rep = iq.family_sweep(lem, fam, **kw)
    except (iq.InequalityDomainError, iq.ExponentMismatch) as e:
        raise ConfigError("params", str(e))
    rows = [(lem, m["name"], m["lam"], m["lhs"], m["rhs"], m["ratio"]) for m in rep.members]
    out = [write_csv(d / "ratios.csv", ["lemma", "member", "dilation [1]", "lhs [1]", "rhs [1]", "ratio [1]"],
                     rows)]
    print(f"{lem}: max ratio {rep.max_ratio:.4g}, dilation spread {rep.ratio_spread:.4g}, "
          f"{len(rep.member_names())} members")
    return ({"max_ratio": rep.max_ratio, "ratio_spread": rep.ratio_spread, "all_finite": rep.all_finite,
             "members": rep.member_names()}, out, EXIT_OK)


def run_regress(c, d, seed):
    ids = None
    if c["corpus"] is not None:
        ids = json.loads(Path(c["corpus"]).read_text(encoding="utf-8"))
        if not isinstance(ids, list):
            raise ConfigError("params.corpus", "must hold a JSON list of entry ids")
    try:
        entries = corpus.select(ids, skip_slow=c["skip_slow"])
    except KeyError as e:
        raise ConfigError("params.corpus", str(e))
    if c["list"]:
        for e in entries:
            print(f"{e.id}  (criterion {e.criterion}{', slow' if e.slow else ''})")
        return {}, [], EXIT_OK
    if not entries:
        warnings.warn("empty regression corpus: nothing checked, vacuous pass")
    rows, failed = [], []
    np.random.seed(seed)
    for e in entries:
        try:
            o = corpus.evaluate(e, c["tighten"])
            val, ok = o.value, o.passed
        except Exception as err:
            val, ok = f"error: {type(err).__name__}: {err}", False
        exp = e.expected if e.check in ("close", "equal", "raises") else ""
        tol = e.tol * c["tighten"] if e.check in ("close", "below") else ""
        rows.append((e.id, e.criterion, e.check, val, exp, tol, ok))
        print(f"{'PASS' if ok else 'FAIL'}  {e.id}  value={fmt(val)}")
        if not ok:
            failed.append(f"{e.id} (criterion {e.criterion})")
    out = [write_csv(d / "regress.csv", ["id", "criterion", "check", "value", "expected", "tolerance", "pass"],
                     rows)]
    print(f"{len(rows) - len(failed)}/{len(rows)} passed")
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
    return ({"passed": len(rows) - len(failed), "total": len(rows), "failed": failed,
             "vacuous": not entries}, out, EXIT_ERROR if failed else EXIT_OK)


RUNNERS = {"classify": run_classify, "feasible": run_feasible, "hfun": run_hfun,
           "weight-evolve": run_weight_evolve, "duhamel-probe": run_duhamel_probe, "evolve": run_evolve,
           "ineq": run_ineq, "regress": run_regress}


def run_experiment(cfg: ExperimentConfig):
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    verdicts, outputs, code = RUNNERS[cfg.subcommand](cfg.params, d, cfg.seed)
    manifest = {"config": cfg.to_json(), "versions": versions(),
                "wall_time_s": time.perf_counter() - t0, "verdicts": verdicts,
                "outputs": [os.path.relpath(o, d) for o in outputs], "exit_code": code}
    (d / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n",
                                     encoding="utf-8")
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.subcommand == "replay":
            data = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
            cfg = config_from_manifest(parser, data)
            if args.out or args.name or not cfg.output_dir:
                cfg.output_dir = str(out_root(args.out) / (args.name or cfg.subcommand))
        else:
            schema = _schema(parser, args.subcommand)
            params = {k: getattr(args, k) for k in schema}
            cfg = ExperimentConfig(args.subcommand, params, args.seed,
                                   str(out_root(args.out) / (args.name or args.subcommand)))
        return run_experiment(cfg)
    except ex.ParameterError as e:
        print(f"error: invalid parameter {e.field}: {e}", file=sys.stderr)
    except ConfigError as e:
        print(f"error: invalid config field {e.path}: {e}", file=sys.stderr)
    except (ex.InfeasibleSystem, pr.DomainError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
