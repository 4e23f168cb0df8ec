"""Command-line interface: ``snembed {generate,fit,detect,evaluate,select,benchmark}``.

Exit codes: 0 success, 2 parse error, 3 numerical divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, io, plotting
from .benchmark import DESK_CONFIG, ETA_RULES, frobenius_error, run_benchmark
from .detection import (
    anomaly_scores,
    community_error,
    default_eta,
    false_discovery_proportion,
    kmeans_embed,
    threshold_anomalies,
)
from .model import EmbeddingState, Intercepts, balance_matrix, latent_matrix
from .optimizer import DivergenceError, FitConfig, fit
from .select import CRITERIA, select_m
from .synthgen import generate

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DIVERGED = 3
EXIT_IO = 4

log = logging.getLogger("snembed")


class Manifest:
    """Records inputs, outputs and settings of one command invocation."""

    def __init__(self, command, out_dir, args):
        self.out_dir = Path(out_dir)
        self.data = {
            "command": command,
            "toolkit_version": __version__,
            "arguments": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
            "inputs": {},
            "outputs": [],
        }
        self.t0 = time.perf_counter()

    def input(self, name, path):
        self.data["inputs"][name] = str(path)

    def output(self, path):
        self.data["outputs"].append(Path(path).name)
        return path

    def set(self, **kw):
        self.data.update(kw)

    def write(self):
        self.data["wall_time_seconds"] = round(time.perf_counter() - self.t0, 3)
        self.data["outputs"] = sorted(set(self.data["outputs"]) | {"manifest.json"})
        io.write_json(self.out_dir / "manifest.json", self.data)


def _load_config(args, default: FitConfig | None = None) -> FitConfig:
    if getattr(args, "config", None):
        cfg = io.read_config(args.config)
    else:
        cfg = default or FitConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_generate(args):
    out = Path(args.out)
    man = Manifest("generate", out, args)
    d = Intercepts(args.d0, args.d1)
    Y, truth = generate(args.example, args.n, args.a_n, seed=args.seed, d_star=d,
                        link=args.link)
    io.write_edges(man.output(out / "edges.tsv"), Y)
    io.write_csv(man.output(out / "truth_labels.csv"), ["node", "label"],
                 enumerate(truth.labels.tolist()))
    io.write_csv(man.output(out / "truth_support.csv"), ["i", "j"],
                 sorted(truth.S_star_support))
    io.write_matrix(man.output(out / "truth_B.csv"), truth.B_star, "b")
    io.write_matrix(man.output(out / "truth_A.csv"), truth.A_star, "a")
    io.write_json(man.output(out / "truth_intercepts.json"),
                  {"d0": d.d0, "d1": d.d1, "link": args.link})
    man.set(seed=args.seed, n_nodes=Y.n)
    man.write()
    return EXIT_OK


def cmd_fit(args):
    out = Path(args.out)
    man = Manifest("fit", out, args)
    Y = io.read_edges(args.edges)
    man.input("edges", Path(args.edges).resolve())
    if args.config:
        man.input("config", Path(args.config).resolve())
    cfg = _load_config(args)
    res = fit(Y, cfg)
    st = res.state
    io.write_matrix(man.output(out / "B_hat.csv"), st.B, "b")
    io.write_matrix(man.output(out / "A_hat.csv"), st.A, "a")
    io.write_json(man.output(out / "intercepts.json"), {
        "d0": st.d.d0, "d1": st.d.d1, "delta": st.d.delta, "c1": st.d.c1, "c2": st.d.c2,
        "link": cfg.link,
    })
    io.write_csv(man.output(out / "objective_trace.csv"), ["iteration", "neg_log_likelihood"],
                 enumerate(res.objective_trace))
    report = st.constraint_report(cfg.C, cfg.kappa, cfg.a_n)
    report.update(iterations=res.iterations, converged=res.converged,
                  neg_log_likelihood=res.objective_trace[-1])
    io.write_json(man.output(out / "constraints.json"), report)
    io.write_config(man.output(out / "config.txt"), cfg)
    plotting.objective_trace(res.objective_trace, man.output(out / "objective_trace.png"))
    man.set(config=cfg.to_dict(), seed=cfg.seed)
    man.write()
    return EXIT_OK


def _load_fit(fit_dir: Path) -> EmbeddingState:
    for name in ("B_hat.csv", "A_hat.csv", "intercepts.json"):
        if not (fit_dir / name).exists():
            raise FileNotFoundError(f"missing fit artifact {fit_dir / name}")
    B = io.read_matrix(fit_dir / "B_hat.csv")
    A = io.read_matrix(fit_dir / "A_hat.csv")
    d = io.read_json(fit_dir / "intercepts.json")
    return EmbeddingState(B, A, Intercepts(d["d0"], d["d1"], d["delta"], d["c1"], d["c2"]))


def _edges_for_fit(args, fit_dir: Path):
    if args.edges:
        return Path(args.edges)
    man = fit_dir / "manifest.json"
    if man.exists():
        path = io.read_json(man).get("inputs", {}).get("edges")
        if path:
            return Path(path)
    return None


def cmd_detect(args):
    fit_dir = Path(args.fit_dir)
    out = Path(args.out)
    man = Manifest("detect", out, args)
    st = _load_fit(fit_dir)
    man.input("fit_dir", fit_dir.resolve())
    edges = _edges_for_fit(args, fit_dir)
    Y = io.read_edges(edges, n=st.n) if edges is not None else None
    if edges is not None:
        man.input("edges", edges)

    assign = kmeans_embed(st.B, args.m, restarts=args.restarts, seed=args.seed or 0)
    labels = assign.labels
    io.write_csv(man.output(out / "labels.csv"), ["node", "label"], enumerate(labels.tolist()))

    S_hat = anomaly_scores(st.A)
    if args.eta is None:
        eta, rule = default_eta(S_hat), "median"
    else:
        eta, rule = float(args.eta), "given"
    report = threshold_anomalies(S_hat, eta)
    io.write_csv(man.output(out / "anomalies.csv"), ["i", "j", "s_hat"], report.pairs())
    io.write_json(man.output(out / "eta.json"), {"eta": eta, "rule": rule,
                                                  "n_flagged": len(report.flagged)})

    order = np.argsort(labels, kind="stable")
    L = balance_matrix(st.B)[np.ix_(order, order)]
    header = ["node", "label"] + [str(int(j)) for j in order]
    io.write_csv(man.output(out / "heatmap_L.csv"), header,
                 ([int(i), int(labels[i]), *row] for i, row in zip(order, L)))
    plotting.heatmap(L, labels[order], man.output(out / "heatmap_L.png"))

    within, cross = [], []
    rows = []
    if Y is not None:
        y = Y.entries
        s_tilde = np.where(np.abs(S_hat) > eta, S_hat, 0.0)
        iu, ju = np.triu_indices(st.n, k=1)
        same = labels[iu] == labels[ju]
        yv = y[iu, ju]
        for mask, group, bucket in ((same & (yv == -1), "within_negative", within),
                                    (~same & (yv == 1), "cross_positive", cross)):
            for i, j in zip(iu[mask], ju[mask]):
                rows.append((group, int(i), int(j), s_tilde[i, j]))
                bucket.append(s_tilde[i, j])
    io.write_csv(man.output(out / "boxplot_s.csv"), ["group", "i", "j", "s_tilde"], rows)
    plotting.anomaly_boxplot(within, cross, man.output(out / "boxplot_s.png"))
    man.set(m=args.m, eta=eta, within_ss=assign.within_ss,
            empty_clusters=assign.empty_clusters)
    man.write()
    return EXIT_OK


def cmd_evaluate(args):
    out = Path(args.out)
    man = Manifest("evaluate", out, args)
    det, truth = Path(args.detect_dir), Path(args.truth_dir)
    _, t_rows = io.read_csv(truth / "truth_labels.csv")
    _, e_rows = io.read_csv(det / "labels.csv")
    t_lab = np.array([int(r[1]) for r in t_rows])
    e_lab = np.array([int(r[1]) for r in e_rows])
    m = int(max(t_lab.max(), e_lab.max()))
    overall, worst = community_error(t_lab, e_lab, m)
    _, s_rows = io.read_csv(truth / "truth_support.csv")
    support = {(int(i), int(j)) for i, j in s_rows}
    _, a_rows = io.read_csv(det / "anomalies.csv")
    flagged = {(int(r[0]), int(r[1])) for r in a_rows}
    metrics = {
        "community_error": overall,
        "worst_case_error": worst,
        "false_discovery_proportion": false_discovery_proportion(flagged, support),
        "n_flagged": len(flagged),
        "n_true_anomalies": len(support),
    }
    if args.fit_dir and (truth / "truth_B.csv").exists():
        st = _load_fit(Path(args.fit_dir))
        Bs = io.read_matrix(truth / "truth_B.csv")
        As = io.read_matrix(truth / "truth_A.csv")
        M_star = latent_matrix(EmbeddingState(Bs, As)).M
        metrics["frobenius_error"] = frobenius_error(latent_matrix(st).M, M_star)
    io.write_json(man.output(out / "metrics.json"), metrics)
    man.write()
    return EXIT_OK


def cmd_select(args):
    if args.m_min < 2 or args.m_min > args.m_max:
        log.error("need 2 <= m-min <= m-max")
        return EXIT_PARSE
    out = Path(args.out)
    man = Manifest("select", out, args)
    Y = io.read_edges(args.edges)
    man.input("edges", Path(args.edges).resolve())
    cfg = _load_config(args)
    res = select_m(Y, range(args.m_min, args.m_max + 1), cfg, keep_fits=False,
                   criterion=args.criterion, restarts=args.restarts, seed=cfg.seed)
    rows = [(c.m, c.score, c.neg_log_likelihood, c.df, _blank(c.block_neg_log_likelihood),
             "failed" if c.failed else "ok") for c in res.candidates]
    io.write_csv(man.output(out / "selection.csv"),
                 ["m", "score", "neg_log_likelihood", "df", "block_neg_log_likelihood",
                  "status"], rows)
    ok = [c for c in res.candidates if not c.failed]
    plotting.selection_curve([c.m for c in ok], [c.score for c in ok], res.chosen_m,
                             man.output(out / "selection.png"))
    io.write_json(man.output(out / "chosen_m.json"),
                  {"chosen_m": res.chosen_m, "criterion": res.criterion})
    man.set(config=cfg.to_dict())
    man.write()
    if res.chosen_m is None:
        log.error("every candidate diverged")
        return EXIT_DIVERGED
    return EXIT_OK


def _blank(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else x


def cmd_benchmark(args):
    out = Path(args.out)
    man = Manifest("benchmark", out, args)
    cfg = _load_config(args, DESK_CONFIG)
    jobs = 1 if args.deterministic else args.jobs

    def progress(row):
        log.info("cell %d rep %d: %s", row["cell"], row["rep"], row.get("status"))

    rows, summary = run_benchmark(args.example, args.n, args.a_n, args.reps, seed=args.seed,
                                  template=cfg, jobs=jobs, eta_rule=args.eta_rule,
                                  restarts=args.restarts, progress=progress)
    cols = ["cell", "rep", "example", "n", "a_n", "data_seed", "status", "community_error",
            "worst_case_error", "fdp", "eta", "n_flagged", "n_true_anomalies",
            "frobenius_error", "iterations", "converged", "neg_log_likelihood"]
    io.write_csv(man.output(out / "replications.csv"), cols,
                 ([_blank(r.get(c)) for c in cols] for r in rows))
    scols = list(summary[0].keys())
    io.write_csv(man.output(out / "summary.csv"), scols,
                 ([_blank(s[c]) for c in scols] for s in summary))

    n_list = list(dict.fromkeys(args.n))
    a_list = list(dict.fromkeys(args.a_n))

    def wide(metric, rates):
        header = ["n"]
        for a in rates:
            header += [f"a_n={a:g}", f"a_n={a:g} se"]
        body = []
        for n in n_list:
            line = [n]
            for a in rates:
                s = next(s for s in summary if s["n"] == n and s["a_n"] == a)
                line += [_blank(s[f"{metric}_mean"]), _blank(s[f"{metric}_se"])]
            body.append(line)
        return header, body

    table = "table1_like.csv" if args.example == 1 else "table2_like.csv"
    io.write_csv(man.output(out / table), *wide("community_error", a_list))
    positive = [a for a in a_list if a > 0]
    if positive:
        io.write_csv(man.output(out / "table3_like.csv"), *wide("fdp", positive))
    plotting.benchmark_panels(summary, man.output(out / "benchmark.png"))
    man.set(config=cfg.to_dict(), seed=args.seed, deterministic=args.deterministic,
            eta_rule=args.eta_rule)
    man.write()
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="snembed",
                                description="Signed network embedding: communities and anomalies")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic network with ground truth")
    g.add_argument("--example", type=int, choices=(1, 2), default=1)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--a-n", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--d0", type=float, default=1.0)
    g.add_argument("--d1", type=float, default=-1.0)
    g.add_argument("--link", choices=("logit", "probit"), default="logit")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit the embedding to an edge list")
    f.add_argument("--edges", required=True)
    f.add_argument("--config")
    f.add_argument("--seed", type=int)
    f.add_argument("--deterministic", action="store_true")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    d = sub.add_parser("detect", help="communities and anomalies from a fit directory")
    d.add_argument("--fit-dir", required=True)
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--eta", type=float)
    d.add_argument("--edges", help="edge list (default: the one recorded by fit)")
    d.add_argument("--restarts", type=int, default=50)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("evaluate", help="score detections against generated truth")
    e.add_argument("--detect-dir", required=True)
    e.add_argument("--truth-dir", required=True)
    e.add_argument("--fit-dir")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("select", help="choose the number of communities by BIC")
    s.add_argument("--edges", required=True)
    s.add_argument("--m-min", type=int, default=2)
    s.add_argument("--m-max", type=int, default=8)
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--criterion", choices=CRITERIA, default="blockmodel")
    s.add_argument("--restarts", type=int, default=50)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_select)

    b = sub.add_parser("benchmark", help="replicate the synthetic experiment grid")
    b.add_argument("--example", type=int, choices=(1, 2), default=1)
    b.add_argument("--n", type=int, nargs="+", default=[200, 500, 1000])
    b.add_argument("--a-n", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3])
    b.add_argument("--reps", type=int, default=50)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--config")
    b.add_argument("--eta-rule", choices=ETA_RULES, default="sparsity")
    b.add_argument("--restarts", type=int, default=50)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--deterministic", action="store_true")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "reps", 1) < 1:
        parser.error("--reps must be at least 1")
    try:
        return args.func(args)
    except io.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (FileNotFoundError, PermissionError, IsADirectoryError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
