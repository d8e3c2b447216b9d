"""Command-line entry point.

Each subcommand writes a CSV table and a JSON summary into ``--out``.  Every
summary echoes the resolved configuration, the seed, the tool version and
digests of the input files, and the echo is also written as a key-value
config file that reproduces the run byte for byte via ``--config``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import channel, fewshot, metrics, robustness, stats, synth
from .core import EmbeddingAgent, SimilarityAgent
from .errors import AlignmentError, InputError, NumericError
from .io import (
    file_digest,
    read_agent_csv,
    read_embedding_csv,
    read_labels_csv,
    reorder_agent,
    write_embedding_csv,
    write_labels_csv,
    write_similarity_csv,
    write_table_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
NOT_ECHOED = {"command", "out", "config"}

DEFAULT_EPSILONS = [round(0.1 * i, 1) for i in range(11)]


class UsageError(InputError):
    pass


# -- argument types --------------------------------------------------------------


def float_list(text):
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def int_list(text):
    try:
        return [int(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def unit_float_list(text):
    values = float_list(text)
    if not values or any(not 0.0 <= v <= 1.0 for v in values):
        raise argparse.ArgumentTypeError(f"expected values in [0, 1], got {text!r}")
    return values


def positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def boolean(text):
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def hyphen_choice(*choices):
    def convert(text):
        v = str(text).strip().replace("_", "-")
        if v not in choices:
            raise argparse.ArgumentTypeError(f"invalid choice {text!r} (choose from {', '.join(choices)})")
        return v

    return convert


# -- parser --------------------------------------------------------------------


# Per-command defaults, applied beneath config-file values and explicit flags.
DEFAULTS = {
    "align": {
        "format": "auto",
        "metric": "euclidean",
        "tie_mode": "auto",
        "kernel": "neg-euclidean",
        "mode": "exact",
        "m": 10000,
        "seed": None,
    },
    "simulate-teaching": {
        "epsilons": DEFAULT_EPSILONS,
        "budget": 200,
        "trials": 100,
        "decoder": "known-epsilon",
        "n": 32,
        "d": 2,
        "particles": 1000,
        "calibration": 50,
        "workers": 1,
    },
    "ushape-fsl": {
        "embedding": None,
        "labels": None,
        "n_per_class": 15,
        "k": 4,
        "d": 2,
        "separation": 6.0,
        "noise_scales": list(synth.DEFAULT_NOISE_SCALES),
        "include_inverted": True,
        "shots": [1, 5],
        "trials": 20,
        "tie_mode": "include",
        "learning_rate": 0.1,
        "epochs": 500,
        "l2_penalty": 1e-4,
    },
    "robustness": {
        "check": "adversarial",
        "epsilons": [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95],
        "n": 20,
        "pool_size": 20,
        "trials": 2000,
        "embedding": None,
        "centroids": None,
        "shifted": None,
        "magnitudes": [round(0.05 * i, 2) for i in range(10)],
        "k": 4,
        "budget": 100,
        "particles": 500,
    },
    "stats": {
        "input": None,
        "x": "alignment",
        "y": "performance",
        "covariate": None,
        "zsq": False,
    },
    "gen": {
        "n_per_class": 15,
        "k": 4,
        "d": 2,
        "separation": 6.0,
        "noise_scales": [],
        "include_inverted": True,
        "include_isometry": True,
    },
}

STOCHASTIC = {"simulate-teaching", "ushape-fsl", "robustness", "gen"}


def _common(p):
    p.add_argument("--out", required=True, help="output directory (created if missing)")
    p.add_argument("--config", help="key = value file; explicit flags override it")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="repalign", description="Representational alignment toolkit.")
    parser.add_argument("--version", action="version", version=f"repalign {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    p = sub.add_parser("align", help="alignment metrics between agent files")
    _common(p)
    p.add_argument("inputs", nargs="*", default=S, help="agent CSVs; join per-dataset files of one agent with '+'")
    p.add_argument("--format", type=hyphen_choice("auto", "embedding", "similarity"), default=S)
    p.add_argument("--metric", type=hyphen_choice("euclidean", "neg-dot", "neg-cosine"), default=S)
    p.add_argument("--tie-mode", type=hyphen_choice("auto", "include", "exclude"), default=S)
    p.add_argument("--kernel", type=hyphen_choice("neg-euclidean", "dot", "cosine"), default=S)
    p.add_argument("--mode", type=hyphen_choice("exact", "sampled"), default=S)
    p.add_argument("--m", type=int, default=S, help="samples in sampled mode")

    p = sub.add_parser("simulate-teaching", help="teacher/student channel U-shape")
    _common(p)
    p.add_argument("--epsilons", type=unit_float_list, default=S)
    p.add_argument("--budget", type=positive_int, default=S)
    p.add_argument("--trials", type=positive_int, default=S)
    p.add_argument("--decoder", type=hyphen_choice("known-epsilon", "calibrated", "naive"), default=S)
    p.add_argument("--n", type=positive_int, default=S)
    p.add_argument("--d", type=positive_int, default=S)
    p.add_argument("--particles", type=positive_int, default=S)
    p.add_argument("--calibration", type=int, default=S)
    p.add_argument("--workers", type=positive_int, default=S)

    p = sub.add_parser("ushape-fsl", help="few-shot accuracy across an alignment sweep")
    _common(p)
    p.add_argument("--embedding", default=S, help="reference embedding CSV (default: synthetic clusters)")
    p.add_argument("--labels", default=S, help="id,label CSV for --embedding")
    p.add_argument("--n-per-class", type=positive_int, default=S)
    p.add_argument("--k", type=positive_int, default=S)
    p.add_argument("--d", type=positive_int, default=S)
    p.add_argument("--separation", type=float, default=S)
    p.add_argument("--noise-scales", type=float_list, default=S)
    p.add_argument("--include-inverted", type=boolean, default=S)
    p.add_argument("--shots", type=int_list, default=S)
    p.add_argument("--trials", type=positive_int, default=S)
    p.add_argument("--tie-mode", type=hyphen_choice("include", "exclude"), default=S)
    p.add_argument("--learning-rate", type=float, default=S)
    p.add_argument("--epochs", type=positive_int, default=S)
    p.add_argument("--l2-penalty", type=float, default=S)

    p = sub.add_parser("robustness", help="adversarial and domain-shift checks")
    _common(p)
    p.add_argument("--check", type=hyphen_choice("adversarial", "domain-shift", "sweep", "flip-order"), default=S)
    p.add_argument("--epsilons", type=unit_float_list, default=S)
    p.add_argument("--n", type=positive_int, default=S)
    p.add_argument("--pool-size", type=positive_int, default=S)
    p.add_argument("--trials", type=positive_int, default=S)
    p.add_argument("--embedding", default=S)
    p.add_argument("--centroids", default=S, help="centroid CSV (embedding format)")
    p.add_argument("--shifted", default=S, help="shifted centroid CSV; default: unchanged")
    p.add_argument("--magnitudes", type=float_list, default=S)
    p.add_argument("--k", type=positive_int, default=S)
    p.add_argument("--budget", type=positive_int, default=S)
    p.add_argument("--particles", type=positive_int, default=S)

    p = sub.add_parser("stats", help="correlations of table columns")
    _common(p)
    p.add_argument("--input", default=S)
    p.add_argument("--x", default=S)
    p.add_argument("--y", default=S)
    p.add_argument("--covariate", default=S)
    p.add_argument("--zsq", type=boolean, default=S, help="apply z^2 to the x column first")

    p = sub.add_parser("gen", help="write synthetic embeddings, labels and agent family")
    _common(p)
    p.add_argument("--n-per-class", type=int, default=S)
    p.add_argument("--k", type=int, default=S)
    p.add_argument("--d", type=int, default=S)
    p.add_argument("--separation", type=float, default=S)
    p.add_argument("--noise-scales", type=float_list, default=S)
    p.add_argument("--include-inverted", type=boolean, default=S)
    p.add_argument("--include-isometry", type=boolean, default=S)
    return parser


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        return action.choices[command]


def read_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    out = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve_config(parser, args) -> dict:
    """Merge defaults, config file and explicit flags (later wins)."""
    command = args.command
    resolved = dict(DEFAULTS[command])
    resolved["seed"] = resolved.get("seed")
    sub = _subparser(parser, command)
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "out", "config")}
    if args.config:
        for key, raw in read_config_file(args.config).items():
            if key not in actions:
                raise UsageError(f"unknown config key {key!r} for {command}")
            action = actions[key]
            if key == "inputs":
                resolved[key] = str_list(raw)
            elif raw.lower() in ("none", ""):
                resolved[key] = None
            else:
                try:
                    resolved[key] = action.type(raw) if action.type else raw
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"config key {key!r}: {exc}") from None
    for key, value in vars(args).items():
        if key not in NOT_ECHOED:
            resolved[key] = value
    stochastic = command in STOCHASTIC and resolved.get("check") != "domain-shift"
    if stochastic or resolved.get("mode") == "sampled":
        if resolved.get("seed") is None:
            raise UsageError(f"{command} requires --seed")
    return resolved


def _config_value_text(v):
    if isinstance(v, (list, tuple)):
        return ", ".join(_config_value_text(x) for x in v)
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def config_text(config: dict) -> str:
    lines = [f"{k} = {_config_value_text(config[k])}" for k in sorted(config)]
    return "\n".join(lines) + "\n"


# -- output helpers -----------------------------------------------------------------


def _to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _to_jsonable(obj.tolist())
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def write_json(path, payload):
    Path(path).write_text(json.dumps(_to_jsonable(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


class Run:
    """Output directory plus the provenance header shared by every summary."""

    def __init__(self, command, out, config, inputs=()):
        self.command = command
        self.out = Path(out)
        self.config = config
        self.inputs = [{"path": str(p), "digest": file_digest(p)} for p in inputs]
        self.out.mkdir(parents=True, exist_ok=True)

    def path(self, name):
        return self.out / name

    def summary(self, body: dict):
        payload = {
            "tool": "repalign",
            "version": __version__,
            "command": self.command,
            "seed": self.config.get("seed"),
            "config": self.config,
            "inputs": self.inputs,
        }
        payload.update(body)
        stem = self.command.replace("-", "_")
        write_json(self.path(f"{stem}.json"), payload)
        self.path(f"{stem}.config").write_text(config_text(self.config), encoding="utf-8")


def _under(text):
    return text.replace("-", "_")


# -- commands ----------------------------------------------------------------------


def _require_file(path, flag):
    if path is None:
        raise UsageError(f"{flag} is required")
    if not Path(path).is_file():
        raise InputError(f"input file not found: {path}")
    return path


def cmd_align(cfg, out):
    groups = [str(g).split("+") for g in cfg.get("inputs") or []]
    if len(groups) < 2:
        raise UsageError("align needs at least two agent files")
    n_sets = {len(g) for g in groups}
    if len(n_sets) != 1:
        raise UsageError("every agent must supply the same number of dataset files")
    paths = [p for g in groups for p in g]
    for p in paths:
        _require_file(p, "input")
    metric = _under(cfg["metric"])
    agents = [[read_agent_csv(p, cfg["format"], metric) for p in g] for g in groups]
    n_datasets = n_sets.pop()
    for ds in range(n_datasets):
        ref_ids = agents[0][ds].stimuli.ids
        for a in range(1, len(agents)):
            ids = agents[a][ds].stimuli.ids
            diff = set(ref_ids) ^ set(ids)
            if diff:
                raise InputError(
                    f"stimulus ids differ between {groups[0][ds]} and {groups[a][ds]}: {sorted(diff)}"
                )
            agents[a][ds] = reorder_agent(agents[a][ds], ref_ids)
    tie_mode = cfg["tie_mode"]
    if tie_mode == "auto":
        human = any(isinstance(ag, SimilarityAgent) for g in agents for ag in g)
        tie_mode = "exclude" if human else "include"
        cfg["tie_mode"] = tie_mode
    run = Run("align", out, cfg, paths)
    kernel = _under(cfg["kernel"])
    pairs, rows = [], []
    for a in range(len(agents)):
        for b in range(a + 1, len(agents)):
            per = [
                metrics.alignment_report(
                    agents[a][ds], agents[b][ds], cfg["mode"], tie_mode, kernel, cfg["m"],
                    None if cfg["seed"] is None else cfg["seed"] + ds,
                )
                for ds in range(n_datasets)
            ]
            mean = metrics.average_reports(per)
            name_a, name_b = "+".join(groups[a]), "+".join(groups[b])
            pairs.append({"agent_a": name_a, "agent_b": name_b, "datasets": [r.to_dict() for r in per], "mean": mean.to_dict()})
            for ds, r in enumerate(per):
                rows.append({"agent_a": name_a, "agent_b": name_b, "dataset": ds, **r.csv_row()})
            rows.append({"agent_a": name_a, "agent_b": name_b, "dataset": "mean", **mean.csv_row()})
    write_table_csv(run.path("align.csv"), ("agent_a", "agent_b", "dataset") + metrics.REPORT_COLUMNS, rows)
    run.summary({"pairs": pairs})


def cmd_simulate(cfg, out):
    run = Run("simulate-teaching", out, cfg)
    res = channel.ushape_curve(
        cfg["epsilons"], cfg["budget"], cfg["trials"], cfg["seed"], _under(cfg["decoder"]),
        cfg["n"], cfg["d"], cfg["particles"], cfg["calibration"], cfg["workers"],
    )
    write_table_csv(run.path("ushape.csv"), channel.USHAPE_COLUMNS, res.rows())
    eps = res.epsilons
    check = {"evaluated": False}
    mid = np.flatnonzero(np.isclose(eps, 0.5))
    if mid.size and eps.min() < 0.5 < eps.max():
        lo_i, hi_i, mid_i = int(np.argmin(eps)), int(np.argmax(eps)), int(mid[0])
        m = res.mean_error
        check = {
            "evaluated": True,
            "error_mid": m[mid_i],
            "error_low_end": m[lo_i],
            "error_high_end": m[hi_i],
            "holds": bool(m[mid_i] > m[lo_i] and m[mid_i] > m[hi_i]),
        }
    run.summary(
        {
            "prior_error": float(res.prior_errors.mean()),
            "prior_error_std_err": float(res.prior_errors.std(ddof=1) / np.sqrt(res.trials)),
            "u_shape": check,
            "symmetry": [{"epsilon": e, "abs_diff": d, "pooled_std_err": s} for e, d, s in channel.symmetry_gaps(res)],
            "table": res.rows(),
        }
    )


def cmd_ushape_fsl(cfg, out):
    inputs = []
    if cfg.get("embedding"):
        _require_file(cfg["embedding"], "--embedding")
        _require_file(cfg.get("labels"), "--labels")
        reference = read_embedding_csv(cfg["embedding"])
        labels = read_labels_csv(cfg["labels"], reference.stimuli.ids)
        inputs = [cfg["embedding"], cfg["labels"]]
    else:
        spec = synth.SynthSpec(cfg["n_per_class"], cfg["k"], cfg["d"], cfg["separation"], cfg["seed"])
        reference, labels = synth.gen_clustered_embedding(spec)
    run = Run("ushape-fsl", out, cfg, inputs)
    probe = fewshot.ProbeConfig(cfg["learning_rate"], cfg["epochs"], cfg["l2_penalty"])
    res = fewshot.ushape_fsl_experiment(
        reference, labels, cfg["noise_scales"], cfg["include_inverted"], cfg["shots"],
        cfg["trials"], cfg["seed"], probe, cfg["tie_mode"],
    )
    write_table_csv(run.path("ushape_fsl.csv"), fewshot.FSL_COLUMNS, res.rows)
    per_shot = {}
    for shot in cfg["shots"]:
        ids, align, acc = res.agent_table(shot)
        low = int(np.argmin(acc))
        entry = {"min_accuracy_agent": ids[low], "min_accuracy_alignment": float(align[low])}
        for metric in ("triplet_alignment", "pearson_alignment", "spearman_alignment"):
            try:
                entry[f"zsq_corr_{metric}"] = res.zsq_correlation(shot, metric)
            except AlignmentError:
                entry[f"zsq_corr_{metric}"] = None
        per_shot[str(shot)] = entry
    run.summary({"shots": per_shot})


def cmd_robustness(cfg, out):
    check = cfg["check"]
    if check == "domain-shift":
        emb_path = _require_file(cfg.get("embedding"), "--embedding")
        cen_path = _require_file(cfg.get("centroids"), "--centroids")
        inputs = [emb_path, cen_path]
        shifted = None
        if cfg.get("shifted"):
            inputs.append(_require_file(cfg["shifted"], "--shifted"))
            shifted = read_embedding_csv(cfg["shifted"]).coords
        run = Run("robustness", out, cfg, inputs)
        agent = EmbeddingAgent(read_embedding_csv(emb_path))
        cents = robustness.CentroidSet(read_embedding_csv(cen_path).coords, shifted)
        value = robustness.domain_shift_sensitivity(agent, cents)
        write_table_csv(run.path("robustness.csv"), ("check", "sensitivity"), [{"check": check, "sensitivity": value}])
        run.summary({"check": check, "sensitivity": value})
        return
    run = Run("robustness", out, cfg)
    if check == "adversarial":
        rows = robustness.adversarial_monotonicity_check(cfg["epsilons"], cfg["n"], cfg["pool_size"], cfg["trials"], cfg["seed"])
        cols = robustness.ADVERSARIAL_COLUMNS
        f = [r["formula_expectation"] for r in rows]
        e = [r["empirical_mean"] for r in rows]
        extra = {
            "formula_strictly_increasing": bool(np.all(np.diff(f) > 0)),
            "empirical_strictly_increasing": bool(np.all(np.diff(e) > 0)),
        }
    elif check == "sweep":
        rows = robustness.perturbation_sweep(cfg["magnitudes"], cfg["n"], cfg["k"], 2, cfg["trials"], cfg["seed"])
        cols = ("magnitude", "mean_sensitivity", "std_err")
        means = [r["mean_sensitivity"] for r in rows]
        extra = {"spearman_magnitude_vs_sensitivity": stats.spearman_r(cfg["magnitudes"], means)}
    else:
        rows = robustness.flip_order_check(cfg["epsilons"], cfg["n"], cfg["k"], cfg["budget"], cfg["trials"], cfg["seed"], cfg["particles"])
        cols = ("epsilon", "mean_flip_fraction", "std_err")
        extra = {}
    write_table_csv(run.path("robustness.csv"), cols, rows)
    run.summary({"check": check, "table": rows, **extra})


def _read_columns(path):
    import csv

    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        cols = {h: [] for h in header}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            for h, v in zip(header, row):
                try:
                    cols[h].append(float(v))
                except ValueError:
                    raise InputError(f"{path}:{lineno}: non-numeric value {v!r}") from None
    return {h: np.array(v) for h, v in cols.items()}


def cmd_stats(cfg, out):
    path = _require_file(cfg.get("input"), "--input")
    cols = _read_columns(path)
    for key in ("x", "y", "covariate"):
        name = cfg.get(key)
        if name is not None and name not in cols:
            raise InputError(f"{path}: no column named {name!r}")
    run = Run("stats", out, cfg, [path])
    x = cols[cfg["x"]]
    if cfg["zsq"]:
        x = stats.z_squared(x)
    y = cols[cfg["y"]]
    results = {"pearson": stats.pearson(x, y), "spearman": stats.spearman(x, y)}
    if cfg.get("covariate"):
        results["partial"] = stats.partial_correlation(x, y, cols[cfg["covariate"]])
    rows = [{"analysis": k, **v.to_dict()} for k, v in results.items()]
    write_table_csv(run.path("stats.csv"), ("analysis", "rho", "n", "ci_low", "ci_high", "p_value"), rows)
    run.summary({k: v.to_dict() for k, v in results.items()})


def cmd_gen(cfg, out):
    run = Run("gen", out, cfg)
    spec = synth.SynthSpec(cfg["n_per_class"], cfg["k"], cfg["d"], cfg["separation"], cfg["seed"])
    emb, labels = synth.gen_clustered_embedding(spec)
    write_embedding_csv(run.path("embedding.csv"), emb)
    write_labels_csv(run.path("labels.csv"), emb.stimuli.ids, labels)
    members = []
    if cfg["noise_scales"] or cfg["include_inverted"] or cfg["include_isometry"]:
        fam = synth.gen_agent_family(
            emb, cfg["noise_scales"] or [0.0], cfg["include_inverted"], cfg["include_isometry"], seed=cfg["seed"]
        )
        if not cfg["noise_scales"]:
            fam = [m for m in fam if m.kind != "noise"]
        for m in fam:
            if m.agent.embedding is not None and m.kind != "inverted":
                name = f"{m.agent_id}.csv"
                write_embedding_csv(run.path(name), m.agent.embedding)
            else:
                name = f"{m.agent_id}_similarity.csv"
                write_similarity_csv(run.path(name), m.agent)
            members.append(
                {
                    "agent_id": m.agent_id,
                    "kind": m.kind,
                    "noise_scale": m.noise_scale,
                    "file": name,
                    "triplet_alignment": m.triplet_alignment,
                    "pearson_alignment": m.pearson_alignment,
                    "spearman_alignment": m.spearman_alignment,
                }
            )
    run.summary({"n": emb.n, "files": ["embedding.csv", "labels.csv"] + [m["file"] for m in members], "members": members})


COMMANDS = {
    "align": cmd_align,
    "simulate-teaching": cmd_simulate,
    "ushape-fsl": cmd_ushape_fsl,
    "robustness": cmd_robustness,
    "stats": cmd_stats,
    "gen": cmd_gen,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(parser, args)
        COMMANDS[args.command](cfg, args.out)
    except UsageError as exc:
        _subparser(parser, args.command).print_usage(sys.stderr)
        print(f"repalign {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"repalign {args.command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AlignmentError as exc:
        print(f"repalign {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
