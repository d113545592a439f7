"""Operator surface: generate, train, infer, evaluate, oracle-check, bench.

All output artifacts are deterministic functions of inputs and seeds:
floats are serialized in shortest round-trip decimal form, JSON keys are
sorted, and no artifact embeds a timestamp. Exit codes: 0 success, 1
runtime failure, 2 usage or validation problem.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import binref, data, kde, langevin, metrics, model_io
from .errors import (
    DatasetFormatError,
    DegenerateDatasetError,
    InvalidInputError,
    ModelFormatError,
    OutOfBoundsError,
    SamplingFailureError,
    TrainingDivergenceError,
    UndefinedMetricError,
    UnpreparedModelError,
    UnsupportedVersionError,
)
from .inference import infer
from .langevin import LangevinConfig
from .model import CdrmModel, TrainConfig, train
from .nnet import MlpNetwork

# Stream tags separating the weight-init and density-fit RNG streams from
# the training streams derived from the same user seed.
_INIT_STREAM_TAG = 0xA11
_KDE_STREAM_TAG = 0xDE

_USAGE_ERRORS = (
    InvalidInputError,
    DatasetFormatError,
    ModelFormatError,
    UnsupportedVersionError,
    OutOfBoundsError,
    UndefinedMetricError,
)
_RUNTIME_ERRORS = (
    TrainingDivergenceError,
    SamplingFailureError,
    UnpreparedModelError,
    DegenerateDatasetError,
)

_DEFAULTS: dict[str, dict] = {
    "gen toy": {
        "out": None,
        "n_per_region": 200,
        "sigma_eta": 0.2,
        "multimodal": False,
        "seed": 0,
    },
    "gen room": {
        "out": None,
        "steps": None,
        "walk_step": 0.12,
        "noisy_region": "0,0,0.3,0.3",
        "hidden_region": "0.7,0.7,1,1",
        "noise_mean": 1.0,
        "noise_std": 0.5,
        "seed": 0,
    },
    "train": {
        "data": None,
        "out": None,
        "loss_out": None,
        "epochs": 100,
        "hidden": "64,128,64",
        "positive_batch": 32,
        "negative_batch": 32,
        "langevin_steps": 10,
        "langevin_step_size": 0.1,
        "langevin_noise": 0.01,
        "learning_rate": 0.01,
        "stability_eps": 1e-6,
        "bandwidth": "median",
        "seed": 0,
    },
    "infer": {
        "model": None,
        "query": None,
        "alpha": 0.5,
        "samples": 512,
        "steps": 50,
        "step_size": 0.1,
        "noise": 0.01,
        "dedup_tol": None,
        "seed": 0,
    },
    "eval": {
        "model": None,
        "out": None,
        "probes_out": None,
        "grid": 40,
        "alpha": 0.5,
        "samples": 512,
        "steps": 50,
        "step_size": 0.1,
        "noise": 0.01,
        "noisy_region": "0,0,0.3,0.3",
        "hidden_region": "0.7,0.7,1,1",
        "noise_mean": 1.0,
        "noise_std": 0.5,
        "oracle_stub": False,
        "seed": 0,
    },
    "oracle": {
        "model": None,
        "data": None,
        "bins": 100,
        "grid_probes": 50,
        "alpha": 0.5,
        "samples": 512,
        "steps": 50,
        "step_size": 0.1,
        "noise": 0.01,
        "out": None,
        "seed": 0,
    },
    "bench": {
        "out": None,
        "b_values": "16,128,1024",
        "l_values": "5,20,80",
        "reps": 5,
        "bin_queries": 200,
        "samples": 128,
        "dataset_size": 1000,
        "seed": 0,
    },
}


@dataclass
class RunConfig:
    """Merged knob set for one command invocation.

    Precedence: built-in defaults, then config-file values, then explicit
    flags. Unknown config-file keys are rejected before any work starts.
    """

    command: str
    values: dict

    @classmethod
    def resolve(cls, command: str, cli_values: dict, config_path: str | None) -> "RunConfig":
        defaults = _DEFAULTS[command]
        merged = dict(defaults)
        if config_path is not None:
            try:
                with open(config_path) as fh:
                    file_values = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInputError(f"config file is not valid JSON: {exc}") from None
            if not isinstance(file_values, dict):
                raise InvalidInputError("config file must hold a JSON object")
            unknown = set(file_values) - set(defaults)
            if unknown:
                raise InvalidInputError(
                    f"unknown config keys for '{command}': {sorted(unknown)}"
                )
            merged.update(file_values)
        merged.update(cli_values)
        return cls(command=command, values=merged)

    def __getattr__(self, name):
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def require(self, *names):
        for name in names:
            if self.values.get(name) is None:
                flag = "--" + name.replace("_", "-")
                raise InvalidInputError(f"{flag} is required for '{self.command}'")


def _fmt(v) -> str:
    """Shortest round-trip decimal for floats; plain str otherwise."""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _floats(text, expected: int | None = None) -> np.ndarray:
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        try:
            vals = [float(v) for v in str(text).split(",") if v != ""]
        except ValueError as exc:
            raise InvalidInputError(f"bad number list {text!r}: {exc}") from None
    if expected is not None and len(vals) != expected:
        raise InvalidInputError(f"expected {expected} values, got {len(vals)} in {text!r}")
    return np.array(vals, dtype=np.float64)


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    try:
        return [int(v) for v in str(text).split(",") if v != ""]
    except ValueError as exc:
        raise InvalidInputError(f"bad integer list {text!r}: {exc}") from None


def _rect(text) -> data.Rect:
    x0, y0, x1, y1 = _floats(text, expected=4)
    return data.Rect(x0, y0, x1, y1)


def _layout(cfg: RunConfig) -> data.RoomLayout:
    return data.RoomLayout(
        noisy_region=_rect(cfg.noisy_region),
        hidden_region=_rect(cfg.hidden_region),
        noise_mean=float(cfg.noise_mean),
        noise_std=float(cfg.noise_std),
    )


def _inference_config(cfg: RunConfig, model: CdrmModel) -> LangevinConfig:
    free = model.next_state_dims
    return LangevinConfig(
        n_samples=int(cfg.samples),
        steps=int(cfg.steps),
        step_size=float(cfg.step_size),
        noise_scale=float(cfg.noise),
        direction="ascent",
        free_dims=free,
        bounds=model.input_bounds[free],
    )


def cmd_gen(cfg: RunConfig) -> int:
    cfg.require("out")
    if cfg.command == "gen toy":
        dataset = data.gen_toy(
            n_per_region=int(cfg.n_per_region),
            sigma_eta=float(cfg.sigma_eta),
            multimodal=bool(cfg.multimodal),
            seed=int(cfg.seed),
        )
        meta = {
            "command": "gen toy",
            "n_per_region": int(cfg.n_per_region),
            "sigma_eta": float(cfg.sigma_eta),
            "multimodal": bool(cfg.multimodal),
            "seed": int(cfg.seed),
        }
    else:
        cfg.require("steps")
        layout = _layout(cfg)
        dataset = data.gen_room(
            n_steps=int(cfg.steps),
            layout=layout,
            seed=int(cfg.seed),
            walk_step=float(cfg.walk_step),
        )
        meta = {
            "command": "gen room",
            "steps": int(cfg.steps),
            "walk_step": float(cfg.walk_step),
            "noisy_region": str(cfg.noisy_region),
            "hidden_region": str(cfg.hidden_region),
            "noise_mean": float(cfg.noise_mean),
            "noise_std": float(cfg.noise_std),
            "seed": int(cfg.seed),
        }
    data.save_csv(dataset, cfg.out)
    _write_json(str(cfg.out) + ".meta.json", meta)
    print(f"wrote {len(dataset)} tuples to {cfg.out}")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    cfg.require("data", "out")
    dataset = data.load_csv(cfg.data)
    if len(dataset) == 0:
        raise InvalidInputError("cannot train on an empty dataset")
    hidden = _ints(cfg.hidden)
    train_cfg = TrainConfig(
        epochs=int(cfg.epochs),
        positive_batch=int(cfg.positive_batch),
        negative_batch=int(cfg.negative_batch),
        langevin_steps=int(cfg.langevin_steps),
        langevin_step_size=float(cfg.langevin_step_size),
        langevin_noise=float(cfg.langevin_noise),
        learning_rate=float(cfg.learning_rate),
        stability_eps=float(cfg.stability_eps),
        seed=int(cfg.seed),
    )
    bandwidth = cfg.bandwidth
    if bandwidth != "median":
        bandwidth = float(bandwidth)

    d_total = sum(dataset.dims)
    net = MlpNetwork.initialize(
        [d_total] + hidden + [1],
        seed=langevin.derive_seed(train_cfg.seed, _INIT_STREAM_TAG),
    )
    model = CdrmModel(net=net, input_bounds=dataset.bounds, dims=dataset.dims)
    model, losses = train(model, dataset, train_cfg)
    stats = kde.fit(
        dataset.inputs,
        bandwidth_rule=bandwidth,
        seed=langevin.derive_seed(train_cfg.seed, _KDE_STREAM_TAG),
    )
    model = replace(
        model,
        kde_stats=stats,
        provenance=model_io.provenance_for(train_cfg),
    )
    model_io.save_model(cfg.out, model)
    loss_out = cfg.loss_out or str(cfg.out) + ".loss.csv"
    _write_csv(loss_out, ["epoch", "loss"], [[i, v] for i, v in enumerate(losses)])
    print(f"trained {train_cfg.epochs} epochs; model at {cfg.out}, loss trace at {loss_out}")
    return 0


def cmd_infer(cfg: RunConfig) -> int:
    cfg.require("model", "query")
    model = model_io.load_model(cfg.model)
    d_s, d_a, _ = model.dims
    query = _floats(cfg.query, expected=d_s + d_a)
    s, a = query[:d_s], query[d_s:]
    tol = None if cfg.dedup_tol is None else np.atleast_1d(float(cfg.dedup_tol))
    result = infer(
        model,
        s,
        a,
        cfg=_inference_config(cfg, model),
        alpha=float(cfg.alpha),
        dedup_tol=tol,
        seed=int(cfg.seed),
    )
    out = {
        "prediction": None if result.prediction is None else list(result.prediction),
        "eu": result.eu,
        "au": result.au,
        "valid_count": result.valid_count,
    }
    print(json.dumps(out, sort_keys=True))
    return 0


def _stub_evaluation(layout: data.RoomLayout, resolution: int) -> metrics.RoomEvaluation:
    """Testing hook: scores every probe by its true label."""
    records = []
    for probe in metrics.probe_grid(resolution):
        label = data.label_probe(layout, probe)
        records.append(
            metrics.ProbeRecord(
                x=float(probe[0]),
                y=float(probe[1]),
                label=label.value,
                au_score=float(label is data.RegionLabel.AU_POSITIVE),
                eu_score=float(label is data.RegionLabel.EU_POSITIVE),
                valid_count=0,
            )
        )
    au = [
        metrics.ScoredProbe(np.array([r.x, r.y]), r.au_score, int(r.au_score == 1.0))
        for r in records
    ]
    eu = [
        metrics.ScoredProbe(np.array([r.x, r.y]), r.eu_score, int(r.eu_score == 1.0))
        for r in records
    ]
    return metrics.RoomEvaluation(
        au_auroc=metrics.auroc(au),
        au_auprc=metrics.auprc(au),
        eu_auroc=metrics.auroc(eu),
        eu_auprc=metrics.auprc(eu),
        probes=records,
    )


def cmd_eval(cfg: RunConfig) -> int:
    cfg.require("model", "out")
    layout = _layout(cfg)
    resolution = int(cfg.grid)
    if cfg.oracle_stub:
        evaluation = _stub_evaluation(layout, resolution)
    else:
        model = model_io.load_model(cfg.model)
        evaluation = metrics.evaluate_room(
            model,
            layout=layout,
            grid_resolution=resolution,
            langevin_cfg=_inference_config(cfg, model),
            alpha=float(cfg.alpha),
            seed=int(cfg.seed),
        )
    row = evaluation.row()
    _write_csv(
        cfg.out,
        ["au_auroc", "au_auprc", "eu_auroc", "eu_auprc"],
        [[row["au_auroc"], row["au_auprc"], row["eu_auroc"], row["eu_auprc"]]],
    )
    probes_out = cfg.probes_out or str(cfg.out) + ".probes.csv"
    _write_csv(
        probes_out,
        ["x", "y", "label", "au_score", "eu_score", "valid_count"],
        [[r.x, r.y, r.label, r.au_score, r.eu_score, r.valid_count] for r in evaluation.probes],
    )
    print(json.dumps(row, sort_keys=True))
    return 0


def cmd_oracle(cfg: RunConfig) -> int:
    cfg.require("model", "data")
    model = model_io.load_model(cfg.model)
    dataset = data.load_csv(cfg.data)
    d_s, d_a, _ = model.dims
    if (d_s, d_a) != (1, 0):
        raise InvalidInputError("oracle agreement suite expects a 1-D stateless dataset")
    grid = binref.build(dataset, int(cfg.bins))
    lo, hi = model.input_bounds[0]
    probes = np.linspace(lo, hi, int(cfg.grid_probes))
    chain_cfg = _inference_config(cfg, model)
    rows = []
    agreements = 0
    for i, x in enumerate(probes):
        result = infer(
            model,
            np.array([x]),
            np.empty(0),
            cfg=chain_cfg,
            alpha=float(cfg.alpha),
            seed=langevin.derive_seed(int(cfg.seed), i),
        )
        centers = binref.query(grid, np.array([x]), np.empty(0))
        cdrm_empty = result.valid_count == 0
        bin_empty = len(centers) == 0
        agree = cdrm_empty == bin_empty
        agreements += agree
        rows.append([float(x), int(not cdrm_empty), int(not bin_empty), int(agree)])
    rate = agreements / len(probes)
    if cfg.out:
        _write_csv(cfg.out, ["x", "cdrm_nonempty", "bin_nonempty", "agree"], rows)
    print(
        json.dumps(
            {"probes": len(probes), "agreements": agreements, "agreement_rate": rate},
            sort_keys=True,
        )
    )
    return 0


def cmd_bench(cfg: RunConfig) -> int:
    cfg.require("out")
    b_values = _ints(cfg.b_values)
    l_values = _ints(cfg.l_values)
    reps = int(cfg.reps)
    n_queries = int(cfg.bin_queries)
    rng = np.random.default_rng(int(cfg.seed))
    n = int(cfg.dataset_size)
    tuples = rng.uniform(0.0, 1.0, size=(n, 2))
    dataset = data.TransitionDataset(
        tuples, dims=(1, 0, 1), bounds=np.array([[0.0, 1.0], [0.0, 1.0]])
    )
    net = MlpNetwork.initialize([2, 32, 32, 1], seed=int(cfg.seed))
    model = CdrmModel(net=net, input_bounds=dataset.bounds, dims=dataset.dims)
    model = replace(model, kde_stats=kde.fit(dataset.inputs, seed=int(cfg.seed)))

    # The bin timing probes one heavily-observed input cell: with every
    # observation in a single state column, raising b splits the same
    # points across more next-state cells, so the per-query scan and
    # aggregation cost tracks the resolution instead of the (shrinking)
    # per-cell occupancy of a spread-out dataset.
    bin_tuples = np.column_stack([np.full(n, 0.5), rng.uniform(0.0, 1.0, n)])
    bin_dataset = data.TransitionDataset(
        bin_tuples, dims=(1, 0, 1), bounds=np.array([[0.0, 1.0], [0.0, 1.0]])
    )
    query = np.array([0.5])

    bin_ns = {}
    for b in b_values:
        grid = binref.build(bin_dataset, b)
        samples = []
        for _ in range(reps):
            t0 = time.perf_counter_ns()
            for _ in range(n_queries):
                binref.bin_infer(grid, query, np.empty(0))
            samples.append((time.perf_counter_ns() - t0) / n_queries)
        bin_ns[b] = statistics.median(samples)

    cdrm_ns = {}
    for L in l_values:
        chain_cfg = LangevinConfig(
            n_samples=int(cfg.samples),
            steps=L,
            step_size=0.1,
            noise_scale=0.01,
            direction="ascent",
            free_dims=model.next_state_dims,
            bounds=model.input_bounds[model.next_state_dims],
        )
        samples = []
        for rep in range(reps):
            t0 = time.perf_counter_ns()
            infer(model, np.array([0.5]), np.empty(0), cfg=chain_cfg, seed=rep)
            samples.append(time.perf_counter_ns() - t0)
        cdrm_ns[L] = statistics.median(samples)

    rows = []
    for b in b_values:
        for L in l_values:
            report = binref.memory_report(1, 0, b, d_next=1)
            rows.append(
                [
                    b,
                    1,
                    0,
                    L,
                    model.net.n_params,
                    cdrm_ns[L],
                    bin_ns[b],
                    report.joint_cells,
                    report.cubic_scaling_cells,
                ]
            )
    _write_csv(
        cfg.out,
        ["b", "d_s", "d_a", "L", "W", "cdrm_ns", "bin_ns", "joint_cells", "cubic_scaling_cells"],
        rows,
    )
    print(f"wrote {len(rows)} bench rows to {cfg.out}")
    return 0


def _add_common(sub: argparse.ArgumentParser, keys: dict) -> None:
    for key, default in keys.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(default, bool):
            sub.add_argument(flag, dest=key, action="store_true", default=argparse.SUPPRESS)
        else:
            sub.add_argument(flag, dest=key, default=argparse.SUPPRESS)
    sub.add_argument("--config", dest="config", default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdrm",
        description="Score-field transition model: train, infer, and compare against a bin grid.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a benchmark dataset")
    gen_sub = gen.add_subparsers(dest="generator", required=True)
    _add_common(gen_sub.add_parser("toy", help="sine-curve regression set"), _DEFAULTS["gen toy"])
    _add_common(gen_sub.add_parser("room", help="room-exploration walk"), _DEFAULTS["gen room"])

    for name, help_text in [
        ("train", "train a model on a dataset file"),
        ("infer", "predict next state and uncertainties for one query"),
        ("eval", "room-grid evaluation of AU/EU classifiers"),
        ("oracle", "agreement suite against the bin-grid reference"),
        ("bench", "wall-time benchmark of bin query vs sampled inference"),
    ]:
        _add_common(commands.add_parser(name, help=help_text), _DEFAULTS[name])
    return parser


_HANDLERS = {
    "gen toy": cmd_gen,
    "gen room": cmd_gen,
    "train": cmd_train,
    "infer": cmd_infer,
    "eval": cmd_eval,
    "oracle": cmd_oracle,
    "bench": cmd_bench,
}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    if command == "gen":
        command = f"gen {args.generator}"
    cli_values = {
        k: v for k, v in vars(args).items() if k not in ("command", "generator", "config")
    }
    try:
        cfg = RunConfig.resolve(command, cli_values, getattr(args, "config", None))
        return _HANDLERS[command](cfg)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"usage: run 'cdrm {command.split()[0]} --help' for flags", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError) as exc:
        # unparseable flag values (int("x"), float("1.2.3")) land here
        print(f"error: {exc}", file=sys.stderr)
        print(f"usage: run 'cdrm {command.split()[0]} --help' for flags", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    return run(argv)
