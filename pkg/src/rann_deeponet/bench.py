"""Experiment harness: presets, data generation, training, evaluation and reports.

A run writes a deterministic ``report.txt`` (no wall-clock values), a
``cases.csv`` of per-case errors, ``worst_*.csv`` field dumps of the worst
cases, and a ``timing.json`` sidecar with wall-clock seconds.  Two runs with
the same configuration on the same machine produce byte-identical reports.
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .datagen.dataset import OUTSIDE, Dataset, build_dataset
from .errors import ConfigInvalid
from .features import Hypercube, make_layer
from .geometry import SHAPES
from .io import load_dataset, save_dataset
from .linalg import relative_l2_error
from .model import ConstraintWrapper, PeriodicEmbedding, RannDeepONet, SpaceTimeCutoff
from .train import TrainConfig, TrainReport, poisson_operator, train

log = logging.getLogger(__name__)

EXPERIMENTS = ("dr", "burgers", "darcy", "darcy_pi")
SCALES = ("paper", "desk")

# published mean relative l2 errors, kept as context in reports
PUBLISHED = {("dr", True): 2.80e-3, ("dr", False): 5.40e-3, ("burgers", True): 1.57e-2,
             ("darcy", True): 1.88e-2, ("darcy_pi", True): 2.03e-2}

PRESETS = {
    ("dr", "paper"): dict(m=100, k=120, p=100, r_b=0.003, r_t=8.0, sample_budget=40_000,
                          n_train=10_000, n_test=1000),
    ("dr", "desk"): dict(m=100, k=60, p=50, r_b=0.003, r_t=8.0, sample_budget=10_000,
                         n_train=1000, n_test=100),
    ("burgers", "paper"): dict(m=101, k=200, p=120, r_b=0.5, r_t=2.0, sample_budget=86_432,
                               n_train=1000, n_test=100),
    ("burgers", "desk"): dict(m=101, k=80, p=60, r_b=0.5, r_t=2.0, sample_budget=20_000,
                              n_train=200, n_test=100),
    ("darcy", "paper"): dict(m=200, k=200, p=60, r_b=0.05, r_t=1.0, sample_budget=150_000,
                             n_train=2700, n_test=300),
    ("darcy", "desk"): dict(m=200, k=100, p=40, r_b=0.05, r_t=1.0, sample_budget=40_000,
                            n_train=300, n_test=60),
    ("darcy_pi", "paper"): dict(m=200, k=150, p=60, r_b=0.05, r_t=2.0, sample_budget=120_000,
                                n_train=2700, n_test=300),
    ("darcy_pi", "desk"): dict(m=200, k=100, p=40, r_b=0.05, r_t=2.0, sample_budget=40_000,
                               n_train=300, n_test=60),
}


@dataclass
class ExperimentConfig:
    example_id: str = "dr"
    scale: str = "desk"
    m: int = 100
    k: int = 60
    p: int = 50
    r_b: float = 0.003
    r_t: float = 8.0
    sample_budget: int = 10_000
    n_train: int = 1000
    n_test: int = 100
    hard_constraint: bool = True
    seed: int = 0
    data_seed: int = 1
    test_seed: int = 2
    sample_seed: int = 3
    rel_tol: float = 1e-10
    solver: str = "auto"
    boundary_weight: float = 1.0
    data_dir: str = ""
    out_dir: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.example_id not in EXPERIMENTS:
            raise ConfigInvalid(f"unknown example id {self.example_id!r}")
        if self.scale not in SCALES + ("custom",):
            raise ConfigInvalid(f"unknown scale {self.scale!r}")
        for name in ("m", "k", "p", "sample_budget", "n_train", "n_test"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(f"{name} must be at least 1")
        for name in ("r_b", "r_t", "rel_tol", "boundary_weight"):
            if not getattr(self, name) > 0:
                raise ConfigInvalid(f"{name} must be positive")

    @classmethod
    def preset(cls, example_id: str, scale: str = "desk", **overrides) -> "ExperimentConfig":
        if (example_id, scale) not in PRESETS:
            raise ConfigInvalid(f"no preset for {example_id!r} at scale {scale!r}")
        return cls(example_id=example_id, scale=scale, **{**PRESETS[example_id, scale], **overrides})

    @property
    def physics_informed(self) -> bool:
        return self.example_id == "darcy_pi"

    @property
    def dataset_id(self) -> str:
        return "darcy" if self.example_id == "darcy_pi" else self.example_id

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -------------------------------------------------------- flat key/value text

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {repr(v) if isinstance(v, float) else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        values = {}
        for no, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if not sep:
                raise ConfigInvalid(f"line {no}: expected 'key = value'")
            if key not in types:
                raise ConfigInvalid(f"line {no}: unknown key {key!r}")
            values[key] = _parse_value(key, raw, types[key])
        base = {}
        if "example_id" in values and values.get("scale", "desk") in SCALES:
            base = PRESETS.get((values["example_id"], values.get("scale", "desk")), {})
        return cls(**{**base, **values})

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_text(Path(path).read_text())


def _parse_value(key, raw, typ):
    try:
        if typ == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigInvalid(f"bad value for {key!r}: {raw!r}") from exc


# ---------------------------------------------------------------- pieces

def generate_data(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    """Training set (random points) and test set (evaluation grid), cached in data_dir if set."""
    cache = Path(config.data_dir) if config.data_dir else None
    if cache is not None and (cache / "train" / "manifest").exists():
        return load_dataset(cache / "train"), load_dataset(cache / "test")
    ex = config.dataset_id
    tr = build_dataset(ex, config.n_train, m=config.m, rng_seed=config.data_seed, layout="random")
    te = build_dataset(ex, config.n_test, m=config.m, rng_seed=config.test_seed, layout="grid")
    if cache is not None:
        save_dataset(tr, cache / "train")
        save_dataset(te, cache / "test")
    return tr, te


def trunk_cube(config: ExperimentConfig) -> Hypercube:
    if config.dataset_id == "darcy":
        return Hypercube([0.0, 0.0], [2.0, 2.0])
    if config.example_id == "burgers" and config.hard_constraint:
        return Hypercube([-1.0, -1.0, 0.0], [1.0, 1.0, 1.0])
    return Hypercube([0.0, 0.0], [1.0, 1.0])


def build_model(config: ExperimentConfig, train_data: Dataset) -> RannDeepONet:
    """Seeded model for an experiment; the branch cube bounds the training inputs."""
    branch_seed, trunk_seed = np.random.SeedSequence(config.seed).generate_state(2)
    cube_b = Hypercube.bounding(train_data.inputs)
    cube_t = trunk_cube(config)
    branch = make_layer(train_data.m, config.k, config.r_b, int(branch_seed), cube_b)
    trunk = make_layer(cube_t.dim, config.p, config.r_t, int(trunk_seed), cube_t)
    embedding = None
    constraint = ConstraintWrapper()
    if config.hard_constraint:
        if config.example_id == "dr":
            constraint = ConstraintWrapper("dirichlet", SpaceTimeCutoff())
        elif config.example_id == "burgers":
            embedding = PeriodicEmbedding()
        else:
            # the cutoff is each input's own domain, supplied per realization
            constraint = ConstraintWrapper("dirichlet")
    return RannDeepONet(branch, trunk, constraint, embedding, coord_dim=2)


def train_config(config: ExperimentConfig) -> TrainConfig:
    return TrainConfig(sample_budget=config.sample_budget, boundary_weight=config.boundary_weight,
                       rel_tol=config.rel_tol, rng_seed=config.sample_seed,
                       mode="physics_informed" if config.physics_informed else "data_driven",
                       solver=config.solver)


def evaluate(model: RannDeepONet, test: Dataset):
    """Per-case relative l2 errors over points inside the domain, plus predictions."""
    errors, preds = np.empty(test.n_realizations), []
    for n in range(test.n_realizations):
        keep = test.mask[n] != OUTSIDE
        pts = test.colloc[n, keep]
        pred = model.evaluate_batch(test.inputs[n], pts, c_field=test.cutoff(n))
        errors[n] = relative_l2_error(pred, test.u[n, keep])
        preds.append(pred)
    return errors, preds


def shape_of(test: Dataset, n: int) -> str:
    return SHAPES[test.domains[n].type_code] if test.domains is not None else "all"


@dataclass
class BenchReport:
    config: ExperimentConfig
    mean_rel_l2: float
    worst_rel_l2: float
    case_errors: np.ndarray
    per_shape: dict
    train: TrainReport
    timing: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)
    model: RannDeepONet | None = field(default=None, repr=False, compare=False)

    def to_text(self) -> str:
        """Structured text without wall-clock values (those go to the timing sidecar)."""
        c = self.config
        lines = ["# rann-deeponet benchmark report", "[experiment]"]
        for f in dataclasses.fields(c):
            if f.name not in ("data_dir", "out_dir"):
                lines.append(f"{f.name} = {getattr(c, f.name)}")
        lines += ["[result]",
                  f"mean_rel_l2 = {self.mean_rel_l2!r}",
                  f"worst_rel_l2 = {self.worst_rel_l2!r}",
                  f"n_cases = {self.case_errors.size}"]
        ref = PUBLISHED.get((c.example_id, c.hard_constraint))
        if ref is not None:
            lines.append(f"published_mean_rel_l2 = {ref!r}")
        for shape, (mean, worst) in self.per_shape.items():
            lines.append(f"shape.{shape}.mean_rel_l2 = {mean!r}")
            lines.append(f"shape.{shape}.worst_rel_l2 = {worst!r}")
        lines += ["[solve]",
                  f"rows_used = {self.train.rows_used}",
                  f"unknowns = {self.train.n_cols}",
                  f"effective_rank = {self.train.effective_rank}",
                  f"residual_norm = {self.train.residual_norm!r}",
                  f"solver = {self.train.solver}",
                  "[environment]"]
        lines += [f"{k} = {v}" for k, v in self.environment.items()]
        return "\n".join(lines) + "\n"


def environment_info() -> dict:
    import os
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "machine": platform.machine(), "cpus": os.cpu_count()}


def _write_outputs(report: BenchReport, test: Dataset, preds, out: Path):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.txt").write_text(report.to_text())
    (out / "timing.json").write_text(json.dumps(report.timing, indent=2, sort_keys=True) + "\n")
    with open(out / "cases.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", "shape", "rel_l2"])
        for n, e in enumerate(report.case_errors):
            w.writerow([n, shape_of(test, n), repr(float(e))])
    worst = {}
    for n, e in enumerate(report.case_errors):
        s = shape_of(test, n)
        if s not in worst or e > report.case_errors[worst[s]]:
            worst[s] = n
    for s, n in worst.items():
        keep = test.mask[n] != OUTSIDE
        pts, ref = test.colloc[n, keep], test.u[n, keep]
        with open(out / f"worst_{s}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y0", "y1", "reference", "prediction", "abs_error"])
            for y, r, q in zip(pts, ref, preds[n]):
                w.writerow([repr(float(y[0])), repr(float(y[1])), repr(float(r)), repr(float(q)),
                            repr(float(abs(q - r)))])


def run_experiment(config: ExperimentConfig, data=None) -> BenchReport:
    """Generate (or reuse) data, build and train the model once, evaluate on the test grid."""
    t0 = time.perf_counter()
    tr, te = data if data is not None else generate_data(config)
    t_data = time.perf_counter() - t0
    model = build_model(config, tr)
    pde = None
    if config.physics_informed:
        tr = tr.without_solution()
        pde = poisson_operator(2, 1.0, 1.0)
    rep = train(model, tr, train_config(config), pde)
    t1 = time.perf_counter()
    errors, preds = evaluate(model, te)
    t_eval = time.perf_counter() - t1
    per_shape = {}
    if te.domains is not None:
        shapes = np.array([shape_of(te, n) for n in range(te.n_realizations)])
        for s in SHAPES:
            e = errors[shapes == s]
            if e.size:
                per_shape[s] = (float(e.mean()), float(e.max()))
    timing = {"data_seconds": t_data, "train_seconds": rep.train_seconds,
              "solve_seconds": rep.solve_seconds, "eval_seconds": t_eval,
              "total_seconds": time.perf_counter() - t0}
    report = BenchReport(config, float(errors.mean()), float(errors.max()), errors, per_shape, rep,
                         timing, environment_info(), model)
    log.info("%s/%s: mean rel l2 %.3e (worst %.3e), %.1fs", config.example_id, config.scale,
             report.mean_rel_l2, report.worst_rel_l2, timing["total_seconds"])
    if config.out_dir:
        _write_outputs(report, te, preds, Path(config.out_dir))
    return report


def neuron_sweep(config: ExperimentConfig, axis: str, values, out_csv=None) -> list[dict]:
    """Repeat an experiment over widths on one axis ("k" or "p"), reusing one dataset."""
    if axis not in ("k", "p"):
        raise ConfigInvalid(f"sweep axis must be 'k' or 'p', got {axis!r}")
    values = [int(v) for v in values]
    if values != sorted(values):
        raise ConfigInvalid("sweep values must be ascending")
    data = generate_data(config)
    rows = []
    for v in values:
        rep = run_experiment(config.replace(**{axis: v, "out_dir": ""}), data)
        rows.append({"axis": axis, "value": v, "mean_rel_l2": rep.mean_rel_l2,
                     "worst_rel_l2": rep.worst_rel_l2, "train_seconds": rep.train.train_seconds})
    if out_csv:
        Path(out_csv).parent.mkdir(parents=True, exist_ok=True)
        with open(out_csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return rows
