"""On-disk formats for datasets and trained models.

Both formats are a directory holding a small text manifest plus flat,
row-major, little-endian binary arrays whose shapes live in the manifest.
Floats in manifests are written with ``repr`` so they round-trip exactly.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .datagen.dataset import EXAMPLES, Dataset
from .errors import ConfigInvalid, CorruptManifest, TruncatedArray, VersionMismatch
from .features import RandomLayer
from .geometry import DOMAIN_TYPES, domain_from_params
from .model import (
    ConstantField,
    ConstraintWrapper,
    IntervalCutoff,
    PeriodicEmbedding,
    RannDeepONet,
    SpaceTimeCutoff,
)

DATASET_FORMAT = "rann-dataset"
MODEL_FORMAT = "rann-model"
FORMAT_VERSION = 1

_DTYPES = {"f64": np.dtype("<f8"), "u8": np.dtype("u1")}


def write_array(path, arr, kind="f64"):
    np.ascontiguousarray(arr, dtype=_DTYPES[kind]).tofile(path)


def read_array(path, shape, kind="f64"):
    dtype = _DTYPES[kind]
    expected = int(np.prod(shape)) * dtype.itemsize
    path = Path(path)
    if not path.exists():
        raise TruncatedArray(f"{path.name} is missing")
    size = path.stat().st_size
    if size != expected:
        raise TruncatedArray(f"{path.name} holds {size} bytes, expected {expected}")
    return np.fromfile(path, dtype=dtype).astype(dtype.newbyteorder("=")).reshape(shape)


# ---------------------------------------------------------------- key/value manifests

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return " ".join(_fmt(v) for v in value)
    return str(value)


def write_manifest(path, entries: dict) -> None:
    lines = [f"{k} = {_fmt(v)}" for k, v in entries.items()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise CorruptManifest(f"no manifest at {path}")
    out = {}
    for no, line in enumerate(path.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CorruptManifest(f"{path.name}:{no}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key or key in out:
            raise CorruptManifest(f"{path.name}:{no}: empty or repeated key {key!r}")
        out[key] = value.strip()
    return out


def _need(manifest, key, cast=str):
    if key not in manifest:
        raise CorruptManifest(f"manifest lacks {key!r}")
    try:
        return cast(manifest[key])
    except ValueError as exc:
        raise CorruptManifest(f"bad value for {key!r}: {manifest[key]!r}") from exc


def _check_version(fmt, version, expected_fmt):
    if fmt != expected_fmt:
        raise CorruptManifest(f"not a {expected_fmt} directory (format {fmt!r})")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"format version {version} is not supported (expected {FORMAT_VERSION})")


def _parse_meta_value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


# ---------------------------------------------------------------- datasets

def save_dataset(dataset: Dataset, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    N, m, q, d = dataset.n_realizations, dataset.m, dataset.q, dataset.coord_dim
    entries = {
        "format": DATASET_FORMAT,
        "version": FORMAT_VERSION,
        "example_id": dataset.example_id,
        "N": N, "m": m, "q": q, "coord_dim": d,
        "sensor_dim": dataset.sensors.shape[1],
        "has_solution": int(dataset.has_solution),
    }
    for key in sorted(dataset.meta):
        entries[f"meta.{key}"] = dataset.meta[key]
    if dataset.domains is not None:
        for n, dom in enumerate(dataset.domains):
            entries[f"domain.{n}"] = [dom.type_code, *map(float, dom.params())]
    write_manifest(out / "manifest", entries)
    write_array(out / "sensors.f64", dataset.sensors)
    write_array(out / "inputs.f64", dataset.inputs)
    write_array(out / "colloc_xy.f64", dataset.colloc)
    if dataset.has_solution:
        write_array(out / "colloc_u.f64", dataset.u)
    write_array(out / "mask.u8", dataset.mask, "u8")
    return out


def load_dataset(in_dir) -> Dataset:
    src = Path(in_dir)
    man = read_manifest(src / "manifest")
    _check_version(man.get("format"), _need(man, "version", int), DATASET_FORMAT)
    example = _need(man, "example_id")
    if example not in EXAMPLES:
        raise ConfigInvalid(f"unknown example id {example!r}")
    N, m, q, d = (_need(man, key, int) for key in ("N", "m", "q", "coord_dim"))
    sd = _need(man, "sensor_dim", int)
    sensors = read_array(src / "sensors.f64", (m, sd))
    inputs = read_array(src / "inputs.f64", (N, m))
    colloc = read_array(src / "colloc_xy.f64", (N, q, d))
    u = read_array(src / "colloc_u.f64", (N, q)) if _need(man, "has_solution", int) else None
    mask = read_array(src / "mask.u8", (N, q), "u8")
    meta = {k[5:]: _parse_meta_value(v) for k, v in man.items() if k.startswith("meta.")}
    domains = None
    if any(k.startswith("domain.") for k in man):
        domains = []
        for n in range(N):
            fields = _need(man, f"domain.{n}").split()
            try:
                code, params = int(fields[0]), [float(x) for x in fields[1:]]
                domains.append(domain_from_params(code, params))
            except (ValueError, KeyError, TypeError, IndexError) as exc:
                raise CorruptManifest(f"bad domain entry {n}") from exc
    try:
        return Dataset(example, sensors, inputs, colloc, u, mask, domains, meta)
    except ValueError as exc:
        raise CorruptManifest(str(exc)) from exc


# ---------------------------------------------------------------- models

_FIELDS = {cls.name: cls for cls in (ConstantField, SpaceTimeCutoff, IntervalCutoff)}


def _field_spec(field):
    if field is None:
        return None
    if hasattr(field, "type_code") and field.type_code in DOMAIN_TYPES:
        return {"name": "domain", "params": [field.type_code, *map(float, field.params())]}
    return {"name": field.name, "params": field.params()}


def _field_from_spec(spec):
    if spec is None:
        return None
    if spec["name"] == "domain":
        return domain_from_params(spec["params"][0], spec["params"][1:])
    if spec["name"] not in _FIELDS:
        raise ConfigInvalid(f"unknown field {spec['name']!r}")
    return _FIELDS[spec["name"]](**spec["params"])


def _layer_spec(layer: RandomLayer, prefix: str):
    return {
        "width": layer.width, "in_dim": layer.in_dim, "activation": layer.activation,
        "seed": layer.seed, "meta": dict(layer.meta), "has_anchors": layer.anchors is not None,
        "files": {"W": f"{prefix}_W.f64", "b": f"{prefix}_b.f64", "anchors": f"{prefix}_anchors.f64"},
    }


def save_model(model: RannDeepONet, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    emb = model.embedding
    manifest = {
        "format": MODEL_FORMAT,
        "version": FORMAT_VERSION,
        "m": model.m, "k": model.k, "p": model.p, "coord_dim": model.coord_dim,
        "branch": _layer_spec(model.branch, "branch"),
        "trunk": _layer_spec(model.trunk, "trunk"),
        "constraint": {"kind": model.constraint.kind,
                       "c": _field_spec(model.constraint.c),
                       "g": _field_spec(model.constraint.g)},
        "embedding": None if emb is None else
        {"omega": emb.omega, "harmonics": emb.harmonics, "dims": list(emb.dims)},
        "trained": model.is_trained,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    for prefix, layer in (("branch", model.branch), ("trunk", model.trunk)):
        write_array(out / f"{prefix}_W.f64", layer.weights)
        write_array(out / f"{prefix}_b.f64", layer.biases)
        if layer.anchors is not None:
            write_array(out / f"{prefix}_anchors.f64", layer.anchors)
    if model.is_trained:
        write_array(out / "alpha.f64", model.alpha)
    return out


def _load_layer(src, spec):
    try:
        w, d = int(spec["width"]), int(spec["in_dim"])
        W = read_array(src / spec["files"]["W"], (w, d))
        b = read_array(src / spec["files"]["b"], (w,))
        anchors = read_array(src / spec["files"]["anchors"], (w, d)) if spec["has_anchors"] else None
        return RandomLayer(W, b, spec["activation"], anchors, spec["seed"], spec["meta"])
    except (KeyError, TypeError) as exc:
        raise CorruptManifest(f"bad layer entry: {exc}") from exc


def load_model(in_dir) -> RannDeepONet:
    src = Path(in_dir)
    path = src / "manifest.json"
    if not path.exists():
        raise CorruptManifest(f"no manifest at {path}")
    try:
        man = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CorruptManifest(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(man, dict):
        raise CorruptManifest("manifest must be a JSON object")
    _check_version(man.get("format"), man.get("version"), MODEL_FORMAT)
    try:
        branch = _load_layer(src, man["branch"])
        trunk = _load_layer(src, man["trunk"])
        cons = man["constraint"]
        constraint = ConstraintWrapper(cons["kind"], _field_from_spec(cons["c"]),
                                       _field_from_spec(cons["g"]))
        e = man["embedding"]
        embedding = None if e is None else PeriodicEmbedding(e["omega"], e["harmonics"], tuple(e["dims"]))
        alpha = read_array(src / "alpha.f64", (trunk.width, branch.width)) if man["trained"] else None
        return RannDeepONet(branch, trunk, constraint, embedding, alpha, man["coord_dim"])
    except KeyError as exc:
        raise CorruptManifest(f"manifest lacks {exc}") from exc
