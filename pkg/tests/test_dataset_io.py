import filecmp
import json
import os

import numpy as np
import pytest

from rann_deeponet.datagen.dataset import (
    BOUNDARY,
    INITIAL,
    INTERIOR,
    OUTSIDE,
    Dataset,
    build_dataset,
)
from rann_deeponet.errors import ConfigInvalid, CorruptManifest, TruncatedArray, VersionMismatch
from rann_deeponet.features import Hypercube, make_layer
from rann_deeponet.geometry import SHAPES
from rann_deeponet.io import load_dataset, load_model, save_dataset, save_model
from rann_deeponet.model import ConstraintWrapper, PeriodicEmbedding, RannDeepONet, SpaceTimeCutoff


@pytest.fixture(scope="module")
def small_sets():
    return {ex: build_dataset(ex, 3, rng_seed=4) for ex in ("dr", "burgers", "darcy")}


def same_dirs(a, b):
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    return all(filecmp.cmp(os.path.join(a, n), os.path.join(b, n), shallow=False) for n in names)


@pytest.mark.parametrize("ex", ["dr", "burgers", "darcy"])
def test_round_trip_bit_exact(small_sets, tmp_path, ex):
    ds = small_sets[ex]
    save_dataset(ds, tmp_path / "a")
    back = load_dataset(tmp_path / "a")
    for name in ("sensors", "inputs", "colloc", "u", "mask"):
        assert np.array_equal(getattr(ds, name), getattr(back, name))
    assert back.meta == ds.meta
    save_dataset(back, tmp_path / "b")
    assert same_dirs(tmp_path / "a", tmp_path / "b")


def test_same_seed_same_bytes(tmp_path):
    save_dataset(build_dataset("dr", 2, rng_seed=9), tmp_path / "a")
    save_dataset(build_dataset("dr", 2, rng_seed=9), tmp_path / "b")
    assert same_dirs(tmp_path / "a", tmp_path / "b")


def test_layouts(small_sets):
    dr = small_sets["dr"]
    assert dr.inputs.shape == (3, 100) and dr.colloc.shape == (3, 100, 2)
    assert np.all((dr.colloc >= 0) & (dr.colloc <= 1))
    bu = small_sets["burgers"]
    assert bu.q == 2701 and bu.m == 101
    counts = [np.sum(bu.mask[0] == c) for c in (INITIAL, BOUNDARY, INTERIOR)]
    assert counts == [101, 100, 2500]
    x = bu.colloc[0, bu.mask[0] == BOUNDARY, 0]
    assert np.sum(x == 0.0) == 50 and np.sum(x == 1.0) == 50
    assert bu.inputs[0, 0] == bu.inputs[0, -1]  # periodic input samples
    da = small_sets["darcy"]
    assert da.m == 200 and da.q == 1000
    assert np.all((da.colloc >= 0) & (da.colloc <= 2))


def test_darcy_masks_and_outside_values(small_sets):
    da = small_sets["darcy"]
    for n, dom in enumerate(da.domains):
        inside = dom.contains(da.colloc[n, :, 0], da.colloc[n, :, 1])
        np.testing.assert_array_equal(da.mask[n] == INTERIOR, inside)
        assert np.all(da.u[n, da.mask[n] == OUTSIDE] == 0.0)
        assert np.all(da.u[n, inside] >= 0.0)
        np.testing.assert_allclose(da.inputs[n].reshape(-1, 2)[0], dom.boundary_points(100)[0])


def test_darcy_shape_balance():
    ds = build_dataset("darcy", 6, rng_seed=1, with_solution=False)
    names = [d.shape for d in ds.domains]
    assert all(names.count(s) == 2 for s in SHAPES)
    assert not ds.has_solution


def test_dr_grid_values_are_solver_nodes():
    ds = build_dataset("dr", 1, rng_seed=0, layout="grid")
    assert ds.q == 100 * 100
    assert np.all(ds.u[0, ds.colloc[0, :, 1] == 0.0] == 0.0)  # zero initial state


def test_unknown_example():
    with pytest.raises(ValueError):
        build_dataset("heat", 1)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset("dr", np.zeros(3), np.zeros((2, 4)), np.zeros((2, 5, 2)), None, np.zeros((2, 5)))
    with pytest.raises(ValueError):
        Dataset("dr", np.zeros(3), np.full((2, 3), np.nan), np.zeros((2, 5, 2)), None, np.zeros((2, 5)))


def test_truncated_array(small_sets, tmp_path):
    save_dataset(small_sets["dr"], tmp_path)
    data = (tmp_path / "inputs.f64").read_bytes()
    (tmp_path / "inputs.f64").write_bytes(data[:-8])
    with pytest.raises(TruncatedArray):
        load_dataset(tmp_path)


def test_manifest_errors(small_sets, tmp_path):
    save_dataset(small_sets["dr"], tmp_path)
    man = tmp_path / "manifest"
    text = man.read_text()
    man.write_text(text.replace("example_id = dr", "example_id = heat"))
    with pytest.raises(ConfigInvalid):
        load_dataset(tmp_path)
    man.write_text(text.replace("version = 1", "version = 7"))
    with pytest.raises(VersionMismatch):
        load_dataset(tmp_path)
    man.write_text("this is not a manifest\n")
    with pytest.raises(CorruptManifest):
        load_dataset(tmp_path)


def trained_model(constraint=None, embedding=None):
    din = 3 if embedding else 2
    cube = Hypercube([-1, -1, 0], [1, 1, 1]) if embedding else Hypercube([0, 0], [1, 1])
    m = RannDeepONet(make_layer(5, 4, 0.5, 1, Hypercube(-np.ones(5), np.ones(5))),
                     make_layer(din, 3, 2.0, 2, cube), constraint, embedding)
    m.alpha = np.random.default_rng(0).standard_normal((3, 4))
    return m


@pytest.mark.parametrize("variant", ["plain", "dirichlet", "periodic"])
def test_model_round_trip(tmp_path, variant):
    model = {"plain": trained_model(),
             "dirichlet": trained_model(ConstraintWrapper("dirichlet", SpaceTimeCutoff())),
             "periodic": trained_model(embedding=PeriodicEmbedding())}[variant]
    save_model(model, tmp_path / "a")
    back = load_model(tmp_path / "a")
    f, y = np.linspace(-1, 1, 5), np.random.default_rng(3).uniform(0, 1, (20, 2))
    assert np.array_equal(model.evaluate_batch(f, y), back.evaluate_batch(f, y))
    save_model(back, tmp_path / "b")
    assert same_dirs(tmp_path / "a", tmp_path / "b")


def test_model_version_and_corruption(tmp_path):
    save_model(trained_model(), tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    man["version"] = 99
    (tmp_path / "manifest.json").write_text(json.dumps(man))
    with pytest.raises(VersionMismatch):
        load_model(tmp_path)
    (tmp_path / "manifest.json").write_text("{not json")
    with pytest.raises(CorruptManifest):
        load_model(tmp_path)


def test_untrained_model_round_trip(tmp_path):
    model = trained_model()
    model._alpha = None
    save_model(model, tmp_path)
    assert not load_model(tmp_path).is_trained
