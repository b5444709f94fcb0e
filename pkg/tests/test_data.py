import itertools
import json

import numpy as np
import pytest

from landscape_probe.data import (InputLaw, SamplerSpec, Teacher, export_csv, load_dataset,
                                  make_dataset, rademacher_mgf_gap, regenerate, sample_inputs,
                                  save_dataset, teacher_targets)
from landscape_probe.model import Activation, Architecture, WeightPoint


def rad(tau=1.0, d0=4, seed=0):
    return SamplerSpec(InputLaw.BOUNDED_SUBGAUSSIAN, tau, d0, seed)


def test_rademacher_rows_have_exact_norm():
    X = sample_inputs(rad(), 500)
    assert set(np.unique(X)) == {-1.0, 1.0}
    np.testing.assert_array_equal(np.linalg.norm(X, axis=1), 2.0)
    assert rad(tau=0.5, d0=9).r_x == 1.5


def test_gaussian_variance():
    X = sample_inputs(SamplerSpec(InputLaw.GAUSSIAN, 2.0, 3, seed=1), 100_000)
    var = X.var(axis=0)
    assert np.all((var > 3.8) & (var < 4.2))


def test_gaussian_second_moment_is_isotropic():
    n = 50_000
    X = sample_inputs(SamplerSpec(InputLaw.GAUSSIAN, 1.0, 3, seed=2), n)
    assert np.max(np.abs(X.T @ X / n - np.eye(3))) <= 3 / np.sqrt(n)


def test_sampling_is_deterministic_and_trial_separated():
    a = sample_inputs(rad(seed=5), 64, trial=3)
    np.testing.assert_array_equal(a, sample_inputs(rad(seed=5), 64, trial=3))
    assert not np.array_equal(a, sample_inputs(rad(seed=5), 64, trial=4))
    assert not np.array_equal(a, sample_inputs(rad(seed=6), 64, trial=3))


def test_sampling_rejects_empty():
    with pytest.raises(ValueError):
        sample_inputs(rad(), 0)


def test_rademacher_mgf_dominated_by_enumeration():
    tau, d0 = 0.7, 6
    atoms = tau * np.array(list(itertools.product([-1.0, 1.0], repeat=d0)))
    grid = np.random.default_rng(3).normal(scale=2.0, size=(200, d0))
    mgf = np.array([np.mean(np.exp(atoms @ lam)) for lam in grid])
    bound = np.exp(0.5 * tau ** 2 * np.sum(grid ** 2, axis=1))
    assert np.all(mgf <= bound * (1 + 1e-12))
    np.testing.assert_allclose(rademacher_mgf_gap(tau, d0, grid), np.log(mgf) - np.log(bound), atol=1e-9)


def test_teacher_targets():
    arch = Architecture((1, 1, 1))
    t = Teacher(arch, WeightPoint((np.array([[2.0]]), np.array([[3.0]])), 4.0))
    X = np.array([[1.0], [-1.0], [0.5]])
    np.testing.assert_array_equal(teacher_targets(t, X), 6 * X)
    np.testing.assert_array_equal(t.linear_map, [[6.0]])
    zero = Teacher(Architecture((3, 2, 2)), WeightPoint.zeros(Architecture((3, 2, 2))))
    assert not np.any(teacher_targets(zero, np.ones((4, 3))))
    sig = Architecture((3, 2, 2), Activation.SIGMOID)
    np.testing.assert_array_equal(teacher_targets(Teacher(sig, WeightPoint.zeros(sig)), np.ones((4, 3))), 0.5)


def test_teacher_checks():
    arch = Architecture((2, 2, 1))
    with pytest.raises(ValueError):
        Teacher(arch, WeightPoint((np.full((2, 2), 5.0), np.ones((1, 2))), 1.0))
    t = Teacher(arch, WeightPoint.zeros(arch))
    with pytest.raises(ValueError):
        teacher_targets(t, np.ones((3, 3)))
    noisy = Teacher(arch, WeightPoint.zeros(arch), noise=0.1)
    with pytest.raises(ValueError):
        teacher_targets(noisy, np.ones((3, 2)))


def test_dataset_regenerates_bit_identically():
    arch = Architecture((2, 3, 1), Activation.SIGMOID)
    w = WeightPoint.random(arch, 2.0, np.random.default_rng(0))
    spec = SamplerSpec(InputLaw.GAUSSIAN, 1.0, 2, seed=11)
    ds = make_dataset(spec, Teacher(arch, w, noise=0.1), 100, trial=2)
    again = regenerate(ds)
    np.testing.assert_array_equal(ds.inputs, again.inputs)
    np.testing.assert_array_equal(ds.targets, again.targets)


def test_dataset_round_trip(tmp_path):
    arch = Architecture((3, 2, 2))
    t = Teacher(arch, WeightPoint.random(arch, 1.0, np.random.default_rng(1)))
    ds = make_dataset(rad(d0=3, seed=9), t, 17)
    path = save_dataset(ds, tmp_path / "train.lpd")
    raw = path.read_bytes()
    assert raw[:4] == b"LPD1"
    back = load_dataset(path)
    np.testing.assert_array_equal(back.inputs, ds.inputs)
    np.testing.assert_array_equal(back.targets, ds.targets)
    side = json.loads((tmp_path / "train.lpd.json").read_text())
    assert side["sampler"]["seed"] == 9 and side["n"] == 17
    csv = export_csv(ds, tmp_path / "train.csv").read_text().splitlines()
    assert csv[0] == "x0,x1,x2,y0,y1" and len(csv) == 18


def test_load_rejects_bad_files(tmp_path):
    p = tmp_path / "junk.lpd"
    p.write_bytes(b"NOPE" + bytes(24))
    with pytest.raises(ValueError):
        load_dataset(p)
    p.write_bytes(b"LP")
    with pytest.raises(ValueError):
        load_dataset(p)
