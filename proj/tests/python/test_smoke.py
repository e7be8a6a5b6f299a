import math

import numpy as np
import pytest

import mvmorph


def test_manifold_basics():
    m = mvmorph.Manifold.spd(2)
    a = np.array([2.0, 0.3, 0.3, 1.0])
    b = np.array([1.0, 0.0, 0.0, 3.0])
    assert m.point_dim == 4
    assert m.contains(a)
    assert np.allclose(m.exp(a, m.log(a, b)), b, atol=1e-10)
    assert m.dist(a, a) == pytest.approx(0.0, abs=1e-12)
    s = mvmorph.Manifold.sphere(2)
    assert s.dist(np.array([1.0, 0, 0]), np.array([0, 1.0, 0])) == pytest.approx(math.pi / 2)
    mean = m.karcher_mean(np.stack([a, b]), np.array([0.5, 0.5]))
    assert np.allclose(mean, m.geopoint(a, b, 0.5), atol=1e-10)
    assert repr(mvmorph.Manifold.parse("hsv")).startswith("Manifold(")


def test_register_blob():
    m, T, R = mvmorph.synthetic_pair("blob")
    assert T.shape == (32, 32, 1)
    res = mvmorph.register(m, T, R, alpha=0.005)
    assert res["v1"].shape == (31, 32)
    assert res["v2"].shape == (32, 31)
    energy = res["energy"]
    assert all(b < a for a, b in zip(energy, energy[1:]))
    mask = R[:, :, 0] > 0.5
    assert res["u1"][mask].mean() > 1.0


def test_identity_morph_and_optimal_images():
    rng = np.random.default_rng(0)
    m = mvmorph.Manifold.euclidean(2)
    T = rng.normal(size=(8, 9, 2))
    R = rng.normal(size=(8, 9, 2))
    zero = np.zeros((8, 9))
    imgs = mvmorph.optimal_images(m, T, R, [zero, zero, zero], [zero, zero, zero])
    assert len(imgs) == 2
    assert np.allclose(imgs[0], (2 * T + R) / 3, atol=1e-10)

    out = mvmorph.morph(m, T, T, frames=3, levels=0, sweeps=1, parallel=False)
    assert not out["aborted"]
    assert len(out["frames"]) == 4
    assert all(row["J_total"] == pytest.approx(0.0, abs=1e-20) for row in out["ledger"])


def test_mvr_round_trip(tmp_path):
    m, T, _ = mvmorph.synthetic_pair("whirl", size=12)
    path = tmp_path / "w.mvr"
    mvmorph.write_mvr(path, m, T)
    m2, back = mvmorph.read_mvr(path)
    assert m2 == m
    assert np.array_equal(back, T)


def test_errors_are_value_errors():
    m = mvmorph.Manifold.spd(2)
    bad = np.zeros((3, 3, 4))
    with pytest.raises(ValueError):
        mvmorph.register(m, bad, bad)
    with pytest.raises(ValueError):
        mvmorph.Manifold.parse("torus")
