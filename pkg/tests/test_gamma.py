import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cdforge import (ValidationError, gamma, gamma2, gamma2_tilde, gamma2_tilde_identity, generate,
                     laplacian, local_forms, random_graph)

from .conftest import corpus


# ---- hand-evaluated examples


def test_laplacian_examples(p2, weighted_path):
    assert laplacian(p2, [0.0, 2.0], "0") == 2.0
    assert laplacian(weighted_path, {"a": 1, "b": 0, "c": 3}, "b") == pytest.approx(3.5, abs=1e-15)
    assert np.all(laplacian(weighted_path, [4.0, 4.0, 4.0]) == 0.0)


def test_gamma_examples(p2, weighted_path):
    assert gamma(p2, [0.0, 2.0], x="0") == 2.0
    assert gamma(weighted_path, {"a": 1, "b": 0, "c": 3}, x="b") == pytest.approx(4.75, abs=1e-15)
    assert gamma(weighted_path, [2.0, 2.0, 2.0], [1.0, -3.0, 5.0], x="b") == 0.0


def test_gamma2_examples(p2, k3):
    assert gamma2(p2, [0.0, 2.0], x="0") == pytest.approx(4.0, abs=1e-14)
    assert gamma2(k3, [1.0, 0.0, 0.0], x="0") == pytest.approx(2.5, abs=1e-14)
    assert gamma2(k3, [3.0, 3.0, 3.0], x="1") == 0.0


def test_gamma2_tilde_examples(p2, k3):
    assert gamma2_tilde(k3, [2.0, 2.0, 2.0], "0") == 0.0
    a, b = gamma2_tilde(p2, [1.0, 2.0], "0"), gamma2_tilde_identity(p2, [1.0, 2.0], "0")
    assert a == pytest.approx(b, rel=1e-12)
    f = np.random.default_rng(7).uniform(0.2, 3.0, 3)
    assert gamma2_tilde(k3, f, "0") == pytest.approx(gamma2_tilde_identity(k3, f, "0"), rel=1e-12)


def test_gamma2_tilde_requires_positive_on_two_ball():
    g = generate("path", n=6)
    f = np.ones(6)
    f[5] = -1.0  # 3 hops from vertex 2: harmless there
    gamma2_tilde(g, f, "2")
    with pytest.raises(ValidationError):
        gamma2_tilde(g, f, "3")


def test_local_forms_examples(p2, k3):
    lf = local_forms(p2, "0")
    assert lf.support == ("0", "1")
    assert np.array_equal(lf.gamma_form, [[0.5, -0.5], [-0.5, 0.5]])
    lf = local_forms(k3, "0")
    e = np.array([1.0, 0.0, 0.0])
    assert e @ lf.gamma2_form @ e == pytest.approx(2.5, abs=1e-14)
    one = np.ones(3)
    assert np.all(lf.gamma_form @ one == 0)
    assert one @ lf.gamma2_form @ one == pytest.approx(0.0, abs=1e-14)
    assert lf.laplacian_row.sum() == pytest.approx(0.0, abs=1e-15)


# ---- properties on random graphs

graph_args = dict(seed=st.integers(0, 100_000), n=st.integers(2, 40))


def _pair(seed, n):
    g = random_graph(n, seed)
    rng = np.random.default_rng(seed + 1)
    return g, rng.normal(size=n), rng.normal(size=n)


@settings(max_examples=50, deadline=None)
@given(**graph_args)
def test_product_rule(seed, n):
    g, f, h = _pair(seed, n)
    lhs = 2 * gamma(g, f, h)
    rhs = laplacian(g, f * h) - f * laplacian(g, h) - h * laplacian(g, f)
    scale = np.abs(laplacian(g, f * h)) + np.abs(f * laplacian(g, h)) + np.abs(h * laplacian(g, f))
    assert np.all(np.abs(lhs - rhs) <= 1e-11 * np.maximum(scale, 1e-300))


@settings(max_examples=50, deadline=None)
@given(**graph_args)
def test_green_identity_and_zero_mean(seed, n):
    g, f, h = _pair(seed, n)
    left = np.sum(g.mu * gamma(g, f, h))
    right = -np.sum(g.mu * f * laplacian(g, h))
    scale = np.sum(g.mu * np.abs(f * laplacian(g, h)))
    assert abs(left - right) <= 1e-10 * scale
    assert abs(np.sum(g.mu * laplacian(g, f))) <= 1e-12 * np.sum(g.mu * np.abs(laplacian(g, f)))


@settings(max_examples=50, deadline=None)
@given(**graph_args, a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_bilinear_symmetric(seed, n, a, b):
    g, f, h = _pair(seed, n)
    k = np.random.default_rng(seed + 2).normal(size=n)
    for form in (gamma, gamma2):
        assert np.allclose(form(g, f, h), form(g, h, f), rtol=1e-12, atol=1e-12)
        combo = form(g, a * f + b * k, h)
        parts = a * form(g, f, h) + b * form(g, k, h)
        assert np.allclose(combo, parts, rtol=1e-9, atol=1e-9)
    assert np.all(gamma(g, f) >= 0)


@pytest.mark.parametrize("name", ["P2", "K3", "S4", "C5", "Q3"])
def test_gamma2_tilde_identity_corpus(name):
    g = corpus()[name]
    for seed in range(100):
        f = np.random.default_rng(seed).uniform(0.2, 3.0, len(g))
        a, b = gamma2_tilde(g, f), gamma2_tilde_identity(g, f)
        scale = np.abs(gamma2(g, f)) + np.abs(gamma(g, f, gamma(g, f) / f))
        assert np.all(np.abs(a - b) <= 1e-11 * scale)


@settings(max_examples=40, deadline=None)
@given(**graph_args, c=st.floats(0.01, 100))
def test_scale_behaviour(seed, n, c):
    g = random_graph(n, seed)
    f = np.random.default_rng(seed).uniform(0.2, 3.0, n)
    t1, t2 = gamma2_tilde(g, c * f), gamma2_tilde(g, f)
    assert np.allclose(t1, c * c * t2, rtol=1e-9, atol=1e-12 * c * c * np.abs(t2).max())
    assert np.allclose(laplacian(g, np.log(c * f)), laplacian(g, np.log(f)), rtol=1e-9, atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 15))
def test_local_forms_agree_with_direct(seed, n):
    g = random_graph(n, seed)
    rng = np.random.default_rng(seed)
    for x in g.ids:
        lf = local_forms(g, x)
        assert np.allclose(lf.gamma_form, lf.gamma_form.T)
        assert np.linalg.eigvalsh(lf.gamma_form).min() >= -1e-12
        assert lf.laplacian_row.sum() == pytest.approx(0.0, abs=1e-12)
        vecs = rng.normal(size=(100, len(lf.support)))
        for v in vecs:
            full = lf.embed(g, v)
            direct_g = gamma(g, full, x=x)
            direct_g2 = gamma2(g, full, x=x)
            assert v @ lf.gamma_form @ v == pytest.approx(direct_g, rel=1e-12, abs=1e-12)
            assert v @ lf.gamma2_form @ v == pytest.approx(direct_g2, rel=1e-12, abs=1e-11)
            assert lf.laplacian_row @ v == pytest.approx(laplacian(g, full, x), rel=1e-12, abs=1e-12)
