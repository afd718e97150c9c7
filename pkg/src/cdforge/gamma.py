"""Pointwise Laplacian, gradient forms and their local matrix representations.

Every operator takes fields as anything :func:`cdforge.graph.as_array` accepts
and returns either the full array over the graph (``x=None``) or the value at
vertex ``x``. Sums run over directed edges in CSR order, i.e. neighbours are
accumulated in sorted order at every vertex.

Reading radii: ``laplacian`` and ``gamma`` read the 1-ball of ``x``;
``gamma2`` and ``gamma2_tilde`` read the 2-ball.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import FieldLike, WeightedGraph, as_array, ball


def _at(g: WeightedGraph, values: np.ndarray, x: str | None):
    if x is None:
        return values
    return float(values[g.index(x)])


def _lap(g: WeightedGraph, f: np.ndarray) -> np.ndarray:
    diff = f[g.dst] - f[g.src]
    return np.bincount(g.src, weights=g.weights * diff, minlength=len(g)) / g.mu


def _gam(g: WeightedGraph, f: np.ndarray, h: np.ndarray) -> np.ndarray:
    prod = (f[g.dst] - f[g.src]) * (h[g.dst] - h[g.src])
    return np.bincount(g.src, weights=g.weights * prod, minlength=len(g)) / (2.0 * g.mu)


def _gam2(g: WeightedGraph, f: np.ndarray, h: np.ndarray) -> np.ndarray:
    return 0.5 * (_lap(g, _gam(g, f, h)) - _gam(g, f, _lap(g, h)) - _gam(g, _lap(g, f), h))


def _gam2_tilde(g: WeightedGraph, f: np.ndarray) -> np.ndarray:
    # operational form: 1/2 Lap Gamma(f) - Gamma(f, Lap(f^2) / (2f))
    return 0.5 * _lap(g, _gam(g, f, f)) - _gam(g, f, _lap(g, f * f) / (2.0 * f))


def laplacian(g: WeightedGraph, f: FieldLike, x: str | None = None):
    """mu-Laplacian ``(1/mu(x)) sum_y w_xy (f(y) - f(x))``."""
    return _at(g, _lap(g, as_array(g, f)), x)


def gamma(g: WeightedGraph, f: FieldLike, h: FieldLike | None = None, x: str | None = None):
    """Gradient form Gamma(f, h); Gamma(f) when ``h`` is omitted."""
    fa = as_array(g, f)
    ha = fa if h is None else as_array(g, h)
    return _at(g, _gam(g, fa, ha), x)


def gamma2(g: WeightedGraph, f: FieldLike, h: FieldLike | None = None, x: str | None = None):
    """Iterated gradient form ``1/2 (Lap Gamma(f,h) - Gamma(f, Lap h) - Gamma(Lap f, h))``."""
    fa = as_array(g, f)
    ha = fa if h is None else as_array(g, h)
    return _at(g, _gam2(g, fa, ha), x)


def _check_positive(g: WeightedGraph, f: np.ndarray, x: str | None) -> None:
    if x is None:
        bad = f <= 0
    else:
        region = [g.index(v) for v in ball(g, x, 2)]
        bad = np.zeros(len(g), dtype=bool)
        bad[region] = f[region] <= 0
    if np.any(bad):
        v = g.ids[int(np.argmax(bad))]
        raise ValidationError(f"field must be positive, got {f[g.index(v)]} at {v!r}")


def gamma2_tilde(g: WeightedGraph, f: FieldLike, x: str | None = None):
    """Modified iterated form used by the CDE' condition, for positive ``f``.

    Equals ``gamma2(f) - gamma(f, gamma(f) / f)``; see :func:`gamma2_tilde_identity`.
    """
    fa = as_array(g, f)
    _check_positive(g, fa, x)
    if x is None:
        return _gam2_tilde(g, fa)
    # outside the 2-ball the values never reach x, but must not divide by zero
    safe = np.where(fa > 0, fa, 1.0)
    return _at(g, _gam2_tilde(g, safe), x)


def gamma2_tilde_identity(g: WeightedGraph, f: FieldLike, x: str | None = None):
    """Independent route to Gamma2~: ``gamma2(f) - gamma(f, gamma(f)/f)``."""
    fa = as_array(g, f)
    _check_positive(g, fa, x)
    safe = np.where(fa > 0, fa, 1.0)
    out = _gam2(g, safe, safe) - _gam(g, safe, _gam(g, safe, safe) / safe)
    return _at(g, out, x)


@dataclass(frozen=True)
class LocalForms:
    """Quadratic forms at one vertex, as matrices over its 2-ball.

    ``f @ gamma_form @ f == gamma(f)(vertex)`` and likewise for ``gamma2_form``;
    ``laplacian_row @ f`` is the Laplacian at the vertex.
    """

    vertex: str
    support: tuple[str, ...]
    laplacian_row: np.ndarray
    gamma_form: np.ndarray
    gamma2_form: np.ndarray

    @property
    def center(self) -> int:
        return self.support.index(self.vertex)

    def embed(self, g: WeightedGraph, vec: np.ndarray, default: float = 0.0) -> np.ndarray:
        """Full-graph array equal to ``vec`` on the support and ``default`` elsewhere."""
        out = np.full(len(g), default, dtype=float)
        out[[g.index(v) for v in self.support]] = vec
        return out


def local_forms(g: WeightedGraph, x: str) -> LocalForms:
    """Assemble the Laplacian row and the Gamma / Gamma2 matrices at ``x``.

    With G_y the matrix of f -> Gamma(f)(y) and L the Laplacian restricted to
    the 2-ball, Gamma2 at x has matrix ``1/2 (sum_y L_xy G_y - G_x L - L^T G_x)``.
    Rows of L for vertices of the 1-ball are exact, which is all that is used.
    """
    support = ball(g, x, 2)
    k = len(support)
    loc = {v: i for i, v in enumerate(support)}
    gi = np.array([g.index(v) for v in support])
    L = g.laplacian_matrix[gi][:, gi].toarray()

    def gform(v: str) -> np.ndarray:
        G = np.zeros((k, k))
        i = loc[v]
        mu_v = g.mu[g.index(v)]
        for y in g.neighbors(v):
            j = loc[y]
            c = g.weight(v, y) / (2.0 * mu_v)
            G[i, i] += c
            G[j, j] += c
            G[i, j] -= c
            G[j, i] -= c
        return G

    c = loc[x]
    Gx = gform(x)
    lap_gamma = np.zeros((k, k))
    for y in [x] + g.neighbors(x):
        lap_gamma += L[c, loc[y]] * gform(y)
    G2 = 0.5 * (lap_gamma - Gx @ L - L.T @ Gx)
    G2 = 0.5 * (G2 + G2.T)
    return LocalForms(x, support, L[c].copy(), Gx, G2)
