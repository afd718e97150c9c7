"""Dirichlet heat kernels on finite vertex sets and the heat semigroup.

The Dirichlet Laplacian on the interior of U is conjugated by mu^(1/2) into a
symmetric matrix and diagonalized densely; eigenvectors are mapped back to be
orthonormal in l2(mu). The full graph (U = V, empty boundary) gives the heat
semigroup e^(t Lap) used by the inequality checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import NumericalError, ValidationError
from .graph import ExhaustionPlan, FieldLike, ScalarField, WeightedGraph, as_array, ball, interior_boundary

MAX_INTERIOR = 2000
CLAMP = 1e-12


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of -Lap_U on ``subset`` (the interior of U).

    ``eigenvectors[:, i]`` is phi_i, with sum_x mu(x) phi_i(x) phi_j(x) = delta_ij.
    """

    subset: tuple[str, ...]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    mu: np.ndarray

    def __len__(self) -> int:
        return len(self.subset)

    def kernel(self, t: float) -> np.ndarray:
        """Matrix of p_U(t, x, y) over the subset."""
        return (self.eigenvectors * np.exp(-self.eigenvalues * t)) @ self.eigenvectors.T

    def kernel_dt(self, t: float) -> np.ndarray:
        """Time derivative of :meth:`kernel`, from the spectrum."""
        decay = -self.eigenvalues * np.exp(-self.eigenvalues * t)
        return (self.eigenvectors * decay) @ self.eigenvectors.T

    def propagator(self, t: float) -> np.ndarray:
        """Matrix H with (P_t f)(x) = sum_y H[x, y] f(y), i.e. H = p_t diag(mu)."""
        return self.kernel(t) * self.mu[None, :]

    def apply(self, t: float, f: np.ndarray) -> np.ndarray:
        """P_t f for an array (or stacked columns) over the subset; any real t."""
        f = np.asarray(f, dtype=float)
        coeff = self.eigenvectors.T @ (self.mu[:, None] * f if f.ndim == 2 else self.mu * f)
        decay = np.exp(-self.eigenvalues * t)
        return self.eigenvectors @ (decay[:, None] * coeff if f.ndim == 2 else decay * coeff)


@dataclass(frozen=True)
class HeatKernelValue:
    t: float
    x: str
    y: str
    value: float  # clamped at 0 when within CLAMP below it
    subset_radius: int | str | None = "FULL"
    raw: float = field(default=0.0, compare=False)


def _resolve_subset(g: WeightedGraph, U: Iterable[str] | None) -> tuple[str, ...]:
    if U is None:
        return g.ids
    interior, _ = interior_boundary(g, U)
    return interior


def dirichlet_spectrum(g: WeightedGraph, U: Iterable[str] | None = None,
                       max_size: int = MAX_INTERIOR) -> SpectralDecomposition:
    """Spectrum of the Dirichlet Laplacian on the interior of ``U`` (``None`` = all of V).

    Values on the boundary of U are held at zero, so Lap_U is the Laplacian
    restricted to interior rows and columns (diagonal keeps the full m(x)).
    """
    subset = _resolve_subset(g, U)
    key = ("spectrum", subset)
    if key in g._cache:
        return g._cache[key]
    if not subset:
        raise ValidationError("interior of U is empty")
    if len(subset) > max_size:
        raise ValidationError(f"interior has {len(subset)} vertices, above the limit {max_size}")
    idx = np.array([g.index(v) for v in subset])
    mu = g.mu[idx]
    W = g.adjacency[idx][:, idx].toarray()
    root = np.sqrt(mu)
    S = W / root[:, None] / root[None, :]
    S[np.diag_indices_from(S)] = -g.degree[idx] / mu
    try:
        lam, V = scipy.linalg.eigh(-S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from None
    tol = 1e-12 * max(1.0, float(np.abs(lam).max()))
    if lam[0] < -tol:
        raise NumericalError("Dirichlet Laplacian has a negative eigenvalue")
    lam = np.where(lam < 0, 0.0, lam)
    phi = V / root[:, None]
    for arr in (lam, phi, mu):
        arr.flags.writeable = False
    spec = SpectralDecomposition(subset, lam, phi, mu)
    g._cache[key] = spec
    return spec


def full_spectrum(g: WeightedGraph) -> SpectralDecomposition:
    return dirichlet_spectrum(g, None)


def heat_kernel(g: WeightedGraph, U: Iterable[str] | None, t: float, x: str, y: str,
                radius: int | str | None = None) -> HeatKernelValue:
    """p_U(t, x, y) = sum_i exp(-lambda_i t) phi_i(x) phi_i(y); ``U=None`` uses all of V."""
    if not t > 0:
        raise ValidationError("t must be positive")
    spec = dirichlet_spectrum(g, U)
    pos = {v: i for i, v in enumerate(spec.subset)}
    for v in (x, y):
        if v not in pos:
            raise ValidationError(f"vertex outside interior: {v!r}")
    i, j = pos[x], pos[y]
    decay = np.exp(-spec.eigenvalues * t)
    raw = float(np.sum(decay * spec.eigenvectors[i] * spec.eigenvectors[j]))
    value = 0.0 if -CLAMP <= raw < 0 else raw
    label = radius if radius is not None else ("FULL" if U is None else None)
    return HeatKernelValue(float(t), x, y, value, label, raw)


def apply_semigroup(g: WeightedGraph, U: Iterable[str] | None, t: float, f: FieldLike) -> ScalarField:
    """P_t f on the interior of ``U``; zero (the default) elsewhere."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    fa = as_array(g, f)
    spec = dirichlet_spectrum(g, U)
    idx = [g.index(v) for v in spec.subset]
    vals = fa[idx] if t == 0 else spec.apply(t, fa[idx])
    return ScalarField(dict(zip(spec.subset, vals.tolist())), 0.0)


def semigroup(g: WeightedGraph, t: float, f: np.ndarray) -> np.ndarray:
    """Array form of P_t on the whole finite graph; ``f`` may be stacked columns."""
    return full_spectrum(g).apply(t, f)


def expm_apply(g: WeightedGraph, t: float, f: FieldLike) -> np.ndarray:
    """Independent route to e^(t Lap) f: scipy's scaling-and-squaring Pade expm."""
    L = g.laplacian_matrix.toarray()
    return scipy.linalg.expm(t * L) @ as_array(g, f)


# ---------------------------------------------------------------- exhaustion


def exhaustion_kernel(g: WeightedGraph, plan: ExhaustionPlan, t: float, x: str, y: str,
                      tol: float = 1e-8) -> tuple[HeatKernelValue, dict]:
    """Approximate the heat kernel of an infinite graph by Dirichlet kernels on balls.

    Walks the balls of ``plan`` in order and stops at the first radius whose
    value differs from the previous one by less than ``tol``. Nonconvergence
    is reported in the diagnostics (``converged=False``), not raised.
    """
    if not t > 0:
        raise ValidationError("t must be positive")
    first_interior, _ = interior_boundary(g, ball(g, plan.center, plan.radii[0]))
    for v in (x, y):
        if v not in first_interior:
            raise ValidationError(f"vertex outside interior of the smallest ball: {v!r}")

    values: list[float] = []
    radii: list[int] = []
    converged = False
    for r in plan.radii:
        kv = heat_kernel(g, ball(g, plan.center, r), t, x, y, radius=r)
        values.append(kv.raw)
        radii.append(r)
        if len(values) > 1 and abs(values[-1] - values[-2]) < tol:
            converged = True
            break
    steps = np.diff(values)
    diagnostics = {
        "radii": radii,
        "values": values,
        "increments": steps.tolist(),
        "min_increment": float(steps.min()) if steps.size else None,
        "monotone": bool(np.all(steps >= -CLAMP)),
        "converged": converged,
    }
    raw = values[-1]
    value = 0.0 if -CLAMP <= raw < 0 else raw
    return HeatKernelValue(float(t), x, y, value, radii[-1], raw), diagnostics


# ---------------------------------------------------------------- diagnostics


def semigroup_diagnostics(g: WeightedGraph, t: float = 0.7, s: float = 0.4,
                          f: FieldLike | None = None, seed: int = 0) -> dict:
    """Residuals of the kernel and semigroup identities on the whole finite graph.

    Covers symmetry, positivity, row sums, the t -> 0 limit, the heat equation
    in both variables, Chapman-Kolmogorov, the semigroup law, commutation of
    Lap with P_t, and agreement with an independent matrix exponential.
    """
    spec = full_spectrum(g)
    mu = spec.mu
    L = g.laplacian_matrix.toarray()
    fa = np.random.default_rng(seed).uniform(-1, 1, len(g)) if f is None else as_array(g, f)

    p_t = spec.kernel(t)
    p_s = spec.kernel(s)
    rows = (p_t * mu[None, :]).sum(axis=1)
    rows_small = (spec.kernel(1e-8) * mu[None, :]).sum(axis=1)

    h = 1e-4 * t
    fd = (spec.kernel(t + h) - spec.kernel(t - h)) / (2 * h)
    exact = spec.kernel_dt(t)
    lap_x = L @ p_t
    lap_y = p_t @ L.T
    scale = max(np.abs(exact).max(), 1e-300)

    ck = (p_t * mu[None, :]) @ p_s
    pt_f = spec.apply(t, fa)
    return {
        "symmetry": float(np.abs(p_t - p_t.T).max()),
        "min_kernel": float(p_t.min()),
        "row_sum_max": float(rows.max()),
        "row_sum_dev": float(np.abs(rows - 1.0).max()),
        "small_t_row_sum_dev": float(np.abs(rows_small - 1.0).max()),
        "small_t_identity_dev": float(np.abs(spec.kernel(1e-8) * mu[None, :] - np.eye(len(g))).max()),
        "heat_eq_fd_rel": float(np.abs(fd - exact).max() / scale),
        "heat_eq_x_rel": float(np.abs(lap_x - exact).max() / scale),
        "heat_eq_y_rel": float(np.abs(lap_y - exact).max() / scale),
        "chapman_kolmogorov": float(np.abs(ck - spec.kernel(t + s)).max()),
        "semigroup_law": float(np.abs(spec.apply(t, spec.apply(s, fa)) - spec.apply(t + s, fa)).max()),
        "commutation": float(np.abs(L @ pt_f - spec.apply(t, L @ fa)).max()),
        "contraction": float(np.abs(pt_f).max() - np.abs(fa).max()),
        "expm_oracle": float(np.abs(pt_f - expm_apply(g, t, fa)).max()),
    }


def sqrt_drift_sup(g: WeightedGraph, u0: FieldLike, t_grid: Sequence[float]) -> float:
    """sup over vertices and ``t_grid`` of |Lap u / (2 sqrt u)| for u = P_t u0, u0 > 0."""
    ua = as_array(g, u0)
    if np.any(ua <= 0):
        raise ValidationError("initial data must be positive")
    L = g.laplacian_matrix
    sup = 0.0
    for t in t_grid:
        u = semigroup(g, t, ua)
        sup = max(sup, float(np.abs(L @ u / (2.0 * np.sqrt(u))).max()))
    if not math.isfinite(sup):
        raise NumericalError("Lap u / (2 sqrt u) is unbounded on the grid")
    return sup
