"""Numerical checks of the semigroup inequalities equivalent to CD(n, kappa) and CDE'.

Conventions: ``kappa`` is always a curvature *lower bound*, so CD(n, kappa)
yields the gradient estimate

    Gamma(P_t f) <= exp(-2 kappa t) P_t Gamma(f) - ...

Internally ``K = -kappa`` is the growth rate. Every report is oriented so
that ``margin = rhs - lhs >= 0`` means the inequality holds. All semigroup
evaluations run on the whole finite graph.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import exprel

from .curvature import inv_dim
from .errors import NumericalError, ValidationError
from .gamma import _gam, _gam2, _gam2_tilde, _lap
from .graph import FieldLike, WeightedGraph, as_array
from .heat import SpectralDecomposition, full_spectrum

ITEMS_THM31 = ("T31_1", "T31_2", "T31_3", "T31_4")


@dataclass(frozen=True)
class InequalityReport:
    item: str
    vertex: str
    t: float
    lhs: float
    rhs: float
    margin: float

    def to_record(self) -> dict:
        return asdict(self)


def summarize(reports: Sequence[InequalityReport]) -> dict:
    if not reports:
        return {"min_margin": None, "argmin": None}
    worst = min(reports, key=lambda r: r.margin)
    return {"min_margin": worst.margin,
            "argmin": {"item": worst.item, "vertex": worst.vertex, "t": worst.t}}


# ---------------------------------------------------------------- coefficients


def _phi2(x: float) -> float:
    """(e^x - 1 - x) / x^2, accurate near 0 (limit 1/2)."""
    if abs(x) < 1e-3:
        return 0.5 + x / 6.0 + x * x / 24.0 + x**3 / 120.0
    return (math.expm1(x) - x) / (x * x)


@dataclass(frozen=True)
class Coefficients:
    """Time coefficients of the four items, with K = -kappa.

    ``var_upper = (e^{2Kt} - 1)/K``, ``var_upper_dim = (e^{2Kt} - 1 - 2Kt)/K^2``,
    ``var_lower = (1 - e^{-2Kt})/K``, ``var_lower_dim = (e^{-2Kt} - 1 + 2Kt)/K^2``;
    at K = 0 these take their limits 2t, 2t^2, 2t, 2t^2.
    """

    decay: float
    var_upper: float
    var_upper_dim: float
    var_lower: float
    var_lower_dim: float

    @classmethod
    def at(cls, kappa: float, t: float) -> "Coefficients":
        x = -2.0 * kappa * t  # 2Kt
        return cls(
            decay=math.exp(x),
            var_upper=2.0 * t * float(exprel(x)),
            var_upper_dim=4.0 * t * t * _phi2(x),
            var_lower=2.0 * t * float(exprel(-x)),
            var_lower_dim=4.0 * t * t * _phi2(-x),
        )


# ---------------------------------------------------------------- evaluands


class _Flow:
    """Cached semigroup quantities for one graph and one initial field."""

    def __init__(self, g: WeightedGraph, f: np.ndarray):
        self.g = g
        self.f = f
        self.spec: SpectralDecomposition = full_spectrum(g)
        self.lap_f = _lap(g, f)
        self.gam_f = _gam(g, f, f)

    def at(self, t: float) -> dict:
        g, spec, f = self.g, self.spec, self.f
        u = spec.apply(t, f)
        H = spec.propagator(t)
        # centred variance sum_y H[x,y] (f(y) - P_t f(x))^2 avoids cancellation
        var = np.einsum("xy,xy->x", H, (f[None, :] - u[:, None]) ** 2)
        return {
            "grad_pt": _gam(g, u, u),
            "pt_grad": spec.apply(t, self.gam_f),
            "pt_lap": spec.apply(t, self.lap_f),
            "var": var,
        }


def _gauss_panels(a: float, b: float, order: int, panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _item1_integral_all(g: WeightedGraph, f: np.ndarray, kappa: float, t: float,
                        order: int = 8, panels: int | None = None, tol: float = 1e-10,
                        max_doublings: int = 10) -> np.ndarray:
    spec = full_spectrum(g)
    phi, lam, mu = spec.eigenvectors, spec.eigenvalues, spec.mu
    coeff = phi.T @ (mu * _lap(g, f))

    def integrate(m: int) -> np.ndarray:
        s, w = _gauss_panels(0.0, t, order, m)
        inner = phi @ (np.exp(-np.outer(lam, t - s)) * coeff[:, None])  # P_{t-s} Lap f per node
        outer = phi @ (np.exp(-np.outer(lam, s)) * (phi.T @ (mu[:, None] * inner**2)))
        return outer @ (w * np.exp(-2.0 * kappa * s))

    m = panels or 8
    prev = integrate(m)
    for _ in range(max_doublings):
        m *= 2
        cur = integrate(m)
        diff = float(np.abs(cur - prev).max())
        scale = max(1.0, float(np.abs(cur).max()))
        if diff <= tol * scale:
            return cur
        prev = cur
    if diff > 1e-9 * scale:
        raise NumericalError(f"item-1 quadrature did not settle (last change {diff:.3g})")
    return cur


def item1_integral(g: WeightedGraph, f: FieldLike, kappa: float, t: float, x: str | None = None,
                   order: int = 8, panels: int | None = None):
    """int_0^t exp(-2 kappa s) P_s[(P_{t-s} Lap f)^2] ds, at ``x`` or at every vertex.

    Composite Gauss-Legendre of the given order; panels start at width t/8
    and are doubled until successive results agree to 1e-10.
    """
    if not t > 0:
        raise ValidationError("t must be positive")
    vals = _item1_integral_all(g, as_array(g, f), kappa, t, order, panels)
    return vals if x is None else float(vals[g.index(x)])


def _positive_array(g: WeightedGraph, f: FieldLike) -> np.ndarray:
    fa = as_array(g, f)
    if np.any(fa <= 0):
        raise ValidationError("f must be positive")
    return fa


def _grid(t_grid: Iterable[float]) -> list[float]:
    ts = sorted(float(t) for t in t_grid)
    if not ts:
        raise ValidationError("empty time grid")
    if ts[0] <= 0:
        raise ValidationError("times must be positive")
    return ts


def _vertex_indices(g: WeightedGraph, vertices) -> list[int]:
    if vertices is None:
        return list(range(len(g)))
    return sorted(g.index(v) for v in vertices)


# ---------------------------------------------------------------- gradient and variance bounds


def _thm31_arrays(flow: _Flow, n: float, kappa: float, t: float) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    c_inv = inv_dim(n)
    q = flow.at(t)
    co = Coefficients.at(kappa, t)
    sq = q["pt_lap"] ** 2
    if c_inv:
        integral = _item1_integral_all(flow.g, flow.f, kappa, t)
    else:
        integral = np.zeros(len(flow.g))
    return {
        "T31_1": (q["grad_pt"], co.decay * q["pt_grad"] - 2.0 * c_inv * integral),
        "T31_2": (q["grad_pt"], co.decay * q["pt_grad"] - c_inv * co.var_upper * sq),
        "T31_3": (q["var"], co.var_upper * q["pt_grad"] - c_inv * co.var_upper_dim * sq),
        "T31_4": (co.var_lower * q["grad_pt"] + c_inv * co.var_lower_dim * sq, q["var"]),
    }


def _reports(g, idx, t, arrays) -> list[InequalityReport]:
    out = []
    for i in idx:
        for item, (lhs, rhs) in arrays.items():
            out.append(InequalityReport(item, g.ids[i], t, float(lhs[i]), float(rhs[i]),
                                        float(rhs[i] - lhs[i])))
    return out


def verify_thm31(g: WeightedGraph, f: FieldLike, n: float, kappa: float,
                 t_grid: Iterable[float], vertices: Iterable[str] | None = None) -> list[InequalityReport]:
    """Margins of the four semigroup inequalities implied by CD(n, kappa).

    1. Gamma(P_t f) <= e^{-2 kappa t} P_t Gamma(f) - (2/n) int_0^t e^{-2 kappa s} P_s (P_{t-s} Lap f)^2 ds
    2. Gamma(P_t f) <= e^{-2 kappa t} P_t Gamma(f) - var_upper/n (P_t Lap f)^2
    3. P_t f^2 - (P_t f)^2 <= var_upper P_t Gamma(f) - var_upper_dim/n (P_t Lap f)^2
    4. P_t f^2 - (P_t f)^2 >= var_lower Gamma(P_t f) + var_lower_dim/n (P_t Lap f)^2

    with the coefficients of :class:`Coefficients`. Reports come sorted by
    vertex, then t, then item.
    """
    fa = _positive_array(g, f)
    ts = _grid(t_grid)
    idx = _vertex_indices(g, vertices)
    flow = _Flow(g, fa)
    out = []
    for t in ts:
        out += _reports(g, idx, t, _thm31_arrays(flow, n, kappa, t))
    return sorted(out, key=lambda r: (r.vertex, r.t, r.item))


def _two_sided(lower, middle, upper):
    lo_margin, up_margin = middle - lower, upper - middle
    use_low = lo_margin < up_margin
    return np.where(use_low, lower, middle), np.where(use_low, middle, upper)


def verify_corollary31(g: WeightedGraph, f: FieldLike, n: float, t_grid: Iterable[float],
                       vertices: Iterable[str] | None = None) -> list[InequalityReport]:
    """CD(n, 0) forms, written with the explicit coefficients 2t and 2t^2.

    ``C31_3`` is two-sided; its report carries whichever side is tighter.
    """
    fa = _positive_array(g, f)
    c_inv = inv_dim(n)
    idx = _vertex_indices(g, vertices)
    flow = _Flow(g, fa)
    out = []
    for t in _grid(t_grid):
        q = flow.at(t)
        sq = q["pt_lap"] ** 2
        integral = _item1_integral_all(g, fa, 0.0, t) if c_inv else np.zeros(len(g))
        lower = 2 * t * q["grad_pt"] + c_inv * 2 * t * t * sq
        upper = 2 * t * q["pt_grad"] - c_inv * 2 * t * t * sq
        arrays = {
            "C31_1": (q["grad_pt"], q["pt_grad"] - 2 * c_inv * integral),
            "C31_2": (q["grad_pt"], q["pt_grad"] - c_inv * 2 * t * sq),
            "C31_3": _two_sided(lower, q["var"], upper),
        }
        out += _reports(g, idx, t, arrays)
    return sorted(out, key=lambda r: (r.vertex, r.t, r.item))


def verify_corollary32(g: WeightedGraph, f: FieldLike, kappa: float, t_grid: Iterable[float],
                       vertices: Iterable[str] | None = None) -> list[InequalityReport]:
    """CD(inf, kappa) forms: the plain gradient bound and the two-sided variance bound."""
    fa = _positive_array(g, f)
    idx = _vertex_indices(g, vertices)
    flow = _Flow(g, fa)
    out = []
    for t in _grid(t_grid):
        q = flow.at(t)
        co = Coefficients.at(kappa, t)
        arrays = {
            "C32_1": (q["grad_pt"], co.decay * q["pt_grad"]),
            "C32_2": _two_sided(co.var_lower * q["grad_pt"], q["var"], co.var_upper * q["pt_grad"]),
        }
        out += _reports(g, idx, t, arrays)
    return sorted(out, key=lambda r: (r.vertex, r.t, r.item))


def verify_thm32(g: WeightedGraph, f: FieldLike, kappa: float, t_grid: Iterable[float],
                 vertices: Iterable[str] | None = None) -> list[InequalityReport]:
    """Margins of Gamma(sqrt(P_t f)) <= e^{-2 kappa t} P_t Gamma(sqrt f), implied by CDE'(inf, kappa)."""
    fa = _positive_array(g, f)
    idx = _vertex_indices(g, vertices)
    spec = full_spectrum(g)
    root = np.sqrt(fa)
    grad_root = _gam(g, root, root)
    out = []
    for t in _grid(t_grid):
        u = np.sqrt(spec.apply(t, fa))
        lhs = _gam(g, u, u)
        rhs = math.exp(-2.0 * kappa * t) * spec.apply(t, grad_root)
        out += _reports(g, idx, t, {"T32": (lhs, rhs)})
    return sorted(out, key=lambda r: (r.vertex, r.t, r.item))


# ---------------------------------------------------------------- Lemma: s-derivatives


def _functionals(g: WeightedGraph, spec: SpectralDecomposition, f: np.ndarray, t: float, s: float):
    u = spec.apply(t - s, f)
    root = np.sqrt(u)
    return (spec.apply(s, u * u), spec.apply(s, _gam(g, u, u)), spec.apply(s, _gam(g, root, root)))


def _derivatives(g: WeightedGraph, spec: SpectralDecomposition, f: np.ndarray, t: float, s: float):
    u = spec.apply(t - s, f)
    root = np.sqrt(u)
    return (2.0 * spec.apply(s, _gam(g, u, u)),
            2.0 * spec.apply(s, _gam2(g, u, u)),
            2.0 * spec.apply(s, _gam2_tilde(g, root)))


def lemma32_derivative_check(g: WeightedGraph, f: FieldLike, t: float, s_grid: Iterable[float],
                             x: str | None = None, floor: float = 1e-12) -> float:
    """Worst relative error between centred differences and the stated s-derivatives.

    Functionals of s (with u = P_{t-s} f):  P_s(u^2), P_s Gamma(u), P_s Gamma(sqrt u),
    whose derivatives should be 2 P_s Gamma(u), 2 P_s Gamma2(u), 2 P_s Gamma2~(sqrt u).
    Differences use step h = 1e-5 t; errors are divided by max(|exact|, ``floor``).
    """
    fa = _positive_array(g, f)
    if not t > 0:
        raise ValidationError("t must be positive")
    s_vals = [float(s) for s in s_grid]
    if any(not 0 <= s < t for s in s_vals):
        raise ValidationError("need 0 <= s < t")
    spec = full_spectrum(g)
    sel = slice(None) if x is None else [g.index(x)]
    h = 1e-5 * t
    worst = 0.0
    for s in s_vals:
        # the functionals are analytic in s, so s - h < 0 is fine on a finite graph
        plus = _functionals(g, spec, fa, t, s + h)
        minus = _functionals(g, spec, fa, t, s - h)
        exact = _derivatives(g, spec, fa, t, s)
        for p, m, e in zip(plus, minus, exact):
            fd = (p - m) / (2.0 * h)
            err = np.abs(fd - e)[sel] / np.maximum(np.abs(e)[sel], floor)
            worst = max(worst, float(err.max()))
    return worst


# ---------------------------------------------------------------- small-t converse


@dataclass(frozen=True)
class TaylorCheck:
    estimate: float
    reference: float
    rel_err: float  # absolute error when ``absolute`` is set
    absolute: bool

    @property
    def margin(self) -> float:
        """Holds-oriented: >= 0 iff the t^2 coefficient permits the variance bound."""
        return -self.estimate


def taylor_limit_check(g: WeightedGraph, f: FieldLike, n: float, kappa: float, x: str,
                       ts: Sequence[float] = (1e-2, 5e-3, 2.5e-3, 1.25e-3)) -> TaylorCheck:
    """Small-t limit of the variance upper bound, against its t^2 coefficient.

    Estimates lim (P_t f^2 - (P_t f)^2 - var_upper P_t Gamma(f)
    + var_upper_dim/n (P_t Lap f)^2) / t^2 by Richardson extrapolation over
    ``ts`` (each half the previous) and compares with
    -2 Gamma2(f) + 2 kappa Gamma(f) + (2/n)(Lap f)^2 at x. The bound can only
    hold for small t if this is <= 0, which is CD(n, kappa) for this f.
    """
    c_inv = inv_dim(n)
    fa = as_array(g, f)
    i = g.index(x)
    flow = _Flow(g, fa)
    g_vals = []
    for t in ts:
        q = flow.at(t)
        co = Coefficients.at(kappa, t)
        num = q["var"][i] - co.var_upper * q["pt_grad"][i] + c_inv * co.var_upper_dim * q["pt_lap"][i] ** 2
        g_vals.append(num / (t * t))
    # Richardson tableau: level j removes the t^j error term (steps halve)
    row = g_vals
    for j in range(1, len(row)):
        row = [(2.0**j * row[k + 1] - row[k]) / (2.0**j - 1.0) for k in range(len(row) - 1)]
    estimate = float(row[-1])
    lap = flow.lap_f[i]
    reference = float(-2.0 * _gam2(g, fa, fa)[i] + 2.0 * kappa * flow.gam_f[i] + 2.0 * c_inv * lap * lap)
    if abs(reference) < 1e-10:
        return TaylorCheck(estimate, reference, abs(estimate - reference), True)
    return TaylorCheck(estimate, reference, abs(estimate - reference) / abs(reference), False)
