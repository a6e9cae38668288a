"""The Sobolev-gradient estimators, calculus rules at the upper-gradient
level, Sobolev capacity and the definition-equivalence harness."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._solver import solve_capacity, solve_nonneg
from .curve import DiscreteCurve
from .families import CurveFamily, connecting_family, explicit_family
from .lipschitz import asymptotic_slope, is_upper_gradient, path_relax
from .modulus import admissibility_matrix, modulus, optimal_plan
from .plans import Plan, barycenter
from .space import MetricMeasureSpace

__all__ = [
    "GradientResult",
    "CapacityResult",
    "HStep",
    "lp_norm",
    "hop_slope_density",
    "n_gradient",
    "ug_calculus",
    "h_gradient_sequence",
    "w_certificate",
    "capacity",
    "equivalence_report",
]


def lp_norm(space: MetricMeasureSpace, values: Mapping[str, float], p: float) -> float:
    """Measure-weighted p-norm of a vertex function."""
    if math.isinf(p):
        return max(abs(float(values[v])) for v in space.vertices)
    return float(
        sum(abs(float(values[v])) ** p * space.measure[v] for v in space.vertices)
        ** (1.0 / p)
    )


@dataclass
class GradientResult:
    """Minimal-gradient solve outcome.

    ``rho`` is feasible for the family's constraints up to roundoff,
    ``value = sum rho^p m`` is a certified upper bound with relative gap
    ``gap`` and ``p_norm = value ** (1/p)``.
    """

    rho: dict[str, float]
    value: float
    p_norm: float
    family_label: str
    gap: float
    estimator: str
    p: float
    iterations: int
    converged: bool


@dataclass
class CapacityResult:
    value: float
    f: dict[str, float]
    rho: dict[str, float]
    gap: float
    truncated: bool
    iterations: int
    converged: bool


def _increments(f: Mapping[str, float], curves: Sequence[DiscreteCurve]) -> np.ndarray:
    return np.array(
        [abs(float(f[c.end]) - float(f[c.start])) for c in curves]
    )


def n_gradient(
    space: MetricMeasureSpace,
    f: Mapping[str, float],
    family: CurveFamily | Iterable[DiscreteCurve],
    p: float,
    tol: float = 1e-6,
    max_iter: int | None = None,
) -> GradientResult:
    """Least p-energy density dominating the increments of ``f`` along the
    family: minimize ``sum rho^p m`` subject to
    ``|f(end) - f(start)| <= path integral of rho`` for every curve.

    Shares the modulus solver.  Constraints with zero increment are vacuous
    for nonnegative densities and are dropped.  For ``p > 1`` the optimal
    density is unique by strict convexity.
    """
    if not (p >= 1.0 and math.isfinite(p)):
        raise ValueError(f"p must lie in [1, inf), got {p}")
    label = family.label if isinstance(family, CurveFamily) else ""
    A, curves = admissibility_matrix(space, family, lam=0)
    if curves:
        rhs = _increments(f, curves)
        keep = rhs > 0.0
        A, rhs = A[keep], rhs[keep]
    else:
        rhs = np.zeros(0)
    if A.shape[0] == 0:
        zeros = {v: 0.0 for v in space.vertices}
        return GradientResult(zeros, 0.0, 0.0, label, 0.0, "N", p, 0, True)
    res = solve_nonneg(A, rhs, space.measure_vector(), p, tol, max_iter)
    rho = {v: float(res.x[i]) for i, v in enumerate(space.vertices)}
    return GradientResult(
        rho,
        res.value,
        res.value ** (1.0 / p),
        label,
        res.gap,
        "N",
        p,
        res.iterations,
        res.converged,
    )


def hop_slope_density(
    space: MetricMeasureSpace,
    f: Mapping[str, float],
    family: CurveFamily | Iterable[DiscreteCurve],
) -> dict[str, float]:
    """Pointwise-least density dominating every hop of the family at both
    endpoints: ``rho(v) = max |f(u) - f(w)| / d(u, w)`` over hops touching v.

    Hop-level domination is stable under pointwise minima, which is how the
    minimum rule for gradients is exercised at finite scale.
    """
    rho = {v: 0.0 for v in space.vertices}
    for curve in family:
        for u, w in zip(curve.vertices, curve.vertices[1:]):
            ratio = abs(float(f[w]) - float(f[u])) / space.distance(u, w)
            rho[u] = max(rho[u], ratio)
            rho[w] = max(rho[w], ratio)
    return rho


def _hop_check(
    space: MetricMeasureSpace,
    f: Mapping[str, float],
    rho: Mapping[str, float],
    family: CurveFamily | Iterable[DiscreteCurve],
    tol: float,
) -> tuple[bool, DiscreteCurve | None, float]:
    """Per-hop trapezoid domination: every hop increment of ``f`` is covered
    by the endpoint average of ``rho`` times the hop length."""
    worst: DiscreteCurve | None = None
    worst_violation = tol
    for curve in family:
        for u, w in zip(curve.vertices, curve.vertices[1:]):
            lhs = abs(float(f[w]) - float(f[u]))
            rhs = 0.5 * (float(rho[u]) + float(rho[w])) * space.distance(u, w)
            if lhs - rhs > worst_violation:
                worst_violation = lhs - rhs
                worst = curve
    return worst is None, worst, worst_violation


def ug_calculus(
    space: MetricMeasureSpace,
    f: Mapping[str, float],
    g: Mapping[str, float],
    rho_f: Mapping[str, float],
    rho_g: Mapping[str, float],
    phi: "callable",
    family: CurveFamily | Iterable[DiscreteCurve],
    rho_f_alt: Mapping[str, float] | None = None,
    tol: float = 1e-12,
) -> dict:
    """Feasibility checks for the calculus rules at the upper-gradient level.

    Verifies, exactly on the family: the sum rule (``rho_f + rho_g``
    dominates ``f + g``), the chain rule (``Lip(phi) * rho_f`` dominates
    ``phi of f``, with ``Lip(phi)`` taken over the attained values of ``f``),
    the Leibniz rule for bounded factors, and the minimum rule.  The minimum
    rule pairs ``rho_f`` with ``rho_f_alt`` (default: the hop-slope density
    of ``f``) and is checked hop by hop, the finite-scale form under which
    pointwise minima of gradients remain gradients.

    Raises if ``rho_f`` or ``rho_g`` fails its own upper-gradient check.
    """
    curves = list(family)
    ok_f, bad_f = is_upper_gradient(space, f, rho_f, curves, tol)
    ok_g, bad_g = is_upper_gradient(space, g, rho_g, curves, tol)
    if not ok_f or not ok_g:
        raise ValueError("inputs are not upper gradients on the family")

    values = sorted({float(f[v]) for v in space.vertices})
    lip_phi = 0.0
    for i, a in enumerate(values):
        for b in values[i + 1 :]:
            lip_phi = max(lip_phi, abs(phi(b) - phi(a)) / (b - a))

    f_plus_g = {v: float(f[v]) + float(g[v]) for v in space.vertices}
    rho_sum = {v: float(rho_f[v]) + float(rho_g[v]) for v in space.vertices}
    ok_sum, worst_sum = is_upper_gradient(space, f_plus_g, rho_sum, curves, tol)

    phi_f = {v: float(phi(float(f[v]))) for v in space.vertices}
    rho_chain = {v: lip_phi * float(rho_f[v]) for v in space.vertices}
    ok_chain, worst_chain = is_upper_gradient(space, phi_f, rho_chain, curves, tol)

    sup_f = max(abs(float(f[v])) for v in space.vertices)
    sup_g = max(abs(float(g[v])) for v in space.vertices)
    fg = {v: float(f[v]) * float(g[v]) for v in space.vertices}
    rho_leib = {
        v: sup_f * float(rho_g[v]) + sup_g * float(rho_f[v]) for v in space.vertices
    }
    ok_leib, worst_leib = is_upper_gradient(space, fg, rho_leib, curves, tol)

    rho2 = dict(rho_f_alt) if rho_f_alt is not None else hop_slope_density(space, f, curves)
    rho_min = {v: min(float(rho_f[v]), float(rho2[v])) for v in space.vertices}
    ok_min, worst_min, _ = _hop_check(space, f, rho_min, curves, tol)

    return {
        "sum": {"ok": ok_sum, "worst": worst_sum},
        "chain": {"ok": ok_chain, "worst": worst_chain, "lip_phi": lip_phi},
        "leibniz": {"ok": ok_leib, "worst": worst_leib},
        "min": {"ok": ok_min, "worst": worst_min},
    }


@dataclass
class HStep:
    step: int
    sigma: float
    f_n: dict[str, float]
    slope: dict[str, float]
    f_err: float
    slope_err: float
    exact: bool
    slope_bounded: bool


def h_gradient_sequence(
    space: MetricMeasureSpace,
    f: Mapping[str, float],
    p: float,
    family: CurveFamily | Iterable[DiscreteCurve],
    n_steps: int = 3,
    tol: float = 1e-6,
    delta: float | None = None,
    cap: float | None = None,
    sigmas: Sequence[float] | None = None,
    gradient: GradientResult | None = None,
) -> tuple[GradientResult, list[HStep]]:
    """Constructive approximation of ``f`` by relaxations with slacked
    densities ``rho + sigma_n`` decreasing to the minimal gradient.

    Each step runs the shortest-path relaxation of the truncation of ``f``
    with running cost ``rho + sigma_n``, sources everywhere, hop bound
    ``delta`` and cap ``cap``.  When the family contains the one-hop curve of
    every vertex pair within ``delta``, the relaxed function reproduces ``f``
    exactly and its slope is bounded by the neighbor average of the slacked
    density; both facts are reported per step.

    ``delta`` defaults to the longest hop occurring in the family (so the
    relaxation only uses hops the gradient is constrained on) and ``cap`` to
    ``max f``, which must be positive.
    """
    curves = list(family)
    grad = gradient or n_gradient(space, f, curves, p, tol)
    rho = grad.rho
    if delta is None:
        delta = 0.0
        for c in curves:
            for u, w in zip(c.vertices, c.vertices[1:]):
                delta = max(delta, space.distance(u, w))
        if delta <= 0:
            delta = max(space.diameter(), 1.0)
    if cap is None:
        cap = max(float(f[v]) for v in space.vertices)
    if not cap > 0:
        raise ValueError("cap must be positive; shift f to be nonnegative first")
    if sigmas is None:
        sigmas = [2.0 ** (-(n + 1)) for n in range(n_steps)]
    trunc = {v: min(cap, max(0.0, float(f[v]))) for v in space.vertices}

    steps: list[HStep] = []
    for n, sigma in enumerate(sigmas, start=1):
        g_n = {v: rho[v] + sigma for v in space.vertices}
        f_n = path_relax(space, trunc, g_n, space.vertices, delta, cap)
        slope = asymptotic_slope(space, f_n)
        f_err = lp_norm(space, {v: f_n[v] - float(f[v]) for v in space.vertices}, p)
        slope_err = lp_norm(
            space, {v: slope[v] - rho[v] for v in space.vertices}, p
        )
        exact = all(abs(f_n[v] - float(f[v])) <= 1e-12 for v in space.vertices)
        bounded = True
        for v in space.vertices:
            limit = 0.0
            for u, _ in space.neighbors(v):
                limit = max(limit, 0.5 * (g_n[v] + g_n[u]))
            if slope[v] > limit + 1e-12:
                bounded = False
        steps.append(
            HStep(n, float(sigma), f_n, slope, f_err, slope_err, exact, bounded)
        )
    return grad, steps


def w_certificate(
    space: MetricMeasureSpace,
    f: Mapping[str, float],
    g: Mapping[str, float],
    plans: Sequence[Plan],
) -> dict:
    """Integration-by-parts violations of a candidate gradient against plans.

    For each plan computes ``sum_w (f(end) - f(start)) - sum_v Bar(plan) g m``;
    a valid certificate keeps the maximum nonpositive up to solver slack.
    """
    if not plans:
        raise ValueError("w_certificate needs at least one plan")
    per_plan: list[float] = []
    for plan in plans:
        flux = sum(
            w * (float(f[c.end]) - float(f[c.start])) for c, w in plan.support
        )
        bar = barycenter(space, plan, 0).values
        mass = sum(
            bar[v] * float(g[v]) * space.measure[v] for v in space.vertices
        )
        per_plan.append(float(flux - mass))
    return {"max_violation": max(per_plan), "per_plan": per_plan}


def capacity(
    space: MetricMeasureSpace,
    E: Iterable[str],
    family: CurveFamily | Iterable[DiscreteCurve],
    p: float,
    tol: float = 1e-6,
    truncated: bool = False,
    max_iter: int | None = None,
) -> CapacityResult:
    """Least Sobolev p-weight of the vertex set: minimize
    ``sum |f|^p m + sum rho^p m`` over ``f >= 1`` on ``E`` (``0 <= f <= 1``
    and ``f = 1`` on ``E`` in truncated mode) with ``rho`` dominating the
    increments of ``f`` along the family.

    Empty ``E`` has capacity 0.  Pointwise maxima of witnesses certify
    monotonicity and finite subadditivity at solver tolerance.
    """
    target = space.check_subset(E)
    n = len(space)
    if not target:
        zeros = {v: 0.0 for v in space.vertices}
        return CapacityResult(0.0, zeros, dict(zeros), 0.0, truncated, 0, True)
    if not (p >= 1.0 and math.isfinite(p)):
        raise ValueError(f"p must lie in [1, inf), got {p}")

    curves = [c for c in family if not c.is_constant]
    A, _ = admissibility_matrix(space, explicit_family(curves), lam=0)
    idx = space.index
    a_idx = np.array([idx[c.start] for c in curves], dtype=int)
    b_idx = np.array([idx[c.end] for c in curves], dtype=int)
    lo = np.array([1.0 if v in target else 0.0 for v in space.vertices])
    hi = (
        np.ones(n)
        if truncated
        else np.full(n, math.inf)
    )
    res = solve_capacity(
        A, a_idx, b_idx, space.measure_vector(), p, lo, hi, tol, max_iter
    )
    f = {v: float(res.f[i]) for i, v in enumerate(space.vertices)}
    rho = {v: float(res.rho[i]) for i, v in enumerate(space.vertices)}
    return CapacityResult(
        res.value, f, rho, res.gap, truncated, res.iterations, res.converged
    )


def _harness_family(
    space: MetricMeasureSpace, max_hops: int, delta: float
) -> CurveFamily:
    """Edge walks up to ``max_hops`` plus the one-hop curve of every vertex
    pair within ``delta``, so relaxation hops are exactly constrained."""
    from .curve import make_curve

    walks = connecting_family(space, space.vertices, space.vertices, max_hops)
    pairs = []
    for u in space.vertices:
        for v in space.vertices:
            if u != v and space.distance(u, v) <= delta:
                pairs.append(make_curve(space, (u, v)))
    fam = walks.union(explicit_family(pairs), label=f"harness(h<={max_hops})")
    return fam.normalized()


def equivalence_report(
    space: MetricMeasureSpace,
    f: Mapping[str, float],
    p: float,
    max_hops: int = 3,
    tol: float = 1e-6,
) -> dict:
    """Numerically exercise the agreement of the gradient estimators.

    Computes the minimal-gradient density over a hop-bounded family, runs the
    constructive relaxation sequence, extracts optimal plans from the modulus
    of subfamilies and certifies the integration-by-parts inequality against
    them.  Returns a flat report with every diagnostic and gap; ``f`` is
    shifted to be nonnegative first (increments are shift-invariant).
    """
    fmin = min(float(f[v]) for v in space.vertices)
    f0 = {v: float(f[v]) - fmin for v in space.vertices}
    fmax = max(f0.values())
    if fmax <= 0:
        zeros = {v: 0.0 for v in space.vertices}
        return {
            "p": p,
            "constant": True,
            "rho_N": zeros,
            "n_value": 0.0,
            "n_norm": 0.0,
            "n_gap": 0.0,
            "h_steps": [],
            "h_exact": True,
            "h_slope_bounded": True,
            "h_terminal_slope_err": 0.0,
            "w_max_violation": 0.0,
            "subfamilies": [],
            "family_size": 0,
        }

    delta = space.max_edge_distance()
    if delta <= 0:
        delta = max(space.diameter(), 1.0)
    fam = _harness_family(space, max_hops, delta)
    grad = n_gradient(space, f0, fam, p, tol)
    grad_steps = h_gradient_sequence(
        space,
        f0,
        p,
        fam,
        n_steps=3,
        tol=tol,
        delta=delta,
        cap=fmax,
        gradient=grad,
    )[1]

    q = p / (p - 1.0) if p > 1 else math.inf
    plans: list[Plan] = []
    subfamilies: list[dict] = []
    nonconstant = [c for c in fam if not c.is_constant]
    chunk = max(1, min(15, len(nonconstant)))
    starts = [0, len(nonconstant) // 2, max(0, len(nonconstant) - chunk)]
    seen: set[int] = set()
    for s in starts:
        if s in seen:
            continue
        seen.add(s)
        sub = explicit_family(nonconstant[s : s + chunk], label=f"sub@{s}")
        res = modulus(space, sub, p, lam=0, tol=tol)
        entry = {
            "label": sub.label,
            "value": res.value,
            "gap": res.gap,
            "converged": res.converged,
            "duality_product": None,
        }
        if res.converged and 0.0 < res.value < math.inf:
            plan = optimal_plan(res, sub)
            plans.append(plan)
            bar = barycenter(space, plan, 0)
            entry["duality_product"] = bar.q_norm(space, q) * res.value ** (1.0 / p)
        subfamilies.append(entry)

    wreport = (
        w_certificate(space, f0, grad.rho, plans)
        if plans
        else {"max_violation": 0.0, "per_plan": []}
    )
    terminal = grad_steps[-1]
    return {
        "p": p,
        "constant": False,
        "rho_N": grad.rho,
        "n_value": grad.value,
        "n_norm": grad.p_norm,
        "n_gap": grad.gap,
        "h_steps": [
            {
                "step": s.step,
                "sigma": s.sigma,
                "f_err": s.f_err,
                "slope_err": s.slope_err,
                "exact": s.exact,
                "slope_bounded": s.slope_bounded,
            }
            for s in grad_steps
        ],
        "h_exact": all(s.exact for s in grad_steps),
        "h_slope_bounded": all(s.slope_bounded for s in grad_steps),
        "h_terminal_slope_err": terminal.slope_err,
        "w_max_violation": wreport["max_violation"],
        "subfamilies": subfamilies,
        "family_size": len(fam),
    }
