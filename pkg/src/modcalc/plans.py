"""Finitely supported plans: barycenters, compression, energy, test-plan
verification and plan-induced derivations with exact divergence."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .curve import (
    DiscreteCurve,
    cs_reparam,
    curve_from_json,
    curve_to_json,
    q_energy,
    variation_measures,
    vertex_at,
)
from .lipschitz import asymptotic_slope
from .space import MetricMeasureSpace

__all__ = [
    "PlanError",
    "Plan",
    "BarycenterDensity",
    "point_mass",
    "barycenter",
    "parametric_barycenter",
    "compression",
    "energy",
    "is_test_plan",
    "plan_derivation",
    "derivation_norm_bound",
    "restrict_plan",
    "plan_from_json",
    "plan_to_json",
]

_MASS_TOL = 1e-12


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Plan:
    """A finite weighted collection of curves parametrized on [0, 1].

    Weights are strictly positive.  The plan is a probability plan when its
    total mass is 1 within 1e-12.
    """

    support: tuple[tuple[DiscreteCurve, float], ...]

    def __post_init__(self) -> None:
        for curve, w in self.support:
            if not (w > 0) or not math.isfinite(w):
                raise PlanError(f"plan weight must be positive and finite, got {w}")
            if not curve.is_constant:
                t0, t1 = curve.domain
                if abs(t0) > _MASS_TOL or abs(t1 - 1.0) > _MASS_TOL:
                    raise PlanError("plan curves must be parametrized on [0, 1]")

    @property
    def mass(self) -> float:
        return float(sum(w for _, w in self.support))

    @property
    def is_probability(self) -> bool:
        return abs(self.mass - 1.0) <= _MASS_TOL

    def __len__(self) -> int:
        return len(self.support)

    def normalized(self) -> "Plan":
        total = self.mass
        if total <= 0:
            raise PlanError("cannot normalize an empty plan")
        return Plan(tuple((c, w / total) for c, w in self.support))

    def scaled(self, factor: float) -> "Plan":
        if not factor > 0:
            raise PlanError("scaling factor must be positive")
        return Plan(tuple((c, w * factor) for c, w in self.support))


def point_mass(curve: DiscreteCurve, weight: float = 1.0) -> Plan:
    return Plan(((curve, weight),))


@dataclass(frozen=True)
class BarycenterDensity:
    """Density of the plan's aggregated arc-length (plus endpoint) mass."""

    values: Mapping[str, float]
    lam: int

    def q_norm(self, space: MetricMeasureSpace, q: float) -> float:
        if math.isinf(q):
            return max(self.values[v] for v in space.vertices)
        return float(
            sum(self.values[v] ** q * space.measure[v] for v in space.vertices)
            ** (1.0 / q)
        )


def barycenter(space: MetricMeasureSpace, plan: Plan, lam: int = 0) -> BarycenterDensity:
    """Exact atomic density of the plan against the vertex measure.

    ``values[v] * m(v)`` equals the weighted arc-length atoms sitting at
    ``v`` plus, for ``lam = 1``, the endpoint masses.
    """
    if lam not in (0, 1):
        raise PlanError(f"lambda must be 0 or 1, got {lam}")
    acc = {v: 0.0 for v in space.vertices}
    f0 = {v: 0.0 for v in space.vertices}
    for curve, w in plan.support:
        s_atoms, _, _ = variation_measures(space, curve, f0)
        for v, a in s_atoms.by_vertex(curve).items():
            acc[v] += w * a
        if lam == 1:
            acc[curve.start] += w
            acc[curve.end] += w
    return BarycenterDensity(
        {v: acc[v] / space.measure[v] for v in space.vertices}, lam
    )


def _grid_pushforwards(
    space: MetricMeasureSpace, plan: Plan, n_grid: int
) -> list[dict[str, float]]:
    """Vertex masses of the evaluation maps at grid times j/n after
    constant-speed resampling; the snap rule picks the breakpoint nearest in
    time (ties to the earlier one)."""
    if n_grid < 1:
        raise PlanError("n_grid must be at least 1")
    resampled = [(cs_reparam(space, c), w) for c, w in plan.support]
    out: list[dict[str, float]] = []
    for j in range(n_grid + 1):
        t = j / n_grid
        masses: dict[str, float] = {}
        for c, w in resampled:
            v = vertex_at(c, t)
            masses[v] = masses.get(v, 0.0) + w
        out.append(masses)
    return out


def compression(space: MetricMeasureSpace, plan: Plan, n_grid: int = 64) -> float:
    """Largest ratio of an evaluation-map mass to the vertex measure.

    A grid-resolution-tagged quantity: mid-hop positions are undefined on a
    graph, so curves are resampled at ``n_grid + 1`` uniform times and each
    time snaps to the nearest breakpoint.
    """
    best = 0.0
    for masses in _grid_pushforwards(space, plan, n_grid):
        for v, massv in masses.items():
            best = max(best, massv / space.measure[v])
    return best


def parametric_barycenter(
    space: MetricMeasureSpace, plan: Plan, lam: int = 0, n_grid: int = 64
) -> BarycenterDensity:
    """Grid version of the barycenter built from evaluation-map masses,
    trapezoid-weighted over the uniform grid.  Grid-dependent by contract."""
    if lam not in (0, 1):
        raise PlanError(f"lambda must be 0 or 1, got {lam}")
    acc = {v: 0.0 for v in space.vertices}
    pushes = _grid_pushforwards(space, plan, n_grid)
    for j, masses in enumerate(pushes):
        wt = (0.5 if j in (0, n_grid) else 1.0) / n_grid
        for v, massv in masses.items():
            acc[v] += wt * massv
    if lam == 1:
        for c, w in plan.support:
            acc[c.start] += w
            acc[c.end] += w
    return BarycenterDensity(
        {v: acc[v] / space.measure[v] for v in space.vertices}, lam
    )


def energy(space: MetricMeasureSpace, plan: Plan, q: float) -> float:
    """Plan energy: weighted q-energies of the support curves, the maximum
    over the support for ``q = inf``."""
    if not q > 1:
        raise PlanError(f"q must lie in (1, inf], got {q}")
    if math.isinf(q):
        return max((q_energy(space, c, q) for c, _ in plan.support), default=0.0)
    return float(sum(w * q_energy(space, c, q) for c, w in plan.support))


def is_test_plan(
    space: MetricMeasureSpace, plan: Plan, q: float, n_grid: int = 64
) -> tuple[bool, float, float]:
    """Probability mass, finite compression and finite q-energy.

    Returns ``(verdict, compression, energy)``.
    """
    comp = compression(space, plan, n_grid)
    eq = energy(space, plan, q)
    ok = plan.is_probability and math.isfinite(comp) and math.isfinite(eq)
    return ok, comp, eq


def plan_derivation(
    space: MetricMeasureSpace, plan: Plan, f: Mapping[str, float]
) -> tuple[dict[str, float], dict[str, float]]:
    """Derivation induced by the plan acting on ``f``, with its divergence.

    ``b(v) m(v)`` aggregates the signed increments of ``f`` along the support
    curves with half-half endpoint attribution; ``div = (start
    distribution) - (end distribution)``.  The identity

        sum_v b(v) m(v) = sum_curves w (f(end) - f(start)) = - sum_v f(v) div(v)

    holds exactly by telescoping.
    """
    b = {v: 0.0 for v in space.vertices}
    div = {v: 0.0 for v in space.vertices}
    for curve, w in plan.support:
        _, mu, _ = variation_measures(space, curve, f)
        for v, a in mu.by_vertex(curve).items():
            b[v] += w * a
        div[curve.start] += w
        div[curve.end] -= w
    return {v: b[v] / space.measure[v] for v in space.vertices}, div


def derivation_norm_bound(
    space: MetricMeasureSpace,
    plan: Plan,
    f: Mapping[str, float],
    tol: float = 1e-12,
) -> dict:
    """Verify ``|b(v)| <= Bar(plan)(v) * slope(f)(v)`` vertex by vertex.

    The bound is guaranteed for plans whose curves hop along graph edges
    (every hop is then seen by the slope at both endpoints).  Returns the
    worst ratio over vertices where the bound is positive and lists any
    violations.
    """
    b, _ = plan_derivation(space, plan, f)
    bar = barycenter(space, plan, 0).values
    slope = asymptotic_slope(space, f)
    max_ratio = 0.0
    violations: list[str] = []
    for v in space.vertices:
        bound = bar[v] * slope[v]
        if bound > 0:
            max_ratio = max(max_ratio, abs(b[v]) / bound)
            if abs(b[v]) > bound + tol:
                violations.append(v)
        elif abs(b[v]) > tol:
            violations.append(v)
    return {"ok": not violations, "max_ratio": max_ratio, "violations": violations}


def restrict_plan(
    plan: Plan, keep: Callable[[DiscreteCurve], bool] | Iterable[DiscreteCurve]
) -> tuple[Plan, float]:
    """Restrict to a subfamily and renormalize to a probability plan.

    Returns the renormalized plan together with the retained mass.  The
    compression of the result is at most ``compression(plan) / mass``.
    """
    if callable(keep):
        pick = keep
    else:
        allowed = {c.vertices for c in keep}
        pick = lambda c: c.vertices in allowed  # noqa: E731
    kept = tuple((c, w) for c, w in plan.support if pick(c))
    mass = float(sum(w for _, w in kept))
    if mass <= 0:
        raise PlanError("restriction has zero mass")
    return Plan(tuple((c, w / mass) for c, w in kept)), mass


def plan_from_json(space: MetricMeasureSpace, obj: Mapping) -> Plan:
    try:
        items = obj["support"]
    except (KeyError, TypeError) as exc:
        raise PlanError(f"malformed plan description: {exc}") from exc
    support = []
    for item in items:
        curve = curve_from_json(space, item["curve"])
        support.append((curve, float(item["w"])))
    return Plan(tuple(support))


def plan_to_json(plan: Plan) -> dict:
    return {
        "support": [
            {"curve": curve_to_json(c), "w": w} for c, w in plan.support
        ]
    }
