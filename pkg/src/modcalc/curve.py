"""Parametrized discrete curves: length, reparametrization, path integrals,
signed variation and the exact path-level integration-by-parts identity."""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Mapping, Sequence

from .space import MetricMeasureSpace

__all__ = [
    "CurveError",
    "DiscreteCurve",
    "AtomicMeasureOnCurve",
    "make_curve",
    "validate_curve",
    "length",
    "cs_reparam",
    "path_integral",
    "variation_measures",
    "stieltjes",
    "ibp_identity",
    "restrict",
    "q_energy",
    "curve_to_json",
    "curve_from_json",
]


class CurveError(ValueError):
    """A curve violates one of the structural invariants."""


@dataclass(frozen=True)
class DiscreteCurve:
    """A time-stamped vertex sequence.

    ``times`` are strictly increasing breakpoint times; consecutive vertices
    must be distinct (no zero-length hops) and at finite distance.  A single
    breakpoint encodes the constant curve.  Between breakpoints the curve is
    understood as a metric hop of length ``d(p_i, p_{i+1})``; hops are not
    required to follow graph edges.
    """

    times: tuple[float, ...]
    vertices: tuple[str, ...]

    @property
    def is_constant(self) -> bool:
        return len(self.vertices) == 1

    @property
    def start(self) -> str:
        return self.vertices[0]

    @property
    def end(self) -> str:
        return self.vertices[-1]

    @property
    def n_hops(self) -> int:
        return len(self.vertices) - 1

    @property
    def domain(self) -> tuple[float, float]:
        return (self.times[0], self.times[-1])

    def reversed(self) -> "DiscreteCurve":
        """Same trace walked backwards, over the same time interval."""
        a, b = self.times[0], self.times[-1]
        rev_times = tuple(a + b - t for t in reversed(self.times))
        return DiscreteCurve(rev_times, tuple(reversed(self.vertices)))

    def with_times(self, times: Sequence[float]) -> "DiscreteCurve":
        new = tuple(float(t) for t in times)
        if len(new) != len(self.vertices):
            raise CurveError("retiming must keep the number of breakpoints")
        if any(b <= a for a, b in zip(new, new[1:])):
            raise CurveError("breakpoint times must be strictly increasing")
        return DiscreteCurve(new, self.vertices)


@dataclass(frozen=True)
class AtomicMeasureOnCurve:
    """Signed atomic measure indexed by curve breakpoints."""

    atoms: tuple[float, ...]

    def total(self) -> float:
        return float(sum(self.atoms))

    def total_variation(self) -> float:
        return float(sum(abs(a) for a in self.atoms))

    def by_vertex(self, curve: DiscreteCurve) -> dict[str, float]:
        """Aggregate atom masses onto the vertices they sit at."""
        out: dict[str, float] = {}
        for v, a in zip(curve.vertices, self.atoms):
            out[v] = out.get(v, 0.0) + a
        return out


def validate_curve(space: MetricMeasureSpace, curve: DiscreteCurve) -> None:
    if len(curve.times) != len(curve.vertices) or not curve.vertices:
        raise CurveError("times and vertices must align and be nonempty")
    for v in curve.vertices:
        if v not in space:
            raise CurveError(f"unknown vertex {v!r}")
    for t in curve.times:
        if not math.isfinite(t):
            raise CurveError("breakpoint times must be finite")
    for a, b in zip(curve.times, curve.times[1:]):
        if not b > a:
            raise CurveError("breakpoint times must be strictly increasing")
    for u, v in zip(curve.vertices, curve.vertices[1:]):
        if u == v:
            raise CurveError(f"zero-length hop at {u!r}")
        if not math.isfinite(space.distance(u, v)):
            raise CurveError(f"hop {u!r}->{v!r} crosses components")


def make_curve(
    space: MetricMeasureSpace,
    vertices: Sequence[str],
    times: Sequence[float] | None = None,
) -> DiscreteCurve:
    """Build a validated curve; omitted times default to constant-speed on [0,1]."""
    vs = tuple(str(v) for v in vertices)
    if times is None:
        curve = DiscreteCurve(tuple(float(i) for i in range(max(len(vs), 1))), vs)
        if len(vs) == 1:
            curve = DiscreteCurve((0.0,), vs)
            validate_curve(space, curve)
            return curve
        validate_curve(space, curve)
        return cs_reparam(space, curve)
    curve = DiscreteCurve(tuple(float(t) for t in times), vs)
    validate_curve(space, curve)
    return curve


def _hop_lengths(space: MetricMeasureSpace, curve: DiscreteCurve) -> list[float]:
    return [
        space.distance(u, v) for u, v in zip(curve.vertices, curve.vertices[1:])
    ]


def length(space: MetricMeasureSpace, curve: DiscreteCurve) -> float:
    """Total variation of the curve: the sum of its hop lengths."""
    return float(sum(_hop_lengths(space, curve)))


def cs_reparam(space: MetricMeasureSpace, curve: DiscreteCurve) -> DiscreteCurve:
    """Constant-speed reparametrization onto [0, 1].

    Breakpoint times become cumulative-length fractions, so every piece has
    metric speed equal to the total length.  The constant curve maps to the
    constant curve.  Applying the map twice reproduces identical times.
    """
    if curve.is_constant:
        return DiscreteCurve((0.0,), curve.vertices)
    hops = _hop_lengths(space, curve)
    total = sum(hops)
    times = [0.0]
    acc = 0.0
    for d in hops:
        acc += d
        times.append(acc / total)
    times[-1] = 1.0
    if any(b <= a for a, b in zip(times, times[1:])):
        raise CurveError("hop lengths too disparate for a float time grid")
    return DiscreteCurve(tuple(times), curve.vertices)


def path_integral(
    space: MetricMeasureSpace, curve: DiscreteCurve, rho: Mapping[str, float]
) -> float:
    """Trapezoid path integral of a nonnegative density along the curve.

    Each hop contributes the endpoint average of ``rho`` times the hop length;
    ``+inf`` values propagate.  The value is invariant under retiming, linear
    in ``rho`` and additive over concatenation.
    """
    total = 0.0
    for u, v in zip(curve.vertices, curve.vertices[1:]):
        ru, rv = float(rho[u]), float(rho[v])
        if ru < 0 or rv < 0:
            raise CurveError("density must be nonnegative")
        if math.isinf(ru) or math.isinf(rv):
            return math.inf
        total += 0.5 * (ru + rv) * space.distance(u, v)
    return total


def variation_measures(
    space: MetricMeasureSpace, curve: DiscreteCurve, f: Mapping[str, float]
) -> tuple[AtomicMeasureOnCurve, AtomicMeasureOnCurve, AtomicMeasureOnCurve]:
    """Arc-length and signed-variation atoms of the curve and of ``f`` along it.

    Returns ``(s_curve, mu_f, s_f)``: the arc-length atoms (half of each
    adjacent hop length per breakpoint), the signed increments of ``f``
    attributed half to each hop endpoint, and their absolute-value
    counterpart.  ``|mu_f| <= s_f`` holds atom by atom, and ``s_f <= L s_curve``
    whenever ``f`` has hop slopes bounded by ``L``.
    """
    n = len(curve.vertices)
    hops = _hop_lengths(space, curve)
    increments = [
        float(f[v]) - float(f[u]) for u, v in zip(curve.vertices, curve.vertices[1:])
    ]
    s_atoms = [0.0] * n
    mu_atoms = [0.0] * n
    sf_atoms = [0.0] * n
    for i in range(n - 1):
        s_atoms[i] += 0.5 * hops[i]
        s_atoms[i + 1] += 0.5 * hops[i]
        mu_atoms[i] += 0.5 * increments[i]
        mu_atoms[i + 1] += 0.5 * increments[i]
        sf_atoms[i] += 0.5 * abs(increments[i])
        sf_atoms[i + 1] += 0.5 * abs(increments[i])
    return (
        AtomicMeasureOnCurve(tuple(s_atoms)),
        AtomicMeasureOnCurve(tuple(mu_atoms)),
        AtomicMeasureOnCurve(tuple(sf_atoms)),
    )


def stieltjes(
    curve: DiscreteCurve,
    a: Mapping[str, float],
    f: Mapping[str, float],
    rule: str = "left",
) -> float:
    """Discrete Riemann-Stieltjes sum of ``a`` against the increments of ``f``.

    ``left`` evaluates ``a`` at the hop start, ``right`` at the hop end.
    """
    if rule not in ("left", "right"):
        raise CurveError(f"unknown rule {rule!r}")
    total = 0.0
    for u, v in zip(curve.vertices, curve.vertices[1:]):
        inc = float(f[v]) - float(f[u])
        total += float(a[u if rule == "left" else v]) * inc
    return total


def ibp_identity(
    curve: DiscreteCurve, f1: Mapping[str, float], f2: Mapping[str, float]
) -> tuple[float, float, float]:
    """Mixed-rule integration by parts along the curve.

    Returns ``(T12, T21, boundary)`` where ``T12`` is the left-rule sum of
    ``f1`` against ``f2``, ``T21`` the right-rule sum of ``f2`` against ``f1``
    and ``boundary = (f1 f2)(end) - (f1 f2)(start)``.  Abel summation makes
    ``boundary = T12 + T21`` hold exactly; this is the unique left/right
    pairing with that property.
    """
    t12 = stieltjes(curve, f1, f2, "left")
    t21 = stieltjes(curve, f2, f1, "right")
    boundary = float(f1[curve.end]) * float(f2[curve.end]) - float(
        f1[curve.start]
    ) * float(f2[curve.start])
    return t12, t21, boundary


def restrict(
    space: MetricMeasureSpace, curve: DiscreteCurve, s: float, t: float
) -> DiscreteCurve:
    """Subcurve between two breakpoint times, affinely rescaled to [0, 1].

    Only breakpoint times are accepted: vertices are the only evaluation
    sites in the discrete model, so mid-hop splitting is rejected.
    """
    if curve.is_constant:
        raise CurveError("cannot restrict the constant curve")
    span = curve.times[-1] - curve.times[0]

    def locate(x: float) -> int:
        for i, tt in enumerate(curve.times):
            if x == tt or abs(x - tt) <= 1e-12 * max(1.0, abs(span)):
                return i
        raise CurveError(f"{x!r} is not a breakpoint time")

    i, j = locate(s), locate(t)
    if i >= j:
        raise CurveError("restriction needs s < t")
    lo, hi = curve.times[i], curve.times[j]
    times = tuple((x - lo) / (hi - lo) for x in curve.times[i : j + 1])
    times = (0.0,) + times[1:-1] + (1.0,)
    return DiscreteCurve(times, curve.vertices[i : j + 1])


def q_energy(space: MetricMeasureSpace, curve: DiscreteCurve, q: float) -> float:
    """q-energy of a curve parametrized on [0, 1].

    For finite ``q`` this is the time integral of the piecewise metric speed
    raised to ``q``; for ``q = inf`` it is the maximal speed.  Constant-speed
    curves give ``length ** q``.
    """
    if q < 1:
        raise CurveError(f"q must be at least 1, got {q}")
    if curve.is_constant:
        return 0.0
    t0, t1 = curve.domain
    if abs(t0) > 1e-12 or abs(t1 - 1.0) > 1e-12:
        raise CurveError("q_energy needs a curve parametrized on [0, 1]")
    hops = _hop_lengths(space, curve)
    speeds = [
        d / (b - a) for d, a, b in zip(hops, curve.times, curve.times[1:])
    ]
    if math.isinf(q):
        return max(speeds)
    return float(
        sum(s**q * (b - a) for s, a, b in zip(speeds, curve.times, curve.times[1:]))
    )


def vertex_at(curve: DiscreteCurve, t: float) -> str:
    """Vertex of the breakpoint nearest in time to ``t`` (ties to the earlier one)."""
    times = curve.times
    i = bisect_left(times, t)
    if i == 0:
        return curve.vertices[0]
    if i == len(times):
        return curve.vertices[-1]
    before, after = times[i - 1], times[i]
    if t - before <= after - t:
        return curve.vertices[i - 1]
    return curve.vertices[i]


def curve_to_json(curve: DiscreteCurve) -> dict:
    return {"times": list(curve.times), "vertices": list(curve.vertices)}


def curve_from_json(space: MetricMeasureSpace, obj: Mapping) -> DiscreteCurve:
    """Parse ``{"times": [...], "vertices": [...]}``; omitted times mean
    constant-speed parametrization on [0, 1]."""
    try:
        vertices = [str(v) for v in obj["vertices"]]
    except (KeyError, TypeError) as exc:
        raise CurveError(f"malformed curve description: {exc}") from exc
    times = obj.get("times")
    if times is not None:
        times = [float(t) for t in times]
    return make_curve(space, vertices, times)
