"""Construction and enumeration of finite curve families used as constraint sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping

from .curve import CurveError, DiscreteCurve, curve_from_json, curve_to_json, make_curve
from .space import MetricMeasureSpace, SpaceError

__all__ = [
    "CurveFamily",
    "connecting_family",
    "family_through",
    "endpoints_in",
    "explicit_family",
    "family_from_json",
    "family_to_json",
]


@dataclass(frozen=True)
class CurveFamily:
    """A finite list of curves with a label.

    Duplicates are permitted; ``normalized`` deduplicates by vertex sequence
    and sorts lexicographically so enumeration order is deterministic.
    """

    curves: tuple[DiscreteCurve, ...]
    label: str = ""

    def __iter__(self) -> Iterator[DiscreteCurve]:
        return iter(self.curves)

    def __len__(self) -> int:
        return len(self.curves)

    def normalized(self) -> "CurveFamily":
        seen: dict[tuple[str, ...], DiscreteCurve] = {}
        for c in self.curves:
            seen.setdefault(c.vertices, c)
        ordered = tuple(seen[k] for k in sorted(seen))
        return CurveFamily(ordered, self.label)

    def union(self, other: "CurveFamily", label: str = "") -> "CurveFamily":
        return CurveFamily(self.curves + other.curves, label or self.label)

    def subfamily(self, pick: Callable[[DiscreteCurve], bool], label: str = "") -> "CurveFamily":
        return CurveFamily(tuple(c for c in self.curves if pick(c)), label)


def _walks(
    space: MetricMeasureSpace,
    starts: Iterable[str],
    max_hops: int,
    simple_only: bool,
    accept: Callable[[tuple[str, ...]], bool],
) -> list[tuple[str, ...]]:
    """Depth-first enumeration of edge walks, deterministic by sorted neighbors."""
    out: list[tuple[str, ...]] = []

    def extend(seq: list[str]) -> None:
        if len(seq) > 1 and accept(tuple(seq)):
            out.append(tuple(seq))
        if len(seq) - 1 >= max_hops:
            return
        for v, _ in space.neighbors(seq[-1]):
            if simple_only and v in seq:
                continue
            seq.append(v)
            extend(seq)
            seq.pop()

    for s in sorted(set(starts)):
        extend([s])
    return sorted(set(out))


def connecting_family(
    space: MetricMeasureSpace,
    E: Iterable[str],
    F: Iterable[str],
    max_hops: int,
    simple_only: bool = False,
) -> CurveFamily:
    """All edge walks (or simple paths) from ``E`` to ``F`` with at most
    ``max_hops`` hops, constant-speed parametrized on [0, 1].

    Constant curves are never included; the family may be empty.
    """
    src = space.check_subset(E)
    dst = space.check_subset(F)
    if not src or not dst:
        raise SpaceError("connecting_family needs nonempty endpoint sets")
    if max_hops < 1:
        raise SpaceError("max_hops must be at least 1")
    seqs = _walks(space, src, max_hops, simple_only, lambda s: s[-1] in dst)
    curves = tuple(make_curve(space, s) for s in seqs)
    return CurveFamily(curves, label=f"connect({len(src)}->{len(dst)},h<={max_hops})")


def family_through(
    space: MetricMeasureSpace, E: Iterable[str], max_hops: int
) -> CurveFamily:
    """All nonconstant simple paths with at most ``max_hops`` hops that
    intersect ``E``."""
    if max_hops < 1:
        raise SpaceError("max_hops must be at least 1")
    target = space.check_subset(E)
    if not target:
        return CurveFamily((), label="through(empty)")
    seqs = _walks(
        space,
        space.vertices,
        max_hops,
        True,
        lambda s: any(v in target for v in s),
    )
    curves = tuple(make_curve(space, s) for s in seqs)
    return CurveFamily(curves, label=f"through({len(target)},h<={max_hops})")


def endpoints_in(
    space: MetricMeasureSpace, E: Iterable[str], max_hops: int
) -> CurveFamily:
    """Edge walks with both endpoints in ``E``, plus the constant curves at
    vertices of ``E``.

    This is the one constructor that includes constant curves, so the
    infinite-modulus branch of the admissibility convention is exercised.
    """
    if max_hops < 1:
        raise SpaceError("max_hops must be at least 1")
    anchor = space.check_subset(E)
    if not anchor:
        return CurveFamily((), label="endpoints(empty)")
    seqs = _walks(
        space, anchor, max_hops, False, lambda s: s[-1] in anchor
    )
    curves = [make_curve(space, (v,)) for v in sorted(anchor)]
    curves.extend(make_curve(space, s) for s in seqs)
    return CurveFamily(tuple(curves), label=f"endpoints({len(anchor)},h<={max_hops})")


def explicit_family(curves: Iterable[DiscreteCurve], label: str = "explicit") -> CurveFamily:
    return CurveFamily(tuple(curves), label)


def family_from_json(space: MetricMeasureSpace, obj: Mapping) -> CurveFamily:
    """Parse a family description.

    Shapes: ``{"type": "connecting"|"through"|"endpoints", "E": [...],
    "F": [...], "max_hops": int, "simple": bool}`` or
    ``{"type": "explicit", "curves": [...]}``.
    """
    try:
        kind = obj["type"]
    except (KeyError, TypeError) as exc:
        raise CurveError(f"malformed family description: {exc}") from exc
    if kind == "explicit":
        curves = [curve_from_json(space, c) for c in obj.get("curves", [])]
        return explicit_family(curves)
    max_hops = int(obj.get("max_hops", 1))
    E = [str(v) for v in obj.get("E", [])]
    if kind == "connecting":
        F = [str(v) for v in obj.get("F", [])]
        fam = connecting_family(
            space, E, F, max_hops, bool(obj.get("simple", False))
        )
    elif kind == "through":
        fam = family_through(space, E, max_hops)
    elif kind == "endpoints":
        fam = endpoints_in(space, E, max_hops)
    else:
        raise CurveError(f"unknown family type {kind!r}")
    return fam.normalized()


def family_to_json(family: CurveFamily) -> dict:
    return {
        "type": "explicit",
        "curves": [curve_to_json(c) for c in family.curves],
    }
