"""Value types for recovered geometry, shared by the forward and inverse sides."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence


def _flip_to_nonnegative(cosines: Sequence[float]) -> tuple[float, ...]:
    """Apply the global sign that makes the first nonzero cosine non-negative."""
    for c in cosines:
        if c != 0.0:
            if c < 0.0:
                return tuple(-x + 0.0 for x in cosines)
            break
    return tuple(float(x) for x in cosines)


@dataclass(frozen=True)
class ExceptionalComponent:
    """A chain of boundary arcs delimited by exceptional angles.

    ``cosines[i]`` is the (non-exceptional) angle cosine between
    ``arc_lengths[i]`` and ``arc_lengths[i + 1]``; both vectors are only
    meaningful up to reversal and a global sign, so instances built with
    :meth:`canonical` store one fixed representative.
    """

    arc_lengths: tuple[float, ...]
    cosines: tuple[float, ...]
    parity: str  # "even" | "odd"

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if len(self.cosines) != max(len(self.arc_lengths) - 1, 0):
            raise ValueError("a component with p arcs carries p - 1 cosines")

    @classmethod
    def canonical(cls, arc_lengths, cosines, parity) -> "ExceptionalComponent":
        fwd = (tuple(float(x) for x in arc_lengths), _flip_to_nonnegative(cosines))
        bwd = (tuple(float(x) for x in reversed(arc_lengths)),
               _flip_to_nonnegative(tuple(reversed(cosines))))
        lengths, cos = min(fwd, bwd)
        return cls(lengths, cos, parity)

    @property
    def total_length(self) -> float:
        return float(sum(self.arc_lengths))

    def to_dict(self) -> dict:
        return {"arc_lengths": list(self.arc_lengths), "cosines": list(self.cosines),
                "parity": self.parity}

    @classmethod
    def from_dict(cls, d: dict) -> "ExceptionalComponent":
        return cls(tuple(map(float, d["arc_lengths"])), tuple(map(float, d.get("cosines", []))),
                   d["parity"])


@dataclass(frozen=True)
class GeometryResult:
    """Geometric data recoverable from a characteristic polynomial.

    Exactly one of two shapes is populated: ``K == 0`` fills
    ``ordered_lengths``/``cosines``; ``K >= 1`` fills ``components``.
    ``underdetermined`` marks inputs whose polynomial cannot pin down the
    full side data (then ``invariants`` lists what *is* determined).
    """

    n: int
    K: int
    ordered_lengths: Optional[tuple[float, ...]] = None
    cosines: Optional[tuple[float, ...]] = None
    components: tuple[ExceptionalComponent, ...] = ()
    underdetermined: bool = False
    invariants: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    @property
    def total_length(self) -> float:
        if self.ordered_lengths is not None:
            return float(sum(self.ordered_lengths))
        return float(sum(c.total_length for c in self.components))

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "K": self.K,
            "ordered_lengths": None if self.ordered_lengths is None else list(self.ordered_lengths),
            "cosines": None if self.cosines is None else list(self.cosines),
            "components": [c.to_dict() for c in self.components],
        }
        if self.underdetermined:
            d["underdetermined"] = True
            d["invariants"] = dict(self.invariants)
        if self.warnings:
            d["warnings"] = list(self.warnings)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GeometryResult":
        ol = d.get("ordered_lengths")
        cs = d.get("cosines")
        return cls(
            n=int(d["n"]),
            K=int(d["K"]),
            ordered_lengths=None if ol is None else tuple(map(float, ol)),
            cosines=None if cs is None else tuple(map(float, cs)),
            components=tuple(ExceptionalComponent.from_dict(c) for c in d.get("components", [])),
            underdetermined=bool(d.get("underdetermined", False)),
            invariants=dict(d.get("invariants", {})),
            warnings=tuple(d.get("warnings", ())),
        )
