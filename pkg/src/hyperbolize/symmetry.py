"""Wallpaper-group signatures, reflection groups, and point folding.

A reflection group is described by its fundamental cell plus one
(conjugating) generator per edge.  `locate` folds an arbitrary point into
the cell and records the generator word used; `corresponding_word` replays
such a word in another group sharing the same edge labels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    CellSpec,
    GeometryError,
    GeometryKind,
    Motion,
    euclidean_rectangle,
    euclidean_triangle,
)

__all__ = [
    "SignatureError",
    "FoldError",
    "OrbifoldSignature",
    "ReflectionGroup",
    "GroupWord",
    "SupergroupReduction",
    "parse_signature",
    "reflection_group",
    "locate",
    "corresponding_word",
    "supergroup_reduction",
    "validate_target",
    "euclidean_cell_for",
    "euclidean_orders",
    "ALL_SIGNATURES",
]

_ON_EDGE_EPS = 1e-12


class SignatureError(ValueError):
    pass


class FoldError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# the 17 signatures

# (orbifold symbol, crystallographic alias)
_SIGNATURE_TABLE = [
    ("○", "p1"),
    ("**", "pm"),
    ("××", "pg"),
    ("*×", "cm"),
    ("2222", "p2"),
    ("*2222", "pmm"),
    ("22×", "pgg"),
    ("22*", "pmg"),
    ("2*22", "cmm"),
    ("333", "p3"),
    ("*333", "p3m1"),
    ("3*3", "p31m"),
    ("442", "p4"),
    ("*442", "p4m"),
    ("4*2", "p4g"),
    ("632", "p6"),
    ("*632", "p6m"),
]


@dataclass(frozen=True)
class OrbifoldSignature:
    name: str
    crystallographic_alias: str

    def __str__(self) -> str:
        return self.name


ALL_SIGNATURES: tuple[OrbifoldSignature, ...] = tuple(
    OrbifoldSignature(orb, alias) for orb, alias in _SIGNATURE_TABLE
)

_BY_ORBIFOLD = {sig.name: sig for sig in ALL_SIGNATURES}
_BY_ALIAS = {sig.crystallographic_alias: sig for sig in ALL_SIGNATURES}


def _normalize_symbol(text: str) -> str:
    out = text.strip()
    out = out.replace("x", "×").replace("X", "×")
    if out in ("o", "O", "0", "◯"):
        out = "○"
    return out


def parse_signature(text: str) -> OrbifoldSignature:
    """Resolve a wallpaper-group name in orbifold or crystallographic
    notation to its canonical signature."""
    if not isinstance(text, str) or not text.strip():
        raise SignatureError("not a wallpaper signature")
    raw = text.strip()
    alias = _BY_ALIAS.get(raw.lower())
    if alias is not None:
        return alias
    sig = _BY_ORBIFOLD.get(_normalize_symbol(raw))
    if sig is not None:
        return sig
    raise SignatureError(f"not a wallpaper signature: {text!r}")


# ---------------------------------------------------------------------------
# reflection groups and folding


@dataclass(frozen=True)
class GroupWord:
    """Generator word, leftmost label acting last (function composition order)."""

    labels: tuple[str, ...]

    def __post_init__(self):
        for a, b in zip(self.labels, self.labels[1:]):
            if a == b:
                raise SignatureError("group word is not freely reduced")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def is_orientation_reversing(self) -> bool:
        return len(self.labels) % 2 == 1


@dataclass(frozen=True)
class ReflectionGroup:
    """A cell together with one edge reflection per edge."""

    cell: CellSpec
    generators: tuple[Motion, ...]
    edge_labels: tuple[str, ...]

    def generator(self, label: str) -> Motion:
        try:
            return self.generators[self.edge_labels.index(label)]
        except ValueError:
            raise SignatureError(f"label mismatch: {label!r}") from None


def reflection_group(cell: CellSpec) -> ReflectionGroup:
    """Edge reflections of a fundamental cell, labelled e0, e1, ..."""
    gens = tuple(e.reflection_motion() for e in cell.edges)
    labels = tuple(f"e{i}" for i in range(cell.size))
    return ReflectionGroup(cell, gens, labels)


def locate(
    group: ReflectionGroup, z: complex, max_len: int = 64
) -> tuple[GroupWord, complex]:
    """Fold z into the closed fundamental cell.

    Repeatedly reflects across a violated edge (nearest violation first,
    ties to the lowest edge index) and returns the word of reflections in
    composition order together with the folded point.
    """
    cell = group.cell
    applied: list[int] = []
    cur = complex(z)
    for _ in range(max_len + 1):
        clear = cell.clearances(cur)
        if (clear >= -_ON_EDGE_EPS).all():
            labels = tuple(group.edge_labels[i] for i in reversed(applied))
            return GroupWord(labels), cur
        if len(applied) >= max_len:
            break
        dist = np.where(clear < -_ON_EDGE_EPS, -clear, np.inf)
        e = int(np.argmin(dist))
        cur = cell.edges[e].reflect(cur)
        applied.append(e)
    raise FoldError(f"word length exceeded (max_len={max_len})")


def corresponding_word(word: GroupWord, target: ReflectionGroup) -> Motion:
    """Compose the target group's generators in word order."""
    m = Motion.identity()
    for label in word.labels:
        m = m.compose(target.generator(label))
    return m


# ---------------------------------------------------------------------------
# supergroup reduction

# source -> (reflection supergroup, index of source inside it)
_SUPERGROUP_TABLE: dict[str, tuple[str, int]] = {
    "*333": ("*333", 1),
    "*442": ("*442", 1),
    "*632": ("*632", 1),
    "*2222": ("*2222", 1),
    "333": ("*333", 2),
    "442": ("*442", 2),
    "632": ("*632", 2),
    "3*3": ("*333", 2),
    "4*2": ("*442", 2),
    "**": ("*2222", 2),
    "*×": ("*2222", 2),
    "××": ("*2222", 2),
    "2*22": ("*2222", 2),
    "22*": ("*2222", 2),
    "22×": ("*2222", 2),
}


@dataclass(frozen=True)
class SupergroupReduction:
    source_signature: OrbifoldSignature
    supergroup_signature: OrbifoldSignature
    index: int
    cell_pairing: str

    def __post_init__(self):
        if self.index not in (1, 2, 4):
            raise SignatureError("unsupported subgroup index")
        if self.supergroup_signature.name not in ("*333", "*442", "*632", "*2222"):
            raise SignatureError("supergroup must be a pure reflection group")


def supergroup_reduction(
    sig: OrbifoldSignature | str, rectangular_cell: bool = False
) -> SupergroupReduction:
    """Reflection supergroup used for hyperbolization.

    The two translation-heavy groups (2222 and ○) only reduce when the
    caller asserts a rectangular fundamental cell; otherwise a second
    shape parameter would be needed.
    """
    if isinstance(sig, str):
        sig = parse_signature(sig)
    entry = _SUPERGROUP_TABLE.get(sig.name)
    if entry is not None:
        sup, index = entry
        if index == 1:
            pairing = "the group is its own reflection supergroup"
        else:
            pairing = "fundamental cell is a union of 2 supergroup cells"
        return SupergroupReduction(sig, _BY_ORBIFOLD[sup], index, pairing)
    if sig.name in ("2222", "○") and rectangular_cell:
        index = 2 if sig.name == "2222" else 4
        pairing = f"rectangular cell asserted; union of {index} supergroup cells"
        return SupergroupReduction(sig, _BY_ORBIFOLD["*2222"], index, pairing)
    raise SignatureError(
        "requires two-parameter adjustment (unsupported): "
        f"{sig.name} has no rectangular reflection supergroup without the "
        "rectangular-cell assertion"
    )


def euclidean_orders(supergroup: OrbifoldSignature | str) -> tuple[int, ...]:
    """Corner orders of the supergroup's Euclidean fundamental cell."""
    name = supergroup.name if isinstance(supergroup, OrbifoldSignature) else supergroup
    table = {
        "*333": (3, 3, 3),
        "*442": (4, 4, 2),
        "*632": (6, 3, 2),
        "*2222": (2, 2, 2, 2),
    }
    if name not in table:
        raise SignatureError(f"not a reflection supergroup: {name}")
    return table[name]


def euclidean_cell_for(
    supergroup: OrbifoldSignature | str, aspect: float = 1.0
) -> CellSpec:
    """Euclidean fundamental cell of a reflection supergroup."""
    orders = euclidean_orders(supergroup)
    if len(orders) == 3:
        return euclidean_triangle(*orders)
    return euclidean_rectangle(aspect)


def validate_target(
    source_sig: OrbifoldSignature | str,
    target_orders,
    rectangular_cell: bool = False,
) -> GeometryKind:
    """Check that target corner orders define a hyperbolic cell compatible
    with the source signature's reflection supergroup."""
    red = supergroup_reduction(source_sig, rectangular_cell=rectangular_cell)
    base = euclidean_orders(red.supergroup_signature)
    orders = tuple(int(o) for o in target_orders)
    if len(orders) != len(base):
        raise SignatureError(
            f"target must have {len(base)} corner orders for supergroup "
            f"{red.supergroup_signature.name}"
        )
    if min(orders) < 2:
        raise SignatureError("corner orders must be at least 2")
    total = sum(1.0 / o for o in orders)
    limit = 1.0 if len(base) == 3 else 2.0
    if total >= limit - 1e-12:
        raise SignatureError("target not hyperbolic")
    if not any(o > b for o, b in zip(orders, base)):
        raise SignatureError("target not hyperbolic")
    return GeometryKind.HYPERBOLIC
