"""Sets of admissible parent generators and their intersection.

A :class:`NestingSet` maps family labels to parameter intervals.  The
mappings :func:`n2_f24` and :func:`n2_f1234` list every parent generator
that may sit directly above a given child generator, for the family sets
``{C, 12, 14, 19, 20}`` and ``{A, C, 19, 20}`` respectively.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import DomainError
from .generators import FAMILIES, PARAM_RANGE, check_theta
from .intervals import INF, Interval

F24 = ("C", "12", "14", "19", "20")
F1234 = ("A", "C", "19", "20")


class NestingSet:
    """Immutable mapping ``family -> Interval`` with at most one interval per family."""

    __slots__ = ("_entries",)

    def __init__(self, entries: Mapping[str, Interval] | Iterable[tuple[str, Interval]] = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        clean = {}
        for fam, iv in items:
            if fam not in FAMILIES:
                raise DomainError(f"unknown family {fam!r}")
            if fam in clean:
                raise DomainError(f"duplicate family {fam!r}")
            if not iv.empty:
                clean[fam] = iv
        self._entries = dict(sorted(clean.items(), key=lambda kv: FAMILIES.index(kv[0])))

    def __iter__(self):
        return iter(self._entries.items())

    def __len__(self):
        return len(self._entries)

    def __bool__(self):
        return bool(self._entries)

    def __contains__(self, pair) -> bool:
        return member(pair, self)

    def __getitem__(self, family: str) -> Interval:
        return self._entries[family]

    def get(self, family: str) -> Interval | None:
        return self._entries.get(family)

    @property
    def families(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def __eq__(self, other):
        return isinstance(other, NestingSet) and self._entries == other._entries

    def __hash__(self):
        return hash(tuple(self._entries.items()))

    def __and__(self, other: NestingSet) -> NestingSet:
        return intersect(self, other)

    def restrict(self, families: Iterable[str]) -> NestingSet:
        keep = set(families)
        return NestingSet((f, iv) for f, iv in self if f in keep)

    def __repr__(self):
        return "{" + ", ".join(f"({f}, {iv})" for f, iv in self) + "}"

    def to_list(self) -> list:
        return [[f, iv.to_list()] for f, iv in self]


EMPTY = NestingSet()


def intersect(n1: NestingSet, n2: NestingSet) -> NestingSet:
    """Family-wise interval intersection; families missing on either side drop out."""
    return NestingSet((f, iv.intersect(n2[f])) for f, iv in n1 if n2.get(f) is not None)


def intersect_all(sets: Iterable[NestingSet]) -> NestingSet:
    sets = list(sets)
    out = sets[0]
    for s in sets[1:]:
        out = intersect(out, s)
    return out


def member(pair: tuple[str, float], n: NestingSet) -> bool:
    family, theta = pair
    iv = n.get(family)
    return iv is not None and theta in iv


def _closed(lo, hi):
    return Interval(lo, hi, False, False)


def _open_closed(lo, hi):
    return Interval(lo, hi, True, False)


def n2_f24(family: str, theta: float) -> NestingSet:
    """Admissible parents of a child ``(family, theta)`` within ``{C, 12, 14, 19, 20}``."""
    if family not in F24:
        raise DomainError(f"family {family!r} is not handled by the F24 mapping")
    theta = check_theta(family, theta)
    if family == "C":
        return NestingSet({"C": _open_closed(0, theta)})
    if family == "12":
        return NestingSet({"C": _open_closed(0, 1), "12": _closed(1, theta)})
    if family == "14":
        return NestingSet({"C": _open_closed(0, 1 / theta)})
    if family == "19":
        return NestingSet({"C": _open_closed(0, 1), "19": _open_closed(0, theta)})
    return NestingSet({"C": _open_closed(0, theta), "20": _open_closed(0, theta)})


AMH_ALL = Interval(0.0, 1.0, False, True)


def n2_f1234(family: str, theta: float) -> NestingSet:
    """Admissible parents of a child ``(family, theta)`` within ``{A, C, 19, 20}``."""
    if family not in F1234:
        raise DomainError(f"family {family!r} is not handled by the F1234 mapping")
    theta = check_theta(family, theta)
    if family == "A":
        return NestingSet({"A": _closed(0, theta)})
    if family == "C":
        if theta < 1:
            return NestingSet({"C": _open_closed(0, theta)})
        return NestingSet({"A": AMH_ALL, "C": _open_closed(0, theta)})
    if family == "19":
        return NestingSet({"A": AMH_ALL, "C": _open_closed(0, 1), "19": _open_closed(0, theta)})
    if theta < 1:
        return NestingSet({"C": _open_closed(0, theta), "20": _open_closed(0, theta)})
    return NestingSet({"A": AMH_ALL, "C": _open_closed(0, theta), "20": _open_closed(0, theta)})


def default_n0(case: str) -> NestingSet:
    """Initial admissible-parent set for the ``"F24"`` or ``"F1234"`` case."""
    if case == "F24":
        return NestingSet({f: PARAM_RANGE[f] for f in F24})
    if case == "F1234":
        return NestingSet({
            "A": AMH_ALL,
            "C": Interval(1.0, INF, False, True),
            "19": PARAM_RANGE["19"],
            "20": Interval(1.0, INF, False, True),
        })
    raise DomainError(f"unknown case {case!r}; expected 'F24' or 'F1234'")


def case_for(families: Iterable[str]) -> str:
    """``"F1234"`` if family A is requested, else ``"F24"``; mixed sets are rejected."""
    fams = set(families)
    if not fams:
        raise DomainError("at least one family is required")
    unknown = fams - set(FAMILIES)
    if unknown:
        raise DomainError(f"unknown families {sorted(unknown)}")
    if "A" in fams:
        if not fams <= set(F1234):
            raise DomainError("family A can only be combined with C, 19 and 20")
        return "F1234"
    if not fams <= set(F24):
        raise DomainError(f"families {sorted(fams)} do not fit a supported case")
    return "F24"


def n2(case: str, family: str, theta: float) -> NestingSet:
    return n2_f1234(family, theta) if case == "F1234" else n2_f24(family, theta)


@dataclass(frozen=True)
class TrimEvent:
    """A parameter estimate that was moved to make it admissible."""
    fork: int
    family: str
    raw: float
    trimmed: float


def trim(theta: float, r: Interval) -> float:
    """Clamp ``theta`` into ``r``; open ends become the adjacent float."""
    if r.empty:
        raise DomainError("cannot trim into an empty interval")
    return r.clamp(theta)


def parent_interval(parent_family: str, child) -> Interval:
    """Parameters ``t`` for which ``(parent_family, t)`` may sit directly above ``child``."""
    family, theta = child.family, child.theta
    use_f1234 = family == "A" or parent_family == "A"
    if use_f1234 and family in F1234:
        admissible = n2_f1234(family, theta)
    elif not use_f1234 and family in F24:
        admissible = n2_f24(family, theta)
    else:
        return Interval(1.0, 0.0)
    return admissible.get(parent_family) or Interval(1.0, 0.0)


def child_interval(parent, child_family: str) -> Interval:
    """Parameters ``t`` for which ``(child_family, t)`` may sit directly below ``parent``."""
    a1, t1 = parent.family, parent.theta
    full = PARAM_RANGE[child_family]
    never = Interval(1.0, 0.0)
    if a1 == child_family:
        return never if a1 == "14" else full.intersect(Interval(t1, INF))
    if a1 == "A":
        if child_family in ("C", "20"):
            return full.intersect(Interval(1.0, INF))
        return full if child_family == "19" else never
    if a1 == "C":
        if child_family in ("12", "19"):
            return full if t1 <= 1 else never
        if child_family == "14":
            return full.intersect(Interval(1.0, 1 / t1)) if t1 <= 1 else never
        if child_family == "20":
            return full.intersect(Interval(t1, INF))
    return never
