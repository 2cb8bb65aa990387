"""Tree model of hierarchical Archimedean copulas.

Leaves are the variables ``1..d``; forks are numbered ``d+1..d+k`` so that
every child fork has a smaller id than its parent, and the root is ``d+k``.
Each fork carries a :class:`~hacest.generators.Generator`; a tree without
labels (a *skeleton*) is used for structure estimates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np
from scipy.special import logsumexp

from .errors import DataError, DomainError
from .generators import (
    Generator,
    log_psi_inv,
    psi_of_log,
    tau_of_theta,
)

# parent-child family pairs for which a sufficient nesting rule is known
NESTABLE_PAIRS = frozenset({
    ("A", "A"), ("C", "C"), ("12", "12"), ("19", "19"), ("20", "20"),
    ("A", "C"), ("A", "19"), ("A", "20"),
    ("C", "12"), ("C", "14"), ("C", "19"), ("C", "20"),
})


def nesting_ok(parent: Generator, child: Generator) -> bool:
    """Sufficient nesting condition for a parent-child generator pair.

    ``(14, 14)`` has no known rule and counts as a failure, like every pair
    outside :data:`NESTABLE_PAIRS`.
    """
    a1, t1 = parent.family, parent.theta
    a2, t2 = child.family, child.theta
    if (a1, a2) not in NESTABLE_PAIRS:
        return False
    if a1 == a2:
        return t1 <= t2
    if (a1, a2) in (("A", "C"), ("A", "20")):
        return t2 >= 1
    if (a1, a2) == ("A", "19"):
        return True
    if (a1, a2) in (("C", "12"), ("C", "19")):
        return t1 <= 1
    if (a1, a2) == ("C", "14"):
        return t1 * t2 <= 1
    return t1 <= t2  # (C, 20)


@dataclass(frozen=True, eq=False)
class HacTree:
    d: int
    children: Mapping[int, tuple[int, ...]]
    labels: Mapping[int, Generator] | None = None
    _parent: dict = field(init=False, repr=False, compare=False)
    _leaves: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        children = {int(v): tuple(int(c) for c in cs) for v, cs in self.children.items()}
        object.__setattr__(self, "children", children)
        if self.labels is not None:
            labels = {int(v): g for v, g in self.labels.items()}
            object.__setattr__(self, "labels", labels)
        self._validate()
        parent = {}
        for v, cs in children.items():
            for c in cs:
                parent[c] = v
        object.__setattr__(self, "_parent", parent)
        leaves = {}
        for v in sorted(children):
            acc = []
            for c in children[v]:
                acc.extend([c] if c <= self.d else leaves[c])
            leaves[v] = tuple(sorted(acc))
        object.__setattr__(self, "_leaves", leaves)

    def _validate(self):
        d = self.d
        if d < 2:
            raise DomainError("a HAC needs at least two leaves")
        forks = sorted(self.children)
        k = len(forks)
        if forks != list(range(d + 1, d + k + 1)):
            raise DomainError(f"fork ids must be {d + 1}..{d + k}, got {forks}")
        seen = []
        for v in forks:
            cs = self.children[v]
            if len(cs) < 2:
                raise DomainError(f"fork {v} has fewer than two children")
            for c in cs:
                if c < 1 or c >= v:
                    raise DomainError(f"fork {v} has invalid child {c}")
            seen.extend(cs)
        if sorted(seen) != list(range(1, d + k)):
            raise DomainError("every node except the root must appear exactly once as a child")
        if self.labels is not None:
            if sorted(self.labels) != forks:
                raise DomainError("labels must cover every fork")
            for g in self.labels.values():
                if not isinstance(g, Generator):
                    raise DomainError("labels must be Generator instances")

    # ------------------------------------------------------------ navigation
    @property
    def k(self) -> int:
        return len(self.children)

    @property
    def root(self) -> int:
        return self.d + self.k

    @property
    def forks(self) -> list[int]:
        return list(range(self.d + 1, self.d + self.k + 1))

    @property
    def is_binary(self) -> bool:
        return self.k == self.d - 1

    def parent(self, v: int) -> int | None:
        return self._parent.get(v)

    def leaves(self, v: int) -> tuple[int, ...]:
        return (v,) if v <= self.d else self._leaves[v]

    def ancestors(self, v: int) -> list[int]:
        out = []
        p = self.parent(v)
        while p is not None:
            out.append(p)
            p = self.parent(p)
        return out

    def descendant_forks(self, v: int) -> list[int]:
        out = []
        stack = [c for c in self.children.get(v, ()) if c > self.d]
        while stack:
            w = stack.pop()
            out.append(w)
            stack.extend(c for c in self.children[w] if c > self.d)
        return sorted(out)

    def child_forks(self, v: int) -> list[int]:
        return [c for c in self.children[v] if c > self.d]

    def label(self, v: int) -> Generator:
        if self.labels is None:
            raise DomainError("tree has no generator labels")
        return self.labels[v]

    def with_labels(self, labels: Mapping[int, Generator]) -> HacTree:
        return HacTree(self.d, self.children, labels)

    def skeleton(self) -> HacTree:
        return HacTree(self.d, self.children, None)

    def edges(self) -> set[frozenset]:
        return {frozenset((v, c)) for v, cs in self.children.items() for c in cs}

    def yca(self, i: int, j: int) -> int:
        """Youngest common ancestor fork of leaves ``i`` and ``j``."""
        if i == j or not (1 <= i <= self.d and 1 <= j <= self.d):
            raise DomainError("yca needs two distinct leaves")
        anc_i = set(self.ancestors(i))
        for v in self.ancestors(j):
            if v in anc_i:
                return v
        raise AssertionError("tree is not connected")

    def __eq__(self, other):
        if not isinstance(other, HacTree):
            return NotImplemented
        return (self.d == other.d and self.children == other.children
                and self.labels == other.labels)

    def __repr__(self):
        return f"HacTree({to_string(self)})"


def renumbered(d: int, children: Mapping[int, Iterable[int]],
               labels: Mapping[int, Generator] | None = None,
               order: Iterable[int] | None = None) -> tuple[HacTree, dict[int, int]]:
    """Build a tree from forks with arbitrary ids.

    Forks are renumbered ``d+1, d+2, ...`` following ``order`` (default:
    ascending old id), which must list children before parents.  Returns
    the tree and the old-to-new id map.
    """
    order = sorted(children) if order is None else list(order)
    mapping = {old: d + 1 + i for i, old in enumerate(order)}
    remap = lambda c: c if c <= d else mapping[c]
    new_children = {mapping[v]: tuple(remap(c) for c in children[v]) for v in order}
    new_labels = None if labels is None else {mapping[v]: labels[v] for v in order}
    return HacTree(d, new_children, new_labels), mapping


def from_nested(d: int, root) -> HacTree:
    """Tree from a nested ``(generator, [children...])`` description.

    Children are leaf integers or nested pairs; forks get post-order ids.
    """
    children: dict[int, tuple[int, ...]] = {}
    labels: dict[int, Generator] = {}
    counter = [d]

    def visit(node):
        if isinstance(node, (int, np.integer)):
            return int(node)
        gen, kids = node
        ids = tuple(visit(c) for c in kids)
        counter[0] += 1
        children[counter[0]] = ids
        if gen is not None:
            labels[counter[0]] = gen if isinstance(gen, Generator) else Generator(*gen)
        return counter[0]

    visit(root)
    return HacTree(d, children, labels or None)


def star(d: int, gen: Generator | None = None) -> HacTree:
    return HacTree(d, {d + 1: tuple(range(1, d + 1))}, None if gen is None else {d + 1: gen})


# -------------------------------------------------------------- evaluation

def _fork_values(tree: HacTree, U: np.ndarray) -> dict[int, np.ndarray]:
    vals = {i: U[:, i - 1] for i in range(1, tree.d + 1)}
    for v in tree.forks:
        g = tree.label(v)
        logs = np.stack([log_psi_inv(g, vals[c]) for c in tree.children[v]])
        with np.errstate(invalid="ignore"):
            ell = logsumexp(logs, axis=0)
        vals[v] = np.asarray(psi_of_log(g, ell))
    return vals


def evaluate(tree: HacTree, u) -> float | np.ndarray:
    """Copula value at a point (shape ``(d,)``) or at each row of ``(n, d)``."""
    arr = np.asarray(u, dtype=float)
    single = arr.ndim == 1
    U = np.atleast_2d(arr)
    if U.shape[1] != tree.d:
        raise DomainError(f"expected {tree.d} coordinates, got {U.shape[1]}")
    U = np.clip(U, 0.0, 1.0)
    out = _fork_values(tree, U)[tree.root]
    return float(out[0]) if single else out


def check_snc(tree: HacTree) -> tuple[bool, list[tuple[int, int]]]:
    """Check the sufficient nesting condition on every parent-child fork pair."""
    violations = []
    for v in tree.forks:
        for c in tree.child_forks(v):
            if not nesting_ok(tree.label(v), tree.label(c)):
                violations.append((v, c))
    return not violations, violations


def tau_ordering_violations(tree: HacTree, fork_taus: Mapping[int, float] | None = None,
                            tol: float = 0.0) -> list[tuple[int, int]]:
    """Parent-child fork pairs whose tau decreases towards the leaves."""
    if fork_taus is None:
        fork_taus = {v: tree.label(v).tau for v in tree.forks}
    return [(v, c) for v in tree.forks for c in tree.child_forks(v)
            if fork_taus[v] > fork_taus[c] + tol]


def implied_tau_matrix(tree: HacTree) -> np.ndarray:
    d = tree.d
    fork_tau = {v: tau_of_theta(tree.label(v).family, tree.label(v).theta) for v in tree.forks}
    T = np.eye(d)
    for i, j in combinations(range(1, d + 1), 2):
        T[i - 1, j - 1] = T[j - 1, i - 1] = fork_tau[tree.yca(i, j)]
    return T


# ------------------------------------------------------------ comparisons

def _clusters(tree: HacTree) -> set[frozenset]:
    return {frozenset(tree.leaves(v)) for v in tree.forks}


def structure_equal(t1: HacTree, t2: HacTree) -> bool:
    """Same tree up to fork numbering and child order, leaves fixed."""
    return t1.d == t2.d and t1.k == t2.k and _clusters(t1) == _clusters(t2)


def families_equal(t1: HacTree, t2: HacTree) -> bool:
    """Structures agree and corresponding forks carry the same family label."""
    if not structure_equal(t1, t2):
        return False
    fam1 = {frozenset(t1.leaves(v)): t1.label(v).family for v in t1.forks}
    fam2 = {frozenset(t2.leaves(v)): t2.label(v).family for v in t2.forks}
    return fam1 == fam2


# ---------------------------------------------------------- serialization

def _node_dict(tree: HacTree, v: int):
    if v <= tree.d:
        return v
    node = {}
    if tree.labels is not None:
        g = tree.label(v)
        node["family"] = g.family
        node["theta"] = g.theta
    node["children"] = [_node_dict(tree, c) for c in tree.children[v]]
    return node


def to_dict(tree: HacTree) -> dict:
    return {"d": tree.d, "root": _node_dict(tree, tree.root)}


def to_string(tree: HacTree) -> str:
    """Compact nested notation such as ``(C 0.5: 1, (C 2: 2, 3))``."""
    def rec(v):
        if v <= tree.d:
            return str(v)
        head = "" if tree.labels is None else f"{tree.label(v).family} {tree.label(v).theta:.4g}: "
        return "(" + head + ", ".join(rec(c) for c in tree.children[v]) + ")"
    return rec(tree.root)


def from_dict(doc) -> HacTree:
    if not isinstance(doc, Mapping) or "d" not in doc or "root" not in doc:
        raise DataError("HAC document needs keys 'd' and 'root'")
    d = doc["d"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 2:
        raise DataError("'d' must be an integer >= 2")
    labelled = [None]

    def parse(node):
        if isinstance(node, bool):
            raise DataError("boolean is not a valid node")
        if isinstance(node, int):
            if not 1 <= node <= d:
                raise DataError(f"leaf {node} outside 1..{d}")
            return node
        if not isinstance(node, Mapping) or "children" not in node:
            raise DataError(f"malformed node {node!r}")
        has = "family" in node
        if labelled[0] is None:
            labelled[0] = has
        elif labelled[0] != has:
            raise DataError("either all forks or none must carry a family")
        gen = None
        if has:
            theta = node.get("theta")
            if not isinstance(theta, (int, float)) or isinstance(theta, bool) or not math.isfinite(theta):
                raise DataError(f"invalid theta {theta!r}")
            try:
                gen = Generator(str(node["family"]), float(theta))
            except DomainError as exc:
                raise DataError(str(exc)) from exc
        kids = node["children"]
        if not isinstance(kids, list):
            raise DataError("'children' must be a list")
        return (gen, [parse(c) for c in kids])

    nested = parse(doc["root"])
    if isinstance(nested, int):
        raise DataError("root must be a fork")
    try:
        return from_nested(d, nested)
    except DomainError as exc:
        raise DataError(str(exc)) from exc


def dumps(tree: HacTree, **kw) -> str:
    return json.dumps(to_dict(tree), **kw)


def loads(text: str) -> HacTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc}") from exc
    return from_dict(doc)


def load(path) -> HacTree:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def save(tree: HacTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(tree, indent=2))
        fh.write("\n")
