import numpy as np
import pytest

from hacest.generators import Generator
from hacest.hac import HacTree, renumbered


def random_tree(rng, d, labelled=True, binary=False, family="C"):
    """Random tree on leaves 1..d; labels grow with depth so same-family nesting holds."""
    active = list(range(1, d + 1))
    children = {}
    nxt = d + 1
    while len(active) > 1:
        m = 2 if binary else int(rng.integers(2, min(4, len(active)) + 1))
        pick = sorted(rng.choice(len(active), m, replace=False).tolist(), reverse=True)
        kids = tuple(active.pop(i) for i in pick)
        children[nxt] = kids
        active.append(nxt)
        nxt += 1
    tree, _ = renumbered(d, children)
    if not labelled:
        return tree
    depth = {tree.root: 0}
    for v in reversed(tree.forks):
        for c in tree.child_forks(v):
            depth[c] = depth[v] + 1
    base = {"C": 0.4, "12": 1.1, "19": 0.3, "20": 0.4, "A": 0.1}[family]
    step = 0.15 if family == "A" else 0.6
    labels = {v: Generator(family, base + step * depth[v] + 0.01 * rng.random()) for v in tree.forks}
    return tree.with_labels(labels)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


FIG3 = HacTree(3, {4: (2, 3), 5: (1, 4)})


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
