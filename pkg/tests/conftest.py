import math

import numpy as np
import pytest
from hypothesis import strategies as st

from specflow.rigged import CIRCLE, LINE, TWO_PI, RiggedSet


def oracle_d(xs, ys, circle):
    """Minimum over partial injections ``xs -> ys``; unmatched points pay their sticky distance."""
    def dist(a, b):
        x = abs(a - b)
        return min(x, TWO_PI - x) if circle else x

    def sticky(a):
        return min(a, TWO_PI - a) if circle else abs(a)

    best = math.inf

    def rec(i, used, acc):
        nonlocal best
        if acc >= best:
            return
        if i == len(xs):
            best = min(best, acc + sum(sticky(y) for j, y in enumerate(ys) if j not in used))
            return
        rec(i + 1, used, acc + sticky(xs[i]))
        for j, y in enumerate(ys):
            if j not in used:
                rec(i + 1, used | {j}, acc + dist(xs[i], y))

    rec(0, frozenset(), 0.0)
    return best


def oracle_set_d(S, T):
    return oracle_d(list(S.expanded()), list(T.expanded()), S.space == CIRCLE)


angles = st.floats(min_value=1e-3, max_value=TWO_PI - 1e-3, allow_nan=False)
line_values = st.one_of(st.floats(min_value=0.01, max_value=5.0), st.floats(min_value=-5.0, max_value=-0.01))


def rigged_sets(space=CIRCLE, max_points=4, max_mult=2):
    pts = angles if space == CIRCLE else line_values
    pairs = st.lists(st.tuples(pts, st.integers(1, max_mult)), max_size=max_points)
    return pairs.map(lambda ps: RiggedSet.from_pairs(space, ps))


def bounded_rank(S, k):
    return S.rank <= k


def random_set(rng, space=CIRCLE, max_rank=4):
    n = int(rng.integers(0, max_rank + 1))
    if space == CIRCLE:
        pts = rng.uniform(1e-3, TWO_PI - 1e-3, n)
    else:
        pts = rng.uniform(0.05, 3.0, n) * rng.choice([-1.0, 1.0], n)
    if n > 1 and rng.random() < 0.3:
        pts[-1] = pts[0]
    return RiggedSet.from_pairs(space, [(float(x), 1) for x in pts])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


SPACES = (CIRCLE, LINE)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one ``PASS``/``FAIL`` line per acceptance criterion."""
    def record(number, name, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
