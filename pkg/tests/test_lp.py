"""Exact simplex tests.

The random-corpus oracle enumerates feasible vertices directly (tight-row
subsets solved by a local Gaussian elimination), fully independent of the
simplex code path.
"""

from __future__ import annotations

import itertools
import os
import random
import subprocess
import sys
from fractions import Fraction

import pytest

from contractopt.lp import (
    EQUAL,
    GREATER_EQUAL,
    LESS_EQUAL,
    LpError,
    check_feasible,
    make_program,
    solve_lp,
)

F = Fraction


def test_single_upper_bound():
    lp = make_program([1], [[1]], [F(3, 7)], [LESS_EQUAL])
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.objective_value == F(3, 7)
    assert res.solution == (F(3, 7),)
    assert res.dual_objective == F(3, 7)


def test_infeasible_pair():
    lp = make_program([1], [[1], [1]], [1, 0], [GREATER_EQUAL, LESS_EQUAL])
    res = solve_lp(lp)
    assert res.status == "infeasible"
    assert res.objective_value is None


def test_unbounded():
    lp = make_program([1], [[-1]], [0], [LESS_EQUAL])
    res = solve_lp(lp)
    assert res.status == "unbounded"


def test_free_variable():
    lp = make_program([-1], [[1]], [-5], [GREATER_EQUAL], nonnegative=[False])
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.objective_value == 5
    assert res.solution == (F(-5),)


def test_negative_rhs_normalization():
    lp = make_program([-1], [[-1], [1]], [-2, 5], [LESS_EQUAL, LESS_EQUAL])
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.objective_value == -2
    assert res.solution == (F(2),)


def test_equality_with_redundant_row():
    lp = make_program(
        [1, 0],
        [[1, 1], [1, 1], [2, 2]],
        [1, 1, 2],
        [EQUAL, EQUAL, EQUAL],
    )
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.objective_value == 1
    assert res.solution == (F(1), F(0))


def test_beale_cycling_example_terminates():
    # Classic degenerate program that cycles under the largest-coefficient
    # rule; Bland's rule must terminate at value 1/20.
    lp = make_program(
        [F(3, 4), -150, F(1, 50), -6],
        [
            [F(1, 4), -60, F(-1, 25), 9],
            [F(1, 2), -90, F(-1, 50), 3],
            [0, 0, 1, 0],
        ],
        [0, 0, 1],
        [LESS_EQUAL, LESS_EQUAL, LESS_EQUAL],
    )
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.objective_value == F(1, 20)
    assert res.pivots <= 100


def test_klee_minty_three_dimensional():
    lp = make_program(
        [100, 10, 1],
        [[1, 0, 0], [20, 1, 0], [200, 20, 1]],
        [1, 100, 10000],
        [LESS_EQUAL, LESS_EQUAL, LESS_EQUAL],
    )
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.objective_value == 10000
    assert res.pivots <= 200


def test_dual_certificate_hand_checked():
    # max 3x + 2y st x + y <= 4, x + 3y <= 6, x,y >= 0 -> (4, 0), value 12
    lp = make_program([3, 2], [[1, 1], [1, 3]], [4, 6], [LESS_EQUAL, LESS_EQUAL])
    res = solve_lp(lp)
    assert res.objective_value == 12
    y = res.dual_solution
    # y is feasible for the dual: y >= 0 for <= rows, y^T A >= c columnwise
    assert all(yi >= 0 for yi in y)
    for j in range(2):
        assert y[0] * lp.lhs[0][j] + y[1] * lp.lhs[1][j] >= lp.objective[j]
    assert y[0] * 4 + y[1] * 6 == res.objective_value == res.dual_objective


def test_mixed_senses_dual_signs():
    # max x + y st x + 2y <= 10, x - y >= -2, x + y == 4
    lp = make_program(
        [1, 1],
        [[1, 2], [1, -1], [1, 1]],
        [10, -2, 4],
        [LESS_EQUAL, GREATER_EQUAL, EQUAL],
    )
    res = solve_lp(lp)
    assert res.status == "optimal"
    assert res.objective_value == 4
    y = res.dual_solution
    assert y[0] >= 0  # <= row
    assert y[1] <= 0  # >= row
    total = sum(yi * bi for yi, bi in zip(y, lp.rhs))
    assert total == res.objective_value
    for j in range(2):
        col = sum(y[i] * lp.lhs[i][j] for i in range(3))
        assert col >= lp.objective[j]


def test_determinism_bit_for_bit():
    rng = random.Random(7)
    lhs = [[F(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(3)] for _ in range(4)]
    lp1 = make_program([1, 2, 3], lhs, [3, 1, 4, 1], [LESS_EQUAL] * 4)
    lp2 = make_program([1, 2, 3], [list(r) for r in lhs], [3, 1, 4, 1], [LESS_EQUAL] * 4)
    r1, r2 = solve_lp(lp1), solve_lp(lp2)
    assert r1 == r2


def test_shape_errors():
    with pytest.raises(LpError):
        make_program([1, 2], [[1]], [1], [LESS_EQUAL])
    with pytest.raises(LpError):
        make_program([1], [[1]], [1], ["<"])


def test_pure_fraction_fallback_agrees():
    script = (
        "from contractopt.lp import make_program, solve_lp, LESS_EQUAL\n"
        "from fractions import Fraction as F\n"
        "r = solve_lp(make_program([3,2],[[1,1],[1,3]],[4,6],[LESS_EQUAL]*2))\n"
        "print(r.objective_value, r.solution)\n"
    )
    env = dict(os.environ, CONTRACTOPT_PURE_FRACTIONS="1")
    out = subprocess.run(
        [sys.executable, "-c", script], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "12 (Fraction(4, 1), Fraction(0, 1))"


# ---------------------------------------------------------------------------
# random corpus vs. vertex enumeration


def _solve_square(rows, rhs):
    """Gaussian elimination over Fractions; None if singular."""
    n = len(rows)
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col]
        a[col] = [x / inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def _vertex_optimum(lp):
    """Max objective over feasible basic points (all variables nonnegative)."""
    n = lp.num_variables
    candidates = []
    for i, row in enumerate(lp.lhs):
        candidates.append((row, lp.rhs[i]))
    for j in range(n):
        unit = tuple(F(1) if t == j else F(0) for t in range(n))
        candidates.append((unit, F(0)))
    best = None
    for subset in itertools.combinations(range(len(candidates)), n):
        rows = [candidates[i][0] for i in subset]
        rhs = [candidates[i][1] for i in subset]
        point = _solve_square(rows, rhs)
        if point is None:
            continue
        if check_feasible(lp, point):
            value = sum(c * x for c, x in zip(lp.objective, point))
            if best is None or value > best:
                best = value
    return best


def test_random_corpus_matches_vertex_enumeration():
    rng = random.Random(2024)
    solved = 0
    for _ in range(120):
        n = rng.randint(2, 3)
        rows = rng.randint(2, 4)
        lhs = [[F(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(n)] for _ in range(rows)]
        rhs = [F(rng.randint(-2, 6), rng.randint(1, 3)) for _ in range(rows)]
        senses = [rng.choice([LESS_EQUAL, GREATER_EQUAL, EQUAL]) for _ in range(rows)]
        lp = make_program([F(rng.randint(-3, 3)) for _ in range(n)], lhs, rhs, senses)
        res = solve_lp(lp)
        oracle = _vertex_optimum(lp)
        if res.status == "optimal":
            solved += 1
            assert check_feasible(lp, res.solution)
            assert oracle == res.objective_value
            assert res.dual_objective == res.objective_value
        elif res.status == "infeasible":
            assert oracle is None
    assert solved >= 10  # the corpus must actually exercise the comparison
