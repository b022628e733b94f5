"""Exact linear programming over rationals.

Two-phase primal simplex with Bland's anti-cycling pivot rule.  Every tableau
entry is an exact rational kept in lowest terms, so results are deterministic
pure functions of the input: no tolerances, no seeds.

Internally the tableau uses gmpy2.mpq when available (identical semantics to
fractions.Fraction, considerably faster on large numerators); inputs and
outputs are always fractions.Fraction.

Every reported optimum carries a dual certificate read off the final tableau.
solve_lp recomputes dual feasibility and the dual objective from the original
constraint data and refuses to return an optimum whose duality gap is not
exactly zero.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

LESS_EQUAL = "<="
GREATER_EQUAL = ">="
EQUAL = "=="
_SENSES = (LESS_EQUAL, GREATER_EQUAL, EQUAL)

if os.environ.get("CONTRACTOPT_PURE_FRACTIONS"):
    _mpq = None
else:
    try:
        from gmpy2 import mpq as _mpq
    except ImportError:  # pragma: no cover - gmpy2 is a hard dependency
        _mpq = None


class LpError(Exception):
    """Malformed linear program."""


class LpInternalError(Exception):
    """The solver contradicted itself (e.g. a nonzero duality gap)."""


@dataclass(frozen=True)
class LinearProgram:
    """maximize objective . x subject to lhs x (sense) rhs.

    ``nonnegative[j]`` is True for x_j >= 0 and False for a free variable.
    """

    objective: tuple[Fraction, ...]
    lhs: tuple[tuple[Fraction, ...], ...]
    rhs: tuple[Fraction, ...]
    senses: tuple[str, ...]
    nonnegative: tuple[bool, ...]

    def __post_init__(self):
        n = len(self.objective)
        if len(self.nonnegative) != n:
            raise LpError("nonnegative flags do not match variable count")
        if not (len(self.lhs) == len(self.rhs) == len(self.senses)):
            raise LpError("constraint row counts disagree")
        for row in self.lhs:
            if len(row) != n:
                raise LpError("constraint row width does not match variable count")
        for sense in self.senses:
            if sense not in _SENSES:
                raise LpError(f"unknown constraint sense {sense!r}")

    @property
    def num_variables(self) -> int:
        return len(self.objective)

    @property
    def num_constraints(self) -> int:
        return len(self.rhs)


@dataclass(frozen=True)
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective_value: Fraction | None
    solution: tuple[Fraction, ...] | None
    dual_solution: tuple[Fraction, ...] | None
    dual_objective: Fraction | None
    pivots: int

    @property
    def is_optimal(self) -> bool:
        return self.status == "optimal"


def make_program(
    objective: Sequence[Fraction | int],
    lhs: Sequence[Sequence[Fraction | int]],
    rhs: Sequence[Fraction | int],
    senses: Sequence[str],
    nonnegative: Sequence[bool] | None = None,
) -> LinearProgram:
    objective = tuple(Fraction(c) for c in objective)
    if nonnegative is None:
        nonnegative = (True,) * len(objective)
    return LinearProgram(
        objective=objective,
        lhs=tuple(tuple(Fraction(a) for a in row) for row in lhs),
        rhs=tuple(Fraction(b) for b in rhs),
        senses=tuple(senses),
        nonnegative=tuple(bool(f) for f in nonnegative),
    )


def check_feasible(lp: LinearProgram, x: Sequence[Fraction]) -> bool:
    """Exact feasibility test, used as an independent oracle in tests."""
    if len(x) != lp.num_variables:
        raise LpError("point dimension mismatch")
    for xj, nn in zip(x, lp.nonnegative):
        if nn and xj < 0:
            return False
    for row, sense, b in zip(lp.lhs, lp.senses, lp.rhs):
        lhs = sum(a * xj for a, xj in zip(row, x))
        if sense == LESS_EQUAL and lhs > b:
            return False
        if sense == GREATER_EQUAL and lhs < b:
            return False
        if sense == EQUAL and lhs != b:
            return False
    return True


if _mpq is not None:
    def _to_internal(f):
        return _mpq(f.numerator, f.denominator)

    def _to_fraction(q) -> Fraction:
        return Fraction(int(q.numerator), int(q.denominator))
else:
    def _to_internal(f):
        return f

    def _to_fraction(q) -> Fraction:
        return q


class _Simplex:
    """Standard equality-form tableau: rows Ax = b, b >= 0, x >= 0."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        zero = _to_internal(Fraction(0))
        one = _to_internal(Fraction(1))
        self.zero = zero
        self.one = one

        # Variable layout: one column per nonnegative original variable, two
        # (positive and negative part) per free variable, then one slack or
        # surplus per inequality row, then artificials.
        self.var_cols: list[tuple[int, int]] = []  # (plus_col, minus_col or -1)
        cols = 0
        for nn in lp.nonnegative:
            if nn:
                self.var_cols.append((cols, -1))
                cols += 1
            else:
                self.var_cols.append((cols, cols + 1))
                cols += 2
        self.num_struct = cols

        m = lp.num_constraints
        self.row_sign = [1] * m
        senses = []
        for i, b in enumerate(lp.rhs):
            sense = lp.senses[i]
            if b < 0:
                self.row_sign[i] = -1
                sense = {LESS_EQUAL: GREATER_EQUAL, GREATER_EQUAL: LESS_EQUAL, EQUAL: EQUAL}[sense]
            senses.append(sense)

        slack_cols = {}
        self.slack_sign = {}  # column -> (original row, +-1 coefficient)
        for i, sense in enumerate(senses):
            if sense in (LESS_EQUAL, GREATER_EQUAL):
                slack_cols[i] = cols
                self.slack_sign[cols] = (i, 1 if sense == LESS_EQUAL else -1)
                cols += 1
        art_cols = {}
        for i, sense in enumerate(senses):
            if sense in (GREATER_EQUAL, EQUAL):
                art_cols[i] = cols
                cols += 1
        self.num_cols = cols
        self.art_start = cols - len(art_cols)

        rows = []
        basis = []
        unit_col = []  # per row: the standard-form column equal to +e_i
        for i in range(m):
            sgn = self.row_sign[i]
            row = [zero] * (cols + 1)
            for j, a in enumerate(self.lp.lhs[i]):
                if a:
                    q = _to_internal(a if sgn == 1 else -a)
                    pc, mc = self.var_cols[j]
                    row[pc] = q
                    if mc >= 0:
                        row[mc] = -q
            b = lp.rhs[i]
            row[cols] = _to_internal(b if sgn == 1 else -b)
            if i in slack_cols:
                row[slack_cols[i]] = one if senses[i] == LESS_EQUAL else -one
            if i in art_cols:
                row[art_cols[i]] = one
                basis.append(art_cols[i])
                unit_col.append(art_cols[i])
            else:
                basis.append(slack_cols[i])
                unit_col.append(slack_cols[i])
            rows.append(row)
        self.rows = rows
        self.basis = basis
        self.unit_col = unit_col
        self.alive = list(range(m))  # original row index per tableau row
        self.pivots = 0

        # Objective over standard-form columns.
        self.cost = [zero] * cols
        for j, c in enumerate(lp.objective):
            if c:
                q = _to_internal(c)
                pc, mc = self.var_cols[j]
                self.cost[pc] = q
                if mc >= 0:
                    self.cost[mc] = -q

    # -- tableau mechanics -------------------------------------------------

    def _pivot(self, zrow, pr, pc):
        rows = self.rows
        row = rows[pr]
        piv = row[pc]
        if piv != self.one:
            inv = self.one / piv
            rows[pr] = row = [x * inv for x in row]
        for r in range(len(rows)):
            if r == pr:
                continue
            other = rows[r]
            f = other[pc]
            if f:
                rows[r] = [a - f * b for a, b in zip(other, row)]
        f = zrow[pc]
        if f:
            zrow[:] = [a - f * b for a, b in zip(zrow, row)]
        self.basis[pr] = pc
        self.pivots += 1

    def _run(self, zrow, allow_art: bool) -> str:
        """Bland's rule: entering = lowest eligible column, leaving = lowest
        basis index among minimum ratios.  Returns "optimal" or "unbounded"."""
        limit = self.num_cols if allow_art else self.art_start
        rows = self.rows
        while True:
            pc = -1
            for j in range(limit):
                if zrow[j] < 0:
                    pc = j
                    break
            if pc < 0:
                return "optimal"
            pr = -1
            best_num = best_den = None  # ratio best_num / best_den
            for r in range(len(rows)):
                a = rows[r][pc]
                if a > 0:
                    b = rows[r][-1]
                    if pr < 0:
                        pr, best_num, best_den = r, b, a
                    else:
                        # b/a vs best_num/best_den with positive denominators
                        diff = b * best_den - best_num * a
                        if diff < 0 or (diff == 0 and self.basis[r] < self.basis[pr]):
                            pr, best_num, best_den = r, b, a
            if pr < 0:
                return "unbounded"
            self._pivot(zrow, pr, pc)

    def _zrow_for(self, cost) -> list:
        """c_B B^-1 A - c over the current tableau, plus the value cell."""
        zrow = [-c for c in cost] + [self.zero]
        for r, bj in enumerate(self.basis):
            cb = cost[bj]
            if cb:
                row = self.rows[r]
                zrow[:] = [z + cb * a for z, a in zip(zrow, row)]
        return zrow

    # -- phases ------------------------------------------------------------

    def solve(self) -> LpResult:
        # Phase 1: drive the artificials to zero.
        if self.art_start < self.num_cols:
            art_cost = [self.zero] * self.num_cols
            for j in range(self.art_start, self.num_cols):
                art_cost[j] = -self.one
            zrow = self._zrow_for(art_cost)
            status = self._run(zrow, allow_art=True)
            if status != "optimal":  # pragma: no cover - phase 1 is bounded
                raise LpInternalError("phase 1 reported unbounded")
            if zrow[-1] != 0:
                return LpResult("infeasible", None, None, None, None, self.pivots)
            self._evict_artificials()

        zrow = self._zrow_for(self.cost)
        status = self._run(zrow, allow_art=False)
        if status == "unbounded":
            return LpResult("unbounded", None, None, None, None, self.pivots)
        return self._certified_result(zrow)

    def _evict_artificials(self):
        """Pivot basic artificials out; drop rows that prove redundant."""
        r = 0
        while r < len(self.rows):
            if self.basis[r] < self.art_start:
                r += 1
                continue
            row = self.rows[r]
            pc = -1
            for j in range(self.art_start):
                if row[j]:
                    pc = j
                    break
            if pc >= 0:
                dummy = [self.zero] * (self.num_cols + 1)
                self._pivot(dummy, r, pc)
                r += 1
            else:
                # The row is 0 = 0 over real columns: a dependent constraint.
                del self.rows[r]
                del self.basis[r]
                del self.unit_col[r]
                del self.alive[r]

    # -- certificate -------------------------------------------------------

    def _certified_result(self, zrow) -> LpResult:
        lp = self.lp
        values = [self.zero] * self.num_cols
        for r, bj in enumerate(self.basis):
            values[bj] = self.rows[r][-1]
        x = []
        for pc, mc in self.var_cols:
            v = values[pc]
            if mc >= 0:
                v = v - values[mc]
            x.append(_to_fraction(v))
        primal = sum(c * xj for c, xj in zip(lp.objective, x))

        # y_i = c_B . (B^-1 e_i); the designated unit column of each
        # surviving row holds B^-1 e_i in the final tableau.
        y_std = []
        for col in self.unit_col:
            acc = self.zero
            for r, bj in enumerate(self.basis):
                cb = self.cost[bj]
                if cb:
                    a = self.rows[r][col]
                    if a:
                        acc += cb * a
            y_std.append(acc)

        # Weak-duality certificate against the original data: for every
        # non-artificial standard column, y . A_col >= cost_col, and
        # y . b equals the primal objective exactly.
        dual_obj = self.zero
        col_acc = [self.zero] * self.art_start
        for pos, i in enumerate(self.alive):
            yi = y_std[pos]
            if not yi:
                continue
            sgn = self.row_sign[i]
            for j, a in enumerate(lp.lhs[i]):
                if a:
                    q = _to_internal(a if sgn == 1 else -a)
                    pc, mc = self.var_cols[j]
                    col_acc[pc] += yi * q
                    if mc >= 0:
                        col_acc[mc] -= yi * q
            b = lp.rhs[i]
            dual_obj += yi * _to_internal(b if sgn == 1 else -b)
        row_pos = {i: pos for pos, i in enumerate(self.alive)}
        for col, (i, coeff) in self.slack_sign.items():
            if i in row_pos:
                col_acc[col] += y_std[row_pos[i]] * (self.one if coeff == 1 else -self.one)
        for j in range(self.art_start):
            if col_acc[j] < self.cost[j]:
                raise LpInternalError("dual certificate infeasible at column %d" % j)
        if _to_fraction(dual_obj) != primal:
            raise LpInternalError("nonzero duality gap")

        dual = [Fraction(0)] * lp.num_constraints
        for pos, i in enumerate(self.alive):
            yi = _to_fraction(y_std[pos])
            dual[i] = yi if self.row_sign[i] == 1 else -yi
        return LpResult(
            status="optimal",
            objective_value=primal,
            solution=tuple(x),
            dual_solution=tuple(dual),
            dual_objective=_to_fraction(dual_obj),
            pivots=self.pivots,
        )


def solve_lp(lp: LinearProgram) -> LpResult:
    """Solve exactly; raises LpInternalError if the dual certificate fails."""
    return _Simplex(lp).solve()
