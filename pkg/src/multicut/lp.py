"""Dense two-phase revised simplex with bounded variables and row duals.

Solves    min c'x   s.t.   A_eq x = b_eq,   A_le x <= b_le,   lower <= x <= upper

with the default bounds x >= 0. The solver terminates on a basic solution,
i.e. a vertex of the feasible polyhedron, and returns one multiplier per row
signed so that at optimality

    objective == duals_eq . b_eq + duals_le . b_le

whenever the only active variable bounds are x >= 0 (multipliers of binding
<= rows then come out nonpositive for a minimization). This is the sign
convention the decomposition passes rely on to build valid lower-bounding
cuts from the multipliers of the state-coupled rows.

Pricing is Dantzig's rule with deterministic tie-breaks; after a long run of
degenerate pivots the solver falls back to Bland's rule, which cannot cycle.
Problems with very many inequality rows (the cut-constrained stage problems)
are solved by activating violated rows lazily around the same simplex core;
rows never activated carry zero multipliers and the returned point is still
a vertex of the full polyhedron because it is a feasible vertex of a
relaxation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
BREAKDOWN = "breakdown"

_TOL_FEAS = 1e-8       # feasibility, relative to row scale
_TOL_DJ = 1e-9         # reduced-cost optimality threshold
_TOL_PIVOT = 1e-10     # smallest admissible pivot element
_STALL_LIMIT = 100     # degenerate pivots before switching to Bland's rule
_REFACTOR_EVERY = 50   # basis refactorizations
_LAZY_ROWS_FROM = 48   # activate <= rows lazily above this row count
_LAZY_BATCH = 32       # violated rows activated per round


def _as_matrix(a, ncols: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    return a


def _as_vector(v, length: int | None = None) -> np.ndarray:
    if v is None:
        return np.zeros(0 if length is None else length)
    out = np.atleast_1d(np.asarray(v, dtype=float))
    return out


@dataclass
class LPProblem:
    """min c'x s.t. a_eq x = b_eq, a_le x <= b_le, lower <= x <= upper."""

    c: np.ndarray
    a_eq: np.ndarray = None
    b_eq: np.ndarray = None
    a_le: np.ndarray = None
    b_le: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None

    def __post_init__(self):
        self.c = _as_vector(self.c)
        n = self.c.size
        self.a_eq = _as_matrix(self.a_eq, n)
        self.a_le = _as_matrix(self.a_le, n)
        self.b_eq = _as_vector(self.b_eq, self.a_eq.shape[0])
        self.b_le = _as_vector(self.b_le, self.a_le.shape[0])
        self.lower = np.zeros(n) if self.lower is None else _as_vector(self.lower)
        self.upper = np.full(n, np.inf) if self.upper is None else _as_vector(self.upper)
        if self.a_eq.shape != (self.b_eq.size, n):
            raise ValueError(f"equality block is {self.a_eq.shape}, expected ({self.b_eq.size}, {n})")
        if self.a_le.shape != (self.b_le.size, n):
            raise ValueError(f"inequality block is {self.a_le.shape}, expected ({self.b_le.size}, {n})")
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("bound vectors must match the variable count")
        for name, arr in (("c", self.c), ("a_eq", self.a_eq), ("b_eq", self.b_eq),
                          ("a_le", self.a_le), ("b_le", self.b_le)):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite coefficient in {name}")

    @property
    def n(self) -> int:
        return self.c.size


@dataclass
class LPSolution:
    status: str
    x: np.ndarray = None
    duals_eq: np.ndarray = None
    duals_le: np.ndarray = None
    objective: float = np.nan
    ray: np.ndarray = None          # unbounded direction / infeasibility certificate
    pivots: int = 0
    activated_rows: np.ndarray = None  # <= rows the lazy loop actually added


class _Core:
    """Revised simplex on  min c'x, A x = b, lo <= x <= hi  (A includes slacks)."""

    def __init__(self, a: np.ndarray, b: np.ndarray, lo: np.ndarray, hi: np.ndarray):
        m, n = a.shape
        self.m, self.n = m, n
        start = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
        resid = b - a @ start
        sign = np.where(resid >= 0.0, 1.0, -1.0)
        art = np.zeros((m, m))
        np.fill_diagonal(art, sign)
        self.a = np.hstack([a, art]) if m else a.copy()
        self.b = b
        self.ntot = n + m
        self.lo = np.concatenate([lo, np.zeros(m)])
        self.hi = np.concatenate([hi, np.full(m, np.inf)])
        self.xval = np.concatenate([start, np.abs(resid)])
        self.basis = np.arange(n, n + m)
        self.in_basis = np.zeros(self.ntot, dtype=bool)
        self.in_basis[self.basis] = True
        self.binv = np.zeros((m, m))
        np.fill_diagonal(self.binv, sign)  # inverse of diag(sign)
        self.xb = self.xval[self.basis].copy()
        self.pivots = 0
        self.bland = False
        self.stall = 0
        self.max_pivots = 20000 + 200 * (m + n)
        self.ray = None

    # -- basis maintenance -------------------------------------------------

    def _refactor(self) -> bool:
        try:
            self.binv = np.linalg.inv(self.a[:, self.basis])
        except np.linalg.LinAlgError:
            return False
        off = self.xval.copy()
        off[self.basis] = 0.0
        self.xb = self.binv @ (self.b - self.a @ off)
        return True

    def _duals(self, c: np.ndarray) -> np.ndarray:
        return self.binv.T @ c[self.basis]

    # -- main loop ---------------------------------------------------------

    def minimize(self, c: np.ndarray, allowed: np.ndarray) -> str:
        m = self.m
        while True:
            if self.pivots >= self.max_pivots:
                return BREAKDOWN
            if self.pivots and self.pivots % _REFACTOR_EVERY == 0 and not self._refactor():
                return BREAKDOWN
            y = self._duals(c)
            d = c - self.a.T @ y
            dj_tol = _TOL_DJ * max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
            nb = ~self.in_basis & allowed
            can_inc = nb & (self.xval < self.hi) & (d < -dj_tol)
            can_dec = nb & (self.xval > self.lo) & (d > dj_tol)
            if not (can_inc.any() or can_dec.any()):
                return OPTIMAL
            if self.bland:
                j = int(np.nonzero(can_inc | can_dec)[0][0])
            else:
                score = np.where(can_inc, -d, 0.0)
                score = np.where(can_dec & (d > score), d, score)
                j = int(np.argmax(score))
            sigma = 1.0 if can_inc[j] else -1.0

            w = self.binv @ self.a[:, j]
            dxb = -sigma * w
            ratios = np.full(m, np.inf)
            down = dxb < -_TOL_PIVOT
            if down.any():
                lob = self.lo[self.basis[down]]
                ratios[down] = np.where(np.isfinite(lob), (self.xb[down] - lob) / (-dxb[down]), np.inf)
            up = dxb > _TOL_PIVOT
            if up.any():
                hib = self.hi[self.basis[up]]
                ratios[up] = np.where(np.isfinite(hib), (hib - self.xb[up]) / dxb[up], np.inf)
            ratios = np.maximum(ratios, 0.0)
            basic_min = float(ratios.min()) if m else np.inf
            span = self.hi[j] - self.lo[j]  # bound-to-bound flip distance
            delta = min(basic_min, span)
            if not np.isfinite(delta):
                ray = np.zeros(self.ntot)
                ray[j] = sigma
                ray[self.basis] = dxb
                self.ray = ray
                return UNBOUNDED

            # a pivot with (near) zero step length is degenerate
            self.stall = self.stall + 1 if delta <= 1e-12 else 0
            if self.stall >= _STALL_LIMIT:
                self.bland = True

            self.pivots += 1
            if span < basic_min - 1e-300 and np.isfinite(span):
                # entering variable flips to its opposite bound; basis unchanged
                self.xb += dxb * span
                self.xval[j] = self.hi[j] if sigma > 0 else self.lo[j]
                continue
            tied = np.nonzero(ratios <= basic_min)[0]
            r = int(tied[np.argmin(self.basis[tied])])
            leaving = self.basis[r]
            self.xb += dxb * delta
            self.xval[leaving] = self.lo[leaving] if dxb[r] < 0 else self.hi[leaving]
            self.in_basis[leaving] = False
            self.in_basis[j] = True
            enter_val = self.xval[j] + sigma * delta
            self.basis[r] = j
            self.xb[r] = enter_val
            piv = w[r]
            if abs(piv) < _TOL_PIVOT:
                if not self._refactor():
                    return BREAKDOWN
                continue
            br = self.binv[r] / piv
            self.binv -= np.outer(w, br)
            self.binv[r] = br

    def solution(self) -> np.ndarray:
        x = self.xval.copy()
        x[self.basis] = self.xb
        return x


def _solve_core(a: np.ndarray, b: np.ndarray, c: np.ndarray,
                lo: np.ndarray, hi: np.ndarray):
    """Two-phase driver. Returns (status, x_full, y, ray, pivots)."""
    m, n = a.shape
    core = _Core(a, b, lo, hi)
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)
    if m:
        c1 = np.concatenate([np.zeros(n), np.ones(m)])
        allowed = np.ones(core.ntot, dtype=bool)
        status = core.minimize(c1, allowed)
        if status != OPTIMAL:
            return BREAKDOWN, None, None, None, core.pivots
        infeas = float(c1[core.basis] @ core.xb)
        if infeas > _TOL_FEAS * scale:
            y = core._duals(c1)
            return INFEASIBLE, None, y, y, core.pivots
        # pin artificials at zero; they may linger in the basis but cannot move
        core.lo[n:] = 0.0
        core.hi[n:] = 0.0
        core.xval[n:] = np.where(core.in_basis[n:], core.xval[n:], 0.0)
    c2 = np.concatenate([c, np.zeros(m)])
    allowed = np.zeros(core.ntot, dtype=bool)
    allowed[:n] = True
    status = core.minimize(c2, allowed)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None, core.ray[:n], core.pivots
    if status != OPTIMAL:
        return BREAKDOWN, None, None, None, core.pivots
    x = core.solution()
    y = core._duals(c2)
    return OPTIMAL, x[:n], y, None, core.pivots


def _solve_all_rows(p: LPProblem) -> LPSolution:
    n, m_eq, m_le = p.n, p.b_eq.size, p.b_le.size
    a = np.zeros((m_eq + m_le, n + m_le))
    a[:m_eq, :n] = p.a_eq
    a[m_eq:, :n] = p.a_le
    if m_le:
        a[m_eq:, n:] = np.eye(m_le)
    b = np.concatenate([p.b_eq, p.b_le])
    lo = np.concatenate([p.lower, np.zeros(m_le)])
    hi = np.concatenate([p.upper, np.full(m_le, np.inf)])
    c_ext = np.concatenate([p.c, np.zeros(m_le)])
    status, x, y, ray, pivots = _solve_core(a, b, c_ext, lo, hi)
    if status == OPTIMAL:
        xs = x[:n]
        np.copyto(xs, p.lower, where=np.abs(xs - p.lower) < 1e-12)
        return LPSolution(OPTIMAL, xs, y[:m_eq], y[m_eq:], float(p.c @ xs), None, pivots)
    if status == UNBOUNDED:
        return LPSolution(UNBOUNDED, ray=ray[:n], pivots=pivots)
    if status == INFEASIBLE:
        return LPSolution(INFEASIBLE, ray=y, pivots=pivots)
    return LPSolution(BREAKDOWN, pivots=pivots)


def _pick_violated(excluded: np.ndarray, amount: np.ndarray, thresh: np.ndarray,
                   groups: np.ndarray | None) -> list[int]:
    """Rows to activate: the worst offender of each row group (the worst
    _LAZY_BATCH offenders overall when no grouping is given)."""
    ex_idx = np.nonzero(excluded)[0]
    hot = amount > thresh
    if not hot.any():
        return []
    if groups is None:
        order = np.argsort(-amount, kind="stable")
        return [int(ex_idx[pos]) for pos in order[:_LAZY_BATCH] if hot[pos]]
    picked: dict[int, tuple[float, int]] = {}
    for pos in np.nonzero(hot)[0]:
        g = int(groups[ex_idx[pos]])
        a = float(amount[pos])
        if g not in picked or a > picked[g][0]:
            picked[g] = (a, int(ex_idx[pos]))
    return sorted(row for _, row in picked.values())


def _solve_lazy(p: LPProblem, hint_rows, row_groups) -> LPSolution:
    m_le = p.b_le.size
    row_scale = np.maximum(1.0, np.abs(p.b_le))
    groups = None if row_groups is None else np.asarray(row_groups)
    active: list[int] = sorted(set(int(i) for i in hint_rows)) if hint_rows is not None else []
    excluded = np.ones(m_le, dtype=bool)
    excluded[active] = False
    pivots = 0
    while True:
        sub = LPProblem(p.c, p.a_eq, p.b_eq, p.a_le[active], p.b_le[active],
                        p.lower, p.upper)
        sol = _solve_all_rows(sub)
        pivots += sol.pivots
        if sol.status == INFEASIBLE or sol.status == BREAKDOWN:
            sol.pivots = pivots
            return sol
        if sol.status == UNBOUNDED:
            along = p.a_le[excluded] @ sol.ray
            picked = _pick_violated(excluded, along, np.full(along.shape, 1e-12), groups)
            if not picked:
                sol.pivots = pivots
                return sol
        else:
            viol = p.a_le[excluded] @ sol.x - p.b_le[excluded]
            picked = _pick_violated(excluded, viol, _TOL_FEAS * row_scale[excluded], groups)
            if not picked:
                duals = np.zeros(m_le)
                duals[active] = sol.duals_le
                return LPSolution(OPTIMAL, sol.x, sol.duals_eq, duals,
                                  sol.objective, None, pivots,
                                  activated_rows=np.array(active, dtype=int))
        excluded[picked] = False
        active = sorted(set(active) | set(picked))


def solve_lp(problem: LPProblem, hint_rows=None, row_groups=None,
             lazy_rows_from: int = _LAZY_ROWS_FROM) -> LPSolution:
    """Solve to a vertex optimum with row multipliers.

    For problems above the lazy threshold, <= rows are activated on demand.
    hint_rows names rows to activate up front (callers with epigraph rows
    pass one supporting row per epigraph variable so the first relaxation is
    bounded); row_groups optionally maps every <= row to a group so each
    activation round picks the worst offender of every group instead of a
    global batch.
    """
    if problem.b_le.size > lazy_rows_from:
        return _solve_lazy(problem, hint_rows, row_groups)
    return _solve_all_rows(problem)


def lp_to_text(p: LPProblem) -> str:
    """Human-readable dump, for debugging only."""
    lines = ["min " + " + ".join(f"{ci:g}*x{i}" for i, ci in enumerate(p.c) if ci)]
    for row, rhs in zip(p.a_eq, p.b_eq):
        lines.append("  " + " + ".join(f"{v:g}*x{i}" for i, v in enumerate(row) if v) + f" == {rhs:g}")
    for row, rhs in zip(p.a_le, p.b_le):
        lines.append("  " + " + ".join(f"{v:g}*x{i}" for i, v in enumerate(row) if v) + f" <= {rhs:g}")
    for i, (lo, hi) in enumerate(zip(p.lower, p.upper)):
        if lo != 0.0 or np.isfinite(hi):
            lines.append(f"  {lo:g} <= x{i} <= {hi:g}")
    return "\n".join(lines)
