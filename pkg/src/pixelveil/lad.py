"""Least-absolute-deviations fit of a target vector as a weighted sum of gallery vectors.

``min_W sum_i |sum_j W_j X[j, i] - Y_i|`` becomes a linear program over
``(u, W)``: minimize ``sum u`` subject to ``u_i >= r_i`` and ``u_i >= -r_i``,
with ``r = X^T W - Y`` the residual. Weights are unconstrained in sign.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidInput, SolverError


@dataclass(frozen=True)
class LadProblem:
    gallery: np.ndarray  # (m, n), one identity per row
    target: np.ndarray  # (n,)

    def __post_init__(self):
        g = np.array(self.gallery, dtype=np.float64)
        y = np.array(self.target, dtype=np.float64).ravel()
        if g.ndim == 1:
            g = g[None, :]
        if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
            raise InvalidInput(f"gallery must be a non-empty (m, n) array, got shape {g.shape}")
        if g.shape[1] != y.size:
            raise InvalidInput(f"gallery vectors have dimension {g.shape[1]}, target has {y.size}")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(y))):
            raise InvalidInput("gallery and target must be finite")
        object.__setattr__(self, "gallery", g)
        object.__setattr__(self, "target", y)

    @property
    def m(self) -> int:
        return self.gallery.shape[0]

    @property
    def n(self) -> int:
        return self.gallery.shape[1]


@dataclass(frozen=True)
class LadProgram:
    """``min c @ z  s.t.  A_ub @ z <= b_ub`` with ``z = (u_1..u_n, W_1..W_m)``."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    bounds: list
    n: int
    m: int

    @property
    def num_variables(self) -> int:
        return self.c.size

    @property
    def num_constraints(self) -> int:
        return self.b_ub.size

    def slack(self, u, w) -> np.ndarray:
        """``b_ub - A_ub @ z``; feasible iff every entry is >= 0."""
        z = np.concatenate([np.asarray(u, float), np.asarray(w, float)])
        return self.b_ub - self.a_ub @ z


def build_lad_program(problem: LadProblem) -> LadProgram:
    n, m = problem.n, problem.m
    xt = problem.gallery.T  # (n, m): row i holds X[j, i] over j
    eye = np.eye(n)
    # u_i >= r_i   ->  -u_i + X^T W <= Y
    # u_i >= -r_i  ->  -u_i - X^T W <= -Y
    a_ub = np.block([[-eye, xt], [-eye, -xt]])
    b_ub = np.concatenate([problem.target, -problem.target])
    c = np.concatenate([np.ones(n), np.zeros(m)])
    bounds = [(None, None)] * (n + m)
    return LadProgram(c, a_ub, b_ub, bounds, n, m)


@dataclass(frozen=True)
class LadSolution:
    weights: np.ndarray
    objective: float
    residuals: np.ndarray
    u: np.ndarray
    status: str

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "objective": self.objective, "status": self.status}


def solve_lad(problem: LadProblem) -> LadSolution:
    prog = build_lad_program(problem)
    res = linprog(
        prog.c,
        A_ub=prog.a_ub,
        b_ub=prog.b_ub,
        bounds=prog.bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0 or res.x is None:
        raise SolverError(f"LP solver failed (status {res.status}): {res.message}")
    u = res.x[: prog.n]
    w = res.x[prog.n :]
    residuals = problem.gallery.T @ w - problem.target
    # report the true L1 residual; u can sit a hair above |r| at solver tolerance
    objective = float(np.sum(np.abs(residuals)))
    return LadSolution(w, objective, residuals, u, "optimal")


def approximate_identity(gallery, target) -> tuple[np.ndarray, np.ndarray, float]:
    """Weights, synthesized vector ``sum_j W_j X_j`` and L1 residual."""
    problem = LadProblem(np.asarray(gallery, dtype=np.float64), np.asarray(target, dtype=np.float64))
    sol = solve_lad(problem)
    return sol.weights, problem.gallery.T @ sol.weights, sol.objective
