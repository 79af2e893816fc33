"""Least-squares Galerkin machinery on sampled shallow-network bases.

Two granularities share the same form terms:

  * unit level: the n hidden units of one network are the trial space, used
    every training epoch to refit the output coefficients;
  * basis level: previously trained (and normalized) networks are the trial
    space of the outer solve.

Unit-level work runs off raw activation derivative stacks so that the
training gradient can reuse them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forms import (
    NodeFunctional,
    SampleBundle,
    SlotFields,
    VariationalProblem,
    bilinear_functional,
    load,
)
from .network import ActivationSpec
from .quadrature import QuadratureRule

# relative sizes defining "numerically singular" for the fallback solver
JITTER_SCALE = 1e-12
EIG_FLOOR = 1e-12


@dataclass
class RoleStack:
    """Raw activation derivative stacks s[k][i, j] = act^(k)(w_j . x_i + b_j)."""

    rule: QuadratureRule
    s: list[np.ndarray]


@dataclass
class EpochStacks:
    """Per-role unit stacks for one hidden layer (W, b) on one rule set."""

    W: np.ndarray
    b: np.ndarray
    act: ActivationSpec
    roles: dict[str, RoleStack]

    @property
    def width(self) -> int:
        return self.W.shape[1]


def build_stacks(
    problem: VariationalProblem,
    W: np.ndarray,
    b: np.ndarray,
    act: ActivationSpec,
    which="training",
    param_grads: bool = False,
) -> EpochStacks:
    """Evaluate activation derivatives of every unit on every role's nodes.

    With param_grads the stacks go one derivative order deeper than the form
    needs, enough to differentiate each slot with respect to W and b.
    """
    rules = problem.rules_for(which)
    extra = 1 if param_grads else 0
    roles = {}
    for role, order in problem.role_orders.items():
        if role not in rules:
            continue
        rule = rules[role]
        Z = rule.nodes @ W + b
        roles[role] = RoleStack(rule, act.stack(Z, order + extra))
    return EpochStacks(W, b, act, roles)


def _slot_matrices(stacks: EpochStacks, role: str, slot: str) -> list[np.ndarray]:
    """The (nodes x units) matrices whose columns sample one slot of each unit."""
    rs = stacks.roles[role]
    W = stacks.W
    if slot == "value":
        return [rs.s[0]]
    if slot == "grad":
        return [rs.s[1] * W[a] for a in range(W.shape[0])]
    if slot == "second":
        return [rs.s[2] * (W * W).sum(axis=0)]
    if slot == "normal_deriv":
        return [rs.s[1] * (rs.rule.normals @ W)]
    raise ValueError(f"unknown slot {slot!r}")


def assemble_gram(problem: VariationalProblem, stacks: EpochStacks) -> np.ndarray:
    """K[j, k] = a(unit_j, unit_k); exactly symmetric by construction."""
    n = stacks.width
    K = np.zeros((n, n))
    for term in problem.terms:
        sw = np.sqrt(stacks.roles[term.role].rule.weights)
        for M in _slot_matrices(stacks, term.role, term.slot):
            A = sw[:, None] * M
            K += term.coef * (A.T @ A)
    return K


def functional_vector(func: NodeFunctional, stacks: EpochStacks) -> np.ndarray:
    """F[j] = func(unit_j) for a per-node coefficient functional."""
    F = np.zeros(stacks.width)
    for role, entry in func.entries.items():
        try:
            rs = stacks.roles[role]
        except KeyError:
            raise ValueError(f"stacks carry no role {role!r}") from None
        if entry["val"] is not None:
            F += rs.s[0].T @ entry["val"]
        if entry["grad"] is not None:
            F += (rs.s[1] * (entry["grad"] @ stacks.W)).sum(axis=0)
        if entry["lap"] is not None:
            F += (stacks.W**2).sum(axis=0) * (rs.s[2].T @ entry["lap"])
    return F


def slot_bundle(problem: VariationalProblem, stacks: EpochStacks, c: np.ndarray) -> SampleBundle:
    """The network with output coefficients c as a bundle of slot fields."""
    rules = {role: rs.rule for role, rs in stacks.roles.items()}
    fields = {}
    w2 = (stacks.W**2).sum(axis=0)
    for role, order in problem.role_orders.items():
        if role not in stacks.roles:
            continue
        rs = stacks.roles[role]
        values = rs.s[0] @ c
        gradient = rs.s[1] @ (c[:, None] * stacks.W.T) if order >= 1 else None
        lap = rs.s[2] @ (c * w2) if order >= 2 else None
        fields[role] = SlotFields(values, gradient, lap)
    return SampleBundle(rules, fields)


# ---------------------------------------------------------------------------
# linear algebra

def spd_solve(K: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive semidefinite system, degrading gracefully.

    Cholesky certifies the definite case; a trace-scaled jitter retries the
    barely indefinite one; otherwise eigenvalues below EIG_FLOOR * lambda_max
    are truncated and the system is solved in the remaining span.
    """
    try:
        np.linalg.cholesky(K)
        return np.linalg.solve(K, F)
    except np.linalg.LinAlgError:
        pass
    shift = JITTER_SCALE * np.trace(K) / K.shape[0]
    if shift > 0.0:
        Kj = K + shift * np.eye(K.shape[0])
        try:
            np.linalg.cholesky(Kj)
            return np.linalg.solve(Kj, F)
        except np.linalg.LinAlgError:
            pass
    lam, Q = np.linalg.eigh(K)
    if lam[-1] <= 0.0:
        return np.zeros_like(F)
    keep = lam > EIG_FLOOR * lam[-1]
    Qk = Q[:, keep]
    return Qk @ ((Qk.T @ F) / lam[keep])


def condition_number(K: np.ndarray) -> tuple[float, bool]:
    """(lambda_max / lambda_min, is positive definite); (inf, False) otherwise."""
    lam = np.linalg.eigvalsh(K)
    if lam[0] <= 0.0:
        return float("inf"), False
    return float(lam[-1] / lam[0]), True


@dataclass
class LsqResult:
    """One least-squares fit of output coefficients on frozen hidden units."""

    coefficients: np.ndarray
    gram: np.ndarray
    rhs: np.ndarray
    eta: float


def galerkin_lsq(
    problem: VariationalProblem, stacks: EpochStacks, func: NodeFunctional
) -> LsqResult:
    """Maximize <r, v>/|||v||| over output coefficients: solve K c = F.

    At the optimum <r, v>/|||v||| = |||v||| = sqrt(c . F), which is the eta
    this returns.
    """
    K = assemble_gram(problem, stacks)
    F = functional_vector(func, stacks)
    c = spd_solve(K, F)
    eta = float(np.sqrt(max(c @ F, 0.0)))
    return LsqResult(c, K, F, eta)


def basis_gram(problem: VariationalProblem, bundles: list[SampleBundle]) -> np.ndarray:
    """K[i, j] = a(phi_i, phi_j) for sampled basis functions."""
    m = len(bundles)
    K = np.empty((m, m))
    for i, bi in enumerate(bundles):
        func = bilinear_functional(problem, bi)
        for j in range(i, m):
            K[i, j] = K[j, i] = func.apply(bundles[j])
    return K


def basis_load(problem: VariationalProblem, bundles: list[SampleBundle]) -> np.ndarray:
    """F[i] = L(phi_i)."""
    return np.array([load(problem, b) for b in bundles])


def solve_on_basis(
    problem: VariationalProblem, bundles: list[SampleBundle]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Galerkin solve with previously trained basis functions: (coef, K, F)."""
    K = basis_gram(problem, bundles)
    F = basis_load(problem, bundles)
    return spd_solve(K, F), K, F
