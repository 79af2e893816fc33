"""Training one shallow network to point at the current residual.

The objective is eta(W, b, c) = <r, v> / |||v|||, the residual functional
normalized in the energy norm.  Output coefficients c are never descended:
for frozen hidden parameters the optimal c solves a small least-squares
system, so each epoch takes one Adam ascent step on (W, b) with c frozen and
then refits c exactly.  The refit can only increase eta, which makes the
per-epoch eta sequence a useful training diagnostic.

Gradients of eta with respect to (W, b) are contracted against the residual's
per-node coefficient arrays in closed form; nothing the size of
(nodes x parameters) is ever materialized.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .forms import (
    NodeFunctional,
    SampleBundle,
    VariationalProblem,
    bilinear_functional,
    energy_norm,
    residual_functional,
)
from .galerkin import EpochStacks, build_stacks, galerkin_lsq, slot_bundle
from .network import ActivationSpec, ShallowNetwork, init_hidden, scale_output, theta_norm


def functional_param_contraction(
    problem: VariationalProblem, func: NodeFunctional, stacks: EpochStacks, c: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """(d func(v)/dW, d func(v)/db) for v = sum_j c_j act(w_j . x + b_j).

    func is linear, so its parameter gradient is func applied to the
    parameter derivatives of each slot of v.  Everything reduces to a few
    (nodes x units) products per role.
    """
    W = stacks.W
    gW = np.zeros_like(W)
    gb = np.zeros_like(stacks.b)
    for role, entry in func.entries.items():
        rs = stacks.roles[role]
        X = rs.rule.nodes
        s1 = rs.s[1]
        gval, ggrad, glap = entry["val"], entry["grad"], entry["lap"]
        if gval is not None:
            t1 = s1 * gval[:, None]
            gb += t1.sum(axis=0)
            gW += X.T @ t1
        if ggrad is not None:
            s2 = rs.s[2]
            t2 = s2 * (ggrad @ W)
            gb += t2.sum(axis=0)
            gW += X.T @ t2 + ggrad.T @ s1
        if glap is not None:
            s2, s3 = rs.s[2], rs.s[3]
            w2 = (W * W).sum(axis=0)
            t3 = s3 * glap[:, None]
            gb += w2 * t3.sum(axis=0)
            gW += w2 * (X.T @ t3) + 2.0 * W * (s2.T @ glap)
    return c * gW, c * gb


def eta_value(
    problem: VariationalProblem, stacks: EpochStacks, func: NodeFunctional, c: np.ndarray
) -> float:
    """<r, v> / |||v||| for the network the stacks and c describe."""
    v = slot_bundle(problem, stacks, c)
    e = energy_norm(problem, v)
    return func.apply(v) / e if e > 0.0 else 0.0


def eta_gradient(
    problem: VariationalProblem, stacks: EpochStacks, func: NodeFunctional, c: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient of eta with respect to (W, b) at frozen output coefficients.

    With g = <r, v> and e = |||v|||:  grad eta = grad g / e - (g / e^3) a(v, dv).
    """
    v = slot_bundle(problem, stacks, c)
    e = energy_norm(problem, v)
    if e <= 0.0:
        return np.zeros_like(stacks.W), np.zeros_like(stacks.b)
    g = func.apply(v)
    gW_r, gb_r = functional_param_contraction(problem, func, stacks, c)
    gW_a, gb_a = functional_param_contraction(problem, bilinear_functional(problem, v), stacks, c)
    scale = g / e**3
    return gW_r / e - scale * gW_a, gb_r / e - scale * gb_a


@dataclass
class AdamState:
    """First and second moment accumulators for (W, b), plus the step count."""

    m_W: np.ndarray
    v_W: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def like(W: np.ndarray, b: np.ndarray) -> "AdamState":
        return AdamState(np.zeros_like(W), np.zeros_like(W), np.zeros_like(b), np.zeros_like(b))

    def _update(self, m, v, g):
        m *= self.beta1
        m += (1.0 - self.beta1) * g
        v *= self.beta2
        v += (1.0 - self.beta2) * g * g
        mhat = m / (1.0 - self.beta1**self.t)
        vhat = v / (1.0 - self.beta2**self.t)
        return mhat / (np.sqrt(vhat) + self.eps)

    def ascent_step(self, W, b, gW, gb, lr):
        """One bias-corrected Adam step uphill; returns new (W, b)."""
        self.t += 1
        return (
            W + lr * self._update(self.m_W, self.v_W, gW),
            b + lr * self._update(self.m_b, self.v_b, gb),
        )


@dataclass
class TrainRecord:
    """One epoch of training, after the coefficient refit."""

    epoch: int
    eta: float
    l2_eta: float
    param_norm: float
    wall_time: float


@dataclass
class AugmentResult:
    network: ShallowNetwork | None
    eta: float
    records: list[TrainRecord] = field(default_factory=list)
    degenerate: bool = False


def _l2_eta(stacks: EpochStacks, c: np.ndarray) -> float:
    """L2 norm of the unnormalized trained network, the L2 error estimate.

    The trained v approximates the error function itself (its energy norm is
    eta), so its plain L2 norm estimates the L2 error the same way.
    """
    rs = stacks.roles["interior"]
    values = rs.s[0] @ c
    return float(np.sqrt(max(rs.rule.weights @ (values**2), 0.0)))


def augment_basis(
    problem: VariationalProblem,
    schedules,
    iteration: int,
    u_prev: SampleBundle,
    rng: np.random.Generator,
) -> AugmentResult:
    """Train one network against the residual of u_prev and normalize it.

    Returns the energy-normalized network, the final eta (which estimates the
    energy error of u_prev), and the per-epoch record stream.  A residual the
    units never see at any epoch (eta identically zero from the start) comes
    back with no network and eta 0.0, which certifies convergence of u_prev.
    A collapse comes back degenerate instead: ascent never honestly loses
    three decades off its own running peak, so a final eta that far below the
    best epoch (or non-finite, or paired with a non-positive energy norm)
    means saturation or overflow destroyed the least-squares span.
    """
    start = time.perf_counter()
    n = schedules.width_at(iteration)
    beta = schedules.beta_at(iteration)
    lr = schedules.lr_at(iteration)
    act = ActivationSpec(problem.activation_name, beta)
    W, b = init_hidden(problem.init_strategy, n, problem.domain.bounds, rng=rng)

    func = residual_functional(problem, u_prev)
    stacks = build_stacks(problem, W, b, act, param_grads=True)
    res = galerkin_lsq(problem, stacks, func)
    records = [_record(problem, stacks, res, 0, start)]

    adam = AdamState.like(W, b)
    for epoch in range(1, schedules.epochs + 1):
        if res.eta == 0.0:
            break
        gW, gb = eta_gradient(problem, stacks, func, res.coefficients)
        W, b = adam.ascent_step(W, b, gW, gb, lr)
        stacks = build_stacks(problem, W, b, act, param_grads=True)
        res = galerkin_lsq(problem, stacks, func)
        records.append(_record(problem, stacks, res, epoch, start))

    peak = max((r.eta for r in records if np.isfinite(r.eta)), default=0.0)
    if not np.isfinite(res.eta) or (peak > 0.0 and res.eta < 1e-3 * peak):
        return AugmentResult(None, float(res.eta), records, degenerate=True)
    if res.eta == 0.0:
        return AugmentResult(None, 0.0, records)

    net = ShallowNetwork(W, b, res.coefficients, act)
    v = slot_bundle(problem, stacks, res.coefficients)
    norm = energy_norm(problem, v)
    if not np.isfinite(norm) or norm <= 0.0:
        return AugmentResult(None, float(res.eta), records, degenerate=True)
    return AugmentResult(scale_output(net, 1.0 / norm), res.eta, records)


def _record(problem, stacks, res, epoch, start) -> TrainRecord:
    net = ShallowNetwork(stacks.W, stacks.b, res.coefficients, stacks.act)
    return TrainRecord(
        epoch=epoch,
        eta=res.eta,
        l2_eta=_l2_eta(stacks, res.coefficients),
        param_norm=theta_norm(net),
        wall_time=time.perf_counter() - start,
    )
