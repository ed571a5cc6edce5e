"""First-order optimizers: plain SGD, 1/t learning-rate decay, Adagrad,
RMSProp, and Adadelta.

An OptimizerState owns the accumulator arrays for a flat list of
parameter arrays and is updated in place together with the parameters.
All algorithms are elementwise, so state round-trips bit for bit through
checkpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ALGORITHMS = ("sgd", "decay", "adagrad", "rmsprop", "adadelta")

_DEFAULTS = {
    "sgd": dict(rho=0.0, eps_opt=0.0, tau=0.0),
    "decay": dict(rho=0.0, eps_opt=0.0, tau=1000.0),
    "adagrad": dict(rho=0.0, eps_opt=1e-8, tau=0.0),
    "rmsprop": dict(rho=0.9, eps_opt=1e-6, tau=0.0),
    "adadelta": dict(rho=0.95, eps_opt=1e-6, tau=0.0),
}


@dataclass
class OptimizerState:
    algorithm: str
    lr: float
    rho: float
    eps_opt: float
    tau: float
    t: int = 0
    sq_grad: list = field(default_factory=list)    # adagrad G / running E[g^2]
    sq_update: list = field(default_factory=list)  # adadelta running E[dx^2]


def make_optimizer(algorithm: str, param_shapes, lr: float,
                   rho: float | None = None, eps_opt: float | None = None,
                   tau: float | None = None) -> OptimizerState:
    if algorithm not in ALGORITHMS:
        raise ValueError("unknown optimizer %r (want one of %s)"
                         % (algorithm, ", ".join(ALGORITHMS)))
    d = _DEFAULTS[algorithm]
    rho = d["rho"] if rho is None else rho
    eps_opt = d["eps_opt"] if eps_opt is None else eps_opt
    tau = d["tau"] if tau is None else tau
    if algorithm == "decay" and tau <= 0:
        raise ValueError("decay schedule needs tau > 0")
    state = OptimizerState(algorithm, lr, rho, eps_opt, tau)
    if algorithm in ("adagrad", "rmsprop", "adadelta"):
        state.sq_grad = [np.zeros(s) for s in param_shapes]
    if algorithm == "adadelta":
        state.sq_update = [np.zeros(s) for s in param_shapes]
    return state


def apply_update(params: list, grads: list, state: OptimizerState) -> None:
    """One optimizer step, mutating params and state in place.

    params and grads are parallel lists of arrays; non-finite gradients
    are an error (training code treats that as divergence).
    """
    if len(params) != len(grads):
        raise ValueError("params and grads length mismatch")
    for g in grads:
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient in optimizer step")

    a = state.algorithm
    if a == "sgd":
        for p, g in zip(params, grads):
            p -= state.lr * g
    elif a == "decay":
        lr_t = state.lr / (1.0 + state.t / state.tau)
        for p, g in zip(params, grads):
            p -= lr_t * g
    elif a == "adagrad":
        for p, g, G in zip(params, grads, state.sq_grad):
            G += g * g
            p -= state.lr * g / np.sqrt(G + state.eps_opt)
    elif a == "rmsprop":
        for p, g, E in zip(params, grads, state.sq_grad):
            E *= state.rho
            E += (1.0 - state.rho) * g * g
            p -= state.lr * g / np.sqrt(E + state.eps_opt)
    elif a == "adadelta":
        for p, g, E, D in zip(params, grads, state.sq_grad, state.sq_update):
            E *= state.rho
            E += (1.0 - state.rho) * g * g
            dx = -np.sqrt(D + state.eps_opt) / np.sqrt(E + state.eps_opt) * g
            D *= state.rho
            D += (1.0 - state.rho) * dx * dx
            p += dx
    else:
        raise ValueError("unknown optimizer %r" % a)
    state.t += 1


def current_lr(state: OptimizerState) -> float:
    """Effective base step size at the current step counter."""
    if state.algorithm == "decay":
        return state.lr / (1.0 + state.t / state.tau)
    return state.lr
