"""Generic matrix multiplicative weights loop with a regret certificate.

The engine recomputes each weight matrix from the cumulative loss sum
(rather than updating multiplicatively), matching the update rule
W(t+1) = exp(-eps * sum of losses) literally and avoiding compounded
exponential error.  Before exponentiating, the cumulative sum is shifted by
its smallest eigenvalue times the identity; the shift cancels in the
normalization (shift invariance) and keeps the computation overflow-free
for any round count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import log
from typing import Callable

import numpy as np

LOSS_RANGE_TOL = 1e-8


class LossRangeError(ValueError):
    """A loss matrix fell outside [0, I] beyond tolerance."""


@dataclass(frozen=True)
class MmwConfig:
    """Schedule of the weight-update iteration."""

    epsilon: float
    rounds: int
    dimension: int

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 0.5:
            raise ValueError(f"epsilon must be in (0, 1/2], got {self.epsilon}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be positive, got {self.rounds}")
        if self.dimension < 1:
            raise ValueError(f"dimension must be positive, got {self.dimension}")


@dataclass(frozen=True)
class MmwTrace:
    """Per-run record sufficient to audit the regret guarantee.

    ``losses_dot[t]`` is <rho(t), M(t)>; ``loss_sum`` is the cumulative sum
    of the losses.  Full per-round iterates are kept only when the engine
    was asked to record them.
    """

    epsilon: float
    dimension: int
    losses_dot: np.ndarray
    loss_sum: np.ndarray
    states: np.ndarray | None = field(default=None, repr=False)
    losses: np.ndarray | None = field(default=None, repr=False)

    @property
    def rounds(self) -> int:
        return len(self.losses_dot)


def gibbs_state(loss_sum: np.ndarray, epsilon: float) -> np.ndarray:
    """exp(-eps * loss_sum), trace-normalized, via the shifted exponent."""
    sym = (loss_sum + loss_sum.conj().T) / 2
    w, v = np.linalg.eigh(sym)
    ew = np.exp(-epsilon * (w - w[0]))
    rho = (v * ew) @ v.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def _check_loss(m: np.ndarray, dim: int, t: int) -> None:
    if m.shape != (dim, dim):
        raise LossRangeError(f"round {t}: loss has shape {m.shape}, expected {(dim, dim)}")
    if not np.all(np.isfinite(m)):
        raise LossRangeError(f"round {t}: loss contains nonfinite entries")
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    if w[0] < -LOSS_RANGE_TOL or w[-1] > 1.0 + LOSS_RANGE_TOL:
        raise LossRangeError(
            f"round {t}: loss spectrum [{w[0]:.3e}, {w[-1]:.3e}] outside [0, 1]"
        )


def run_mmw(
    loss_oracle: Callable[[int, np.ndarray], np.ndarray],
    cfg: MmwConfig,
    record_rounds: bool = True,
) -> MmwTrace:
    """Run the weight-update iteration against a loss oracle.

    The oracle receives (round index starting at 1, current state rho) and
    must return a Hermitian loss with spectrum in [0, 1]; anything outside
    that range beyond 1e-8 aborts with a diagnostic.
    """
    dim = cfg.dimension
    loss_sum = np.zeros((dim, dim), dtype=np.complex128)
    losses_dot = np.empty(cfg.rounds, dtype=np.float64)
    states = np.empty((cfg.rounds, dim, dim), dtype=np.complex128) if record_rounds else None
    losses = np.empty((cfg.rounds, dim, dim), dtype=np.complex128) if record_rounds else None

    for t in range(cfg.rounds):
        rho = gibbs_state(loss_sum, cfg.epsilon)
        m = np.asarray(loss_oracle(t + 1, rho), dtype=np.complex128)
        _check_loss(m, dim, t + 1)
        m = (m + m.conj().T) / 2
        losses_dot[t] = float(np.einsum("ij,ji->", rho, m).real)
        if record_rounds:
            states[t] = rho
            losses[t] = m
        loss_sum += m

    return MmwTrace(
        epsilon=cfg.epsilon,
        dimension=dim,
        losses_dot=losses_dot,
        loss_sum=loss_sum,
        states=states,
        losses=losses,
    )


def regret_certificate(trace: MmwTrace, rho_star) -> tuple[float, float]:
    """Both sides of the regret inequality for a comparator state.

    Returns (lhs, rhs) with
      lhs = (1 - eps) * sum_t <rho(t), M(t)>
      rhs = <rho*, sum_t M(t)> + ln(D)/eps;
    the guarantee is lhs <= rhs for every density operator rho*.
    """
    mat = rho_star.mat if hasattr(rho_star, "mat") else np.asarray(rho_star)
    lhs = (1.0 - trace.epsilon) * float(trace.losses_dot.sum())
    rhs = float(np.einsum("ij,ji->", mat, trace.loss_sum).real) + log(trace.dimension) / trace.epsilon
    return lhs, rhs
