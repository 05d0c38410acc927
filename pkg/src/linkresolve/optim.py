"""Adam optimizer and finite-difference gradient checking over parameter lists.

Both the attention network and the MLP baseline keep their parameters as flat
lists of float64 arrays, so the optimizer and the checker operate on that
shared representation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class TrainingDivergedError(RuntimeError):
    """Raised when a training loss becomes non-finite."""


class Adam:
    """Adam with optional L2 weight decay folded into the gradient."""

    def __init__(
        self,
        params: list[np.ndarray],
        lr: float = 0.01,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        if lr <= 0:
            raise ValueError("lr must be positive")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self._m = [np.zeros_like(p) for p in params]
        self._v = [np.zeros_like(p) for p in params]

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        """Update params in place from grads."""
        if len(params) != len(self._m) or len(grads) != len(self._m):
            raise ValueError("parameter/gradient count does not match optimizer state")
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self._m, self._v):
            if self.weight_decay:
                g = g + self.weight_decay * p
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    worst_param: str
    tolerance: float
    n_entries: int
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def finite_difference_grads(loss_fn, params: list[np.ndarray], delta: float) -> list[np.ndarray]:
    """Central-difference gradients of loss_fn with respect to each array entry.

    loss_fn takes the parameter list and returns a scalar; entries are
    perturbed in place and restored, so loss_fn must not retain references.
    """
    if delta <= 0:
        raise ValueError("finite-difference step delta must be positive")
    grads = []
    for p in params:
        g = np.zeros_like(p)
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for k in range(flat_p.size):
            orig = flat_p[k]
            flat_p[k] = orig + delta
            up = loss_fn(params)
            flat_p[k] = orig - delta
            down = loss_fn(params)
            flat_p[k] = orig
            flat_g[k] = (up - down) / (2.0 * delta)
        grads.append(g)
    return grads


def relative_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return np.abs(analytic - numeric) / denom


def gradient_check(
    loss_fn,
    params: list[np.ndarray],
    analytic: list[np.ndarray],
    names: list[str] | None = None,
    delta: float = 1e-5,
    tolerance: float = 1e-4,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Relative error per entry is |g_a - g_n| / max(1e-8, |g_a| + |g_n|); the
    report names the worst offending parameter entry.
    """
    numeric = finite_difference_grads(loss_fn, params, delta)
    if names is None:
        names = [f"param[{i}]" for i in range(len(params))]
    worst = 0.0
    worst_name = ""
    per_param: dict[str, float] = {}
    total = 0
    for name, ga, gn in zip(names, analytic, numeric):
        errs = relative_errors(ga, gn)
        per_param[name] = float(errs.max()) if errs.size else 0.0
        total += errs.size
        if errs.size and errs.max() >= worst:
            worst = float(errs.max())
            idx = np.unravel_index(int(np.argmax(errs)), errs.shape)
            worst_name = f"{name}{list(idx)}"
    return GradCheckReport(
        max_rel_error=worst,
        worst_param=worst_name,
        tolerance=tolerance,
        n_entries=total,
        per_param=per_param,
    )
