"""Overlapping group sparsity penalty and its majorization-minimization prox.

The penalty sums, over every pixel ``(i, j)``, the Euclidean norm of the
``K x K`` window covering rows ``i - m1 .. i + m2`` and columns
``j - m1 .. j + m2`` with ``m1 = (K - 1) // 2`` and ``m2 = K // 2``.  Windows
that stick out of the image read zeros there.

The prox problem ``min_v 0.5 ||v - v0||^2 + mu * phi(v)`` is solved by MM: each
step minimises a separable quadratic majorizer whose diagonal weights come from
two K x K box sums (:func:`mm_weights`), giving the entrywise update
``v <- v0 / (1 + mu * lam**2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "GroupSpec",
    "MmConfig",
    "box_sum",
    "group_norm_field",
    "ogs_value",
    "prox_objective",
    "mm_weights",
    "majorizer_value",
    "ogs_prox_mm",
]


@dataclass(frozen=True)
class GroupSpec:
    """Square group of side ``K``."""

    K: int = 3

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"group size K must be a positive integer, got {self.K}")

    @property
    def m1(self) -> int:
        return (self.K - 1) // 2

    @property
    def m2(self) -> int:
        return self.K // 2


@dataclass(frozen=True)
class MmConfig:
    """Settings for :func:`ogs_prox_mm`.

    ``inner_tol == 0`` runs exactly ``n_iter`` steps; ``eps_floor`` is added to
    every squared group norm before inversion so empty groups stay finite.
    """

    mu: float
    n_iter: int = 5
    inner_tol: float = 0.0
    eps_floor: float = 1e-12

    def __post_init__(self):
        if not self.mu >= 0:
            raise ValueError(f"mu must be nonnegative, got {self.mu}")
        if int(self.n_iter) != self.n_iter or self.n_iter < 1:
            raise ValueError(f"n_iter must be a positive integer, got {self.n_iter}")
        if not self.inner_tol >= 0:
            raise ValueError("inner_tol must be nonnegative")
        if not self.eps_floor >= 0:
            raise ValueError("eps_floor must be nonnegative")


def box_sum(a: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """``out[i, j] = sum(a[i + di, j + dj] for di, dj in lo..hi)``, zero outside ``a``."""
    a = np.asarray(a, dtype=np.float64)
    n0, n1 = a.shape
    before, after = max(0, -lo), max(0, hi)
    p = np.pad(a, ((before, after), (before, after)))
    rows = np.zeros((n0, p.shape[1]))
    for d in range(lo, hi + 1):
        rows += p[before + d : before + d + n0, :]
    out = np.zeros((n0, n1))
    for d in range(lo, hi + 1):
        out += rows[:, before + d : before + d + n1]
    return out


def group_norm_field(v: np.ndarray, spec: GroupSpec) -> np.ndarray:
    """Norm of the group anchored at each pixel."""
    v = np.asarray(v, dtype=np.float64)
    return np.sqrt(box_sum(v * v, -spec.m1, spec.m2))


def ogs_value(v: np.ndarray, spec: GroupSpec) -> float:
    return float(group_norm_field(v, spec).sum())


def prox_objective(v: np.ndarray, v0: np.ndarray, spec: GroupSpec, mu: float) -> float:
    """``0.5 * ||v - v0||^2 + mu * ogs_value(v)``."""
    d = np.asarray(v, dtype=np.float64) - v0
    return 0.5 * float(np.sum(d * d)) + mu * ogs_value(v, spec)


def mm_weights(u: np.ndarray, spec: GroupSpec, eps_floor: float = 1e-12) -> np.ndarray:
    """Diagonal of the majorizer weight matrix at ``u``, shaped like ``u``.

    Entry ``l`` is ``sqrt(sum over groups g containing l of (||u_g||^2 + eps)^-1/2)``.
    Groups are only those anchored inside the image.
    """
    u = np.asarray(u, dtype=np.float64)
    sq_norms = box_sum(u * u, -spec.m1, spec.m2)
    with np.errstate(divide="ignore"):
        inv = (sq_norms + eps_floor) ** -0.5
    # pixel l belongs to the groups anchored at l - d for d in -m1..m2
    return np.sqrt(box_sum(inv, -spec.m2, spec.m1))


def majorizer_value(
    v: np.ndarray,
    u: np.ndarray,
    v0: np.ndarray,
    spec: GroupSpec,
    mu: float,
    eps_floor: float = 1e-12,
) -> float:
    """Quadratic upper bound of :func:`prox_objective` at ``v``, tight at ``v = u``.

    Uses the same guarded group norms ``sqrt(||u_g||^2 + eps)`` as
    :func:`mm_weights`, both in the weights and in the constant term.
    """
    v = np.asarray(v, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    lam = mm_weights(u, spec, eps_floor)
    guarded = np.sqrt(box_sum(u * u, -spec.m1, spec.m2) + eps_floor)
    penalty = 0.5 * float(np.sum((lam * v) ** 2)) + 0.5 * float(guarded.sum())
    d = v - v0
    return 0.5 * float(np.sum(d * d)) + mu * penalty


def ogs_prox_mm(
    v0: np.ndarray,
    spec: GroupSpec,
    cfg: MmConfig,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> np.ndarray:
    """Approximate ``argmin_v 0.5 ||v - v0||^2 + cfg.mu * ogs_value(v)`` by MM.

    Starts from ``v0`` and applies ``cfg.n_iter`` reweighted shrinkage steps,
    stopping early once the relative change drops below ``cfg.inner_tol``
    (when positive).  ``callback(k, v)`` is called after step ``k`` (1-based).
    """
    v0 = np.asarray(v0, dtype=np.float64)
    v = v0
    for k in range(1, cfg.n_iter + 1):
        lam = mm_weights(v, spec, cfg.eps_floor)
        v_new = v0 / (1.0 + cfg.mu * lam * lam)
        if callback is not None:
            callback(k, v_new)
        if cfg.inner_tol > 0:
            prev = np.linalg.norm(v)
            change = np.linalg.norm(v_new - v)
            if change == 0 or (prev > 0 and change / prev < cfg.inner_tol):
                return v_new
        v = v_new
    return v
