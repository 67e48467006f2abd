"""Brute-force reference implementations for tests.

Nothing here is fast.  Each function re-derives a quantity the library computes
by a different route: dense matrices instead of FFTs, literal loops instead of
box sums, and independent optimisers instead of MM.
"""

from __future__ import annotations

import numpy as np

from .image import from_vector, to_vector
from .operators import Kernel, apply_psf_periodic, difference_kernel
from .ogs import GroupSpec

__all__ = [
    "OracleError",
    "dense_from_kernel",
    "dense_gradients",
    "dense_normal_matrix",
    "dense_solve_f",
    "dense_objective",
    "ogs_value_loops",
    "mm_weights_loops",
    "ogs_prox_subgradient",
    "ogs_prox_dual",
    "denoise_dual",
]


class OracleError(ValueError):
    pass


def dense_from_kernel(kernel: Kernel, n: int) -> np.ndarray:
    """n**2 x n**2 matrix of the periodic blur, acting on column-stacked vectors."""
    if n > 16:
        raise OracleError(f"dense operators are limited to n <= 16, got {n}")
    m = n * n
    mat = np.empty((m, m))
    for c in range(m):
        e = np.zeros(m)
        e[c] = 1.0
        mat[:, c] = to_vector(apply_psf_periodic(from_vector(e, n), kernel))
    return mat


def dense_gradients(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Dense forward-difference matrices (Dx, Dy) built entry by entry."""
    if n > 16:
        raise OracleError(f"dense operators are limited to n <= 16, got {n}")
    m = n * n
    dx = np.zeros((m, m))
    dy = np.zeros((m, m))
    # 0-based (i, j) -> column-stacked index j*n + i
    for j in range(n):
        for i in range(n):
            row = j * n + i
            dx[row, j * n + (i + 1) % n] += 1.0
            dx[row, row] -= 1.0
            dy[row, ((j + 1) % n) * n + i] += 1.0
            dy[row, row] -= 1.0
    return dx, dy


def dense_normal_matrix(kernel: Kernel, n: int, sigma: float) -> np.ndarray:
    """``H^T H + sigma (Dx^T Dx + Dy^T Dy + I)``."""
    h = dense_from_kernel(kernel, n)
    dx, dy = dense_gradients(n)
    return h.T @ h + sigma * (dx.T @ dx + dy.T @ dy + np.eye(n * n))


def dense_solve_f(g, v_x, v_y, z, b1, b2, b3, kernel: Kernel, sigma: float) -> np.ndarray:
    """Solve the f-update normal equation by a direct dense factorisation."""
    n = np.asarray(g).shape[0]
    if n > 8:
        raise OracleError(f"dense_solve_f is limited to n <= 8, got {n}")
    h = dense_from_kernel(kernel, n)
    dx, dy = dense_gradients(n)
    a = h.T @ h + sigma * (dx.T @ dx + dy.T @ dy + np.eye(n * n))
    vec = to_vector
    rhs = (
        h.T @ vec(g)
        + sigma * dx.T @ (vec(v_x) - vec(b1))
        + sigma * dy.T @ (vec(v_y) - vec(b2))
        + sigma * (vec(z) - vec(b3))
    )
    return from_vector(np.linalg.solve(a, rhs), n)


def ogs_value_loops(v, spec: GroupSpec) -> float:
    """Group-sparsity penalty by explicit enumeration of every K x K window."""
    v = np.asarray(v, dtype=np.float64)
    n0, n1 = v.shape
    total = 0.0
    for i in range(n0):
        for j in range(n1):
            acc = 0.0
            for a in range(i - spec.m1, i + spec.m2 + 1):
                for b in range(j - spec.m1, j + spec.m2 + 1):
                    if 0 <= a < n0 and 0 <= b < n1:
                        acc += v[a, b] ** 2
            total += np.sqrt(acc)
    return float(total)


def dense_objective(f, g, kernel: Kernel, alpha: float, spec: GroupSpec) -> float:
    """Restoration objective with dense operators and looped group norms."""
    f = np.asarray(f, dtype=np.float64)
    n = f.shape[0]
    h = dense_from_kernel(kernel, n)
    dx, dy = dense_gradients(n)
    r = to_vector(g) - h @ to_vector(f)
    reg = ogs_value_loops(from_vector(dx @ to_vector(f), n), spec)
    reg += ogs_value_loops(from_vector(dy @ to_vector(f), n), spec)
    return 0.5 * float(r @ r) + alpha * reg


def mm_weights_loops(u, spec: GroupSpec, eps_floor: float = 1e-12) -> np.ndarray:
    """Majorizer weights by the literal quadruple sum.

    For pixel (r, t) the outer sum runs over the groups anchored at
    (r - i, t - j), i, j in -m1..m2; anchors outside the image are skipped and
    window entries outside the image read as zero.
    """
    u = np.asarray(u, dtype=np.float64)
    n0, n1 = u.shape
    m1, m2 = spec.m1, spec.m2
    lam = np.zeros_like(u)
    for r in range(n0):
        for t in range(n1):
            outer = 0.0
            for i in range(-m1, m2 + 1):
                for j in range(-m1, m2 + 1):
                    p, q = r - i, t - j
                    if not (0 <= p < n0 and 0 <= q < n1):
                        continue
                    inner = 0.0
                    for k1 in range(-m1, m2 + 1):
                        for k2 in range(-m1, m2 + 1):
                            a, b = p + k1, q + k2
                            if 0 <= a < n0 and 0 <= b < n1:
                                inner += abs(u[a, b]) ** 2
                    outer += (inner + eps_floor) ** -0.5
            lam[r, t] = np.sqrt(outer)
    return lam


def _window_norms(v, spec: GroupSpec) -> np.ndarray:
    n0, n1 = v.shape
    out = np.zeros_like(v)
    for i in range(n0):
        for j in range(n1):
            win = v[max(0, i - spec.m1) : i + spec.m2 + 1, max(0, j - spec.m1) : j + spec.m2 + 1]
            out[i, j] = np.sqrt(np.sum(win * win))
    return out


def ogs_prox_subgradient(v0, spec: GroupSpec, mu: float, steps: int = 5000, a: float = 0.5) -> np.ndarray:
    """Subgradient descent on ``0.5||v - v0||^2 + mu * phi(v)``, step ``a / sqrt(t)``.

    Zero groups contribute the zero subgradient.  Returns the best iterate seen.
    Converges slowly (objective error ~ 1/sqrt(steps)); for tight checks use
    :func:`ogs_prox_dual`.
    """
    if v0 is None or np.asarray(v0).shape[0] > 6:
        raise OracleError("ogs_prox_subgradient is limited to n <= 6")
    v0 = np.asarray(v0, dtype=np.float64)
    n0, n1 = v0.shape

    def objective(v):
        return 0.5 * float(np.sum((v - v0) ** 2)) + mu * float(_window_norms(v, spec).sum())

    v = v0.copy()
    best, best_v = objective(v), v.copy()
    for t in range(1, steps + 1):
        norms = _window_norms(v, spec)
        grad = v - v0
        for i in range(n0):
            for j in range(n1):
                if norms[i, j] > 0:
                    sl = (slice(max(0, i - spec.m1), i + spec.m2 + 1), slice(max(0, j - spec.m1), j + spec.m2 + 1))
                    grad[sl] += mu * v[sl] / norms[i, j]
        v = v - (a / np.sqrt(t)) * grad
        val = objective(v)
        if val < best:
            best, best_v = val, v.copy()
    return best_v


class _Groups:
    """Zero-padded group gather/scatter: ``y[a, b, i, j]`` is entry (a, b) of the group at (i, j)."""

    def __init__(self, shape, spec: GroupSpec):
        self.shape = shape
        self.spec = spec
        n0, n1 = shape
        k = spec.K
        mask = np.zeros((k, k, n0, n1))
        for a in range(k):
            for b in range(k):
                rows = np.arange(n0) + a - spec.m1
                cols = np.arange(n1) + b - spec.m1
                mask[a, b] = np.outer((rows >= 0) & (rows < n0), (cols >= 0) & (cols < n1))
        self.mask = mask

    def gather(self, v):
        k, m1 = self.spec.K, self.spec.m1
        n0, n1 = self.shape
        p = np.pad(v, ((m1, k), (m1, k)))
        out = np.empty((k, k, n0, n1))
        for a in range(k):
            for b in range(k):
                out[a, b] = p[a : a + n0, b : b + n1]
        return out * self.mask

    def scatter(self, y):
        k, m1 = self.spec.K, self.spec.m1
        n0, n1 = self.shape
        p = np.zeros((n0 + m1 + k, n1 + m1 + k))
        y = y * self.mask
        for a in range(k):
            for b in range(k):
                p[a : a + n0, b : b + n1] += y[a, b]
        return p[m1 : m1 + n0, m1 : m1 + n1]

    def project(self, y):
        y = y * self.mask
        nrm = np.sqrt(np.sum(y * y, axis=(0, 1)))
        return y / np.maximum(nrm, 1.0)

    def penalty(self, v):
        g = self.gather(v)
        return float(np.sqrt(np.sum(g * g, axis=(0, 1))).sum())


def _fista_dual(v0, weight, fwd, adj, lip, project, penalty, steps, gap_tol):
    # dual of min 0.5||v - v0||^2 + weight * sum_g ||(L v)_g||:
    # max over ||y_g|| <= 1 of 0.5||v0||^2 - 0.5||v0 - weight L^T y||^2
    y = np.zeros_like(fwd(v0))
    w = y.copy()
    t = 1.0
    step = 1.0 / (weight * weight * lip)
    best_v, best_gap = v0, np.inf
    for it in range(steps):
        v = v0 - weight * adj(w)
        y_new = project(w + step * weight * fwd(v))
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        w = y_new + ((t - 1.0) / t_new) * (y_new - y)
        y, t = y_new, t_new
        if it % 50 == 49 or it == steps - 1:
            v = v0 - weight * adj(y)
            primal = 0.5 * float(np.sum((v - v0) ** 2)) + weight * penalty(v)
            dual = 0.5 * float(np.sum(v0 * v0)) - 0.5 * float(np.sum(v * v))
            gap = primal - dual
            if gap < best_gap:
                best_v, best_gap = v, gap
            if gap <= gap_tol:
                break
    return best_v, best_gap


def ogs_prox_dual(v0, spec: GroupSpec, mu: float, steps: int = 20000, gap_tol: float = 1e-10):
    """Group-sparsity prox by accelerated projected gradient on the dual.

    Returns ``(v, gap)`` where ``gap`` is the certified duality gap, an upper
    bound on the objective error of ``v``.
    """
    v0 = np.asarray(v0, dtype=np.float64)
    if mu == 0:
        return v0.copy(), 0.0
    groups = _Groups(v0.shape, spec)
    # each pixel lies in at most K**2 groups
    return _fista_dual(
        v0, mu, groups.gather, groups.scatter, float(spec.K**2), groups.project, groups.penalty, steps, gap_tol
    )


def denoise_dual(g, alpha: float, spec: GroupSpec, steps: int = 50000, gap_tol: float = 1e-9):
    """Minimise ``0.5||f - g||^2 + alpha (phi(Dx f) + phi(Dy f))`` through its dual.

    Gradients are the dense periodic difference matrices.  Returns ``(f, gap)``.
    """
    g = np.asarray(g, dtype=np.float64)
    n = g.shape[0]
    dx, dy = dense_gradients(n)
    groups = _Groups(g.shape, spec)

    def fwd(f):
        fv = to_vector(f)
        return np.stack([groups.gather(from_vector(dx @ fv, n)), groups.gather(from_vector(dy @ fv, n))])

    def adj(y):
        sx = to_vector(groups.scatter(y[0]))
        sy = to_vector(groups.scatter(y[1]))
        return from_vector(dx.T @ sx + dy.T @ sy, n)

    def project(y):
        return np.stack([groups.project(y[0]), groups.project(y[1])])

    def penalty(f):
        fv = to_vector(f)
        return groups.penalty(from_vector(dx @ fv, n)) + groups.penalty(from_vector(dy @ fv, n))

    # ||Dx||^2, ||Dy||^2 <= 4 and each entry lies in K**2 groups
    return _fista_dual(g, alpha, fwd, adj, 8.0 * spec.K**2, project, penalty, steps, gap_tol)
