from typing import Optional, Tuple

import numpy as np
from numpy import ndarray

from varhom.exceptions import InvalidInput
from varhom.utils.utils import as_vectors


class VariationalIntegrand:
    """
    Uniformly convex C^{1,1} function F(p, q) on ℝ^{2d}.

    Subclasses implement ``value``; ``gradient`` and ``hessian`` fall back to finite differences. All three
    accept ``p`` and ``q`` of shape ``(N, d)`` and return shapes ``(N,)``, ``(N, 2d)`` and ``(N, 2d, 2d)``.
    """

    def __init__(self, dim: int, Lambda: float, K0: float = 0.0, selfdual: bool = False):
        if Lambda < 3.0:
            raise InvalidInput(f"convexity constant Lambda must be >= 3, got {Lambda}")
        self.dim = dim
        self.Lambda = float(Lambda)
        self.K0 = float(K0)
        self.selfdual = selfdual

    def _split(self, p, q) -> Tuple[ndarray, ndarray]:
        p = as_vectors(p, self.dim)
        q = as_vectors(q, self.dim)
        return np.broadcast_arrays(p, q)

    def value(self, p, q) -> ndarray:
        raise NotImplementedError

    def __call__(self, p, q) -> ndarray:
        return self.value(p, q)

    def value_z(self, z) -> ndarray:
        z = as_vectors(z, 2 * self.dim)
        return self.value(z[:, : self.dim], z[:, self.dim :])

    def gradient(self, p, q, eps: float = 1e-6) -> ndarray:
        p, q = self._split(p, q)
        z = np.concatenate([p, q], axis=-1)
        grad = np.empty_like(z)
        for k in range(2 * self.dim):
            step = np.zeros(2 * self.dim)
            step[k] = eps
            grad[:, k] = (self.value_z(z + step) - self.value_z(z - step)) / (2 * eps)
        return grad

    def hessian(self, p, q, eps: float = 1e-5) -> ndarray:
        p, q = self._split(p, q)
        z = np.concatenate([p, q], axis=-1)
        d = self.dim
        hess = np.empty(z.shape + (2 * d,))
        for k in range(2 * d):
            step = np.zeros(2 * d)
            step[k] = eps
            plus, minus = z + step, z - step
            diff = self.gradient(plus[:, :d], plus[:, d:]) - self.gradient(minus[:, :d], minus[:, d:])
            hess[:, :, k] = diff / (2 * eps)
        return 0.5 * (hess + np.swapaxes(hess, 1, 2))

    def conjugate(self) -> "VariationalIntegrand":
        raise NotImplementedError(f"{type(self).__name__} has no closed-form conjugate")


class QuadraticIntegrand(VariationalIntegrand):
    """
    F(z) = ½ z·Hz + b·z + c with z = (p, q).

    Without an explicit Λ the smallest value ≥ 3 is taken whose window [1/(2Λ), Λ/2] contains the spectrum of H.
    """

    def __init__(self, H, b=None, c: float = 0.0, Lambda: Optional[float] = None, K0: float = 0.0, selfdual=False):
        H = np.asarray(H, dtype=np.float64)
        n = H.shape[0]
        if H.shape != (n, n) or n % 2:
            raise InvalidInput(f"Hessian must be square of even size, got {H.shape}")
        if not np.allclose(H, H.T, atol=1e-12):
            raise InvalidInput("Hessian must be symmetric")
        eig = np.linalg.eigvalsh(H)
        if eig.min() <= 0:
            raise InvalidInput("quadratic integrand is not uniformly convex")
        if Lambda is None:
            Lambda = max(3.0, 2 * eig.max(), 2.0 / eig.min())
        super().__init__(n // 2, Lambda, K0, selfdual)
        self.H = H
        self.b = np.zeros(n) if b is None else np.asarray(b, dtype=np.float64)
        self.c = float(c)

    def value(self, p, q) -> ndarray:
        p, q = self._split(p, q)
        z = np.concatenate([p, q], axis=-1)
        return 0.5 * np.einsum("ni,ij,nj->n", z, self.H, z) + z @ self.b + self.c

    def gradient(self, p, q, eps=None) -> ndarray:
        p, q = self._split(p, q)
        z = np.concatenate([p, q], axis=-1)
        return z @ self.H + self.b

    def hessian(self, p, q, eps=None) -> ndarray:
        p, q = self._split(p, q)
        return np.broadcast_to(self.H, (p.shape[0],) + self.H.shape).copy()

    def conjugate(self) -> "QuadraticIntegrand":
        """F*(z*) = ½ (z*−b)·H⁻¹(z*−b) − c, a function of the dual variables (p*, q*)."""
        Hinv = np.linalg.inv(self.H)
        Hinv = 0.5 * (Hinv + Hinv.T)
        b = -Hinv @ self.b
        c = 0.5 * self.b @ Hinv @ self.b - self.c
        return QuadraticIntegrand(Hinv, b, c, self.Lambda, self.K0, self.selfdual)

    def swapped(self) -> "QuadraticIntegrand":
        """(p, q) ↦ F(q, p)."""
        d = self.dim
        perm = np.r_[np.arange(d, 2 * d), np.arange(d)]
        return QuadraticIntegrand(self.H[np.ix_(perm, perm)], self.b[perm], self.c, self.Lambda, self.K0, self.selfdual)


def _check_pair(A, M) -> Tuple[ndarray, ndarray]:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    d = A.shape[0]
    M = np.zeros((d, d)) if M is None else np.atleast_2d(np.asarray(M, dtype=np.float64))
    if A.shape != (d, d) or M.shape != (d, d):
        raise InvalidInput(f"A and M must be square of the same size, got {A.shape} and {M.shape}")
    if not np.allclose(A, A.T, atol=1e-12):
        raise InvalidInput("A must be symmetric")
    if not np.allclose(M, -M.T, atol=1e-12):
        raise InvalidInput("M must be skew-symmetric")
    eig = np.linalg.eigvalsh(A)
    if eig.min() <= 1e-14:
        raise InvalidInput("A must be positive definite")
    return A, M


def make_affine_representative(A, M=None, shift=None, lam: Optional[float] = None) -> QuadraticIntegrand:
    """
    Closed-form representative of a(p) = (A + M)p + s.

    F(p, q) = ½ p·Ap + ½ (q − s − Mp)·A⁻¹(q − s − Mp) + s·p, which equals p·q exactly on the graph.
    """
    A, M = _check_pair(A, M)
    d = A.shape[0]
    s = np.zeros(d) if shift is None else np.asarray(shift, dtype=np.float64)
    Ainv = np.linalg.inv(A)
    B = np.hstack([-M, np.eye(d)])
    H = np.zeros((2 * d, 2 * d))
    H[:d, :d] = A
    H += B.T @ Ainv @ B
    H = 0.5 * (H + H.T)
    b = -B.T @ Ainv @ s
    b[:d] += s
    c = 0.5 * s @ Ainv @ s
    if lam is None:
        eig = np.linalg.eigvalsh(A)
        lam = max(1.0, np.linalg.norm(A + M, 2), 1.0 / eig.min())
    eig_h = np.linalg.eigvalsh(H)
    Lambda = max(2 * lam + 1, 2 * eig_h.max(), 2.0 / eig_h.min())
    return QuadraticIntegrand(H, b, c, Lambda=Lambda, K0=float(np.linalg.norm(s)), selfdual=True)


def make_linear_representative(A, M=None) -> QuadraticIntegrand:
    """F(p, q) = ½ p·Ap + ½ (q − Mp)·A⁻¹(q − Mp), representing a(p) = (A + M)p."""
    return make_affine_representative(A, M)
