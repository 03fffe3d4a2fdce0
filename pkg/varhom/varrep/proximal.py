import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy import ndarray

from varhom.exceptions import InvalidInput, SolverFailure
from varhom.utils.utils import log
from varhom.varrep.fitzpatrick import fitzpatrick
from varhom.varrep.legendre import legendre_transform
from varhom.varrep.monotone import MonotoneMap
from varhom.varrep.table import TabulatedIntegrand, tabulation_error, uniform_axes


def build_extended_integrand(
    a: MonotoneMap, bound: float, n: int, tau: Optional[float] = None, chunk: int = 1 << 14
) -> TabulatedIntegrand:
    """
    Uniformly convex representative of ``a`` assembled from two Fitzpatrick functions.

    With a₀ = a − τ·id and a₁ = a⁻¹ − τ·id,
    Fext(p, q) = ½(F₀(p, q − τp) + τ|p|² + F₁(q, p − τq) + τ|q|²), uniformly convex with Λ = (2 + τ)/τ.
    Both a₀ and a₁ must stay uniformly monotone, so τ < 1/λ; the default is τ = 1/(2λ).
    """
    d = a.dim
    tau = 0.5 / a.lam if tau is None else tau
    if not 0.0 < tau < 1.0 / a.lam:
        raise InvalidInput(f"tau={tau:g} must lie in (0, 1/lambda) = (0, {1.0 / a.lam:g})")
    axes = uniform_axes(bound, n, 2 * d)
    mesh = np.meshgrid(*axes, indexing="ij")
    z = np.stack([m.ravel() for m in mesh], axis=-1)
    p, q = z[:, :d], z[:, d:]

    pmax = float(np.linalg.norm(p, axis=-1).max())
    qmax = float(np.linalg.norm(q, axis=-1).max())
    f0 = fitzpatrick(a.shifted(tau), pmax=pmax, qmax=(1 + tau) * max(pmax, qmax))
    f1 = fitzpatrick(a.inverse_map().shifted(tau), pmax=qmax, qmax=(1 + tau) * max(pmax, qmax))
    log.debug(f"extended integrand: tau={tau:.4g}, search boxes {f0.xi_box:.3g} and {f1.xi_box:.3g}")

    values = np.empty(z.shape[0])
    for start in range(0, z.shape[0], chunk):
        sl = slice(start, start + chunk)
        pp, qq = p[sl], q[sl]
        values[sl] = 0.5 * (
            f0.value(pp, qq - tau * pp)
            + tau * np.einsum("ij,ij->i", pp, pp)
            + f1.value(qq, pp - tau * qq)
            + tau * np.einsum("ij,ij->i", qq, qq)
        )
    return TabulatedIntegrand(axes, values.reshape(mesh[0].shape), (2.0 + tau) / tau, a.a0_bound)


def _offset_slices(offset, shape):
    """Index slices of nodes z for which both z + o and z − o lie in the table."""
    here, plus, minus = [], [], []
    for o, n in zip(offset, shape):
        lo, hi = abs(o), n - abs(o)
        here.append(slice(lo, hi))
        plus.append(slice(lo + o, hi + o))
        minus.append(slice(lo - o, hi - o))
    return tuple(here), tuple(plus), tuple(minus)


def selfdual_proximal_average(
    fext: TabulatedIntegrand,
    offset_radius: int = 2,
    newton_steps: int = 50,
    tol: float = 1e-6,
    max_stalled: float = 0.01,
) -> TabulatedIntegrand:
    """
    Self-dual representative from a uniformly convex one.

    At each node z = (p, q) minimizes, over decompositions z = ½z₁ + ½z₂ written as z₁ = z + w,
    z₂ = z − w,

        ½Fext(z + w) + ½Fext*(swapped)(z − w) + ½|w|²,

    first over grid offsets w (exact table lookups) and then by damped Newton on the interpolated
    tables. Nodes whose optimal split touches the table edge or untrusted conjugate entries are
    marked untrusted, and so are nodes whose Newton residual stays above ``tol``; more than a
    ``max_stalled`` fraction of those raises :class:`SolverFailure`.
    """
    conj = legendre_transform(fext).swapped()
    h = fext.spacing
    shape = fext.shape
    k = len(shape)

    f_vals = np.where(fext.trusted, fext.values, np.inf)
    g_vals = np.where(conj.trusted, conj.values, np.inf)
    best = 0.5 * (f_vals + g_vals)
    best_w = np.zeros(shape + (k,))
    for offset in itertools.product(range(-offset_radius, offset_radius + 1), repeat=k):
        if not any(offset):
            continue
        here, plus, minus = _offset_slices(offset, shape)
        w = np.asarray(offset) * h
        cand = 0.5 * (f_vals[plus] + g_vals[minus]) + 0.5 * w @ w
        better = cand < best[here]
        if better.any():
            best[here] = np.where(better, cand, best[here])
            best_w[here] = np.where(better[..., None], w, best_w[here])

    z = fext.nodes()
    w = best_w.reshape(-1, k)
    lower, upper = fext.lower, fext.upper
    room = np.minimum(z - lower, upper - z)
    d = fext.dim

    def split(ww):
        zp, zm = z + ww, z - ww
        return zp[:, :d], zp[:, d:], zm[:, :d], zm[:, d:]

    residual = np.full(z.shape[0], np.inf)
    finite = np.isfinite(best.ravel())
    it = -1
    for it in range(newton_steps):
        p1, q1, p2, q2 = split(w)
        grad = 0.5 * fext.gradient(p1, q1) - 0.5 * conj.gradient(p2, q2) + w
        residual = np.linalg.norm(grad, axis=-1)
        if residual[finite].max(initial=0.0) < tol:
            break
        hess = 0.5 * fext.hessian(p1, q1) + 0.5 * conj.hessian(p2, q2) + np.eye(k)
        step = np.linalg.solve(hess, grad[..., None])[..., 0]
        w = np.clip(w - step, -room, room)
    log.debug(f"proximal average: {it + 1} Newton steps, max residual {residual[finite].max(initial=0.0):.3e}")

    p1, q1, p2, q2 = split(w)
    refined = 0.5 * fext.value(p1, q1) + 0.5 * conj.value(p2, q2) + 0.5 * np.einsum("ij,ij->i", w, w)
    values = np.minimum(best.ravel(), refined)

    at_edge = np.any(np.abs(w) >= room - 1e-12, axis=-1) & np.any(w != 0, axis=-1)
    trusted = finite & fext.is_trusted(p1, q1) & conj.is_trusted(p2, q2) & ~at_edge
    stalled = trusted & (residual > tol)
    if stalled.sum() > max_stalled * max(trusted.sum(), 1):
        worst = float(residual[stalled].max())
        raise SolverFailure(
            f"proximal average inner minimization stalled at {int(stalled.sum())} nodes", worst, newton_steps
        )
    if stalled.any():
        log.warning(f"proximal average: {int(stalled.sum())} nodes above residual {tol:g}, marked untrusted")
        trusted &= ~stalled

    values = np.where(np.isfinite(values), values, np.nanmax(np.where(np.isfinite(values), values, np.nan)))
    return TabulatedIntegrand(
        fext.axes, values.reshape(shape), fext.Lambda, fext.K0, selfdual=True, trusted=trusted.reshape(shape)
    )


@dataclass
class Representation:
    a: MonotoneMap
    extended: TabulatedIntegrand
    integrand: TabulatedIntegrand

    @property
    def tabulation_error(self) -> float:
        return tabulation_error(float(self.integrand.spacing.max()), self.integrand.Lambda, self.a.dim)


def represent(a: MonotoneMap, bound: float, n: int = 17, tau: Optional[float] = None) -> Representation:
    """Full pipeline: Fitzpatrick pieces, the extended integrand, then its self-dual proximal average."""
    fext = build_extended_integrand(a, bound, n, tau)
    F = selfdual_proximal_average(fext)
    log.info(
        f"represented {a.name} on [-{bound:g},{bound:g}]^{2 * a.dim} with {n} nodes/axis, "
        f"{int(F.trusted.sum())}/{F.trusted.size} trusted entries"
    )
    return Representation(a, fext, F)


def selfduality_residual(F: TabulatedIntegrand, margin: int = 1) -> ndarray:
    """|F*(q, p) − F(p, q)| on nodes where both tables are trusted, NaN elsewhere."""
    dual = legendre_transform(F).swapped()
    mask = F.trusted & dual.trusted & F.interior_mask(margin)
    return np.where(mask, np.abs(dual.values - F.values), np.nan)
