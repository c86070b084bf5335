"""Quasi-eigenvalues from the equivalent circular quantum graph.

Edges carry ``-f'' = nu f`` and vertex ``j`` imposes

    f_{j+1}(0) = tan(beta_j) f_j(l_j),   f'_{j+1}(0) = cot(beta_j) f'_j(l_j),

with ``beta_j = pi**2 / (4 alpha_j)``.  In the variables ``(f, f'/sigma)``
an edge is the rotation by ``sigma l_j`` and a vertex is
``diag(tan beta_j, cot beta_j)``.  The monodromy ``M`` has unit determinant,
so ``det(M - I) = 2 - tr M``; multiplying by ``P = prod sin(beta_j) cos(beta_j)``
clears the poles and gives the smooth secular function

    G(sigma) = 2 P - tr prod_j diag(sin^2 beta_j, cos^2 beta_j) R(sigma l_j).

This evaluation never touches the trigonometric-polynomial code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .charpoly import PolygonSpec
from .errors import ExceptionalAngle
from .roots import RootOpts, isolate_roots
from .spectra import QuasiSpectrum

ORACLE_GUARD = 1e-6


@dataclass(frozen=True, eq=False)
class CircleGraph:
    edge_lengths: np.ndarray
    betas: np.ndarray
    guard: float = ORACLE_GUARD

    def __post_init__(self):
        ell = np.asarray(self.edge_lengths, dtype=float)
        b = np.asarray(self.betas, dtype=float)
        if ell.shape != b.shape or ell.ndim != 1 or ell.size == 0:
            raise ValueError("edge_lengths and betas must be matching non-empty vectors")
        if np.any(ell <= 0):
            raise ValueError("edge lengths must be positive")
        sc = np.abs(np.sin(b) * np.cos(b))
        if np.any(sc < self.guard):
            j = int(np.argmin(sc))
            raise ExceptionalAngle(f"vertex {j} is exceptional (|sin b cos b| = {sc[j]:.3g})")
        object.__setattr__(self, "edge_lengths", ell)
        object.__setattr__(self, "betas", b)

    @classmethod
    def from_spec(cls, spec: PolygonSpec, guard: float = ORACLE_GUARD) -> "CircleGraph":
        """Vertex parameters from the angles, or from (cos, sin) of ``pi**2/(2 alpha)``."""
        if spec.angles is not None:
            betas = np.pi ** 2 / (4.0 * spec.angles)
        else:
            betas = 0.5 * np.arctan2(spec.sines, spec.cosines)
        return cls(np.array(spec.lengths), betas, guard)

    @property
    def n(self) -> int:
        return len(self.edge_lengths)

    @property
    def total_length(self) -> float:
        return float(self.edge_lengths.sum())

    def _weights(self) -> tuple[np.ndarray, np.ndarray, float]:
        s2 = np.sin(self.betas) ** 2
        c2 = np.cos(self.betas) ** 2
        P = float(np.prod(np.sin(self.betas) * np.cos(self.betas)))
        return s2, c2, P

    def secular_bound(self, order: int) -> float:
        """Bound on ``|G^(order)|`` (the trace of a product of 2x2 factors)."""
        s2, c2, P = self._weights()
        top = 2.0 * float(np.prod(np.maximum(s2, c2))) * self.total_length ** order
        return top + (2.0 * abs(P) if order == 0 else 0.0)


def _rot(theta: np.ndarray, quarter: int = 0) -> np.ndarray:
    th = theta + quarter * (np.pi / 2)
    c, s = np.cos(th), np.sin(th)
    return np.stack([np.stack([c, s], -1), np.stack([-s, c], -1)], -2)


def _secular(G: CircleGraph, sigma, order: int):
    s = np.atleast_1d(np.asarray(sigma, dtype=float))
    s2, c2, P = G._weights()
    n = G.n
    if order == 0:
        terms = [(0,) * n]
    else:
        # product rule: differentiate the rotation of edge j (d/dtheta R = R(theta + pi/2))
        terms = [tuple(int(k == j) for k in range(n)) for j in range(n)]
    out = np.zeros(len(s))
    for q in terms:
        M = np.broadcast_to(np.eye(2), (len(s), 2, 2))
        for j in range(n):
            Rj = _rot(s * G.edge_lengths[j], q[j])
            D = np.array([s2[j], c2[j]])[None, :, None]
            M = (D * Rj) @ M
        w = np.prod([G.edge_lengths[j] for j in range(n) if q[j]]) if order else 1.0
        out -= w * np.trace(M, axis1=-2, axis2=-1)
    if order == 0:
        out += 2.0 * P
    return out if np.ndim(sigma) else float(out[0])


def secular_value(G: CircleGraph, sigma):
    """Cleared secular function ``G(sigma)``; vanishes exactly at quasi-eigenvalues."""
    return _secular(G, sigma, 0)


def secular_derivative(G: CircleGraph, sigma):
    return _secular(G, sigma, 1)


def zero_eigenspace_dim(G: CircleGraph, rtol: float = 1e-8) -> int:
    """Multiplicity of ``nu = 0``: fixed vectors of the linear-function monodromy.

    At ``nu = 0`` edge solutions are ``a + b x`` and an edge maps ``(f, f')``
    by ``[[1, l], [0, 1]]``.  The poles of the vertex maps are cleared as in
    the secular function, which leaves the kernel unchanged.
    """
    s2, c2, P = G._weights()
    M = np.eye(2)
    for j in range(G.n):
        E = np.array([[1.0, G.edge_lengths[j]], [0.0, 1.0]])
        M = np.diag([s2[j], c2[j]]) @ E @ M
    A = M - P * np.eye(2)
    sv = np.linalg.svd(A, compute_uv=False)
    scale = max(float(np.linalg.norm(M, 2)), abs(P), 1e-300)
    return int(np.sum(sv <= rtol * scale))


def graph_eigenvalues(G: CircleGraph, sigma_max: float, opts: RootOpts = RootOpts()) -> QuasiSpectrum:
    """Square roots of the graph eigenvalues in ``[0, sigma_max]``, with multiplicity."""
    if sigma_max <= 0:
        raise ValueError("sigma_max must be positive")
    k0 = zero_eigenspace_dim(G)
    touch_tol = opts.touch_tol_rel * G.secular_bound(0)
    h = math.pi / (opts.oversample * G.total_length)
    x, mult = isolate_roots(
        lambda s: secular_value(G, s), lambda s: secular_derivative(G, s), G.secular_bound(2),
        0.0, float(sigma_max), h, touch_tol, opts=opts, skip_left_cluster=k0 > 0)
    keep = x > 0
    vals = np.concatenate([np.zeros(k0), np.repeat(x[keep], mult[keep])])
    return QuasiSpectrum(vals, k0, float(sigma_max))
