"""Pointwise exterior algebra in a 4-dimensional chart frame.

2-forms are antisymmetric 4x4 coefficient matrices W with

    omega = sum_{a<b} W[a, b] e^a ^ e^b

in the ordered chart coframe (dx1, dx2, dx3, dt).  Scalar coefficients of
4-forms are taken relative to the positive volume element
dx1 ^ dx2 ^ dx3 ^ dt.  With that convention the triple

    omega_i = dx_i ^ dt + dx_j ^ dx_k        (i, j, k cyclic)

is the flat reference triple: it has unit volume weight mu = 1 and its
recovered metric is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DefiniteError, DomainError, ShapeError

_ASYM_TOL = 1e-12


def _check_2form(W, name: str = "form") -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.shape != (4, 4):
        raise ShapeError(f"{name} must be a 4x4 matrix, got {W.shape}")
    scale = np.max(np.abs(W))
    if scale > 0 and np.max(np.abs(W + W.T)) > _ASYM_TOL * scale:
        raise ShapeError(f"{name} is not antisymmetric")
    return W


@dataclass(frozen=True, eq=False)
class CoTriple:
    """Three 2-forms at a point, stacked as an array of shape (3, 4, 4)."""

    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.shape != (3, 4, 4):
            raise ShapeError(f"CoTriple needs shape (3, 4, 4), got {w.shape}")
        for i in range(3):
            _check_2form(w[i], f"omega_{i + 1}")
        object.__setattr__(self, "omega", w)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.omega[i]

    def pfaffians(self) -> np.ndarray:
        return np.array([pfaffian(self.omega[i]) for i in range(3)])

    def scaled(self, factor: float) -> "CoTriple":
        return CoTriple(factor * self.omega)

    def rotated(self, R) -> "CoTriple":
        """Rotate the triple index: omega'_i = sum_j R[i, j] omega_j."""
        R = np.asarray(R, dtype=float)
        return CoTriple(np.einsum("ij,jab->iab", R, self.omega))


@dataclass(frozen=True, eq=False)
class QMatrix:
    """Symmetric traceless 3x3 matrix of 4-form coefficients."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (3, 3):
            raise ShapeError(f"QMatrix needs shape (3, 3), got {e.shape}")
        object.__setattr__(self, "entries", e)

    def frobenius(self) -> float:
        return float(np.linalg.norm(self.entries))

    def defect(self, mu: float) -> float:
        """Dimensionless defect: Frobenius norm over the triple volume weight."""
        return self.frobenius() / abs(mu)


def flat_triple() -> CoTriple:
    """omega_i = dx_i ^ dt + dx_j ^ dx_k (cyclic); mu = 1, metric = identity."""
    w = np.zeros((3, 4, 4))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        w[i, i, 3] = 1.0
        w[i, j, k] = 1.0
    return CoTriple(w - np.transpose(w, (0, 2, 1)))


def pfaffian(W) -> float:
    W = _check_2form(W)
    return float(W[0, 1] * W[2, 3] - W[0, 2] * W[1, 3] + W[0, 3] * W[1, 2])


def wedge_2_2(a, b) -> float:
    """Coefficient of a ^ b relative to dx1 ^ dx2 ^ dx3 ^ dt.

    Bilinear and symmetric; wedge_2_2(w, w) = 2 pf(w).  The three
    complementary-pair sums are grouped so the value is exactly symmetric
    in (a, b) in floating point as well.
    """
    A = _check_2form(a, "a")
    B = _check_2form(b, "b")
    s1 = A[0, 1] * B[2, 3] + A[2, 3] * B[0, 1]
    s2 = A[0, 2] * B[1, 3] + A[1, 3] * B[0, 2]
    s3 = A[0, 3] * B[1, 2] + A[1, 2] * B[0, 3]
    return float((s1 - s2) + s3)


def q_operator(t: CoTriple) -> QMatrix:
    """Q(omega)_jk = omega_j ^ omega_k - (1/3)(sum_i omega_i^2) delta_jk.

    Zero exactly when the three forms are pointwise orthogonal with equal
    norms.  The output is symmetric by the symmetry of the wedge and
    traceless by construction.
    """
    w = t.omega
    Q = np.empty((3, 3))
    for j in range(3):
        for k in range(j, 3):
            Q[j, k] = Q[k, j] = wedge_2_2(w[j], w[k])
    Q -= (np.trace(Q) / 3.0) * np.eye(3)
    return QMatrix(Q)


def triple_volume(t: CoTriple) -> float:
    """Volume weight mu = (1/6) sum_i coefficient(omega_i ^ omega_i)."""
    return sum(wedge_2_2(t.omega[i], t.omega[i]) for i in range(3)) / 6.0


def q_defect(t: CoTriple) -> float:
    """Frobenius norm of Q over mu; the dimensionless pointwise defect."""
    return q_operator(t).defect(triple_volume(t))


def metric_from_triple(t: CoTriple, q_tol: float = 1e-8, asym_tol: float = 1e-8) -> np.ndarray:
    """Recover the metric a definite triple determines.

    Uses the almost-complex endomorphism J = -(omega_2)^-1 omega_3 and
    g(u, v) = omega_1(u, J v), then symmetrizes.  Conventions are pinned by
    flat_triple() -> identity.  Raises DefiniteError when the normalized Q
    defect exceeds ``q_tol`` or mu <= 0, and when the recovered matrix is
    asymmetric beyond roundoff (a convention bug, not noise).
    """
    mu = triple_volume(t)
    if not mu > 0.0:
        raise DefiniteError(f"triple volume mu={mu} is not positive")
    defect = q_operator(t).defect(mu)
    if defect > q_tol:
        raise DefiniteError(f"normalized Q defect {defect:.3e} exceeds {q_tol:.1e}")
    J = -np.linalg.solve(t.omega[1], t.omega[2])
    g = t.omega[0] @ J
    asym = np.max(np.abs(g - g.T))
    if asym > asym_tol * max(np.max(np.abs(g)), 1e-300):
        raise DefiniteError(f"recovered metric asymmetry {asym:.3e}; conventions broken")
    g = 0.5 * (g + g.T)
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        # a triple with the quaternion orientation reversed lands here
        raise DefiniteError("recovered metric is not positive definite") from exc
    return g


# -- finite-difference exterior derivative --------------------------------------


def _infer_degree(val) -> int:
    arr = np.asarray(val, dtype=float)
    if arr.shape == ():
        return 0
    if arr.shape == (4,):
        return 1
    if arr.shape == (4, 4):
        return 2
    raise ShapeError(f"field value of shape {arr.shape} is not a p-form, p in (0,1,2)")


def exterior_derivative(
    field: Callable[[np.ndarray], np.ndarray],
    x,
    step: float,
    richardson: bool = False,
) -> np.ndarray:
    """Central-difference exterior derivative of a p-form field, p in {0,1,2}.

    ``field`` maps a 4-vector chart point to a scalar, a 4-covector, or an
    antisymmetric 4x4 matrix.  Returns the (p+1)-form as shape (4,), (4, 4)
    or (4, 4, 4).  Second-order accurate; one Richardson level is applied
    when ``richardson`` is set.  DomainError from the field propagates when
    a stencil point is inadmissible.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (4,):
        raise ShapeError(f"chart point must be a 4-vector, got {x.shape}")
    if not step > 0.0:
        raise DomainError("step must be positive")
    p = _infer_degree(field(x))

    def d_at(h: float) -> np.ndarray:
        grads = []
        for a in range(4):
            ea = np.zeros(4)
            ea[a] = h
            grads.append((np.asarray(field(x + ea), float) - np.asarray(field(x - ea), float)) / (2.0 * h))
        D = np.stack(grads)  # D[a] = partial_a (components)
        if p == 0:
            return D.reshape(4)
        if p == 1:
            return D - D.T
        # (dW)[a,b,c] = d_a W[b,c] - d_b W[a,c] + d_c W[a,b]
        return D - np.transpose(D, (1, 0, 2)) + np.transpose(D, (1, 2, 0))

    if richardson:
        return (4.0 * d_at(step / 2.0) - d_at(step)) / 3.0
    return d_at(step)


# -- frame-honest norms -----------------------------------------------------------


def orthonormal_coframe(g) -> np.ndarray:
    """Matrix F whose columns are g-orthonormal vectors (F^T g F = I)."""
    g = np.asarray(g, dtype=float)
    L = np.linalg.cholesky(g)
    return np.linalg.inv(L).T


def form_sup_norm(T, g) -> float:
    """Max absolute component of a p-form in an orthonormal frame of g."""
    T = np.asarray(T, dtype=float)
    F = orthonormal_coframe(g)
    for _ in range(T.ndim):
        T = np.tensordot(T, F, axes=([0], [0]))
    return float(np.max(np.abs(T)))
