"""Small 3-vector / 3x3 algebra and unit-quaternion helpers.

Quaternions are stored scalar-last as ``[qv1, qv2, qv3, q0]`` numpy arrays
and composed with the Hamilton product.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError, SingularityError

UNIT_TOL = 1e-9
RENORM_THRESHOLD = 1e-12
Q0_MIN_DEFAULT = 1e-6


def cross_matrix(a) -> np.ndarray:
    """Skew-symmetric matrix ``A`` such that ``A @ b == cross(a, b)``."""
    a = np.asarray(a, dtype=float)
    return np.array([[0.0, -a[2], a[1]],
                     [a[2], 0.0, -a[0]],
                     [-a[1], a[0], 0.0]])


def diag_span(a) -> np.ndarray:
    """The spanned diagonal matrix ``(a_i)_d``."""
    return np.diag(np.asarray(a, dtype=float))


def quat_identity() -> np.ndarray:
    return np.array([0.0, 0.0, 0.0, 1.0])


def quat_norm_defect(q) -> float:
    q = np.asarray(q, dtype=float)
    return abs(float(q @ q) - 1.0)


def quat_normalize(q, threshold: float = RENORM_THRESHOLD) -> np.ndarray:
    """Return ``q`` rescaled to unit norm when its defect exceeds ``threshold``."""
    q = np.asarray(q, dtype=float)
    n2 = float(q @ q)
    if n2 == 0.0 or not np.isfinite(n2):
        raise InvalidInputError("cannot normalize a zero or non-finite quaternion")
    if abs(n2 - 1.0) > threshold:
        return q / np.sqrt(n2)
    return q.copy()


def as_unit_quaternion(q, tol: float = UNIT_TOL, normalize: bool = False) -> np.ndarray:
    """Validate (or optionally normalize) a scalar-last quaternion.

    Parameters
    ----------
    q : array_like, shape (4,)
    tol : float
        Allowed ``| |q|^2 - 1 |``.
    normalize : bool
        If true, any non-zero finite input is projected onto the unit sphere
        instead of being rejected.
    """
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise InvalidInputError(f"quaternion must be 4 finite numbers, got {q!r}")
    if normalize:
        return quat_normalize(q, threshold=0.0)
    if quat_norm_defect(q) > tol:
        raise InvalidInputError(f"quaternion is not unit norm (|q|^2 - 1 = {float(q @ q) - 1:.3e})")
    return q.copy()


def quat_conj(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([-q[0], -q[1], -q[2], q[3]])


def quat_mul(a, b) -> np.ndarray:
    """Hamilton product ``a ⊗ b`` (scalar-last storage)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    av, a0 = a[:3], a[3]
    bv, b0 = b[:3], b[3]
    vec = a0 * bv + b0 * av + np.cross(av, bv)
    return np.concatenate([vec, [a0 * b0 - av @ bv]])


def quat_error(q_s, q_d, positive_scalar: bool = True) -> np.ndarray:
    """Attitude error ``q_e = q_d^{-1} ⊗ q_s``.

    Parameters
    ----------
    q_s, q_d : array_like
        Current and desired attitude, unit norm within ``UNIT_TOL``.
    positive_scalar : bool
        Flip the sign of the result so that ``q_e0 >= 0``.  Only meant for the
        scenario start; never apply it mid-run.

    Raises
    ------
    InvalidInputError
        If either input is not unit norm.
    """
    q_s = as_unit_quaternion(q_s)
    q_d = as_unit_quaternion(q_d)
    qe = quat_normalize(quat_mul(quat_conj(q_d), q_s))
    if positive_scalar and qe[3] < 0:
        qe = -qe
    return qe


def quat_angle(q) -> float:
    """Rotation angle (rad) represented by a unit quaternion, in [0, pi]."""
    q = np.asarray(q, dtype=float)
    return 2.0 * float(np.arctan2(np.linalg.norm(q[:3]), abs(q[3])))


def jacobian_Fs(q_e) -> np.ndarray:
    """Kinematic Jacobian ``F_s = 0.5 (q_e0 I + q_ev^x)``."""
    q_e = np.asarray(q_e, dtype=float)
    return 0.5 * (q_e[3] * np.eye(3) + cross_matrix(q_e[:3]))


def fs_inverse_apply(q_e, v, q0_min: float = Q0_MIN_DEFAULT) -> np.ndarray:
    """Compute ``F_s^{-1} v`` in closed form.

    For a unit quaternion, ``F_s^{-1} v = (2/q0) (q0^2 v + qv (qv.v) - q0 qv x v)``.

    Raises
    ------
    SingularityError
        If ``|q_e0| <= q0_min``.
    """
    q_e = np.asarray(q_e, dtype=float)
    v = np.asarray(v, dtype=float)
    qv, q0 = q_e[:3], q_e[3]
    if abs(q0) <= q0_min:
        raise SingularityError(f"|q_e0| = {abs(q0):.3e} <= q0_min = {q0_min:.1e}; F_s is singular")
    return (2.0 / q0) * (q0 * q0 * v + qv * (qv @ v) - q0 * np.cross(qv, v))


def jacobian_Fs_inverse(q_e, q0_min: float = Q0_MIN_DEFAULT) -> np.ndarray:
    """Matrix form of ``F_s^{-1}``; see :func:`fs_inverse_apply`."""
    return np.column_stack([fs_inverse_apply(q_e, e, q0_min) for e in np.eye(3)])
