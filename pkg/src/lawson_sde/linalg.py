"""Small dense matrix helpers used by the Lawson transformation.

``expm`` follows the scaling-and-squaring scheme with diagonal Padé
approximants of degree 3, 5, 7, 9 or 13 (Higham 2005).  Problem matrices here
are at most 12x12, so everything stays dense.
"""

from __future__ import annotations

import math

import numpy as np

DEFAULT_TOL = 1e-12

# Padé numerator coefficients b_0..b_m for each degree.
_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0,
    ),
    13: (
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0, 960960.0,
        16380.0, 182.0, 1.0,
    ),
}

# Largest 1-norm for which degree m is accurate to unit roundoff.
_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}

# Squarings beyond this overflow for any matrix worth exponentiating.
_MAX_SQUARINGS = 1000


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def _pade_uv(A: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    b = _PADE_COEFFS[m]
    ident = np.eye(A.shape[0])
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (
            A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
            + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident
        )
        V = (
            A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
            + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
        )
        return U, V
    powers = [ident, A2]
    for _ in range((m - 1) // 2 - 1):
        powers.append(powers[-1] @ A2)
    U = A @ sum(b[2 * k + 1] * P for k, P in enumerate(powers))
    V = sum(b[2 * k] * P for k, P in enumerate(powers))
    return U, V


def _rotation_2x2(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def expm(A) -> np.ndarray:
    """Matrix exponential of a real square matrix.

    Raises ``ValueError`` for non-square or non-finite input and
    ``OverflowError`` when the result is not representable.
    """
    A = _as_square(A)
    n = A.shape[0]
    if not A.any():
        return np.eye(n)
    if n == 2 and A[0, 0] == 0.0 and A[1, 1] == 0.0 and A[0, 1] == -A[1, 0]:
        return _rotation_2x2(A[1, 0])
    return _expm_pade(A)


def _expm_pade(A: np.ndarray) -> np.ndarray:
    norm1 = np.abs(A).sum(axis=0).max()
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            U, V = _pade_uv(A, m)
            return np.linalg.solve(V - U, V + U)

    s = max(0, math.ceil(math.log2(norm1 / _THETA[13])))
    if s > _MAX_SQUARINGS:
        raise OverflowError("matrix norm too large for expm")
    As = A / 2.0**s
    U, V = _pade_uv(As, 13)
    R = np.linalg.solve(V - U, V + U)
    with np.errstate(over="raise", invalid="raise"):
        try:
            for _ in range(s):
                R = R @ R
        except FloatingPointError as exc:
            raise OverflowError("expm overflowed during squaring") from exc
    return R


def commutator(A, B) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError(f"commutator needs equal square shapes, got {A.shape} and {B.shape}")
    return A @ B - B @ A


def is_skew_symmetric(A, tol: float = DEFAULT_TOL) -> bool:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return bool(np.abs(A + A.T).max(initial=0.0) <= tol)


def commutes_with(A, D, tol: float = DEFAULT_TOL) -> bool:
    return bool(np.abs(commutator(A, D)).max(initial=0.0) <= tol)
