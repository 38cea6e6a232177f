"""Small dense complex linear algebra used by the detectors.

Every routine accepts a single matrix or a stack of matrices with leading
batch dimensions (``(..., rows, cols)``), so the Monte Carlo engine can push
thousands of independent channel realizations through one call.
"""

import numpy as np

#: Relative pivot magnitude below which a matrix is declared singular.
PIVOT_TOL = 1e-12


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


class SingularMatrixError(np.linalg.LinAlgError):
    """Gaussian elimination met a pivot below the singularity threshold."""


class RankDeficientError(SingularMatrixError):
    """A channel matrix is not of full column rank."""


def as_complex_matrix(A):
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim < 2:
        raise ShapeError(f"expected a matrix, got array of shape {A.shape}")
    return A


def identity(n):
    return np.eye(n, dtype=np.complex128)


def hermitian(A):
    """Conjugate transpose of the trailing two axes."""
    A = as_complex_matrix(A)
    return np.conj(np.swapaxes(A, -1, -2))


def matmul(A, B):
    A = as_complex_matrix(A)
    B = as_complex_matrix(B)
    if A.shape[-1] != B.shape[-2]:
        raise ShapeError(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def _solve_matrix(A, B):
    # A: (..., n, n), B: (..., n, m); both already copied and broadcast.
    n = A.shape[-1]
    batch = A.shape[:-2]
    A = A.reshape((-1, n, n))
    B = B.reshape((-1, n, B.shape[-1]))
    rows = np.arange(A.shape[0])

    scale = np.abs(A).reshape(A.shape[0], -1).max(axis=1)
    threshold = PIVOT_TOL * scale
    singular = scale == 0.0

    for k in range(n):
        piv = k + np.argmax(np.abs(A[:, k:, k]), axis=1)
        swap = piv != k
        if np.any(swap):
            r = rows[swap]
            p = piv[swap]
            A[r, k], A[r, p] = A[r, p], A[r, k].copy()
            B[r, k], B[r, p] = B[r, p], B[r, k].copy()
        pivot = A[:, k, k]
        singular |= np.abs(pivot) < threshold
        if np.any(singular):
            raise SingularMatrixError(
                f"pivot magnitude below {PIVOT_TOL:g} x max|A| at column {k}"
            )
        factors = A[:, k + 1:, k] / pivot[:, None]
        A[:, k + 1:, k:] -= factors[:, :, None] * A[:, k, None, k:]
        B[:, k + 1:, :] -= factors[:, :, None] * B[:, k, None, :]

    X = np.empty_like(B)
    for k in range(n - 1, -1, -1):
        acc = B[:, k, :] - np.einsum("bj,bjm->bm", A[:, k, k + 1:], X[:, k + 1:, :])
        X[:, k, :] = acc / A[:, k, k][:, None]
    return X.reshape(batch + (n, X.shape[-1]))


def solve(A, b):
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    ``b`` may be a vector (``(..., n)``) or a matrix of right-hand sides
    (``(..., n, m)``); the result has the same layout as ``b``.

    Raises
    ------
    SingularMatrixError
        If a selected pivot is smaller than ``1e-12`` times the largest
        entry magnitude of ``A``.
    """
    A = as_complex_matrix(A)
    b = np.asarray(b, dtype=np.complex128)
    n = A.shape[-1]
    if A.shape[-2] != n:
        raise ShapeError(f"solve needs a square matrix, got {A.shape[-2:]}")
    vector = b.ndim == A.ndim - 1
    if vector:
        b = b[..., None]
    if b.shape[-2] != n:
        raise ShapeError(f"right-hand side has {b.shape[-2]} rows, expected {n}")
    batch = np.broadcast_shapes(A.shape[:-2], b.shape[:-2])
    A = np.array(np.broadcast_to(A, batch + A.shape[-2:]))
    B = np.array(np.broadcast_to(b, batch + b.shape[-2:]))
    X = _solve_matrix(A, B)
    return X[..., 0] if vector else X


def householder_qr(H):
    """Thin QR factorization ``H = Q R`` of a stack of tall matrices.

    Returns ``Q`` with orthonormal columns (``(..., m, n)``) and upper
    triangular ``R`` (``(..., n, n)``); the diagonal of ``R`` is not forced
    positive.
    """
    H = as_complex_matrix(H)
    m, n = H.shape[-2:]
    if m < n:
        raise ShapeError(f"QR needs rows >= cols, got {m}x{n}")
    batch = H.shape[:-2]
    R = np.array(H.reshape((-1, m, n)))
    Q = np.broadcast_to(np.eye(m, dtype=np.complex128), (R.shape[0], m, m)).copy()
    for k in range(min(n, m - 1)):
        x = R[:, k:, k]
        norm_x = np.sqrt(np.sum(x.real**2 + x.imag**2, axis=1))
        head = x[:, 0]
        phase = np.ones_like(head)
        nz = head != 0
        phase[nz] = head[nz] / np.abs(head[nz])
        v = x.copy()
        v[:, 0] += phase * norm_x
        vnorm = np.sqrt(np.sum(v.real**2 + v.imag**2, axis=1))
        active = vnorm > 0
        v[active] /= vnorm[active, None]
        v[~active] = 0.0
        # R <- (I - 2 v v^H) R ; Q <- Q (I - 2 v v^H)
        vhr = np.einsum("bi,bij->bj", v.conj(), R[:, k:, :])
        R[:, k:, :] -= 2.0 * v[:, :, None] * vhr[:, None, :]
        qv = np.einsum("bij,bj->bi", Q[:, :, k:], v)
        Q[:, :, k:] -= 2.0 * qv[:, :, None] * v.conj()[:, None, :]
    Q = Q[:, :, :n].reshape(batch + (m, n))
    R = np.triu(R[:, :n, :]).reshape(batch + (n, n))
    return Q, R


def pseudo_inverse(H):
    """Left pseudo-inverse ``(H^H H)^{-1} H^H`` of a full-column-rank matrix.

    Evaluated as ``R^{-1} Q^H`` from a Householder QR factorization; the
    triangular system goes through :func:`solve`. This avoids squaring the
    condition number the way the explicit Gram matrix would.
    """
    H = as_complex_matrix(H)
    if H.shape[-2] < H.shape[-1]:
        raise RankDeficientError(
            f"{H.shape[-2]}x{H.shape[-1]} matrix cannot have full column rank"
        )
    Q, R = householder_qr(H)
    try:
        return solve(R, hermitian(Q))
    except SingularMatrixError as exc:
        raise RankDeficientError(f"matrix is not full column rank: {exc}") from exc


def regularized_inverse(H, lam):
    """``(lam I + H^H H)^{-1} H^H`` with ``I`` sized to the column count.

    Computed as the first ``rows`` columns of the pseudo-inverse of the
    stacked matrix ``[H; sqrt(lam) I]``, which is always of full column rank
    for ``lam > 0``. ``lam == 0`` is plain :func:`pseudo_inverse`.
    """
    lam = float(lam)
    if not lam >= 0.0:
        raise ValueError(f"regularization must be nonnegative, got {lam}")
    H = as_complex_matrix(H)
    if lam == 0.0:
        return pseudo_inverse(H)
    m, n = H.shape[-2:]
    ridge = np.broadcast_to(np.sqrt(lam) * identity(n), H.shape[:-2] + (n, n))
    return pseudo_inverse(np.concatenate([H, ridge], axis=-2))[..., :m]


def row_norms(A):
    A = as_complex_matrix(A)
    return np.sqrt(np.sum(A.real**2 + A.imag**2, axis=-1))
