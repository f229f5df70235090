"""In-house dense linear-algebra kernels over R and C.

Everything here is implemented from scratch on top of numpy array
arithmetic (no LAPACK-backed factorizations):

* Householder QR (thin or full, R with real nonnegative diagonal),
* null vector of an (n-1) x n matrix via full QR of the adjoint,
* full SVD via Golub-Kahan bidiagonalization + implicit-shift QR on the
  real bidiagonal core,
* LU with partial pivoting (blocked right-looking updates) and solves,
* projection onto the orthogonal complement of a subspace,
* row-to-span-of-other-rows distances and the negative second moment
  identity check,
* smallest-modulus eigenpair via inverse iteration with Rayleigh-quotient
  refinement.

Matrices are plain numpy arrays: 2-d, row-major, with the dtype
(float64/complex128) serving as the field tag; inputs are validated and
promoted by ``as_matrix``.  All tolerances are relative to the Frobenius
norm of the input so the kernels are scale-free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergedError, RankDeficientError, SingularMatrixError
from .rng import DistSpec, RngStream, sample_vector
from .unit_vector import UnitVector

_GAUSS_COMPLEX = DistSpec(family="gaussian", field="complex")

_EPS = float(np.finfo(np.float64).eps)
_DEFAULT_RANK_TOL = 1e-12
_PIVOT_TOL = 1e-14
_LU_BLOCK = 48


# ---------------------------------------------------------------------------
# small helpers

def as_matrix(m) -> np.ndarray:
    """Validate and convert to a 2-d float64/complex128 array."""
    a = np.asarray(m)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("expected a nonempty 2-d matrix")
    dtype = np.complex128 if np.iscomplexobj(a) else np.float64
    a = a.astype(dtype, copy=False)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def fro_norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(a) ** 2)))


def vec_norm(v: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(v) ** 2)))


def _phase(z) -> complex | float:
    """z/|z| with the 0 -> 1 convention."""
    az = abs(z)
    return z / az if az > 0.0 else 1.0


# ---------------------------------------------------------------------------
# Householder QR

def _householder(x: np.ndarray):
    """Reflector (v, tau) with (I - tau v v*) x = beta e1, |beta| = ||x||.

    Returns (None, 0.0, x[0]) when x is already a multiple of e1 with a
    nonnegative leading entry and nothing needs reflecting.
    """
    xnorm = vec_norm(x)
    if xnorm == 0.0:
        return None, 0.0, x.dtype.type(0)
    tail = vec_norm(x[1:])
    if tail == 0.0 and x[0] == abs(x[0]):
        return None, 0.0, x[0]
    phase = _phase(x[0])
    beta = -phase * xnorm
    v = x.copy()
    v[0] -= beta
    tau = 2.0 / np.sum(np.abs(v) ** 2)
    return v, float(tau), beta


def _apply_left(block: np.ndarray, v: np.ndarray, tau: float) -> None:
    """block <- (I - tau v v*) @ block, in place."""
    w = tau * (v.conj() @ block)
    block -= np.outer(v, w)


def _qr_reflectors(m: np.ndarray):
    """Householder factorization; returns (R, reflectors).

    ``R`` is an upper-triangular (trapezoidal) array the same shape as the
    input; ``reflectors`` is a list of (j, v, tau) with v of length rows-j.
    The implicit Q is H_0 H_1 ... H_{k-1}.
    """
    r = m.copy()
    rows, cols = r.shape
    reflectors = []
    for j in range(min(rows, cols)):
        if rows - j == 1:
            break
        v, tau, beta = _householder(r[j:, j])
        if v is None:
            continue
        if j + 1 < cols:
            _apply_left(r[j:, j + 1:], v, tau)
        r[j, j] = beta
        r[j + 1:, j] = 0.0
        reflectors.append((j, v, tau))
    return r, reflectors


def _assemble_q(reflectors, rows: int, cols: int, dtype) -> np.ndarray:
    """Form Q columns 0..cols-1 by reverse application of the reflectors."""
    q = np.zeros((rows, cols), dtype=dtype)
    np.fill_diagonal(q, 1.0)
    for j, v, tau in reversed(reflectors):
        _apply_left(q[j:, :], v, tau)
    return q


def _apply_q_adjoint(reflectors, vec: np.ndarray) -> np.ndarray:
    """Return Q* vec (forward application of the reflectors)."""
    out = vec.copy()
    for j, v, tau in reflectors:
        out[j:] -= v * (tau * (v.conj() @ out[j:]))
    return out


def _apply_q(reflectors, vec: np.ndarray) -> np.ndarray:
    """Return Q vec (reverse application of the reflectors)."""
    out = vec.copy()
    for j, v, tau in reversed(reflectors):
        out[j:] -= v * (tau * (v.conj() @ out[j:]))
    return out


def qr_decompose(m, mode: str = "thin"):
    """Householder QR with real nonnegative diagonal of R.

    Requires rows >= cols.  ``mode="thin"`` returns Q of shape (rows, cols);
    ``mode="full"`` returns the square unitary Q.  The sign/phase of each
    diagonal entry of R is absorbed into the corresponding column of Q.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    if rows < cols:
        raise ValueError("qr_decompose requires rows >= cols")
    if mode not in ("thin", "full"):
        raise ValueError(f"unknown mode {mode!r}")
    r, reflectors = _qr_reflectors(a)
    qcols = cols if mode == "thin" else rows
    q = _assemble_q(reflectors, rows, qcols, a.dtype)
    # absorb diagonal phases so diag(R) is real and nonnegative
    for j in range(cols):
        ph = _phase(r[j, j])
        if ph != 1.0:
            r[j, j:] *= np.conj(ph)
            q[:, j] *= ph
    r = r[:cols, :] if mode == "thin" else r
    return q, r


def null_vector(a, rank_tol: float = _DEFAULT_RANK_TOL) -> UnitVector:
    """Unit vector x with A x = 0 for an (n-1) x n matrix A of full rank.

    Computed as the last column of the full Q of the QR factorization of
    the adjoint of A.  The phase of the result is whatever the
    factorization produces; callers impose a convention via the hyperplane
    module.  Raises RankDeficientError when some diagonal entry of R falls
    below rank_tol * ||A||_F (the null space is then not 1-dimensional).
    """
    a = as_matrix(a)
    rows, cols = a.shape
    if cols != rows + 1:
        raise ValueError(f"expected an (n-1) x n matrix, got {rows} x {cols}")
    n = cols
    adj = a.conj().T  # n x (n-1)
    r, reflectors = _qr_reflectors(adj)
    norm = fro_norm(a)
    if norm == 0.0:
        raise RankDeficientError("zero matrix has no 1-dimensional null space")
    threshold = rank_tol * norm
    diag = np.abs(np.diagonal(r))
    if np.any(diag < threshold):
        raise RankDeficientError(
            f"rank-deficient input: min |R_jj| = {diag.min():.3e} < {threshold:.3e}"
        )
    e_last = np.zeros(n, dtype=adj.dtype)
    e_last[n - 1] = 1.0
    x = _apply_q(reflectors, e_last)
    x = x / vec_norm(x)
    return UnitVector(x, phase_mode="raw")


# ---------------------------------------------------------------------------
# LU with partial pivoting

@dataclass(eq=False)
class LuFactorization:
    """Packed LU factors (unit lower + upper in one array) and row permutation."""

    lu: np.ndarray
    perm: np.ndarray

    def solve(self, b: np.ndarray) -> np.ndarray:
        lu = self.lu
        n = lu.shape[0]
        x = np.asarray(b, dtype=lu.dtype)[self.perm].copy()
        for i in range(1, n):
            x[i] -= lu[i, :i] @ x[:i]
        for i in range(n - 1, -1, -1):
            x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
        return x


def lu_factor(m, pivot_tol: float = _PIVOT_TOL) -> LuFactorization:
    """Blocked right-looking LU with partial pivoting.

    Raises SingularMatrixError when a pivot magnitude falls below
    pivot_tol * ||M||_F.
    """
    a = as_matrix(m)
    n, ncols = a.shape
    if n != ncols:
        raise ValueError("lu_factor requires a square matrix")
    norm = fro_norm(a)
    if norm == 0.0:
        raise SingularMatrixError("zero matrix")
    threshold = pivot_tol * norm
    lu = a.copy()
    perm = np.arange(n)
    for k0 in range(0, n, _LU_BLOCK):
        k1 = min(k0 + _LU_BLOCK, n)
        for k in range(k0, k1):
            p = int(np.argmax(np.abs(lu[k:, k]))) + k
            if abs(lu[p, k]) < threshold:
                raise SingularMatrixError(
                    f"pivot {abs(lu[p, k]):.3e} below threshold {threshold:.3e} at column {k}"
                )
            if p != k:
                lu[[k, p], :] = lu[[p, k], :]
                perm[[k, p]] = perm[[p, k]]
            lu[k + 1:, k] /= lu[k, k]
            if k + 1 < k1:
                lu[k + 1:, k + 1:k1] -= np.outer(lu[k + 1:, k], lu[k, k + 1:k1])
        if k1 < n:
            for k in range(k0, k1):  # U12 <- L11^{-1} A12
                lu[k + 1:k1, k1:] -= np.outer(lu[k + 1:k1, k], lu[k, k1:])
            lu[k1:, k1:] -= lu[k1:, k0:k1] @ lu[k0:k1, k1:]
    return LuFactorization(lu=lu, perm=perm)


def solve(m, b) -> np.ndarray:
    """Solve M y = b by LU with partial pivoting."""
    a = as_matrix(m)
    rhs = np.asarray(b)
    if rhs.ndim != 1 or rhs.shape[0] != a.shape[0]:
        raise ValueError("right-hand side shape does not match the matrix")
    return lu_factor(a).solve(rhs)


# ---------------------------------------------------------------------------
# projections and row distances

def project_complement(basis_h, u, check_basis: bool = True) -> np.ndarray:
    """P_H u = u - B (B* u) for B an orthonormal basis of H (as columns).

    Projects onto the orthogonal complement of span(B).  When
    ``check_basis`` is set, B is rejected unless ||B* B - I||_max <= 1e-10.
    """
    b = as_matrix(basis_h)
    vec = np.asarray(u)
    if vec.ndim != 1 or vec.shape[0] != b.shape[0]:
        raise ValueError("vector length does not match basis dimension")
    if check_basis:
        gram = b.conj().T @ b
        dev = float(np.max(np.abs(gram - np.eye(b.shape[1]))))
        if dev > 1e-10:
            raise ValueError(f"basis not orthonormal: max |B*B - I| = {dev:.3e}")
    return vec - b @ (b.conj().T @ vec)


@dataclass(eq=False)
class ComplementProjector:
    """Projector onto the orthogonal complement of a column span.

    Holds the span as Householder reflectors instead of an explicit
    orthonormal basis, so one factorization gives O(dim * span) projections.
    Numerically identical to project_complement over the thin-QR basis of
    the same columns.
    """

    reflectors: list
    span_dim: int
    dim: int
    dtype: np.dtype

    @classmethod
    def from_columns(cls, w, rank_tol: float = _DEFAULT_RANK_TOL) -> "ComplementProjector":
        a = as_matrix(w)
        rows, cols = a.shape
        if cols > rows:
            raise ValueError("span cannot exceed the ambient dimension")
        r, reflectors = _qr_reflectors(a)
        if np.any(np.abs(np.diagonal(r)) < rank_tol * fro_norm(a)):
            raise RankDeficientError("columns are not linearly independent")
        return cls(reflectors=reflectors, span_dim=cols, dim=rows, dtype=a.dtype)

    def apply(self, u: np.ndarray) -> np.ndarray:
        vec = np.asarray(u)
        if vec.shape != (self.dim,):
            raise ValueError("vector length does not match the ambient dimension")
        z = _apply_q_adjoint(self.reflectors, vec.astype(np.result_type(vec.dtype, self.dtype)))
        z[: self.span_dim] = 0.0
        return _apply_q(self.reflectors, z)


def row_distances(m, rank_tol: float = _DEFAULT_RANK_TOL) -> np.ndarray:
    """d_j = distance from row j to the span of the remaining rows.

    Requires rows <= cols and full row rank (checked by a QR rank test).
    Each distance is ||P_{H_j} row_j|| with P_{H_j} realized through
    project_complement over an orthonormal basis of the other rows.
    """
    a = as_matrix(m)
    rows, cols = a.shape
    if rows > cols:
        raise ValueError("row_distances requires rows <= cols")
    norm = fro_norm(a)
    if norm == 0.0:
        raise RankDeficientError("zero matrix")
    r, _ = _qr_reflectors(a.conj().T)
    if np.any(np.abs(np.diagonal(r)) < rank_tol * norm):
        raise RankDeficientError("rows are not linearly independent")
    if rows == 1:
        return np.array([vec_norm(a[0])])
    dists = np.empty(rows)
    for j in range(rows):
        others = np.delete(a, j, axis=0).T  # row vectors as columns
        basis, _ = qr_decompose(others, mode="thin")
        residual = project_complement(basis, a[j], check_basis=False)
        dists[j] = vec_norm(residual)
    return dists


def neg_second_moment_check(m, rank_tol: float = _DEFAULT_RANK_TOL):
    """Both sides of the negative second moment identity.

    Returns (lhs, rhs) with lhs = sum_j sigma_j^{-2} from the SVD and
    rhs = sum_j d_j^{-2} from row_distances; the two sides are computed by
    independent code paths and must agree to 1e-8 relative for any
    full-row-rank input of moderate condition number.
    """
    a = as_matrix(m)
    if a.shape[0] > a.shape[1]:
        raise ValueError("neg_second_moment_check requires rows <= cols")
    norm = fro_norm(a)
    if norm == 0.0:
        raise RankDeficientError("zero matrix")
    result = svd(a, want_vectors=False)
    sigma = result.singular_values
    if np.any(sigma < rank_tol * norm):
        raise RankDeficientError("matrix does not have full row rank")
    lhs = float(np.sum(sigma ** -2.0))
    dists = row_distances(a, rank_tol=rank_tol)
    rhs = float(np.sum(dists ** -2.0))
    return lhs, rhs


# ---------------------------------------------------------------------------
# SVD: Golub-Kahan bidiagonalization + implicit-shift QR

@dataclass(eq=False)
class SvdResult:
    """Singular values (descending) with optional singular-vector blocks."""

    singular_values: np.ndarray
    left_vectors: np.ndarray | None = None
    right_vectors: np.ndarray | None = None


def _bidiagonalize(a: np.ndarray, want_vectors: bool):
    """Reduce a (rows >= cols) to real bidiagonal form.

    Returns (d, e, u, v) with d (len k) the diagonal, e (len k-1) the
    superdiagonal, both real nonnegative, and u (m x k), v (n x k) the
    accumulated unitary factors (None unless requested), so that
    a = u @ bidiag(d, e) @ v*.
    """
    rows, cols = a.shape
    b = a.copy()
    left = []
    right = []
    for j in range(cols):
        if rows - j > 1:
            v, tau, beta = _householder(b[j:, j])
            if v is not None:
                if j + 1 < cols:
                    _apply_left(b[j:, j + 1:], v, tau)
                b[j, j] = beta
                b[j + 1:, j] = 0.0
                left.append((j, v, tau))
        if cols - j > 2:
            # reflector acting on the right: build it from the conjugated row
            v, tau, beta = _householder(b[j, j + 1:].conj())
            if v is not None:
                w = tau * (b[j + 1:, j + 1:] @ v)
                b[j + 1:, j + 1:] -= np.outer(w, v.conj())
                b[j, j + 1] = np.conj(beta)
                b[j, j + 2:] = 0.0
                right.append((j + 1, v, tau))
    k = cols
    d_c = np.diagonal(b)[:k].copy()
    e_c = np.diagonal(b, offset=1)[: k - 1].copy()

    u = vmat = None
    if want_vectors:
        u = _assemble_q(left, rows, k, a.dtype)
        vmat = _assemble_q(right, cols, k, a.dtype)

    # rotate the complex bidiagonal onto the real nonnegative axis,
    # absorbing the phases into the columns of u and v
    d = np.empty(k)
    e = np.empty(max(k - 1, 0))
    if np.iscomplexobj(b):
        ph_l = np.empty(k, dtype=np.complex128)
        ph_r = np.empty(k, dtype=np.complex128)
        ph_r[0] = 1.0
        for j in range(k):
            dj = d_c[j] * ph_r[j]
            ph_l[j] = _phase(dj)
            d[j] = abs(dj)
            if j + 1 < k:
                ej = np.conj(ph_l[j]) * e_c[j]
                ph_r[j + 1] = np.conj(_phase(ej))
                e[j] = abs(ej)
        if want_vectors:
            u *= ph_l
            vmat *= ph_r
    else:
        sign_l = np.empty(k)
        sign_r = np.empty(k)
        sign_r[0] = 1.0
        for j in range(k):
            dj = d_c[j] * sign_r[j]
            sign_l[j] = 1.0 if dj >= 0 else -1.0
            d[j] = abs(dj)
            if j + 1 < k:
                ej = sign_l[j] * e_c[j]
                sign_r[j + 1] = 1.0 if ej >= 0 else -1.0
                e[j] = abs(ej)
        if want_vectors:
            u *= sign_l
            vmat *= sign_r
    return d, e, u, vmat


def _rot(f: float, g: float):
    """(c, s, r) with c*f + s*g = r, -s*f + c*g = 0, r = hypot(f, g)."""
    if g == 0.0:
        return 1.0, 0.0, f
    if f == 0.0:
        return 0.0, 1.0, g
    r = math.hypot(f, g)
    return f / r, g / r, r


def _rot_cols(mat: np.ndarray, i: int, j: int, c: float, s: float) -> None:
    ti = mat[:, i] * c + mat[:, j] * s
    mat[:, j] = mat[:, i] * (-s) + mat[:, j] * c
    mat[:, i] = ti


def _chase_zero_diagonal(d, e, u, i: int, hi: int) -> None:
    """Annihilate e[i] when d[i] ~ 0 by left rotations against rows i+1..hi."""
    f = e[i]
    e[i] = 0.0
    for j in range(i + 1, hi + 1):
        c, s, r = _rot(d[j], f)
        d[j] = r
        if u is not None:
            _rot_cols(u, j, i, c, s)
        if j < hi:
            f = -s * e[j]
            e[j] = c * e[j]


def _chase_zero_last(d, e, v, lo: int, hi: int) -> None:
    """Annihilate e[hi-1] when d[hi] ~ 0 by right rotations up the block."""
    f = e[hi - 1]
    e[hi - 1] = 0.0
    for j in range(hi - 1, lo - 1, -1):
        c, s, r = _rot(d[j], f)
        d[j] = r
        if v is not None:
            _rot_cols(v, j, hi, c, s)
        if j > lo:
            f = -s * e[j - 1]
            e[j - 1] = c * e[j - 1]


def _golub_kahan_sweep(d, e, u, v, lo: int, hi: int) -> None:
    """One implicit-shift QR sweep on the bidiagonal block [lo, hi]."""
    # Wilkinson shift from the trailing 2x2 of B^T B
    dm, dn, em = d[hi - 1], d[hi], e[hi - 1]
    emm = e[hi - 2] if hi - 1 > lo else 0.0
    t11 = dm * dm + emm * emm
    t22 = dn * dn + em * em
    t12 = dm * em
    delta = 0.5 * (t11 - t22)
    denom = delta + math.copysign(math.hypot(delta, t12), delta if delta != 0.0 else 1.0)
    mu = t22 - (t12 * t12) / denom if denom != 0.0 else t22

    f = d[lo] * d[lo] - mu
    g = d[lo] * e[lo]
    for k in range(lo, hi):
        c, s, _ = _rot(f, g)
        if k > lo:
            e[k - 1] = c * f + s * g
        # right rotation on columns (k, k+1)
        dk, ek, dk1 = d[k], e[k], d[k + 1]
        d[k] = c * dk + s * ek
        e[k] = -s * dk + c * ek
        bulge = s * dk1
        d[k + 1] = c * dk1
        if v is not None:
            _rot_cols(v, k, k + 1, c, s)
        # left rotation on rows (k, k+1) to kill the bulge
        c, s, r = _rot(d[k], bulge)
        d[k] = r
        ek, dk1 = e[k], d[k + 1]
        e[k] = c * ek + s * dk1
        d[k + 1] = -s * ek + c * dk1
        if u is not None:
            _rot_cols(u, k, k + 1, c, s)
        if k < hi - 1:
            f = e[k]
            g = s * e[k + 1]
            e[k + 1] = c * e[k + 1]


def _bidiagonal_qr(d, e, u, v, sweep_cap: int) -> None:
    """Implicit-shift QR iteration on a real bidiagonal (d, e), in place."""
    k = d.shape[0]
    if k == 1:
        return
    sweeps = 0
    hi = k - 1
    while hi > 0:
        scale = max(float(np.max(np.abs(d))), float(np.max(np.abs(e))) if e.size else 0.0)
        if scale == 0.0:
            return
        conv = _EPS * scale
        while hi > 0 and abs(e[hi - 1]) <= _EPS * (abs(d[hi - 1]) + abs(d[hi])) + 1e-300:
            e[hi - 1] = 0.0
            hi -= 1
        if hi == 0:
            break
        lo = hi - 1
        while lo > 0 and abs(e[lo - 1]) > _EPS * (abs(d[lo - 1]) + abs(d[lo])) + 1e-300:
            lo -= 1
        handled_zero = False
        for i in range(lo, hi + 1):
            if abs(d[i]) <= conv:
                d[i] = 0.0
                if i < hi:
                    _chase_zero_diagonal(d, e, u, i, hi)
                else:
                    _chase_zero_last(d, e, v, lo, hi)
                handled_zero = True
                break
        if handled_zero:
            continue
        _golub_kahan_sweep(d, e, u, v, lo, hi)
        sweeps += 1
        if sweeps > sweep_cap:
            raise NonConvergedError(
                f"bidiagonal QR exceeded {sweep_cap} sweeps (block [{lo}, {hi}])"
            )


def svd(m, want_vectors: bool = True, sweep_cap: int | None = None) -> SvdResult:
    """Full SVD via Golub-Kahan bidiagonalization + implicit-shift QR.

    Values are sorted descending; complex inputs go through unitary
    bidiagonalization onto a real bidiagonal core.  The iteration cap
    defaults to 100 * max(rows, cols) sweeps; exceeding it raises
    NonConvergedError.  ``want_vectors=False`` skips all vector
    accumulation (the result then carries only singular values).
    """
    a = as_matrix(m)
    rows, cols = a.shape
    if sweep_cap is None:
        sweep_cap = 100 * max(rows, cols)
    if rows < cols:
        flipped = svd(a.conj().T, want_vectors=want_vectors, sweep_cap=sweep_cap)
        return SvdResult(
            singular_values=flipped.singular_values,
            left_vectors=flipped.right_vectors,
            right_vectors=flipped.left_vectors,
        )
    scale = fro_norm(a)
    if scale == 0.0:
        k = cols
        u = v = None
        if want_vectors:
            u = np.zeros((rows, k), dtype=a.dtype)
            np.fill_diagonal(u, 1.0)
            v = np.zeros((cols, k), dtype=a.dtype)
            np.fill_diagonal(v, 1.0)
        return SvdResult(np.zeros(k), u, v)
    d, e, u, v = _bidiagonalize(a / scale, want_vectors)
    _bidiagonal_qr(d, e, u, v, sweep_cap)
    # fix signs, then sort descending
    if u is not None:
        u[:, d < 0.0] *= -1.0
    d = np.abs(d)
    order = np.argsort(-d, kind="stable")
    d = d[order] * scale
    if want_vectors:
        u = u[:, order]
        v = v[:, order]
    return SvdResult(singular_values=d, left_vectors=u, right_vectors=v)


# ---------------------------------------------------------------------------
# smallest-modulus eigenpair

@dataclass(eq=False)
class Eigenpair:
    """Eigenvalue of smallest modulus with its unit eigenvector."""

    eigenvalue: complex
    eigenvector: UnitVector
    residual: float
    iterations: int = 0


def _null_direction_square(a: np.ndarray) -> np.ndarray:
    """Unit vector minimizing ||A x|| for a numerically singular square A."""
    _, reflectors = _qr_reflectors(a.conj().T)
    n = a.shape[0]
    e_last = np.zeros(n, dtype=a.dtype)
    e_last[n - 1] = 1.0
    x = _apply_q(reflectors, e_last)
    return x / vec_norm(x)


def _rayleigh_polish(a, fro, v, lam, tol, budget):
    """Rayleigh-quotient iteration from (lam, v); None unless it converges.

    Each step re-factors M - lambda*I.  On an exactly-eigen shift the
    factorization is singular; the shift is nudged off by a few ulps.
    """
    n = a.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    used = 0
    while used < budget:
        shift = lam
        try:
            lu_shift = lu_factor(a - shift * eye)
        except SingularMatrixError:
            shift = lam + (1e-12 * fro + 1e-300) * (1 + 1j)
            try:
                lu_shift = lu_factor(a - shift * eye)
            except SingularMatrixError:
                return None
        w = lu_shift.solve(v)
        used += 1
        v = w / vec_norm(w)
        lam = complex(v.conj() @ (a @ v))
        res = vec_norm(a @ v - lam * v)
        if res <= tol * fro:
            return lam, v, res, used
    return None


def smallest_modulus_eigenpair(
    m,
    tol: float = 1e-10,
    max_iter: int = 400,
    stream: RngStream | None = None,
) -> Eigenpair:
    """Eigenpair of smallest |lambda| by inverse iteration, in complex arithmetic.

    Strategy: LU-factor M once and iterate v <- normalize(M^{-1} v) from a
    random complex start drawn from ``stream``.  If that converges fully,
    its fixed point is the smallest-modulus eigenpair and we are done.
    Otherwise (the linear rate stalls on near-tied moduli) the estimate is
    refined with Rayleigh-quotient iteration, re-factoring M - lambda*I
    each step; since Rayleigh iteration locks onto the *nearest* eigenvalue,
    the result is then cross-checked against a second candidate obtained by
    inverse iteration deflated against the first, and the smaller modulus
    wins.  Success means residual <= tol * ||M||_F.  A numerically singular
    M short-circuits to lambda = 0 with the null direction as eigenvector.
    Raises NonConvergedError after ``max_iter`` main-path iterations, which
    signals near-tied smallest moduli; callers may retry or discard.
    """
    a = as_matrix(m)
    n, ncols = a.shape
    if n != ncols:
        raise ValueError("smallest_modulus_eigenpair requires a square matrix")
    if stream is None:
        raise ValueError("smallest_modulus_eigenpair requires an RngStream for its start vector")
    a = a.astype(np.complex128, copy=False)
    fro = fro_norm(a)
    if fro == 0.0:
        v = np.zeros(n, dtype=np.complex128)
        v[0] = 1.0
        return Eigenpair(0j, UnitVector(v, "raw"), 0.0, 0)

    start = sample_vector(stream, n, _GAUSS_COMPLEX)
    v = start / vec_norm(start)

    try:
        lu = lu_factor(a)
    except SingularMatrixError:
        x = _null_direction_square(a)
        return Eigenpair(0j, UnitVector(x, "raw"), vec_norm(a @ x), 0)

    iters = 0
    lam = 0j
    res = math.inf
    phase1_target = max(tol, 1e-6) * fro
    prev_res = math.inf
    slow = 0
    phase1_cap = min(max_iter, 80)
    while iters < phase1_cap:
        w = lu.solve(v)
        iters += 1
        v = w / vec_norm(w)
        lam = complex(v.conj() @ (a @ v))
        res = vec_norm(a @ v - lam * v)
        if res <= tol * fro:
            # pure inverse iteration converged: this is the smallest-modulus pair
            return Eigenpair(lam, UnitVector(v, "raw"), res, iters)
        if res <= phase1_target:
            break
        slow = slow + 1 if res > 0.85 * prev_res else 0
        if slow >= 6:
            break
        prev_res = res

    polished = _rayleigh_polish(a, fro, v, lam, tol, budget=max_iter - iters)
    if polished is None:
        raise NonConvergedError(
            f"inverse/Rayleigh iteration did not reach residual {tol:g} * ||M||_F "
            f"in {max_iter} iterations (near-tied smallest moduli?)"
        )
    lam_a, v_a, res_a, used = polished
    iters += used

    # Rayleigh iteration may have locked onto a near-tied neighbor of larger
    # modulus.  Search for a second candidate by deflated inverse iteration
    # (its own small budget; failure just means no smaller modulus was found).
    w = v - v_a * complex(v_a.conj() @ v)
    wnorm = vec_norm(w)
    if wnorm < 1e-8:
        w = sample_vector(stream, n, _GAUSS_COMPLEX)
        w = w - v_a * complex(v_a.conj() @ w)
        wnorm = vec_norm(w)
    best = (lam_a, v_a, res_a)
    if wnorm > 0:
        w = w / wnorm
        for _ in range(15):
            w = lu.solve(w)
            w = w - v_a * complex(v_a.conj() @ w)
            wn = vec_norm(w)
            if wn == 0.0:
                break
            w = w / wn
        else:
            lam_b = complex(w.conj() @ (a @ w))
            second = _rayleigh_polish(a, fro, w, lam_b, tol, budget=10)
            if second is not None and abs(second[0]) < abs(best[0]):
                best = second[:3]
    lam, v, res = best
    return Eigenpair(lam, UnitVector(v, "raw"), res, iters)


# ---------------------------------------------------------------------------
# debug CSV dumps

def _entry_str(z) -> str:
    if isinstance(z, complex) or np.iscomplexobj(z):
        z = complex(z)
        return f"{z.real:.17g}{z.imag:+.17g}i"
    return format(float(z), ".17g")


def matrix_to_csv(m, path: str) -> None:
    """One row per line, complex entries as ``a+bi``."""
    a = as_matrix(m)
    with open(path, "w", encoding="utf-8") as fh:
        for row in a:
            fh.write(",".join(_entry_str(z) for z in row) + "\n")


def vector_to_csv(v, path: str) -> None:
    vec = np.asarray(v)
    with open(path, "w", encoding="utf-8") as fh:
        for z in vec:
            fh.write(_entry_str(z) + "\n")
