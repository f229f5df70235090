"""Independent oracles used only by tests.

These deliberately avoid the code paths they check: the Jacobi eigensolver
validates the bidiagonalization SVD, power iteration validates the largest
singular value, Faddeev-LeVerrier + companion-matrix roots validate the
smallest-modulus eigenpair, and scipy quadrature validates closed-form CDFs.
"""

from __future__ import annotations

import numpy as np


def jacobi_eigenvalues(matrix, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic Jacobi, ascending."""
    a = np.array(matrix, dtype=np.complex128)
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diagonal(a)))
        if off.max() <= 1e-14 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                ph = apq / abs(apq)
                b = abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                tau = (aqq - app) / (2.0 * b)
                t = np.sign(tau) / (abs(tau) + np.hypot(tau, 1.0)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # U = diag(1, conj(ph)) @ [[c, s], [-s, c]]
                u = np.array([[c, s], [-np.conj(ph) * s, np.conj(ph) * c]])
                a[:, [p, q]] = a[:, [p, q]] @ u
                a[[p, q], :] = u.conj().T @ a[[p, q], :]
    return np.sort(np.diagonal(a).real)


def spectral_norm_power_iteration(matrix, iterations: int = 300, seed: int = 0) -> float:
    """sigma_max via power iteration on M* M."""
    a = np.asarray(matrix)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1])
    if np.iscomplexobj(a):
        v = v + 1j * rng.standard_normal(a.shape[1])
    v = v / np.linalg.norm(v)
    value = 0.0
    for _ in range(iterations):
        w = a.conj().T @ (a @ v)
        value = float(np.linalg.norm(w))
        v = w / value
    return float(np.sqrt(value))


def char_poly_coeffs(matrix) -> np.ndarray:
    """Monic characteristic polynomial coefficients (descending powers),
    by the Faddeev-LeVerrier recurrence (traces and matmuls only)."""
    a = np.array(matrix, dtype=np.complex128)
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    mk = np.zeros_like(a)
    c = 1.0 + 0j
    for k in range(1, n + 1):
        mk = a @ mk + c * np.eye(n)
        c = -np.trace(a @ mk) / k
        coeffs.append(c)
    return np.array(coeffs)


def min_modulus_root(matrix) -> complex:
    """Smallest-|root| eigenvalue via the companion matrix of the
    characteristic polynomial (numpy.roots)."""
    roots = np.roots(char_poly_coeffs(matrix))
    return complex(roots[np.argmin(np.abs(roots))])
