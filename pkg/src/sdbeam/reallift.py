"""Real-valued images of complex vectors and Hermitian quadratic forms.

Stacking order is [real parts; imaginary parts] everywhere; constraint
builders elsewhere rely on it.
"""

import numpy as np


def lift_weight(w):
    """Stack [Re w; Im w] into a real vector of twice the length."""
    w = np.asarray(w, dtype=complex).ravel()
    return np.concatenate([w.real, w.imag])


def unlift_weight(w_tilde):
    """Rebuild the complex vector from its real lift."""
    w_tilde = np.asarray(w_tilde, dtype=float).ravel()
    if w_tilde.size % 2:
        raise ValueError("a lifted vector must have even length")
    n = w_tilde.size // 2
    return w_tilde[:n] + 1j * w_tilde[n:]


def lift_steering(v):
    """Real images (v_tilde, v_hat) of a complex vector v.

    For any complex w with lift w_tilde: Re(v^H w) = v_tilde . w_tilde and
    Im(v^H w) = v_hat . w_tilde.
    """
    v = np.asarray(v, dtype=complex).ravel()
    v_tilde = np.concatenate([v.real, v.imag])
    v_hat = np.concatenate([-v.imag, v.real])
    return v_tilde, v_hat


def lift_matrix(a, tol=1e-12):
    """Real 2N x 2N image of a Hermitian matrix.

    Satisfies w^H A w = w_tilde^T A_tilde w_tilde; eigenvalues of A appear
    twice. Raises ValueError when the input is not Hermitian within `tol`
    relative to its largest entry.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    return np.block([[a.real, -a.imag], [a.imag, a.real]])
