import numpy as np

from utils.tolerances import get_tolerances


def jacobi_eigh(A, tol=None, max_sweeps=100):
    """Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Each rotation first removes the phase of the pivot and then applies the real
    Jacobi rotation, so the pivot entry is zeroed exactly. Sweeps stop once the
    off-diagonal Frobenius norm is below ``tol * ||A||_F``.

    Returns:
        (eigenvalues ascending, unitary U with A U = U diag(eigenvalues))
    """
    tol = get_tolerances().eig if tol is None else tol
    A = np.array(A, dtype=np.complex128, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("jacobi_eigh expects a square matrix, got shape %s" % (A.shape,))
    n = A.shape[0]
    V = np.eye(n, dtype=np.complex128)
    threshold = tol * np.linalg.norm(A)

    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(A.diagonal()))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                theta = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                phase = np.conj(apq / mag)
                J = np.array([[c, s], [-s * phase, c * phase]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ J
                A[idx, :] = J.conj().T @ A[idx, :]
                V[:, idx] = V[:, idx] @ J
    else:
        raise RuntimeError("Jacobi sweeps did not converge in %d sweeps" % max_sweeps)

    lam = A.diagonal().real
    order = np.argsort(lam, kind='stable')
    return lam[order], V[:, order]
