import numpy as np
import scipy.linalg

from utils.errors import IllPosedCutError
from utils.tolerances import get_tolerances
from .jacobi import jacobi_eigh


def _as_matrix(A):
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("expected square matrices, got shape %s" % (A.shape,))
    return A.astype(np.complex128, copy=False)


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def hermitize(A):
    return 0.5 * (A + dagger(A))


def check_hermitian(A, tol=None):
    A = _as_matrix(A)
    tol = get_tolerances().herm if tol is None else tol
    defect = np.linalg.norm(A - dagger(A), axis=(-2, -1))
    scale = np.maximum(1.0, np.linalg.norm(A, axis=(-2, -1)))
    bad = defect > tol * scale
    if np.any(bad):
        where = np.argwhere(np.atleast_1d(bad))[0]
        raise ValueError("matrix is not Hermitian (defect %.3g at stack index %s)"
                         % (np.atleast_1d(defect)[tuple(where)], tuple(int(i) for i in where)))
    return A


def eigh(A):
    """Eigendecomposition of a (stack of) Hermitian matrices, eigenvalues ascending."""
    A = _as_matrix(A)
    if get_tolerances().eigensolver == 'jacobi':
        flat = A.reshape((-1,) + A.shape[-2:])
        pairs = [jacobi_eigh(M) for M in flat]
        lam = np.stack([p[0] for p in pairs]).reshape(A.shape[:-1])
        U = np.stack([p[1] for p in pairs]).reshape(A.shape)
        return lam, U
    return np.linalg.eigh(A)


def eigvalsh(A):
    A = _as_matrix(A)
    if get_tolerances().eigensolver == 'jacobi':
        return eigh(A)[0]
    return np.linalg.eigvalsh(A)


def op_norm(A):
    """Operator norm of Hermitian matrices (largest |eigenvalue|)."""
    lam = eigvalsh(hermitize(_as_matrix(A)))
    return np.max(np.abs(lam), axis=-1) if lam.shape[-1] else np.zeros(lam.shape[:-1])


def rank_threshold(lam):
    """Per-matrix rank threshold from eigenvalues: rank_rel * ||A||, floored at rank_abs."""
    tol = get_tolerances()
    lam = np.asarray(lam)
    scale = np.max(np.abs(lam), axis=-1) if lam.shape[-1] else np.zeros(lam.shape[:-1])
    return np.maximum(tol.rank_rel * scale, tol.rank_abs)


def _from_eig(lam, U, values):
    R = (U * values[..., None, :]) @ dagger(U)
    return hermitize(R)


def func_calc(phi, A):
    """U diag(phi(lambda)) U* for Hermitian A; ``phi`` must act elementwise on arrays."""
    A = check_hermitian(A)
    lam, U = eigh(A)
    values = np.asarray(phi(lam), dtype=np.float64)
    if values.shape != lam.shape:
        raise ValueError("phi must map the eigenvalue array elementwise")
    return _from_eig(lam, U, values)


def cutdown(A, t):
    """(A - t)_+"""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("cutdown level must be nonnegative, got %r" % (t.min(),))
    return func_calc(lambda lam: np.maximum(lam - t[..., None], 0.0), A)


def spectral_proj(A, eta):
    """Projection onto the eigenvectors of A with eigenvalue > eta."""
    if eta <= 0:
        raise ValueError("spectral cut must be positive, got %r" % eta)
    A = check_hermitian(A)
    lam, U = eigh(A)
    dist = np.abs(lam - eta)
    if np.any(dist < get_tolerances().gap):
        bad = float(np.asarray(lam)[dist < get_tolerances().gap].flat[0])
        raise IllPosedCutError("cut at %.6g falls inside the spectrum (eigenvalue %.6g)" % (eta, bad),
                               eigenvalue=bad)
    return _from_eig(lam, U, (lam > eta).astype(np.float64))


def support_proj(A):
    """Projection onto the numerical support of a PSD matrix."""
    A = check_hermitian(A)
    lam, U = eigh(A)
    keep = lam > rank_threshold(lam)[..., None]
    return _from_eig(lam, U, keep.astype(np.float64))


def rank_tol(A, tol_rank=None):
    """Number of eigenvalues above the rank threshold (relative policy by default)."""
    lam = eigvalsh(check_hermitian(A))
    return ranks_from_eigenvalues(lam, tol_rank)


def ranks_from_eigenvalues(lam, tol_rank=None):
    lam = np.asarray(lam)
    threshold = rank_threshold(lam) if tol_rank is None else np.asarray(tol_rank)
    counts = np.sum(lam > np.asarray(threshold)[..., None], axis=-1)
    return int(counts) if np.ndim(counts) == 0 else counts


def ramp_apply(A, s):
    """f_s(A): 0 at 0, 1 on [s, 1], linear in between.

    Eigenvalues at or below the rank threshold are treated as zero, so the rank is
    preserved exactly.
    """
    if not (0 < s <= 1):
        raise ValueError("ramp parameter must lie in (0, 1], got %r" % s)
    A = check_hermitian(A)
    lam, U = eigh(A)
    if np.any(lam > 1 + get_tolerances().herm * 10):
        raise ValueError("ramp needs ||A|| <= 1 (largest eigenvalue %.6g)" % lam.max())
    threshold = rank_threshold(lam)[..., None]
    values = np.where(lam > threshold, np.minimum(lam / s, 1.0), 0.0)
    return _from_eig(lam, U, values)


def unitary_log(W, cut=None):
    """Hermitian H with exp(iH) = W for a stack of unitaries, on one common branch.

    The branch cut sits at angle ``cut``; by default in the middle of the widest arc
    of the circle free of every sampled eigenvalue, so that H varies continuously
    wherever W does. Eigenangles land in (cut - 2 pi, cut].
    """
    W = _as_matrix(W)
    flat = W.reshape((-1,) + W.shape[-2:])
    n = W.shape[-1]
    Z = np.empty_like(flat)
    theta = np.empty(flat.shape[:2])
    for i, w in enumerate(flat):
        S, Z[i] = scipy.linalg.schur(w, output='complex')
        theta[i] = np.angle(np.diag(S))
    if cut is None:
        angles = np.sort(np.mod(theta.ravel(), 2 * np.pi))
        if not angles.size:
            cut = np.pi
        else:
            gaps = np.diff(np.append(angles, angles[0] + 2 * np.pi))
            widest = int(np.argmax(gaps))
            if gaps[widest] < get_tolerances().gap:
                raise IllPosedCutError("eigenvalues of the unitaries cover the whole circle")
            cut = angles[widest] + 0.5 * gaps[widest]
    theta = cut - np.mod(cut - theta, 2 * np.pi)
    H = (Z * theta[:, None, :]) @ dagger(Z)
    return hermitize(H).reshape(W.shape[:-2] + (n, n))


def min_eig(A):
    lam = eigvalsh(hermitize(_as_matrix(A)))
    return lam[..., 0]


def is_psd(A, tol=None):
    tol = get_tolerances().psd if tol is None else tol
    A = _as_matrix(A)
    scale = np.maximum(1.0, op_norm(A))
    return bool(np.all(min_eig(A) >= -tol * scale))


def matrix_to_record(A):
    """Report serialization: size plus interleaved real/imag entries, row-major."""
    A = _as_matrix(A)
    if A.ndim != 2:
        raise ValueError("matrix_to_record expects a single matrix")
    data = np.empty(2 * A.size, dtype=np.float64)
    data[0::2] = A.real.ravel()
    data[1::2] = A.imag.ravel()
    return {'n': int(A.shape[0]), 'data': [float(v) for v in data]}


def matrix_from_record(record):
    n = int(record['n'])
    data = np.asarray(record['data'], dtype=np.float64)
    if data.size != 2 * n * n:
        raise ValueError("record holds %d numbers, expected %d" % (data.size, 2 * n * n))
    return (data[0::2] + 1j * data[1::2]).reshape(n, n)
