"""Dense eigen-analysis with explicit tolerances.

Everything here works on small dense matrices (a few hundred rows at most)
and wraps LAPACK through numpy.  The tolerances are module constants so the
analysis modules share one notion of "numerically equal".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, NotIrreducible, RepeatedEigenvalue

TOL_EIG = 1e-8
TOL_RANK = 1e-10
TOL_NIL = 1e-9
#: widest spread of a numerically split multiple eigenvalue that is re-merged
DEFECTIVE_RADIUS = 1e-3

__all__ = [
    "TOL_EIG",
    "TOL_RANK",
    "TOL_NIL",
    "EigenPair",
    "RealBlockForm",
    "eigen",
    "eigenvalues",
    "left_perron_vector",
    "real_block_form",
    "numerical_rank",
    "null_space",
    "nilpotency_index",
    "match_spectra",
]


@dataclass(frozen=True)
class EigenPair:
    """One cluster of numerically equal eigenvalues.

    ``vector`` is a unit eigenvector; ``kernel`` holds an orthonormal basis of
    the numerical kernel of ``A - value*I`` (one column per unit of geometric
    multiplicity).
    """

    value: complex
    vector: np.ndarray
    geometric_multiplicity: int
    algebraic_multiplicity: int
    kernel: np.ndarray

    @property
    def is_real(self):
        return self.value.imag == 0.0


def _scale(A):
    return max(1.0, float(np.linalg.norm(A, 2))) if A.size else 1.0


def _raw_eig(A):
    try:
        return np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def _clusters(values, tol):
    """Group eigenvalue indices by single-linkage within ``tol``."""
    order = np.lexsort((values.imag, values.real))
    groups = []
    for i in order:
        for grp in groups:
            if np.min(np.abs(values[grp] - values[i])) < tol:
                grp.append(i)
                break
        else:
            groups.append([i])
    # a second pass merges groups bridged through later members
    merged = True
    while merged:
        merged = False
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                d = np.min(np.abs(values[groups[a]][:, None] - values[groups[b]][None, :]))
                if d < tol:
                    groups[a] += groups.pop(b)
                    merged = True
                    break
            if merged:
                break
    return groups


def _merge_defective(A, values, groups, tol, scale):
    """Join clusters that a perturbed Jordan block has scattered.

    A defective eigenvalue of multiplicity ``k`` comes back from LAPACK as
    ``k`` values spread by roughly ``eps**(1/k)``, far wider than ``tol``.
    Nearby clusters are merged when the mean of their union is an eigenvalue
    to working accuracy (``A - mean*I`` numerically singular).
    """
    n = A.shape[0]
    out = []
    for loose in _clusters(values, DEFECTIVE_RADIUS * scale):
        members = set(loose)
        parts = [g for g in groups if members.issuperset(g)]
        if len(parts) > 1:
            mu = np.mean(values[loose])
            smin = np.linalg.svd(A - mu * np.eye(n), compute_uv=False)[-1]
            if smin < tol * scale:
                out.append(list(loose))
                continue
        out.extend(parts)
    return out


def null_space(M, rtol=TOL_EIG, scale=None):
    """Orthonormal basis (columns) of the numerical kernel of ``M``.

    Singular values below ``rtol * scale`` count as zero; ``scale`` defaults to
    ``max(1, ||M||_2)``.
    """
    M = np.atleast_2d(M)
    _, s, Vh = np.linalg.svd(M)
    if scale is None:
        scale = max(1.0, s[0] if s.size else 0.0)
    rank = int(np.sum(s > rtol * scale))
    return Vh[rank:].conj().T


def _canonical_phase(v):
    """Unit norm, largest-modulus entry real and positive."""
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def eigen(A, tol=TOL_EIG) -> list:
    """Eigenvalue clusters of ``A`` with geometric multiplicities.

    Eigenvalues closer than ``tol * max(1, ||A||)`` are merged and reported
    once, at their mean; so are the scattered copies of a defective
    eigenvalue.  Real clusters get real eigenvectors.  The list is
    sorted by decreasing real part, then decreasing imaginary part.
    """
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    n = A.shape[0]
    scale = _scale(A)
    values = _raw_eig(A)[0]
    pairs = []
    groups = _merge_defective(A, values, _clusters(values, tol * scale), tol, scale)
    for grp in groups:
        lam = complex(np.mean(values[grp]))
        if abs(lam.imag) < tol * scale:
            lam = complex(lam.real, 0.0)
        M = A - lam * np.eye(n) if lam.imag else A - lam.real * np.eye(n)
        K = null_space(M, tol, scale)
        if K.shape[1] == 0:
            # defective cluster split wider than the kernel tolerance
            K = np.linalg.svd(M)[2][-1:].conj().T
        v = K[:, 0]
        if lam.imag == 0.0:
            v = np.real(v)
            K = np.real(K)
            v = v / np.linalg.norm(v)
            v = v * np.sign(v[int(np.argmax(np.abs(v)))])
        else:
            v = _canonical_phase(v.astype(complex))
        pairs.append(EigenPair(lam, v, K.shape[1], len(grp), K))
    pairs.sort(key=lambda p: (-p.value.real, -p.value.imag))
    return pairs


def eigenvalues(A):
    """Plain eigenvalue array, sorted like :func:`eigen`."""
    vals = _raw_eig(np.asarray(A, dtype=float))[0]
    return vals[np.lexsort((-vals.imag, -vals.real))]


def match_spectra(A, B, tol=1e-7):
    """Eigenvalues of ``A`` that also belong to ``σ(B)`` within ``tol``.

    Returns cluster means from ``eigen(A)``; each distinct value once.
    """
    pa = eigen(A)
    pb = eigen(B)
    out = []
    for p in pa:
        if any(abs(p.value - q.value) < tol for q in pb):
            out.append(p.value)
    return out


def left_perron_vector(A) -> np.ndarray:
    """Left eigenvector ``w`` of a row-stochastic ``A`` for eigenvalue 1, ``w.sum() == 1``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    unit = [p for p in eigen(A.T) if abs(p.value - 1.0) < TOL_EIG * _scale(A)]
    if not unit or unit[0].algebraic_multiplicity != 1:
        raise NotIrreducible("eigenvalue 1 is not simple")
    K = null_space(A.T - np.eye(n), TOL_EIG)
    if K.shape[1] != 1:
        raise NotIrreducible("eigenvalue 1 is not simple")
    w = np.real(K[:, 0])
    w = w / w.sum()
    if np.any(w <= 0):
        raise NotIrreducible("left eigenvector for eigenvalue 1 is not strictly positive")
    return w


@dataclass(frozen=True)
class RealBlockForm:
    """``A @ T == T @ J`` with ``T[:, 0] == 1`` and ``J`` real block diagonal."""

    T: np.ndarray
    J: np.ndarray
    blocks: tuple  # (start, size, eigenvalue) per block

    @property
    def Jtilde(self):
        return self.J[1:, 1:]

    @property
    def T_inv(self):
        return np.linalg.inv(self.T)


def real_block_form(A, tol=TOL_EIG) -> RealBlockForm:
    """Real diagonal/rotation form for a matrix with simple spectrum.

    The leading block is the unit eigenvalue with eigenvector ``1``; each
    complex pair ``a ± bi`` becomes ``[[a, b], [-b, a]]`` with columns
    ``Re u, Im u`` of the eigenvector for ``a + bi``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    pairs = eigen(A, tol)
    repeated = [p.value for p in pairs if p.algebraic_multiplicity > 1]
    if repeated:
        raise RepeatedEigenvalue(f"repeated eigenvalues {repeated}")
    scale = _scale(A)
    unit = [p for p in pairs if abs(p.value - 1.0) < tol * scale]
    if len(unit) != 1:
        raise RepeatedEigenvalue("eigenvalue 1 is missing or not simple")
    T = np.zeros((n, n))
    J = np.zeros((n, n))
    T[:, 0] = 1.0
    J[0, 0] = 1.0
    blocks = [(0, 1, 1.0)]
    col = 1
    for p in pairs:
        if p is unit[0] or p.value.imag < 0:
            continue
        if p.value.imag == 0.0:
            T[:, col] = np.real(p.vector)
            J[col, col] = p.value.real
            blocks.append((col, 1, p.value.real))
            col += 1
        else:
            a, b = p.value.real, p.value.imag
            u = p.vector
            T[:, col] = u.real
            T[:, col + 1] = u.imag
            J[col:col + 2, col:col + 2] = [[a, b], [-b, a]]
            blocks.append((col, 2, p.value))
            col += 2
    if col != n:
        raise RepeatedEigenvalue("could not pair complex eigenvalues; spectrum not simple")
    return RealBlockForm(T, J, tuple(blocks))


def numerical_rank(M, rtol=TOL_RANK) -> int:
    """Count of singular values above ``rtol`` times the largest one."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def nilpotency_index(M, tol=TOL_NIL):
    """Smallest ``k <= n`` with ``max|M^k| < tol * max(1, max|M|)^k``, or ``None``."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    base = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    P = np.eye(n)
    for k in range(1, n + 1):
        P = P @ M
        if np.max(np.abs(P)) < tol * base**k:
            return k
    return None
