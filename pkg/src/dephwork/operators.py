"""Dense complex operator algebra.

Operators are plain 2-D ``numpy`` arrays. Composite spaces always use the
(system ⊗ environment) ordering with the system index slow, i.e. the
row index of ``kron(A, B)`` is ``i_S * dim_B + i_B``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

HERMITIAN_ATOL = 1e-12
DENSITY_ATOL = 1e-12


class NonHermitianError(ValueError):
    """Raised when an operator that must be Hermitian is not."""


class EigensolverError(RuntimeError):
    """Raised when the dense Hermitian eigensolver fails to converge."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def hermitian(a, atol: float = HERMITIAN_ATOL, name: str = "operator") -> np.ndarray:
    """Validate ``a`` as a Hermitian matrix and return an immutable complex copy."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    dev = np.max(np.abs(a - a.conj().T))
    if dev > atol:
        raise NonHermitianError(
            f"{name} is not Hermitian: max |A - A^dagger| = {dev:.3e} > {atol:.1e}"
        )
    return _readonly(a)


def density(a, atol: float = DENSITY_ATOL) -> np.ndarray:
    """Validate ``a`` as a density operator (Hermitian, unit trace, positive)."""
    rho = hermitian(a, atol=atol, name="density operator")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density operator has trace {tr!r}, expected 1")
    lam_min = np.linalg.eigvalsh(rho)[0]
    if lam_min < -atol:
        raise ValueError(f"density operator has negative eigenvalue {lam_min:.3e}")
    return rho


def max_abs(a) -> float:
    """Max-abs entry norm, ``||A||_max``."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_diagonal(a) -> bool:
    a = np.asarray(a)
    return not np.any(a[~np.eye(a.shape[0], dtype=bool)])


def _maybe_real(a: np.ndarray) -> np.ndarray:
    return a.real if np.iscomplexobj(a) and not np.any(a.imag) else a


def commutator(a, b) -> np.ndarray:
    """``AB - BA``; diagonal operands are handled elementwise."""
    a = np.asarray(a)
    b = np.asarray(b)
    if is_diagonal(b):
        d = np.diag(b)
        return a * (d[None, :] - d[:, None])
    if is_diagonal(a):
        d = np.diag(a)
        return b * (d[:, None] - d[None, :])
    a, b = _maybe_real(a), _maybe_real(b)
    return a @ b - b @ a


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product with the first factor's index slow."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("tensor_product expects two square matrices")
    return np.kron(a, b)


def kron_all(factors) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def projector(n: int, dim: int) -> np.ndarray:
    p = np.zeros((dim, dim), dtype=complex)
    p[n, n] = 1.0
    return p


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and the unitary whose columns are eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _fix_phases(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    # first component with |v_i| > tol made real positive, per column
    mags = np.abs(v)
    idx = np.argmax(mags > tol, axis=0)
    lead = v[idx, np.arange(v.shape[1])]
    # unit columns always have some |v_i| >= 1/sqrt(dim) > tol
    return v / (lead / np.abs(lead))


def eig_hermitian(a) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back ascending. Each eigenvector is phase-fixed so that
    its first non-negligible component is real and positive, which makes the
    output reproducible between runs.
    """
    a = np.asarray(a, dtype=complex)
    try:
        # real symmetric input takes the (much cheaper) real solver
        lam, v = np.linalg.eigh(_maybe_real(a))
    except np.linalg.LinAlgError as exc:
        raise EigensolverError(
            f"eigensolver failed for {a.shape[0]}x{a.shape[0]} matrix "
            f"with ||A||_max = {max_abs(a):.6e}: {exc}"
        ) from exc
    v = _fix_phases(v.astype(complex, copy=False))
    lam.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(lam, v)


def operator_function(
    spec: SpectralDecomposition,
    f: Callable[[np.ndarray], np.ndarray],
    normalize: bool = False,
) -> np.ndarray:
    """Return ``V diag(f(lambda)) V^dagger``.

    ``f`` is applied to the whole eigenvalue array and may be complex valued
    (e.g. propagators). With ``normalize=True`` the values of ``f`` are read as
    log-weights: the result is ``exp(f)`` scaled to unit trace, evaluated with
    the largest log-weight factored out so that nothing overflows.
    """
    vals = np.asarray(f(spec.eigenvalues))
    if normalize:
        vals = np.real(vals)
        w = np.exp(vals - np.max(vals))
        vals = w / w.sum()
    v = spec.eigenvectors
    return (v * vals) @ v.conj().T


def partial_trace_env(op, dim_s: int, dim_b: int) -> np.ndarray:
    """Trace out the environment factor of a (system ⊗ environment) operator."""
    op = np.asarray(op)
    if op.shape != (dim_s * dim_b, dim_s * dim_b):
        raise ValueError(
            f"operator shape {op.shape} does not match dim_S*dim_B = {dim_s}*{dim_b}"
        )
    return np.einsum("ijkj->ik", op.reshape(dim_s, dim_b, dim_s, dim_b))


def cluster_values(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group indices of a 1-D array into runs whose neighbours differ by <= tol.

    Returned groups are index arrays into ``values``, ordered by value.
    """
    values = np.asarray(values)
    if values.size == 0:
        return []
    order = np.argsort(values, kind="stable")
    sv = values[order]
    breaks = np.nonzero(np.diff(sv) > tol)[0] + 1
    return np.split(order, breaks)
