"""Dense complex Hermitian linear algebra over tensor-factored spaces.

Operators carry an ordered list of subsystem dimensions so that partial
traces can be taken by subsystem index.  Every eigen-based routine
symmetrizes its input as (A + A*)/2 first; over 10^4-plus solver rounds the
drift would otherwise accumulate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

HERMITICITY_TOL = 1e-12


def _as_complex_matrix(entries) -> np.ndarray:
    mat = np.asarray(entries, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    return mat


@dataclass(frozen=True)
class TensoredHermitian:
    """A dense Hermitian operator on a tensor product of subsystems.

    ``dims`` lists the subsystem dimensions in order; ``mat`` is the
    row-major complex matrix of side prod(dims).  The matrix is
    symmetrized on construction and must already be Hermitian to 1e-12.
    """

    dims: tuple[int, ...]
    mat: np.ndarray = field(repr=False)

    def __init__(self, entries, dims=None):
        mat = _as_complex_matrix(entries)
        if dims is None:
            dims = (mat.shape[0],)
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive: {dims}")
        if prod(dims) != mat.shape[0]:
            raise ValueError(
                f"matrix side {mat.shape[0]} != product of dims {dims}"
            )
        drift = np.abs(mat - mat.conj().T).max() if mat.size else 0.0
        scale = max(1.0, np.abs(mat).max()) if mat.size else 1.0
        if drift > HERMITICITY_TOL * scale:
            raise ValueError(f"matrix is not Hermitian (drift {drift:.3e})")
        sym = (mat + mat.conj().T) / 2
        sym.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", sym)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def with_dims(self, dims) -> "TensoredHermitian":
        """Reinterpret the same matrix with a different factorization."""
        return TensoredHermitian(self.mat, dims)

    def __add__(self, other: "TensoredHermitian") -> "TensoredHermitian":
        self._check_same_space(other)
        return TensoredHermitian(self.mat + other.mat, self.dims)

    def __sub__(self, other: "TensoredHermitian") -> "TensoredHermitian":
        self._check_same_space(other)
        return TensoredHermitian(self.mat - other.mat, self.dims)

    def __mul__(self, scalar: float) -> "TensoredHermitian":
        return TensoredHermitian(self.mat * float(scalar), self.dims)

    __rmul__ = __mul__

    def _check_same_space(self, other: "TensoredHermitian") -> None:
        if self.dims != other.dims:
            raise ValueError(f"dimension mismatch: {self.dims} vs {other.dims}")


@dataclass(frozen=True)
class EigDecomposition:
    """Eigenvalues sorted from largest to smallest, eigenvectors in columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def identity(dims) -> TensoredHermitian:
    dims = tuple(int(d) for d in dims)
    return TensoredHermitian(np.eye(prod(dims), dtype=np.complex128), dims)


def hs_inner(a: TensoredHermitian, b: TensoredHermitian) -> float:
    """Hilbert-Schmidt inner product tr(a b), real for Hermitian inputs."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(np.einsum("ij,ji->", a.mat, b.mat).real)


def tensor_product(a: TensoredHermitian, b: TensoredHermitian) -> TensoredHermitian:
    """Kronecker product; subsystem lists concatenate."""
    return TensoredHermitian(np.kron(a.mat, b.mat), a.dims + b.dims)


def _ptrace_array(mat: np.ndarray, dims: tuple[int, ...], subsystem: int) -> np.ndarray:
    n = len(dims)
    tensor = mat.reshape(dims + dims)
    out = np.trace(tensor, axis1=subsystem, axis2=n + subsystem)
    keep = prod(dims[:subsystem] + dims[subsystem + 1 :])
    return out.reshape(keep, keep)


def partial_trace(a: TensoredHermitian, subsystem: int) -> TensoredHermitian:
    """Trace out one subsystem; remaining dims keep their order."""
    if not 0 <= subsystem < len(a.dims):
        raise IndexError(
            f"subsystem {subsystem} out of range for dims {a.dims}"
        )
    new_dims = a.dims[:subsystem] + a.dims[subsystem + 1 :]
    if not new_dims:
        new_dims = (1,)
    return TensoredHermitian(_ptrace_array(a.mat, a.dims, subsystem), new_dims)


def permute_subsystems(a: TensoredHermitian, perm) -> TensoredHermitian:
    """Reorder subsystems: new factor i is old factor perm[i]."""
    perm = list(perm)
    n = len(a.dims)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of {n} subsystems")
    axes = perm + [n + k for k in perm]
    tensor = a.mat.reshape(a.dims + a.dims).transpose(axes)
    new_dims = tuple(a.dims[k] for k in perm)
    side = prod(new_dims)
    return TensoredHermitian(np.ascontiguousarray(tensor).reshape(side, side), new_dims)


def move_subsystem_front(a: TensoredHermitian, subsystem: int) -> TensoredHermitian:
    """Permute subsystems so the given one comes first."""
    if not 0 <= subsystem < len(a.dims):
        raise IndexError(f"subsystem {subsystem} out of range for dims {a.dims}")
    if subsystem == 0:
        return a
    perm = [subsystem] + [k for k in range(len(a.dims)) if k != subsystem]
    return permute_subsystems(a, perm)


def swap_bipartite(mat: np.ndarray, d_first: int, d_second: int) -> np.ndarray:
    """Exchange the two factors of a bipartite operator (plain array helper)."""
    t = mat.reshape(d_first, d_second, d_first, d_second)
    return np.ascontiguousarray(t.transpose(1, 0, 3, 2).reshape(mat.shape))


def herm_eig(a: TensoredHermitian) -> EigDecomposition:
    """Eigendecomposition with eigenvalues sorted descending."""
    w, v = np.linalg.eigh(a.mat)
    return EigDecomposition(np.ascontiguousarray(w[::-1]), np.ascontiguousarray(v[:, ::-1]))


def matrix_exp(a: TensoredHermitian) -> TensoredHermitian:
    """exp(a) through the eigendecomposition; the result is PSD."""
    eig = herm_eig(a)
    v = eig.eigenvectors
    out = (v * np.exp(eig.eigenvalues)) @ v.conj().T
    return TensoredHermitian((out + out.conj().T) / 2, a.dims)


def positive_projection(a: TensoredHermitian) -> tuple[TensoredHermitian, float]:
    """Projector onto the positive eigenspace and the positive trace.

    Eigenvalues below tau = 1e-12 * max(1, |a|_inf) are excluded from the
    projector (they contribute nothing to the payoff the projector is the
    best response for); the positive trace sums max(0, eigenvalue).
    """
    eig = herm_eig(a)
    w, v = eig.eigenvalues, eig.eigenvectors
    tau = 1e-12 * max(1.0, float(np.abs(w).max()) if w.size else 0.0)
    keep = w > tau
    cols = v[:, keep]
    proj = cols @ cols.conj().T
    proj = (proj + proj.conj().T) / 2
    positive_trace = float(np.sum(w[w > 0.0]))
    return TensoredHermitian(proj, a.dims), positive_trace


def trace_norm(a: TensoredHermitian) -> float:
    """Sum of absolute eigenvalues."""
    return float(np.abs(np.linalg.eigvalsh(a.mat)).sum())


def spectral_norm(a: TensoredHermitian) -> float:
    """Largest absolute eigenvalue."""
    w = np.linalg.eigvalsh(a.mat)
    return float(np.abs(w).max()) if w.size else 0.0
