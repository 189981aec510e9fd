"""Density-operator utilities: fidelity, matched purifications, channel test.

The matched-purification construction is the workhorse that turns
approximately feasible solver outputs into exactly feasible ones: given
states rho1, rho2 on the kept factor and an extension sigma1 of rho1, it
produces an extension sigma2 of rho2 with F(sigma1, sigma2) = F(rho1, rho2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .tensorops import (
    TensoredHermitian,
    move_subsystem_front,
    partial_trace,
    permute_subsystems,
    trace_norm,
)

PSEUDO_INVERSE_CUTOFF = 1e-10
PURITY_TOL = 1e-8


@dataclass(frozen=True)
class DensityOperator:
    """PSD, unit-trace Hermitian operator.

    Construction clamps eigenvalues below zero (tolerating -1e-10 of
    numerical drift) and renormalizes the trace.
    """

    op: TensoredHermitian = field(repr=False)

    def __init__(self, entries, dims=None):
        if isinstance(entries, TensoredHermitian):
            herm = entries if dims is None else entries.with_dims(dims)
        else:
            herm = TensoredHermitian(entries, dims)
        w, v = np.linalg.eigh(herm.mat)
        if w.min(initial=0.0) < -1e-6:
            raise ValueError(f"not positive semidefinite (min eigenvalue {w.min():.3e})")
        w = np.maximum(w, 0.0)
        total = float(w.sum())
        if total <= 1e-12:
            raise ValueError("state has (numerically) zero trace")
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"trace {total:.8f} is not 1")
        mat = (v * (w / total)) @ v.conj().T
        object.__setattr__(self, "op", TensoredHermitian(mat, herm.dims))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.op.dims

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim


@dataclass(frozen=True)
class PureState:
    """A unit vector with subsystem structure."""

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, amplitudes, dims=None):
        vec = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"state vector norm {norm:.8f} is not 1")
        vec = vec / norm
        vec.setflags(write=False)
        if dims is None:
            dims = (vec.size,)
        dims = tuple(int(d) for d in dims)
        if prod(dims) != vec.size:
            raise ValueError(f"vector length {vec.size} != product of dims {dims}")
        object.__setattr__(self, "amplitudes", vec)
        object.__setattr__(self, "dims", dims)

    def density(self) -> DensityOperator:
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.dims)


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(mat)
    w = np.maximum(w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(p: DensityOperator, q: DensityOperator) -> float:
    """F(P, Q) = trace norm of sqrt(P) sqrt(Q)."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    prod_mat = _psd_sqrt(p.mat) @ _psd_sqrt(q.mat)
    return float(np.linalg.svd(prod_mat, compute_uv=False).sum())


def pseudo_inverse_sqrt(p: DensityOperator) -> TensoredHermitian:
    """Moore-Penrose inverse of sqrt(p); kernel directions map to zero.

    Eigenvalues of p below cutoff^... relative cutoff 1e-10 of the largest
    are treated as zero, since the purification recipe divides by sqrt(p)
    and rank deficiency is generic there.
    """
    w, v = np.linalg.eigh(p.mat)
    wmax = float(w.max(initial=0.0))
    inv = np.where(w > PSEUDO_INVERSE_CUTOFF * max(wmax, 1e-300), 1.0 / np.sqrt(np.maximum(w, 1e-300)), 0.0)
    return TensoredHermitian((v * inv) @ v.conj().T, p.dims)


def channel_exists(rho1: DensityOperator, rho2: DensityOperator, subsystem: int) -> bool:
    """Whether a channel acting on `subsystem` alone maps rho1 to rho2.

    Requires rho1 pure; the criterion is equality of the complementary
    marginals (trace distance at most 1e-8 in practice).
    """
    if rho1.dims != rho2.dims:
        raise ValueError(f"dimension mismatch: {rho1.dims} vs {rho2.dims}")
    w = np.linalg.eigvalsh(rho1.mat)
    if w[:-1].max(initial=0.0) > PURITY_TOL:
        raise ValueError("rho1 must be pure (rank one)")
    residue1 = partial_trace(rho1.op, subsystem)
    residue2 = partial_trace(rho2.op, subsystem)
    return trace_norm(residue1 - residue2) <= 1e-8


def _polar_unitary(sqrt1: np.ndarray, sqrt2: np.ndarray) -> np.ndarray:
    """Unitary V making sqrt1 @ sqrt2 @ V positive semidefinite.

    Obtained from the singular value decomposition sqrt1 sqrt2 = W S Z*;
    then V = Z W* and sqrt1 sqrt2 V = W S W*.  tr(sqrt1 sqrt2 V) is the
    fidelity of the underlying states.
    """
    w_mat, _s, zh = np.linalg.svd(sqrt1 @ sqrt2)
    return zh.conj().T @ w_mat.conj().T


def _complete_isometry(u: np.ndarray) -> np.ndarray:
    """Extend a partial isometry (tall matrix, u*u = projector) to a full one.

    Uses the unitary polar factor from the full SVD; columns acting on the
    kernel are replaced by fresh orthonormal directions.
    """
    rows, cols = u.shape
    w_mat, _s, zh = np.linalg.svd(u, full_matrices=True)
    return w_mat[:, :cols] @ zh


def matched_purification(
    rho1: DensityOperator,
    rho2: DensityOperator,
    sigma1: DensityOperator,
    traced_subsystem: int,
) -> DensityOperator:
    """Extension sigma2 of rho2 with F(sigma1, sigma2) = F(rho1, rho2).

    rho1 and rho2 live on the space of sigma1 with `traced_subsystem`
    removed, and tracing that subsystem out of sigma1 must give rho1.
    The construction follows the explicit purification recipe: build the
    phase-correcting unitary V from the polar decomposition of
    sqrt(rho2) sqrt(rho1), recover the isometry U with
    vec(sqrt(rho1) U*) = vec(sqrt(sigma1)), and trace the environment out
    of the pure state vec(sqrt(rho2) V U*).

    The environment has dimension dim(kept) * dim(traced); vec is realized
    as the row-major ndarray reshape.
    """
    sig = move_subsystem_front(sigma1.op, traced_subsystem)
    n_sub = len(sig.dims)
    d_traced = sig.dims[0]
    d_kept = prod(sig.dims[1:])

    marg = _ptrace_first(sig.mat, d_traced, d_kept)
    if rho1.dim != d_kept or rho2.dim != d_kept:
        raise ValueError(
            f"rho1/rho2 must have dim {d_kept}, got {rho1.dim}/{rho2.dim}"
        )
    if np.abs(marg - rho1.mat).max() > 1e-8:
        raise ValueError("tracing the subsystem out of sigma1 does not give rho1")

    sqrt1 = _psd_sqrt(rho1.mat)
    sqrt2 = _psd_sqrt(rho2.mat)
    v_unit = _polar_unitary(sqrt1, sqrt2)

    # sigma1 reordered as (kept, traced); its square root, reshaped with the
    # environment index absorbed, is X with vec(X) purifying sigma1
    sig_kt = np.ascontiguousarray(
        sig.mat.reshape(d_traced, d_kept, d_traced, d_kept).transpose(1, 0, 3, 2)
    ).reshape(sig.dim, sig.dim)
    x_mat = _psd_sqrt(sig_kt).reshape(d_kept, d_traced * sig.dim)

    pinv_sqrt1 = pseudo_inverse_sqrt(rho1).mat
    u_part = x_mat.conj().T @ pinv_sqrt1  # maps kept space into traced x env
    u_iso = _complete_isometry(u_part)

    ket2 = (sqrt2 @ v_unit @ u_iso.conj().T).reshape(d_kept * d_traced, sig.dim)
    sigma2_kt = ket2 @ ket2.conj().T  # environment traced out; PSD by form

    # back to (traced, kept) then to the original subsystem order
    out = np.ascontiguousarray(
        sigma2_kt.reshape(d_kept, d_traced, d_kept, d_traced).transpose(1, 0, 3, 2)
    ).reshape(sig.dim, sig.dim)
    herm = TensoredHermitian((out + out.conj().T) / 2, sig.dims)
    if traced_subsystem != 0:
        # undo the move-to-front permutation
        inv_pos = list(range(1, n_sub))
        inv_pos.insert(traced_subsystem, 0)
        herm = permute_subsystems(herm, inv_pos)
    return DensityOperator(herm)


def _ptrace_first(mat: np.ndarray, d_first: int, d_rest: int) -> np.ndarray:
    return mat.reshape(d_first, d_rest, d_first, d_rest).trace(axis1=0, axis2=2)
