"""Eigenvalues of d/dx L+, the instability index count and the stability verdict."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree

from .linearized import (assemble_lplus, dprime, kernel_residual, morse_index,
                         projected_min_eigenvalue)
from .spectral import derivative


class Verdict(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True, eq=False)
class UnstableMode:
    eigenvalue: complex
    vector: np.ndarray
    phi_overlap: float


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    max_real_part: float  # over eigenvalues outside the translation block
    unstable_real: list
    unstable_complex_pairs: int
    threshold: float
    symmetry_defect: float
    null_alignment: float
    modes: list = field(default_factory=list)
    translation_block: list = field(default_factory=list)

    def as_dict(self):
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "max_real_part": self.max_real_part,
            "unstable_real": [float(z) for z in self.unstable_real],
            "unstable_complex_pairs": self.unstable_complex_pairs,
            "threshold": self.threshold,
            "symmetry_defect": self.symmetry_defect,
            "null_alignment": self.null_alignment,
            "unstable_phi_overlap": [m.phi_overlap for m in self.modes],
            "translation_block": [[float(z.real), float(z.imag)] for z in self.translation_block],
        }


def derivative_matrix(grid):
    """Circulant matrix of the spectral d/dx, with the Nyquist mode removed."""
    n = grid.n
    mult = 1j * grid.rmodes
    mult[-1] = 0.0
    col = np.fft.irfft(mult * np.fft.rfft(np.eye(n, 1)[:, 0]), n=n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return col[idx]


def symmetry_defect(eigs, floor):
    """Worst relative distance from an eigenvalue z to the nearest of -conj(z), conj(z)."""
    eigs = np.asarray(eigs)
    tree = cKDTree(np.column_stack([eigs.real, eigs.imag]))
    worst = 0.0
    for mirror in ((-1.0, 1.0), (1.0, -1.0)):
        gap, _ = tree.query(np.column_stack([mirror[0] * eigs.real, mirror[1] * eigs.imag]))
        worst = max(worst, float(np.max(gap / np.maximum(np.abs(eigs), floor))))
    return worst


def generalized_kernel_basis(w, ground=None):
    """Orthonormal basis of span{phi', L+^-1 phi}, the translation Jordan block."""
    ground = morse_index(assemble_lplus(w)) if ground is None else ground
    lam, vec = ground.eigenvalues, ground.eigenvectors
    ker = np.abs(lam) < ground.kernel_tol
    coef = vec.T @ w.phi.values
    coef[ker] = 0.0
    y = vec @ (coef / np.where(ker, 1.0, lam))
    basis, _ = np.linalg.qr(np.column_stack([derivative(w.phi.values, w.grid), y]))
    return basis


def _distance_to_span(v, basis):
    proj = basis @ (basis.T @ v.real) + 1j * (basis @ (basis.T @ v.imag))
    return float(np.linalg.norm(v - proj) / np.linalg.norm(v))


def _inverse_iteration(M, shift, iters=6, seed=0):
    n = M.shape[0]
    lu = linalg.lu_factor(M - shift * np.eye(n), check_finite=False)
    v = np.random.default_rng(seed).standard_normal(n).astype(complex if np.iscomplexobj(shift) else float)
    for _ in range(iters):
        v = linalg.lu_solve(lu, v, check_finite=False)
        v /= np.linalg.norm(v)
    return v


def kdv_matrix(w, A=None):
    A = assemble_lplus(w) if A is None else A
    return derivative_matrix(w.grid) @ A.matrix, A


def _null_subspace(M, shift, k=4, iters=8, seed=0):
    """Orthonormal basis of the invariant subspace for the k eigenvalues nearest ``shift``."""
    lu = linalg.lu_factor(M - shift * np.eye(M.shape[0]), check_finite=False)
    X = np.random.default_rng(seed).standard_normal((M.shape[0], k))
    for _ in range(iters):
        X, _ = np.linalg.qr(linalg.lu_solve(lu, X, check_finite=False))
    return X


def kdv_spectrum(w, threshold=None, A=None, lplus_scale=None, vectors=True, ground=None,
                 block_tol=1e-2):
    """Spectrum of the discretized d/dx L+ with instability bookkeeping.

    ``threshold`` defaults to 1e-6 times the largest |eigenvalue| of L+.
    Eigenvalues above the threshold whose eigenvectors lie within ``block_tol``
    of span{phi', L+^-1 phi} come from the translation Jordan block at zero,
    split by quadrature error, and are reported apart from unstable modes.
    """
    M, A = kdv_matrix(w, A)
    if threshold is None or ground is None:
        ground = morse_index(A) if ground is None else ground
    if threshold is None:
        if lplus_scale is None:
            lplus_scale = float(np.max(np.abs(ground.eigenvalues)))
        threshold = 1e-6 * lplus_scale
    try:
        eigs = linalg.eigvals(M, check_finite=False)
    except linalg.LinAlgError as err:
        raise RuntimeError(f"nonsymmetric eigensolver failed: {err}") from err
    eigs = eigs[np.argsort(-eigs.real, kind="stable")]
    defect = symmetry_defect(eigs, threshold)

    phi = w.phi.values
    basis = generalized_kernel_basis(w, ground)
    candidates = eigs[(eigs.real > threshold) & (eigs.imag >= -threshold)]
    modes, block = [], []
    for z in candidates:
        lam = z.real if abs(z.imag) < threshold else z
        v = _inverse_iteration(M, lam + 1e-10 * abs(z))
        if _distance_to_span(v, basis) < block_tol:
            block.append(complex(z))
            continue
        overlap = abs(np.vdot(v, phi)) / (np.linalg.norm(v) * np.linalg.norm(phi))
        modes.append(UnstableMode(complex(z), v if vectors else None, float(overlap)))
    unstable_real = sorted(m.eigenvalue.real for m in modes if abs(m.eigenvalue.imag) < threshold)
    complex_pairs = sum(1 for m in modes if abs(m.eigenvalue.imag) >= threshold)
    blocked = np.isin(eigs, block) | np.isin(eigs, -np.conj(block))
    rest = eigs[~blocked]
    max_re = float(rest.real.max()) if rest.size else 0.0

    d1 = derivative(phi, w.grid)
    X = _null_subspace(M, 1e-9 * float(np.max(np.abs(eigs))))
    nd = np.linalg.norm(d1)
    null_alignment = float(np.linalg.norm(X.T @ d1) / nd) if nd > 0 else 0.0
    return SpectrumReport(eigs, max_re, unstable_real, complex_pairs, float(threshold),
                          defect, null_alignment, modes, block)


@dataclass(frozen=True)
class IndexReport:
    n_lplus: int
    n_d: int
    rhs: int
    k_r_observed: int
    verdict: Verdict
    dprime: float
    reason: str = ""

    def as_dict(self):
        return {"n_lplus": self.n_lplus, "n_d": self.n_d, "rhs": self.rhs,
                "k_r_observed": self.k_r_observed, "verdict": self.verdict.value,
                "dprime": self.dprime, "reason": self.reason}


def index_count(w, ground=None, spectrum=None, dp=None, A=None):
    """Bookkeeping of k_r + 2 k_c + 2 k_i^- = n(L+) - n(D) with D = <L+^-1 phi, phi>.

    The count decides instability; stability with rhs = 1 is decided by
    nonnegativity of L+ on phi-perp together with a clean spectrum.
    """
    A = assemble_lplus(w) if A is None else A
    ground = morse_index(A) if ground is None else ground
    if dp is None:
        dp = dprime(w, report=ground)
    if spectrum is None:
        spectrum = kdv_spectrum(w, A=A, ground=ground)
    k_r = len(spectrum.unstable_real)
    n_l = ground.morse_index
    if abs(dp) < 1e-8 * w.phi.norm() ** 2:
        return IndexReport(n_l, 0, n_l, k_r, Verdict.INDETERMINATE, dp,
                           "<L+^-1 phi, phi> vanishes; the generalized kernel is enlarged")
    n_d = 1 if dp > 0 else 0
    rhs = n_l - n_d
    clean = spectrum.max_real_part < spectrum.threshold
    scale = float(np.max(np.abs(ground.eigenvalues)))
    if k_r >= 1:
        verdict, reason = Verdict.UNSTABLE, "real unstable eigenvalue found"
    elif rhs == 0 and clean:
        verdict, reason = Verdict.STABLE, "index count vanishes and no unstable eigenvalue"
    elif clean and projected_min_eigenvalue(A, w) >= -1e-8 * scale:
        verdict, reason = Verdict.STABLE, "L+ nonnegative on phi-perp and no unstable eigenvalue"
    else:
        verdict, reason = Verdict.INDETERMINATE, "index count leaves room for instability"
    return IndexReport(n_l, n_d, rhs, k_r, verdict, dp, reason)


@dataclass(frozen=True, eq=False)
class StabilityVerdict:
    verdict: Verdict
    evidence: dict


def verdict(w, ground=None, spectrum=None, A=None, evolution=None):
    """Stable when L+ is nonnegative on phi-perp and no eigenvalue leaves the
    imaginary axis; Unstable when a real positive eigenvalue exists."""
    A = assemble_lplus(w) if A is None else A
    ground = morse_index(A) if ground is None else ground
    scale = float(np.max(np.abs(ground.eigenvalues)))
    spectrum = kdv_spectrum(w, A=A, ground=ground) if spectrum is None else spectrum
    proj = projected_min_eigenvalue(A, w)
    kres = kernel_residual(w)
    try:
        dp = dprime(w, report=ground)
    except ValueError:
        dp = float("nan")
    positive = proj >= -1e-8 * scale
    evidence = {
        "omega": w.params.omega, "p": w.params.p,
        "morse_index": ground.morse_index, "kernel_dim": ground.kernel_dim_estimate,
        "kernel_residual": kres, "projected_min_eigenvalue": proj,
        "projected_positive": bool(positive), "dprime": dp,
        "max_real_part": spectrum.max_real_part, "threshold": spectrum.threshold,
        "unstable_real": spectrum.unstable_real,
        "unstable_complex_pairs": spectrum.unstable_complex_pairs,
    }
    if evolution is not None:
        evidence["evolution"] = evolution
    if spectrum.unstable_real:
        return StabilityVerdict(Verdict.UNSTABLE, evidence)
    if positive and spectrum.max_real_part < spectrum.threshold:
        return StabilityVerdict(Verdict.STABLE, evidence)
    return StabilityVerdict(Verdict.INDETERMINATE, evidence)
