"""The linearized operator L+ = (D-1)^2 + omega - (p-1)|phi|^(p-2) about a wave.

L+ is discretized on the same Galerkin space as the profile equation: the
potential term is applied by interpolating to the fine grid, multiplying and
projecting back.  On the Nyquist mode, which the nonlinear terms never see,
L+ acts by its symbol alone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .functionals import WaveParams, lp_power, shifted_symbol
from .spectral import Field, derivative, from_fine, to_fine


class IllPosed(ValueError):
    """Right-hand side not orthogonal to the numerical kernel."""


def potential(phi_values, grid, p):
    """Fine-grid samples of (p-1)|phi|^(p-2) together with the fine factor."""
    m = grid.quadrature_factor(p)
    return (p - 1.0) * np.abs(to_fine(phi_values, m)) ** (p - 2.0), m


def apply_lplus(phi, params, v):
    """Matrix-free action of L+ on a sample vector (or Field) ``v``."""
    g = phi.grid
    vals = v.values if isinstance(v, Field) else np.asarray(v, dtype=float)
    pot, m = potential(phi.values, g, params.p)
    sym = shifted_symbol(g) + params.omega
    out = np.fft.irfft(sym * np.fft.rfft(vals), n=g.n) - from_fine(pot * to_fine(vals, m), g.n, m)
    return Field(g, out) if isinstance(v, Field) else out


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    matrix: np.ndarray
    params: WaveParams
    profile: object

    @property
    def size(self):
        return self.matrix.shape[0]

    def apply(self, v):
        return self.matrix @ np.asarray(v)


def _physical(T):
    """Map a Fourier-space matrix (natural FFT order) to physical samples."""
    return np.real(np.fft.ifft(np.fft.fft(T.T, axis=0).T, axis=0))


def assemble_lplus(w):
    """Dense symmetric matrix of L+ acting on point samples."""
    g = w.grid
    n = g.n
    p = w.params.p
    pot, m = potential(w.phi.values, g, p)
    vhat = np.fft.fft(pot) / (m * n)
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    T = -vhat[(k[:, None] - k[None, :]) % (m * n)]
    nyq = n // 2
    T[nyq, :] = 0.0
    T[:, nyq] = 0.0
    T[np.diag_indices(n)] += (np.abs(g.modes) - 1.0) ** 2 + w.params.omega
    a = _physical(T)
    return OperatorMatrix(0.5 * (a + a.T), w.params, w)


def kernel_residual(w):
    """``||L+ phi'|| / ||phi'||``; vanishes for exact waves by translation invariance."""
    d1 = derivative(w.phi.values, w.grid)
    nrm = np.linalg.norm(d1)
    if nrm == 0:
        raise ValueError("profile has zero derivative")
    return float(np.linalg.norm(apply_lplus(w.phi, w.params, d1)) / nrm)


@dataclass(frozen=True, eq=False)
class GroundStateReport:
    mu: float
    psi0: Field
    morse_index: int
    kernel_dim_estimate: int
    kernel_tol: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def kernel_vectors(self):
        return self.eigenvectors[:, np.abs(self.eigenvalues) < self.kernel_tol]


def default_kernel_tol(eigenvalues):
    return 1e-6 * float(np.max(np.abs(eigenvalues)))


def morse_index(A, kernel_tol=None):
    """Full symmetric eigendecomposition with negative and kernel counts."""
    try:
        lam, vec = linalg.eigh(A.matrix)
    except linalg.LinAlgError as err:
        raise RuntimeError(f"symmetric eigensolver failed: {err}") from err
    tol = default_kernel_tol(lam) if kernel_tol is None else kernel_tol
    g = A.profile.grid
    psi0 = Field(g, vec[:, 0] / np.sqrt(g.dx))
    return GroundStateReport(float(lam[0]), psi0, int(np.sum(lam < -tol)),
                             int(np.sum(np.abs(lam) < tol)), tol, lam, vec)


def kernel_alignment(report, w):
    """Cosine between phi' and its projection on the numerical kernel."""
    d1 = derivative(w.phi.values, w.grid)
    ker = report.kernel_vectors
    if ker.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(ker.T @ d1) / np.linalg.norm(d1))


def projected_min_eigenvalue(A, w):
    """Smallest eigenvalue of L+ restricted to the L2-orthogonal complement of phi."""
    phi = w.phi.values
    v = phi / np.linalg.norm(phi)
    e = np.zeros_like(v)
    e[0] = 1.0
    h = v - e if v[0] <= 0 else v + e
    h /= np.linalg.norm(h)
    # Householder reflector H maps phi to a multiple of e0; drop that row/column.
    M = A.matrix
    Mh = M - 2.0 * np.outer(M @ h, h)
    HMH = Mh - 2.0 * np.outer(h, h @ Mh)
    return float(linalg.eigvalsh(HMH[1:, 1:], subset_by_index=[0, 0])[0])


def dprime(w, kernel_tol=None, report=None, rhs=None):
    """``<L+^-1 phi, phi>`` with the numerical kernel deflated.

    ``rhs`` replaces phi as the right-hand side when given.
    """
    if report is None:
        report = morse_index(assemble_lplus(w), kernel_tol)
    g = w.grid
    f = w.phi.values if rhs is None else (rhs.values if isinstance(rhs, Field) else rhs)
    lam, vec = report.eigenvalues, report.eigenvectors
    ker = np.abs(lam) < report.kernel_tol
    coef = vec.T @ f
    overlap = np.linalg.norm(coef[ker]) / np.linalg.norm(f)
    if overlap > 1e-6:
        raise IllPosed(f"right-hand side overlaps the kernel ({overlap:.2e} relative)")
    keep = ~ker
    return float(np.sum(coef[keep] ** 2 / lam[keep]) * g.dx)


@dataclass(frozen=True)
class EtaTestResult:
    numeric: float
    closed_form: float
    lplus_eta_residual: float
    orthogonality: float
    truncation_limited: bool

    @property
    def relative_gap(self):
        return abs(self.numeric - self.closed_form) / abs(self.closed_form)


def eta_vector(w):
    """``x phi' + phi/2`` with x the sawtooth coordinate centred on the peak."""
    g = w.grid
    phi = w.phi.values
    return np.asarray(g.x) * derivative(phi, g) + 0.5 * phi


def eta_test(w):
    """Quadratic form of L+ on the dilation direction, with its closed form."""
    g = w.grid
    p, omega = w.params.p, w.params.omega
    phi = w.phi.values
    eta = eta_vector(w)
    le = apply_lplus(w.phi, w.params, eta)
    numeric = float(np.dot(le, eta) * g.dx)
    l2 = float(np.dot(phi, phi) * g.dx)
    lp = lp_power(phi, g, p)
    closed = (omega + 1.0) * l2 - (p / 4.0 + 4.0 / p - 1.5) * lp
    xi = g.rmodes
    rhs = ((p - 6.0) / 2.0 * derivative(phi, g, 2)
           + (p - 4.0) * np.fft.irfft(xi * np.fft.rfft(phi), n=g.n)
           - (p - 2.0) * (omega + 1.0) / 2.0 * phi)
    resid = float(np.linalg.norm(le - rhs) / np.linalg.norm(le))
    orth = abs(np.dot(eta, phi)) / (np.linalg.norm(eta) * np.linalg.norm(phi))
    xd = np.abs(np.asarray(g.x) * derivative(phi, g))
    edge = max(xd[0], xd[1], xd[-1])
    return EtaTestResult(numeric, float(closed), resid, float(orth),
                         bool(edge > 1e-6 * np.max(np.abs(phi))))


def quadratic_identity_gap(w):
    """Relative gap in ``<L+ phi, phi> = (2-p) int |phi|^p``."""
    phi = w.phi.values
    g = w.grid
    lhs = float(np.dot(apply_lplus(w.phi, w.params, phi), phi) * g.dx)
    rhs = (2.0 - w.params.p) * lp_power(phi, g, w.params.p)
    return abs(lhs - rhs) / abs(rhs)
