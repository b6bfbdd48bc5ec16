"""Functional calculus on dense finite-dimensional surrogate operators.

Handles are immutable dense complex matrices with a validated spectral
factorization.  Matrix functions go through the eigendecomposition when the
eigenvector basis is well conditioned and fall back to the Schur form
otherwise.  All operations are pure functions and safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import tolerances as tol
from .errors import (
    DimensionMismatch,
    FactorizationFailure,
    NearSpectrum,
    NonFinite,
    SampleOnSpectrum,
    SingularOrIllConditioned,
    SpectrumOnCut,
)

__all__ = [
    "OperatorHandle",
    "SectorProbe",
    "make_operator",
    "dirichlet_laplacian_modes",
    "sqrt_principal",
    "expm_apply",
    "resolvent_apply",
    "guarded_inverse_I_minus",
    "sector_angle_probe",
    "operator_norm",
    "sector_half_angle",
]


@dataclass(frozen=True)
class OperatorHandle:
    """Immutable dense operator with cached factorization data.

    ``eigvecs``/``eigvecs_inv`` are None when the eigenvector basis is too
    ill conditioned to trust; matrix functions then use the Schur form.
    """

    matrix: np.ndarray
    spectrum: np.ndarray
    label: str = ""
    eigvecs: np.ndarray | None = None
    eigvecs_inv: np.ndarray | None = None
    eig_cond: float = np.inf
    _schur_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def diagonalizable(self) -> bool:
        return self.eigvecs is not None

    def schur(self):
        """Complex Schur form (T, Q), computed once and cached."""
        if "TQ" not in self._schur_cache:
            T, Q = sla.schur(self.matrix, output="complex")
            nrm = max(np.linalg.norm(self.matrix), 1.0)
            res = np.linalg.norm(Q @ T @ Q.conj().T - self.matrix) / nrm
            if res > 100 * tol.FACTOR_RESIDUAL:
                raise FactorizationFailure(
                    f"Schur residual {res:.3e} for {self.label or 'operator'}"
                )
            self._schur_cache["TQ"] = (T, Q)
        return self._schur_cache["TQ"]

    def apply_scalar_function(self, fn, label: str = "") -> "OperatorHandle":
        """Return fn(A) as a new handle; fn maps complex arrays to arrays."""
        if self.diagonalizable:
            F = (self.eigvecs * fn(self.spectrum)) @ self.eigvecs_inv
        else:
            F = sla.funm(self.matrix, fn)
        return make_operator(F, label=label or f"f({self.label})")

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))


def make_operator(matrix, label: str = "") -> OperatorHandle:
    """Wrap a square complex matrix, validating its factorization.

    Raises NonFinite for NaN/Inf entries and FactorizationFailure when the
    eigenpair backward errors exceed tolerance.
    """
    A = np.asarray(matrix, dtype=complex)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A.real)) or not np.all(np.isfinite(A.imag)):
        raise NonFinite("matrix has non-finite entries")
    A = A.copy()
    A.setflags(write=False)

    w, V = np.linalg.eig(A)
    scale = max(np.linalg.norm(A, 2), 1.0)
    # per-eigenpair backward error ||Av - wv|| <= tol * ||A||
    res = np.linalg.norm(A @ V - V * w, axis=0) / np.linalg.norm(V, axis=0)
    if np.max(res) > 1e3 * tol.FACTOR_RESIDUAL * scale:
        raise FactorizationFailure(
            f"eigenpair residual {np.max(res):.3e} exceeds tolerance"
        )
    cond = np.linalg.cond(V)
    if cond <= tol.EIG_COND_CAP:
        Vinv = np.linalg.inv(V)
        V.setflags(write=False)
        Vinv.setflags(write=False)
        return OperatorHandle(A, w, label, V, Vinv, float(cond))
    return OperatorHandle(A, w, label, None, None, float(cond))


def dirichlet_laplacian_modes(n_modes: int) -> OperatorHandle:
    """Diagonal surrogate of the Dirichlet Laplacian on (0, pi).

    Modes are the sine eigenfunctions, so the operator is diag(-1, -4, ...,
    -n^2); its negative is positive definite with sector half-angle 0.
    """
    if n_modes < 1:
        raise DimensionMismatch("n_modes must be >= 1")
    d = -np.arange(1, n_modes + 1, dtype=float) ** 2
    return make_operator(np.diag(d.astype(complex)), label=f"laplacian[{n_modes}]")


def sqrt_principal(T: OperatorHandle) -> OperatorHandle:
    """Principal matrix square root: spectrum in the open right half-plane.

    Rejects operators with an eigenvalue within tolerance of the cut
    (-inf, 0].
    """
    scale = max(np.max(np.abs(T.spectrum)), 1.0)
    on_cut = (T.spectrum.real <= tol.FACTOR_RESIDUAL * scale) & (
        np.abs(T.spectrum.imag) <= 1e3 * tol.FACTOR_RESIDUAL * scale
    )
    if np.any(on_cut):
        bad = T.spectrum[on_cut]
        raise SpectrumOnCut(f"eigenvalue(s) {bad} on the branch cut")
    if T.diagonalizable:
        S = (T.eigvecs * np.sqrt(T.spectrum)) @ T.eigvecs_inv
    else:
        S = sla.sqrtm(np.asarray(T.matrix))
    out = make_operator(S, label=f"sqrt({T.label})")
    res = np.linalg.norm(out.matrix @ out.matrix - T.matrix) / max(
        np.linalg.norm(T.matrix), 1.0
    )
    if res > 1e3 * tol.FACTOR_RESIDUAL:
        raise FactorizationFailure(f"square-root residual {res:.3e}")
    return out


def expm_apply(T: OperatorHandle, t: float, v: np.ndarray) -> np.ndarray:
    """Evaluate e^{tT} v for t >= 0; t = 0 returns v exactly."""
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != T.dim:
        raise DimensionMismatch(f"vector length {v.shape[0]} != dim {T.dim}")
    if t < 0:
        raise ValueError("t must be >= 0 (forward semigroup only)")
    if t == 0:
        return v.copy()
    if T.diagonalizable:
        y = T.eigvecs_inv @ v.reshape(T.dim, -1)
        y = np.exp(t * T.spectrum)[:, None] * y
        return (T.eigvecs @ y).reshape(v.shape)
    return sla.expm(t * np.asarray(T.matrix)) @ v


def resolvent_apply(T: OperatorHandle, lam: complex, v: np.ndarray) -> np.ndarray:
    """Solve (lam I - T) x = v with a conditioning guard.

    Raises NearSpectrum when the shifted matrix condition estimate exceeds
    the cap, and checks the back-substituted residual.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape[0] != T.dim:
        raise DimensionMismatch(f"vector length {v.shape[0]} != dim {T.dim}")
    A = lam * np.eye(T.dim) - T.matrix
    # scaled condition estimate: stays meaningful even at dim 1, where the
    # raw matrix condition number is identically one
    smin = np.linalg.svd(A, compute_uv=False)[-1]
    cond = (abs(lam) + T.norm()) / smin if smin > 0 else np.inf
    if not np.isfinite(cond) or cond > tol.CONDITION_CAP:
        raise NearSpectrum(f"shift {lam} too close to spectrum (cond {cond:.3e})")
    x = np.linalg.solve(A, v)
    res = np.linalg.norm(A @ x - v)
    bound = tol.FACTOR_RESIDUAL * (abs(lam) + T.norm()) * max(np.linalg.norm(x), 1e-300)
    if res > max(bound, 1e4 * tol.FACTOR_RESIDUAL * np.linalg.norm(v)):
        raise NearSpectrum(f"resolvent residual {res:.3e} above bound {bound:.3e}")
    return x


def guarded_inverse_I_minus(T: OperatorHandle) -> OperatorHandle:
    """Return (I - T)^{-1}, refusing ill-conditioned inversions.

    The returned handle's label records whether ||T|| < 1, i.e. whether the
    inverse is in the Neumann-series-safe regime.
    """
    A = np.eye(T.dim) - T.matrix
    try:
        inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SingularOrIllConditioned(f"I - {T.label or 'T'} is singular") from exc
    # scaled condition estimate (valid at dim 1): size of the inverse against
    # the natural scale of I - T
    cond = (1.0 + T.norm()) * np.linalg.norm(inv, 2)
    if not np.isfinite(cond) or cond > tol.CONDITION_CAP:
        raise SingularOrIllConditioned(
            f"I - {T.label or 'T'} has condition estimate {cond:.3e}"
        )
    res = np.linalg.norm(A @ inv - np.eye(T.dim))
    if res > tol.FACTOR_RESIDUAL * max(cond, 1.0) * 1e3:
        raise SingularOrIllConditioned(f"inverse residual {res:.3e}")
    regime = "contractive" if T.norm() < 1.0 else "non-contractive"
    return make_operator(inv, label=f"(I-{T.label})^-1[{regime}]")


def operator_norm(M: np.ndarray, weights: np.ndarray | None = None) -> float:
    """Weighted-l2 induced norm: largest singular value of D^{1/2} M D^{-1/2}.

    D = diag(weights); unit weights give the plain spectral norm.  This is
    the package-wide surrogate for operator norms on function spaces.
    """
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M.real)) or not np.all(np.isfinite(M.imag)):
        raise NonFinite("matrix has non-finite entries")
    if weights is None:
        return float(np.linalg.norm(M, 2))
    w = np.asarray(weights, dtype=float)
    if w.shape[0] != M.shape[0] or np.any(w <= 0):
        raise DimensionMismatch("weights must be positive and match the matrix")
    d = np.sqrt(w)
    return float(np.linalg.norm((d[:, None] * M) / d[None, :], 2))


@dataclass(frozen=True)
class SectorProbe:
    """Result of sampling ||lam (lam I - T)^{-1}|| outside a shifted sector."""

    angle_alpha: float
    shift: complex
    ray_samples: tuple  # of (lam, norm) pairs
    sup_bound: float
    blow_up: bool


def _outside_closed_sector(z: complex, alpha: float) -> bool:
    """True when z lies outside the closed sector S̄_alpha (arg in (-pi, pi])."""
    if z == 0:
        return False
    if alpha == 0.0:
        return not (z.imag == 0.0 and z.real > 0.0)
    return abs(np.angle(z)) > alpha


def sector_angle_probe(
    T: OperatorHandle,
    alpha: float,
    shift: complex = 0.0,
    radii=None,
    angles=None,
    weights: np.ndarray | None = None,
) -> SectorProbe:
    """Sample the sectoriality bound of T about the vertex ``shift``.

    The claim being probed is sigma(T) subset shift + S̄_alpha together with
    a finite sup of ||lam (lam I - (T - shift I))^{-1}|| over lam outside the
    closed sector.  Samples lam = rho e^{i phi} must satisfy |phi| > alpha.
    """
    if radii is None:
        radii = np.logspace(-2, 3, 26)
    if angles is None:
        lo = min(alpha + tol.SECTOR_MARGIN, np.pi - 1e-9)
        mags = np.linspace(lo, np.pi, 5)
        angles = np.concatenate([mags, -mags[:-1]])
    Ts = T.matrix - shift * np.eye(T.dim)
    samples = []
    # containment is half of the sectoriality claim: an eigenvalue outside
    # the closed shifted sector is itself a blow-up witness
    blow_up = bool(
        np.any([_outside_closed_sector(ev - shift, alpha) for ev in T.spectrum])
    )
    sup = 0.0
    eye = np.eye(T.dim)
    for phi in np.atleast_1d(angles):
        for rho in np.atleast_1d(radii):
            lam = rho * np.exp(1j * phi)
            if not _outside_closed_sector(lam, alpha):
                raise SampleOnSpectrum(
                    f"sample {lam} not outside the closed sector of angle {alpha}"
                )
            A = lam * eye - Ts
            smin = np.linalg.svd(A, compute_uv=False)[-1]
            if smin <= 1e-300:
                blow_up = True
                samples.append((lam, np.inf))
                continue
            nrm = abs(lam) * operator_norm(np.linalg.inv(A), weights)
            if nrm > tol.BLOWUP_CAP:
                blow_up = True
            samples.append((lam, nrm))
            sup = max(sup, nrm)
    return SectorProbe(float(alpha), complex(shift), tuple(samples), sup, blow_up)


def sector_half_angle(T: OperatorHandle) -> float:
    """max |arg(-eig)| over the spectrum: the sector angle of -T.

    Zero for negative-definite diagonal surrogates; pi/2 or more means -T is
    not sectorial with an acute angle.
    """
    w = -T.spectrum
    w = w[np.abs(w) > 0]
    if w.size == 0:
        return 0.0
    return float(np.max(np.abs(np.angle(w))))
