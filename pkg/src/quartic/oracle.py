"""Brute-force reference solvers used to validate every formula path.

Nothing here shares machinery with the representation-formula solvers: the
fourth-order problem is discretized by global Chebyshev collocation with the
operator rows downsampled to interior first-kind points (rectangular
collocation), boundary conditions appended as explicit rows, and the system
solved densely.  A scalar closed-form solver over the characteristic
exponential basis covers the X = C case with inhomogeneous data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import tolerances as tol
from .errors import CapExceeded, DegenerateRoots, DimensionMismatch, SingularSystem
from .grids import Grid, GridFunction, cgl_grid, chebyshev_gauss_nodes
from .operators import OperatorHandle

__all__ = [
    "CollocationSystem",
    "collocation_solve",
    "DenseGenerator",
    "dense_generator",
    "low_spectrum",
    "dense_expm",
    "characteristic_root_solve",
    "ScalarForcing",
    "cheb_diff_matrix",
    "ode_residual",
]


def cheb_diff_matrix(n: int, a: float, b: float) -> np.ndarray:
    """Global spectral differentiation matrix at ascending CGL nodes."""
    if n < 2:
        raise ValueError("need n >= 2")
    x = np.cos(np.pi * np.arange(n) / (n - 1))
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    X = np.tile(x, (n, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    flip = np.eye(n)[::-1]
    return flip @ D @ flip * (2.0 / (b - a))


def _downsample_matrix(n: int, a: float, b: float) -> np.ndarray:
    """Barycentric evaluation from n CGL nodes onto n-4 interior first-kind points."""
    xs = cgl_grid(n, a, b).nodes
    xt = chebyshev_gauss_nodes(n - 4, a, b)
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    E = np.zeros((n - 4, n))
    for i, t in enumerate(xt):
        q = w / (t - xs)
        E[i] = q / q.sum()
    return E


@dataclass
class CollocationSystem:
    """Square rectangular-collocation system for one boundary family.

    ``K`` applies u -> u'''' + C2 u'' + C0 u at all nodes; the first n-4 rows
    of ``full(lam)`` are K - lam downsampled to interior points and the last
    four are the boundary-condition block rows.
    """

    grid: Grid
    dim: int
    K: np.ndarray
    E: np.ndarray          # downsample, (n-4)*dim x n*dim
    R: np.ndarray          # boundary rows, 4*dim x n*dim
    bidx: np.ndarray       # boundary-eliminated dof indices
    iidx: np.ndarray       # retained dof indices

    def full(self, lam: complex) -> np.ndarray:
        shifted = self.K - lam * np.eye(self.K.shape[0])
        return np.vstack([self.E @ shifted, self.R])

    def rhs(self, f_values: np.ndarray) -> np.ndarray:
        fvec = np.asarray(f_values, dtype=complex).T.reshape(-1)
        out = np.zeros(self.E.shape[0] + self.R.shape[0], dtype=complex)
        out[: self.E.shape[0]] = self.E @ fvec
        return out


def _build_system(
    n_nodes: int,
    a: float,
    b: float,
    coeff2: np.ndarray,
    coeff0: np.ndarray,
    bc_family: int,
    bc_second_op: np.ndarray | None,
) -> CollocationSystem:
    dim = coeff2.shape[0]
    grid = cgl_grid(n_nodes, a, b)
    D1 = cheb_diff_matrix(n_nodes, a, b)
    D2 = D1 @ D1
    D4 = D2 @ D2
    Idim = np.eye(dim)
    In = np.eye(n_nodes)
    K = np.kron(D4, Idim) + np.kron(D2, coeff2) + np.kron(In, coeff0)
    E = np.kron(_downsample_matrix(n_nodes, a, b), Idim)

    def row(mat_row, op=None):
        return np.kron(mat_row[None, :], Idim if op is None else op)

    val_a, val_b = In[0], In[-1]
    d1_a, d1_b = D1[0], D1[-1]
    d2_a, d2_b = D2[0], D2[-1]
    S = bc_second_op
    if bc_family == 1:
        rows = [row(val_a), row(d2_a), row(d2_b), row(val_b)]
    elif bc_family == 2:
        rows = [row(d1_a), row(d2_a) + row(val_a, S), row(d2_b) + row(val_b, S), row(d1_b)]
    elif bc_family == 3:
        rows = [row(val_a), row(d1_a), row(d1_b), row(val_b)]
    elif bc_family == 4:
        rows = [row(d1_a), row(d2_a), row(d2_b), row(d1_b)]
    elif bc_family == 5:
        rows = [row(val_a), row(d2_a) + row(val_a, S), row(d2_b) + row(val_b, S), row(val_b)]
    else:
        raise ValueError(f"unknown bc family {bc_family}")
    R = np.vstack(rows)

    node_b = np.array([0, 1, n_nodes - 2, n_nodes - 1])
    bidx = (node_b[:, None] * dim + np.arange(dim)[None, :]).reshape(-1)
    iidx = np.setdiff1d(np.arange(n_nodes * dim), bidx)
    return CollocationSystem(grid, dim, K, E, R, bidx, iidx)


def _coeffs_from_A(A: OperatorHandle, k: float):
    Am = np.asarray(A.matrix)
    coeff2 = 2 * Am - k * np.eye(A.dim)
    coeff0 = Am @ Am - k * Am
    return coeff2, coeff0


def _frame_bc2_operator(A: OperatorHandle, k: float, lam: complex) -> np.ndarray:
    """The second-order boundary operator the formula path imposes at lam."""
    if lam == 0 and k != 0:
        shift = k if k > 0 else 0.0
        return np.asarray(A.matrix) - shift * np.eye(A.dim)
    s = np.sqrt(-complex(lam) - k * k / 4.0)
    return np.asarray(A.matrix) - (k / 2.0) * np.eye(A.dim) + 1j * s * np.eye(A.dim)


def collocation_solve(
    spec,
    lam: complex,
    f: GridFunction,
    bc_operator: str = "frame",
) -> GridFunction:
    """Direct dense solve of the shifted fourth-order problem, homogeneous BCs.

    ``bc_operator`` selects the second-order boundary operator for the
    families that carry one: "frame" matches the representation formulas
    (parameter-shifted factor), "fixed" uses the base operator itself (the
    generator's own domain).  The two coincide for families without it.
    """
    if f.grid.kind != "cgl":
        raise DimensionMismatch("collocation oracle needs a CGL grid")
    coeff2, coeff0 = _coeffs_from_A(spec.A, spec.k)
    if bc_operator == "frame":
        S = _frame_bc2_operator(spec.A, spec.k, lam)
    elif bc_operator == "fixed":
        S = np.asarray(spec.A.matrix)
    else:
        raise ValueError("bc_operator must be 'frame' or 'fixed'")
    sys_ = _build_system(f.grid.n, f.grid.a, f.grid.b, coeff2, coeff0,
                         spec.bc_family, S)
    M = sys_.full(lam)
    # the raw system is badly row-scaled (fourth-derivative rows); row
    # equilibration keeps the singularity test and the solve meaningful
    dr = 1.0 / np.maximum(np.max(np.abs(M), axis=1), 1e-300)
    Ms = dr[:, None] * M
    cond = np.linalg.cond(Ms)
    if not np.isfinite(cond) or cond > tol.CONDITION_CAP:
        raise SingularSystem(
            f"collocation system condition {cond:.3e} at lambda={lam}"
        )
    rhs = dr * sys_.rhs(f.values)
    lu = sla.lu_factor(Ms)
    u = sla.lu_solve(lu, rhs)
    u += sla.lu_solve(lu, rhs - Ms @ u)  # one refinement step
    return GridFunction(f.grid, u.reshape(f.grid.n, spec.A.dim).T)


@dataclass
class DenseGenerator:
    """Dense surrogate of the fourth-order generator on interior dofs.

    ``minus_generator`` is the matrix of -G (positive spectrum for the
    diagonal negative surrogates); ``embed`` reconstructs all node values
    from interior dofs, ``project`` maps a forcing field to the reduced
    right-hand side so that (-G - lam)^{-1} project(f) solves the problem.
    """

    grid: Grid
    dim: int
    minus_generator: np.ndarray
    embed_matrix: np.ndarray
    project_matrix: np.ndarray
    iidx: np.ndarray
    stiffness: np.ndarray | None = None
    mass: np.ndarray | None = None
    E_rows: np.ndarray | None = None

    @property
    def generator(self) -> np.ndarray:
        return -self.minus_generator

    def embed(self, u_inner: np.ndarray) -> np.ndarray:
        full = self.embed_matrix @ u_inner
        return full.reshape(self.grid.n, self.dim).T

    def project(self, f_values: np.ndarray) -> np.ndarray:
        return self.project_matrix @ np.asarray(f_values, dtype=complex).T.reshape(-1)

    def resolvent_apply(self, lam: complex, f_values: np.ndarray) -> np.ndarray:
        """(-G - lam I)^{-1} project(f) through the equilibrated pencil solve.

        Mathematically identical to inverting the reduced generator; solving
        the stiffness/mass pencil with refinement keeps the agreement with
        the direct collocation solve at the round-off floor.
        """
        fvec = np.asarray(f_values, dtype=complex).T.reshape(-1)
        A = self.stiffness - lam * self.mass
        b = self.E_rows @ fvec if self.E_rows is not None else None
        if b is None:
            return np.linalg.solve(
                self.minus_generator - lam * np.eye(self.minus_generator.shape[0]),
                self.project(f_values))
        dr = 1.0 / np.maximum(np.max(np.abs(A), axis=1), 1e-300)
        lu = sla.lu_factor(dr[:, None] * A)
        rhs = dr * b
        u = sla.lu_solve(lu, rhs)
        u += sla.lu_solve(lu, rhs - (dr[:, None] * A) @ u)
        return u

    def weights(self) -> np.ndarray:
        w = np.repeat(self.grid.weights, self.dim)
        return w[self.iidx]


def dense_generator(spec, n_nodes: int, bc_operator: str = "fixed") -> DenseGenerator:
    """Matrix of the generator with boundary rows eliminated exactly.

    The boundary block solves the four condition rows for the dofs at the
    two extreme node pairs; the downsampled operator rows then close on the
    remaining dofs (a Schur complement against the mass of the embedding).
    """
    if n_nodes * spec.A.dim > tol.DENSE_CAP:
        raise CapExceeded(
            f"dense generator size {n_nodes * spec.A.dim} exceeds cap {tol.DENSE_CAP}"
        )
    coeff2, coeff0 = _coeffs_from_A(spec.A, spec.k)
    S = np.asarray(spec.A.matrix) if bc_operator == "fixed" else \
        _frame_bc2_operator(spec.A, spec.k, 0.0)
    sys_ = _build_system(n_nodes, spec.a, spec.b, coeff2, coeff0, spec.bc_family, S)
    Rb = sys_.R[:, sys_.bidx]
    Ri = sys_.R[:, sys_.iidx]
    condb = np.linalg.cond(Rb)
    if not np.isfinite(condb) or condb > tol.CONDITION_CAP:
        raise SingularSystem("boundary rows are not solvable for the edge dofs")
    Sb = -np.linalg.solve(Rb, Ri)
    ndof = n_nodes * spec.A.dim
    T = np.zeros((ndof, len(sys_.iidx)), dtype=complex)
    T[sys_.iidx, np.arange(len(sys_.iidx))] = 1.0
    T[sys_.bidx] = Sb
    mass = sys_.E @ T
    stiff = sys_.E @ sys_.K @ T
    mass_inv = np.linalg.inv(mass)
    return DenseGenerator(
        grid=sys_.grid,
        dim=spec.A.dim,
        minus_generator=mass_inv @ stiff,
        embed_matrix=T,
        project_matrix=mass_inv @ sys_.E,
        iidx=sys_.iidx,
        stiffness=stiff,
        mass=mass,
        E_rows=sys_.E,
    )


def low_spectrum(gen: DenseGenerator, count: int = 5, shift: float = -1.0) -> np.ndarray:
    """Accurate smallest eigenvalues of -G via the shift-inverted pencil.

    Inverting (stiffness - shift * mass) turns the smooth low modes into the
    dominant, well-conditioned eigenvalues, dodging the round-off floor set
    by the fourth-derivative scale of the raw generator matrix.
    """
    W = np.linalg.solve(gen.stiffness - shift * gen.mass, gen.mass)
    nu = np.linalg.eigvals(W)
    nu = nu[np.abs(nu) > 1e-300]
    mu = shift + 1.0 / nu
    return np.sort(mu.real)[:count]


def dense_expm(G: np.ndarray, t: float, v0: np.ndarray) -> np.ndarray:
    """e^{tG} v0 by scaling and squaring (near machine precision oracle)."""
    G = np.asarray(G)
    if G.shape[0] > tol.DENSE_CAP:
        raise CapExceeded(f"dense expm size {G.shape[0]} exceeds cap")
    if v0.shape[0] != G.shape[0]:
        raise DimensionMismatch("v0 length does not match generator")
    if t == 0:
        return np.asarray(v0, dtype=complex).copy()
    return sla.expm(t * G) @ v0


def ode_residual(coeff2: np.ndarray, coeff0: np.ndarray, lam: complex,
                 u: GridFunction, f: GridFunction) -> float:
    """Relative interior residual of the fourth-order equation at u.

    Uses the oracle's global spectral derivatives on the downsampled interior
    points; independent of how u was produced.
    """
    n, a, b = u.grid.n, u.grid.a, u.grid.b
    dim = u.dim
    D1 = cheb_diff_matrix(n, a, b)
    D2 = D1 @ D1
    K = np.kron(D2 @ D2, np.eye(dim)) + np.kron(D2, coeff2) + np.kron(np.eye(n), coeff0)
    E = np.kron(_downsample_matrix(n, a, b), np.eye(dim))
    uvec = u.values.T.reshape(-1)
    fvec = f.values.T.reshape(-1)
    r = E @ ((K - lam * np.eye(n * dim)) @ uvec - fvec)
    scale = max(np.linalg.norm(E @ fvec), np.linalg.norm(E @ (K @ uvec)), 1e-300)
    return float(np.linalg.norm(r) / scale)


class ScalarForcing:
    """Analytic scalar forcing: polynomial plus exponential terms.

    f(x) = sum_j poly[j] x^j + sum_i amp_i e^{gamma_i x}.  Knowing f in closed
    form lets the oracle build exact particular solutions by undetermined
    coefficients.
    """

    def __init__(self, poly=(), exps=()):
        self.poly = [complex(cj) for cj in poly]
        self.exps = [(complex(g), complex(amp)) for g, amp in exps]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=complex)
        for j, cj in enumerate(self.poly):
            out += cj * x**j
        for g, amp in self.exps:
            out = out + amp * np.exp(g * x)
        return out

    def sample(self, grid: Grid) -> GridFunction:
        return GridFunction(grid, self(grid.nodes)[None, :])


def characteristic_root_solve(
    p: complex,
    q: complex,
    a: float,
    b: float,
    bc_family: int,
    phi,
    forcing: ScalarForcing,
):
    """Closed-form scalar solve of u'''' + (p+q) u'' + p q u = f.

    Works over the four characteristic exponentials (scaled to decay from
    each endpoint) plus an exact particular solution; returns a sampler
    callable.  A shifted problem is solved by passing the shifted factor
    pair.  Raises DegenerateRoots when the characteristic roots collide.
    """
    p_eff, q_eff = complex(p), complex(q)
    if abs(p_eff - q_eff) < 1e-12 * max(abs(p_eff), abs(q_eff), 1.0):
        raise DegenerateRoots("p == q gives repeated characteristic roots")
    if abs(p_eff) < 1e-300 or abs(q_eff) < 1e-300:
        raise DegenerateRoots("zero factor makes the characteristic roots repeat")
    m = -np.sqrt(-p_eff)
    l = -np.sqrt(-q_eff)
    c = b - a

    def chi(g):
        return g**4 + (p_eff + q_eff) * g**2 + p_eff * q_eff

    # particular solution: polynomial part by downward recurrence
    deg = len(forcing.poly) - 1
    dpoly = np.zeros(max(deg + 1, 0), dtype=complex)
    pq = p_eff * q_eff
    ps = p_eff + q_eff
    for j in range(deg, -1, -1):
        val = forcing.poly[j]
        if j + 2 <= deg:
            val -= ps * (j + 2) * (j + 1) * dpoly[j + 2]
        if j + 4 <= deg:
            val -= (j + 4) * (j + 3) * (j + 2) * (j + 1) * dpoly[j + 4]
        dpoly[j] = val / pq
    exp_terms = []
    for g, amp in forcing.exps:
        den = chi(g)
        if abs(den) < 1e-10 * max(1.0, abs(g) ** 4):
            raise DegenerateRoots(f"forcing exponent {g} resonates with the roots")
        exp_terms.append((g, amp / den))

    def u_part(x, order=0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x, dtype=complex)
        for j, dj in enumerate(dpoly):
            if j - order >= 0:
                fac = 1.0
                for i in range(order):
                    fac *= j - i
                out += dj * fac * x ** (j - order)
        for g, amp in exp_terms:
            out = out + amp * g**order * np.exp(g * x)
        return out

    # basis functions and derivatives, scaled against overflow
    def basis(x, order=0):
        x = np.asarray(x, dtype=float)
        cols = [
            m**order * np.exp((x - a) * m),
            (-m) ** order * np.exp((b - x) * m),
            l**order * np.exp((x - a) * l),
            (-l) ** order * np.exp((b - x) * l),
        ]
        return np.stack(cols, axis=-1)

    def cond_row(kind, x0):
        if kind == "val":
            return basis(x0, 0), u_part(x0, 0)
        if kind == "d1":
            return basis(x0, 1), u_part(x0, 1)
        if kind == "d2":
            return basis(x0, 2), u_part(x0, 2)
        if kind == "d2pP":
            return basis(x0, 2) + p_eff * basis(x0, 0), u_part(x0, 2) + p_eff * u_part(x0, 0)
        raise ValueError(kind)

    kinds = {
        1: [("val", a), ("val", b), ("d2", a), ("d2", b)],
        2: [("d1", a), ("d1", b), ("d2pP", a), ("d2pP", b)],
        3: [("val", a), ("val", b), ("d1", a), ("d1", b)],
        4: [("d1", a), ("d1", b), ("d2", a), ("d2", b)],
        5: [("val", a), ("val", b), ("d2pP", a), ("d2pP", b)],
    }[bc_family]
    A = np.zeros((4, 4), dtype=complex)
    rhs = np.zeros(4, dtype=complex)
    for i, ((kind, x0), ph) in enumerate(zip(kinds, phi)):
        rowvec, part_val = cond_row(kind, x0)
        A[i] = rowvec
        rhs[i] = complex(ph) - part_val
    condA = np.linalg.cond(A)
    if not np.isfinite(condA) or condA > tol.CONDITION_CAP:
        raise SingularSystem(f"scalar boundary system condition {condA:.3e}")
    coeff = np.linalg.solve(A, rhs)

    def sampler(x):
        return basis(x, 0) @ coeff + u_part(x, 0)

    return sampler
