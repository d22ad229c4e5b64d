"""Discrete Dirichlet Laplacian, the Helmholtz-type operator ``-Lap + I``,
the split fourth-order solve and the low Dirichlet spectrum."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Literal

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import BoundaryData, GridDomain, ScalarField, laplacian_stencil

__all__ = [
    "EllipticOperator",
    "EigenBasis",
    "SolverError",
    "get_operator",
    "apply",
    "solve_dirichlet",
    "solve_fourth_order",
    "eigenpairs",
    "DIRECT_LIMIT",
]

logger = logging.getLogger(__name__)

OperatorKind = Literal["neg_laplacian", "helmholtz"]

#: Largest number of unknowns for which ``method="auto"`` uses a sparse LU factorization.
DIRECT_LIMIT = 60_000


class SolverError(RuntimeError):
    """Raised when a linear or eigen solve does not reach its tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


def _laplacian_matrix(domain: GridDomain) -> sp.csr_matrix:
    """Sparse ``-Lap_h`` on interior nodes (C order) as a sum of Kronecker products."""
    mats = []
    eyes = [sp.identity(n, format="csr") for n in domain.n_per_axis]
    for axis, (n, h) in enumerate(zip(domain.n_per_axis, domain.spacing)):
        t = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(n, n), format="csr") / (h * h)
        factors = list(eyes)
        factors[axis] = t
        m = factors[0]
        for f in factors[1:]:
            m = sp.kron(m, f, format="csr")
        mats.append(m)
    return sum(mats[1:], mats[0]).tocsr()


@dataclass(frozen=True, eq=False)
class EllipticOperator:
    """Assembled SPD form ``-Lap_h`` or ``-Lap_h + I`` over interior nodes."""

    domain: GridDomain
    kind: OperatorKind = "neg_laplacian"

    def __post_init__(self):
        if self.kind not in ("neg_laplacian", "helmholtz"):
            raise ValueError(f"unknown operator kind {self.kind!r}")

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        a = _laplacian_matrix(self.domain)
        if self.kind == "helmholtz":
            a = (a + sp.identity(self.domain.size, format="csr")).tocsr()
        return a

    @cached_property
    def shift(self) -> float:
        return 1.0 if self.kind == "helmholtz" else 0.0

    @cached_property
    def _lu(self):
        logger.debug("factorizing %s on %s", self.kind, self.domain.n_per_axis)
        return spla.splu(self.matrix.tocsc(), permc_spec="MMD_AT_PLUS_A")

    @cached_property
    def _jacobi(self) -> spla.LinearOperator:
        dinv = 1.0 / self.matrix.diagonal()
        n = self.domain.size
        return spla.LinearOperator((n, n), matvec=lambda x: dinv * x, dtype=float)

    def boundary_rhs(self, bc: BoundaryData | None) -> np.ndarray:
        """Contribution of Dirichlet data to the interior right-hand side."""
        if bc is None or bc.is_zero():
            return np.zeros(self.domain.size)
        full = bc.full()
        # the stencil of the boundary-only array is exactly the coupling term
        return laplacian_stencil(full, self.domain.spacing).ravel()

    def solve_matrix(
        self,
        b: np.ndarray,
        method: str = "auto",
        rtol: float = 1e-10,
        atol: float = 1e-12,
        maxiter: int | None = None,
    ) -> np.ndarray:
        """Solve ``A x = b`` for raw interior vectors and check the residual.

        Residual norms use the discrete L2 weight of the grid.
        """
        if not np.all(np.isfinite(b)):
            raise ValueError("right-hand side must be finite")
        if method == "auto":
            method = "direct" if self.domain.size <= DIRECT_LIMIT else "cg"
        w = math.sqrt(self.domain.cell_volume)
        bnorm = float(np.linalg.norm(b)) * w
        if bnorm == 0.0:
            return np.zeros_like(b)
        if method == "direct":
            x = self._lu.solve(b)
        elif method == "cg":
            # scipy's cg measures residuals in the plain Euclidean norm
            x, info = spla.cg(
                self.matrix, b, rtol=rtol, atol=atol / w, maxiter=maxiter or 20 * self.domain.size,
                M=self._jacobi,
            )
            if info != 0:
                res = float(np.linalg.norm(self.matrix @ x - b)) * w
                raise SolverError(f"CG did not converge in {info} iterations (residual {res:.3e})", res)
        else:
            raise ValueError(f"unknown linear solver method {method!r}")
        res = float(np.linalg.norm(self.matrix @ x - b)) * w
        if res > rtol * bnorm + atol:
            raise SolverError(
                f"linear solve residual {res:.3e} exceeds {rtol:.1e}*{bnorm:.3e}+{atol:.1e}", res
            )
        return x


@lru_cache(maxsize=32)
def get_operator(domain: GridDomain, kind: OperatorKind = "neg_laplacian") -> EllipticOperator:
    """Shared, lazily factorized operator for ``(domain, kind)``."""
    return EllipticOperator(domain, kind)


def apply(op: EllipticOperator, u: ScalarField, bc: BoundaryData | None = None) -> ScalarField:
    """Stencil image of ``u`` under ``op``.

    Boundary values come from ``bc`` for homogeneous-trace ``u`` (zero if
    omitted) or from the stored boundary layer of a lifted ``u``.
    """
    if u.domain != op.domain:
        raise ValueError("field and operator live on different grids")
    if u.lifted:
        if bc is not None:
            raise ValueError("lifted field already carries its boundary values")
        full = u.full()
    else:
        full = u.full()
        if bc is not None:
            if bc.domain != op.domain:
                raise ValueError("boundary data lives on a different grid")
            full[op.domain.boundary_mask] = bc.values
    img = -laplacian_stencil(full, op.domain.spacing)
    if op.kind == "helmholtz":
        img += full[(slice(1, -1),) * op.domain.dim]
    return ScalarField(op.domain, img)


def solve_dirichlet(
    op: EllipticOperator,
    rhs: ScalarField,
    bc: BoundaryData | None = None,
    *,
    method: str = "auto",
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> ScalarField:
    """Solve ``op w = rhs`` in the interior with ``w = bc`` on the boundary.

    Returns a homogeneous-trace field when ``bc`` is None, otherwise a lifted
    field whose boundary layer equals ``bc``. The residual is checked against
    ``rtol * ||data|| + atol``, where the data norm includes the boundary
    coupling terms.
    """
    if rhs.domain != op.domain:
        raise ValueError("right-hand side and operator live on different grids")
    b = rhs.interior().ravel() + op.boundary_rhs(bc)
    x = op.solve_matrix(b, method=method, rtol=rtol, atol=atol)
    if bc is None:
        return ScalarField(op.domain, x)
    full = bc.full()
    full[(slice(1, -1),) * op.domain.dim] = x.reshape(op.domain.shape)
    return ScalarField(op.domain, full, lifted=True)


def solve_fourth_order(
    rhs: ScalarField,
    h1: BoundaryData | None = None,
    h2: BoundaryData | None = None,
    *,
    method: str = "auto",
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> tuple[ScalarField, ScalarField]:
    """Solve ``-Lap phi + Lap^2 phi = rhs`` with ``phi = h1``, ``Lap phi = h2``.

    Split through ``theta = Lap phi``: first ``(-Lap + I) theta = -rhs`` with
    ``theta = h2``, then ``-Lap phi = -theta`` with ``phi = h1``. Both fields
    are returned lifted when the matching data is given, homogeneous otherwise.
    """
    domain = rhs.domain
    helm = get_operator(domain, "helmholtz")
    lap = get_operator(domain, "neg_laplacian")
    theta = solve_dirichlet(helm, -rhs, h2, method=method, rtol=rtol, atol=atol)
    minus_theta = ScalarField(domain, -theta.interior())
    phi = solve_dirichlet(lap, minus_theta, h1, method=method, rtol=rtol, atol=atol)
    return phi, theta


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """The ``count`` smallest eigenpairs of ``-Lap_h``, L2-orthonormal vectors."""

    domain: GridDomain
    lambdas: np.ndarray
    vectors: tuple[ScalarField, ...]
    residuals: np.ndarray
    iterations: int

    @property
    def count(self) -> int:
        return len(self.lambdas)

    def matrix(self) -> np.ndarray:
        """Vectors stacked as columns, shape ``(domain.size, count)``."""
        return np.column_stack([v.values for v in self.vectors])


def eigenpairs(
    domain: GridDomain,
    k: int,
    *,
    tol: float = 1e-9,
    max_iters: int = 500,
    guard: int | None = None,
    method: str = "auto",
) -> EigenBasis:
    """Smallest ``k`` eigenpairs of the discrete Dirichlet Laplacian.

    Block inverse iteration with Rayleigh-Ritz projection and full
    reorthogonalization on at most 64 vectors; the block carries ``guard``
    extra vectors so clustered and repeated eigenvalues converge together.
    The starting block is a fixed pseudo-random basis, so the output
    (including the basis chosen inside a degenerate eigenspace) is
    deterministic. Convergence: ``||A e - lam e|| <= tol * lam`` for every
    returned pair.
    """
    n = domain.size
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    if k > 64:
        raise ValueError("at most 64 eigenpairs are supported")
    if guard is None:
        guard = max(4, k // 2 + 2)
    p = min(n, 64, k + guard)
    op = get_operator(domain, "neg_laplacian")
    a = op.matrix
    w = domain.cell_volume
    if p == n:
        vals, vecs = np.linalg.eigh(a.toarray())
        vecs = vecs[:, :k] / math.sqrt(w)
        res = np.linalg.norm(a @ vecs - vecs * vals[:k], axis=0) * math.sqrt(w)
        return EigenBasis(domain, vals[:k], tuple(ScalarField(domain, v) for v in vecs.T), res, 0)

    rng = np.random.default_rng(20240611)
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    lam = np.zeros(p)
    res = np.full(k, np.inf)
    for it in range(1, max_iters + 1):
        z = np.column_stack([op.solve_matrix(q[:, j], method=method, rtol=1e-11, atol=0.0) for j in range(p)])
        # two passes of QR keep the block orthonormal to working precision
        z, _ = np.linalg.qr(z)
        z, _ = np.linalg.qr(z)
        az = a @ z
        h = z.T @ az
        h = 0.5 * (h + h.T)
        lam, y = np.linalg.eigh(h)
        q = z @ y
        aq = az @ y
        r = np.linalg.norm(aq[:, :k] - q[:, :k] * lam[:k], axis=0)
        res = r  # Euclidean norm on Euclidean-unit vectors equals the weighted ratio
        if np.all(res <= tol * lam[:k]):
            break
    else:
        raise SolverError(
            f"eigensolver not converged after {max_iters} iterations (max relative residual "
            f"{float(np.max(res / lam[:k])):.2e})",
            float(np.max(res / lam[:k])),
        )
    vecs = q[:, :k]
    # deterministic sign: largest-modulus entry positive
    for j in range(k):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    vecs = vecs / math.sqrt(w)
    return EigenBasis(
        domain,
        lam[:k].copy(),
        tuple(ScalarField(domain, vecs[:, j], name=f"eig{j + 1}") for j in range(k)),
        res.copy(),
        it,
    )
