"""Dense numerical kernels: spectral calculus, null spaces, projections,
a Phase-I simplex and a product quadrature on the sphere.

Everything here is a pure function of its inputs.
"""
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, IterationLimit, NonHermitian, UnsupportedOrder

HERMITIAN_TOL = 1e-9
RANK_TOL = 1e-9
MAX_QUADRATURE_ORDER = 256


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``m`` as a complex square array, raising if it is not Hermitian."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NonHermitian(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonHermitian("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a))))
    asym = float(np.max(np.abs(a - a.conj().T)))
    if asym > tol * scale:
        raise NonHermitian(f"Hermiticity violated by {asym:.3e}")
    return a


def hermitize(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    return 0.5 * (a + a.conj().T)


def fix_phases(vectors: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Rotate each column so that its first non-negligible entry is real positive."""
    v = np.array(vectors, dtype=complex, copy=True)
    for k in range(v.shape[1]):
        col = v[:, k]
        big = np.flatnonzero(np.abs(col) > tol)
        if big.size:
            z = col[big[0]]
            v[:, k] = col * (abs(z) / z)
    return v


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eig_hermitian(m) -> SpectralDecomposition:
    """Ascending eigenvalues with phase-fixed orthonormal eigenvectors."""
    a = hermitize(check_hermitian(m))
    w, v = np.linalg.eigh(a)
    return SpectralDecomposition(w, fix_phases(v))


_NAMED = {
    "exp": np.exp,
    "sqrt": np.sqrt,
}


def matrix_function(m, f: Union[str, Callable[[np.ndarray], np.ndarray]],
                    extended: bool = False) -> np.ndarray:
    """Apply a scalar function through the spectral decomposition of ``m``.

    ``f`` is a vectorised callable or one of ``"exp"``, ``"log"``, ``"sqrt"``.
    With ``extended=True`` the logarithm maps (numerically) zero eigenvalues
    to 0, which is the ``0 ln 0 = 0`` convention used by entropies.
    """
    dec = eig_hermitian(m)
    lam = dec.eigenvalues
    if f == "log":
        if extended:
            slack = 1e-10 * max(1.0, float(np.max(np.abs(lam))))
            if np.any(lam < -slack):
                raise DomainError("log of a matrix with negative eigenvalues")
            vals = np.where(lam > slack, np.log(np.clip(lam, slack, None)), 0.0)
        else:
            if np.any(lam <= 0):
                raise DomainError("log undefined on non-positive eigenvalue")
            vals = np.log(lam)
    elif f == "sqrt":
        if np.any(lam < -1e-12):
            raise DomainError("sqrt undefined on negative eigenvalue")
        vals = np.sqrt(np.clip(lam, 0.0, None))
    else:
        fn = _NAMED.get(f, f) if isinstance(f, str) else f
        if isinstance(fn, str):
            raise DomainError(f"unknown matrix function {f!r}")
        with np.errstate(all="ignore"):
            vals = np.asarray(fn(lam))
    if vals.shape != lam.shape or not np.all(np.isfinite(vals)):
        raise DomainError("function undefined on the spectrum")
    v = dec.eigenvectors
    return hermitize((v * vals) @ v.conj().T)


def nullspace(operator, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis (as columns) of the numerical kernel of ``operator``.

    The rank is the number of singular values above ``tol * sigma_max``.
    """
    a = np.atleast_2d(np.asarray(operator))
    n = a.shape[1]
    if a.size == 0:
        return np.eye(n, dtype=a.dtype)
    _, s, vh = np.linalg.svd(a)
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    basis = vh[rank:].conj().T
    if np.isrealobj(a):
        basis = basis.real
        for k in range(basis.shape[1]):
            big = np.flatnonzero(np.abs(basis[:, k]) > 1e-10)
            if big.size and basis[big[0], k] < 0:
                basis[:, k] = -basis[:, k]
        return basis
    return fix_phases(basis)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float).ravel()
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    cond = u - css / idx > 0
    r = idx[cond][-1]
    theta = css[r - 1] / r
    return np.maximum(v - theta, 0.0)


def project_density(m) -> np.ndarray:
    """Frobenius-nearest density matrix: simplex projection of the spectrum."""
    a = hermitize(m)
    w, v = np.linalg.eigh(a)
    p = project_simplex(w)
    return hermitize((v * p) @ v.conj().T)


# ---------------------------------------------------------------------------
# Dense simplex (Phase I feasibility, optional Phase II with Bland's rule)
# ---------------------------------------------------------------------------

@dataclass
class LPResult:
    feasible: bool
    point: Optional[np.ndarray] = None
    certificate: Optional[dict] = None
    status: str = "feasible"
    objective: Optional[float] = None
    pivots: int = 0


class _StandardForm:
    """x = T y + shift with y >= 0, constraints M [y; s] = r with [y; s] >= 0."""

    def __init__(self, n, A_eq, b_eq, A_ub, b_ub, bounds):
        cols = []
        shift = np.zeros(n)
        extra_rows = []
        for j in range(n):
            lo, hi = bounds[j]
            lo = -np.inf if lo is None else float(lo)
            hi = np.inf if hi is None else float(hi)
            if lo > hi:
                raise ValueError(f"empty bounds on variable {j}")
            e = np.zeros(n)
            e[j] = 1.0
            if np.isfinite(lo):
                shift[j] = lo
                cols.append(e)
                if np.isfinite(hi):
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                shift[j] = hi
                cols.append(-e)
            else:
                cols.append(e)
                cols.append(-e)
        self.T = np.array(cols).T.reshape(n, len(cols))
        self.shift = shift
        ny = self.T.shape[1]

        eq_rows = A_eq @ self.T
        eq_rhs = b_eq - A_eq @ shift
        ub_rows = A_ub @ self.T
        ub_rhs = b_ub - A_ub @ shift
        for col, width in extra_rows:
            row = np.zeros(ny)
            row[col] = 1.0
            ub_rows = np.vstack([ub_rows, row])
            ub_rhs = np.append(ub_rhs, width)
        n_ub = ub_rows.shape[0]
        m_eq = eq_rows.shape[0]
        self.ny = ny
        self.n_slack = n_ub
        self.M = np.zeros((m_eq + n_ub, ny + n_ub))
        self.M[:m_eq, :ny] = eq_rows
        self.M[m_eq:, :ny] = ub_rows
        self.M[m_eq:, ny:] = np.eye(n_ub)
        self.r = np.concatenate([eq_rhs, ub_rhs])

    def to_x(self, z):
        return self.T @ z[: self.ny] + self.shift


def _pivot(tab, row, col):
    tab[row] /= tab[row, col]
    colv = tab[:, col].copy()
    colv[row] = 0.0
    tab -= np.outer(colv, tab[row])


def _bland(tab, basis, ncols, max_pivots, count, tol=1e-11):
    """Run Bland-rule pivots on ``tab`` (last row = reduced costs, last column = rhs).

    Only columns ``< ncols`` may enter. Returns (status, pivots).
    """
    m = tab.shape[0] - 1
    while True:
        red = tab[-1, :ncols]
        entering = np.flatnonzero(red < -tol)
        if entering.size == 0:
            return "optimal", count
        j = int(entering[0])
        colj = tab[:m, j]
        rows = np.flatnonzero(colj > tol)
        if rows.size == 0:
            return "unbounded", count
        ratios = tab[rows, -1] / colj[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        i = int(ties[np.argmin([basis[t] for t in ties])])
        if count >= max_pivots:
            raise IterationLimit(f"simplex exceeded {max_pivots} pivots")
        _pivot(tab, i, j)
        basis[i] = j
        count += 1


def _as_system(n, A, b):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if A.shape != (b.size, n):
        raise ValueError(f"constraint shape {A.shape} does not match rhs {b.shape} / n={n}")
    return A, b


def _normalize_bounds(n, bounds):
    if bounds is None:
        return [(0.0, None)] * n
    if len(bounds) == 2 and not isinstance(bounds[0], (tuple, list)):
        return [tuple(bounds)] * n
    if len(bounds) != n:
        raise ValueError("one bound pair per variable required")
    return [tuple(b) for b in bounds]


def _solve_lp(c, A_eq, b_eq, A_ineq, b_ineq, bounds, n, max_pivots, tol):
    if n is None:
        for A in (A_eq, A_ineq, c):
            if A is not None:
                n = np.atleast_2d(np.asarray(A)).shape[1]
                break
    if n is None:
        raise ValueError("cannot infer the number of variables")
    A_eq, b_eq = _as_system(n, A_eq, b_eq)
    A_ub, b_ub = _as_system(n, A_ineq, b_ineq)
    sf = _StandardForm(n, A_eq, b_eq, A_ub, b_ub, _normalize_bounds(n, bounds))
    M, r = sf.M, sf.r
    m, nz = M.shape
    sign = np.where(r < 0, -1.0, 1.0)
    Mf = M * sign[:, None]
    rf = r * sign

    # phase I tableau: [Mf | I | rf], cost row for sum of artificials
    tab = np.zeros((m + 1, nz + m + 1))
    tab[:m, :nz] = Mf
    tab[:m, nz:nz + m] = np.eye(m)
    tab[:m, -1] = rf
    tab[-1, :nz] = -Mf.sum(axis=0)
    tab[-1, -1] = -rf.sum()
    basis = list(range(nz, nz + m))
    _, pivots = _bland(tab, basis, nz + m, max_pivots, 0)

    w = -tab[-1, -1]
    scale = max(1.0, float(np.max(np.abs(rf))) if m else 1.0)
    if w > tol * scale:
        y = sign * (1.0 - tab[-1, nz:nz + m])
        cert = {"y": y, "matrix": M, "rhs": r, "phase_one_objective": float(w)}
        return LPResult(False, certificate=cert, status="infeasible", pivots=pivots)

    # remove artificials from the basis, dropping redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= nz:
            cand = np.flatnonzero(np.abs(tab[i, :nz]) > 1e-9)
            if cand.size:
                _pivot(tab, i, int(cand[0]))
                basis[i] = int(cand[0])
                pivots += 1
                keep.append(i)
        else:
            keep.append(i)
    tab = np.vstack([tab[keep][:, list(range(nz)) + [-1]], np.zeros((1, nz + 1))])
    basis = [basis[i] for i in keep]

    def extract():
        z = np.zeros(nz)
        for i, bj in enumerate(basis):
            z[bj] = tab[i, -1]
        return np.clip(z, 0.0, None)

    if c is None:
        return LPResult(True, point=sf.to_x(extract()), pivots=pivots)

    cz = np.zeros(nz)
    cz[: sf.ny] = sf.T.T @ np.asarray(c, dtype=float)
    tab[-1, :nz] = cz
    tab[-1, -1] = 0.0
    for i, bj in enumerate(basis):
        tab[-1] -= cz[bj] * tab[i]
    status, pivots = _bland(tab, basis, nz, max_pivots, pivots)
    if status == "unbounded":
        return LPResult(True, status="unbounded", pivots=pivots)
    x = sf.to_x(extract())
    return LPResult(True, point=x, status="optimal",
                    objective=float(np.dot(c, x)), pivots=pivots)


def lp_feasible(A_eq=None, b_eq=None, A_ineq=None, b_ineq=None, bounds=None, *,
                n: Optional[int] = None, max_pivots: int = 100_000,
                tol: float = 1e-9) -> LPResult:
    """Decide feasibility of ``A_eq x = b_eq, A_ineq x <= b_ineq`` within ``bounds``.

    ``bounds`` defaults to ``x >= 0``; a single ``(lo, hi)`` pair applies to all
    variables, ``None`` entries mean unbounded. An infeasible answer carries a
    Farkas vector ``y`` for the standardized system ``M z = r, z >= 0``:
    ``M.T @ y <= 0`` and ``r @ y > 0``.
    """
    return _solve_lp(None, A_eq, b_eq, A_ineq, b_ineq, bounds, n, max_pivots, tol)


def lp_minimize(c, A_eq=None, b_eq=None, A_ineq=None, b_ineq=None, bounds=None, *,
                max_pivots: int = 100_000, tol: float = 1e-9) -> LPResult:
    """Minimize ``c @ x`` over the same constraint format as :func:`lp_feasible`."""
    c = np.asarray(c, dtype=float)
    return _solve_lp(c, A_eq, b_eq, A_ineq, b_ineq, bounds, c.size, max_pivots, tol)


def sphere_quadrature(order: int):
    """Product Gauss-Legendre x trapezoid rule exact for harmonics up to ``order``.

    Returns ``(directions, weights)`` with unit vectors as rows; weights sum to 4 pi.
    """
    order = int(order)
    if order < 1:
        raise UnsupportedOrder("order must be >= 1")
    if order > MAX_QUADRATURE_ORDER:
        raise UnsupportedOrder(f"order {order} exceeds {MAX_QUADRATURE_ORDER}")
    n_z = order // 2 + 1
    n_phi = order + 1
    z, wz = np.polynomial.legendre.leggauss(n_z)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    s = np.sqrt(1.0 - zz ** 2)
    dirs = np.stack([s * np.cos(pp), s * np.sin(pp), zz], axis=-1).reshape(-1, 3)
    weights = np.repeat(wz, n_phi) * (2.0 * np.pi / n_phi)
    return dirs, weights


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * 0.5 * (g + g.conj().T)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary (QR of a Ginibre matrix with phase correction)."""
    g = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(g)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, rng: np.random.Generator, rank: Optional[int] = None) -> np.ndarray:
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = g @ g.conj().T
    return hermitize(rho / np.trace(rho).real)


def random_probability(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.dirichlet(np.ones(n))


def frobenius(m) -> float:
    return float(np.linalg.norm(np.asarray(m)))


def as_float_vector(v: Sequence[float]) -> np.ndarray:
    return np.asarray(v, dtype=float).ravel()
