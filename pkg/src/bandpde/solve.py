"""Linear-algebra drivers: elliptic solves, spectra, and time stepping.

Band operators are moderately sized sparse nonsymmetric matrices.  Small
systems go through a direct factorization; large ones through GMRES with an
incomplete-LU preconditioner.  Eigenpairs come from ARPACK in shift-invert
mode.  Condition numbers pair a power iteration for the top singular value
with an inverse power iteration (through the factorization) for the bottom
one, switching to a dense SVD when the matrix is small enough to afford it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ComplexLeak, NoConvergence, SingularSystem
from .narrowband import Narrowband
from .quadrature import band_normalize

__all__ = [
    "solve_elliptic",
    "extreme_singular_values",
    "condition_number",
    "solve_eigen",
    "crank_nicolson",
    "wave_first_step",
    "leapfrog_wave",
    "WaveTrace",
]


class _IterCount:
    """Callback that counts GMRES inner iterations."""

    def __init__(self):
        self.n = 0

    def __call__(self, _):
        self.n += 1


class _Solver:
    """Uniform solve/solve-transposed interface over a sparse matrix.

    Tries a complete LU factorization first; if that runs out of memory the
    solver falls back to ILU-preconditioned GMRES per solve.
    """

    def __init__(self, mat: sp.spmatrix, rtol: float = 1e-13):
        self.mat = mat.tocsc()
        self.rtol = rtol
        self.lu = None
        self.ilu = None
        try:
            self.lu = spla.splu(self.mat)
        except MemoryError:
            self.ilu = spla.spilu(self.mat, drop_tol=1e-5, fill_factor=10)
        except RuntimeError as exc:
            raise SingularSystem(f"sparse factorization failed: {exc}") from exc

    def _gmres(self, op, b, prec):
        n = b.size
        x, info = spla.gmres(op, b, M=prec, rtol=self.rtol, atol=0.0,
                             restart=min(200, n), maxiter=100)
        if info > 0:
            raise NoConvergence(
                f"GMRES stalled after {info} restart cycles (rtol={self.rtol:g})")
        if info < 0:
            raise SingularSystem("GMRES broke down; the system looks singular")
        return x

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.lu is not None:
            return self.lu.solve(b)
        prec = spla.LinearOperator(self.mat.shape, matvec=self.ilu.solve)
        return self._gmres(self.mat, b, prec)

    def solve_t(self, b: np.ndarray) -> np.ndarray:
        if self.lu is not None:
            return self.lu.solve(b, trans="T")
        prec = spla.LinearOperator(self.mat.shape,
                                   matvec=lambda w: self.ilu.solve(w, trans="T"))
        return self._gmres(self.mat.T.tocsc(), b, prec)


def _reduce_pinned(mat: sp.spmatrix, rhs: np.ndarray, pin: int, pin_value: float):
    n = mat.shape[0]
    keep = np.r_[0:pin, pin + 1:n]
    mat = mat.tocsr()
    reduced = mat[keep][:, keep]
    rhs_red = rhs[keep]
    if pin_value != 0.0:
        rhs_red = rhs_red - pin_value * np.asarray(mat[keep, pin].todense()).ravel()
    return reduced, rhs_red, keep


def solve_elliptic(mat: sp.spmatrix, rhs: np.ndarray, pin: int | None = None,
                   pin_value: float = 0.0, method: str = "auto",
                   direct_limit: int = 40_000, rtol: float = 1e-13) -> np.ndarray:
    """Solve ``mat @ x = rhs``, optionally pinning one unknown to a value.

    Pinning removes the row and column of node ``pin`` and restores the
    prescribed value afterwards; it is how the constant null space of a
    closed-surface operator is fixed.  ``method`` is ``"auto"`` (direct up
    to ``direct_limit`` unknowns, then preconditioned GMRES), ``"direct"``,
    or ``"gmres"``.
    """
    rhs = np.asarray(rhs, dtype=float)
    if pin is not None:
        reduced, rhs_red, keep = _reduce_pinned(mat, rhs, pin, pin_value)
        x_red = solve_elliptic(reduced, rhs_red, pin=None, method=method,
                               direct_limit=direct_limit, rtol=rtol)
        x = np.empty(mat.shape[0])
        x[keep] = x_red
        x[pin] = pin_value
        return x

    n = mat.shape[0]
    if method == "auto":
        method = "direct" if n <= direct_limit else "gmres"
    if method == "direct":
        try:
            lu = spla.splu(mat.tocsc())
        except RuntimeError as exc:
            raise SingularSystem(f"sparse factorization failed: {exc}") from exc
        x = lu.solve(rhs)
    elif method == "gmres":
        try:
            ilu = spla.spilu(mat.tocsc(), drop_tol=1e-5, fill_factor=10)
        except RuntimeError as exc:
            raise SingularSystem(f"incomplete factorization failed: {exc}") from exc
        prec = spla.LinearOperator(mat.shape, matvec=ilu.solve)
        x, info = spla.gmres(mat, rhs, M=prec, rtol=rtol, atol=0.0,
                             restart=min(200, n), maxiter=100)
        if info > 0:
            raise NoConvergence(
                f"GMRES stalled after {info} restart cycles (rtol={rtol:g})")
        if info < 0:
            raise SingularSystem("GMRES broke down; the system looks singular")
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SingularSystem("solution contains non-finite entries")
    return x


def _smin_preconditioned(mat: sp.spmatrix, rng, max_iter: int) -> float:
    """Smallest singular value when a complete factorization is too large.

    Inverse power iteration on the normal matrix where each half step is an
    ILU-preconditioned GMRES solve, warm started from the previous iterate.
    The per-solve tolerance and the ``1e-4`` successive-change stop are looser
    than the factorized path; condition numbers only need a few digits.
    """
    n = mat.shape[0]
    csc = mat.tocsc()
    csc_t = mat.T.tocsc()
    try:
        ilu = spla.spilu(csc, drop_tol=1e-5, fill_factor=10)
    except RuntimeError as exc:
        raise SingularSystem(f"incomplete factorization failed: {exc}") from exc
    prec = spla.LinearOperator(mat.shape, matvec=ilu.solve)
    prec_t = spla.LinearOperator(mat.shape,
                                 matvec=lambda w: ilu.solve(w, trans="T"))

    def solve(op, precond, b, x0):
        x, info = spla.gmres(op, b, M=precond, x0=x0, rtol=1e-8, atol=0.0,
                             restart=200, maxiter=50)
        if info != 0:
            raise NoConvergence(
                f"preconditioned inverse iteration solve failed (info={info})")
        return x

    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    y0 = w0 = None
    smin = math.inf
    for _ in range(max_iter):
        y = solve(csc, prec, x, y0)
        w = solve(csc_t, prec_t, y, w0)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            raise SingularSystem("inverse power iteration produced a zero vector")
        est = 1.0 / math.sqrt(lam)
        x_new = w / lam
        overlap = float(np.dot(x_new, x))
        y0 = y * overlap
        w0 = w * overlap
        x = x_new
        if abs(est - smin) <= 1e-4 * est:
            smin = est
            break
        smin = est
    return float(smin)


def extreme_singular_values(mat: sp.spmatrix, dense_limit: int = 4000,
                            factor_limit: int = 60_000, tol: float = 1e-11,
                            max_iter: int = 5000,
                            seed: int = 7) -> tuple[float, float]:
    """Largest and smallest singular values of a square sparse matrix.

    Below ``dense_limit`` unknowns this is an exact dense SVD.  Above it,
    the largest value comes from a power iteration on the normal matrix and
    the smallest from an inverse power iteration that reuses one sparse
    factorization for both the plain and transposed solves.  Past
    ``factor_limit`` unknowns a complete factorization no longer fits in
    memory, so the inverse iteration runs through ILU-preconditioned GMRES
    at reduced accuracy instead.
    """
    n = mat.shape[0]
    if n <= dense_limit:
        svals = np.linalg.svd(np.asarray(mat.todense()), compute_uv=False)
        return float(svals[0]), float(svals[-1])

    rng = np.random.default_rng(seed)
    mat = mat.tocsr()

    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    smax = 0.0
    smax_tol = max(tol, 1e-9) if n > factor_limit else tol
    for _ in range(max_iter):
        y = mat @ x
        z = mat.T @ y
        est = np.linalg.norm(y)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            raise SingularSystem("power iteration collapsed to the null space")
        x = z / nz
        if abs(est - smax) <= smax_tol * max(est, 1e-300):
            smax = est
            break
        smax = est

    if n > factor_limit:
        return float(smax), _smin_preconditioned(mat, rng, max_iter)

    solver = _Solver(mat)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    smin = math.inf
    for _ in range(max_iter):
        w = solver.solve_t(solver.solve(x))
        lam = np.linalg.norm(w)
        if lam == 0.0:
            raise SingularSystem("inverse power iteration produced a zero vector")
        est = 1.0 / math.sqrt(lam)
        x = w / lam
        if abs(est - smin) <= tol * max(est, 1e-300):
            smin = est
            break
        smin = est
    return float(smax), float(smin)


def condition_number(mat: sp.spmatrix, **kwargs) -> float:
    """Two-norm condition number, via :func:`extreme_singular_values`."""
    smax, smin = extreme_singular_values(mat, **kwargs)
    if smin == 0.0:
        raise SingularSystem("smallest singular value is zero")
    return smax / smin


def solve_eigen(mat: sp.spmatrix, k: int = 6, band: Narrowband | None = None,
                kernel: str = "box", shift: float = -0.5,
                imag_tol: float = 1e-6, tol: float = 0.0,
                maxiter: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``k`` eigenpairs of a band operator via shift-invert ARPACK.

    The operator is real but nonsymmetric, so eigenvalues come back as
    complex numbers; any one whose imaginary part exceeds ``imag_tol``
    relative to its magnitude raises :class:`ComplexLeak`.  With ``band``
    given, eigenvectors are scaled to unit band norm and signed so their
    largest-magnitude entry is positive.  Returns ``(values, vectors)``
    sorted ascending, vectors in columns.

    The Arnoldi start vector is fixed (not ARPACK's random draw) so repeated
    runs give bit-identical results.
    """
    start = np.random.default_rng(2718).standard_normal(mat.shape[0])
    try:
        vals, vecs = spla.eigs(mat.tocsc(), k=k, sigma=shift, which="LM",
                               tol=tol, maxiter=maxiter, v0=start)
    except spla.ArpackNoConvergence as exc:
        raise NoConvergence(f"ARPACK did not converge: {exc}") from exc

    scale = np.maximum(np.abs(vals), 1.0)
    leak = np.abs(vals.imag) / scale
    if np.any(leak > imag_tol):
        worst = vals[np.argmax(leak)]
        raise ComplexLeak(
            f"eigenvalue {worst} has imaginary part beyond tolerance {imag_tol:g}")

    order = np.argsort(vals.real)
    vals = vals.real[order]
    vecs = vecs[:, order].real.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        if band is not None:
            col = band_normalize(band, col, kernel)
        peak = np.argmax(np.abs(col))
        if col[peak] < 0:
            col = -col
        vecs[:, j] = col
    return vals, vecs


def crank_nicolson(op: sp.spmatrix, v0: np.ndarray, dt: float, n_steps: int,
                   forcing: np.ndarray | None = None, rtol: float = 1e-13,
                   restart: int = 60, maxiter: int = 80,
                   ) -> tuple[np.ndarray, np.ndarray]:
    """March ``v' = -op v + forcing`` with the trapezoidal rule.

    Each step solves the implicit system by GMRES started from the previous
    state, which is why the per-step iteration counts stay small.  Returns
    the final state and the per-step inner-iteration counts.
    """
    n = v0.size
    eye = sp.identity(n, format="csr")
    left = (eye + (dt / 2.0) * op).tocsr()
    right = (eye - (dt / 2.0) * op).tocsr()
    v = np.array(v0, dtype=float)
    counts = np.empty(n_steps, dtype=int)
    for step in range(n_steps):
        rhs = right @ v
        if forcing is not None:
            rhs = rhs + dt * forcing
        counter = _IterCount()
        v, info = spla.gmres(left, rhs, x0=v, rtol=rtol, atol=0.0,
                             restart=min(restart, n), maxiter=maxiter,
                             callback=counter, callback_type="pr_norm")
        if info != 0:
            raise NoConvergence(
                f"implicit step {step} failed to reach rtol={rtol:g} (info={info})")
        counts[step] = counter.n
    return v, counts


def _as_apply(op):
    if callable(op):
        return op
    return lambda w: op @ w


def wave_first_step(op, v0: np.ndarray, velocity0: np.ndarray,
                    dt: float) -> np.ndarray:
    """Second-order Taylor start for ``v_tt = -op v``: the state at ``dt``."""
    apply_op = _as_apply(op)
    return v0 + dt * velocity0 - 0.5 * dt * dt * apply_op(v0)


@dataclass
class WaveTrace:
    """Leapfrog run record.  ``v``/``v_prev`` allow resuming the march."""

    v: np.ndarray
    v_prev: np.ndarray
    t: float
    times: np.ndarray
    sup: np.ndarray
    blow_time: float | None

    @property
    def blew_up(self) -> bool:
        return self.blow_time is not None


def leapfrog_wave(op, v: np.ndarray, v_prev: np.ndarray, dt: float,
                  n_steps: int, t0: float = 0.0, damping=None,
                  reinit=None, reinit_every: int = 0,
                  sup_limit: float | None = None,
                  callback=None) -> WaveTrace:
    """Leapfrog march of ``v_tt = -op v`` with optional stabilizers.

    ``damping`` is a matrix applied to the backward difference per step
    (high-order lattice dissipation).  ``reinit`` is a resampling matrix
    applied to both levels every ``reinit_every`` steps so the pair stays
    consistent.  If the sup norm passes ``sup_limit`` (or goes non-finite)
    the march stops and records the blow-up time.
    """
    apply_op = _as_apply(op)
    v = np.array(v, dtype=float)
    v_prev = np.array(v_prev, dtype=float)
    times = np.empty(n_steps)
    sups = np.empty(n_steps)
    blow_time = None
    t = t0
    done = 0
    for step in range(1, n_steps + 1):
        new = 2.0 * v - v_prev - dt * dt * apply_op(v)
        if damping is not None:
            new -= dt * (damping @ (v - v_prev))
        v_prev, v = v, new
        t = t0 + step * dt
        if reinit is not None and reinit_every > 0 and step % reinit_every == 0:
            v = reinit @ v
            v_prev = reinit @ v_prev
        s = float(np.max(np.abs(v)))
        times[step - 1] = t
        sups[step - 1] = s
        done = step
        if callback is not None:
            callback(step, t, v)
        if not math.isfinite(s) or (sup_limit is not None and s > sup_limit):
            blow_time = t
            break
    return WaveTrace(v=v, v_prev=v_prev, t=t, times=times[:done],
                     sup=sups[:done], blow_time=blow_time)
