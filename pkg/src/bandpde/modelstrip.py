"""Flat-strip model problems: closure perturbation analysis and simulation.

The strip is ``[0,1) x (-eps, eps)``, periodic in x, with a zero normal
derivative at the bottom edge and a perturbed one at the top:
``v_y = alpha * d^k v / dx^k``.  That perturbation models the tangential
error a lattice boundary closure commits.  A Fourier mode ``e^{i omega x}``
with normal profile ``e^{kappa y}`` turns each flow into a transcendental
relation between ``kappa`` and ``omega``; the functions here locate the
roots, classify growth, and back the analysis with a direct strip
simulator.

Conventions: ``alpha_tilde = i^k alpha`` (real for even ``k``); complex
square roots are principal, with argument in ``(-pi, pi]``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import NoRoot

__all__ = [
    "SYMMETRIC4",
    "ONESIDED4",
    "closure_ghost_coefficient",
    "boundary_amplification",
    "StripProblem",
    "StabilityRoot",
    "parabolic_growth",
    "elliptic_roots",
    "wave_even_root",
    "wave_odd_roots",
    "wave_roots",
    "spectral_derivative",
    "strip_simulate",
    "StripTrace",
]

# Fourth-order ghost rows: the ghost node two rows above the data row gets
# a combination of data-row values at these x offsets.  The symmetric one
# perturbs the Neumann condition with a negative fourth-derivative
# coefficient, the one-sided one with a positive coefficient; the wave
# flow is neutral under the first and unstable under the second.
SYMMETRIC4 = {-2: -1.0 / 6.0, -1: 2.0 / 3.0, 1: 2.0 / 3.0, 2: -1.0 / 6.0}
ONESIDED4 = {-1: 0.25, 1: 1.5, 2: -1.0, 3: 0.25}


def closure_ghost_coefficient(weights: dict[int, float]) -> float:
    """Coefficient of ``h^4 w''''`` in (ghost value - data value).

    Requires the weights to reproduce cubics exactly (moment conditions),
    which both built-in closures do.
    """
    offs = np.array(sorted(weights))
    w = np.array([weights[int(j)] for j in offs])
    moments = [float(w @ offs.astype(float) ** p) for p in range(4)]
    if abs(moments[0] - 1.0) > 1e-12 or any(abs(m) > 1e-12 for m in moments[1:]):
        raise ValueError("closure weights do not reproduce cubics")
    return float(w @ offs.astype(float) ** 4) / 24.0


def boundary_amplification(weights: dict[int, float], phase: float = math.pi) -> complex:
    """Response of the ghost row to the lattice mode ``e^{i j phase}``."""
    return complex(sum(w * cmath.exp(1j * j * phase) for j, w in weights.items()))


@dataclass(frozen=True)
class StripProblem:
    """Strip flow with a tangential-derivative boundary perturbation.

    ``flow`` is one of ``"elliptic"``, ``"parabolic"``, ``"wave"``.  ``c``
    is the zeroth-order coefficient of the elliptic/parabolic operator
    (the wave analysis has none).  ``k`` is the order of the tangential
    derivative in the perturbation and ``alpha`` its amplitude.
    """

    epsilon: float
    mu: float = 1.0
    c: float = 0.0
    k: int = 1
    alpha: float = 0.0
    flow: str = "elliptic"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("strip half-width must be positive")
        if self.mu < 0 or self.c < 0:
            raise ValueError("mu and c must be nonnegative")
        if self.k < 1 or int(self.k) != self.k:
            raise ValueError("perturbation order k must be an integer >= 1")
        if self.flow not in ("elliptic", "parabolic", "wave"):
            raise ValueError(f"unknown flow {self.flow!r}")

    @property
    def alpha_tilde(self) -> float | None:
        """``i^k alpha`` when that is real (even ``k``), else None."""
        if self.k % 2:
            return None
        return (-1.0) ** (self.k // 2) * self.alpha


@dataclass(frozen=True)
class StabilityRoot:
    """A mode admitted by the perturbed boundary condition.

    ``kappa`` is the normal profile rate, ``growth`` the temporal rate
    (zero for the elliptic problem, where a root merely means the
    homogeneous problem has a nontrivial solution).  ``residual`` is the
    defining relation's mismatch at the returned root.
    """

    omega: float
    kappa: complex
    growth: complex
    classification: str
    residual: float


def _real_kappa_root(eps: float, target: float) -> float:
    """Unique positive root of ``kappa * tanh(2 kappa eps) = target > 0``."""
    f = lambda kap: kap * math.tanh(2.0 * kap * eps) - target
    hi = max(target, 1.0 / eps)
    for _ in range(200):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise NoRoot("failed to bracket the real profile-rate root")
    return brentq(f, 0.0, hi, xtol=1e-14, rtol=8.9e-16)


def _imag_kappa_root(eps: float, target: float) -> float:
    """Smallest q > 0 with ``q * tan(2 q eps) = target > 0``."""
    f = lambda q: q * math.tan(2.0 * q * eps) - target
    hi = (math.pi / (4.0 * eps)) * (1.0 - 1e-12)
    return brentq(f, 1e-300, hi, xtol=1e-14, rtol=8.9e-16)


def _even_residual(p: StripProblem, kappa: complex, omega: float) -> float:
    at = p.alpha_tilde
    return abs(kappa * cmath.tanh(2.0 * kappa * p.epsilon) - at * omega ** p.k)


def parabolic_growth(p: StripProblem, omega: float) -> StabilityRoot | None:
    """Growth rate of the perturbed heat flow at wavenumber ``omega``.

    Odd ``k``, and even ``k`` with ``alpha_tilde <= 0``, are stable by the
    energy estimate; those cases return None without any root-finding.
    Otherwise the real profile rate solves
    ``kappa tanh(2 kappa eps) = alpha_tilde omega^k`` and the growth rate
    is ``kappa^2 - omega^2 - c``.
    """
    if p.k % 2:
        return None
    at = p.alpha_tilde
    if at <= 0:
        return None
    target = at * omega ** p.k
    if target <= 0:
        raise NoRoot("no nontrivial profile rate at this wavenumber")
    kap = _real_kappa_root(p.epsilon, target)
    s = kap * kap - omega * omega - p.c
    cls = "unstable" if s > 0 else "stable"
    return StabilityRoot(omega=float(omega), kappa=complex(kap),
                         growth=complex(s), classification=cls,
                         residual=_even_residual(p, complex(kap), omega))


def elliptic_roots(p: StripProblem, omega_max: float = 1000.0,
                   scan_step: float = 1e-2) -> list[StabilityRoot]:
    """Wavenumbers at which the homogeneous elliptic strip problem has a
    nontrivial solution.

    Odd ``k`` admits none (the relation equates a positive real with an
    imaginary number), as does even ``k`` with ``alpha_tilde <= 0``.  For
    ``alpha_tilde > 0`` there are exactly two, symmetric in sign; beyond
    them the perturbation side dominates for all larger wavenumbers, so
    no root of magnitude comparable to the reciprocal band width exists.
    """
    if p.mu <= 0:
        raise ValueError("the elliptic analysis requires mu > 0")
    if p.k % 2:
        return []
    at = p.alpha_tilde
    if at <= 0:
        return []

    def gap(w):
        kap = np.sqrt((w * w + p.c) / p.mu)
        return kap * np.tanh(2.0 * kap * p.epsilon) - at * w ** p.k

    ws = np.arange(0.0, omega_max + scan_step, scan_step)
    vals = gap(ws)
    sign = np.sign(vals)
    flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    roots = []
    for i in flips:
        w = brentq(gap, ws[i], ws[i + 1], xtol=1e-14, rtol=8.9e-16)
        kap = math.sqrt((w * w + p.c) / p.mu)
        roots.append(StabilityRoot(
            omega=w, kappa=complex(kap), growth=0j, classification="unstable",
            residual=_even_residual(p, complex(kap), w)))
    # mirror: both sides of the relation are even in omega
    mirrored = [StabilityRoot(omega=-r.omega, kappa=r.kappa, growth=r.growth,
                              classification=r.classification,
                              residual=r.residual) for r in reversed(roots)]
    return mirrored + roots


def wave_even_root(p: StripProblem, omega: float) -> StabilityRoot:
    """The wave-flow mode for even ``k``: real profile rate and real
    positive growth when ``alpha_tilde > 0``, imaginary profile rate and
    neutral oscillation when ``alpha_tilde < 0``."""
    if p.k % 2:
        raise ValueError("use wave_odd_roots for odd perturbation orders")
    at = p.alpha_tilde
    target = at * omega ** p.k
    if target == 0:
        raise NoRoot("no nontrivial profile rate at this wavenumber")
    if target > 0:
        kap = complex(_real_kappa_root(p.epsilon, target))
    else:
        kap = 1j * _imag_kappa_root(p.epsilon, -target)
    s = np.sqrt(complex(kap * kap - omega * omega))
    cls = "unstable" if s.real > 1e-10 * max(1.0, abs(s)) else "neutral"
    return StabilityRoot(omega=float(omega), kappa=kap, growth=complex(s),
                         classification=cls,
                         residual=_even_residual(p, kap, omega))


def _odd_equation_residual(tau: complex, b: float) -> float:
    return abs((tau + 1j * b) / (tau - 1j * b) - cmath.exp(tau))


def _odd_phase(tau: complex, b: float) -> float:
    return cmath.phase((tau + 1j * b) / ((tau - 1j * b) * cmath.exp(tau)))


def _newton_polish(tau: complex, b: float) -> complex:
    # G(tau) = (tau + ib) - (tau - ib) e^tau
    for _ in range(60):
        e = cmath.exp(tau)
        g = (tau + 1j * b) - (tau - 1j * b) * e
        dg = 1.0 - e * (1.0 + tau - 1j * b)
        if dg == 0:
            break
        step = g / dg
        tau -= step
        if abs(step) < 1e-15 * max(1.0, abs(tau)):
            break
    return tau


def wave_odd_roots(p: StripProblem, omega: float,
                   n_scan: int = 4001) -> list[StabilityRoot]:
    """Wave-flow modes for odd ``k``.

    With ``tau = 4 eps kappa`` and ``b = 4 eps alpha i^{k-1} omega^k`` the
    relation is ``(tau + bi) = (tau - bi) e^tau``.  Matching moduli pins
    ``Im tau`` to one of two branches over ``Re tau``; the remaining phase
    condition is scanned, bracketed, and polished by a complex Newton
    iteration.  Raises NoRoot when no phase match exists (small ``|b|``).
    """
    if p.k % 2 == 0:
        raise ValueError("use wave_even_root for even perturbation orders")
    b = 4.0 * p.epsilon * p.alpha * (-1.0) ** ((p.k - 1) // 2) * omega ** p.k
    if b == 0:
        raise NoRoot("zero boundary perturbation leaves only neutral modes")
    conj = b < 0
    b = abs(b)

    u_max = brentq(lambda u: u * math.sinh(u) - b, 0.0,
                   max(1.0, math.asinh(b) + 1.0), xtol=1e-14)
    us = np.linspace(u_max * 1e-6, u_max * (1.0 - 1e-12), n_scan)
    e2u = np.exp(2.0 * us)
    disc = np.maximum(4.0 * b * b * e2u - us ** 2 * (e2u - 1.0) ** 2, 0.0)
    taus_found: list[complex] = []
    for sheet in (+1.0, -1.0):
        v = (b * (e2u + 1.0) + sheet * np.sqrt(disc)) / (e2u - 1.0)
        phases = np.array([_odd_phase(complex(u, vv), b)
                           for u, vv in zip(us, v)])
        for i in range(n_scan - 1):
            p0, p1 = phases[i], phases[i + 1]
            if p0 == 0.0:
                cand = complex(us[i], v[i])
            elif p0 * p1 < 0 and abs(p1 - p0) < math.pi:
                # bisect the phase along this sheet of the modulus curve
                lo_u, hi_u = us[i], us[i + 1]
                plo = p0
                for _ in range(80):
                    mid = 0.5 * (lo_u + hi_u)
                    e2 = math.exp(2.0 * mid)
                    d = max(4.0 * b * b * e2 - mid * mid * (e2 - 1.0) ** 2, 0.0)
                    vm = (b * (e2 + 1.0) + sheet * math.sqrt(d)) / (e2 - 1.0)
                    pm = _odd_phase(complex(mid, vm), b)
                    if plo * pm <= 0:
                        hi_u = mid
                    else:
                        lo_u, plo = mid, pm
                e2 = math.exp(2.0 * lo_u)
                d = max(4.0 * b * b * e2 - lo_u * lo_u * (e2 - 1.0) ** 2, 0.0)
                cand = complex(lo_u, (b * (e2 + 1.0) + sheet * math.sqrt(d))
                               / (e2 - 1.0))
            else:
                continue
            tau = _newton_polish(cand, b)
            if tau.real <= 0:
                continue
            if _odd_equation_residual(tau, b) > 1e-10:
                continue
            if all(abs(tau - t) > 1e-8 for t in taus_found):
                taus_found.append(tau)
    if not taus_found:
        raise NoRoot(
            f"no phase match on either modulus branch (|b| = {b:g} too small)")

    roots = []
    for tau in taus_found:
        if conj:
            tau = tau.conjugate()
        kap = tau / (4.0 * p.epsilon)
        s = np.sqrt(complex(kap * kap - omega * omega))
        cls = "unstable" if s.real > 1e-10 * max(1.0, abs(s)) else "neutral"
        roots.append(StabilityRoot(
            omega=float(omega), kappa=kap, growth=complex(s),
            classification=cls,
            residual=_odd_equation_residual(tau, b if not conj else -b)))
    # most unstable first; the root set accumulates near the imaginary axis
    roots.sort(key=lambda r: (-r.growth.real, abs(r.kappa.imag)))
    return roots


def wave_roots(p: StripProblem, omegas=None) -> list[StabilityRoot]:
    """Sweep wavenumbers (default ``2 pi n``, n = 1..64) and collect the
    wave-flow modes; odd-order wavenumbers without a phase match are
    skipped rather than raising."""
    if omegas is None:
        omegas = 2.0 * math.pi * np.arange(1, 65)
    out: list[StabilityRoot] = []
    for w in omegas:
        if p.k % 2 == 0:
            try:
                out.append(wave_even_root(p, float(w)))
            except NoRoot:
                continue
        else:
            try:
                out.extend(wave_odd_roots(p, float(w)))
            except NoRoot:
                continue
    return out


def spectral_derivative(row: np.ndarray, order: int,
                        mode_cut: int | None = None) -> np.ndarray:
    """Periodic d^order/dx^order on [0, 1) via the FFT.

    ``mode_cut`` zeroes every Fourier mode above that index first.  The
    boundary perturbation's growth rate increases with wavenumber, so a
    simulation meant to confirm the rate of one analyzed mode must keep
    the perturbation from touching faster-growing ones.
    """
    n = row.size
    wavenumbers = 2j * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
    spec = np.fft.rfft(row) * wavenumbers ** order
    if mode_cut is not None:
        spec[mode_cut + 1:] = 0.0
    return np.fft.irfft(spec, n=n)


@dataclass
class StripTrace:
    """Strip simulation record: per-step sup norms and the final field."""

    times: np.ndarray
    sup: np.ndarray
    field: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dt: float

    def growth_rate(self, tail: float = 0.5) -> float:
        """Log-linear fit of the sup norm over the trailing fraction."""
        good = np.isfinite(self.sup) & (self.sup > 0)
        if good.sum() < 2:
            raise ValueError("not enough usable samples for a growth fit")
        t, s = self.times[good], np.log(self.sup[good])
        cut = t[0] + (1.0 - tail) * (t[-1] - t[0])
        sel = t >= cut
        if sel.sum() < 2:
            raise ValueError("not enough usable samples for a growth fit")
        return float(np.polyfit(t[sel], s[sel], 1)[0])


def _top_ghost(field: np.ndarray, closure: str, p: StripProblem, h: float,
               mode_cut: int | None):
    if closure == "exact":
        return field[-2] + 2.0 * h * p.alpha * spectral_derivative(
            field[-1], p.k, mode_cut)
    weights = {"symmetric4": SYMMETRIC4, "onesided4": ONESIDED4}.get(closure)
    if weights is None:
        raise ValueError(f"unknown closure {closure!r}")
    row = field[-2]
    out = np.zeros_like(row)
    for j, w in weights.items():
        out += w * np.roll(row, -j)
    return out


def strip_simulate(p: StripProblem, nx: int, until: float,
                   closure: str = "exact", dt: float | None = None,
                   ic=None, velocity=None, mode_cut: int | None = None,
                   sup_limit: float = 1e120) -> StripTrace:
    """Direct lattice evolution of the parabolic or wave strip flow.

    The lattice is square with spacing ``1/nx``; the strip height must be
    a whole number of cells.  The bottom ghost row mirrors (zero Neumann);
    the top ghost row comes from ``closure``: one of the two fourth-order
    rows, or ``"exact"``, which imposes the tangential-derivative
    perturbation spectrally (optionally bandlimited to ``mode_cut`` so one
    analyzed mode's growth is measurable before faster wavenumbers take
    over).  ``ic`` and ``velocity`` are callables of the node coordinate
    arrays ``(X, Y)``.
    """
    if p.flow not in ("parabolic", "wave"):
        raise ValueError("strip_simulate handles parabolic and wave flows")
    h = 1.0 / nx
    n_rows = 2.0 * p.epsilon / h
    if abs(n_rows - round(n_rows)) > 1e-9 or round(n_rows) < 2:
        raise ValueError("strip height must be a whole number (>= 2) of cells")
    n_rows = int(round(n_rows))
    x = np.arange(nx) * h
    y = -p.epsilon + np.arange(n_rows + 1) * h
    yy, xx = np.meshgrid(y, x, indexing="ij")

    field = np.zeros((n_rows + 1, nx)) if ic is None else np.array(ic(xx, yy), dtype=float)
    if ic is None:
        field[:] = np.cos(2.0 * np.pi * xx)

    def lap(v):
        vxx = (np.roll(v, -1, axis=1) - 2.0 * v + np.roll(v, 1, axis=1)) / (h * h)
        top = _top_ghost(v, closure, p, h, mode_cut)
        up = np.vstack([v[1:], top[None, :]])
        down = np.vstack([v[1][None, :], v[:-1]])
        vyy = (up - 2.0 * v + down) / (h * h)
        return vxx + p.mu * vyy

    if p.flow == "parabolic":
        if dt is None:
            dt = h * h / (4.0 * (1.0 + p.mu))
        n_steps = int(math.ceil(until / dt))
        times = np.empty(n_steps)
        sups = np.empty(n_steps)
        done = 0
        for step in range(1, n_steps + 1):
            field = field + dt * (lap(field) - p.c * field)
            times[step - 1] = step * dt
            s = float(np.max(np.abs(field)))
            sups[step - 1] = s
            done = step
            if not math.isfinite(s) or s > sup_limit:
                break
        return StripTrace(times[:done], sups[:done], field, x, y, dt)

    # wave flow
    if dt is None:
        dt = 0.5 * h / math.sqrt(1.0 + p.mu)
    vel = np.zeros_like(field) if velocity is None else np.array(velocity(xx, yy), dtype=float)
    prev = field
    field = field + dt * vel + 0.5 * dt * dt * lap(field)
    n_steps = int(math.ceil(until / dt)) - 1
    times = np.empty(n_steps + 1)
    sups = np.empty(n_steps + 1)
    times[0] = dt
    sups[0] = float(np.max(np.abs(field)))
    done = 1
    for step in range(1, n_steps + 1):
        nxt = 2.0 * field - prev + dt * dt * lap(field)
        prev, field = field, nxt
        times[step] = (step + 1) * dt
        s = float(np.max(np.abs(field)))
        sups[step] = s
        done = step + 1
        if not math.isfinite(s) or s > sup_limit:
            break
    return StripTrace(times[:done], sups[:done], field, x, y, dt)
