"""Independent certification of a synthesized gain.

Everything here works from the closed-loop matrices and the original
problem data only, so it cross-checks the solver rather than trusting it:
spectral stability margins, an H-infinity norm estimate by frequency sweep
with golden-section peak refinement, vertexwise feasibility of a candidate
(W, mu) pair, and impulse-response simulation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError
from .model import PlantModel
from .problem import ExtendedMatrices, eval_theta1

# Default frequency grid: log-spaced over [1e-3, 1e4] rad/s.
DEFAULT_FMIN = 1e-3
DEFAULT_FMAX = 1e4
DEFAULT_NPTS = 2000

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ClosedLoop:
    """Closed-loop data A_c = A_i - B2_i K, C_c = C - D K for one vertex."""

    ac: np.ndarray
    cc: np.ndarray
    b1: np.ndarray
    vertex: int = 0


def closed_loop(
    plant: PlantModel, vertex: tuple[np.ndarray, np.ndarray], gain: np.ndarray, index: int = 0
) -> ClosedLoop:
    """Closed loop of one extreme system (A_i, B2_i) under u = -K x."""
    ai, b2i = vertex
    gain = np.asarray(gain, dtype=float)
    if gain.shape != (plant.m, plant.n):
        raise DimensionError(f"gain must be {plant.m}x{plant.n}, got {gain.shape}")
    return ClosedLoop(
        ac=ai - b2i @ gain,
        cc=plant.C - plant.D @ gain,
        b1=plant.B1.copy(),
        vertex=index,
    )


def stability_margin(cl: ClosedLoop) -> float:
    """Spectral abscissa of A_c; negative means asymptotically stable."""
    return float(kernels.eig_general(cl.ac).real.max())


@dataclass(frozen=True)
class SweepResult:
    frequencies: np.ndarray
    sigma_max: np.ndarray
    peak: float
    peak_frequency: float


def _gain_at(cl: ClosedLoop, omega: float) -> float:
    n = cl.ac.shape[0]
    try:
        h = cl.cc @ np.linalg.solve(1j * omega * np.eye(n) - cl.ac, cl.b1)
    except np.linalg.LinAlgError:
        # jw hit an eigenvalue exactly; impossible for a stable loop
        return 0.0
    return kernels.max_singular_value(h)


def _gain_grid(cl: ClosedLoop, omegas: np.ndarray) -> np.ndarray:
    """Response gain at each frequency; singular points (only possible for a
    marginally stable or unstable loop) come back as NaN."""
    n = cl.ac.shape[0]
    pencil = 1j * omegas[:, None, None] * np.eye(n) - cl.ac
    rhs = np.broadcast_to(cl.b1, (omegas.size, *cl.b1.shape))
    try:
        resolvent = np.linalg.solve(pencil, rhs)
    except np.linalg.LinAlgError:
        out = np.full(omegas.size, np.nan)
        for k, omega in enumerate(omegas):
            try:
                h = np.linalg.solve(1j * omega * np.eye(n) - cl.ac, cl.b1)
            except np.linalg.LinAlgError:
                continue
            out[k] = kernels.max_singular_value(cl.cc @ h)
        return out
    return np.linalg.svd(cl.cc @ resolvent, compute_uv=False)[:, 0]


def hinf_sweep(
    cl: ClosedLoop,
    fmin: float = DEFAULT_FMIN,
    fmax: float = DEFAULT_FMAX,
    npts: int = DEFAULT_NPTS,
) -> SweepResult:
    """Largest singular value of the disturbance-to-output response vs omega.

    Evaluates a log-spaced grid and refines the peak by golden-section
    search on log-frequency around the grid maximizer. For a stable closed
    loop the refined peak estimates the H-infinity norm; for an unstable one
    a warning is emitted and the peak is just the sweep maximum.
    """
    if not (0 < fmin < fmax) or npts < 2:
        raise DimensionError("need 0 < fmin < fmax and npts >= 2")
    if stability_margin(cl) >= 0:
        warnings.warn(
            "closed loop is not asymptotically stable; sweep peak is not an "
            "H-infinity norm",
            stacklevel=2,
        )
    omegas = np.logspace(math.log10(fmin), math.log10(fmax), npts)
    values = _gain_grid(cl, omegas)
    singular = ~np.isfinite(values)
    if singular.any():
        warnings.warn(
            f"skipped {int(singular.sum())} frequencies where the pencil is singular",
            stacklevel=2,
        )
        omegas = omegas[~singular]
        values = values[~singular]

    imax = int(values.argmax())
    peak = float(values[imax])
    peak_freq = float(omegas[imax])

    # golden-section refinement on log10(omega) between the grid neighbors
    lo = math.log10(omegas[max(imax - 1, 0)])
    hi = math.log10(omegas[min(imax + 1, omegas.size - 1)])
    if hi > lo:
        a, b = lo, hi
        c = b - _INVPHI * (b - a)
        d = a + _INVPHI * (b - a)
        fc = _gain_at(cl, 10.0**c)
        fd = _gain_at(cl, 10.0**d)
        for _ in range(60):
            if fc > fd:
                b, d, fd = d, c, fc
                c = b - _INVPHI * (b - a)
                fc = _gain_at(cl, 10.0**c)
            else:
                a, c, fc = c, d, fd
                d = a + _INVPHI * (b - a)
                fd = _gain_at(cl, 10.0**d)
            best, best_x = (fc, c) if fc > fd else (fd, d)
            if best > peak:
                peak = float(best)
                peak_freq = float(10.0**best_x)
    return SweepResult(frequencies=omegas, sigma_max=values, peak=peak, peak_frequency=peak_freq)


@dataclass(frozen=True)
class VertexFeasibility:
    vertex: int
    theta1_max_eig: float
    feasible: bool


@dataclass(frozen=True)
class FeasibilityReport:
    """Vertexwise feasibility of (W, mu) plus the W and mu side conditions."""

    per_vertex: tuple[VertexFeasibility, ...]
    w_min_eig: float
    mu: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            all(v.feasible for v in self.per_vertex)
            and self.w_min_eig >= -self.tol
            and self.mu > 0.0
        )

    @property
    def worst_vertex(self) -> VertexFeasibility:
        return max(self.per_vertex, key=lambda v: v.theta1_max_eig)


def check_feasibility(
    ext: ExtendedMatrices, w: np.ndarray, mu: float, tol: float = 1e-6
) -> FeasibilityReport:
    """Evaluate the stability block at every vertex; pass iff max eig <= tol."""
    rows = []
    for i in range(ext.N):
        top = eval_theta1(ext, i, w, mu)
        max_eig = float(kernels.sym_eig(top).eigenvalues[0])
        rows.append(VertexFeasibility(i, max_eig, max_eig <= tol))
    w_min = float(kernels.sym_eig(w).eigenvalues[-1])
    return FeasibilityReport(tuple(rows), w_min, float(mu), tol)


def certified_attenuation(
    ext: ExtendedMatrices, w: np.ndarray, bisection_steps: int = 120
) -> tuple[float, float] | None:
    """Largest mu for which (W, mu) is feasible at every vertex, with gamma.

    The stability block is affine and monotone nondecreasing in mu (its mu
    coefficient B1 B1^T is PSD), so the largest feasible mu is found by
    bisection; the feasible end of the bracket is returned so the certificate
    never overstates mu. Returns None when even mu -> 0+ is infeasible.
    """

    def worst(mu: float) -> float:
        return max(
            float(kernels.sym_eig(eval_theta1(ext, i, w, mu)).eigenvalues[0])
            for i in range(ext.N)
        )

    if worst(0.0) > 0.0:
        return None
    hi = 1.0
    while worst(hi) <= 0.0:
        hi *= 2.0
        if hi > 1e16:
            break
    lo = 0.0
    for _ in range(bisection_steps):
        mid = 0.5 * (lo + hi)
        if worst(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    if lo <= 0.0:
        return None
    return lo, 1.0 / math.sqrt(lo)


@dataclass(frozen=True)
class ImpulseResponse:
    """State trajectories per disturbance channel: states[j, k] is x(t_k)
    for the impulse on channel j, realized as the initial state B1 e_j."""

    t: np.ndarray  # (steps + 1,)
    states: np.ndarray  # (l, steps + 1, n)


def impulse_response(cl: ClosedLoop, horizon: float, dt: float) -> ImpulseResponse:
    """Integrate dx = A_c x from x(0) = B1 e_j with a fixed-step RK4 scheme.

    The impulse enters as an equivalent initial condition, which is exact
    for an LTI system and avoids discretizing the impulse itself.
    """
    if dt <= 0 or horizon <= 0:
        raise DimensionError("horizon and dt must be positive")
    ac = cl.ac
    steps = max(1, int(round(horizon / dt)))
    x = cl.b1.copy()  # columns evolve all channels at once
    out = np.empty((steps + 1, *x.shape))
    out[0] = x
    for k in range(steps):
        k1 = ac @ x
        k2 = ac @ (x + 0.5 * dt * k1)
        k3 = ac @ (x + 0.5 * dt * k2)
        k4 = ac @ (x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = x
    t = np.arange(steps + 1) * dt
    return ImpulseResponse(t=t, states=out.transpose(2, 0, 1))
