"""Spectral Galerkin solver for the forced viscous Burgers equation.

Solves, in sine-coefficient space,

    d_t u - nu d_x^2 u + u d_x u = f(t, x),     u(0) = u0,

and the generalized form with an extra state shift v inside the
nonlinearity and w inside the dissipative term,

    d_t u - nu d_x^2 (u + w) + (u + v) d_x (u + v) = f(t, x),

whose resolving operator with v = w = zeta is the "extended" system used
by the control-synthesis layer.

Time stepping is classical RK4 under the exact heat integrating factor,
so the stiff linear term is handled exactly and the design order applies
to the nonlinear and forcing parts only.  Steps are aligned to every
breakpoint the forcing signals declare: a step never straddles a
discontinuity, which the fast-oscillation cancellation estimates require.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .signals import ControlSignal
from .spectral import SineState, _sym_product_arrays

__all__ = [
    "SolveConfig",
    "Trajectory",
    "SolverError",
    "BlowUpError",
    "solve",
    "solve_general",
    "energy_profile",
]

#: coefficient magnitude beyond which a run is declared blown up
BLOWUP_LIMIT = 1e12

#: fraction of the state norm allowed in the top quarter of the spectrum
TAIL_FRACTION_LIMIT = 0.75


class SolverError(RuntimeError):
    pass


class BlowUpError(SolverError):
    """Raised when coefficients overflow or stop being finite.

    Carries the model time at which the failure was detected.
    """

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class SolveConfig:
    """Discretization parameters for one run."""

    nu: float
    T: float
    dt: float
    M: int
    record_every: int = 1

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")
        if self.T <= 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.dt <= 0 or self.dt > self.T:
            raise ValueError(f"time step must lie in (0, T], got {self.dt}")
        if self.M < 1:
            raise ValueError("truncation order M must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def replace(self, **kw) -> "SolveConfig":
        data = dict(nu=self.nu, T=self.T, dt=self.dt, M=self.M, record_every=self.record_every)
        data.update(kw)
        return SolveConfig(**data)


@dataclass
class Trajectory:
    """Recorded frames of one run: times[i] paired with coeffs[i, :]."""

    times: np.ndarray
    coeffs: np.ndarray
    config: SolveConfig = field(repr=False, default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if self.times.ndim != 1 or self.coeffs.shape[0] != self.times.size:
            raise ValueError("need one coefficient row per time")
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must strictly increase from 0")

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def order(self) -> int:
        return self.coeffs.shape[1]

    def state(self, i: int) -> SineState:
        return SineState(self.coeffs[i])

    @property
    def terminal(self) -> SineState:
        return SineState(self.coeffs[-1])

    @property
    def states(self) -> list[SineState]:
        return [SineState(row) for row in self.coeffs]

    def __len__(self) -> int:
        return self.times.size


def _effective_order(u: SineState) -> int:
    nz = np.nonzero(u.coeffs)[0]
    return int(nz[-1]) + 1 if nz.size else 0


def _check_truncation(cfg: SolveConfig, orders: list[int]) -> None:
    content = max(orders, default=0)
    if content == 0:
        return
    if cfg.M < 2 * content:
        raise ValueError(
            f"truncation order M={cfg.M} below the quadratic interaction margin "
            f"(need M >= {2 * content} for inputs of order {content})"
        )


def _step_times(cfg: SolveConfig, signals: list[ControlSignal]) -> np.ndarray:
    """All step edges: breakpoints joined by uniform substeps of size <= dt."""
    pts = [np.array([0.0, cfg.T])]
    for s in signals:
        if s.horizon is not None and s.horizon < cfg.T - 1e-9:
            raise ValueError(f"signal {s!r} is not defined on all of [0, T={cfg.T}]")
        bps = np.asarray(s.breakpoints(cfg.T), dtype=float)
        pts.append(bps[(bps > 0.0) & (bps < cfg.T)])
    anchors = np.unique(np.concatenate(pts))
    # collapse breakpoints closer than float resolution permits
    keep = np.concatenate([[True], np.diff(anchors) > 1e-13])
    anchors = anchors[keep]
    if anchors[-1] != cfg.T:
        anchors = np.append(anchors[:-1], cfg.T)
    edges = [np.array([0.0])]
    for a, b in zip(anchors[:-1], anchors[1:]):
        n = max(1, math.ceil((b - a) / cfg.dt - 1e-9))
        edges.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(edges)


def _tail_ok(a: np.ndarray) -> bool:
    m = a.size
    tail = max(1, m // 4)
    total = float(np.dot(a, a))
    if total < 1e-16:
        return True
    frac = float(np.dot(a[m - tail :], a[m - tail :])) / total
    return frac <= TAIL_FRACTION_LIMIT**2


class _SignalEval:
    """Per-step caching evaluator mapping a signal to padded arrays."""

    def __init__(self, signal: ControlSignal, m: int):
        self.signal = signal
        self.m = m
        self._seg = (np.nan, np.nan)
        self._const: np.ndarray | None = None

    def prepare(self, a: float, b: float) -> None:
        if (a, b) == self._seg:
            return
        self._seg = (a, b)
        v = self.signal.constant_on(a, b)
        self._const = None if v is None else v.padded(self.m)

    def __call__(self, t: float, seg_end: float) -> np.ndarray:
        if self._const is not None:
            return self._const
        return self.signal.at(t, left=(t >= seg_end)).padded(self.m)


def _truncated_b(z: np.ndarray, m: int) -> np.ndarray:
    return 0.5 * _sym_product_arrays(z, z)[:m]


def _integrate(a0: np.ndarray, cfg: SolveConfig, nonlinear, step_edges: np.ndarray) -> Trajectory:
    """March IF-RK4 over the precomputed step edges.

    ``nonlinear(t, a, t0, t1)`` evaluates the non-stiff right-hand side for
    the step [t0, t1]; every step lies inside one smooth segment of the
    forcing, so evaluations at t == t1 take the forcing's left limit.
    """
    m = cfg.M
    lam = -cfg.nu * np.arange(1, m + 1, dtype=float) ** 2
    exp_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    a = a0.copy()
    rec_t = [0.0]
    rec_a = [a.copy()]
    nsteps = step_edges.size - 1
    for i in range(nsteps):
        t0, t1 = step_edges[i], step_edges[i + 1]
        h = t1 - t0
        key = round(h, 15)
        if key not in exp_cache:
            e_half = np.exp(lam * (h / 2.0))
            exp_cache[key] = (e_half, e_half * e_half)
        e1, e2 = exp_cache[key]

        n1 = nonlinear(t0, a, t0, t1)
        n2 = nonlinear(t0 + h / 2.0, e1 * (a + (h / 2.0) * n1), t0, t1)
        n3 = nonlinear(t0 + h / 2.0, e1 * a + (h / 2.0) * n2, t0, t1)
        n4 = nonlinear(t1, e2 * a + h * e1 * n3, t0, t1)
        a = e2 * a + (h / 6.0) * (e2 * n1 + 2.0 * e1 * (n2 + n3) + n4)

        bad = not np.all(np.isfinite(a))
        if bad or np.max(np.abs(a)) > BLOWUP_LIMIT:
            raise BlowUpError(
                f"solution blow-up at t={t1:.6g}: "
                + ("non-finite coefficients" if bad else f"coefficient exceeds {BLOWUP_LIMIT:g}"),
                time=float(t1),
            )
        if (i + 1) % cfg.record_every == 0 or i == nsteps - 1:
            if not _tail_ok(a):
                raise SolverError(
                    f"spectral truncation check failed at t={t1:.6g}: the top quarter of "
                    f"the M={m} modes carries more than {TAIL_FRACTION_LIMIT:.0%} of the norm; "
                    "increase M"
                )
            rec_t.append(float(t1))
            rec_a.append(a.copy())
    return Trajectory(np.array(rec_t), np.stack(rec_a), cfg)


def solve(u0: SineState, f: ControlSignal, cfg: SolveConfig) -> Trajectory:
    """Resolve the Burgers Cauchy problem; the terminal frame is R_T(u0, f)."""
    _check_truncation(cfg, [_effective_order(u0), f.order])
    edges = _step_times(cfg, [f])
    feval = _SignalEval(f, cfg.M)
    m = cfg.M

    def nonlinear(t, a, t0, t1):
        feval.prepare(t0, t1)
        return -_truncated_b(a, m) + feval(t, t1)

    return _integrate(u0.padded(m), cfg, nonlinear, edges)


def solve_general(
    u0: SineState,
    v: ControlSignal,
    w: ControlSignal,
    f: ControlSignal,
    cfg: SolveConfig,
) -> Trajectory:
    """Resolve the shifted system; with v = w = zeta this is the extended
    resolving operator, and with v = w = 0 it reduces to ``solve``."""
    _check_truncation(cfg, [_effective_order(u0), f.order, v.order, w.order])
    edges = _step_times(cfg, [f, v, w])
    m = cfg.M
    k2 = np.arange(1, m + 1, dtype=float) ** 2
    feval = _SignalEval(f, m)
    veval = _SignalEval(v, m)
    weval = _SignalEval(w, m)

    def nonlinear(t, a, t0, t1):
        feval.prepare(t0, t1)
        veval.prepare(t0, t1)
        weval.prepare(t0, t1)
        z = a + veval(t, t1)
        return -_truncated_b(z, m) - cfg.nu * k2 * weval(t, t1) + feval(t, t1)

    return _integrate(u0.padded(m), cfg, nonlinear, edges)


def energy_profile(traj: Trajectory, nu: float) -> np.ndarray:
    """The quantity ||u(t)||^2 + 2 nu int_0^t ||d_x u||^2 ds per frame.

    Returns an (n, 2) array of (t, value); the time integral uses the
    trapezoid rule on the recorded frames.
    """
    k2 = np.arange(1, traj.order + 1, dtype=float) ** 2
    half_pi = np.pi / 2.0
    l2sq = half_pi * np.sum(traj.coeffs**2, axis=1)
    h1sq = half_pi * np.sum(k2 * traj.coeffs**2, axis=1)
    integral = np.concatenate([[0.0], np.cumsum(np.diff(traj.times) * 0.5 * (h1sq[:-1] + h1sq[1:]))])
    return np.column_stack([traj.times, l2sq + 2.0 * nu * integral])
