"""Time-dependent forcings on [0, T] with values in the sine-mode space.

Four concrete families cover the artifact's needs: constant in time,
piecewise constant (the workhorse for oscillating controls), sampled with
interpolation, and closed-form analytic generators.  Signals compose by
addition and scalar multiplication, project mode-wise, and expose their
time-primitive F(t) = int_0^t f(s) ds, which is exact for the piecewise
and ramp families and Gauss-Legendre quadrature otherwise.

Evaluation at a discontinuity is right-continuous by default; integrators
pass ``left=True`` when they need the limit from within the preceding
segment.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .spectral import SineState, l2_norm, zero_state, single_mode

__all__ = [
    "ControlSignal",
    "ConstantSignal",
    "PiecewiseConstantSignal",
    "SampledSignal",
    "AnalyticSignal",
    "SumSignal",
    "ScaledSignal",
    "ProjectedSignal",
    "zero_signal",
    "alternating_signal",
    "snap_to_piecewise",
    "l1_l2_norm",
    "manufactured_forcing",
]

# Gauss-Legendre nodes per smooth gap when no closed-form primitive exists.
_GL_NODES = 12


def _gl_rule(n: int = _GL_NODES):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return nodes, weights


_GL_X, _GL_W = _gl_rule()


class ControlSignal:
    """Base class: a map t -> SineState on [0, T] (or all of R+)."""

    #: maximum sine-mode order any value of the signal can carry
    order: int = 1

    def at(self, t: float, left: bool = False) -> SineState:
        raise NotImplementedError

    def breakpoints(self, T: float) -> np.ndarray:
        """Interior times in (0, T) an integrator must not step across."""
        return np.empty(0)

    @property
    def horizon(self) -> float | None:
        """Largest time the signal is defined for (None = unbounded)."""
        return None

    def constant_on(self, a: float, b: float) -> SineState | None:
        """The signal's value if it is constant on [a, b], else None."""
        return None

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        """F(t) = int_0^t f for each t in ``times`` (sorted, in [0, T]).

        Returns an array of shape (len(times), order).  The generic
        implementation integrates gap by gap with Gauss-Legendre panels,
        splitting at the signal's breakpoints; subclasses override with
        closed forms where available.
        """
        times = np.asarray(times, dtype=float)
        tmax = float(times[-1]) if times.size else 0.0
        bps = self.breakpoints(tmax)
        grid = np.unique(np.concatenate([[0.0], times, bps[(bps > 0) & (bps < tmax)]]))
        cumulative = np.zeros((grid.size, self.order))
        acc = np.zeros(self.order)
        for i, (a, b) in enumerate(zip(grid[:-1], grid[1:])):
            half = 0.5 * (b - a)
            mid = 0.5 * (a + b)
            for xi, wi in zip(_GL_X, _GL_W):
                acc = acc + half * wi * self.at(mid + half * xi).padded(self.order)
            cumulative[i + 1] = acc
        return cumulative[np.searchsorted(grid, times)]

    def primitive(self, t: float) -> SineState:
        return SineState(self.primitive_batch(np.array([t]))[0])

    def __add__(self, other: "ControlSignal") -> "ControlSignal":
        return SumSignal([self, other])

    def __mul__(self, c: float) -> "ControlSignal":
        return ScaledSignal(self, float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "ControlSignal":
        return ScaledSignal(self, -1.0)

    def projected(self, n: int) -> "ControlSignal":
        """Pointwise-in-time orthogonal projection onto E_n."""
        return ProjectedSignal(self, n)


class ConstantSignal(ControlSignal):
    """f(t) = value for all t."""

    def __init__(self, value: SineState):
        self.value = value
        self.order = value.order

    def at(self, t: float, left: bool = False) -> SineState:
        return self.value

    def constant_on(self, a: float, b: float) -> SineState | None:
        return self.value

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        return times[:, None] * self.value.padded(self.order)[None, :]

    def projected(self, n: int) -> "ControlSignal":
        return ConstantSignal(self.value.truncated(n))

    def __repr__(self) -> str:
        return f"ConstantSignal(order={self.order})"


def zero_signal() -> ConstantSignal:
    return ConstantSignal(zero_state(1))


class PiecewiseConstantSignal(ControlSignal):
    """Piecewise-constant in time: value_j on [t_j, t_{j+1})."""

    def __init__(self, durations: Sequence[float], values: Sequence[SineState]):
        durations = np.asarray(durations, dtype=float)
        if len(durations) != len(values) or len(values) == 0:
            raise ValueError("need one duration per value (at least one)")
        if np.any(durations <= 0):
            raise ValueError("piece durations must be positive")
        self.durations = durations
        self.boundaries = np.concatenate([[0.0], np.cumsum(durations)])
        self.order = max(v.order for v in values)
        self._matrix = np.stack([v.padded(self.order) for v in values])
        self.values = [SineState(row) for row in self._matrix]

    @classmethod
    def from_matrix(cls, durations, matrix) -> "PiecewiseConstantSignal":
        return cls(durations, [SineState(row) for row in np.atleast_2d(matrix)])

    @property
    def horizon(self) -> float:
        return float(self.boundaries[-1])

    def npieces(self) -> int:
        return len(self.durations)

    def _index(self, t: float, left: bool) -> int:
        side = "left" if left else "right"
        j = int(np.searchsorted(self.boundaries, t, side=side)) - 1
        return min(max(j, 0), len(self.durations) - 1)

    def at(self, t: float, left: bool = False) -> SineState:
        return self.values[self._index(t, left)]

    def breakpoints(self, T: float) -> np.ndarray:
        inner = self.boundaries[1:-1]
        return inner[(inner > 0) & (inner < T)]

    def constant_on(self, a: float, b: float) -> SineState | None:
        ja = self._index(a, left=False)
        jb = self._index(b, left=True)
        return self.values[ja] if ja == jb else None

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        cum = np.concatenate(
            [np.zeros((1, self.order)), np.cumsum(self.durations[:, None] * self._matrix, axis=0)]
        )
        idx = np.clip(np.searchsorted(self.boundaries, times, side="right") - 1, 0, len(self.durations) - 1)
        return cum[idx] + (times - self.boundaries[idx])[:, None] * self._matrix[idx]

    def projected(self, n: int) -> "PiecewiseConstantSignal":
        m = min(n, self.order)
        return PiecewiseConstantSignal.from_matrix(self.durations, self._matrix[:, :m])

    def l1_l2(self) -> float:
        """Exact L1-in-time, L2-in-space norm of the signal."""
        norms = np.array([l2_norm(v) for v in self.values])
        return float(np.sum(self.durations * norms))

    def __repr__(self) -> str:
        return f"PiecewiseConstantSignal(pieces={self.npieces()}, order={self.order}, T={self.horizon:g})"


class SampledSignal(ControlSignal):
    """Time-stamped states with 'linear' or 'previous' interpolation."""

    def __init__(self, times: Sequence[float], states: Sequence[SineState], interpolation: str = "linear"):
        times = np.asarray(times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("need at least two sample times")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ValueError("sample times must start at 0 and strictly increase")
        if len(states) != times.size:
            raise ValueError("need one state per sample time")
        if interpolation not in ("linear", "previous"):
            raise ValueError(f"unknown interpolation {interpolation!r}; use 'linear' or 'previous'")
        self.times = times
        self.order = max(s.order for s in states)
        self._matrix = np.stack([s.padded(self.order) for s in states])
        self.interpolation = interpolation

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def at(self, t: float, left: bool = False) -> SineState:
        if self.interpolation == "previous":
            side = "left" if left else "right"
            j = min(max(int(np.searchsorted(self.times, t, side=side)) - 1, 0), len(self.times) - 2)
            return SineState(self._matrix[j])
        t = min(max(t, self.times[0]), self.times[-1])
        j = min(int(np.searchsorted(self.times, t, side="right")) - 1, len(self.times) - 2)
        w = (t - self.times[j]) / (self.times[j + 1] - self.times[j])
        return SineState((1 - w) * self._matrix[j] + w * self._matrix[j + 1])

    def breakpoints(self, T: float) -> np.ndarray:
        inner = self.times[1:-1]
        return inner[(inner > 0) & (inner < T)]

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        dt = np.diff(self.times)
        if self.interpolation == "previous":
            seg = dt[:, None] * self._matrix[:-1]
        else:
            seg = dt[:, None] * 0.5 * (self._matrix[:-1] + self._matrix[1:])
        cum = np.concatenate([np.zeros((1, self.order)), np.cumsum(seg, axis=0)])
        out = np.empty((times.size, self.order))
        for i, t in enumerate(times):
            j = min(max(int(np.searchsorted(self.times, t, side="right")) - 1, 0), len(dt) - 1)
            s = t - self.times[j]
            if self.interpolation == "previous":
                out[i] = cum[j] + s * self._matrix[j]
            else:
                w = s / dt[j]
                mid = self._matrix[j] + 0.5 * w * (self._matrix[j + 1] - self._matrix[j])
                out[i] = cum[j] + s * mid
        return out

    def __repr__(self) -> str:
        return f"SampledSignal(samples={len(self.times)}, order={self.order}, {self.interpolation})"


class AnalyticSignal(ControlSignal):
    """Closed-form generator t -> SineState, with optional exact primitive."""

    def __init__(
        self,
        fn: Callable[[float], SineState],
        order: int,
        name: str = "analytic",
        primitive_fn: Callable[[float], SineState] | None = None,
        breakpoint_fn: Callable[[float], np.ndarray] | None = None,
        horizon: float | None = None,
    ):
        self.fn = fn
        self.order = order
        self.name = name
        self.primitive_fn = primitive_fn
        self.breakpoint_fn = breakpoint_fn
        self._horizon = horizon

    @property
    def horizon(self) -> float | None:
        return self._horizon

    def at(self, t: float, left: bool = False) -> SineState:
        return self.fn(t)

    def breakpoints(self, T: float) -> np.ndarray:
        if self.breakpoint_fn is None:
            return np.empty(0)
        bps = np.asarray(self.breakpoint_fn(T), dtype=float)
        return bps[(bps > 0) & (bps < T)]

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        if self.primitive_fn is None:
            return super().primitive_batch(times)
        return np.stack([self.primitive_fn(t).padded(self.order) for t in np.asarray(times, dtype=float)])

    def __repr__(self) -> str:
        return f"AnalyticSignal({self.name!r}, order={self.order})"


class SumSignal(ControlSignal):
    """Pointwise sum of signals."""

    def __init__(self, parts: Sequence[ControlSignal]):
        flat: list[ControlSignal] = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, SumSignal) else [p])
        if not flat:
            raise ValueError("sum of no signals")
        self.parts = flat
        self.order = max(p.order for p in flat)

    @property
    def horizon(self) -> float | None:
        hs = [p.horizon for p in self.parts if p.horizon is not None]
        return min(hs) if hs else None

    def at(self, t: float, left: bool = False) -> SineState:
        acc = np.zeros(self.order)
        for p in self.parts:
            acc += p.at(t, left=left).padded(self.order)
        return SineState(acc)

    def breakpoints(self, T: float) -> np.ndarray:
        pieces = [p.breakpoints(T) for p in self.parts]
        return np.unique(np.concatenate(pieces)) if pieces else np.empty(0)

    def constant_on(self, a: float, b: float) -> SineState | None:
        acc = np.zeros(self.order)
        for p in self.parts:
            v = p.constant_on(a, b)
            if v is None:
                return None
            acc += v.padded(self.order)
        return SineState(acc)

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        out = np.zeros((len(times), self.order))
        for p in self.parts:
            out[:, : p.order] += p.primitive_batch(times)
        return out

    def __repr__(self) -> str:
        return f"SumSignal({self.parts!r})"


class ScaledSignal(ControlSignal):
    def __init__(self, inner: ControlSignal, factor: float):
        self.inner = inner
        self.factor = factor
        self.order = inner.order

    @property
    def horizon(self) -> float | None:
        return self.inner.horizon

    def at(self, t: float, left: bool = False) -> SineState:
        return self.factor * self.inner.at(t, left=left)

    def breakpoints(self, T: float) -> np.ndarray:
        return self.inner.breakpoints(T)

    def constant_on(self, a: float, b: float) -> SineState | None:
        v = self.inner.constant_on(a, b)
        return None if v is None else self.factor * v

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        return self.factor * self.inner.primitive_batch(times)


class ProjectedSignal(ControlSignal):
    """Mode-wise truncation of another signal onto E_n, pointwise in t."""

    def __init__(self, inner: ControlSignal, n: int):
        if n < 1:
            raise ValueError("projection order must be >= 1")
        self.inner = inner
        self.n = n
        self.order = min(inner.order, n)

    @property
    def horizon(self) -> float | None:
        return self.inner.horizon

    def at(self, t: float, left: bool = False) -> SineState:
        return self.inner.at(t, left=left).truncated(self.n)

    def breakpoints(self, T: float) -> np.ndarray:
        return self.inner.breakpoints(T)

    def constant_on(self, a: float, b: float) -> SineState | None:
        v = self.inner.constant_on(a, b)
        return None if v is None else v.truncated(self.n)

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        return self.inner.primitive_batch(times)[:, : self.order]

    def projected(self, n: int) -> "ControlSignal":
        return ProjectedSignal(self.inner, min(self.n, n))

    def __repr__(self) -> str:
        return f"ProjectedSignal(n={self.n}, inner={self.inner!r})"


def alternating_signal(state: SineState, m: int, T: float) -> PiecewiseConstantSignal:
    """+state / -state on 2m equal subintervals of [0, T]."""
    if m < 1:
        raise ValueError("m must be >= 1")
    durations = np.full(2 * m, T / (2 * m))
    values = [state if j % 2 == 0 else -state for j in range(2 * m)]
    return PiecewiseConstantSignal(durations, values)


def snap_to_piecewise(
    signal: ControlSignal,
    pieces: int,
    T: float,
    boundaries: np.ndarray | None = None,
) -> PiecewiseConstantSignal:
    """Piecewise-constant approximation by piece averages.

    Averages minimize the L2-in-time error per piece and are computed from
    the signal's primitive (exact where the signal has a closed form).  A
    custom boundary grid overrides the uniform one; it must start at 0 and
    end at T.
    """
    if boundaries is None:
        if pieces < 1:
            raise ValueError("need at least one piece")
        boundaries = np.linspace(0.0, T, pieces + 1)
    else:
        boundaries = np.asarray(boundaries, dtype=float)
        if boundaries[0] != 0.0 or abs(boundaries[-1] - T) > 1e-12 or np.any(np.diff(boundaries) <= 0):
            raise ValueError("boundaries must increase from 0 to T")
    prim = signal.primitive_batch(boundaries)
    widths = np.diff(boundaries)
    averages = np.diff(prim, axis=0) / widths[:, None]
    return PiecewiseConstantSignal.from_matrix(widths, averages)


def l1_l2_norm(f: ControlSignal, T: float) -> float:
    """The norm int_0^T ||f(t)||_{L2} dt; exact for piecewise-constant f."""
    if isinstance(f, PiecewiseConstantSignal) and abs(f.horizon - T) <= 1e-9:
        return f.l1_l2()
    if isinstance(f, ConstantSignal):
        return T * l2_norm(f.value)
    bps = f.breakpoints(T)
    grid = np.unique(np.concatenate([[0.0, T], bps]))
    total = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        for xi, wi in zip(_GL_X, _GL_W):
            total += half * wi * l2_norm(f.at(mid + half * xi))
    return total


def manufactured_forcing(nu: float) -> AnalyticSignal:
    """Forcing whose exact solution from sin(x) is u(t,x) = e^{-t} sin x.

    Substituting u into the forced Burgers equation gives
    f(t) = (nu - 1) e^{-t} sin x + (1/2) e^{-2t} sin 2x in closed form,
    which makes it a convergence oracle for the time integrator.
    """

    def fn(t: float) -> SineState:
        return SineState(np.array([(nu - 1.0) * np.exp(-t), 0.5 * np.exp(-2.0 * t)]))

    def prim(t: float) -> SineState:
        return SineState(
            np.array([(nu - 1.0) * (1.0 - np.exp(-t)), 0.25 * (1.0 - np.exp(-2.0 * t))])
        )

    return AnalyticSignal(fn, order=2, name="manufactured", primitive_fn=prim)
