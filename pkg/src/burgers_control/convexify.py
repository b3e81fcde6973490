"""Convex-combination controls, fast oscillation, and the extension trade.

Given a forcing direction eta1 with one mode too many, the builder returns
a drift eta and shift vectors zeta^j, one mode lower, such that for every
state u

    eta1 - B(u) = eta - sum_j alpha_j (B(u + zeta^j) - nu d_x^2 zeta^j)
                  + residual,

where B(u) = u d_x u.  With the shifts in +- pairs of equal weight the
cross terms cancel exactly and the residual equals eps^2 sum_j B(xi_j)
independently of u; eps is solved in closed form so the residual norm hits
the requested delta.  Cycling the shifts rapidly in time (m periods per
constancy interval) then reproduces the averaged dynamics up to errors
whose running primitive shrinks like 1/m, and the shift control can be
traded for an additive term d_t of a mollified copy that vanishes at both
endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .saturation import MEMBERSHIP_TOL, decompose_in_F
from .signals import (
    ConstantSignal,
    ControlSignal,
    PiecewiseConstantSignal,
    snap_to_piecewise,
    zero_signal,
)
from .solver import SolveConfig, solve, solve_general
from .spectral import (
    ModeSubspace,
    SineState,
    burgers_b,
    l2_distance,
    l2_norm,
    laplacian,
    zero_state,
)

__all__ = [
    "ConvexCombo",
    "ControlPair",
    "ReduceResult",
    "build_convex_combo",
    "fast_zeta",
    "reduce_control",
    "extend_to_single",
    "MollifiedSignal",
    "RampDerivativeSignal",
    "SimplexApprox",
    "piecewise_simplex_approx",
]

#: smallest usable shift scale before 1/eps^2 arithmetic degrades
_EPS_FLOOR = 1e-120


@dataclass(frozen=True)
class ConvexCombo:
    """Drift, weights and shift vectors replacing one forcing direction.

    ``residual_bound`` is the achieved norm of the u-independent residual
    and ``eps_scale`` the shift scale used; ``target`` is the direction
    the combination reproduces.
    """

    k: int
    target: SineState
    weights: np.ndarray
    shifts: list[SineState]
    drift: SineState
    residual_bound: float
    eps_scale: float
    residual_state: SineState = field(repr=False, default=None)

    @property
    def trivial(self) -> bool:
        return all(l2_norm(z) == 0.0 for z in self.shifts)

    def residual_at(self, u: SineState, nu: float) -> SineState:
        """The defect eta1 - B(u) - (eta - sum_j a_j (B(u+z^j) - nu z^j''))."""
        acc = self.target - burgers_b(u) - self.drift
        for a_j, z_j in zip(self.weights, self.shifts):
            acc = acc + a_j * (burgers_b(u + z_j) - nu * laplacian(z_j))
        return acc

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "weights": list(map(float, self.weights)),
            "shifts": [list(map(float, z.coeffs)) for z in self.shifts],
            "drift": list(map(float, self.drift.coeffs)),
            "residual_bound": float(self.residual_bound),
            "eps_scale": float(self.eps_scale),
        }


@dataclass(frozen=True)
class ControlPair:
    """An additive control eta and an internal shift control zeta."""

    eta: ControlSignal
    zeta: ControlSignal


def build_convex_combo(
    eta1: SineState,
    k: int,
    delta: float,
    nu: float,
    eps_inv_cap: float | None = None,
) -> ConvexCombo:
    """Build the convex combination reproducing eta1 over E_k within delta.

    The shift scale solves eps^2 ||sum_j B(xi_j)|| = delta exactly; the
    residual identity is verified on a probe set of states before the
    combination is returned.  ``eps_inv_cap`` optionally bounds the shift
    amplitude 1/eps by enlarging the piece's effective delta, trading
    reproduction accuracy for boundedness; the achieved residual is always
    recorded in ``residual_bound``.
    """
    if delta <= 0:
        raise ValueError(f"tolerance delta must be positive, got {delta}")
    terms = decompose_in_F(eta1, k)

    xis = [xi for (_, xi, _) in terms]
    b_sum = zero_state(1)
    for xi in xis:
        b_sum = b_sum + burgers_b(xi)
    b_norm = l2_norm(b_sum)
    if eps_inv_cap is not None and b_norm > 0.0:
        delta = max(delta, b_norm / eps_inv_cap**2)

    if b_norm == 0.0:
        drift = zero_state(1)
        for eta_t, _, _ in terms:
            drift = drift + eta_t
        combo = ConvexCombo(
            k=k,
            target=eta1,
            weights=np.array([0.5, 0.5]),
            shifts=[zero_state(1), zero_state(1)],
            drift=drift,
            residual_bound=0.0,
            eps_scale=1.0,
            residual_state=zero_state(1),
        )
    else:
        eps = float(np.sqrt(delta / b_norm))
        if eps < _EPS_FLOOR:
            raise ValueError(
                f"delta={delta:g} is below the achievable residual for this direction; "
                f"minimum achievable delta is about {(_EPS_FLOOR**2) * b_norm:.3g}"
            )
        mt = len(terms)
        root_m = float(np.sqrt(mt))
        shifts: list[SineState] = []
        drift = zero_state(1)
        for eta_t, xi, xi_p in terms:
            shifts.append(root_m * (eps * xi + (1.0 / eps) * xi_p))
            drift = drift + eta_t + (1.0 / eps**2) * burgers_b(xi_p)
        shifts = shifts + [-z for z in shifts]
        weights = np.full(2 * mt, 1.0 / (2 * mt))
        residual_state = (eps**2) * b_sum
        combo = ConvexCombo(
            k=k,
            target=eta1,
            weights=weights,
            shifts=shifts,
            drift=drift,
            residual_bound=l2_norm(residual_state),
            eps_scale=eps,
            residual_state=residual_state,
        )

    _verify_residual(combo, nu)
    return combo


def _verify_residual(combo: ConvexCombo, nu: float, nprobes: int = 10) -> None:
    """Check the residual is u-independent and matches the closed form."""
    rng = np.random.default_rng(0)
    scale = max(1.0, l2_norm(combo.target))
    probes = [zero_state(1)] + [
        SineState(rng.standard_normal(combo.k + 3)) for _ in range(nprobes - 1)
    ]
    for u in probes:
        defect = combo.residual_at(u, nu) - combo.residual_state
        if l2_norm(defect) > 1e-9 * max(scale, 1.0 / max(combo.eps_scale, 1e-30)) ** 2:
            raise AssertionError(
                f"convex combination residual is probe-dependent (defect {l2_norm(defect):g})"
            )


def fast_zeta(combo: ConvexCombo, m: int, T: float) -> PiecewiseConstantSignal:
    """The oscillating shift control: m periods, each cycling the shifts.

    Within every period of length T/m the control holds shift j for the
    fraction alpha_j, in index order, so the period average of zeta equals
    sum_j alpha_j zeta^j for every m.
    """
    if m < 1:
        raise ValueError("oscillation count m must be >= 1")
    durations = np.tile(combo.weights * (T / m), m)
    values = combo.shifts * m
    return PiecewiseConstantSignal(durations, values)


@dataclass
class ReduceResult:
    """Output of one ladder rung plus its diagnostics."""

    pair: ControlPair
    combos: list[ConvexCombo]
    f_m1_relaxation: float | None = None
    endpoint_gap: float | None = None

    @property
    def eta(self) -> ControlSignal:
        return self.pair.eta

    @property
    def zeta(self) -> ControlSignal:
        return self.pair.zeta

    @property
    def effective_delta_max(self) -> float:
        """Largest per-piece residual actually accepted (>= requested delta
        only when an amplitude cap inflated some piece's tolerance)."""
        return max((c.residual_bound for c in self.combos), default=0.0)


def _as_piecewise(eta1: ControlSignal, T: float, snap_pieces: int) -> PiecewiseConstantSignal:
    if isinstance(eta1, PiecewiseConstantSignal):
        if abs(eta1.horizon - T) > 1e-9:
            raise ValueError(f"control horizon {eta1.horizon:g} does not match T={T:g}")
        return eta1
    if isinstance(eta1, ConstantSignal):
        return PiecewiseConstantSignal([T], [eta1.value])
    return snap_to_piecewise(eta1, snap_pieces, T)


def reduce_control(
    eta1: ControlSignal,
    k: int,
    m: int,
    delta: float,
    cfg: SolveConfig,
    u0: SineState | None = None,
    h: ControlSignal | None = None,
    diagnostics: bool = True,
    snap_pieces: int = 16,
    eps_inv_cap: float | None = None,
) -> ReduceResult:
    """One ladder rung: replace an E_{k+1}-valued control by an E_k pair.

    Per constancy interval of eta1 a convex combination is built and its
    shifts are cycled m times.  Diagnostics (optional, two solves) report
    the running-primitive norm of the dissipative commutator f_m1 and the
    terminal gap between the extended run (eta, zeta_m) and the direct run
    with eta1.
    """
    pw = _as_piecewise(eta1, cfg.T, snap_pieces)
    space = ModeSubspace(k + 1, tol=MEMBERSHIP_TOL)
    for i, v in enumerate(pw.values):
        if not space.contains(v):
            raise ValueError(f"piece {i} of the control is not E_{k + 1}-valued")

    combos = [
        build_convex_combo(v, k, delta, cfg.nu, eps_inv_cap=eps_inv_cap)
        for v in pw.values
    ]
    eta = PiecewiseConstantSignal(pw.durations, [c.drift for c in combos])

    if all(c.trivial for c in combos):
        zeta: ControlSignal = zero_signal()
        f_m1 = zero_signal()
    else:
        durations = []
        zeta_values = []
        f_m1_values = []
        for dur, combo in zip(pw.durations, combos):
            piece_durs = np.tile(combo.weights * (dur / m), m)
            durations.append(piece_durs)
            avg_lap = zero_state(1)
            for a_j, z_j in zip(combo.weights, combo.shifts):
                avg_lap = avg_lap + a_j * laplacian(z_j)
            for z in combo.shifts * m:
                zeta_values.append(z)
                f_m1_values.append(cfg.nu * (avg_lap - laplacian(z)))
        durations = np.concatenate(durations)
        zeta = PiecewiseConstantSignal(durations, zeta_values)
        f_m1 = PiecewiseConstantSignal(durations, f_m1_values)

    result = ReduceResult(pair=ControlPair(eta=eta, zeta=zeta), combos=combos)
    if diagnostics:
        from .calculus import relaxation_norm

        result.f_m1_relaxation = relaxation_norm(f_m1, 0, cfg.T)
        u0 = zero_state(1) if u0 is None else u0
        forcing = eta if h is None else h + eta
        direct_forcing = eta1 if h is None else h + eta1
        extended = solve_general(u0, zeta, zeta, forcing, cfg)
        direct = solve(u0, direct_forcing, cfg)
        result.endpoint_gap = l2_distance(extended.terminal, direct.terminal)
    return result


def _cosine_step(tau: np.ndarray | float):
    return 0.5 * (1.0 - np.cos(np.pi * tau))


class MollifiedSignal(ControlSignal):
    """C^1 time-mollification of a piecewise-constant signal.

    Each piece boundary (and t = 0) gets a cosine ramp of the given width
    at the start of the piece; an extra ramp returns to zero at the final
    time, so the mollified signal vanishes at both endpoints.
    """

    def __init__(self, pw: PiecewiseConstantSignal, ramp: float, resolution: int = 16):
        min_piece = float(np.min(pw.durations))
        if ramp <= 0:
            raise ValueError("ramp width must be positive")
        if ramp > 0.5 * min_piece:
            raise ValueError(
                f"ramp {ramp:g} too wide: the shortest constancy piece is "
                f"{min_piece:g}, so the ramp must not exceed {0.5 * min_piece:g}"
            )
        self.pw = pw
        self.ramp = float(ramp)
        self.resolution = int(resolution)
        self.order = pw.order
        T = pw.horizon
        mat = pw._matrix
        n = mat.shape[0]
        self._starts = np.concatenate([pw.boundaries[:-1], [T - ramp]])
        self._from = np.vstack([np.zeros((1, self.order)), mat])
        self._to = np.vstack([mat, np.zeros((1, self.order))])
        # cumulative primitive at each ramp start
        cum = np.zeros((n + 1, self.order))
        for j in range(n):
            seg_end = self._starts[j + 1]
            cum[j + 1] = (
                cum[j]
                + self.ramp * 0.5 * (self._from[j] + self._to[j])
                + (seg_end - self._starts[j] - self.ramp) * self._to[j]
            )
        self._cum = cum

    @property
    def horizon(self) -> float:
        return self.pw.horizon

    def _locate(self, t: float) -> int:
        j = int(np.searchsorted(self._starts, t, side="right")) - 1
        return min(max(j, 0), len(self._starts) - 1)

    def _value_row(self, t: float) -> np.ndarray:
        j = self._locate(t)
        s = t - self._starts[j]
        if s < self.ramp:
            w = _cosine_step(s / self.ramp)
            return (1.0 - w) * self._from[j] + w * self._to[j]
        return self._to[j]

    def at(self, t: float, left: bool = False) -> SineState:
        if t >= self.pw.horizon:
            return zero_state(self.order)
        return SineState(self._value_row(t))

    def derivative_row(self, t: float) -> np.ndarray:
        j = self._locate(t)
        s = t - self._starts[j]
        if 0.0 <= s < self.ramp and t < self.pw.horizon:
            slope = 0.5 * np.pi * np.sin(np.pi * s / self.ramp) / self.ramp
            return slope * (self._to[j] - self._from[j])
        return np.zeros(self.order)

    def breakpoints(self, T: float) -> np.ndarray:
        pts = [np.linspace(s, s + self.ramp, self.resolution + 1) for s in self._starts]
        out = np.unique(np.concatenate(pts + [self.pw.boundaries]))
        return out[(out > 0) & (out < T)]

    def constant_on(self, a: float, b: float) -> SineState | None:
        j = self._locate(a)
        next_start = self._starts[j + 1] if j + 1 < len(self._starts) else self.pw.horizon
        if a >= self._starts[j] + self.ramp and b <= next_start:
            return SineState(self._to[j])
        return None

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        out = np.empty((times.size, self.order))
        T = self.pw.horizon
        for i, t in enumerate(times):
            tt = min(t, T)
            j = self._locate(tt)
            s = tt - self._starts[j]
            if s < self.ramp:
                tau = s / self.ramp
                ramp_int = self.ramp * (tau / 2.0 - np.sin(np.pi * tau) / (2.0 * np.pi))
                out[i] = (
                    self._cum[j]
                    + s * self._from[j]
                    + ramp_int * (self._to[j] - self._from[j])
                )
            else:
                out[i] = (
                    self._cum[j]
                    + self.ramp * 0.5 * (self._from[j] + self._to[j])
                    + (s - self.ramp) * self._to[j]
                )
        return out


class RampDerivativeSignal(ControlSignal):
    """The time derivative of a mollified signal (zero on the flats)."""

    def __init__(self, mollified: MollifiedSignal):
        self.mollified = mollified
        self.order = mollified.order

    @property
    def horizon(self) -> float | None:
        return None

    def at(self, t: float, left: bool = False) -> SineState:
        return SineState(self.mollified.derivative_row(t))

    def breakpoints(self, T: float) -> np.ndarray:
        return self.mollified.breakpoints(T)

    def constant_on(self, a: float, b: float) -> SineState | None:
        v = self.mollified.constant_on(a, b)
        return zero_state(self.order) if v is not None else None

    def primitive_batch(self, times: np.ndarray) -> np.ndarray:
        # the primitive of the derivative is the mollified signal itself
        return np.stack(
            [self.mollified.at(t).padded(self.order) for t in np.asarray(times, dtype=float)]
        )


def extend_to_single(pair: ControlPair, ramp: float, cfg: SolveConfig, resolution: int = 16) -> ControlSignal:
    """Collapse (eta, zeta) into the single control eta + d_t zeta_tilde.

    zeta_tilde is the cosine-ramp mollification of zeta vanishing at 0 and
    T; solving with the returned control reproduces the extended system
    driven by zeta_tilde exactly, and approaches the one driven by zeta as
    the ramp width shrinks.
    """
    zeta = pair.zeta
    if isinstance(zeta, ConstantSignal):
        if l2_norm(zeta.value) == 0.0:
            return pair.eta
        zeta = PiecewiseConstantSignal([cfg.T], [zeta.value])
    if not isinstance(zeta, PiecewiseConstantSignal):
        raise TypeError("extension needs a piecewise-constant (or constant) zeta")
    mollified = MollifiedSignal(zeta, ramp, resolution)
    return pair.eta + RampDerivativeSignal(mollified)


@dataclass(frozen=True)
class SimplexApprox:
    """Piecewise simplex representation of a control.

    On each of the s uniform pieces the value is a convex combination of
    the fixed vertices +-C e_l matching the control's piece average; the
    weights are nonnegative and sum to one per piece.
    """

    control: PiecewiseConstantSignal
    weights: np.ndarray            # shape (s, 2d)
    vertices: list[SineState]      # +C e_1..e_d, then -C e_1..e_d
    amplitude: float


def piecewise_simplex_approx(
    eta: ControlSignal, s: int, C: float, T: float | None = None
) -> SimplexApprox:
    """Approximate eta by simplex combinations of +-C e_l on s pieces.

    Requires C >= d * max_t max_l |<eta(t), e_l>| with d the mode
    dimension, which makes every weight nonnegative.  The L2-in-time
    distance to eta vanishes as s grows (first order in 1/s for smooth
    eta).
    """
    if s < 1:
        raise ValueError("need at least one piece")
    T = eta.horizon if T is None else T
    if T is None:
        raise ValueError("control must have a finite horizon to approximate")
    d = eta.order
    boundaries = np.linspace(0.0, T, s + 1)
    prim = eta.primitive_batch(boundaries)
    averages = np.diff(prim, axis=0) / np.diff(boundaries)[:, None]

    if isinstance(eta, PiecewiseConstantSignal):
        sup_coeff = float(np.max(np.abs(eta._matrix)))
    elif isinstance(eta, ConstantSignal):
        sup_coeff = float(np.max(np.abs(eta.value.coeffs), initial=0.0))
    else:
        grid = np.unique(
            np.concatenate([boundaries, np.linspace(0.0, T, 64 * s + 1)])
        )
        sup_coeff = max(
            float(np.max(np.abs(eta.at(t).coeffs), initial=0.0)) for t in grid
        )
    required = d * sup_coeff
    if C < required * (1.0 - 1e-12):
        raise ValueError(
            f"amplitude C={C:g} below the required bound {required:g} "
            f"(= dim {d} times the coefficient sup {sup_coeff:g})"
        )

    mbar = C / d
    weights = np.empty((s, 2 * d))
    weights[:, :d] = (averages + mbar) / (2.0 * C)
    weights[:, d:] = (mbar - averages) / (2.0 * C)
    from .spectral import single_mode

    vertices = [C * single_mode(l) for l in range(1, d + 1)]
    vertices += [-C * single_mode(l) for l in range(1, d + 1)]
    control = PiecewiseConstantSignal.from_matrix(np.diff(boundaries), averages)
    return SimplexApprox(control=control, weights=weights, vertices=vertices, amplitude=C)
