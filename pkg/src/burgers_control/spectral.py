"""Exact sine-mode arithmetic on the interval (0, pi).

States are finite sine expansions u(x) = sum_k a_k sin(k x), which satisfy
the Dirichlet conditions u(0) = u(pi) = 0 identically.  All operations here
are exact in coefficient space: Sobolev norms through the Dirichlet-Laplacian
eigenvalues, the heat semigroup mode by mode, and the Burgers nonlinearity
through the closed-form product rule

    sin(a x) cos(b x) = (sin((a+b)x) + sin((a-b)x)) / 2.

Nothing in this module touches a spatial grid except the explicit
``sample``/``transform`` pair, which exists for I/O and cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

__all__ = [
    "SineState",
    "ModeSubspace",
    "zero_state",
    "single_mode",
    "from_coeffs",
    "sobolev_norm",
    "l2_norm",
    "l2_distance",
    "heat_propagate",
    "laplacian",
    "sym_product",
    "burgers_b",
    "sample",
    "transform",
    "SOBOLEV_ORDERS",
]

SOBOLEV_ORDERS = (-1, 0, 1, 2)

# Half the L2 norm of sin(kx)^2 on (0, pi); every norm formula carries it.
_HALF_PI = np.pi / 2.0


@dataclass(frozen=True)
class SineState:
    """A function sum_k coeffs[k-1] * sin(k x) on (0, pi).

    Immutable; arithmetic returns new states, zero-padding the shorter
    operand when orders differ.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        if arr.ndim != 1:
            raise ValueError("coefficients must be a 1D sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite (no NaN/Inf)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    @property
    def order(self) -> int:
        """Truncation order M (number of stored modes)."""
        return self.coeffs.shape[0]

    def padded(self, m: int) -> np.ndarray:
        """Coefficients zero-padded (or verified-truncated) to length m."""
        if m < self.order:
            if np.any(self.coeffs[m:] != 0.0):
                raise ValueError(
                    f"cannot shorten state of order {self.order} to {m}: "
                    "nonzero tail"
                )
            return self.coeffs[:m].copy()
        out = np.zeros(m)
        out[: self.order] = self.coeffs
        return out

    def coefficient(self, k: int) -> float:
        """Coefficient of sin(k x); zero beyond the stored order."""
        if k < 1:
            raise ValueError("mode index must be >= 1")
        return float(self.coeffs[k - 1]) if k <= self.order else 0.0

    def truncated(self, m: int) -> "SineState":
        """Drop all modes beyond m (orthogonal projection onto E_m)."""
        if m >= self.order:
            return self
        return SineState(self.coeffs[:m])

    def __add__(self, other: "SineState") -> "SineState":
        m = max(self.order, other.order)
        return SineState(self.padded(m) + other.padded(m))

    def __sub__(self, other: "SineState") -> "SineState":
        m = max(self.order, other.order)
        return SineState(self.padded(m) - other.padded(m))

    def __neg__(self) -> "SineState":
        return SineState(-self.coeffs)

    def __mul__(self, c: float) -> "SineState":
        return SineState(self.coeffs * float(c))

    __rmul__ = __mul__

    def allclose(self, other: "SineState", tol: float = 1e-12) -> bool:
        m = max(self.order, other.order)
        return bool(np.max(np.abs(self.padded(m) - other.padded(m)), initial=0.0) <= tol)

    def __repr__(self) -> str:
        return f"SineState(order={self.order}, coeffs={np.array2string(self.coeffs, precision=6)})"


def zero_state(m: int = 1) -> SineState:
    return SineState(np.zeros(max(m, 1)))


def single_mode(k: int, amplitude: float = 1.0) -> SineState:
    """The state amplitude * sin(k x)."""
    if k < 1:
        raise ValueError("mode index must be >= 1")
    coeffs = np.zeros(k)
    coeffs[k - 1] = amplitude
    return SineState(coeffs)


def from_coeffs(values) -> SineState:
    return SineState(np.asarray(values, dtype=float))


@dataclass(frozen=True)
class ModeSubspace:
    """The span E_k of sin(x), ..., sin(k x)."""

    k: int
    tol: float = field(default=1e-10, compare=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("subspace order k must be >= 1")

    def contains(self, u: SineState, tol: float | None = None) -> bool:
        """Membership test: every coefficient beyond k below tolerance."""
        t = self.tol if tol is None else tol
        if u.order <= self.k:
            return True
        return bool(np.max(np.abs(u.coeffs[self.k:]), initial=0.0) <= t)

    def __repr__(self) -> str:
        return f"ModeSubspace(k={self.k})"


def sobolev_norm(u: SineState, s: int = 0) -> float:
    """H^s norm realized through Laplacian eigenvalues.

    ||u||_s^2 = (pi/2) * sum_k k^{2s} a_k^2, exact on the sine basis and
    monotone in s.  s must lie in {-1, 0, 1, 2}; s = 0 is the L2 norm.
    """
    if s not in SOBOLEV_ORDERS:
        raise ValueError(f"unsupported Sobolev order {s}; admissible: {SOBOLEV_ORDERS}")
    a = u.coeffs
    if a.size == 0:
        return 0.0
    k = np.arange(1, a.size + 1, dtype=float)
    return float(np.sqrt(_HALF_PI * np.sum(k ** (2 * s) * a * a)))


def l2_norm(u: SineState) -> float:
    return sobolev_norm(u, 0)


def l2_distance(u: SineState, v: SineState) -> float:
    return l2_norm(u - v)


def heat_propagate(u: SineState, tau: float, nu: float = 1.0) -> SineState:
    """Apply the heat semigroup: mode k is damped by exp(-nu k^2 tau)."""
    if tau < 0:
        raise ValueError(f"heat propagation time must be >= 0, got {tau}")
    if nu <= 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    if tau == 0.0:
        return u
    k = np.arange(1, u.order + 1, dtype=float)
    return SineState(u.coeffs * np.exp(-nu * k * k * tau))


def laplacian(u: SineState) -> SineState:
    """Second derivative: sin(k x) maps to -k^2 sin(k x)."""
    k = np.arange(1, u.order + 1, dtype=float)
    return SineState(-k * k * u.coeffs)


_pair_index_cache: dict = {}


def _pair_indices(mp: int, mq: int):
    key = (mp, mq)
    hit = _pair_index_cache.get(key)
    if hit is None:
        a = np.arange(1, mp + 1)
        b = np.arange(1, mq + 1)
        s = (a[:, None] + b[None, :]).ravel()
        d = np.abs(a[:, None] - b[None, :]).ravel()
        hit = (s, d, 0.5 * s, 0.5 * d)
        _pair_index_cache[key] = hit
    return hit


def _sym_product_arrays(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Coefficients of xi d_x(xi') + xi' d_x(xi) for coefficient arrays p, q.

    For each mode pair (a, b): mode a+b gains (a+b)/2 * p_a q_b and mode
    |a-b| loses |a-b|/2 * p_a q_b.  Output length is len(p) + len(q).
    """
    mp, mq = len(p), len(q)
    if mp == 0 or mq == 0:
        return np.zeros(mp + mq)
    s, d, half_s, half_d = _pair_indices(mp, mq)
    w = np.outer(p, q).ravel()
    size = mp + mq + 1
    out = np.bincount(s, weights=half_s * w, minlength=size)
    out -= np.bincount(d, weights=half_d * w, minlength=size)
    return out[1 : mp + mq + 1]


def sym_product(xi: SineState, xi_prime: SineState) -> SineState:
    """The symmetric bilinear form xi d_x(xi') + xi' d_x(xi), exactly.

    For single modes this is the identity
    sym(sin(jx), sin(x)) = ((j+1) sin((j+1)x) - (j-1) sin((j-1)x)) / 2.
    """
    return SineState(_sym_product_arrays(xi.coeffs, xi_prime.coeffs))


def burgers_b(u: SineState) -> SineState:
    """The Burgers nonlinearity B(u) = u d_x(u) = sym_product(u, u) / 2."""
    return SineState(0.5 * _sym_product_arrays(u.coeffs, u.coeffs))


def sample(u: SineState, n: int) -> np.ndarray:
    """Values of u at the n interior grid points x_i = i pi / (n+1).

    Requires n >= 2 * order + 1 so that a later ``transform`` round-trips
    without aliasing (and quadratic products of sampled states stay
    alias-free on the same grid).
    """
    required = 2 * u.order + 1
    if n < required:
        raise ValueError(
            f"grid too coarse: need at least {required} interior points "
            f"for order {u.order}, got {n}"
        )
    return scipy.fft.dst(u.padded(n), type=1) / 2.0


def grid_points(n: int) -> np.ndarray:
    """The n interior points x_i = i pi / (n+1) used by sample/transform."""
    return np.arange(1, n + 1) * np.pi / (n + 1)


def transform(values: np.ndarray) -> SineState:
    """Sine coefficients from values on the interior grid (inverse of sample)."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("grid values must be a nonempty 1D array")
    n = v.size
    return SineState(scipy.fft.dst(v, type=1) / (n + 1))
