"""Mode-space algebra: projections, the generated space ladder, and the
decomposition of a top-mode state into drift and product terms.

The central fact is the closed-form product identity

    sym(sin(jx), sin x) = ((j+1) sin((j+1)x) - (j-1) sin((j-1)x)) / 2,

which gives, for j = k,

    sin((k+1)x) = ((k-1)/(k+1)) sin((k-1)x)
                  + (2/(k+1)) sym(sin(kx), sin x),

so the space generated from E_k by drifts in E_k plus symmetric products
against E_1 is exactly E_{k+1}.  Everything here is certified numerically
at machine precision rather than assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    ModeSubspace,
    SineState,
    l2_norm,
    single_mode,
    sym_product,
    zero_state,
)

__all__ = [
    "project",
    "f_space",
    "LadderCertificate",
    "decompose_in_F",
    "MEMBERSHIP_TOL",
]

#: absolute coefficient tolerance for subspace membership tests
MEMBERSHIP_TOL = 1e-10


def project(u: SineState, k: int) -> SineState:
    """Orthogonal projection onto E_k: zero all coefficients beyond k."""
    if k < 1:
        raise ValueError("projection order must be >= 1")
    return u.truncated(k)


@dataclass(frozen=True)
class LadderCertificate:
    """Witness that the generated space of (E_1, E_k) equals E_{k+1}.

    ``top_eta``, ``top_xi``, ``top_xi_prime`` reproduce sin((k+1)x) as
    top_eta + sym(top_xi, top_xi_prime); the reconstruction error and the
    largest leakage of sym(E_k, E_1) outside E_{k+1} are recorded.
    """

    k: int
    space: ModeSubspace
    top_eta: SineState
    top_xi: SineState
    top_xi_prime: SineState
    reconstruction_error: float
    forward_leakage: float


def f_space(k: int, n: int = 1) -> LadderCertificate:
    """The space generated from G = E_k by drifts and products against E_n.

    Only the ladder case n = 1 is implemented (the general two-subspace
    version has no closed form and the synthesis only needs the ladder);
    any other n is rejected.  Returns E_{k+1} together with the
    certificate that both inclusions hold at machine precision.
    """
    if n != 1:
        raise NotImplementedError(
            "the generated space is only implemented for N = E_1 against G = E_k; "
            f"got N = E_{n}"
        )
    if k < 2:
        raise ValueError(f"the ladder needs k >= 2, got k={k}")

    # forward inclusion: products of generators stay inside E_{k+1}
    e1 = single_mode(1)
    target = ModeSubspace(k + 1, tol=MEMBERSHIP_TOL)
    leakage = 0.0
    for j in range(1, k + 1):
        prod = sym_product(single_mode(j), e1)
        if prod.order > k + 1:
            leakage = max(leakage, float(np.max(np.abs(prod.coeffs[k + 1 :]))))
    if leakage > MEMBERSHIP_TOL:
        raise AssertionError(
            f"internal consistency failure: sym(E_{k}, E_1) leaks {leakage:g} outside E_{k+1}"
        )

    # reverse inclusion: reproduce the one new generator sin((k+1)x)
    eta = ((k - 1) / (k + 1)) * single_mode(k - 1)
    xi = (2.0 / (k + 1)) * single_mode(k)
    rebuilt = eta + sym_product(xi, e1)
    err = l2_norm(rebuilt - single_mode(k + 1))
    if err > 1e-12:
        raise AssertionError(
            f"internal consistency failure: ladder certificate for k={k} misses by {err:g}"
        )
    return LadderCertificate(
        k=k,
        space=target,
        top_eta=eta,
        top_xi=xi,
        top_xi_prime=e1,
        reconstruction_error=err,
        forward_leakage=leakage,
    )


def decompose_in_F(eta1: SineState, k: int) -> list[tuple[SineState, SineState, SineState]]:
    """Split eta1 in E_{k+1} into terms (eta_tilde, xi, xi_prime) with

        eta1 = sum_j (eta_tilde_j - sym(xi_j, xi_prime_j)),

    eta_tilde_j, xi_j in E_k and xi_prime_j in E_1.  The canonical output
    has a single term peeling the top mode: for eta1 = g + c sin((k+1)x),

        xi = -(2c/(k+1)) sin(kx),   xi_prime = sin x,

    and eta_tilde absorbs g plus the sin((k-1)x) byproduct of the product
    identity.  Reassembly is exact to machine precision.
    """
    if k < 2:
        raise ValueError(f"decomposition needs k >= 2, got k={k}")
    if not ModeSubspace(k + 1).contains(eta1, MEMBERSHIP_TOL):
        tail = float(np.max(np.abs(eta1.coeffs[k + 1 :])))
        raise ValueError(
            f"state is not in E_{k + 1}: coefficient of magnitude {tail:g} beyond mode {k + 1}"
        )

    c = eta1.coefficient(k + 1)
    g = project(eta1, k)
    if c == 0.0:
        return [(g, zero_state(1), zero_state(1))]
    eta_tilde = g + (c * (k - 1) / (k + 1)) * single_mode(k - 1)
    xi = (-2.0 * c / (k + 1)) * single_mode(k)
    xi_prime = single_mode(1)

    rebuilt = eta_tilde - sym_product(xi, xi_prime)
    err = l2_norm(rebuilt - eta1)
    if err > 1e-12 * max(1.0, l2_norm(eta1)):
        raise AssertionError(f"decomposition reassembly missed by {err:g}")
    return [(eta_tilde, xi, xi_prime)]
