"""Exact regeneration structure of a finite chain split at a small set.

The regeneration time is tau = T_beta + m: successive visits to C spaced
at least m steps apart each toss a Bernoulli(lambda) coin, and the first
success distributes the state m steps later according to phi. The split
chain is never materialized on an enlarged state space. Instead, every
cycle expectation

    G_h(x) = E_x sum_{j=0}^{tau-1} h(X_j)

is computed from a one-layer decomposition: the pre-hit segment up to
T_1 (an absorbing-boundary linear solve), the m-step block at the coin
toss (endpoint mixture lambda*phi + (1-lambda)*Q plus the conditioned
bridge over the m-1 intermediate indices), and a continuation from the
residual endpoint. Visits to C strictly inside a bridge segment do not
schedule coin tosses; the decomposition encodes that by construction.

The unknowns G_h form a dense linear system solved by LU with partial
pivoting; a pivot below 1e-13 raises SingularSystem (impossible under a
valid certificate, surfaced defensively).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .certify import CertificateBundle, SmallSetCertificate
from .chain import (
    ATOL,
    Distribution,
    FiniteChain,
    StateFunction,
    kernel_powers,
    stationary,
    values_of,
)
from .errors import (
    InconsistentCertificate,
    NegativeResidual,
    SingularSystem,
    Unreachable,
)

#: LU pivots below this raise SingularSystem
PIVOT_TOL = 1e-13
#: phi or Q mass allowed on endpoints with P^m(x, y) = 0
ENDPOINT_MASS_TOL = 1e-10


def _lu(A: np.ndarray):
    lu, piv = lu_factor(A)
    smallest = np.min(np.abs(np.diag(lu)))
    if smallest < PIVOT_TOL:
        raise SingularSystem(f"pivot {smallest:.3e} below {PIVOT_TOL:.0e}")
    return lu, piv


@dataclass(frozen=True)
class ResidualKernel:
    """Rows of Q(x, .) = (P^m(x, .) - lam*phi)/(1 - lam) for x in C.

    ``rows`` is None when lam = 1 (the residual component is never drawn).
    """

    C: tuple
    rows: np.ndarray | None


@dataclass(frozen=True)
class BridgeTable:
    """Expected charge collected at the m-1 intermediate bridge indices.

    ``table[i, y]`` is sum_{j=1}^{m-1} E[h(X_j) | X_0 = C[i], X_m = y] and
    is only meaningful where ``support[i, y]`` (P^m(C[i], y) > 0) holds;
    unsupported entries are zero. Identically zero when m = 1.
    """

    C: tuple
    table: np.ndarray
    support: np.ndarray


@dataclass(frozen=True)
class CycleValues:
    """Exact per-state cycle expectations for one charge.

    Attributes
    ----------
    values : (n,) ndarray
        G_h(x) = E_x sum_{j<tau} h(X_j).
    at_phi : float
        The same expectation started from phi.
    tau : (n,) ndarray
        E_x tau (the charge h = 1).
    tau_at_phi : float
        E_phi tau.
    """

    values: np.ndarray
    at_phi: float
    tau: np.ndarray
    tau_at_phi: float


def residual_kernel(chain: FiniteChain, small: SmallSetCertificate) -> ResidualKernel:
    """The non-regenerative mixture component on C.

    Q(x, y) = (P^m(x, y) - lam*phi(y)) / (1 - lam); rows are valid
    distributions whenever the certificate is valid at tolerance.
    """
    if small.lam >= 1.0:
        return ResidualKernel(C=small.C, rows=None)
    Pm = kernel_powers(chain, small.m)[-1]
    rows = (Pm[list(small.C), :] - small.lam * small.phi.mass[None, :]) / (1.0 - small.lam)
    if rows.min() < -ATOL:
        i, y = np.unravel_index(np.argmin(rows), rows.shape)
        raise NegativeResidual(
            f"Q({small.C[i]},{y}) = {rows.min():.3e} < 0: certificate invalid at tolerance"
        )
    np.clip(rows, 0.0, None, out=rows)
    sums = rows.sum(axis=1)
    if sums.min() < 0.5:
        raise NegativeResidual(
            "a residual row lost its mass: lambda is too close to 1 for the "
            "mixture to be meaningful (declare lambda = 1 instead)"
        )
    rows /= sums[:, None]
    rows.flags.writeable = False
    return ResidualKernel(C=small.C, rows=rows)


def bridge_sums(chain: FiniteChain, small: SmallSetCertificate, h) -> BridgeTable:
    """Endpoint-conditioned charge sums over the bridge indices 1..m-1.

    Uses E[h(X_j) | X_0=x, X_m=y] = sum_z P^j(x,z) h(z) P^{m-j}(z,y) / P^m(x,y).
    """
    h = values_of(h, chain.n)
    powers = kernel_powers(chain, small.m)
    Pm = powers[-1]
    k = len(small.C)
    table = np.zeros((k, chain.n))
    support = Pm[list(small.C), :] > 0.0
    for i, w in enumerate(small.C):
        num = np.zeros(chain.n)
        for j in range(1, small.m):
            num += (powers[j][w, :] * h) @ powers[small.m - j]
        table[i, support[i]] = num[support[i]] / Pm[w, support[i]]
    table.flags.writeable = False
    support.flags.writeable = False
    return BridgeTable(C=small.C, table=table, support=support)


def _reach_check(chain: FiniteChain, C: tuple) -> None:
    """Every state must reach C with positive probability along some path."""
    P = chain.kernel
    reached = np.zeros(chain.n, dtype=bool)
    stack = list(C)
    reached[list(C)] = True
    while stack:
        y = stack.pop()
        preds = np.flatnonzero(P[:, y] > 0.0)
        for x in preds:
            if not reached[x]:
                reached[x] = True
                stack.append(int(x))
    if not reached.all():
        raise Unreachable(int(np.flatnonzero(~reached)[0]))


class _AbsorbingSystem:
    """Linear solves with the small set C as absorbing boundary."""

    def __init__(self, chain: FiniteChain, C: tuple):
        _reach_check(chain, C)
        self.n = chain.n
        self.C = C
        self.outside = np.setdiff1d(np.arange(chain.n), C, assume_unique=True)
        P = chain.kernel
        if self.outside.size:
            self._A = np.eye(self.outside.size) - P[np.ix_(self.outside, self.outside)]
            self._lu = _lu(self._A)
            H_out = self._solve(P[np.ix_(self.outside, list(C))])
        else:
            self._lu = None
            H_out = None
        # H(x, w) = P_x(X_{T_1} = w); rows for x in C are point masses
        H = np.zeros((chain.n, len(C)))
        for i, w in enumerate(C):
            H[w, i] = 1.0
        if H_out is not None:
            H[self.outside, :] = H_out
        self.H = H

    def _solve(self, rhs: np.ndarray) -> np.ndarray:
        # one step of iterative refinement keeps drift residuals of
        # hitting-sum Lyapunov functions below the 1e-12 tolerance
        x = lu_solve(self._lu, rhs)
        x += lu_solve(self._lu, rhs - self._A @ x)
        return x

    def pre_hit(self, charges: np.ndarray) -> np.ndarray:
        """u_h(x) = E_x sum_{j<T_1} h(X_j), columns of ``charges`` as charges.

        ``charges`` has shape (n,) or (n, k); the result matches.
        """
        u = np.zeros_like(charges, dtype=float)
        if self.outside.size:
            u[self.outside] = self._solve(np.asarray(charges, dtype=float)[self.outside])
        return u


def hitting(chain: FiniteChain, C, h=None):
    """First-hit distribution on C and optional pre-hit charge sums.

    Returns
    -------
    H : (n, |C|) ndarray
        H(x, w) = P_x(X_{T_1} = w) with T_1 = inf{n >= 0 : X_n in C}.
    u : (n,) ndarray or None
        E_x sum_{j<T_1} h(X_j) when a charge h is given (zero on C).

    Raises Unreachable if some state cannot reach C.
    """
    C = tuple(sorted({int(x) for x in C}))
    sys = _AbsorbingSystem(chain, C)
    u = sys.pre_hit(values_of(h, chain.n)) if h is not None else None
    return sys.H, u


def _small_part(cert) -> SmallSetCertificate:
    return cert.small if isinstance(cert, CertificateBundle) else cert


class _CycleSystem:
    """Factored linear system for cycle expectations under one scheme.

    Only the minorization part of a certificate is needed; a full bundle
    or a bare SmallSetCertificate are both accepted.
    """

    def __init__(self, chain: FiniteChain, cert):
        self.chain = chain
        small = _small_part(cert)
        self.C = small.C
        self.m = small.m
        self.lam = small.lam
        self.phi = small.phi.mass
        self.powers = kernel_powers(chain, small.m)
        self.Pm = self.powers[-1]
        self.Q = residual_kernel(chain, small).rows
        self.absorbing = _AbsorbingSystem(chain, small.C)
        self.H = self.absorbing.H
        self._check_endpoint_mass()
        if self.lam < 1.0:
            M = self.H @ self.Q
            self._core_lu = _lu(np.eye(chain.n) - (1.0 - self.lam) * M)
        else:
            self._core_lu = None

    def _check_endpoint_mass(self):
        for i, w in enumerate(self.C):
            dead = self.Pm[w, :] <= 0.0
            if self.phi[dead].sum() > ENDPOINT_MASS_TOL:
                raise InconsistentCertificate(
                    f"phi places mass on endpoints with P^m({w}, .) = 0"
                )
            if self.Q is not None and self.Q[i, dead].sum() > ENDPOINT_MASS_TOL:
                raise InconsistentCertificate(
                    f"Q({w}, .) places mass on endpoints with P^m({w}, .) = 0"
                )

    def block_charge(self, h: np.ndarray) -> np.ndarray:
        """Expected charge of the m-step block started at each w in C.

        c(w) = h(w) + lam * E_phi[bridge] + (1-lam) * E_Q[bridge], where the
        bridge terms cover indices 1..m-1 conditioned on the drawn endpoint.
        Endpoints with P^m(w, y) = 0 carry no mixture mass and are excluded.
        """
        n = self.chain.n
        c = np.empty(len(self.C))
        for i, w in enumerate(self.C):
            c[i] = h[w]
            if self.m == 1:
                continue
            live = self.Pm[w, :] > 0.0
            num = np.zeros(n)
            for j in range(1, self.m):
                num += (self.powers[j][w, :] * h) @ self.powers[self.m - j]
            bridge = np.zeros(n)
            bridge[live] = num[live] / self.Pm[w, live]
            c[i] += self.lam * float(self.phi @ bridge)
            if self.Q is not None:
                c[i] += (1.0 - self.lam) * float(self.Q[i] @ bridge)
        return c

    def solve(self, h) -> np.ndarray:
        """G_h(x) = E_x sum_{j<tau} h(X_j) for one charge vector."""
        h = values_of(h, self.chain.n)
        rhs = self.absorbing.pre_hit(h) + self.H @ self.block_charge(h)
        if self._core_lu is None:
            return rhs
        return lu_solve(self._core_lu, rhs)

    def occupation_matrix(self) -> np.ndarray:
        """W(x, z) = E_x sum_{j<tau} I(X_j = z), all indicator charges at once."""
        n = self.chain.n
        U = self.absorbing.pre_hit(np.eye(n))
        Cmat = np.zeros((len(self.C), n))
        for i, w in enumerate(self.C):
            Cmat[i, w] = 1.0
            if self.m == 1:
                continue
            live = self.Pm[w, :] > 0.0
            weights = self.lam * self.phi.copy()
            if self.Q is not None:
                weights = weights + (1.0 - self.lam) * self.Q[i]
            scaled = np.zeros(n)
            scaled[live] = weights[live] / self.Pm[w, live]
            for j in range(1, self.m):
                Cmat[i, :] += self.powers[j][w, :] * (self.powers[self.m - j] @ scaled)
        rhs = U + self.H @ Cmat
        if self._core_lu is None:
            return rhs
        return lu_solve(self._core_lu, rhs)


def cycle_values(chain: FiniteChain, cert, h) -> CycleValues:
    """Exact cycle expectations of a charge, together with E_x tau.

    ``cert`` is a CertificateBundle or a bare SmallSetCertificate. E_x tau
    is the charge h = 1, for which the m-step block contributes exactly m
    per coin toss (the bridge conditionals integrate to one).
    """
    system = _CycleSystem(chain, cert)
    G = system.solve(h)
    tau = system.solve(np.ones(chain.n))
    phi = _small_part(cert).phi.mass
    return CycleValues(
        values=G,
        at_phi=float(phi @ G),
        tau=tau,
        tau_at_phi=float(phi @ tau),
    )


def canonical_solution(chain: FiniteChain, cert, f) -> StateFunction:
    """The canonical solution g* of (P - I)g = -f_c with f_c = f - pi(f).

    g*(x) = E_x sum_{j<tau} f_c(X_j); the Poisson residual is verified to
    1e-9 before returning. The additive normalization of g* is the one
    induced by tau; phi . g* vanishes when m = 1 but has no closed form
    for m >= 2 and is reported as a diagnostic elsewhere, not asserted.
    """
    f = values_of(f, chain.n)
    pi = stationary(chain).mass
    f_c = f - float(pi @ f)
    g = _CycleSystem(chain, cert).solve(f_c)
    residual = np.max(np.abs((chain.kernel @ g - g) + f_c))
    assert residual <= 1e-9, f"Poisson residual {residual:.3e} exceeds 1e-9"
    return StateFunction(values=g)


def occupation_measure(chain: FiniteChain, cert) -> Distribution:
    """Expected time per cycle from phi, normalized by the cycle length.

    nu(z) = E_phi sum_{j<tau} I(X_j = z) / E_phi tau. This equals the
    stationary distribution; the identity is asserted to 1e-10.
    """
    system = _CycleSystem(chain, cert)
    W = system.occupation_matrix()
    phi = _small_part(cert).phi.mass
    per_state = phi @ W
    nu = per_state / per_state.sum()
    pi = stationary(chain).mass
    l1 = float(np.abs(nu - pi).sum())
    assert l1 <= 1e-10, f"occupation measure deviates from stationary by {l1:.3e} in L1"
    return Distribution(mass=nu)


def exact_marginal(chain: FiniteChain, x: int, f, n: int) -> float:
    """E_x f(X_n) = (P^n f)(x) by iterated kernel-vector products."""
    vec = values_of(f, chain.n)
    for _ in range(n):
        vec = chain.kernel @ vec
    return float(vec[x])


def marginal_curve(chain: FiniteChain, f, n_max: int) -> np.ndarray:
    """Rows i = 0..n_max of E_x f(X_i) for every state at once."""
    out = np.empty((n_max + 1, chain.n))
    vec = values_of(f, chain.n)
    out[0] = vec
    for i in range(1, n_max + 1):
        vec = chain.kernel @ vec
        out[i] = vec
    return out
