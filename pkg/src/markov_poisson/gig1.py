"""Single-server queue waiting times: certificates, bounds, and simulation.

The chain is the Lindley recursion W_{n+1} = max(W_n + Z_n, 0) driven by
i.i.d. increments with a continuous positive density, negative mean, and
finite second moment. With the reward f(x) = x and the quadratic Lyapunov
function v1(x) = max(c1 x^2, 1), c1 = kappa / (2 |E Z|), kappa > 1, a
one-step (m = 1) certificate exists on an interval C = [0, x0]:

* the minorizing sub-measure is an atom at 0 of mass P(Z <= -x0) plus the
  density inf over x in [0, x0] of h_Z(y - x) on y > 0; lam is its total
  mass and phi the normalization;
* b1 = b2 = sup over x in [0, x0] of (Pv1)(x) - v1(x) + max(f(x), 1); the
  max(., 1) floor lets the same constant serve the unit-charge drift too.

All integrals are trapezoid sums on a uniform grid; for unimodal
densities the grid infimum (with both interval endpoints on the grid)
equals the true infimum, because a unimodal function attains its minimum
over an interval at an endpoint.

Choosing x0 has no closed form. ``find_x0`` takes the smallest grid point
such that the drift inequality holds at every larger grid point up to an
analytic horizon; beyond the horizon the inequality is certified by the
moment bound

    v1(x) - max(x, 1) - (Pv1)(x) >= (kappa - 1) x - c1 E[Z^2] - 1  > 0

valid for x >= max(1, 1/sqrt(c1)), which follows from v1(y) <= c1 y^2 + 1
and E[(x + Z)^2] = x^2 + 2 x E[Z] + E[Z^2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .bounds import envelope_comparison
from .errors import InfeasibleX0, QuadratureFailure, SearchExhausted
from .mc import SamplerChain, estimate_gstar, estimate_pif

#: tolerance on the truncated density mass
MASS_TOL = 1e-6

#: increment families with continuous positive densities on the real line
FAMILIES = ("normal", "logistic", "laplace")


def increment_family(family: str, loc: float, scale: float):
    """A frozen scipy.stats increment law from a family name."""
    from scipy import stats

    dists = {"normal": stats.norm, "logistic": stats.logistic, "laplace": stats.laplace}
    if family not in dists:
        raise ValueError(f"unknown increment family {family!r}; choose from {FAMILIES}")
    return dists[family](loc, scale)


@dataclass(frozen=True)
class GIG1Model:
    """Increment law, drift margin parameter, and quadrature resolution.

    ``increment`` is a frozen scipy.stats continuous distribution (its pdf
    is the increment density h_Z). ``x0`` may be preset; when None it is
    determined by :func:`find_x0`. The quadrature grid uses spacing
    ``step`` and truncates the increment support at mean +- ``tail_sigmas``
    standard deviations.
    """

    increment: object
    kappa: float
    x0: float | None = None
    step: float = 0.01
    tail_sigmas: float = 15.0
    horizon_pad: float = 2.0

    def __post_init__(self):
        mean, var = (float(v) for v in self.increment.stats(moments="mv"))
        if not mean < 0:
            raise ValueError(f"increment mean must be negative, got {mean}")
        if not np.isfinite(var):
            raise ValueError("increment must have a finite second moment")
        if not self.kappa > 1:
            raise ValueError(f"kappa must exceed 1, got {self.kappa}")
        object.__setattr__(self, "_mean", mean)
        object.__setattr__(self, "_sd", math.sqrt(var))
        zs = self.z_grid()
        mass = np.trapezoid(self.h_z(zs), zs)
        if abs(mass - 1.0) > MASS_TOL:
            raise QuadratureFailure(
                f"truncated density mass {mass:.8f} deviates from 1 beyond {MASS_TOL}"
            )

    @property
    def mean_z(self) -> float:
        return self._mean

    @property
    def second_moment_z(self) -> float:
        return self._sd**2 + self._mean**2

    @property
    def c1(self) -> float:
        return self.kappa / (2.0 * abs(self._mean))

    def h_z(self, z):
        return self.increment.pdf(z)

    def cdf_z(self, z: float) -> float:
        return float(self.increment.cdf(z))

    def v1(self, x):
        return np.maximum(self.c1 * np.square(x), 1.0)

    def z_grid(self) -> np.ndarray:
        lo = self._mean - self.tail_sigmas * self._sd
        hi = self._mean + self.tail_sigmas * self._sd
        return np.arange(lo, hi + self.step, self.step)

    def drift_horizon(self) -> float:
        """Analytic threshold past which the moment bound certifies drift."""
        tail_start = (self.c1 * self.second_moment_z + 1.0) / (self.kappa - 1.0)
        return max(1.0, 1.0 / math.sqrt(self.c1), tail_start)

    def pv1(self, xs: np.ndarray) -> np.ndarray:
        """(Pv1)(x) = E v1(max(x + Z, 0)) on a grid of x, by quadrature."""
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        zs = self.z_grid()
        hz = self.h_z(zs)
        out = np.empty(xs.size)
        block = max(1, int(2_000_000 / zs.size))
        for lo in range(0, xs.size, block):
            chunk = xs[lo : lo + block, None] + zs[None, :]
            np.clip(chunk, 0.0, None, out=chunk)
            out[lo : lo + block] = np.trapezoid(self.v1(chunk) * hz, zs, axis=1)
        return out

    def drift_margin(self, xs: np.ndarray) -> np.ndarray:
        """v1(x) - max(x, 1) - (Pv1)(x); nonnegative where drift holds off C.

        The max(x, 1) charge covers both the reward f(x) = x and the
        constant charge 1, so a single constant b1 = b2 certifies both
        drift inequalities.
        """
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        return self.v1(xs) - np.maximum(xs, 1.0) - self.pv1(xs)


@dataclass(frozen=True)
class GIG1Certificate:
    """One-step certificate data for the queue, on quadrature grids.

    ``atom`` and ``density`` form the unnormalized minorizing sub-measure
    (total mass lam); phi is that measure divided by lam. v1 = v2 and
    b1 = b2 by construction.
    """

    c1: float
    x0: float
    lam: float
    b1: float
    atom: float
    ys: np.ndarray
    density: np.ndarray
    phi_v1: float

    m: int = 1

    @property
    def b2(self) -> float:
        return self.b1

    def v1(self, x):
        return np.maximum(self.c1 * np.square(x), 1.0)

    def phi_atom(self) -> float:
        return self.atom / self.lam


def find_x0(model: GIG1Model) -> float:
    """Smallest grid endpoint x0 with the drift inequality valid beyond it.

    Margins are evaluated on the grid [0, horizon + pad]; past the
    analytic horizon the moment bound in the module docstring certifies
    the inequality, so the grid scan is exhaustive. Raises SearchExhausted
    when no grid point works (kappa too close to 1 for the truncation).
    """
    horizon = model.drift_horizon() + model.horizon_pad
    xs = np.arange(0.0, horizon + model.step, model.step)
    margin = model.drift_margin(xs)
    bad = np.flatnonzero(margin < 0.0)
    if bad.size == 0:
        return float(xs[1])  # C must be a nonempty interval
    if bad[-1] == xs.size - 1:
        raise SearchExhausted(
            f"drift margin still negative at the horizon {xs[-1]:.3f}"
        )
    return float(xs[bad[-1]])


def build_certificate(model: GIG1Model) -> GIG1Certificate:
    """Compute (lam, phi, b1) for C = [0, x0] by quadrature.

    Uses the model's preset x0 or runs :func:`find_x0`. The drift
    inequality is re-verified on the grid beyond x0 (InfeasibleX0 when a
    preset endpoint is too small).
    """
    x0 = model.x0 if model.x0 is not None else find_x0(model)
    if x0 <= 0:
        raise InfeasibleX0("x0 must be positive")
    horizon = model.drift_horizon() + model.horizon_pad
    xs = np.arange(0.0, max(horizon, x0) + model.step, model.step)
    margin = model.drift_margin(xs)
    outside = xs > x0
    if np.any(margin[outside] < 0.0):
        x_bad = float(xs[outside][np.argmin(margin[outside])])
        raise InfeasibleX0(
            f"drift inequality fails at x = {x_bad:.4f} > x0 = {x0:.4f}"
        )
    in_c = ~outside
    b1 = float(np.max(-margin[in_c]))  # = sup (Pv1) - v1 + max(x, 1) over C
    if b1 <= 0.0:
        b1 = 1e-300

    atom = model.cdf_z(-x0)
    zs = model.z_grid()
    ys = np.arange(model.step, x0 + zs[-1] + model.step, model.step)
    c_grid = np.arange(0.0, x0 + model.step / 2, model.step)
    density = np.full(ys.size, np.inf)
    block = max(1, int(2_000_000 / ys.size))
    for lo in range(0, c_grid.size, block):
        vals = model.h_z(ys[None, :] - c_grid[lo : lo + block, None])
        np.minimum(density, vals.min(axis=0), out=density)
    lam = atom + float(np.trapezoid(density, ys))
    if lam <= 0.0:
        raise QuadratureFailure("minorizing measure has zero mass")
    phi_v1 = (atom * 1.0 + float(np.trapezoid(density * model.v1(ys), ys))) / lam
    density = density.copy()
    density.flags.writeable = False
    ys = ys.copy()
    ys.flags.writeable = False
    return GIG1Certificate(
        c1=model.c1,
        x0=float(x0),
        lam=lam,
        b1=b1,
        atom=atom,
        ys=ys,
        density=density,
        phi_v1=phi_v1,
    )


def bound_curves(cert: GIG1Certificate, x_grid) -> dict:
    """Solution envelope curves and the asymptotic coefficient comparison.

    ours_upper(x) = v1(x) + b1/lam, ours_lower(x) = -b1 (v1(x) + b1/lam),
    competing(x) = a (1 + b1) c1 x^2 with a = 1 + max{0, b1/lam - phi.v1}. The
    quadratic-growth coefficients are max{1, b1} (ours) and a (1 + b1).
    """
    xs = np.asarray(x_grid, dtype=float)
    envelope = cert.v1(xs) + cert.b1 / cert.lam
    a, competing_coeff, ours_coeff = envelope_comparison(cert.b1, cert.lam, cert.phi_v1)
    return {
        "x": xs,
        "ours_upper": envelope,
        "ours_lower": -cert.b1 * envelope,
        "ours_abs": np.maximum(envelope, cert.b1 * envelope),
        "competing": a * (1.0 + cert.b1) * cert.c1 * np.square(xs),
        "comparison_a": a,
        "competing_asymptotic_coeff": competing_coeff,
        "ours_asymptotic_coeff": ours_coeff,
    }


def drift_spot_check(
    model: GIG1Model,
    cert: GIG1Certificate,
    n_points: int,
    rng: np.random.Generator,
) -> float:
    """Worst drift-inequality violation at random off-grid points.

    Samples x uniformly on [0, horizon] and evaluates
    (Pv1)(x) - v1(x) + max(x, 1) - b1*I[x <= x0]; the returned maximum
    should not exceed the quadrature tolerance.
    """
    horizon = model.drift_horizon() + model.horizon_pad
    xs = rng.uniform(0.0, horizon, size=n_points)
    violation = -model.drift_margin(xs) - cert.b1 * (xs <= cert.x0)
    return float(violation.max())


class QueueSampler:
    """Lindley-recursion sampler wired to the certificate's scheme.

    phi is sampled by inverse CDF on its quadrature representation (atom
    at 0 plus a piecewise-linear density CDF). The residual kernel Q is
    sampled by rejection: propose a one-step transition from x and accept
    with probability 1 - psi(y)/p(x, y), where psi is the unnormalized
    minorizing measure; acceptance happens with overall probability
    1 - lam, which is exactly the Q-normalization.
    """

    def __init__(self, model: GIG1Model, cert: GIG1Certificate):
        self.x0 = cert.x0
        self.lam = cert.lam
        self.m = 1
        self.atom = cert.atom
        self.ys = cert.ys
        self.density = cert.density
        dist = model.increment
        self._dist = dist
        self._normal = getattr(dist, "dist", None) is not None and dist.dist.name == "norm"
        if self._normal:
            self._mu, self._sigma = float(dist.mean()), float(dist.std())
        cum = cumulative_trapezoid(cert.density, cert.ys, initial=0.0)
        self._phi_cum = (cert.atom + cum) / cert.lam
        self._atom_p = cert.atom / cert.lam

    # increment law, with a fast path for normal increments
    def _draw_z(self, rng) -> float:
        if self._normal:
            return rng.normal(self._mu, self._sigma)
        return float(self._dist.ppf(rng.random()))

    def _pdf_z(self, z: float) -> float:
        if self._normal:
            t = (z - self._mu) / self._sigma
            return math.exp(-0.5 * t * t) / (self._sigma * math.sqrt(2.0 * math.pi))
        return float(self._dist.pdf(z))

    def _cdf_z(self, z: float) -> float:
        if self._normal:
            return 0.5 * math.erfc((self._mu - z) / (self._sigma * math.sqrt(2.0)))
        return float(self._dist.cdf(z))

    def step(self, x: float, rng) -> float:
        w = x + self._draw_z(rng)
        return w if w > 0.0 else 0.0

    def charge(self, x: float) -> float:
        return x

    def in_small_set(self, x: float) -> bool:
        return x <= self.x0

    def _psi(self, y: float) -> float:
        """Unnormalized minorizing density at y > 0 (0 beyond the grid)."""
        if y <= 0.0 or y >= self.ys[-1]:
            return 0.0
        return float(np.interp(y, self.ys, self.density))

    def sample_phi(self, rng) -> float:
        u = rng.random()
        if u < self._atom_p:
            return 0.0
        return float(np.interp(u, self._phi_cum, self.ys))

    def sample_residual(self, x: float, rng) -> float:
        while True:
            y = self.step(x, rng)
            if y == 0.0:
                p = self._cdf_z(-x)
                accept = 1.0 - (self.atom / p if p > 0.0 else 1.0)
            else:
                p = self._pdf_z(y - x)
                accept = 1.0 - (self._psi(y) / p if p > 0.0 else 1.0)
            if rng.random() < accept:
                return y


def make_sampler(model: GIG1Model, cert: GIG1Certificate) -> SamplerChain:
    impl = QueueSampler(model, cert)
    return SamplerChain(
        step=impl.step,
        charge=impl.charge,
        in_small_set=impl.in_small_set,
        m=1,
        lam=impl.lam,
        sample_phi=impl.sample_phi,
        sample_residual=impl.sample_residual,
    )


def mc_validate(
    model: GIG1Model,
    cert: GIG1Certificate,
    x_list,
    n_cycles: int,
    master_seed: int,
    workers: int = 1,
    max_steps: int = 10**8,
) -> dict:
    """Estimate g*(x) by regenerative cycles and check the envelope bounds.

    pi(f) is estimated first by the ratio estimator over cycles started
    from phi; each g*(x) then uses its own disjoint block of cycle
    streams, so one master seed reproduces the whole report. Containment
    is asserted within 3 standard errors of each estimate.
    """
    sc = make_sampler(model, cert)
    pif = estimate_pif(sc, n_cycles, master_seed, workers=workers, max_steps=max_steps)
    rows = []
    all_inside = True
    for k, x in enumerate(x_list):
        est = estimate_gstar(
            sc,
            float(x),
            pif.point,
            n_cycles,
            master_seed,
            workers=workers,
            stream_offset=(k + 1) * n_cycles,
            max_steps=max_steps,
        )
        envelope = float(cert.v1(np.asarray(x)) + cert.b1 / cert.lam)
        lower, upper = -cert.b1 * envelope, envelope
        inside = (
            est.point >= lower - 3.0 * est.std_error
            and est.point <= upper + 3.0 * est.std_error
        )
        all_inside &= inside
        rows.append(
            {
                "x": float(x),
                "estimate": est.point,
                "std_error": est.std_error,
                "bound_lower": lower,
                "bound_upper": upper,
                "inside": inside,
            }
        )
    return {
        "pi_f": {"estimate": pif.point, "std_error": pif.std_error},
        "n_cycles": n_cycles,
        "seed": master_seed,
        "points": rows,
        "all_inside": all_inside,
    }


def with_x0(model: GIG1Model, x0: float) -> GIG1Model:
    """A copy of the model with the small-set endpoint pinned."""
    return replace(model, x0=x0)
