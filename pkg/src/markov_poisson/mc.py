"""Regenerative Monte Carlo over sampler-defined chains.

A cycle runs the one-step sampler to the next eligible visit of the
small set, tosses a Bernoulli(lambda) coin there, draws the m-step-ahead
endpoint from phi (success) or the residual kernel (failure), fills the
m-1 intermediate indices with the endpoint-conditioned bridge sampler,
and stops at the first success. Visits to the small set strictly inside
a bridge segment never toss coins; the next eligible visit is the first
one at least m steps after the previous toss.

Randomness is drawn from counter-based Philox streams keyed by
(master_seed, cycle_index), so estimates are bitwise reproducible for a
fixed master seed regardless of worker count, and cycles can run
concurrently. Sampler procedures must be picklable (plain functions or
methods of module-level classes) when workers > 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .certify import CertificateBundle, SmallSetCertificate
from .chain import FiniteChain, kernel_powers, values_of
from .errors import MaxStepsExceeded, MissingBridgeSampler
from .split import residual_kernel

DEFAULT_MAX_STEPS = 10**8


def cycle_stream(master_seed: int, cycle_index: int) -> np.random.Generator:
    """The dedicated RNG stream of one cycle: Philox keyed by (seed, index)."""
    key = np.array([master_seed, cycle_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SamplerChain:
    """Step-sampler interface for a chain with a known regeneration scheme.

    ``sample_residual`` may be None when lam = 1; ``sample_bridge`` is
    required for m >= 2 and must return the m-1 intermediate states given
    (start, endpoint). ``charge`` is the nonnegative reward f.
    """

    step: Callable[[Any, np.random.Generator], Any]
    charge: Callable[[Any], float]
    in_small_set: Callable[[Any], bool]
    m: int
    lam: float
    sample_phi: Callable[[np.random.Generator], Any]
    sample_residual: Callable[[Any, np.random.Generator], Any] | None = None
    sample_bridge: Callable[[Any, Any, np.random.Generator], Sequence[Any]] | None = None


@dataclass(frozen=True)
class CycleSample:
    """One simulated regeneration cycle."""

    sum_f: float
    length: int
    start: Any
    end: Any
    seed: Any = None


@dataclass(frozen=True)
class MCEstimate:
    """A point estimate with its standard error and provenance."""

    point: float
    std_error: float
    n_cycles: int
    seed: int


def simulate_cycle(
    sc: SamplerChain,
    x0,
    rng: np.random.Generator,
    max_steps: int = DEFAULT_MAX_STEPS,
    seed=None,
) -> CycleSample:
    """Simulate one cycle from x0 and accumulate the charge over 0..tau-1.

    The endpoint drawn at the successful toss is excluded from the sum
    (it has index tau) but returned as ``end``; its law is phi.

    Raises MaxStepsExceeded when the step budget runs out before a
    regeneration, and MissingBridgeSampler for m >= 2 without a bridge.
    """
    if sc.m >= 2 and sc.sample_bridge is None:
        raise MissingBridgeSampler(f"m={sc.m} requires a bridge sampler")
    if sc.lam < 1.0 and sc.sample_residual is None:
        raise ValueError("lam < 1 requires a residual sampler")
    x = x0
    total = 0.0
    t = 0
    while True:
        while not sc.in_small_set(x):
            total += sc.charge(x)
            x = sc.step(x, rng)
            t += 1
            if t > max_steps:
                raise MaxStepsExceeded(max_steps)
        success = rng.random() < sc.lam
        y = sc.sample_phi(rng) if success else sc.sample_residual(x, rng)
        total += sc.charge(x)
        if sc.m >= 2:
            for z in sc.sample_bridge(x, y, rng):
                total += sc.charge(z)
        t += sc.m
        if t > max_steps:
            raise MaxStepsExceeded(max_steps)
        if success:
            return CycleSample(sum_f=total, length=t, start=x0, end=y, seed=seed)
        x = y


def _cycle_batch(args):
    sc, x0, master_seed, lo, hi, stream_offset, max_steps = args
    sums = np.empty(hi - lo)
    lengths = np.empty(hi - lo)
    for i in range(lo, hi):
        rng = cycle_stream(master_seed, stream_offset + i)
        start = sc.sample_phi(rng) if x0 is None else x0
        cs = simulate_cycle(sc, start, rng, max_steps=max_steps, seed=(master_seed, stream_offset + i))
        sums[i - lo] = cs.sum_f
        lengths[i - lo] = cs.length
    return sums, lengths


def run_cycles(
    sc: SamplerChain,
    x0,
    n_cycles: int,
    master_seed: int,
    workers: int = 1,
    stream_offset: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
):
    """Per-cycle (sum_f, length) arrays for i.i.d. cycles from x0.

    ``x0=None`` draws each cycle's start from phi using the cycle's own
    stream. Results are concatenated in cycle-index order, so the arrays
    (and anything reduced from them) do not depend on ``workers``.
    """
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    if workers <= 1:
        return _cycle_batch((sc, x0, master_seed, 0, n_cycles, stream_offset, max_steps))
    from concurrent.futures import ProcessPoolExecutor

    bounds = np.linspace(0, n_cycles, workers + 1, dtype=int)
    jobs = [
        (sc, x0, master_seed, int(lo), int(hi), stream_offset, max_steps)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_cycle_batch, jobs))
    sums = np.concatenate([p[0] for p in parts])
    lengths = np.concatenate([p[1] for p in parts])
    return sums, lengths


def estimate_gstar(
    sc: SamplerChain,
    x0,
    pi_f: float,
    n_cycles: int,
    master_seed: int,
    workers: int = 1,
    stream_offset: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> MCEstimate:
    """Estimate g*(x0) = E_x0 sum_{j<tau} (f - pi_f)(X_j) from i.i.d. cycles.

    Each cycle contributes sum_f - pi_f * length; the standard error is
    the sample standard deviation over sqrt(n_cycles).
    """
    sums, lengths = run_cycles(
        sc, x0, n_cycles, master_seed, workers, stream_offset, max_steps
    )
    y = sums - pi_f * lengths
    point = float(y.mean())
    se = float(y.std(ddof=1) / np.sqrt(n_cycles)) if n_cycles > 1 else 0.0
    return MCEstimate(point=point, std_error=se, n_cycles=n_cycles, seed=master_seed)


def estimate_pif(
    sc: SamplerChain,
    n_cycles: int,
    master_seed: int,
    workers: int = 1,
    stream_offset: int = 0,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> MCEstimate:
    """Ratio estimator of pi(f): total charge over total length, from phi.

    The standard error uses the delta method for the regenerative ratio:
    sd(sum_f - r*length) / (mean length * sqrt(n)).
    """
    sums, lengths = run_cycles(
        sc, None, n_cycles, master_seed, workers, stream_offset, max_steps
    )
    r = float(sums.sum() / lengths.sum())
    if n_cycles > 1:
        resid = sums - r * lengths
        se = float(resid.std(ddof=1) / (lengths.mean() * np.sqrt(n_cycles)))
    else:
        se = 0.0
    return MCEstimate(point=r, std_error=se, n_cycles=n_cycles, seed=master_seed)


class FiniteChainSampler:
    """Exact sampler machinery for a finite chain under a small-set scheme.

    The bridge sampler draws the intermediate states by sequential
    conditionals: given the previous bridge state w and the endpoint y at
    lag r, the next state has law proportional to P(w, .) * P^{r-1}(., y).
    """

    def __init__(self, chain: FiniteChain, small: SmallSetCertificate, f):
        self.kernel = chain.kernel
        self.cdf = np.cumsum(chain.kernel, axis=1)
        self.f = values_of(f, chain.n)
        self.members = frozenset(small.C)
        self.c_index = {w: i for i, w in enumerate(small.C)}
        self.m = small.m
        self.lam = small.lam
        self.phi_cdf = np.cumsum(small.phi.mass)
        rows = residual_kernel(chain, small).rows
        self.q_cdf = np.cumsum(rows, axis=1) if rows is not None else None
        self.powers = kernel_powers(chain, small.m)

    @staticmethod
    def _draw(cdf_row: np.ndarray, rng) -> int:
        idx = int(np.searchsorted(cdf_row, rng.random(), side="right"))
        return min(idx, len(cdf_row) - 1)

    def step(self, x: int, rng) -> int:
        return self._draw(self.cdf[x], rng)

    def charge(self, x: int) -> float:
        return float(self.f[x])

    def in_small_set(self, x: int) -> bool:
        return x in self.members

    def sample_phi(self, rng) -> int:
        return self._draw(self.phi_cdf, rng)

    def sample_residual(self, x: int, rng) -> int:
        return self._draw(self.q_cdf[self.c_index[x]], rng)

    def sample_bridge(self, x: int, y: int, rng) -> list:
        path = []
        w = x
        for j in range(1, self.m):
            probs = self.kernel[w, :] * self.powers[self.m - j][:, y]
            total = probs.sum()
            if total <= 0.0:
                raise ValueError(f"no bridge path from {x} to {y} at lag {self.m}")
            w = self._draw(np.cumsum(probs / total), rng)
            path.append(w)
        return path


def build_sampler(chain: FiniteChain, cert, f) -> SamplerChain:
    """Wire a finite chain into the sampler interface.

    ``cert`` is a SmallSetCertificate or a CertificateBundle (only the
    minorization part is used). The bridge sampler is derived exactly
    from the endpoint-conditioned kernel, so m >= 2 works out of the box.
    """
    small = cert.small if isinstance(cert, CertificateBundle) else cert
    impl = FiniteChainSampler(chain, small, f)
    return SamplerChain(
        step=impl.step,
        charge=impl.charge,
        in_small_set=impl.in_small_set,
        m=impl.m,
        lam=impl.lam,
        sample_phi=impl.sample_phi,
        sample_residual=impl.sample_residual if impl.q_cdf is not None else None,
        sample_bridge=impl.sample_bridge if impl.m >= 2 else None,
    )
