import numpy as np
import pytest
from scipy import stats

from markov_poisson.certify import minorize, verify_bundle
from markov_poisson.chain import validate_chain
from markov_poisson.errors import MaxStepsExceeded, MissingBridgeSampler
from markov_poisson.mc import (
    SamplerChain,
    build_sampler,
    cycle_stream,
    estimate_gstar,
    estimate_pif,
    simulate_cycle,
)
from markov_poisson.split import canonical_solution, cycle_values, hitting


@pytest.fixture
def chain():
    return validate_chain([[0.5, 0.5], [0.25, 0.75]])


@pytest.fixture
def bundle(chain):
    return verify_bundle(chain, [1, 0], [1, 4], [1, 5], [0], 1)


def test_cycle_from_inside_small_set_is_deterministic(chain, bundle):
    # from state 0 with lam = 1 and m = 1 every cycle is one step long
    sc = build_sampler(chain, bundle, [1, 0])
    for i in range(50):
        cs = simulate_cycle(sc, 0, cycle_stream(1, i))
        assert cs.length == 1
        assert cs.sum_f == 1.0


def test_cycle_length_at_least_m(chain):
    bundle = verify_bundle(chain, [1, 0], [1, 4], [1, 5], [0], 2)
    sc = build_sampler(chain, bundle, [1, 0])
    for i in range(50):
        assert simulate_cycle(sc, 1, cycle_stream(2, i)).length >= 2


def test_zero_charge_gives_zero_sum(chain, bundle):
    sc = build_sampler(chain, bundle, [0, 0])
    for i in range(20):
        assert simulate_cycle(sc, 1, cycle_stream(3, i)).sum_f == 0.0


def test_cycle_moments_match_exact(chain, bundle):
    sc = build_sampler(chain, bundle, [1, 0])
    sums = np.empty(10000)
    lengths = np.empty(10000)
    for i in range(10000):
        cs = simulate_cycle(sc, 1, cycle_stream(4, i))
        sums[i], lengths[i] = cs.sum_f, cs.length
    # exact: E sum_f = 1, E length = 5 from state 1
    assert abs(sums.mean() - 1.0) <= 3 * sums.std(ddof=1) / 100 + 1e-12
    assert abs(lengths.mean() - 5.0) <= 3 * lengths.std(ddof=1) / 100


def test_estimate_gstar_two_state(chain, bundle):
    sc = build_sampler(chain, bundle, [1, 0])
    est = estimate_gstar(sc, 1, 1 / 3, 20000, master_seed=11)
    assert abs(est.point - (-2 / 3)) <= 3 * est.std_error
    est0 = estimate_gstar(sc, 0, 1 / 3, 20000, master_seed=12)
    assert abs(est0.point - 2 / 3) <= 3 * est0.std_error


def test_estimate_gstar_constant_reward_is_exact(chain, bundle):
    sc = build_sampler(chain, bundle, [2.0, 2.0])
    est = estimate_gstar(sc, 1, 2.0, 500, master_seed=13)
    assert est.point == 0.0
    assert est.std_error == 0.0


def test_estimate_pif_two_state(chain, bundle):
    sc = build_sampler(chain, bundle, [1, 0])
    est = estimate_pif(sc, 20000, master_seed=14)
    assert abs(est.point - 1 / 3) <= 3 * est.std_error


def test_estimate_pif_unit_charge_is_exactly_one(chain, bundle):
    sc = build_sampler(chain, bundle, [1.0, 1.0])
    est = estimate_pif(sc, 200, master_seed=15)
    assert est.point == 1.0


def test_identical_seeds_identical_estimates(chain, bundle):
    sc = build_sampler(chain, bundle, [1, 0])
    a = estimate_gstar(sc, 1, 1 / 3, 2000, master_seed=99)
    b = estimate_gstar(sc, 1, 1 / 3, 2000, master_seed=99)
    assert (a.point, a.std_error) == (b.point, b.std_error)
    c = estimate_gstar(sc, 1, 1 / 3, 2000, master_seed=100)
    assert a.point != c.point


def test_worker_count_does_not_change_estimates(chain, bundle):
    sc = build_sampler(chain, bundle, [1, 0])
    serial = estimate_gstar(sc, 1, 1 / 3, 400, master_seed=7)
    parallel = estimate_gstar(sc, 1, 1 / 3, 400, master_seed=7, workers=2)
    assert (serial.point, serial.std_error) == (parallel.point, parallel.std_error)


def test_regeneration_endpoint_distribution(chain):
    # with lam < 1 the residual kernel is exercised; the post-cycle state
    # must still follow phi (goodness of fit at significance 1e-3)
    bundle = verify_bundle(chain, [1, 0], [1, 4], [1, 5], [0, 1], 1)
    assert bundle.lam == pytest.approx(0.75)
    sc = build_sampler(chain, bundle, [1, 0])
    counts = np.zeros(2)
    n = 10000
    for i in range(n):
        cs = simulate_cycle(sc, 1, cycle_stream(21, i))
        counts[cs.end] += 1
    expected = bundle.phi.mass * n
    result = stats.chisquare(counts, expected)
    assert result.pvalue > 1e-3


def test_cycle_length_matches_exact_with_residual_kernel(chain):
    bundle = verify_bundle(chain, [1, 0], [1, 4], [1, 5], [0, 1], 1)
    exact = cycle_values(chain, bundle, [1, 0])
    sc = build_sampler(chain, bundle, [1, 0])
    lengths = np.empty(10000)
    for i in range(10000):
        rng = cycle_stream(22, i)
        start = sc.sample_phi(rng)
        lengths[i] = simulate_cycle(sc, start, rng).length
    se = lengths.std(ddof=1) / 100
    assert abs(lengths.mean() - exact.tau_at_phi) <= 3 * se


def test_mc_matches_exact_on_random_instances():
    rng = np.random.default_rng(2718)
    for k in range(10):
        n = int(rng.integers(2, 8))
        chain = validate_chain(rng.dirichlet(np.ones(n), size=n))
        f = rng.uniform(0, 2, n)
        C = sorted(rng.choice(n, size=int(rng.integers(1, 3)), replace=False).tolist())
        m = 1 + k % 2
        _, v1 = hitting(chain, C, f)
        _, v2 = hitting(chain, C, np.ones(n))
        bundle = verify_bundle(chain, f, v1, v2, C, m)
        g = canonical_solution(chain, bundle, f).values
        from markov_poisson.chain import stationary

        pi_f = float(stationary(chain).mass @ f)
        sc = build_sampler(chain, bundle, f)
        x0 = int(rng.integers(0, n))
        est = estimate_gstar(sc, x0, pi_f, 4000, master_seed=1000 + k)
        assert abs(est.point - g[x0]) <= 3 * max(est.std_error, 1e-12), (
            f"instance {k}: {est.point} vs exact {g[x0]} (se {est.std_error})"
        )


def test_missing_bridge_sampler_raises(chain, bundle):
    sc = SamplerChain(
        step=lambda x, rng: x,
        charge=lambda x: 0.0,
        in_small_set=lambda x: True,
        m=2,
        lam=1.0,
        sample_phi=lambda rng: 0,
    )
    with pytest.raises(MissingBridgeSampler):
        simulate_cycle(sc, 0, cycle_stream(0, 0))


def test_max_steps_guard(chain, bundle):
    # state 1 only reaches the small set {0} with probability 1/4 per step,
    # so a 2-step budget is exhausted almost surely under this seed
    sc = build_sampler(chain, bundle, [1, 0])
    with pytest.raises(MaxStepsExceeded):
        for i in range(50):
            simulate_cycle(sc, 1, cycle_stream(33, i), max_steps=2)


def test_minorize_only_certificate_supported(chain):
    small = minorize(chain, [0], 1)
    sc = build_sampler(chain, small, [1, 0])
    cs = simulate_cycle(sc, 1, cycle_stream(8, 0))
    assert cs.length >= 1
