import numpy as np
import pytest
import scipy.stats as st

from multicut.rng import gaussian_cdf, gaussian_quantile, mix64, stream


def test_streams_are_deterministic():
    a = stream(42, 1, 2)
    b = stream(42, 1, 2)
    assert [a.next_uint64() for _ in range(10)] == [b.next_uint64() for _ in range(10)]


def test_distinct_keys_give_distinct_streams():
    draws = {stream(7, 0, k).next_uint64() for k in range(64)}
    assert len(draws) == 64
    assert stream(7, 0, 1).next_uint64() != stream(8, 0, 1).next_uint64()


def test_uniform_is_open_interval():
    g = stream(3, 9)
    us = [g.uniform() for _ in range(10000)]
    assert all(0.0 < u < 1.0 for u in us)
    assert abs(np.mean(us) - 0.5) < 0.02


def test_uniform_int_is_uniform():
    g = stream(11, 4)
    counts = np.bincount([g.uniform_int(1, 5) for _ in range(10000)], minlength=6)[1:]
    chi2 = st.chisquare(counts)
    assert chi2.pvalue > 1e-4


def test_choice_respects_weights():
    g = stream(17, 1)
    draws = [g.choice([0.2, 0.8]) for _ in range(10000)]
    frac = np.mean(draws)
    assert 0.77 < frac < 0.83


def test_quantile_reference_value():
    # tabulated value of the 0.975 normal quantile
    assert gaussian_quantile(0.975) == pytest.approx(1.95996398454, abs=1e-5)


def test_quantile_matches_scipy_everywhere():
    grid = np.concatenate([
        np.linspace(1e-10, 1 - 1e-10, 4001), [1e-12, 1 - 1e-12, 0.5, 0.025]])
    err = max(abs(gaussian_quantile(float(p)) - st.norm.ppf(p)) for p in grid)
    assert err < 1e-9


def test_quantile_inverts_cdf():
    for p in (0.001, 0.3, 0.5, 0.77, 0.999):
        assert gaussian_cdf(gaussian_quantile(p)) == pytest.approx(p, abs=1e-12)


def test_quantile_rejects_endpoints():
    with pytest.raises(ValueError):
        gaussian_quantile(0.0)
    with pytest.raises(ValueError):
        gaussian_quantile(1.0)


def test_normal_moments():
    g = stream(23, 0)
    xs = np.array([g.normal() for _ in range(20000)])
    assert abs(xs.mean()) < 0.03
    assert abs(xs.std() - 1.0) < 0.03


def test_mix64_is_pure():
    assert mix64(12345) == mix64(12345)
    assert mix64(12345) != mix64(12346)
    assert 0 <= mix64(2**64 + 5) < 2**64
