import numpy as np
import pytest
from scipy import stats

from spde_mkv.noise import NoiseStream, StreamBundle, gaussian_block, philox4x32


@pytest.mark.parametrize("ctr,key,expected", [
    ([0, 0, 0, 0], [0, 0], [0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8]),
    ([0xFFFFFFFF] * 4, [0xFFFFFFFF] * 2, [0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD]),
    ([0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344], [0xA4093822, 0x299F31D0],
     [0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1]),
])
def test_philox_known_answers(ctr, key, expected):
    assert [int(v) for v in philox4x32(ctr, key)] == expected


def test_block_is_deterministic():
    s = NoiseStream(42, "exp", 3, 1)
    a = gaussian_block(s, 17, 5)
    b = s.block(17, 5)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (5,)
    # querying other steps in between does not change the block
    s.block(3, 5)
    np.testing.assert_array_equal(gaussian_block(s, 17, 5), a)


def test_keys_separate_streams():
    base = NoiseStream(42, "exp", 3, 1).block(0, 4)
    for other in (NoiseStream(43, "exp", 3, 1), NoiseStream(42, "exq", 3, 1),
                  NoiseStream(42, "exp", 4, 1), NoiseStream(42, "exp", 3, 2)):
        assert not np.array_equal(other.block(0, 4), base)
    assert not np.array_equal(NoiseStream(42, "exp", 3, 1).block(1, 4), base)


def test_bundle_rows_match_single_streams():
    bundle = StreamBundle(9, "bundle", (0, 5, 2**33 + 1), 2)
    block = bundle.block(7, 3)
    for i in range(3):
        np.testing.assert_array_equal(block[i], bundle.stream(i).block(7, 3))


def test_prefix_consistency_across_dimensions():
    s = NoiseStream(1, "dims", 0)
    np.testing.assert_array_equal(s.block(0, 3), s.block(0, 6)[:3])


def test_rejects_bad_dimension():
    with pytest.raises(ValueError):
        gaussian_block(NoiseStream(0), 0, 0)
    with pytest.raises(ValueError):
        gaussian_block(NoiseStream(0), -1, 2)


def _many(n, experiment="stats", particle=0):
    # 1000 steps x n/1000 modes from one stream
    K = n // 1000
    s = NoiseStream(2024, experiment, particle)
    return np.concatenate([s.block(m, K) for m in range(1000)])


def test_moments_clt_bounds():
    z = StreamBundle.range(77, "clt", 1000).block(0, 1000).ravel()
    assert z.size == 10**6
    assert abs(z.mean()) < 4 / np.sqrt(z.size)
    assert abs(z.var() - 1.0) < 0.01


def test_kolmogorov_smirnov():
    z = _many(10**5)
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_particle_streams_uncorrelated():
    n = 10**5
    a = _many(n, particle=0)
    b = _many(n, particle=1)
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho) < 5 / np.sqrt(n)
