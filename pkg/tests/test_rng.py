import subprocess
import sys

import numpy as np
from scipy import stats

from rocftp.rng import derive_seed, new_stream


def test_same_key_same_sequence():
    a, b = new_stream(42, 0), new_stream(42, 0)
    assert [a.next_uniform() for _ in range(1000)] == [b.next_uniform() for _ in range(1000)]


def test_distinct_streams_differ_early():
    a, b = new_stream(42, 0), new_stream(42, 1)
    assert [a.next_uniform() for _ in range(10)] != [b.next_uniform() for _ in range(10)]


def test_bit_exact_across_processes():
    code = "from rocftp.rng import new_stream; print(new_stream(42, 7).next_uniform().hex())"
    outs = {subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                           check=True).stdout for _ in range(2)}
    assert len(outs) == 1
    assert float.fromhex(outs.pop().strip()) == new_stream(42, 7).next_uniform()


def test_batch_matches_scalar_draws():
    a, b = new_stream(5, 3), new_stream(5, 3)
    batch = a.uniforms(257)
    assert np.array_equal(batch, [b.next_uniform() for _ in range(257)])
    # the stream position is shared by both access paths
    assert a.next_uniform() == b.next_uniform()


def test_uniform_range_mean_and_ks():
    u = new_stream(1, 0).uniforms(100_000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    assert stats.kstest(u, "uniform").statistic < 0.006


def test_normal_moments_and_ks():
    z = new_stream(1, 1).standard_normals(100_000)
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1.0) < 0.02
    assert stats.kstest(z, "norm").statistic < 0.006


def test_normal_consumes_one_uniform():
    a, b = new_stream(9, 9), new_stream(9, 9)
    a.next_standard_normal()
    b.next_uniform()
    assert a.next_uniform() == b.next_uniform()


def test_normal_replay():
    assert new_stream(3, 4).next_standard_normal() == new_stream(3, 4).next_standard_normal()


def test_derive_seed_is_pure_and_spreads():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(1, 7, r) for r in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2**64 for s in seeds)
