import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rocftp.cftp import (
    CftpBudgetError,
    RandomnessLog,
    ar1_multishift_step,
    cftp_demo,
    cftp_run,
    stationary_sd,
)
from rocftp.multishift import CouplerDraw, apply_shift
from rocftp.rng import new_stream

D = CouplerDraw(1.0, 0.5, 1.0)


def test_rho_zero_forgets_state():
    assert {ar1_multishift_step(0.0, s, D) for s in (-50.0, 0.0, 3.3)} == {apply_shift(D, 0.0)}


def test_hand_evaluated_step():
    assert ar1_multishift_step(0.92, 100.0, D) == 92.5


@given(st.floats(0, 0.999), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_step_monotone_for_nonnegative_rho(rho, x, y):
    lo, hi = min(x, y), max(x, y)
    assert ar1_multishift_step(rho, lo, D) <= ar1_multishift_step(rho, hi, D)


def test_rho_zero_coalesces_on_first_pass():
    for r in range(50):
        _, back = cftp_run(0.0, (-100.0, 100.0), new_stream(3, r))
        assert back == 2


def test_replay_is_deterministic():
    a = cftp_run(0.92, (-100.0, 100.0), new_stream(7, 1))
    b = cftp_run(0.92, (-100.0, 100.0), new_stream(7, 1))
    assert a == b


def test_output_independent_of_budget():
    x, back = cftp_run(0.92, (-100.0, 100.0), new_stream(7, 2), max_doublings=40)
    n = int(np.log2(back))
    assert cftp_run(0.92, (-100.0, 100.0), new_stream(7, 2), max_doublings=n) == (x, back)
    with pytest.raises(CftpBudgetError) as err:
        cftp_run(0.92, (-100.0, 100.0), new_stream(7, 2), max_doublings=n - 1)
    assert err.value.log_size == 2 ** (n - 1)


def test_log_is_write_once_and_replayed_verbatim():
    log = RandomnessLog()
    _, back = cftp_run(0.92, (-100.0, 100.0), new_stream(9, 0), log=log)
    assert len(log) == back
    assert sorted(log.draws) == list(range(-back + 1, 1))
    assert log.reuse_consistent()
    # times near the present are replayed on every pass
    passes = {p for p, t, _ in log.reads if t == 0}
    assert passes == set(range(1, int(np.log2(back)) + 1))
    with pytest.raises(KeyError):
        log.put(0, D)


def test_bounding_paths_never_cross():
    log = RandomnessLog()
    _, back = cftp_run(0.92, (-100.0, 100.0), new_stream(9, 1), log=log)
    lo, hi = -100.0, 100.0
    for t in range(-back + 1, 1):
        lo = ar1_multishift_step(0.92, lo, log.draws[t])
        hi = ar1_multishift_step(0.92, hi, log.draws[t])
        assert lo <= hi


def test_demo_rows_and_variance():
    rows = cftp_demo(0.92, (-100.0, 100.0), 2000, seed=1)
    assert [r.rep for r in rows] == list(range(2000))
    assert all(r.reuse_ok for r in rows)
    x = np.array([r.sample for r in rows])
    # variance of a normal sample: SE = var * sqrt(2 / n)
    var = stationary_sd(0.92) ** 2
    assert abs(x.var() - var) < 4 * var * np.sqrt(2 / 2000)


def test_argument_checks():
    s = new_stream(1, 1)
    with pytest.raises(ValueError):
        cftp_run(0.5, (1.0, 1.0), s)
    with pytest.raises(ValueError):
        cftp_run(1.0, (0.0, 1.0), s)
    with pytest.raises(ValueError):
        cftp_run(0.5, (0.0, 1.0), s, max_doublings=0)
