import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import frame_with_active
from mm_access.metrics import COMPLEXITY_ALGORITHMS, aud_metrics, ber_metrics, complexity_eval
from mm_access.model import SystemConfig

PAPER = SystemConfig(k=100, k_a=8, m_r=2, m=4, n_r=50, j=12)


def activity_of(indices, k=100):
    a = np.zeros(k, dtype=np.int8)
    a[list(indices)] = 1
    return a


# --- aud_metrics -------------------------------------------------------------

def test_aud_perfect_detection():
    truth = activity_of(range(8))
    assert aud_metrics(truth, np.arange(8)) == (0, 0, 0.0)


def test_aud_one_miss_one_false():
    truth = activity_of(range(8))
    gamma = np.array([0, 1, 2, 3, 4, 5, 6, 8])
    e_u, e_f, pe = aud_metrics(truth, gamma)
    assert (e_u, e_f) == (1, 1)
    assert pe == pytest.approx(0.02)


def test_aud_empty_detection():
    assert aud_metrics(activity_of(range(8)), np.array([], dtype=int))[2] == pytest.approx(0.08)


@given(st.integers(0, 5000))
def test_aud_error_rate_in_unit_interval(seed):
    rng = np.random.default_rng(seed)
    truth = activity_of(rng.choice(20, size=rng.integers(0, 10), replace=False), k=20)
    gamma = rng.choice(20, size=rng.integers(0, 12), replace=False)
    e_u, e_f, pe = aud_metrics(truth, gamma)
    assert 0.0 <= pe <= 1.0
    assert e_u <= truth.sum() and e_f <= gamma.size


# --- ber_metrics -------------------------------------------------------------

def _frame(seed=0, cfg=PAPER):
    return frame_with_active(cfg, range(cfg.k_a), np.random.default_rng(seed))


def test_ber_perfect_decoding_is_zero():
    truth, _, _ = _frame()
    gamma = truth.active
    b_m, b_c, ber = ber_metrics(truth, gamma, truth.bits[gamma], PAPER)
    assert (b_m, b_c, ber) == (0, 0, 0.0)


def test_ber_counts_follow_formula():
    # 3 wrong MAP bits + 5 wrong QAM bits, no misses: 8 / 384
    truth, _, _ = _frame(1)
    gamma = truth.active
    bits = truth.bits[gamma].copy()
    bits[0, 0, 0] ^= 1
    bits[1, 2, 1] ^= 1
    bits[2, 4, 0] ^= 1
    bits[3, 0, 2] ^= 1
    bits[3, 1, 3] ^= 1
    bits[4, 2, 2] ^= 1
    bits[5, 3, 3] ^= 1
    bits[6, 5, 2] ^= 1
    b_m, b_c, ber = ber_metrics(truth, gamma, bits, PAPER)
    assert (b_m, b_c) == (3, 5)
    assert ber == pytest.approx(8 / 384)


def test_ber_all_devices_missed():
    truth, _, _ = _frame(2)
    gamma = np.array([], dtype=int)
    bits = np.zeros((0, PAPER.j, PAPER.eta), dtype=np.uint8)
    assert ber_metrics(truth, gamma, bits, PAPER)[2] == pytest.approx(1.0)


def test_ber_false_detections_do_not_count():
    # a falsely detected device's bits never enter the BER numerator
    truth, _, _ = _frame(3)
    gamma = np.concatenate([truth.active, [50]])
    bits = np.concatenate([truth.bits[truth.active],
                           np.ones((1, PAPER.j, PAPER.eta), dtype=np.uint8)])
    assert ber_metrics(truth, gamma, bits, PAPER)[2] == 0.0


@given(st.integers(0, 5000))
def test_ber_in_unit_interval(seed):
    cfg = SystemConfig(k=10, k_a=4, m_r=1, m=4, n_r=8, j=3)
    rng = np.random.default_rng(seed)
    truth, _, _ = frame_with_active(cfg, rng.choice(10, 4, replace=False), rng)
    gamma = rng.choice(10, size=rng.integers(0, 7), replace=False)
    bits = rng.integers(0, 2, size=(gamma.size, cfg.j, cfg.eta), dtype=np.uint8)
    b_m, b_c, ber = ber_metrics(truth, gamma, bits, cfg)
    assert 0.0 <= ber <= 1.0
    # zero only when every active device is detected and decoded cleanly
    detected_all = set(truth.active.tolist()) <= set(gamma.tolist())
    assert (ber == 0.0) == (detected_all and b_m + b_c == 0)


# --- complexity_eval ---------------------------------------------------------

REFERENCE_COUNTS = {
    # algorithm -> (n_r=50, n_r=100) multiplication counts, exact formula values
    "stromp": (9_580_500, 17_581_500),
    "tlsscs-aud": (12_038_100, 42_531_600),
    "aud-lb": (7_114_080, 13_217_280),
    "sic-ssp": (2_100_672, 4_030_272),
    "tlsscs-data": (154_368, 275_968),
    "gsp": (653_184, 1_238_784),
    "ls": (11_712, 22_912),
}


@pytest.mark.parametrize("algorithm", COMPLEXITY_ALGORITHMS)
def test_complexity_reference_values(algorithm):
    lo, hi = REFERENCE_COUNTS[algorithm]
    assert complexity_eval(PAPER, algorithm) == lo
    import dataclasses

    assert complexity_eval(dataclasses.replace(PAPER, n_r=100), algorithm) == hi


def test_complexity_benchmark1_alias():
    assert complexity_eval(PAPER, "benchmark1") == complexity_eval(PAPER, "ls")
    assert complexity_eval(PAPER, "SIC_SSP") == complexity_eval(PAPER, "sic-ssp")


def test_complexity_stromp_grows_linearly_in_n_r():
    import dataclasses

    at_50 = complexity_eval(PAPER, "stromp")
    at_100 = complexity_eval(dataclasses.replace(PAPER, n_r=100), "stromp")
    assert 1.5 < at_100 / at_50 < 2.0


def test_complexity_unknown_algorithm_raises():
    with pytest.raises(ValueError):
        complexity_eval(PAPER, "amp")
