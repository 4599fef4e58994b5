"""Rule-kernel oracles and properties.

The closed forms are re-derived here with plain math.exp and explicit
branching, independent of the numpy implementation, and a handful of
expected values are frozen as literals (computed once with 64-bit floats
and pasted in). If either side drifts, these fail.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chronospike.config import PlasticityParams
from chronospike import plasticity as pl

P = PlasticityParams(
    a_plus=0.1,
    a_minus=0.3,
    tau_plus=5.0,
    tau_minus=5.0,
    b_plus=0.1,
    b_minus=0.1,
    sigma_plus=5.0,
    sigma_minus=5.0,
    epsilon=1.0,
)


def ref_weight(dt, p):
    if dt >= 0:
        return p.a_plus * math.exp(-dt / p.tau_plus)
    return -p.a_minus * math.exp(dt / p.tau_minus)


def ref_exc_delay(dt, p):
    dtp = dt - p.epsilon
    if dtp >= 0:
        return p.b_plus * math.exp(-dtp / p.sigma_plus)
    return -p.b_minus * math.exp(dtp / p.sigma_minus)


def ref_inh_delay(dt, p):
    if dt >= 0:
        return p.b_minus * math.exp(-dt / p.sigma_minus)
    return -p.b_plus * math.exp(dt / p.sigma_plus)


# -- frozen values ------------------------------------------------------------


def test_stdp_causal_frozen():
    # dt = 4 - 0 - 2 = 2, a_plus=0.1, tau=5
    assert pl.stdp_weight_delta(0, 4, 2.0, P) == pytest.approx(
        0.06703200460356394, abs=0, rel=1e-15
    )


def test_stdp_anticausal_frozen():
    # dt = -3, a_minus=0.3: -0.3*exp(-0.6)
    assert pl.stdp_weight_delta(3, 0, 0.0, P) == pytest.approx(
        -0.16464349082820792, abs=0, rel=1e-15
    )


def test_stdp_simultaneous_is_potentiation():
    assert pl.stdp_weight_delta(2, 2, 0.0, P) == pytest.approx(0.1, abs=0)


def test_reward_scaling_frozen():
    p = PlasticityParams(a_plus=0.1, tau_plus=5.0)
    # r=0.5, dt=1: 0.5 * 0.1 * exp(-0.2)
    assert pl.reward_stdp_weight_delta(0, 1, 0.0, 0.5, p) == pytest.approx(
        0.0409365376538991, abs=0, rel=1e-15
    )
    assert pl.reward_stdp_weight_delta(0, 1, 0.0, 0.0, p) == 0.0
    assert pl.reward_stdp_weight_delta(0, 1, 0.0, -1.0, p) == pytest.approx(
        -0.0818730753077982, abs=0, rel=1e-15
    )


def test_exc_delay_at_alignment_point():
    # d = t_post - t_pre - epsilon puts dt' exactly at 0: potentiation bound
    assert pl.unsupervised_delay_delta(0, 6, 5.0, P) == pytest.approx(0.1, abs=0)


def test_exc_delay_causal_frozen():
    # dt' = (6 - 0 - 4) - 1 = 1: +0.1*exp(-0.2)
    assert pl.unsupervised_delay_delta(0, 6, 4.0, P) == pytest.approx(
        0.0818730753077982, abs=0, rel=1e-15
    )


def test_exc_delay_late_arrival_shrinks():
    # dt' = (6 - 0 - 6) - 1 = -1: -0.1*exp(-0.2)
    assert pl.unsupervised_delay_delta(0, 6, 6.0, P) == pytest.approx(
        -0.0818730753077982, abs=0, rel=1e-15
    )


def test_exc_delay_kernel_direction_pins():
    """The branch orientation that makes d -> (t_post - t_pre) - epsilon an
    attractor: positive kernel value at dt' = 0+ and negative at dt' < 0."""
    p = PlasticityParams(b_plus=0.2, b_minus=0.3, sigma_plus=5.0, sigma_minus=5.0, epsilon=0.0)
    assert pl.unsupervised_delay_delta(0, 0, 0.0, p) == pytest.approx(0.2, abs=0)
    assert pl.unsupervised_delay_delta(0, -3, 0.0, p) == pytest.approx(
        -0.16464349082820792, abs=0, rel=1e-15
    )


def test_inh_delay_causal_lengthens():
    # dt = 0, b_minus scales the causal branch, no epsilon offset
    p = PlasticityParams(b_plus=0.1, b_minus=0.2, sigma_plus=5.0, sigma_minus=5.0, epsilon=1.0)
    assert pl.inhibitory_delay_delta(0, 0, 0.0, 1.0, p) == pytest.approx(0.2, abs=0)


def test_inh_delay_anticausal_frozen():
    # dt = -2: -r*b_plus*exp(-0.4)
    assert pl.inhibitory_delay_delta(2, 0, 0.0, 1.0, P) == pytest.approx(
        -0.06703200460356394, abs=0, rel=1e-15
    )


def test_inh_delay_ignores_epsilon():
    p_eps = PlasticityParams(epsilon=5.0)
    p_no = PlasticityParams(epsilon=0.0)
    assert pl.inhibitory_delay_delta(0, 3, 1.0, 1.0, p_eps) == pl.inhibitory_delay_delta(
        0, 3, 1.0, 1.0, p_no
    )


def test_inhibitory_weight_rule_same_form_as_excitatory():
    for dt_args in [(0, 4, 2.0), (3, 0, 0.0), (0, 0, 0.0)]:
        assert pl.inhibitory_stdp_weight_delta(*dt_args, 0.7, P) == pytest.approx(
            pl.reward_stdp_weight_delta(*dt_args, 0.7, P), abs=0
        )


# -- reference-evaluator cross-check over a grid ------------------------------


def test_kernels_match_reference_grid():
    params = PlasticityParams(
        a_plus=0.07,
        a_minus=0.11,
        tau_plus=4.0,
        tau_minus=6.0,
        b_plus=0.09,
        b_minus=0.13,
        sigma_plus=3.0,
        sigma_minus=7.0,
        epsilon=2.0,
    )
    for dt in np.arange(-12.0, 12.5, 0.5):
        got_w = pl.stdp_weight_delta(0.0, dt, 0.0, params)
        assert got_w == pytest.approx(ref_weight(dt, params), rel=1e-12, abs=0)
        got_d = pl.unsupervised_delay_delta(0.0, dt, 0.0, params)
        assert got_d == pytest.approx(ref_exc_delay(dt, params), rel=1e-12, abs=0)
        got_i = pl.inhibitory_delay_delta(0.0, dt, 0.0, 1.0, params)
        assert got_i == pytest.approx(ref_inh_delay(dt, params), rel=1e-12, abs=0)


def test_delta_depends_on_time_difference_only():
    # shifting both spikes and compensating through d leaves dt unchanged
    a = pl.stdp_weight_delta(10, 17, 3.0, P)
    b = pl.stdp_weight_delta(110, 117, 3.0, P)
    assert a == b


# -- properties ----------------------------------------------------------------


dt_values = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)
rewards = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


@given(dt=dt_values, r=rewards)
def test_reward_rules_odd_in_r(dt, r):
    plus = pl.reward_stdp_weight_delta(0.0, dt, 0.0, r, P)
    minus = pl.reward_stdp_weight_delta(0.0, dt, 0.0, -r, P)
    assert plus == pytest.approx(-minus, abs=1e-18)
    dplus = pl.reward_delay_delta(0.0, dt, 0.0, r, P)
    dminus = pl.reward_delay_delta(0.0, dt, 0.0, -r, P)
    assert dplus == pytest.approx(-dminus, abs=1e-18)


@given(dt=dt_values, r=rewards)
def test_magnitudes_bounded_by_amplitudes(dt, r):
    assert abs(pl.reward_stdp_weight_delta(0.0, dt, 0.0, r, P)) <= max(P.a_plus, P.a_minus) * abs(r) + 1e-18
    assert abs(pl.reward_delay_delta(0.0, dt, 0.0, r, P)) <= max(P.b_plus, P.b_minus) * abs(r) + 1e-18
    assert abs(pl.inhibitory_delay_delta(0.0, dt, 0.0, r, P)) <= max(P.b_plus, P.b_minus) * abs(r) + 1e-18


@given(dt=st.floats(min_value=0.0, max_value=40.0, allow_nan=False))
def test_causal_magnitude_decays_with_lag(dt):
    near = pl.stdp_weight_delta(0.0, dt, 0.0, P)
    far = pl.stdp_weight_delta(0.0, dt + 1.0, 0.0, P)
    assert near > 0
    assert far < near


@given(dt=dt_values)
def test_unsupervised_equals_reward_at_unit(dt):
    assert pl.unsupervised_delay_delta(0.0, dt, 0.0, P) == pl.reward_delay_delta(
        0.0, dt, 0.0, 1.0, P
    )
    assert pl.stdp_weight_delta(0.0, dt, 0.0, P) == pl.reward_stdp_weight_delta(
        0.0, dt, 0.0, 1.0, P
    )


def test_vectorized_matches_scalar():
    dts = np.array([-3.0, -0.5, 0.0, 0.5, 4.0])
    vec = pl.stdp_weight_delta(0.0, dts, 0.0, P)
    assert isinstance(vec, np.ndarray)
    for i, dt in enumerate(dts):
        assert vec[i] == pl.stdp_weight_delta(0.0, float(dt), 0.0, P)


# -- pairing -------------------------------------------------------------------


def ref_pairs(pre, post, delay):
    """Quadratic-time reference pairing."""
    arrivals = [(t, t + delay) for t in pre]
    out = []
    for t_post in post:
        cand = [(tp, ta) for tp, ta in arrivals if ta <= t_post]
        if cand:
            out.append((cand[-1][0], t_post))
    for tp, ta in arrivals:
        cand = [q for q in post if q < ta]
        if cand:
            out.append((tp, cand[-1]))
    return sorted(out)


def test_pair_spikes_example():
    pre = np.array([0, 5, 9])
    post = np.array([3, 7])
    tp, tq = pl.pair_spikes(pre, post, 2)
    got = sorted(zip(tp.tolist(), tq.tolist()))
    # arrivals at 2, 7, 11: post 3 pairs with arrival 2 (pre 0); post 7 with
    # arrival 7 (pre 5, simultaneous counts causal); arrival 7 sees post 3
    # strictly earlier; arrival 11 sees post 7.
    assert got == [(0, 3), (5, 3), (5, 7), (9, 7)]


def test_pair_spikes_empty_sides():
    tp, tq = pl.pair_spikes(np.array([], np.int64), np.array([3]), 1)
    assert tp.size == 0 and tq.size == 0
    tp, tq = pl.pair_spikes(np.array([3]), np.array([], np.int64), 1)
    assert tp.size == 0 and tq.size == 0


@given(
    pre=st.lists(st.integers(min_value=0, max_value=60), max_size=12),
    post=st.lists(st.integers(min_value=0, max_value=60), max_size=12),
    delay=st.integers(min_value=0, max_value=10),
)
@settings(max_examples=200)
def test_pair_spikes_matches_reference(pre, post, delay):
    pre_a = np.unique(np.asarray(pre, np.int64))
    post_a = np.unique(np.asarray(post, np.int64))
    tp, tq = pl.pair_spikes(pre_a, post_a, delay)
    assert sorted(zip(tp.tolist(), tq.tolist())) == ref_pairs(
        pre_a.tolist(), post_a.tolist(), delay
    )


@given(
    pre=st.lists(st.integers(min_value=0, max_value=60), min_size=1, max_size=12),
    post=st.lists(st.integers(min_value=0, max_value=60), min_size=1, max_size=12),
    delay=st.integers(min_value=0, max_value=10),
)
@settings(max_examples=200)
def test_pair_counts_bounded(pre, post, delay):
    pre_a = np.unique(np.asarray(pre, np.int64))
    post_a = np.unique(np.asarray(post, np.int64))
    tp, _tq = pl.pair_spikes(pre_a, post_a, delay)
    # one causal pair per post spike at most, one anti-causal per pre spike
    assert tp.size <= post_a.size + pre_a.size


# -- clamps and accumulator -----------------------------------------------------


def test_clamps_respect_sign_domains():
    p = PlasticityParams(w_max=1.0, w_inh_min=-1.0, d_max=20.0)
    w = np.array([-0.2, 0.5, 1.7])
    pl.clamp_excitatory_weights(w, p)
    assert w.tolist() == [0.0, 0.5, 1.0]
    wi = np.array([-1.4, -0.3, 0.6])
    pl.clamp_inhibitory_weights(wi, p)
    assert wi.tolist() == [-1.0, -0.3, 0.0]
    d = np.array([-3.0, 4.0, 25.0])
    pl.clamp_delays(d, p)
    assert d.tolist() == [0.0, 4.0, 20.0]
    d2 = np.array([0.5, 4.0])
    pl.clamp_delays(d2, p, floor=1.0)
    assert d2.tolist() == [1.0, 4.0]


def test_accumulator_linear_in_reward():
    acc = pl.UpdateAccumulator({"fwd": (3, 2)})
    acc.add("fwd", (np.array([0, 0, 2]), np.array([1, 1, 0])), dw=np.array([0.1, 0.2, -0.4]))
    assert acc.dw["fwd"][0, 1] == pytest.approx(0.3)
    assert acc.dw["fwd"][2, 0] == pytest.approx(-0.4)
    assert acc.dd["fwd"].sum() == 0.0
    acc.clear()
    assert acc.dw["fwd"].sum() == 0.0
