"""Training, evaluation, and presentation orchestration.

Training is layerwise. Phase 1 loops presentations through the
convolutional sheet alone, updating its shared kernels with unsupervised
weight and delay rules plus interval homeostasis, until every map's delay
movement has frozen or the epoch budget runs out. Phase 2 freezes layer 1
(its pooled responses are cached per sample), then trains the decision
layer with the reward-modulated rules and all regulation mechanisms. All
parameter changes are accumulated over one presentation and applied at its
end.

Evaluation runs presentations with plasticity and regulation off; only the
per-class activity gate stays active when configured, since it shapes the
vote rather than the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plasticity as pl
from .config import RunConfig
from .core import DelayBuffer, SpikeRecord, lif_integrate, lif_step
from .events import FrameSequence
from .regulation import (
    DecentralizeGate,
    DecisionWindow,
    FreezeTracker,
    ema_update,
    interval_gain,
    threshold_step,
)
from .topology import Network, conv_forward_currents, pool_earliest


@dataclass
class PresentationResult:
    record: SpikeRecord
    counts: np.ndarray
    first_class: np.ndarray
    group_active: np.ndarray


@dataclass
class PhaseResult:
    converged: bool
    epochs: int
    presentations: int
    gate_violations: int = 0


@dataclass
class TrainResult:
    net: Network
    converged_l1: bool
    converged_l2: bool
    epochs_l1: int
    epochs_l2: int
    presentations: int
    gate_violations: int
    layer1_hash_after_phase1: str
    layer1_hash_final: str


@dataclass
class EvalResult:
    accuracy: float
    n: int
    correct: int
    confusion: np.ndarray
    abstained: np.ndarray
    decision_totals: np.ndarray

    def predicted_frequencies(self) -> np.ndarray:
        total = self.decision_totals.sum()
        return self.decision_totals / total if total else self.decision_totals.astype(float)


# -- single presentation ----------------------------------------------------


def _conv_sim(net: Network, frames: np.ndarray):
    """Run the convolutional sheet; returns (spike tensor, first-spike map)."""
    cur = conv_forward_currents(net, frames)
    t_tot = cur.shape[0]
    v = np.zeros(cur.shape[1:])
    refr = np.full(cur.shape[1:], -(1 << 30), dtype=np.int64)
    spikes = np.zeros(cur.shape, dtype=bool)
    first = np.full(cur.shape[1:], np.inf)
    theta = net.conv_theta[:, None, None]
    lif = net.cfg.lif
    for t in range(t_tot):
        v, refr, spk = lif_step(v, cur[t], t, theta, refr, lif)
        if spk.any():
            spikes[t] = spk
            first = np.where(spk & ~np.isfinite(first), float(t), first)
    return spikes, first


def _pooled_spikes(net: Network, conv_first: np.ndarray):
    """Earliest-spike pooling: at most one spike per pooled unit."""
    pooled = pool_earliest(conv_first, net.cfg.topology.pool)
    m_idx, y_idx, x_idx = np.nonzero(np.isfinite(pooled))
    t = pooled[m_idx, y_idx, x_idx].astype(np.int64)
    units = (m_idx * pooled.shape[1] + y_idx) * pooled.shape[2] + x_idx
    order = np.argsort(t, kind="stable")
    return t[order], units[order]


def _decision_sim(net: Network, pooled_t, pooled_unit, t_input: int, gate: DecentralizeGate):
    """Step the decision layer bin by bin.

    Forward deliveries are precomputed (the pooled layer gets no feedback);
    lateral deliveries go through a ring buffer since they do recur. The
    loop drains all in-flight input after the stimulus ends, with a hard cap
    so self-sustaining lateral loops cannot run forever.
    """
    lif = net.cfg.lif
    d_max_int = int(round(net.cfg.plasticity.d_max))
    n = net.n_dec
    fwd_len = int(t_input) + 2 * (d_max_int + 1) + 2
    fcur = np.zeros((fwd_len, n))
    f_last = -1
    cols = np.arange(n)
    for t_u, u in zip(pooled_t, pooled_unit):
        dint = np.clip(np.rint(net.df[:, u]), 0, d_max_int).astype(np.int64)
        rows = int(t_u) + dint
        fcur[rows, cols] += net.wf[:, u]
        f_last = max(f_last, int(rows.max()))

    have_lat = net.lat_src.size > 0
    out_edges = net.lateral_out_edges() if have_lat else None
    lat_dint = (
        np.clip(np.rint(net.lat_d), 1, d_max_int).astype(np.int64) if have_lat else None
    )
    ring = DelayBuffer(n, net.cfg.plasticity.d_max)
    v = np.zeros(n)
    refr = np.full(n, -(1 << 30), dtype=np.int64)
    gate.begin()
    ts: list[int] = []
    js: list[int] = []
    hard_cap = max(int(t_input), f_last + 1) + net.cfg.harness.flush_factor * (d_max_int + 1)
    t = 0
    while t < hard_cap and (t < t_input or t <= f_last or not ring.empty):
        cur = ring.read(t)
        if t < fwd_len:
            cur = cur + fcur[t]
        v, open_mask = lif_integrate(v, cur, t, refr, lif)
        cand = np.nonzero(open_mask & (v >= net.theta))[0]
        if cand.size:
            allowed = gate.filter(cand)
            fire = cand[allowed]
            if fire.size:
                v[fire] = lif.v_reset
                refr[fire] = t + lif.t_ref
                ts.extend([t] * fire.size)
                js.extend(int(j) for j in fire)
                if have_lat:
                    for j in fire:
                        e = out_edges[j]
                        if e.size:
                            ring.schedule(net.lat_tgt[e], net.lat_w[e], lat_dint[e], t)
        t += 1
    active = gate.active_per_group() if gate.enabled else np.zeros(net.n_classes, np.int64)
    return np.asarray(ts, np.int64), np.asarray(js, np.int64), active


def run_presentation(
    net: Network,
    frames: np.ndarray,
    gate_enabled: bool | None = None,
    limit_frames: int | None = None,
    pooled=None,
    collect_conv: bool = False,
) -> PresentationResult:
    """Run one sample through the full network without any learning.

    Membrane state and buffers live only inside this call, so the network
    object is untouched. ``pooled`` short-circuits the convolutional stage
    with cached pooled spikes (valid whenever layer 1 is not changing).
    """
    cfg = net.cfg
    if limit_frames is not None:
        frames = frames[: int(limit_frames)]
    if pooled is None:
        spikes, first = _conv_sim(net, frames)
        pooled_t, pooled_unit = _pooled_spikes(net, first)
    else:
        spikes = None
        pooled_t, pooled_unit = pooled
    if gate_enabled is None:
        gate_enabled = not cfg.is_disabled("decentralize")
    gate = DecentralizeGate(net.class_of, cfg.regulation.dc_upper, gate_enabled)
    dec_t, dec_j, group_active = _decision_sim(net, pooled_t, pooled_unit, frames.shape[0], gate)
    record = SpikeRecord(
        pooled_t=pooled_t,
        pooled_unit=pooled_unit,
        decision_t=dec_t,
        decision_neuron=dec_j,
    )
    if collect_conv and spikes is not None:
        t_idx, m_idx, y_idx, x_idx = np.nonzero(spikes)
        record.conv_t, record.conv_map, record.conv_y, record.conv_x = (
            t_idx.astype(np.int64),
            m_idx.astype(np.int64),
            y_idx.astype(np.int64),
            x_idx.astype(np.int64),
        )
    counts = record.decision_counts(net.class_of, net.n_classes)
    first_class = record.class_first_spike(net.class_of, net.n_classes)
    return PresentationResult(record, counts, first_class, group_active)


# -- readout and reward ------------------------------------------------------


def majority_vote(counts: np.ndarray, first_class: np.ndarray):
    """Class with the most decision spikes.

    Ties resolve to the tied class with the earliest first spike, then to
    the lowest class index. No spikes at all means abstention (None).
    """
    if counts.sum() == 0:
        return None
    cand = np.nonzero(counts == counts.max())[0]
    if cand.size > 1:
        fs = first_class[cand]
        cand = cand[fs == fs.min()]
    return int(cand[0])


def compute_reward(counts: np.ndarray, target: int, kappa: float, clip_val: float = 1.0) -> float:
    """kappa * (target spikes - non-target spikes), clipped to [-clip, clip]."""
    s_t = float(counts[target])
    s_n = float(counts.sum()) - s_t
    return float(np.clip(kappa * (s_t - s_n), -clip_val, clip_val))


# -- plasticity plumbing -----------------------------------------------------


def _conv_pair_deltas(net: Network, frames: np.ndarray, spikes: np.ndarray):
    """Pair every conv spike with input arrivals and sum the rule kernels.

    Pairing is nearest-neighbor per position-specific synapse: each post
    spike pairs with the most recent arrival at or before it, each arrival
    with the most recent post spike strictly before it. The per-position
    deltas of one map are averaged over all its positions so the shared
    kernels stay exactly shared.
    """
    cfg = net.cfg
    top = cfg.topology
    par = cfg.plasticity
    kh, kw = top.kernel
    st = top.stride
    hc, wc = net.conv_hw
    t_in = frames.shape[0]
    t_tot = spikes.shape[0]
    d_max_int = int(round(par.d_max))
    dint = np.clip(np.rint(net.conv_d), 0, d_max_int).astype(np.int64)
    n_pos = hc * wc
    dw = np.zeros_like(net.conv_w)
    dd = np.zeros_like(net.conv_d)
    tt = np.arange(t_tot, dtype=np.int64)[:, None, None]
    for m in range(net.n_maps):
        post = spikes[:, m]
        if not post.any():
            continue
        post_t = np.where(post, tt, -1)
        last_post = np.maximum.accumulate(post_t, axis=0)
        prev_post = np.empty_like(last_post)
        prev_post[0] = -1
        prev_post[1:] = last_post[:-1]
        for p in range(frames.shape[1]):
            for ky in range(kh):
                for kx in range(kw):
                    sl = frames[:, p, ky : ky + hc * st : st, kx : kx + wc * st : st].astype(bool)
                    if not sl.any():
                        continue
                    di = int(dint[m, p, ky, kx])
                    d_c = net.conv_d[m, p, ky, kx]
                    arr = np.zeros((t_tot, hc, wc), dtype=bool)
                    arr[di : di + t_in] = sl
                    arr_t = np.where(arr, tt, -1)
                    last_arr = np.maximum.accumulate(arr_t, axis=0)
                    mask = post & (last_arr >= 0)
                    if mask.any():
                        dt_w = (tt - last_arr)[mask] + (di - d_c)
                        dw[m, p, ky, kx] += pl.stdp_weight_delta(0.0, dt_w, 0.0, par).sum()
                        dd[m, p, ky, kx] += pl.unsupervised_delay_delta(0.0, dt_w, 0.0, par).sum()
                    mask = arr & (prev_post >= 0)
                    if mask.any():
                        dt_w = (prev_post - tt)[mask] + (di - d_c)
                        dw[m, p, ky, kx] += pl.stdp_weight_delta(0.0, dt_w, 0.0, par).sum()
                        dd[m, p, ky, kx] += pl.unsupervised_delay_delta(0.0, dt_w, 0.0, par).sum()
    dw /= n_pos
    dd /= n_pos
    return dw, dd


def _decision_pair_deltas(net: Network, pooled_t, pooled_unit, dec_t, dec_j):
    """Accumulate decision-layer pair kernels at unit reward.

    All rules are linear in the reward, so the sums get multiplied by the
    actual reward at apply time. The weight kernel has one closed form for
    both synapse signs; the delay kernel switches to the inhibitory variant
    for edges whose source neuron is inhibitory, unless the run is
    configured to share the excitatory rule (the pathology ablation).
    """
    par = net.cfg.plasticity
    d_max_int = int(round(par.d_max))
    dwf = np.zeros_like(net.wf)
    ddf = np.zeros_like(net.df)
    dlw = np.zeros_like(net.lat_w)
    dld = np.zeros_like(net.lat_d)
    if dec_t.size == 0:
        return dwf, ddf, dlw, dld

    spiking = np.unique(dec_j)
    posts = {int(j): dec_t[dec_j == j] for j in spiking}

    if pooled_t.size:
        pooled_tf = pooled_t.astype(float)
        for j, pt in posts.items():
            row_d = net.df[j, pooled_unit]
            arr = pooled_t + np.clip(np.rint(row_d), 0, d_max_int).astype(np.int64)
            for t_post in pt:
                m = arr <= t_post
                if m.any():
                    dt = float(t_post) - pooled_tf[m] - row_d[m]
                    cols = pooled_unit[m]
                    dwf[j, cols] += pl.stdp_weight_delta(0.0, dt, 0.0, par)
                    ddf[j, cols] += pl.unsupervised_delay_delta(0.0, dt, 0.0, par)
            k = np.searchsorted(pt, arr, side="left") - 1
            m = k >= 0
            if m.any():
                dt = pt[k[m]].astype(float) - pooled_tf[m] - row_d[m]
                cols = pooled_unit[m]
                dwf[j, cols] += pl.stdp_weight_delta(0.0, dt, 0.0, par)
                ddf[j, cols] += pl.unsupervised_delay_delta(0.0, dt, 0.0, par)

    if net.lat_src.size:
        shared = net.cfg.inh_rules_shared
        lat_dint = np.clip(np.rint(net.lat_d), 1, d_max_int).astype(np.int64)
        for e in range(net.lat_src.size):
            s = int(net.lat_src[e])
            j = int(net.lat_tgt[e])
            pre = posts.get(s)
            post = posts.get(j)
            if pre is None or post is None:
                continue
            tp, tq = pl.pair_spikes(pre, post, int(lat_dint[e]))
            if tp.size == 0:
                continue
            d_e = net.lat_d[e]
            dlw[e] += pl.stdp_weight_delta(tp, tq, d_e, par).sum()
            if net.is_inh[s] and not shared:
                dld[e] += pl.inhibitory_delay_delta(tp, tq, d_e, 1.0, par).sum()
            else:
                dld[e] += pl.unsupervised_delay_delta(tp, tq, d_e, par).sum()
    return dwf, ddf, dlw, dld


def _apply_decision_plasticity(net: Network, r: float, deltas, delay_on: bool) -> None:
    if r == 0.0:
        return
    par = net.cfg.plasticity
    dwf, ddf, dlw, dld = deltas
    net.wf += r * dwf
    pl.clamp_excitatory_weights(net.wf, par)
    if net.lat_src.size:
        inh_e = net.is_inh[net.lat_src]
        net.lat_w += r * dlw
        net.lat_w[~inh_e] = np.clip(net.lat_w[~inh_e], 0.0, par.w_max)
        net.lat_w[inh_e] = np.clip(net.lat_w[inh_e], par.w_inh_min, 0.0)
    if delay_on:
        live = ~net.frozen
        net.df[live] += r * ddf[live]
        net.df[live] = np.clip(net.df[live], 0.0, par.d_max)
        if net.lat_src.size:
            lm = live[net.lat_tgt]
            net.lat_d[lm] += r * dld[lm]
            net.lat_d[lm] = np.clip(net.lat_d[lm], 1.0, par.d_max)


def _apply_neuron_gain(net: Network, gain: np.ndarray, delay_on: bool) -> None:
    """Shift every incoming synapse of gain != 0 neurons: w up and d down for
    positive gain, the reverse for negative. Used by both interval and
    decision homeostasis; rows with zero gain are never written."""
    reg = net.cfg.regulation
    par = net.cfg.plasticity
    rows = np.nonzero(gain != 0.0)[0]
    if rows.size == 0:
        return
    net.wf[rows] += reg.lambda_w * gain[rows, None]
    net.wf[rows] = np.clip(net.wf[rows], 0.0, par.w_max)
    if delay_on:
        live = rows[~net.frozen[rows]]
        if live.size:
            net.df[live] -= reg.lambda_d * gain[live, None]
            net.df[live] = np.clip(net.df[live], 0.0, par.d_max)
    if net.lat_src.size:
        eg = gain[net.lat_tgt]
        em = eg != 0.0
        if em.any():
            inh_e = net.is_inh[net.lat_src]
            net.lat_w[em] += reg.lambda_w * eg[em]
            me = em & ~inh_e
            mi = em & inh_e
            if me.any():
                net.lat_w[me] = np.clip(net.lat_w[me], 0.0, par.w_max)
            if mi.any():
                net.lat_w[mi] = np.clip(net.lat_w[mi], par.w_inh_min, 0.0)
            if delay_on:
                dm = em & ~net.frozen[net.lat_tgt]
                if dm.any():
                    net.lat_d[dm] -= reg.lambda_d * eg[dm]
                    net.lat_d[dm] = np.clip(net.lat_d[dm], 1.0, par.d_max)


# -- training phases ---------------------------------------------------------


def train_layer1(net: Network, samples: list[FrameSequence], metrics=None) -> PhaseResult:
    """Unsupervised training of the convolutional sheet."""
    cfg = net.cfg
    reg = cfg.regulation
    par = cfg.plasticity
    hp = cfg.harness
    delay_on = cfg.delay_learning_on
    tracker = FreezeTracker(net.n_maps, hp.freeze_scale * par.d_max, hp.freeze_window)
    tracker.ema = net.conv_freeze_ema
    tracker.n_obs = net.conv_freeze_n
    tracker.frozen = net.conv_frozen
    converged = False
    presentations = 0
    epochs = 0
    for epoch in range(hp.max_epochs_l1):
        epochs = epoch + 1
        order = net.rng.permutation(len(samples)) if hp.shuffle else np.arange(len(samples))
        for idx in order:
            frames = samples[int(idx)].frames
            spikes, _first = _conv_sim(net, frames)
            d_before = net.conv_d.copy()
            if spikes.any():
                dw_k, dd_k = _conv_pair_deltas(net, frames, spikes)
                net.conv_w += dw_k
                pl.clamp_excitatory_weights(net.conv_w, par)
                if delay_on:
                    live = ~net.conv_frozen
                    net.conv_d[live] += dd_k[live]
                    net.conv_d[live] = np.clip(net.conv_d[live], 0.0, par.d_max)
            counts = spikes.sum(axis=0)
            ema_update(net.conv_act, counts, reg.activity_window)
            k_map = interval_gain(net.conv_act, reg).mean(axis=(1, 2))
            km = k_map != 0.0
            if km.any():
                net.conv_w[km] += reg.lambda_w * k_map[km][:, None, None, None]
                net.conv_w[km] = np.clip(net.conv_w[km], 0.0, par.w_max)
                if delay_on:
                    kd = km & ~net.conv_frozen
                    if kd.any():
                        net.conv_d[kd] -= reg.lambda_d * k_map[kd][:, None, None, None]
                        net.conv_d[kd] = np.clip(net.conv_d[kd], 0.0, par.d_max)
            if delay_on:
                tracker.update(np.abs(net.conv_d - d_before).mean(axis=(1, 2, 3)))
            presentations += 1
            if metrics is not None:
                metrics(
                    {
                        "phase": "layer1",
                        "epoch": epoch,
                        "sample": int(idx),
                        "label": int(samples[int(idx)].label),
                        "verdict": None,
                        "reward": None,
                        "conv_spikes": int(counts.sum()),
                        "frozen_fraction": float(net.conv_frozen.mean()),
                    }
                )
        if delay_on and tracker.all_frozen:
            converged = True
            break
    net.phase = "layer2"
    return PhaseResult(converged, epochs, presentations)


def build_pooled_cache(net: Network, samples: list[FrameSequence]):
    """Pooled responses per sample; valid while layer 1 stays frozen."""
    cache = []
    for s in samples:
        _spikes, first = _conv_sim(net, s.frames)
        cache.append(_pooled_spikes(net, first))
    return cache


def train_layer2(net: Network, samples: list[FrameSequence], pooled_cache=None, metrics=None) -> PhaseResult:
    """Reinforcement training of the decision layer.

    Per presentation: run, vote, reward, apply the accumulated pair rules,
    then regulation in a fixed order (decision homeostasis, interval
    homeostasis, threshold adaptation), then freeze bookkeeping.
    """
    cfg = net.cfg
    reg = cfg.regulation
    par = cfg.plasticity
    hp = cfg.harness
    delay_on = cfg.delay_learning_on
    gate_enabled = not cfg.is_disabled("decentralize")
    if pooled_cache is None:
        pooled_cache = build_pooled_cache(net, samples)
    tracker = FreezeTracker(net.n_dec, hp.freeze_scale * par.d_max, hp.freeze_window)
    tracker.ema = net.freeze_ema
    tracker.n_obs = net.freeze_n
    tracker.frozen = net.frozen
    window = DecisionWindow(net.n_classes, reg.decision_window_per_class * net.n_classes)
    window.restore(net.decision_window)
    in_deg = (
        np.bincount(net.lat_tgt, minlength=net.n_dec) if net.lat_src.size else np.zeros(net.n_dec, np.int64)
    )
    n_in = net.n_pool + in_deg
    converged = False
    violations = 0
    presentations = 0
    epochs = 0
    for epoch in range(hp.max_epochs_l2):
        epochs = epoch + 1
        order = net.rng.permutation(len(samples)) if hp.shuffle else np.arange(len(samples))
        for idx in order:
            s = samples[int(idx)]
            pres = run_presentation(
                net, s.frames, gate_enabled=gate_enabled, pooled=pooled_cache[int(idx)]
            )
            verdict = majority_vote(pres.counts, pres.first_class)
            r = compute_reward(pres.counts, s.label, hp.kappa, hp.reward_clip)
            if gate_enabled and (pres.group_active > reg.dc_upper).any():
                violations += 1
            d_before_f = net.df.copy()
            d_before_l = net.lat_d.copy() if net.lat_src.size else None

            if r != 0.0:
                deltas = _decision_pair_deltas(
                    net, pres.record.pooled_t, pres.record.pooled_unit,
                    pres.record.decision_t, pres.record.decision_neuron,
                )
                _apply_decision_plasticity(net, r, deltas, delay_on)

            counts_per_neuron = np.bincount(pres.record.decision_neuron, minlength=net.n_dec)
            ema_update(net.act_short, counts_per_neuron, reg.activity_window)
            ema_update(net.act_long, counts_per_neuron, reg.long_window)
            if not cfg.is_disabled("decision-homeo"):
                window.push(verdict)
                k_class = window.gains()
                if np.any(k_class != 0.0):
                    _apply_neuron_gain(net, k_class[net.class_of], delay_on)
            if not cfg.is_disabled("homeo"):
                _apply_neuron_gain(net, interval_gain(net.act_short, reg), delay_on)
            if not cfg.is_disabled("threshold"):
                d_theta = threshold_step(net.act_long, reg)
                tm = d_theta != 0.0
                if tm.any():
                    net.theta[tm] = np.clip(
                        net.theta[tm] + d_theta[tm], cfg.lif.theta_floor, cfg.lif.theta_ceil
                    )
            if delay_on:
                moved = np.abs(net.df - d_before_f).sum(axis=1)
                if net.lat_src.size:
                    moved += np.bincount(
                        net.lat_tgt, weights=np.abs(net.lat_d - d_before_l), minlength=net.n_dec
                    )
                tracker.update(moved / n_in)
            presentations += 1
            if metrics is not None:
                metrics(
                    {
                        "phase": "layer2",
                        "epoch": epoch,
                        "sample": int(idx),
                        "label": int(s.label),
                        "verdict": verdict,
                        "reward": r,
                        "counts": [int(c) for c in pres.counts],
                        "frozen_fraction": float(net.frozen.mean()),
                    }
                )
        if delay_on and tracker.all_frozen:
            converged = True
            break
    net.decision_window.clear()
    net.decision_window.extend(window.snapshot())
    net.phase = "eval"
    return PhaseResult(converged, epochs, presentations, violations)


def train(cfg: RunConfig, samples: list[FrameSequence], metrics=None) -> TrainResult:
    from .topology import build_network, layer1_hash

    if not samples:
        raise ValueError("empty training set")
    shape = samples[0].frames.shape[1:]
    net = build_network(cfg, shape)
    r1 = train_layer1(net, samples, metrics=metrics)
    h1 = layer1_hash(net)
    cache = build_pooled_cache(net, samples)
    r2 = train_layer2(net, samples, pooled_cache=cache, metrics=metrics)
    return TrainResult(
        net=net,
        converged_l1=r1.converged,
        converged_l2=r2.converged,
        epochs_l1=r1.epochs,
        epochs_l2=r2.epochs,
        presentations=r1.presentations + r2.presentations,
        gate_violations=r2.gate_violations,
        layer1_hash_after_phase1=h1,
        layer1_hash_final=layer1_hash(net),
    )


# -- evaluation ---------------------------------------------------------------


def evaluate(
    net: Network,
    samples: list[FrameSequence],
    limit_frames: int | None = None,
    spike_rows: list | None = None,
) -> EvalResult:
    """Score samples without touching any network state.

    The per-class activity gate stays on when configured (it is part of
    inference); plasticity, regulation, traces, and the RNG are all left
    alone, so the state hash before and after is identical.
    """
    if not samples:
        raise ValueError("empty evaluation set")
    c = net.n_classes
    gate_enabled = net.cfg.regulation.gate_in_eval and not net.cfg.is_disabled("decentralize")
    confusion = np.zeros((c, c), dtype=np.int64)
    abstained = np.zeros(c, dtype=np.int64)
    totals = np.zeros(c, dtype=np.int64)
    correct = 0
    for i, s in enumerate(samples):
        pres = run_presentation(
            net,
            s.frames,
            gate_enabled=gate_enabled,
            limit_frames=limit_frames,
            collect_conv=spike_rows is not None,
        )
        verdict = majority_vote(pres.counts, pres.first_class)
        if verdict is None:
            abstained[s.label] += 1
        else:
            confusion[s.label, verdict] += 1
            totals[verdict] += 1
            if verdict == s.label:
                correct += 1
        if spike_rows is not None:
            rec = pres.record
            hc_w = net.conv_hw[1]
            for t, m, y, x in zip(rec.conv_t, rec.conv_map, rec.conv_y, rec.conv_x):
                spike_rows.append((i, "conv", int((m * net.conv_hw[0] + y) * hc_w + x), int(t)))
            for t, u in zip(rec.pooled_t, rec.pooled_unit):
                spike_rows.append((i, "pooled", int(u), int(t)))
            for t, j in zip(rec.decision_t, rec.decision_neuron):
                spike_rows.append((i, "decision", int(j), int(t)))
    return EvalResult(
        accuracy=correct / len(samples),
        n=len(samples),
        correct=correct,
        confusion=confusion,
        abstained=abstained,
        decision_totals=totals,
    )


def frames_sweep(net: Network, samples: list[FrameSequence], limits) -> list[tuple[int, float]]:
    """Accuracy when only the first x frames of each sample are shown."""
    return [(int(x), evaluate(net, samples, limit_frames=int(x)).accuracy) for x in limits]


def write_spikes_csv(path: str | Path, rows) -> None:
    with open(path, "w") as f:
        f.write("sample,layer,neuron,t_bin\n")
        for sample, layer, neuron, t in rows:
            f.write(f"{sample},{layer},{neuron},{t}\n")
