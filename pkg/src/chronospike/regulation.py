"""Network regulation: activity homeostasis, threshold adaptation, decision
balance, and the per-class activity gate.

All four mechanisms share a negative-feedback shape: an observed quantity is
compared against a target (an interval or a per-class rate), a signed gain
is computed, and parameters move a small step in the direction that reduces
the error. Inside the target region the gain is exactly zero and nothing is
written, so regulated and unregulated parameters are bit-identical there.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .config import RegulationParams


def ema_alpha(window: int) -> float:
    """Smoothing factor for a span-style exponential moving average."""
    return 2.0 / (window + 1.0)


def ema_update(trace: np.ndarray, value, window: int) -> None:
    a = ema_alpha(window)
    trace *= 1.0 - a
    trace += a * np.asarray(value, dtype=float)


def interval_gain(r_obs, params: RegulationParams):
    """Corrective gain for per-neuron activity outside [r_min, r_max].

    Over-activity gives a negative gain scaled by ``k_max``; under-activity
    a positive gain scaled by ``k_min``. Inside the interval the gain is
    exactly 0. The caller applies ``w += lambda_w * K`` and
    ``d -= lambda_d * K`` to the neuron's incoming synapses.
    """
    r_obs = np.asarray(r_obs, dtype=float)
    k = np.zeros_like(r_obs)
    over = r_obs > params.r_max
    under = r_obs < params.r_min
    if params.r_max > 0:
        k[over] = params.k_max * (params.r_max - r_obs[over]) / params.r_max
    if params.r_min > 0:
        k[under] = params.k_min * (params.r_min - r_obs[under]) / params.r_min
    return k


def threshold_step(r_obs_long, params: RegulationParams):
    """Threshold adjustment from long-horizon activity.

    Under-activity lowers the threshold by ``theta_dec`` and over-activity
    raises it by ``theta_inc``, nudging the neuron back into its target
    band. Exactly zero inside the band. With ``threshold_rule_as_printed``
    the directions flip (under-activity raises the threshold); that variant
    is positive feedback and exists only for comparison runs.
    """
    r = np.asarray(r_obs_long, dtype=float)
    d_theta = np.zeros_like(r)
    over = r > params.r_max
    under = r < params.r_min
    if params.threshold_rule_as_printed:
        d_theta[under] = params.theta_inc
        d_theta[over] = -params.theta_dec
    else:
        d_theta[under] = -params.theta_dec
        d_theta[over] = params.theta_inc
    return d_theta


class DecisionWindow:
    """Sliding window of recent non-abstaining verdicts, with per-class gains.

    The per-class target is an equal share of the windowed decisions, so a
    class chosen more often than its share gets a negative gain (its
    afferent weights step down, delays step up) and a starved class gets a
    positive one. While the window is still filling, the target scales with
    its current population rather than its capacity.
    """

    def __init__(self, n_classes: int, length: int):
        self.n_classes = n_classes
        self.buf: deque[int] = deque(maxlen=max(length, 1))
        self.counts = np.zeros(n_classes, dtype=np.int64)

    def push(self, verdict: int | None) -> None:
        if verdict is None:
            return
        if len(self.buf) == self.buf.maxlen:
            self.counts[self.buf[0]] -= 1
        self.buf.append(int(verdict))
        self.counts[int(verdict)] += 1

    def __len__(self) -> int:
        return len(self.buf)

    def gains(self) -> np.ndarray:
        """Per-class gain (P_target - P_observed) / P_target; zeros if empty."""
        if not self.buf:
            return np.zeros(self.n_classes)
        p_target = len(self.buf) / self.n_classes
        return (p_target - self.counts.astype(float)) / p_target

    def snapshot(self) -> list[int]:
        return list(self.buf)

    def restore(self, values) -> None:
        self.buf.clear()
        self.counts[:] = 0
        for v in values:
            self.push(int(v))


class DecentralizeGate:
    """Per-class cap on how many decision neurons may emit per presentation.

    The first ``dc_upper`` neurons of a class group to reach threshold are
    committed for the presentation (ties within a bin resolve to the lowest
    neuron index, because candidates arrive in index order). All later
    would-be spikes from other group members are suppressed: no spike is
    recorded, no reset and no refractory period happens, and the membrane
    keeps integrating.
    """

    def __init__(self, class_of: np.ndarray, dc_upper: int, enabled: bool = True):
        self.class_of = class_of
        self.dc_upper = int(dc_upper)
        self.enabled = enabled
        self.n_groups = int(class_of.max()) + 1 if class_of.size else 0
        self.committed = np.zeros(class_of.shape[0], dtype=bool)
        self.group_count = np.zeros(self.n_groups, dtype=np.int64)

    def begin(self) -> None:
        self.committed[:] = False
        self.group_count[:] = 0

    def filter(self, candidates: np.ndarray) -> np.ndarray:
        """Boolean mask over ``candidates`` (ascending indices): True = may fire."""
        if not self.enabled:
            return np.ones(candidates.shape[0], dtype=bool)
        allowed = np.zeros(candidates.shape[0], dtype=bool)
        for i, j in enumerate(candidates):
            g = self.class_of[j]
            if self.committed[j]:
                allowed[i] = True
            elif self.group_count[g] < self.dc_upper:
                self.committed[j] = True
                self.group_count[g] += 1
                allowed[i] = True
        return allowed

    def active_per_group(self) -> np.ndarray:
        return self.group_count.copy()


class FreezeTracker:
    """Sticky convergence detector over per-presentation delay movement.

    Tracks an EMA of each unit's mean absolute applied delay change. Once a
    unit has been observed for at least ``window`` presentations and its EMA
    sits below ``threshold``, it freezes, permanently: its delays receive no
    further updates. Weight learning is unaffected.
    """

    def __init__(self, n: int, threshold: float, window: int):
        self.threshold = threshold
        self.window = int(window)
        self.ema = np.zeros(n)
        self.n_obs = np.zeros(n, dtype=np.int64)
        self.frozen = np.zeros(n, dtype=bool)

    def update(self, mean_abs_dd: np.ndarray) -> None:
        live = ~self.frozen
        a = ema_alpha(self.window)
        self.ema[live] = (1.0 - a) * self.ema[live] + a * np.asarray(mean_abs_dd, dtype=float)[live]
        self.n_obs[live] += 1
        self.frozen |= live & (self.n_obs >= self.window) & (self.ema < self.threshold)

    @property
    def all_frozen(self) -> bool:
        return bool(self.frozen.all())

    def load(self, ema: np.ndarray, n_obs: np.ndarray, frozen: np.ndarray) -> None:
        self.ema = ema.astype(float).copy()
        self.n_obs = n_obs.astype(np.int64).copy()
        self.frozen = frozen.astype(bool).copy()
