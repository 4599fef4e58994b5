"""Clock-driven LIF dynamics and delayed spike delivery.

The simulation advances in steps of one input frame bin. Delays are stored
as floats for learning but quantized to integer bins (nearest) for
delivery, which a ring buffer of ``d_max + 1`` future slots realizes
exactly: a spike scheduled with delay d lands d bins after it was emitted,
never earlier, never later, and never beyond the horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import LIFParams


class DelayOutOfRange(ValueError):
    """A delivery was scheduled with a delay outside [0, d_max]."""


def lif_integrate(v, input_current, t, refractory_until, p: LIFParams):
    """Leak plus gated input, without the spike test.

    Input is ignored while ``t <= refractory_until``; the leak always runs
    (a reset membrane just decays from v_reset). Returns the new potential
    and the boolean mask of neurons outside their refractory window.
    """
    decay = math.exp(-1.0 / p.tau_m)
    v = np.asarray(v, dtype=float) * decay
    open_mask = np.asarray(t > np.asarray(refractory_until))
    v = np.where(open_mask, v + np.asarray(input_current, dtype=float), v)
    return v, open_mask


def lif_step(v, input_current, t, theta, refractory_until, p: LIFParams):
    """One full clock tick: integrate, fire on threshold, reset.

    Returns ``(v, refractory_until, spiked)``. Spiking requires being
    outside the refractory window; firing resets the potential to
    ``v_reset`` and closes the window until ``t + t_ref``.
    """
    v, open_mask = lif_integrate(v, input_current, t, refractory_until, p)
    spiked = open_mask & (v >= np.asarray(theta, dtype=float))
    v = np.where(spiked, p.v_reset, v)
    refractory_until = np.where(spiked, t + p.t_ref, np.asarray(refractory_until))
    return v, refractory_until, spiked


class DelayBuffer:
    """Ring of per-future-bin input accumulators for one neuron population.

    ``read(t)`` must be called for consecutive bins; it drains and zeroes
    the slot for bin t. ``schedule`` adds a weight into the slot
    ``delay`` bins ahead. The horizon is ``d_max + 1`` slots, so a slot is
    always consumed before the writer can wrap back onto it.
    """

    def __init__(self, n_targets: int, d_max: float):
        self.d_max = int(round(d_max))
        self.horizon = self.d_max + 1
        self.ring = np.zeros((self.horizon, n_targets))
        self.slot_events = np.zeros(self.horizon, dtype=np.int64)

    def schedule(self, targets, weights, delays, t_now: int) -> None:
        targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
        weights = np.broadcast_to(np.asarray(weights, dtype=float), targets.shape)
        delays = np.atleast_1d(np.asarray(delays, dtype=np.int64))
        delays = np.broadcast_to(delays, targets.shape)
        if delays.size and (delays.min() < 0 or delays.max() > self.d_max):
            bad = int(delays[(delays < 0) | (delays > self.d_max)][0])
            raise DelayOutOfRange(f"delay {bad} outside [0, {self.d_max}]")
        rows = (t_now + delays) % self.horizon
        np.add.at(self.ring, (rows, targets), weights)
        np.add.at(self.slot_events, rows, np.ones_like(rows))

    def read(self, t: int) -> np.ndarray:
        row = t % self.horizon
        out = self.ring[row].copy()
        self.ring[row] = 0.0
        self.slot_events[row] = 0
        return out

    @property
    def empty(self) -> bool:
        return int(self.slot_events.sum()) == 0

    def clear(self) -> None:
        self.ring.fill(0.0)
        self.slot_events.fill(0)


@dataclass
class SpikeRecord:
    """All spikes of one presentation, by layer, in emission order."""

    conv_t: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    conv_map: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    conv_y: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    conv_x: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    pooled_t: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    pooled_unit: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    decision_t: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    decision_neuron: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def decision_counts(self, class_of: np.ndarray, n_classes: int) -> np.ndarray:
        counts = np.zeros(n_classes, dtype=np.int64)
        if self.decision_neuron.size:
            np.add.at(counts, class_of[self.decision_neuron], 1)
        return counts

    def class_first_spike(self, class_of: np.ndarray, n_classes: int) -> np.ndarray:
        first = np.full(n_classes, np.inf)
        for t, j in zip(self.decision_t, self.decision_neuron):
            c = class_of[j]
            if t < first[c]:
                first[c] = t
        return first
