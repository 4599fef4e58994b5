"""Configuration records for the delay-learning spiking network stack.

Every tunable constant lives in one of the frozen dataclasses below. A run
is fully described by a :class:`RunConfig`, which serializes to JSON and
back without loss; unknown keys are rejected so that a config file cannot
silently drift from the code. CLI flags overlay a loaded config through
:func:`apply_overrides`, and :func:`config_hash` gives the digest that all
output artifacts embed.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Bad config content: unknown keys, malformed values, invalid choices."""


#: Mechanisms that may be listed in RunConfig.disabled.
DISABLE_CHOICES = (
    "homeo",
    "threshold",
    "decision-homeo",
    "decentralize",
    "lateral",
    "delay-learning",
)

#: How synaptic delays are sourced and trained.
DELAY_MODES = ("learned", "fixed", "random_frozen")


@dataclass(frozen=True)
class LIFParams:
    """Leaky integrate-and-fire constants, shared by both layers.

    Time is measured in input frame bins; the simulation advances one bin
    per step, so ``tau_m`` is a decay horizon in bins. ``theta_floor`` and
    ``theta_ceil`` bound the adaptive threshold.
    """

    tau_m: float = 10.0
    t_ref: int = 1
    theta_init: float = 1.0
    v_reset: float = 0.0
    theta_floor: float = 0.1
    theta_ceil: float = 10.0


@dataclass(frozen=True)
class TopologyParams:
    """Shape of the two-layer network.

    The convolutional sheet has ``n_maps`` feature maps with one shared
    weight kernel and one shared delay kernel each. Earliest-spike pooling
    with a non-overlapping ``pool`` window follows. The decision layer holds
    ``n_classes * n_per_class`` neurons, densely connected from the pooled
    units and sparsely connected among themselves with probability ``p_lat``.
    Roughly ``inh_fraction`` of the decision neurons are tagged inhibitory;
    their outgoing lateral weights stay at or below zero.
    """

    n_maps: int = 16
    kernel: tuple[int, int] = (5, 5)
    stride: int = 1
    pool: tuple[int, int] = (4, 4)
    n_classes: int = 10
    n_per_class: int = 8
    p_lat: float = 0.1
    inh_fraction: float = 0.2
    conv_theta: float = 1.0
    decision_theta: float = 1.0
    w_conv_init: tuple[float, float] = (0.3, 0.7)
    w_forward_init: tuple[float, float] = (0.2, 0.5)
    w_lateral_init: tuple[float, float] = (0.1, 0.4)


@dataclass(frozen=True)
class PlasticityParams:
    """Constants of the six spike-pair update rules plus parameter bounds.

    ``a_plus``/``a_minus`` with ``tau_plus``/``tau_minus`` shape the weight
    kernels; ``b_plus``/``b_minus`` with ``sigma_plus``/``sigma_minus`` shape
    the delay kernels. ``epsilon`` is the target arrival lead: the excitatory
    delay rule moves each delay toward (post - pre - epsilon). Excitatory
    weights live in [0, w_max], inhibitory in [w_inh_min, 0], delays in
    [0, d_max].
    """

    a_plus: float = 0.05
    a_minus: float = 0.05
    tau_plus: float = 5.0
    tau_minus: float = 5.0
    b_plus: float = 0.1
    b_minus: float = 0.1
    sigma_plus: float = 5.0
    sigma_minus: float = 5.0
    epsilon: float = 1.0
    w_max: float = 1.0
    w_inh_min: float = -1.0
    d_max: float = 20.0


@dataclass(frozen=True)
class RegulationParams:
    """Constants of the four regulation mechanisms.

    Per-presentation spike counts are tracked as exponential moving averages
    (span ``activity_window`` for homeostasis, ``long_window`` for threshold
    adaptation). Activity outside [r_min, r_max] produces a corrective gain,
    scaled by ``k_min``/``k_max`` and applied with step sizes ``lambda_w``
    and ``lambda_d``. Decision balance is tracked over a sliding window of
    ``decision_window_per_class * n_classes`` decided presentations. At most
    ``dc_upper`` neurons per class group may emit during one presentation.

    ``threshold_rule_as_printed`` flips the threshold step direction to the
    variant that raises the threshold of under-active neurons, kept only for
    comparison runs. ``gate_in_eval`` keeps the per-class activity gate on
    during evaluation, where it acts as an inference mechanism.
    """

    r_min: float = 1.0
    r_max: float = 6.0
    k_min: float = 1.0
    k_max: float = 0.5
    lambda_w: float = 0.02
    lambda_d: float = 0.1
    theta_inc: float = 0.02
    theta_dec: float = 0.02
    dc_upper: int = 2
    activity_window: int = 20
    long_window: int = 100
    decision_window_per_class: int = 10
    threshold_rule_as_printed: bool = False
    gate_in_eval: bool = True


@dataclass(frozen=True)
class HarnessParams:
    """Training loop constants.

    Reward is ``kappa * (target spikes - non-target spikes)`` clipped to
    [-reward_clip, reward_clip]. A neuron freezes (stops delay updates) when
    the moving average of its mean absolute per-presentation delay change
    stays below ``freeze_scale * d_max`` after at least ``freeze_window``
    observations. ``flush_factor`` bounds how many extra bins a presentation
    may run past its input to drain in-flight deliveries.
    """

    kappa: float = 0.05
    reward_clip: float = 1.0
    max_epochs_l1: int = 20
    max_epochs_l2: int = 30
    freeze_scale: float = 1e-3
    freeze_window: int = 50
    checkpoint_every: int = 0
    flush_factor: int = 4
    shuffle: bool = True


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator description for labeled spatio-temporal spike patterns.

    ``embedded_delays[k]`` lists the class-k structure as edges
    ``((p, y, x), (p, y, x), lag)``: whenever the source cell spikes, the
    target cell spikes ``lag`` bins later. Edges form a DAG; root cells fire
    at a per-sample onset and times propagate along edges. ``noise_rate`` is
    the per-cell per-bin probability of a spurious spike.
    """

    n_classes: int
    pattern_length: int
    grid: tuple[int, int]
    embedded_delays: tuple[tuple[tuple[tuple[int, int, int], tuple[int, int, int], int], ...], ...]
    noise_rate: float = 0.01
    seed: int = 0

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SyntheticSpec":
        _check_keys(cls, data)
        kw = dict(data)
        kw["grid"] = tuple(kw["grid"])
        classes = []
        for edges in kw["embedded_delays"]:
            classes.append(tuple((tuple(src), tuple(tgt), int(lag)) for src, tgt, lag in edges))
        kw["embedded_delays"] = tuple(classes)
        return cls(**kw)


@dataclass(frozen=True)
class RunConfig:
    """One experiment: data source, all constants, seed, and ablations."""

    seed: int = 0
    out_dir: str = "runs/out"
    train_data: str | None = None
    test_data: str | None = None
    synthetic: SyntheticSpec | None = None
    synthetic_train_per_class: int = 50
    synthetic_test_per_class: int = 20
    lif: LIFParams = field(default_factory=LIFParams)
    topology: TopologyParams = field(default_factory=TopologyParams)
    plasticity: PlasticityParams = field(default_factory=PlasticityParams)
    regulation: RegulationParams = field(default_factory=RegulationParams)
    harness: HarnessParams = field(default_factory=HarnessParams)
    disabled: tuple[str, ...] = ()
    inh_rules_shared: bool = False
    delay_mode: str = "learned"
    fixed_delay_value: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "disabled", tuple(self.disabled))
        for name in self.disabled:
            if name not in DISABLE_CHOICES:
                raise ConfigError(
                    f"unknown mechanism in disabled: {name!r} "
                    f"(choices: {', '.join(DISABLE_CHOICES)})"
                )
        if self.delay_mode not in DELAY_MODES:
            raise ConfigError(
                f"unknown delay_mode: {self.delay_mode!r} (choices: {', '.join(DELAY_MODES)})"
            )

    def is_disabled(self, mechanism: str) -> bool:
        return mechanism in self.disabled

    @property
    def delay_learning_on(self) -> bool:
        return self.delay_mode == "learned" and not self.is_disabled("delay-learning")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        _check_keys(cls, data)
        kw = dict(data)
        sections = {
            "lif": (LIFParams, ()),
            "topology": (TopologyParams, ("kernel", "pool", "w_conv_init", "w_forward_init", "w_lateral_init")),
            "plasticity": (PlasticityParams, ()),
            "regulation": (RegulationParams, ()),
            "harness": (HarnessParams, ()),
        }
        for name, (section_cls, tuple_fields) in sections.items():
            if name in kw and isinstance(kw[name], dict):
                kw[name] = _plain_from_dict(section_cls, kw[name], tuple_fields)
        if kw.get("synthetic") is not None and isinstance(kw["synthetic"], dict):
            kw["synthetic"] = SyntheticSpec.from_dict(kw["synthetic"])
        if "disabled" in kw and kw["disabled"] is not None:
            kw["disabled"] = tuple(kw["disabled"])
        return cls(**kw)


def _check_keys(cls, data: dict[str, Any]) -> None:
    if not isinstance(data, dict):
        raise ConfigError(f"expected an object for {cls.__name__}, got {type(data).__name__}")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) for {cls.__name__}: {', '.join(unknown)}")


def _plain_from_dict(cls, data: dict[str, Any], tuple_fields=()):
    _check_keys(cls, data)
    kw = dict(data)
    for name in tuple_fields:
        if name in kw and kw[name] is not None:
            kw[name] = tuple(kw[name])
    return cls(**kw)


def to_dict(cfg) -> dict[str, Any]:
    return dataclasses.asdict(cfg)


def canonical_json(obj: Any) -> str:
    """Stable serialization: sorted keys, no whitespace, tuples as lists."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(obj):
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_json(to_dict(cfg)).encode()).hexdigest()


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    return RunConfig.from_dict(data)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(cfg), indent=2, default=_json_default) + "\n")


def apply_overrides(cfg: RunConfig, assignments: list[str]) -> RunConfig:
    """Overlay ``section.key=value`` assignments onto a config.

    Values are parsed as JSON when possible (numbers, booleans, lists) and
    fall back to bare strings. Paths must name existing keys; there is no
    implicit key creation.
    """
    data = to_dict(cfg)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        path_str, _, raw = item.partition("=")
        keys = path_str.strip().split(".")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        for k in keys[:-1]:
            if not isinstance(node, dict) or k not in node:
                raise ConfigError(f"unknown config path: {path_str}")
            node = node[k]
        if not isinstance(node, dict) or keys[-1] not in node:
            raise ConfigError(f"unknown config path: {path_str}")
        node[keys[-1]] = value
    return RunConfig.from_dict(data)
