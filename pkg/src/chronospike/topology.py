"""Network construction, convolutional geometry, pooling, checkpoints.

The network is a mutable bag of numpy arrays: a convolutional sheet whose
maps share one weight kernel and one delay kernel across all spatial
positions, an earliest-spike pooling stage, and a decision layer that is
dense from the pooled units and sparsely recurrent within itself. Membrane
state is deliberately not stored here; presentations create it locally, so
the object holds only parameters and training traces.
"""

from __future__ import annotations

import base64
import hashlib
import json
from collections import deque
from pathlib import Path

import numpy as np

from .config import RunConfig, config_hash, to_dict

CHECKPOINT_FORMAT = "chronospike-checkpoint"
CHECKPOINT_VERSION = 1


class InvalidConfig(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


class StateError(ValueError):
    """Checkpoint file does not match the expected format or config."""


def conv_output_shape(input_hw: tuple[int, int], kernel: tuple[int, int], stride: int) -> tuple[int, int]:
    h, w = input_hw
    kh, kw = kernel
    if kh > h or kw > w:
        raise InvalidConfig("topology.kernel", f"kernel {kernel} larger than input {input_hw}")
    if stride < 1:
        raise InvalidConfig("topology.stride", "stride must be >= 1")
    return (h - kh) // stride + 1, (w - kw) // stride + 1


def pool_output_shape(conv_hw: tuple[int, int], pool: tuple[int, int]) -> tuple[int, int]:
    ch, cw = conv_hw
    ph, pw = pool
    if ph < 1 or pw < 1:
        raise InvalidConfig("topology.pool", "pool window must be >= 1")
    if ch % ph or cw % pw:
        raise InvalidConfig(
            "topology.pool", f"pool {pool} does not tile conv output {conv_hw}"
        )
    return ch // ph, cw // pw


def inhibitory_flags(n_classes: int, n_per_class: int, fraction: float) -> np.ndarray:
    """Tag round(fraction * total) decision neurons inhibitory.

    The total count is exact; it is spread as evenly as possible across the
    class groups (earlier groups absorb the remainder), and within a group
    the highest indices carry the tag. Deterministic, no RNG involved.
    """
    total = n_classes * n_per_class
    n_inh = int(round(fraction * total))
    n_inh = min(n_inh, total)
    base, extra = divmod(n_inh, n_classes)
    flags = np.zeros(total, dtype=bool)
    for c in range(n_classes):
        k = base + (1 if c < extra else 0)
        if k > 0:
            start = c * n_per_class
            flags[start + n_per_class - k : start + n_per_class] = True
    return flags


class Network:
    """Parameters and training traces of the two-layer network."""

    def __init__(self, cfg: RunConfig, input_shape: tuple[int, int, int]):
        self.cfg = cfg
        self.input_shape = input_shape  # (P, H, W)
        top = cfg.topology
        if top.n_classes < 2:
            raise InvalidConfig("topology.n_classes", "need at least 2 classes")
        if top.n_per_class < 1:
            raise InvalidConfig("topology.n_per_class", "need at least 1 neuron per class")
        if not (0.0 <= top.p_lat <= 1.0):
            raise InvalidConfig("topology.p_lat", "connection probability outside [0, 1]")
        if not (0.0 <= top.inh_fraction <= 1.0):
            raise InvalidConfig("topology.inh_fraction", "fraction outside [0, 1]")
        p, h, w = input_shape
        self.conv_hw = conv_output_shape((h, w), top.kernel, top.stride)
        self.pool_hw = pool_output_shape(self.conv_hw, top.pool)
        self.n_maps = top.n_maps
        self.n_pool = top.n_maps * self.pool_hw[0] * self.pool_hw[1]
        self.n_dec = top.n_classes * top.n_per_class

        rng = np.random.default_rng(cfg.seed)
        plast = cfg.plasticity
        kh, kw = top.kernel
        lo, hi = top.w_conv_init
        self.conv_w = rng.uniform(lo, hi, size=(top.n_maps, p, kh, kw))
        self.conv_d = rng.uniform(0.0, plast.d_max, size=(top.n_maps, p, kh, kw))
        self.conv_theta = np.full(top.n_maps, top.conv_theta)
        self.conv_act = np.zeros((top.n_maps,) + self.conv_hw)
        self.conv_frozen = np.zeros(top.n_maps, dtype=bool)
        self.conv_freeze_ema = np.zeros(top.n_maps)
        self.conv_freeze_n = np.zeros(top.n_maps, dtype=np.int64)

        lo, hi = top.w_forward_init
        self.wf = rng.uniform(lo, hi, size=(self.n_dec, self.n_pool))
        self.df = rng.uniform(0.0, plast.d_max, size=(self.n_dec, self.n_pool))

        self.is_inh = inhibitory_flags(top.n_classes, top.n_per_class, top.inh_fraction)
        self.class_of = np.repeat(np.arange(top.n_classes), top.n_per_class)

        if cfg.is_disabled("lateral") or top.p_lat == 0.0:
            self.lat_src = np.empty(0, np.int64)
            self.lat_tgt = np.empty(0, np.int64)
            self.lat_w = np.empty(0)
            self.lat_d = np.empty(0)
        else:
            mask = rng.random((self.n_dec, self.n_dec)) < top.p_lat
            np.fill_diagonal(mask, False)
            src, tgt = np.nonzero(mask)
            self.lat_src = src.astype(np.int64)
            self.lat_tgt = tgt.astype(np.int64)
            lo, hi = top.w_lateral_init
            mag = rng.uniform(lo, hi, size=src.size)
            self.lat_w = np.where(self.is_inh[src], -mag, mag)
            self.lat_d = rng.uniform(1.0, max(1.0, plast.d_max), size=src.size)

        if cfg.delay_mode == "fixed":
            v = float(cfg.fixed_delay_value)
            self.conv_d.fill(min(max(v, 0.0), plast.d_max))
            self.df.fill(min(max(v, 0.0), plast.d_max))
            self.lat_d.fill(min(max(v, 1.0), plast.d_max))
        # "random_frozen" keeps the uniform draws above and simply never
        # updates them (the harness skips delay learning for that mode).

        self.theta = np.full(self.n_dec, top.decision_theta)
        self.act_short = np.zeros(self.n_dec)
        self.act_long = np.zeros(self.n_dec)
        self.frozen = np.zeros(self.n_dec, dtype=bool)
        self.freeze_ema = np.zeros(self.n_dec)
        self.freeze_n = np.zeros(self.n_dec, dtype=np.int64)

        self.decision_window: deque[int] = deque(
            maxlen=cfg.regulation.decision_window_per_class * top.n_classes
        )
        self.rng = rng
        self.phase = "layer1"

    # -- derived views ----------------------------------------------------

    @property
    def n_classes(self) -> int:
        return self.cfg.topology.n_classes

    def lateral_in_edges(self) -> list[np.ndarray]:
        """Edge indices grouped by target neuron (cached)."""
        if not hasattr(self, "_lat_in"):
            self._lat_in = [np.nonzero(self.lat_tgt == j)[0] for j in range(self.n_dec)]
        return self._lat_in

    def lateral_out_edges(self) -> list[np.ndarray]:
        if not hasattr(self, "_lat_out"):
            self._lat_out = [np.nonzero(self.lat_src == j)[0] for j in range(self.n_dec)]
        return self._lat_out

    def pool_unit_index(self, m: int, wy: int, wx: int) -> int:
        hp, wp = self.pool_hw
        return m * (hp * wp) + wy * wp + wx


def build_network(cfg: RunConfig, input_shape: tuple[int, int, int]) -> Network:
    return Network(cfg, input_shape)


def conv_forward_currents(net: Network, frames: np.ndarray) -> np.ndarray:
    """Precompute the delayed, weighted input to every conv neuron.

    Valid because nothing feeds back into the convolutional sheet: all its
    input is known up front, so each input spike can be added into the
    current tensor at its delivery bin directly. Returns
    [T + d_max + 1, n_maps, Hc, Wc].
    """
    top = net.cfg.topology
    d_max_int = int(round(net.cfg.plasticity.d_max))
    t_in = frames.shape[0]
    hc, wc = net.conv_hw
    st = top.stride
    kh, kw = top.kernel
    dint = np.clip(np.rint(net.conv_d), 0, d_max_int).astype(np.int64)
    out = np.zeros((t_in + d_max_int + 1, net.n_maps, hc, wc))
    for p in range(frames.shape[1]):
        for ky in range(kh):
            for kx in range(kw):
                sl = frames[:, p, ky : ky + hc * st : st, kx : kx + wc * st : st]
                if not sl.any():
                    continue
                slf = sl.astype(float)
                for m in range(net.n_maps):
                    dd = dint[m, p, ky, kx]
                    out[dd : dd + t_in, m] += net.conv_w[m, p, ky, kx] * slf
    return out


def pool_earliest(first_spike: np.ndarray, pool: tuple[int, int]) -> np.ndarray:
    """Earliest-spike pooling over non-overlapping windows.

    ``first_spike`` holds each conv neuron's first spike bin (inf when it
    never fired), shaped [n_maps, Hc, Wc]. A pooled unit emits one spike at
    the earliest bin seen anywhere in its window, or nothing. Returns the
    pooled first-spike array [n_maps, Hp, Wp] with inf for silent windows.
    """
    m, hc, wc = first_spike.shape
    ph, pw = pool
    return first_spike.reshape(m, hc // ph, ph, wc // pw, pw).min(axis=(2, 4))


# -- checkpoints ----------------------------------------------------------

_ARRAY_FIELDS = (
    "conv_w", "conv_d", "conv_theta", "conv_act", "conv_freeze_ema",
    "wf", "df", "lat_w", "lat_d", "theta", "act_short", "act_long",
    "freeze_ema",
)
_INT_ARRAY_FIELDS = ("conv_freeze_n", "lat_src", "lat_tgt", "class_of", "freeze_n")
_BOOL_ARRAY_FIELDS = ("conv_frozen", "is_inh", "frozen")


def _encode_array(a: np.ndarray, dtype: str) -> dict:
    le = a.astype(dtype)
    return {
        "dtype": dtype,
        "shape": list(a.shape),
        "data": base64.b64encode(le.tobytes()).decode("ascii"),
    }


def _decode_array(spec: dict) -> np.ndarray:
    try:
        raw = base64.b64decode(spec["data"])
        return np.frombuffer(raw, dtype=spec["dtype"]).reshape(spec["shape"]).copy()
    except (KeyError, ValueError, TypeError) as e:
        raise StateError(f"corrupt checkpoint array: {e}")


def network_payload(net: Network) -> dict:
    arrays = {}
    for name in _ARRAY_FIELDS:
        arrays[name] = _encode_array(getattr(net, name), "<f8")
    for name in _INT_ARRAY_FIELDS:
        arrays[name] = _encode_array(getattr(net, name), "<i8")
    for name in _BOOL_ARRAY_FIELDS:
        arrays[name] = _encode_array(getattr(net, name).astype(np.uint8), "|u1")
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": to_dict(net.cfg),
        "config_hash": config_hash(net.cfg),
        "input_shape": list(net.input_shape),
        "phase": net.phase,
        "decision_window": list(net.decision_window),
        "arrays": arrays,
        "rng": _jsonable(net.rng.bit_generator.state),
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def save_checkpoint(path: str | Path, net: Network) -> None:
    payload = network_payload(net)
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text)


def load_checkpoint(path: str | Path) -> Network:
    from .config import RunConfig

    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise StateError(f"cannot read checkpoint {path}: {e}")
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise StateError(f"{path}: not a checkpoint file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise StateError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    cfg = RunConfig.from_dict(payload["config"])
    net = Network(cfg, tuple(payload["input_shape"]))
    arrays = payload["arrays"]
    for name in _ARRAY_FIELDS + _INT_ARRAY_FIELDS:
        if name not in arrays:
            raise StateError(f"{path}: missing array {name}")
        a = _decode_array(arrays[name])
        if a.shape != getattr(net, name).shape:
            raise StateError(
                f"{path}: array {name} has shape {a.shape}, config implies {getattr(net, name).shape}"
            )
        setattr(net, name, a)
    for name in _BOOL_ARRAY_FIELDS:
        a = _decode_array(arrays[name]).astype(bool)
        if a.shape != getattr(net, name).shape:
            raise StateError(f"{path}: array {name} shape mismatch")
        setattr(net, name, a)
    net.decision_window.clear()
    net.decision_window.extend(payload["decision_window"])
    net.phase = payload["phase"]
    state = payload["rng"]
    # json turns the uint64 state numbers into ints, which numpy accepts back
    net.rng.bit_generator.state = state
    return net


def state_hash(net: Network) -> str:
    """Digest of all persistent network state (parameters and traces)."""
    payload = network_payload(net)
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def layer1_hash(net: Network) -> str:
    """Digest of the convolutional layer's learnable parameters only."""
    h = hashlib.sha256()
    for name in ("conv_w", "conv_d", "conv_theta"):
        h.update(getattr(net, name).astype("<f8").tobytes())
    return h.hexdigest()


def export_kernels(net: Network, out_dir: str | Path) -> list[Path]:
    """Write the shared conv kernels as CSV grids (one row per kernel cell)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, arr in (("weights", net.conv_w), ("delays", net.conv_d)):
        path = out_dir / f"conv_{name}.csv"
        with open(path, "w") as f:
            f.write("map,polarity,ky,kx,value\n")
            m, p, kh, kw = arr.shape
            for i in range(m):
                for q in range(p):
                    for y in range(kh):
                        for x in range(kw):
                            f.write(f"{i},{q},{y},{x},{float(arr[i, q, y, x])!r}\n")
        paths.append(path)
    return paths
