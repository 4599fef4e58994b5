"""Shared helpers: a miniature moving-bar task that trains in under a second."""

from chronospike.config import (
    HarnessParams,
    PlasticityParams,
    RegulationParams,
    RunConfig,
    TopologyParams,
)
from chronospike.synthetic import moving_bars_spec


def tiny_cfg(seed: int = 0, **kw) -> RunConfig:
    """A 6x6 three-class bar task with a small two-layer network."""
    spec = moving_bars_spec(grid=(6, 6), pattern_length=24, noise_rate=0.01, seed=0, step_bins=3)
    base = dict(
        seed=seed,
        synthetic=spec,
        synthetic_train_per_class=6,
        synthetic_test_per_class=3,
        topology=TopologyParams(
            n_maps=4,
            kernel=(3, 3),
            stride=1,
            pool=(2, 2),
            n_classes=3,
            n_per_class=4,
            p_lat=0.2,
            inh_fraction=0.25,
        ),
        plasticity=PlasticityParams(d_max=8.0),
        regulation=RegulationParams(),
        harness=HarnessParams(max_epochs_l1=2, max_epochs_l2=3, kappa=0.1),
    )
    base.update(kw)
    return RunConfig(**base)
