"""
Shared command plumbing: run context, replica runner, artifact store and
the error-manifest guard.
"""

import argparse
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from ..config import Settings, get_settings
from ..errors import ConfigError, MCBLabError
from ..schemas.dynamics import BatchPath, SystemState
from ..schemas.experiment import ExperimentConfig, HorizonUnit, InitialKind
from ..services.dynamics import beta_n
from ..services.measures import harmonic_sample_array
from ..services.replicas import ReplicaRunner
from ..storage import ArtifactStore, load_config, merge_overrides

logger = logging.getLogger(__name__)


@dataclass
class RunContext:
    """Global flags resolved against the settings."""

    settings: Settings
    seed: Optional[int]
    workers: int
    out_dir: Path
    quick: bool
    config: Optional[ExperimentConfig]

    def effective_seed(self, config: Optional[ExperimentConfig] = None) -> int:
        if self.seed is not None:
            return self.seed
        if config is not None:
            return config.run.master_seed
        return self.settings.seed

    def runner(self, config: Optional[ExperimentConfig] = None) -> ReplicaRunner:
        block_size = config.run.block_size if config is not None else self.settings.block_size
        return ReplicaRunner(
            master_seed=self.effective_seed(config), workers=self.workers, block_size=block_size
        )

    def store(self, config: ExperimentConfig, subdir: Optional[str] = None) -> ArtifactStore:
        out = self.out_dir / subdir if subdir else self.out_dir
        return ArtifactStore(out, config.config_hash(), self.effective_seed(config))


def build_context(args: argparse.Namespace) -> RunContext:
    settings = get_settings()
    config = load_config(Path(args.config)) if getattr(args, "config", None) else None
    if config is not None and args.seed is not None:
        config = merge_overrides(config, {"run": {"master_seed": args.seed}})
    if args.out:
        out_dir = Path(args.out)
    elif config is not None:
        out_dir = Path(config.output.out_dir)
    else:
        out_dir = Path(settings.out_dir)
    workers = args.workers if args.workers is not None else settings.workers
    if workers < 1:
        raise ConfigError("must be at least 1", field_path="workers")
    return RunContext(
        settings=settings,
        seed=args.seed,
        workers=workers,
        out_dir=out_dir,
        quick=bool(args.quick),
        config=config,
    )


@contextmanager
def manifest_on_error(store: ArtifactStore) -> Iterator[ArtifactStore]:
    """Write error_manifest.json beside partial artifacts if the body fails.

    A partial BatchPath carried by the error is flushed first, so it is
    listed in the manifest.
    """
    try:
        yield store
    except MCBLabError as exc:
        partial = getattr(exc, "partial", None)
        if isinstance(partial, BatchPath):
            store.write_batch(partial)
        store.write_error_manifest(exc)
        raise


def model_horizon(config: ExperimentConfig) -> float:
    run = config.run
    if run.horizon_unit == HorizonUnit.MODEL:
        return run.horizon
    if run.n_sites < 3:
        raise ConfigError("rescaled horizons need n_sites >= 3", field_path="run.horizon_unit")
    return run.horizon * beta_n(run.n_sites)


def initial_coords(config: ExperimentConfig, size: int, rng: np.random.Generator) -> np.ndarray:
    """Initial configurations for `size` replicas, shape (size, N, 2)."""
    init, n_sites = config.initial, config.run.n_sites
    if init.kind == InitialKind.HALF_HALF:
        base = SystemState.half_half(n_sites, init.magnitude).coords
    elif init.kind == InitialKind.EXPLICIT:
        base = np.array(init.sites, dtype=float)
    else:
        theta = np.array(init.theta.as_tuple())
        return harmonic_sample_array(np.broadcast_to(theta, (size, n_sites, 2)), rng)
    return np.broadcast_to(base, (size,) + base.shape).copy()


def parse_point(text: str) -> tuple[float, float]:
    """`x1:x2` -> (x1, x2)."""
    try:
        x1, x2 = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected x1:x2, got {text!r}") from exc
    if x1 < 0 or x2 < 0 or not (math.isfinite(x1) and math.isfinite(x2)):
        raise argparse.ArgumentTypeError(f"coordinates must be finite and nonnegative: {text!r}")
    return x1, x2


def parse_items(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected ITEM[,ITEM], got {text!r}") from exc
