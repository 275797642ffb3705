"""
Euler-Maruyama samplers for the Galton-board energy diffusion

    dK = sigma^2 / (4K) dt + sigma dW.

Two schemes are exposed. ``direct`` integrates K itself and reflects at the
floor kappa0 * sigma. ``transformed`` integrates Y = K^2 / sigma^2, which
satisfies dY = 3/2 dt + 2 sqrt(Y) dW by Ito's formula, with full truncation at
zero, and returns sigma * sqrt(Y). The floor scales with sigma so both schemes
respect the exact scaling K_sigma = sigma * K_1 under shared noise.

Noise is drawn per coarse step as a (noise_refinement, N) block of standard
normals; a run with ``substeps = s`` sums the block in s groups. Runs that
differ only in ``substeps`` therefore share Brownian paths.
"""
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.errors import ArgumentError
from core.logging import logger


class SdeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    sigma_bar: float = Field(1.0, ge=0.0)
    steps: int = Field(1000, ge=1000)
    horizon: float = Field(1.0, gt=0.0)
    k0: float = Field(0.0, ge=0.0)
    floor: float = Field(1e-3, gt=0.0)
    scheme: Literal["direct", "transformed"] = "transformed"
    substeps: int = Field(1, ge=1)
    noise_refinement: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check_refinement(self):
        if self.noise_refinement % self.substeps:
            raise ValueError(f"substeps={self.substeps} must divide noise_refinement={self.noise_refinement}")
        return self


def _increments(block: np.ndarray, substeps: int, dt: float) -> np.ndarray:
    """Brownian increments for ``substeps`` sub-intervals of one coarse step."""
    group = block.shape[0] // substeps
    sums = block.reshape(substeps, group, -1).sum(axis=1)
    return sums * np.sqrt(dt / group)


def em_k_sde(config: SdeConfig, N: int, rng: np.random.Generator) -> np.ndarray:
    """
    Sample K(horizon) for N independent paths.

    Returns:
        Array of shape (N,) with nonnegative entries.
    """
    if N < 1:
        raise ArgumentError(f"sample count must be positive, got {N}")
    sigma = config.sigma_bar
    dt = config.horizon / (config.steps * config.substeps)

    if sigma == 0.0:
        return np.full(N, config.k0)

    if config.scheme == "direct":
        floor = config.floor * sigma
        k = np.full(N, max(config.k0, floor))
        for _ in range(config.steps):
            block = rng.standard_normal((config.noise_refinement, N))
            for dw in _increments(block, config.substeps, dt):
                k = k + sigma * sigma / (4.0 * k) * dt + sigma * dw
                k = np.where(k < floor, 2.0 * floor - k, k)
                k = np.maximum(k, floor)
        out = k
    else:
        y = np.full(N, (config.k0 / sigma) ** 2)
        for _ in range(config.steps):
            block = rng.standard_normal((config.noise_refinement, N))
            for dw in _increments(block, config.substeps, dt):
                y = y + 1.5 * dt + 2.0 * np.sqrt(np.maximum(y, 0.0)) * dw
        out = sigma * np.sqrt(np.maximum(y, 0.0))

    logger.debug("sde_sampled", scheme=config.scheme, paths=N, steps=config.steps * config.substeps, mean=float(out.mean()))
    return out
