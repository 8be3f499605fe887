"""Ground-truth stochastic channel simulators and dataset assembly.

Each channel is a memoryless conditional sampler: given a batch of
transmitted symbols it draws received samples row by row, i.i.d. given the
RNG. Four kinds cover the experiments: additive Gaussian (1-D), additive
chi-squared (1-D), per-dimension Gaussian on I/Q pairs (2-D), and a 2-D
nonlinear amplifier chain with phase impairments plus Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .modulation import SymbolSource


def _check_cols(x: np.ndarray, cols: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != cols:
        raise ShapeError(f"{name} expects an n x {cols} matrix, got shape {x.shape}")
    return x


def awgn_channel(x, noise_std: float, rng: np.random.Generator) -> np.ndarray:
    """y = x + N(0, noise_std^2), independent per row."""
    x = _check_cols(x, 1, "awgn_channel")
    if noise_std < 0:
        raise ConfigError("noise_std must be >= 0")
    return x + rng.normal(0.0, noise_std, x.shape)


def chi2_channel(x, dof: int, rng: np.random.Generator) -> np.ndarray:
    """y = x + chi-squared(dof) draws; the additive term is never negative."""
    x = _check_cols(x, 1, "chi2_channel")
    if dof < 1:
        raise ConfigError("dof must be >= 1")
    return x + rng.chisquare(dof, x.shape)


def complex_awgn_channel(x, noise_std_per_dim: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Gaussian noise on each of the I and Q columns."""
    x = _check_cols(x, 2, "complex_awgn_channel")
    if noise_std_per_dim < 0:
        raise ConfigError("noise_std_per_dim must be >= 0")
    return x + rng.normal(0.0, noise_std_per_dim, x.shape)


@dataclass(frozen=True)
class NonlinearQamParams:
    """Saleh-form amplifier coefficients plus phase and additive impairments.

    AM/AM gain alpha_a * r / (1 + beta_a * r^2) and AM/PM rotation
    alpha_p * r^2 / (1 + beta_p * r^2) with the classic coefficient set as
    defaults; phase noise is i.i.d. per symbol so the channel stays
    memoryless.
    """

    noise_std: float = 0.05
    phase_offset: float = 0.15
    phase_noise_std: float = 0.1
    amam_alpha: float = 2.1587
    amam_beta: float = 1.1517
    ampm_alpha: float = 4.0033
    ampm_beta: float = 9.1040

    def validate(self) -> None:
        if self.noise_std < 0 or self.phase_noise_std < 0:
            raise ConfigError("noise levels must be >= 0")
        if self.amam_beta < 0 or self.ampm_beta < 0:
            raise ConfigError("amplifier beta coefficients must be >= 0")


def nonlinear_qam_channel(x, params: NonlinearQamParams, rng: np.random.Generator) -> np.ndarray:
    """Amplifier AM/AM + AM/PM, then phase offset and phase noise, then AWGN.

    Implemented without a polar round trip: the AM/AM curve
    r' = alpha * r / (1 + beta r^2) is a pure gain alpha / (1 + beta r^2)
    on the I/Q pair, and all phase terms combine into one rotation. With
    every impairment zeroed the map is exactly the identity.
    """
    x = _check_cols(x, 2, "nonlinear_qam_channel")
    params.validate()
    i, q = x[:, 0], x[:, 1]
    r2 = i * i + q * q
    gain = params.amam_alpha / (1.0 + params.amam_beta * r2)
    dphi = (params.ampm_alpha * r2 / (1.0 + params.ampm_beta * r2)
            + params.phase_offset
            + rng.normal(0.0, params.phase_noise_std, x.shape[0]))
    c, s = np.cos(dphi), np.sin(dphi)
    out = np.empty_like(x)
    out[:, 0] = gain * (i * c - q * s)
    out[:, 1] = gain * (i * s + q * c)
    return out + rng.normal(0.0, params.noise_std, x.shape)


class AwgnChannel:
    """1-D additive white Gaussian noise channel."""

    x_dim = 1
    y_dim = 1

    def __init__(self, noise_std: float = 1.0):
        if noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        self.noise_std = noise_std

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        return awgn_channel(x, self.noise_std, rng)


class AdditiveChi2Channel:
    """1-D channel adding chi-squared noise (sum of dof squared normals)."""

    x_dim = 1
    y_dim = 1

    def __init__(self, dof: int = 2):
        if dof < 1:
            raise ConfigError("dof must be >= 1")
        self.dof = int(dof)

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        return chi2_channel(x, self.dof, rng)


class ComplexAwgnChannel:
    """2-D channel with independent Gaussian noise per I/Q dimension."""

    x_dim = 2
    y_dim = 2

    def __init__(self, noise_std_per_dim: float = 0.1):
        if noise_std_per_dim < 0:
            raise ConfigError("noise_std_per_dim must be >= 0")
        self.noise_std_per_dim = noise_std_per_dim

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        return complex_awgn_channel(x, self.noise_std_per_dim, rng)


class NonlinearQamChannel:
    """2-D amplifier chain: AM/AM, AM/PM, phase offset/noise, AWGN."""

    x_dim = 2
    y_dim = 2

    def __init__(self, params: NonlinearQamParams | None = None):
        self.params = params if params is not None else NonlinearQamParams()
        self.params.validate()

    def sample(self, x, rng: np.random.Generator) -> np.ndarray:
        return nonlinear_qam_channel(x, self.params, rng)


@dataclass
class SampleBatch:
    """Paired (x, y) matrices with matching row counts."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.x.shape[0] != self.y.shape[0]:
            raise ShapeError(
                f"x has {self.x.shape[0]} rows, y has {self.y.shape[0]}")

    def __len__(self) -> int:
        return self.x.shape[0]


def sample_dataset(source: SymbolSource, channel, n: int, seed) -> SampleBatch:
    """Draw n symbols from the source and push them through the channel.

    Symbol draws and channel noise use independent sub-streams of the seed,
    so the batch is reproducible end to end.
    """
    ss_sym, ss_chan = np.random.SeedSequence(seed).spawn(2)
    x = source.draw(n, np.random.default_rng(ss_sym))
    y = channel.sample(x, np.random.default_rng(ss_chan))
    return SampleBatch(x, y)


def save_batch_csv(batch: SampleBatch, path) -> None:
    """Header x_0..x_{d-1}, y_0..y_{d-1}; one row per sample pair."""
    dx, dy = batch.x.shape[1], batch.y.shape[1]
    header = ",".join([f"x_{j}" for j in range(dx)] + [f"y_{j}" for j in range(dy)])
    data = np.hstack([batch.x, batch.y])
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in data:
            f.write(",".join(repr(float(v)) for v in row) + "\n")


def load_batch_csv(path) -> SampleBatch:
    """Inverse of save_batch_csv; also the ingestion path for measured data."""
    with open(path) as f:
        header = f.readline().strip()
        cols = header.split(",") if header else []
        dx = sum(1 for c in cols if c.startswith("x_"))
        dy = sum(1 for c in cols if c.startswith("y_"))
        if dx == 0 or dy == 0 or dx + dy != len(cols):
            raise ConfigError(f"{path}: header {header!r} is not x_*/y_* columns")
        rows = [line.strip().split(",") for line in f if line.strip()]
    data = np.array(rows, dtype=np.float64) if rows else np.zeros((0, dx + dy))
    return SampleBatch(data[:, :dx], data[:, dx:])
