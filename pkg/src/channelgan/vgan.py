"""Conditional variational GAN: networks, objectives, training loop.

The generator (channel approximation network) maps a batch of transmitted
symbols x plus externally drawn Gaussian noise to synthetic received
samples. A discriminator scores (x, y) pairs as measured vs generated.
Three objectives are available: plain MSE regression (which collapses to
conditional means), the cross-entropy GAN game, and the Wasserstein
variant with weight clipping.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _accel, netcore
from .errors import ConfigError, NumericError, ShapeError, TrainingDiverged
from .netcore import (
    FC_LINEAR,
    FC_RELU,
    FC_SIGMOID,
    AdamState,
    DenseLayer,
    LayerStack,
    adam_step,
    grads_to_list,
    sampler_forward,
    stack_backward,
    stack_forward,
)

__all__ = [
    "GeneratorSpec", "DiscriminatorSpec", "TrainConfig", "TrainHistory",
    "build_generator", "build_discriminator", "GeneratorSampler",
    "sampler_forward", "mse_loss_grad",
    "gan_discriminator_grads", "gan_discriminator_update",
    "gan_generator_grads", "gan_generator_update",
    "wgan_discriminator_grads", "wgan_discriminator_update",
    "wgan_generator_grads", "wgan_generator_update", "train",
]

DEFAULT_LATENT_DIM = 16
GEN_HIDDEN = (20, 20, 20)
GEN_POST_HIDDEN = 80
DISC_HIDDEN = (80, 80, 80)

# discriminator outputs are kept away from exactly 0/1 before taking logs
PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class GeneratorSpec:
    """Channel approximation network layout: three 20-wide ReLU layers, a
    linear layer emitting interleaved (mean, scale) latent parameters, the
    Gaussian sampler, one 80-wide ReLU layer and a linear output."""

    x_dim: int
    y_dim: int
    latent_dim: int = DEFAULT_LATENT_DIM
    hidden: tuple[int, ...] = GEN_HIDDEN
    post_hidden: int = GEN_POST_HIDDEN

    def build(self) -> LayerStack:
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be >= 1")
        layers = []
        prev = self.x_dim
        for width in self.hidden:
            layers.append(DenseLayer.fc(FC_RELU, prev, width))
            prev = width
        layers.append(DenseLayer.fc(FC_LINEAR, prev, 2 * self.latent_dim))
        layers.append(DenseLayer.sampler(self.latent_dim))
        layers.append(DenseLayer.fc(FC_RELU, self.latent_dim, self.post_hidden))
        layers.append(DenseLayer.fc(FC_LINEAR, self.post_hidden, self.y_dim))
        return LayerStack(layers)


@dataclass(frozen=True)
class DiscriminatorSpec:
    """Scores concatenated [x | y] rows; sigmoid head for the GAN game,
    linear head when used as a Wasserstein critic."""

    x_dim: int
    y_dim: int
    critic: bool = False
    hidden: tuple[int, ...] = DISC_HIDDEN

    def build(self) -> LayerStack:
        layers = []
        prev = self.x_dim + self.y_dim
        for width in self.hidden:
            layers.append(DenseLayer.fc(FC_RELU, prev, width))
            prev = width
        head = FC_LINEAR if self.critic else FC_SIGMOID
        layers.append(DenseLayer.fc(head, prev, 1))
        return LayerStack(layers)


def build_generator(x_dim: int, y_dim: int,
                    latent_dim: int = DEFAULT_LATENT_DIM) -> LayerStack:
    return GeneratorSpec(x_dim, y_dim, latent_dim).build()


def build_discriminator(x_dim: int, y_dim: int, critic: bool = False) -> LayerStack:
    return DiscriminatorSpec(x_dim, y_dim, critic).build()


class GeneratorSampler:
    """Adapts a trained generator stack to the channel interface: draws the
    internal Gaussian noise itself, so sample(x, rng) mirrors a channel."""

    def __init__(self, stack: LayerStack):
        self.stack = stack
        self.latent_dim = stack.sampler_dim()
        self.x_dim = stack.in_dim
        self.y_dim = stack.out_dim

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.latent_dim is None:
            return stack_forward(x, self.stack)
        eps = rng.standard_normal((x.shape[0], self.latent_dim))
        return stack_forward(x, self.stack, eps)


@dataclass
class TrainConfig:
    objective: str = "gan"  # mse | gan | wgan
    learning_rate: float = 2e-4
    batch_size: int = 256
    iterations: int = 10_000
    seed: int = 0
    wgan_clip: float = 0.01
    non_saturating: bool = True
    n_critic: int = 1
    latent_dim: int = DEFAULT_LATENT_DIM
    divergence_every: int = 0  # 0 disables the periodic JS snapshot

    def validate(self) -> None:
        if self.objective not in ("mse", "gan", "wgan"):
            raise ConfigError(f"objective must be mse, gan or wgan, got {self.objective!r}")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not self.wgan_clip > 0:
            raise ConfigError("wgan_clip must be > 0")
        if self.n_critic < 1:
            raise ConfigError("n_critic must be >= 1")
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be >= 1")


@dataclass
class TrainHistory:
    iteration: list[int] = field(default_factory=list)
    d_loss: list[float] = field(default_factory=list)
    g_loss: list[float] = field(default_factory=list)
    divergence: list[float] = field(default_factory=list)  # nan where not sampled

    def append(self, it: int, d: float, g: float, div: float = float("nan")) -> None:
        self.iteration.append(it)
        self.d_loss.append(d)
        self.g_loss.append(g)
        self.divergence.append(div)

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("iteration,d_loss,g_loss,divergence\n")
            for it, d, g, dv in zip(self.iteration, self.d_loss, self.g_loss, self.divergence):
                dv_s = "" if np.isnan(dv) else repr(dv)
                f.write(f"{it},{d!r},{g!r},{dv_s}\n")


def _check_rows(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape[0] != y.shape[0]:
        raise ShapeError(f"x has {x.shape[0]} rows, y has {y.shape[0]}")


def mse_loss_grad(gen: LayerStack, x, y, noise):
    """Mean over the batch of the squared error norm, plus its parameter grads.

    Gradients flow through the whole stack, sampler included, with the
    supplied noise held fixed.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_rows(x, y)
    y_hat = stack_forward(x, gen, noise)
    n = x.shape[0]
    diff = y_hat - y
    loss = float(np.sum(diff * diff) / n)
    grads, _ = stack_backward(gen, 2.0 * diff / n)
    return grads, loss


def _disc_forward(disc: LayerStack, x, y) -> np.ndarray:
    return stack_forward(np.hstack([x, y]), disc)


def _disc_backward_to_y(disc: LayerStack, x_dim: int, gout):
    """Backward through the discriminator, returning (param_grads, grad wrt y part)."""
    grads, gin = stack_backward(disc, gout)
    return grads, gin[:, x_dim:]


def _add_grads(a, b):
    out = []
    for ga, gb in zip(a, b):
        if ga is None:
            out.append(None)
        else:
            out.append((ga[0] + gb[0], ga[1] + gb[1]))
    return out


def _clamped_log_grad(p: np.ndarray, sign: float, n: int):
    """Gradient of (sign/n) * sum log(clamp(p)) w.r.t. p, zero where clamped."""
    inside = (p > PROB_CLAMP) & (p < 1.0 - PROB_CLAMP)
    pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return np.where(inside, sign / (n * pc), 0.0)


def gan_discriminator_grads(gen: LayerStack, disc: LayerStack, x, y_real, noise):
    """Descent grads of the negated objective
    (1/N) sum [log D(x,y) + log(1 - D(x,h(x)))] w.r.t. the discriminator.

    Returns (grads, objective value). The generator only provides samples.
    """
    x = np.asarray(x, dtype=np.float64)
    y_real = np.asarray(y_real, dtype=np.float64)
    _check_rows(x, y_real)
    n = x.shape[0]
    y_fake = stack_forward(x, gen, noise)

    p_real = _disc_forward(disc, x, y_real)
    # descended term -(1/N) log(clamp(p_real)): dL/dp_real = -1/(N p_real)
    grads_real, _ = stack_backward(disc, _clamped_log_grad(p_real, -1.0, n))

    p_fake = _disc_forward(disc, x, y_fake)
    # descended term -(1/N) log(clamp(1 - p_fake)): dL/dp_fake = +1/(N (1 - p_fake))
    grads_fake, _ = stack_backward(disc, -_clamped_log_grad(1.0 - p_fake, -1.0, n))

    pr = np.clip(p_real, PROB_CLAMP, 1.0 - PROB_CLAMP)
    pf = np.clip(p_fake, PROB_CLAMP, 1.0 - PROB_CLAMP)
    objective = float(np.mean(np.log(pr) + np.log(1.0 - pf)))
    return _add_grads(grads_real, grads_fake), objective


def gan_discriminator_update(gen: LayerStack, disc: LayerStack, x, y_real, noise,
                             adam: AdamState) -> float:
    """One ascent step on (1/N) sum [log D(x,y) + log(1 - D(x,h(x)))].

    Implemented as Adam descent on the negated objective. Only the
    discriminator's parameters change. Returns the objective value.
    """
    grads, objective = gan_discriminator_grads(gen, disc, x, y_real, noise)
    adam_step(disc.params(), grads_to_list(disc, grads), adam)
    return objective


def gan_generator_grads(gen: LayerStack, disc: LayerStack, x, noise,
                        non_saturating: bool = True):
    """Descent grads for the generator against a sigmoid-head discriminator.

    non_saturating=True: descend -(1/N) sum log D(x, h(x)).
    non_saturating=False: descend (1/N) sum log(1 - D(x, h(x))).
    Returns (grads, descended objective value).
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    y_fake = stack_forward(x, gen, noise)
    p_fake = _disc_forward(disc, x, y_fake)
    pf = np.clip(p_fake, PROB_CLAMP, 1.0 - PROB_CLAMP)
    if non_saturating:
        gout = _clamped_log_grad(p_fake, -1.0, n)
        loss = float(-np.mean(np.log(pf)))
    else:
        gout = -_clamped_log_grad(1.0 - p_fake, 1.0, n)
        loss = float(np.mean(np.log(1.0 - pf)))
    _, g_y = _disc_backward_to_y(disc, x.shape[1], gout)
    grads, _ = stack_backward(gen, g_y)
    return grads, loss


def gan_generator_update(gen: LayerStack, disc: LayerStack, x, noise,
                         adam: AdamState, non_saturating: bool = True) -> float:
    """One generator step; only the generator's parameters change. Returns
    the descended objective value."""
    grads, loss = gan_generator_grads(gen, disc, x, noise, non_saturating)
    adam_step(gen.params(), grads_to_list(gen, grads), adam)
    return loss


def wgan_discriminator_grads(gen: LayerStack, disc: LayerStack, x, y_real, noise):
    """Descent grads of the negated critic objective
    (1/N) sum [D(x,y) - D(x,h(x))]. Returns (grads, objective value)."""
    x = np.asarray(x, dtype=np.float64)
    y_real = np.asarray(y_real, dtype=np.float64)
    _check_rows(x, y_real)
    n = x.shape[0]
    y_fake = stack_forward(x, gen, noise)

    s_real = _disc_forward(disc, x, y_real)
    grads_real, _ = stack_backward(disc, np.full_like(s_real, -1.0 / n))
    s_fake = _disc_forward(disc, x, y_fake)
    grads_fake, _ = stack_backward(disc, np.full_like(s_fake, 1.0 / n))

    objective = float(np.mean(s_real) - np.mean(s_fake))
    return _add_grads(grads_real, grads_fake), objective


def wgan_discriminator_update(gen: LayerStack, disc: LayerStack, x, y_real, noise,
                              adam: AdamState, clip: float) -> float:
    """One critic ascent step on (1/N) sum [D(x,y) - D(x,h(x))], then clamp
    every critic parameter to [-clip, clip]. Returns the objective value."""
    grads, objective = wgan_discriminator_grads(gen, disc, x, y_real, noise)
    adam_step(disc.params(), grads_to_list(disc, grads), adam)
    for p in disc.params():
        _accel.clip_inplace(p, clip)
    return objective


def wgan_generator_grads(gen: LayerStack, disc: LayerStack, x, noise):
    """Descent grads of -(1/N) sum D(x, h(x)) w.r.t. the generator, pushing
    generated samples toward higher critic scores. Returns (grads, value)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    y_fake = stack_forward(x, gen, noise)
    s_fake = _disc_forward(disc, x, y_fake)
    gout = np.full_like(s_fake, -1.0 / n)
    _, g_y = _disc_backward_to_y(disc, x.shape[1], gout)
    grads, _ = stack_backward(gen, g_y)
    return grads, float(-np.mean(s_fake))


def wgan_generator_update(gen: LayerStack, disc: LayerStack, x, noise,
                          adam: AdamState) -> float:
    """One generator step; only the generator's parameters change. Returns
    the descended value."""
    grads, loss = wgan_generator_grads(gen, disc, x, noise)
    adam_step(gen.params(), grads_to_list(gen, grads), adam)
    return loss


def _seed_ints(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]


def _batch_js(y_real: np.ndarray, y_fake: np.ndarray) -> float:
    from .evaluate import histogram, js_divergence
    lo = float(min(y_real.min(), y_fake.min()))
    hi = float(max(y_real.max(), y_fake.max()))
    if not lo < hi:
        hi = lo + 1.0
    if y_real.shape[1] == 1:
        rng_spec = (lo, hi)
    else:
        rng_spec = ((lo, hi),) * y_real.shape[1]
    p = histogram(y_real, 50, rng_spec)
    q = histogram(y_fake, 50, rng_spec)
    return js_divergence(p, q)


def train(channel, source, config: TrainConfig):
    """Alternating training loop. Returns (generator stack, TrainHistory).

    Per iteration: n_critic discriminator updates, each on a freshly drawn
    (x, y, noise) mini-batch, then one generator update on its own fresh
    batch. MSE mode runs a single regression update per iteration and no
    discriminator. Fully deterministic given config.seed.
    """
    config.validate()
    x_dim = source.dim
    y_dim = channel.y_dim
    if channel.x_dim != x_dim:
        raise ConfigError(
            f"channel expects {channel.x_dim}-dim inputs, source emits {x_dim}-dim symbols")

    seed_data, seed_chan, seed_noise, seed_gen, seed_disc = _seed_ints(config.seed, 5)
    rng_data = np.random.default_rng(seed_data)
    rng_chan = np.random.default_rng(seed_chan)
    rng_noise = np.random.default_rng(seed_noise)

    gen = build_generator(x_dim, y_dim, config.latent_dim)
    netcore.init_params(gen, seed_gen)
    adam_gen = AdamState.for_params(gen.params(), config.learning_rate)

    disc = None
    adam_disc = None
    if config.objective in ("gan", "wgan"):
        disc = build_discriminator(x_dim, y_dim, critic=(config.objective == "wgan"))
        netcore.init_params(disc, seed_disc)
        adam_disc = AdamState.for_params(disc.params(), config.learning_rate)

    history = TrainHistory()

    def draw_batch():
        x = source.draw(config.batch_size, rng_data)
        y = channel.sample(x, rng_chan)
        eps = rng_noise.standard_normal((config.batch_size, config.latent_dim))
        return x, y, eps

    for it in range(config.iterations):
        try:
            if config.objective == "mse":
                x, y, eps = draw_batch()
                grads, g_loss = mse_loss_grad(gen, x, y, eps)
                adam_step(gen.params(), grads_to_list(gen, grads), adam_gen)
                d_loss = 0.0
            else:
                for _ in range(config.n_critic):
                    x, y, eps = draw_batch()
                    if config.objective == "gan":
                        d_loss = gan_discriminator_update(gen, disc, x, y, eps, adam_disc)
                    else:
                        d_loss = wgan_discriminator_update(gen, disc, x, y, eps,
                                                           adam_disc, config.wgan_clip)
                x, y, eps = draw_batch()
                if config.objective == "gan":
                    g_loss = gan_generator_update(gen, disc, x, eps, adam_gen,
                                                  config.non_saturating)
                else:
                    g_loss = wgan_generator_update(gen, disc, x, eps, adam_gen)
        except NumericError as exc:
            raise TrainingDiverged(it, str(exc)) from exc

        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            raise TrainingDiverged(it, f"non-finite loss (d={d_loss}, g={g_loss})")

        div = float("nan")
        if config.divergence_every and (it + 1) % config.divergence_every == 0:
            y_fake = stack_forward(x, gen, eps)
            div = _batch_js(y, y_fake)
        history.append(it, float(d_loss), float(g_loss), div)

    return gen, history
