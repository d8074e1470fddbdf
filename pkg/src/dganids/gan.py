"""GAN losses and the standalone/centralized minimax training loops.

The discriminator ascends the classic two-term batch objective while the
generator descends the fooling term; both use Adam with one step each per
epoch. An "epoch" here is one freshly sampled real minibatch plus one fake
minibatch, not a full pass over the dataset.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import nn
from .data import Dataset
from .errors import ConfigError, ShapeError, TrainingDivergenceError

log = logging.getLogger(__name__)

# discriminator outputs are clamped into [DELTA, 1-DELTA] before any log,
# which bounds every loss in [2*log(DELTA), 0]
DELTA = 1e-7

PRIOR_FAMILIES = ("uniform", "normal")


@dataclass(frozen=True)
class PriorSpec:
    """Latent noise distribution: uniform on [-1,1]^dim or standard normal."""

    family: str
    dim: int

    def __post_init__(self):
        if self.family not in PRIOR_FAMILIES:
            raise ConfigError(f"prior family must be one of {PRIOR_FAMILIES}, got {self.family!r}")
        if self.dim < 1:
            raise ConfigError(f"prior dim must be >= 1, got {self.dim}")


@dataclass
class Generator:
    params: nn.MLPParams
    latent_dim: int
    prior: PriorSpec

    def __post_init__(self):
        if self.params.in_size != self.latent_dim or self.prior.dim != self.latent_dim:
            raise ShapeError("generator input size, latent_dim, and prior dim must agree")


@dataclass
class Discriminator:
    params: nn.MLPParams

    def __post_init__(self):
        if self.params.out_size != 1:
            raise ShapeError("discriminator must have a single output")
        if self.params.layers[-1].activation != "sigmoid":
            raise ShapeError("discriminator output activation must be sigmoid")


@dataclass
class LossReport:
    epoch: int
    discriminator_loss: float
    generator_loss: float
    mean_disc_output_real: float


@dataclass
class GanTrainConfig:
    disc_hidden: tuple = (64, 32)
    gen_hidden: tuple = (64,)
    latent_dim: int = 32
    prior_family: str = "uniform"
    alpha: float = 1e-3
    alpha_gen: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    batch_size: int = 64
    epochs: int = 5000
    non_saturating: bool = False
    disc_hidden_activation: str = "tanh"
    gen_hidden_activation: str = "tanh"
    trace_every: int = 1

    def gen_alpha(self) -> float:
        return self.alpha if self.alpha_gen is None else self.alpha_gen


def sample_prior(prior: PriorSpec, b: int, seed) -> np.ndarray:
    """Deterministic latent batch of shape (b, dim)."""
    if b < 1:
        raise ValueError(f"batch size must be >= 1, got {b}")
    return _sample_prior(prior, b, np.random.default_rng(seed))


def _sample_prior(prior: PriorSpec, b: int, rng: np.random.Generator) -> np.ndarray:
    if prior.family == "uniform":
        return rng.uniform(-1.0, 1.0, size=(b, prior.dim))
    return rng.normal(0.0, 1.0, size=(b, prior.dim))


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def build_models(cfg: GanTrainConfig, feature_count: int, seed) -> tuple[Generator, Discriminator]:
    gen_seed, disc_seed = _seed_sequence(seed).spawn(2)
    gen_sizes = [cfg.latent_dim, *cfg.gen_hidden, feature_count]
    gen_acts = [cfg.gen_hidden_activation] * len(cfg.gen_hidden) + ["identity"]
    disc_sizes = [feature_count, *cfg.disc_hidden, 1]
    disc_acts = [cfg.disc_hidden_activation] * len(cfg.disc_hidden) + ["sigmoid"]
    gen = Generator(nn.mlp_init(gen_sizes, gen_acts, _seed_int(gen_seed)),
                    cfg.latent_dim, PriorSpec(cfg.prior_family, cfg.latent_dim))
    disc = Discriminator(nn.mlp_init(disc_sizes, disc_acts, _seed_int(disc_seed)))
    return gen, disc


def _seed_int(seed_seq: np.random.SeedSequence) -> int:
    return int(seed_seq.generate_state(1, dtype=np.uint64)[0])


def _clamp(outputs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Clip into [DELTA, 1-DELTA]; the mask marks entries whose gradient survives."""
    clipped = np.clip(outputs, DELTA, 1.0 - DELTA)
    inside = (outputs > DELTA) & (outputs < 1.0 - DELTA)
    return clipped, inside


def disc_forward(disc: Discriminator, batch: np.ndarray):
    out, cache = nn.forward(disc.params, batch)
    return out, cache


def discriminator_loss(disc: Discriminator, real_batch: np.ndarray,
                       fake_batch: np.ndarray) -> float:
    """(1/b)[sum log D(real) + sum log(1-D(fake))]; the ascent target."""
    real_batch = np.asarray(real_batch, dtype=np.float64)
    fake_batch = np.asarray(fake_batch, dtype=np.float64)
    if real_batch.shape[0] != fake_batch.shape[0]:
        raise ShapeError(
            f"real and fake batches must match in size, got {real_batch.shape[0]} "
            f"vs {fake_batch.shape[0]}")
    d_real, _ = disc_forward(disc, real_batch)
    d_fake, _ = disc_forward(disc, fake_batch)
    b = real_batch.shape[0]
    cr, _ = _clamp(d_real)
    cf, _ = _clamp(d_fake)
    return float((np.log(cr).sum() + np.log1p(-cf).sum()) / b)


def generator_feedback_loss(disc: Discriminator, fake_batch: np.ndarray) -> float:
    """(1/b) sum log(1-D(fake)); the quantity a device reports to the center."""
    fake_batch = np.asarray(fake_batch, dtype=np.float64)
    if fake_batch.shape[0] < 1:
        raise ValueError("fake batch must be non-empty")
    d_fake, _ = disc_forward(disc, fake_batch)
    cf, _ = _clamp(d_fake)
    return float(np.log1p(-cf).sum() / fake_batch.shape[0])


def estimate_value_function(disc: Discriminator, gen: Generator, data_sample: np.ndarray,
                            mc_draws: int, seed) -> float:
    """Monte-Carlo estimate of E[log D(x)] + E[log(1 - D(G(z)))]."""
    if mc_draws < 1:
        raise ValueError(f"mc_draws must be >= 1, got {mc_draws}")
    data_sample = np.asarray(data_sample, dtype=np.float64)
    d_real, _ = disc_forward(disc, data_sample)
    z = sample_prior(gen.prior, mc_draws, seed)
    fake, _ = nn.forward(gen.params, z)
    d_fake, _ = disc_forward(disc, fake)
    cr, _ = _clamp(d_real)
    cf, _ = _clamp(d_fake)
    return float(np.log(cr).mean() + np.log1p(-cf).mean())


# ── training steps (also driven by the federation orchestrator) ─────────

def _grad_sum(a: nn.Gradient, b: nn.Gradient) -> nn.Gradient:
    return nn.Gradient([x + y for x, y in zip(a.weights, b.weights)],
                       [x + y for x, y in zip(a.biases, b.biases)])


def _grad_scale(g: nn.Gradient, s: float) -> nn.Gradient:
    return nn.Gradient([s * x for x in g.weights], [s * x for x in g.biases])


def disc_ascent_step(disc: Discriminator, state: nn.AdamState, real_batch: np.ndarray,
                     fake_batch: np.ndarray):
    """One Adam ascent step on the discriminator objective.

    Returns (disc', state', loss, mean raw output on the real batch).
    """
    real_batch = np.asarray(real_batch, dtype=np.float64)
    fake_batch = np.asarray(fake_batch, dtype=np.float64)
    if real_batch.shape[0] != fake_batch.shape[0]:
        raise ShapeError("real and fake batches must match in size")
    b = real_batch.shape[0]
    d_real, cache_r = disc_forward(disc, real_batch)
    d_fake, cache_f = disc_forward(disc, fake_batch)
    cr, mr = _clamp(d_real)
    cf, mf = _clamp(d_fake)
    loss = float((np.log(cr).sum() + np.log1p(-cf).sum()) / b)
    g_real = np.where(mr, 1.0 / (b * cr), 0.0)
    g_fake = np.where(mf, -1.0 / (b * (1.0 - cf)), 0.0)
    grad = _grad_sum(nn.backward(disc.params, cache_r, g_real),
                     nn.backward(disc.params, cache_f, g_fake))
    # Adam minimizes, so ascend by feeding the negated gradient
    new_params, new_state = nn.adam_step(disc.params, _grad_scale(grad, -1.0), state)
    return Discriminator(new_params), new_state, loss, float(d_real.mean())


def generator_feedback(disc: Discriminator, fake_batch: np.ndarray,
                       non_saturating: bool = False):
    """Device-side part of a generator update: loss plus d(loss)/d(fake rows)."""
    fake_batch = np.asarray(fake_batch, dtype=np.float64)
    b = fake_batch.shape[0]
    d_fake, cache = disc_forward(disc, fake_batch)
    cf, mask = _clamp(d_fake)
    if non_saturating:
        loss = float(-np.log(cf).sum() / b)
        g_out = np.where(mask, -1.0 / (b * cf), 0.0)
    else:
        loss = float(np.log1p(-cf).sum() / b)
        g_out = np.where(mask, -1.0 / (b * (1.0 - cf)), 0.0)
    _, dx = nn.backward_with_input(disc.params, cache, g_out)
    return loss, dx


def generator_apply_feedback(gen: Generator, state: nn.AdamState, caches,
                             input_grads, scale: float):
    """Center-side part: push averaged feedback through the generator and step."""
    total = None
    for cache, dx in zip(caches, input_grads):
        g = nn.backward(gen.params, cache, dx)
        total = g if total is None else _grad_sum(total, g)
    total = _grad_scale(total, scale)
    new_params, new_state = nn.adam_step(gen.params, total, state)
    return Generator(new_params, gen.latent_dim, gen.prior), new_state


def sample_rows(records: np.ndarray, b: int, rng: np.random.Generator) -> np.ndarray:
    """Minibatch of b rows, falling back to replacement on small datasets."""
    m = records.shape[0]
    idx = rng.choice(m, size=b, replace=m < b)
    return records[idx]


def mean_disc_output(disc: Discriminator, rows: np.ndarray) -> float:
    out, _ = disc_forward(disc, rows)
    return float(out.mean())


def _train_gan(dataset: Dataset, cfg: GanTrainConfig, seed, eval_rows=None):
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    model_seed, data_seed, prior_seed = _seed_sequence(seed).spawn(3)
    gen, disc = build_models(cfg, dataset.d, model_seed)
    data_rng = np.random.default_rng(data_seed)
    prior_rng = np.random.default_rng(prior_seed)
    disc_state = nn.adam_init(disc.params, cfg.alpha, cfg.beta1, cfg.beta2, cfg.eps_adam)
    gen_state = nn.adam_init(gen.params, cfg.gen_alpha(), cfg.beta1, cfg.beta2, cfg.eps_adam)
    if len(dataset) < cfg.batch_size:
        log.warning("dataset has %d rows < batch size %d; sampling with replacement",
                    len(dataset), cfg.batch_size)
    trace: list[LossReport] = []
    for epoch in range(1, cfg.epochs + 1):
        real = sample_rows(dataset.records, cfg.batch_size, data_rng)
        z_a = _sample_prior(gen.prior, cfg.batch_size, prior_rng)
        fake_a, _ = nn.forward(gen.params, z_a)
        disc, disc_state, d_loss, mean_real = disc_ascent_step(disc, disc_state, real, fake_a)

        z_g = _sample_prior(gen.prior, cfg.batch_size, prior_rng)
        fake_g, cache_g = nn.forward(gen.params, z_g)
        g_loss, dx = generator_feedback(disc, fake_g, cfg.non_saturating)
        gen, gen_state = generator_apply_feedback(gen, gen_state, [cache_g], [dx], 1.0)

        if not (np.isfinite(d_loss) and np.isfinite(g_loss)):
            raise TrainingDivergenceError(epoch)
        if epoch % cfg.trace_every == 0:
            if eval_rows is not None:
                mean_real = mean_disc_output(disc, eval_rows)
            trace.append(LossReport(epoch, d_loss, g_loss, mean_real))
    return gen, disc, trace


def train_standalone(device_dataset: Dataset, cfg: GanTrainConfig, seed, eval_rows=None):
    """Minimax training against a single device's dataset."""
    return _train_gan(device_dataset, cfg, seed, eval_rows)


def train_centralized(pooled_dataset: Dataset, cfg: GanTrainConfig, seed, eval_rows=None):
    """Minimax training against the union dataset; same loop, bigger pool."""
    return _train_gan(pooled_dataset, cfg, seed, eval_rows)
