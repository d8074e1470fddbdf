"""Distributed training protocol: central generator, ring-swapped discriminators.

One center holds the generator; each device holds a discriminator and its
private data shard. Every T epochs the center ships fake batches out, devices
take one discriminator ascent step and report generator feedback, and the
center takes one averaged descent step. Every E epochs discriminator weights
(with their optimizer moments) rotate one hop around the ring; data never
moves. Both periods trigger at multiples of the period (T, 2T, ... - not at
epoch 0), and the center exchange runs before the swap when they coincide.

Every simulated transfer is materialized in ``message_log`` so a real wire
transport could replace the in-process calls without touching training logic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import gan, nn
from .data import Dataset
from .errors import TopologyError, TrainingDivergenceError
from .gan import Discriminator, GanTrainConfig, Generator, LossReport

log = logging.getLogger(__name__)

CENTER = "center"


@dataclass(frozen=True)
class RingTopology:
    device_ids: tuple
    successor: dict

    def __post_init__(self):
        ids = tuple(self.device_ids)
        object.__setattr__(self, "device_ids", ids)
        object.__setattr__(self, "successor", dict(self.successor))
        n = len(ids)
        # must be one n-cycle: walking n hops from any start visits everyone once
        seen = []
        cur = ids[0]
        for _ in range(n):
            seen.append(cur)
            cur = self.successor[cur]
        if cur != ids[0] or len(set(seen)) != n:
            raise TopologyError("successor map is not a single cycle over all devices")

    def predecessor(self) -> dict:
        return {v: k for k, v in self.successor.items()}


def build_ring(device_ids, seed) -> RingTopology:
    """Uniformly random single cycle over the devices, deterministic per seed."""
    ids = list(device_ids)
    if len(set(ids)) != len(ids):
        raise ValueError("device ids must be distinct")
    if len(ids) < 2:
        raise TopologyError(f"a ring needs at least 2 devices, got {len(ids)}")
    order = np.random.default_rng(seed).permutation(len(ids))
    cycle = [ids[i] for i in order]
    successor = {cycle[k]: cycle[(k + 1) % len(cycle)] for k in range(len(cycle))}
    return RingTopology(tuple(ids), successor)


@dataclass(frozen=True)
class Schedule:
    T: int
    E: int
    total_epochs: int

    def __post_init__(self):
        if self.T < 1 or self.E < 1:
            raise ValueError(f"periods must be >= 1, got T={self.T}, E={self.E}")
        if self.total_epochs < 0:
            raise ValueError(f"total_epochs must be >= 0, got {self.total_epochs}")


@dataclass
class FederationConfig:
    gan: GanTrainConfig = field(default_factory=GanTrainConfig)
    T: int = 1
    E: int = 10

    def schedule(self) -> Schedule:
        return Schedule(self.T, self.E, self.gan.epochs)


@dataclass
class MessageEvent:
    epoch: int
    event: str  # exchange | swap | gen-update
    sender: str
    receiver: str
    payload_kind: str  # fake-batch | gen-feedback | disc-weights | adam-step
    payload_bytes: int


@dataclass
class DeviceState:
    device_id: int
    disc: Discriminator
    adam: nn.AdamState
    dataset: Dataset
    data_rng: np.random.Generator


@dataclass
class ExchangeStats:
    epoch: int
    disc_losses: list[float]
    gen_loss: float
    mean_real_outputs: list[float]


@dataclass
class FederationState:
    center: Generator
    center_adam: nn.AdamState
    devices: list[DeviceState]
    ring: RingTopology
    schedule: Schedule
    epoch: int = 0
    message_log: list[MessageEvent] = field(default_factory=list)
    prior_rng: np.random.Generator | None = None
    config: GanTrainConfig = field(default_factory=GanTrainConfig)
    last_stats: ExchangeStats | None = None

    @property
    def n(self) -> int:
        return len(self.devices)


def _disc_bytes(disc: Discriminator) -> int:
    return 8 * nn.num_parameters(disc.params)


def setup(datasets, cfg: FederationConfig, seed) -> FederationState:
    """Build the initial federation: ring, center generator, device discriminators."""
    datasets = list(datasets)
    n = len(datasets)
    if n < 2:
        raise TopologyError(f"the protocol needs at least 2 devices, got {n}")
    if any(len(d) == 0 for d in datasets):
        raise ValueError("all device datasets must be non-empty")
    dims = {d.d for d in datasets}
    if len(dims) != 1:
        raise ValueError(f"device datasets disagree on feature count: {sorted(dims)}")
    feature_count = dims.pop()
    ss = gan._seed_sequence(seed)
    ring_seed, model_seed, prior_seed, *device_seeds = ss.spawn(3 + n)
    ring = build_ring(range(n), ring_seed)
    gen, disc0 = gan.build_models(cfg.gan, feature_count, model_seed)
    devices = []
    disc_seeds = model_seed.spawn(n)
    for i, (dset, dseed, iseed) in enumerate(zip(datasets, device_seeds, disc_seeds)):
        _, disc = gan.build_models(cfg.gan, feature_count, iseed)
        devices.append(DeviceState(
            device_id=i, disc=disc,
            adam=nn.adam_init(disc.params, cfg.gan.alpha, cfg.gan.beta1,
                              cfg.gan.beta2, cfg.gan.eps_adam),
            dataset=dset, data_rng=np.random.default_rng(dseed)))
        if len(dset) < cfg.gan.batch_size:
            log.warning("device %d holds %d rows < batch size %d; sampling with replacement",
                        i, len(dset), cfg.gan.batch_size)
    center_adam = nn.adam_init(gen.params, cfg.gan.gen_alpha(), cfg.gan.beta1,
                               cfg.gan.beta2, cfg.gan.eps_adam)
    return FederationState(center=gen, center_adam=center_adam, devices=devices,
                           ring=ring, schedule=cfg.schedule(),
                           prior_rng=np.random.default_rng(prior_seed), config=cfg.gan)


def center_exchange(state: FederationState) -> FederationState:
    """One T-cycle: fake batches out, one disc step per device, averaged gen step."""
    if state.epoch < 1 or state.epoch % state.schedule.T != 0:
        raise ValueError(f"center exchange fired off-schedule at epoch {state.epoch}")
    cfg = state.config
    n = state.n
    b = cfg.batch_size
    feature_count = state.devices[0].dataset.d
    batch_bytes = 8 * b * feature_count

    # the center draws all 2n latent batches up front: adversarial ones first,
    # then the generator-feedback ones
    z_adv = [gan._sample_prior(state.center.prior, b, state.prior_rng) for _ in range(n)]
    z_gen = [gan._sample_prior(state.center.prior, b, state.prior_rng) for _ in range(n)]
    fakes_adv = []
    fakes_gen = []
    gen_caches = []
    for i in range(n):
        fake_a, _ = nn.forward(state.center.params, z_adv[i])
        fake_g, cache_g = nn.forward(state.center.params, z_gen[i])
        fakes_adv.append(fake_a)
        fakes_gen.append(fake_g)
        gen_caches.append(cache_g)
        state.message_log.append(MessageEvent(
            state.epoch, "exchange", CENTER, str(i), "fake-batch", batch_bytes))
        state.message_log.append(MessageEvent(
            state.epoch, "exchange", CENTER, str(i), "fake-batch", batch_bytes))

    new_devices = []
    disc_losses = []
    mean_real_outputs = []
    feedback_losses = []
    feedback_grads = []
    for i, dev in enumerate(state.devices):
        real = gan.sample_rows(dev.dataset.records, b, dev.data_rng)
        disc, adam, d_loss, mean_real = gan.disc_ascent_step(dev.disc, dev.adam,
                                                             real, fakes_adv[i])
        g_loss, dx = gan.generator_feedback(disc, fakes_gen[i], cfg.non_saturating)
        new_devices.append(DeviceState(dev.device_id, disc, adam, dev.dataset, dev.data_rng))
        disc_losses.append(d_loss)
        feedback_losses.append(g_loss)
        feedback_grads.append(dx)
        mean_real_outputs.append(mean_real)
        state.message_log.append(MessageEvent(
            state.epoch, "exchange", str(i), CENTER, "gen-feedback", 8 + batch_bytes))

    gen_loss = float(np.mean(feedback_losses))
    new_center, new_center_adam = gan.generator_apply_feedback(
        state.center, state.center_adam, gen_caches, feedback_grads, 1.0 / n)
    state.message_log.append(MessageEvent(
        state.epoch, "gen-update", CENTER, CENTER, "adam-step", 0))

    if not np.isfinite(gen_loss) or not all(np.isfinite(v) for v in disc_losses):
        raise TrainingDivergenceError(state.epoch)
    return FederationState(
        center=new_center, center_adam=new_center_adam, devices=new_devices,
        ring=state.ring, schedule=state.schedule, epoch=state.epoch,
        message_log=state.message_log, prior_rng=state.prior_rng, config=cfg,
        last_stats=ExchangeStats(state.epoch, disc_losses, gen_loss, mean_real_outputs))


def swap_weights(state: FederationState) -> FederationState:
    """Rotate discriminators (and their Adam moments) one hop along the ring."""
    if state.epoch < 1 or state.epoch % state.schedule.E != 0:
        raise ValueError(f"weight swap fired off-schedule at epoch {state.epoch}")
    by_id = {dev.device_id: dev for dev in state.devices}
    new_devices = []
    for dev in state.devices:
        source = state.ring.predecessor()[dev.device_id]
        src = by_id[source]
        new_devices.append(DeviceState(dev.device_id, src.disc, src.adam,
                                       dev.dataset, dev.data_rng))
        state.message_log.append(MessageEvent(
            state.epoch, "swap", str(source), str(dev.device_id), "disc-weights",
            _disc_bytes(src.disc)))
    return FederationState(
        center=state.center, center_adam=state.center_adam, devices=new_devices,
        ring=state.ring, schedule=state.schedule, epoch=state.epoch,
        message_log=state.message_log, prior_rng=state.prior_rng, config=state.config,
        last_stats=state.last_stats)


def train_distributed(datasets, cfg: FederationConfig, seed,
                      eval_rows=None) -> tuple[FederationState, list[LossReport]]:
    """Run the full schedule; returns the final state and a per-epoch trace."""
    state = setup(datasets, cfg, seed)
    trace: list[LossReport] = []
    for epoch in range(1, cfg.schedule().total_epochs + 1):
        state.epoch = epoch
        if epoch % state.schedule.T == 0:
            state = center_exchange(state)
            if epoch % cfg.gan.trace_every == 0:
                stats = state.last_stats
                if eval_rows is not None:
                    mean_real = float(np.mean([gan.mean_disc_output(dev.disc, eval_rows)
                                               for dev in state.devices]))
                else:
                    mean_real = float(np.mean(stats.mean_real_outputs))
                trace.append(LossReport(epoch, float(np.mean(stats.disc_losses)),
                                        stats.gen_loss, mean_real))
        if epoch % state.schedule.E == 0:
            state = swap_weights(state)
    return state, trace


def extract_discriminators(state: FederationState) -> list[Discriminator]:
    """The trained per-device detectors; the center plays no role after training."""
    return [dev.disc for dev in state.devices]
