"""Online interference estimation from pilots (adaptive deep learning).

A bank of receivers, one per candidate coupling ``alpha``, is adapted to
the channel law each candidate implies (transmitter frozen). Live pilot
groups are decoded by every bank entry. Each candidate is scored by the
reciprocal of its pilot BER. Rewards are max-normalized, and the estimate
is the mean of the candidates whose normalized reward clears
``1 - confidence_fraction``. The receiver for the estimate then decodes
the payload.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .autoencoder import adapt_receiver, bit_errors
from .channel import ChannelSpec, receive
from .errors import ConfigurationError, DegenerateInputError, TrainingDivergedError
from .rng import stream


@dataclass
class AdlConfig:
    grid_min: float = 0.1
    grid_max: float = 3.0
    grid_step: float = 0.1
    confidence_fraction: float = 0.40
    group_count: int = 30
    pilot_ratio: float = 0.01
    group_size: int = 1000
    adapt_steps: int = 1500
    adapt_batch: int = 256
    adapt_lr: float = 1e-3
    # supervised fine-tuning on live pilots after selection; 0 disables
    adapt_steps_online: int = 0

    def __post_init__(self):
        if not self.grid_step > 0 or self.grid_max < self.grid_min:
            raise ConfigurationError(
                f"bad alpha grid: min={self.grid_min}, max={self.grid_max}, step={self.grid_step}"
            )
        if self.grid_min < 0:
            raise ConfigurationError("alpha grid must be non-negative")
        if not 0 < self.confidence_fraction < 1:
            raise ConfigurationError("confidence_fraction must lie in (0, 1)")
        if not 0 < self.pilot_ratio <= 1:
            raise ConfigurationError("pilot_ratio must lie in (0, 1]")
        if self.group_count < 1 or self.group_size < 1:
            raise ConfigurationError("group_count and group_size must be >= 1")
        if self.adapt_steps < 0 or self.adapt_steps_online < 0:
            raise ConfigurationError("adaptation budgets must be >= 0")

    @property
    def grid(self):
        count = int(round((self.grid_max - self.grid_min) / self.grid_step)) + 1
        return np.round(self.grid_min + self.grid_step * np.arange(count), 10)

    @property
    def pilots_per_group(self):
        return max(1, int(round(self.group_size * self.pilot_ratio)))


@dataclass
class PilotFrame:
    pilot_messages: np.ndarray
    received: np.ndarray
    group_index: int = 0

    def __post_init__(self):
        self.pilot_messages = np.asarray(self.pilot_messages, dtype=np.int64)
        self.received = np.atleast_2d(np.asarray(self.received, dtype=np.float64))
        if len(self.pilot_messages) < 1 or len(self.pilot_messages) != len(self.received):
            raise ValueError(
                f"pilot frame needs matching non-empty messages/received, "
                f"got {len(self.pilot_messages)} and {len(self.received)}"
            )


@dataclass
class TransmissionGroup:
    """One group of the stream: pilots first, then payload."""

    index: int
    pilot: PilotFrame
    payload_messages: np.ndarray
    payload_received: np.ndarray


def make_stream(model, channel, config, rng):
    """Simulate ``group_count`` pilot+payload groups through ``channel``."""
    codebook = model.codebook()
    n_pilot = config.pilots_per_group
    n_payload = config.group_size - n_pilot
    groups = []
    for g in range(config.group_count):
        msgs = rng.integers(0, model.M, size=config.group_size)
        if channel.m > 1:
            interf = codebook[rng.integers(0, model.M, size=(channel.m - 1, config.group_size))]
        else:
            interf = None
        y = receive(codebook[msgs], interf, channel, rng)
        groups.append(TransmissionGroup(
            index=g,
            pilot=PilotFrame(msgs[:n_pilot], y[:n_pilot], g),
            payload_messages=msgs[n_pilot:n_pilot + n_payload],
            payload_received=y[n_pilot:n_pilot + n_payload],
        ))
    return groups


@dataclass
class DecoderBank:
    grid: np.ndarray
    receivers: list
    k: int

    def index_of(self, alpha):
        i = int(np.argmin(np.abs(self.grid - alpha)))
        if abs(self.grid[i] - alpha) > 1e-9:
            raise KeyError(f"alpha={alpha} is not a bank candidate")
        return i

    def __getitem__(self, alpha):
        return self.receivers[self.index_of(alpha)]

    def nearest(self, alpha):
        # lowest index wins ties
        return int(np.argmin(np.abs(self.grid - alpha)))


def _candidate_spec(alpha, ebn0_db, model, m):
    return ChannelSpec(m=m, alpha=float(alpha), ebn0_db=ebn0_db, n=model.n, k=model.k)


def build_decoder_bank(base_model, config, train_ebn0_db=7.0, seed=0, m=2):
    """Adapt one receiver per grid candidate, transmitter frozen.

    Adaptation is warm-started along the grid: the candidate nearest the
    base model's training alpha adapts from the base receiver, and each
    neighbour outward adapts from the previous one. With ``adapt_steps=0``
    every entry equals the base receiver.
    """
    grid = config.grid
    start = int(np.argmin(np.abs(grid - (base_model.train_alpha or 0.0))))
    order = [start] + list(range(start + 1, len(grid))) + list(range(start - 1, -1, -1))
    receivers = [None] * len(grid)
    for i in order:
        if i == start:
            parent = base_model
        else:
            parent = base_model.with_receiver(receivers[i - 1 if i > start else i + 1])
        try:
            receivers[i] = adapt_receiver(
                parent,
                _candidate_spec(grid[i], train_ebn0_db, base_model, m),
                config.adapt_steps,
                stream(seed, f"bank/{grid[i]:.10g}"),
                batch_size=config.adapt_batch,
                learning_rate=config.adapt_lr,
            )
        except TrainingDivergedError as exc:
            raise TrainingDivergedError(f"decoder bank candidate alpha={grid[i]}: {exc}") from exc
    return DecoderBank(grid=grid.copy(), receivers=receivers, k=base_model.k)


def _pilot_bit_errors(receiver, frames, k):
    errs = []
    for f in frames:
        decided = kernels.active.argmax_rows(receiver.infer(f.received))
        errs.append(bit_errors(f.pilot_messages, decided, k))
    return np.array(errs, dtype=np.int64)


def _reward_from_counts(err_bits, total_bits):
    ber = err_bits / total_bits
    return 1.0 / max(ber, 0.5 / total_bits)


def compute_reward(candidate_alpha, frames, decoder_bank):
    """Reciprocal pilot BER of the candidate's receiver, floored at half an error."""
    frames = list(frames)
    if not frames:
        raise ValueError("compute_reward needs at least one pilot frame")
    receiver = decoder_bank[candidate_alpha]
    k = decoder_bank.k
    errs = _pilot_bit_errors(receiver, frames, k)
    total_bits = k * sum(len(f.pilot_messages) for f in frames)
    return _reward_from_counts(int(errs.sum()), total_bits)


def normalize_rewards(raw):
    """Divide by the largest reward so the peak is exactly 1."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("no rewards to normalize")
    if not np.all(np.isfinite(raw)):
        raise ValueError("rewards must be finite")
    peak = raw.max()
    if not peak > 0:
        raise DegenerateInputError("cannot normalize rewards whose maximum is not positive")
    return raw / peak


@dataclass
class RewardTable:
    grid: np.ndarray
    raw_rewards: np.ndarray
    normalized_rewards: np.ndarray = None

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.raw_rewards = np.asarray(self.raw_rewards, dtype=np.float64)
        if self.normalized_rewards is None:
            self.normalized_rewards = normalize_rewards(self.raw_rewards)
        if not (len(self.grid) == len(self.raw_rewards) == len(self.normalized_rewards)):
            raise ValueError("reward table columns differ in length")

    @property
    def argmax(self):
        return float(self.grid[int(np.argmax(self.raw_rewards))])

    def qualifying(self, threshold):
        return self.grid[self.normalized_rewards >= threshold]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alpha_candidate", "raw_reward", "normalized_reward"])
        for a, r, nr in zip(self.grid, self.raw_rewards, self.normalized_rewards):
            w.writerow([f"{a:.10g}", repr(float(r)), repr(float(nr))])
        return buf.getvalue()


def predict_alpha(table, config):
    """Mean of the grid points whose normalized reward is within the confidence fraction of the peak."""
    return float(np.mean(table.qualifying(1.0 - config.confidence_fraction)))


def reward_table(frames, decoder_bank):
    """Score every bank candidate on the pooled pilots of ``frames``."""
    frames = list(frames)
    if not frames:
        raise ValueError("need at least one pilot frame")
    total_bits = decoder_bank.k * sum(len(f.pilot_messages) for f in frames)
    raw = [
        _reward_from_counts(int(_pilot_bit_errors(rx, frames, decoder_bank.k).sum()), total_bits)
        for rx in decoder_bank.receivers
    ]
    return RewardTable(decoder_bank.grid, raw)


def _cumulative_rewards(frames, bank):
    """Raw reward per candidate after pooling groups 1..i, shape (groups, candidates)."""
    k = bank.k
    per_group = np.stack([_pilot_bit_errors(rx, frames, k) for rx in bank.receivers], axis=1)
    bits = k * np.cumsum([len(f.pilot_messages) for f in frames])
    cum = np.cumsum(per_group, axis=0)
    return np.array([[_reward_from_counts(e, b) for e in row] for row, b in zip(cum, bits)])


def _fine_tune_on_pilots(receiver, frames, steps, lr):
    from .nn import Adam, cross_entropy_grad

    receiver = receiver.copy()
    y = np.concatenate([f.received for f in frames])
    msgs = np.concatenate([f.pilot_messages for f in frames])
    opt = Adam(receiver.params(), learning_rate=lr)
    for _ in range(steps):
        probs = receiver.forward(y)
        receiver.backward(cross_entropy_grad(probs, msgs), from_preactivation=True)
        opt.step()
    return receiver


@dataclass
class AdlResult:
    alpha_hat: float
    decoded_payload: np.ndarray
    payload_messages: np.ndarray
    table: RewardTable
    receiver: object
    reward_history: np.ndarray = field(repr=False, default=None)

    @property
    def payload_ser(self):
        return float(np.mean(self.decoded_payload != self.payload_messages))


def select_receiver(base_model, bank, alpha_hat, config, train_ebn0_db=7.0, seed=0, m=2):
    """Receiver for an estimated alpha: the bank entry if on-grid, else adapted from the nearest entry."""
    i = bank.nearest(alpha_hat)
    if abs(bank.grid[i] - alpha_hat) <= 1e-9:
        return bank.receivers[i]
    return adapt_receiver(
        base_model.with_receiver(bank.receivers[i]),
        _candidate_spec(alpha_hat, train_ebn0_db, base_model, m),
        config.adapt_steps,
        stream(seed, f"select/{alpha_hat:.10g}"),
        batch_size=config.adapt_batch,
        learning_rate=config.adapt_lr,
    )


def run_adl(base_model, groups, true_channel, config, bank=None, train_ebn0_db=7.0, seed=0):
    """Estimate alpha from the pilot groups and decode the payload with the updated receiver."""
    if len(groups) < config.group_count:
        raise ConfigurationError(
            f"stream has {len(groups)} pilot groups, configuration needs {config.group_count}"
        )
    groups = list(groups)[: config.group_count]
    m = max(true_channel.m, 2)
    if bank is None:
        bank = build_decoder_bank(base_model, config, train_ebn0_db, seed=seed, m=m)
    frames = [g.pilot for g in groups]
    history = _cumulative_rewards(frames, bank)
    table = RewardTable(bank.grid, history[-1])
    alpha_hat = predict_alpha(table, config)
    receiver = select_receiver(base_model, bank, alpha_hat, config, train_ebn0_db, seed=seed, m=m)
    if config.adapt_steps_online:
        receiver = _fine_tune_on_pilots(receiver, frames, config.adapt_steps_online, config.adapt_lr)
    y = np.concatenate([g.payload_received for g in groups])
    sent = np.concatenate([g.payload_messages for g in groups])
    decoded = kernels.active.argmax_rows(receiver.infer(y))
    return AdlResult(alpha_hat, decoded, sent, table, receiver, history)
