"""The (n, k) autoencoder: transmitter, receiver, training and SER evaluation.

Layer stack (M = 2**k messages, 2n real channel components)::

    transmitter: one-hot(M) -> Dense(M, M)+ELU -> Dense(M, 2n)+linear -> power norm
    receiver:    y(2n)      -> Dense(2n, M)+ReLU -> Dense(M, M)+softmax

All users of the interference channel share the one transmitter.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import ChannelSpec, classify_regime, receive
from .errors import ConfigurationError, DimensionError, TrainingDivergedError
from .nn import Adam, DenseLayer, PowerNorm, Sequential, cross_entropy_grad, cross_entropy_loss
from .rng import stream

# steps per logged "epoch" of the loss history
LOG_EVERY = 100


@dataclass
class AeConfig:
    n: int = 4
    k: int = 4
    train_ebn0_db: float = 7.0
    learning_rate: float = 1e-3
    batch_size: int = 256
    steps: int = 10_000
    train_alpha: float | None = None
    m_users: int = 2

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ConfigurationError(f"n and k must be >= 1, got n={self.n}, k={self.k}")
        if self.batch_size < 1 or self.steps < 0:
            raise ConfigurationError("batch_size must be >= 1 and steps >= 0")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.train_alpha is not None and self.train_alpha < 0:
            raise ConfigurationError("train_alpha must be >= 0")

    @property
    def M(self):
        return 2**self.k

    def training_channel(self, seed=0):
        """Channel used during training: AWGN only when train_alpha is unset."""
        if self.train_alpha is None:
            return ChannelSpec(m=1, alpha=0.0, ebn0_db=self.train_ebn0_db, n=self.n, k=self.k, seed=seed)
        return ChannelSpec(
            m=self.m_users, alpha=self.train_alpha, ebn0_db=self.train_ebn0_db, n=self.n, k=self.k, seed=seed
        )


class AeModel:
    def __init__(self, n, k, transmitter, receiver, train_alpha=None):
        self.n = n
        self.k = k
        self.transmitter = transmitter
        self.receiver = receiver
        self.train_alpha = train_alpha
        self.loss_history = []

    @classmethod
    def build(cls, n, k, rng, train_alpha=None):
        M = 2**k
        tx = Sequential([
            DenseLayer(M, M, "elu", rng, name="tx.0"),
            DenseLayer(M, 2 * n, "linear", rng, name="tx.1"),
            PowerNorm(n),
        ])
        rx = Sequential([
            DenseLayer(2 * n, M, "relu", rng, name="rx.0"),
            DenseLayer(M, M, "softmax", rng, name="rx.1"),
        ])
        return cls(n, k, tx, rx, train_alpha)

    @property
    def M(self):
        return 2**self.k

    def dense_layers(self):
        return [layer for layer in (*self.transmitter, *self.receiver) if isinstance(layer, DenseLayer)]

    def params(self):
        return self.transmitter.params() + self.receiver.params()

    def codebook(self):
        """All M codewords, shape (M, 2n)."""
        return self.transmitter.infer(np.eye(self.M))

    def encode(self, messages):
        messages = np.asarray(messages, dtype=np.int64)
        if np.any(messages < 0) or np.any(messages >= self.M):
            raise IndexError(f"message index out of range [0, {self.M})")
        return self.codebook()[messages]

    def decode(self, y):
        y = np.asarray(y, dtype=np.float64)
        single = y.ndim == 1
        if y.shape[-1] != 2 * self.n:
            raise DimensionError(f"received vector length {y.shape[-1]} != 2n = {2 * self.n}")
        probs = self.receiver.infer(y[None, :] if single else y)
        s_hat = kernels.active.argmax_rows(probs)
        if single:
            return probs[0], int(s_hat[0])
        return probs, s_hat

    def with_receiver(self, receiver):
        """Shallow variant sharing this transmitter with a different receiver."""
        clone = AeModel(self.n, self.k, self.transmitter, receiver, self.train_alpha)
        return clone

    def copy(self):
        clone = AeModel(self.n, self.k, self.transmitter.copy(), self.receiver.copy(), self.train_alpha)
        clone.loss_history = list(self.loss_history)
        return clone


def encode_message(model, s):
    if not 0 <= s < model.M:
        raise IndexError(f"message {s} out of range [0, {model.M})")
    return model.encode([s])[0]


def decode(model, y):
    return model.decode(y)


def bits_from_message(s, k):
    """Natural binary label of a message index, most significant bit first."""
    s = np.asarray(s, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1)
    return ((s[..., None] >> shifts) & 1).astype(np.int8)


def bit_errors(sent, decided, k):
    diff = np.bitwise_xor(np.asarray(sent, dtype=np.int64), np.asarray(decided, dtype=np.int64))
    return int(sum(np.count_nonzero((diff >> b) & 1) for b in range(k)))


def _message_batch(M, batch_size, rng):
    reps, extra = divmod(batch_size, M)
    msgs = np.tile(np.arange(M), reps)
    if extra:
        msgs = np.concatenate([msgs, rng.choice(M, size=extra, replace=False)])
    return rng.permutation(msgs)


def _interferers(codebook, spec, size, rng):
    if spec.m == 1:
        return None
    return codebook[rng.integers(0, len(codebook), size=(spec.m - 1, size))]


def train_end_to_end(config, channel=None, rng=None, model=None):
    """Train transmitter and receiver jointly through the channel.

    ``channel`` defaults to ``config.training_channel()``. With interference,
    the other users send uniformly random messages through the current
    transmitter and are treated as constants by backprop.
    """
    if rng is None:
        rng = np.random.default_rng()
    spec = channel if channel is not None else config.training_channel()
    if spec.n != config.n or spec.k != config.k:
        raise ConfigurationError(f"channel (n={spec.n}, k={spec.k}) does not match config (n={config.n}, k={config.k})")
    if model is None:
        model = AeModel.build(config.n, config.k, rng, train_alpha=config.train_alpha)
    M = config.M
    eye = np.eye(M)
    opt = Adam(model.params(), learning_rate=config.learning_rate)
    block = []
    for step in range(config.steps):
        msgs = _message_batch(M, config.batch_size, rng)
        codebook = model.transmitter.forward(eye)
        x = codebook[msgs]
        y = receive(x, _interferers(codebook, spec, len(msgs), rng), spec, rng)
        probs = model.receiver.forward(y)
        loss = cross_entropy_loss(probs, msgs)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"loss became {loss} in epoch {step // LOG_EVERY} (step {step})")
        grad_y = model.receiver.backward(cross_entropy_grad(probs, msgs), from_preactivation=True)
        grad_codebook = np.zeros_like(codebook)
        np.add.at(grad_codebook, msgs, grad_y)
        model.transmitter.backward(grad_codebook)
        opt.step()
        block.append(loss)
        if len(block) == LOG_EVERY or step == config.steps - 1:
            model.loss_history.append(float(np.mean(block)))
            block = []
    return model


def adapt_receiver(model, spec, steps, rng, batch_size=256, learning_rate=1e-3):
    """Fine-tune a copy of the receiver for ``spec`` with the transmitter frozen."""
    receiver = model.receiver.copy()
    if steps == 0:
        return receiver
    M = model.M
    codebook = model.codebook()
    opt = Adam(receiver.params(), learning_rate=learning_rate)
    for step in range(steps):
        msgs = _message_batch(M, batch_size, rng)
        y = receive(codebook[msgs], _interferers(codebook, spec, len(msgs), rng), spec, rng)
        probs = receiver.forward(y)
        loss = cross_entropy_loss(probs, msgs)
        if not np.isfinite(loss):
            raise TrainingDivergedError(f"receiver adaptation for alpha={spec.alpha} diverged at step {step}")
        receiver.backward(cross_entropy_grad(probs, msgs), from_preactivation=True)
        opt.step()
    return receiver


@dataclass
class SerRecord:
    ebn0_db: float
    ser: float
    ber: float
    n_symbols: int
    alpha_train: float | None = None
    alpha_eval: float | None = None
    alpha_predicted: float | None = None
    regime: str = ""
    seed: int = 0
    experiment: str = ""


@dataclass
class SerCurve:
    experiment: str = ""
    records: list = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def at(self, ebn0_db):
        for r in self.records:
            if abs(r.ebn0_db - ebn0_db) < 1e-9:
                return r
        raise KeyError(f"no record at {ebn0_db} dB")


def _count_errors(model, spec, n_symbols, rng, chunk):
    M, k = model.M, model.k
    codebook = model.codebook()
    sym_err = bit_err = 0
    remaining = n_symbols
    while remaining:
        size = min(chunk, remaining)
        sent = rng.integers(0, M, size=size)
        y = receive(codebook[sent], _interferers(codebook, spec, size, rng), spec, rng)
        decided = kernels.active.argmax_rows(model.receiver.infer(y))
        sym_err += int(np.count_nonzero(decided != sent))
        bit_err += bit_errors(sent, decided, k)
        remaining -= size
    return sym_err, bit_err


def evaluate_ser(model, channel, eval_alpha, ebn0_grid, symbols_per_point, seed=0,
                 jobs=1, experiment="", chunk=1 << 16):
    """Monte Carlo SER/BER of user 1 over an Eb/N0 grid.

    ``eval_alpha=None`` evaluates on plain AWGN. Each grid point draws from its
    own stream ``(seed, "ser/<index>")`` so serial and threaded runs agree.
    """
    if symbols_per_point < 1:
        raise ConfigurationError("symbols_per_point must be positive")
    if eval_alpha is None:
        base = ChannelSpec(m=1, alpha=0.0, ebn0_db=channel.ebn0_db, n=model.n, k=model.k, seed=seed, noise=channel.noise)
        regime = ""
    else:
        base = ChannelSpec(m=max(channel.m, 2), alpha=eval_alpha, ebn0_db=channel.ebn0_db,
                           n=model.n, k=model.k, seed=seed, noise=channel.noise)
        regime = classify_regime(eval_alpha, base.m).name
    grid = [float(e) for e in ebn0_grid]

    def point(i):
        errs = _count_errors(model, base.at(ebn0_db=grid[i]), symbols_per_point, stream(seed, f"ser/{i}"), chunk)
        return errs

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            counts = list(pool.map(point, range(len(grid))))
    else:
        counts = [point(i) for i in range(len(grid))]
    curve = SerCurve(experiment=experiment)
    for ebn0, (se, be) in zip(grid, counts):
        curve.records.append(SerRecord(
            ebn0_db=ebn0,
            ser=se / symbols_per_point,
            ber=be / (symbols_per_point * model.k),
            n_symbols=symbols_per_point,
            alpha_train=model.train_alpha,
            alpha_eval=eval_alpha,
            regime=regime,
            seed=seed,
            experiment=experiment,
        ))
    return curve
