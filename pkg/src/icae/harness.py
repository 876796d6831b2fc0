"""Experiment presets, configuration files and result emission."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .adl import AdlConfig, build_decoder_bank, make_stream, run_adl, select_receiver
from .autoencoder import AeConfig, SerCurve, SerRecord, bit_errors, evaluate_ser, train_end_to_end
from .channel import ChannelSpec, classify_regime
from .errors import ConfigurationError
from .rng import stream

log = logging.getLogger(__name__)

CSV_HEADER = ["experiment", "alpha_train", "alpha_eval", "alpha_predicted",
              "ebn0_db", "ser", "ber", "n_symbols", "regime", "seed"]
PRESETS = ("fig2", "fig3", "fig4", "fig5", "fig6", "custom")
DEFAULT_GRID = tuple(float(x) for x in range(-2, 11))
MIN_SYMBOLS = 10_000


@dataclass
class ExperimentConfig:
    preset: str = "custom"
    ae: AeConfig = field(default_factory=AeConfig)
    channel: ChannelSpec = field(default_factory=lambda: ChannelSpec(m=2))
    adl: AdlConfig | None = None
    ebn0_grid_db: tuple = DEFAULT_GRID
    alpha_train: float | None = None
    alpha_eval_list: tuple = ()
    symbols_per_point: int = 200_000
    master_seed: int = 0
    out_path: str = "results"
    jobs: int = 1

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigurationError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        if self.symbols_per_point < MIN_SYMBOLS:
            raise ConfigurationError(f"symbols_per_point must be >= {MIN_SYMBOLS}")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1")


# ---------------------------------------------------------------------------
# key=value configuration files

_AE_KEYS = {"n": int, "k": int, "train_ebn0_db": float, "learning_rate": float,
            "batch_size": int, "steps": int, "m_users": int}
_ADL_KEYS = {f.name: f.type for f in fields(AdlConfig)}
_TOP_KEYS = {"preset": str, "alpha_train": float, "alpha_eval": "floats", "ebn0_grid": "floats",
             "symbols": int, "seed": int, "out": str, "jobs": int}


def parse_floats(text):
    """Comma list ``a,b,c`` or inclusive range ``start:stop:step``."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(p) for p in text.split(":"))
        count = int(round((stop - start) / step)) + 1
        return tuple(float(np.round(start + step * i, 10)) for i in range(count))
    return tuple(float(p) for p in text.split(",") if p.strip())


def read_config_file(path):
    """Parse a ``key = value`` file into a flat dict (``#`` starts a comment)."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _AE_KEYS and key not in _ADL_KEYS and key not in _TOP_KEYS:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _convert(kind, value):
    if kind == "floats":
        return parse_floats(value) if isinstance(value, str) else tuple(value)
    if kind in (int, "int"):
        return int(value)
    if kind in (float, "float"):
        return float(value)
    return value


def build_config(values):
    """ExperimentConfig from a flat dict of strings or typed values (CLI overrides merged in)."""
    ae_kw = {k: _convert(t, values[k]) for k, t in _AE_KEYS.items() if values.get(k) is not None}
    adl_kw = {k: _convert(t, values[k]) for k, t in _ADL_KEYS.items() if values.get(k) is not None}
    alpha_train = values.get("alpha_train")
    alpha_train = None if alpha_train in (None, "", "none") else float(alpha_train)
    kw = {}
    if values.get("ebn0_grid") is not None:
        kw["ebn0_grid_db"] = _convert("floats", values["ebn0_grid"])
    if values.get("alpha_eval") is not None:
        kw["alpha_eval_list"] = _convert("floats", values["alpha_eval"])
    for key, name, kind in (("symbols", "symbols_per_point", int), ("seed", "master_seed", int),
                            ("out", "out_path", str), ("jobs", "jobs", int), ("preset", "preset", str)):
        if values.get(key) is not None:
            kw[name] = kind(values[key])
    return ExperimentConfig(
        ae=AeConfig(train_alpha=alpha_train, **ae_kw),
        adl=AdlConfig(**adl_kw) if adl_kw else None,
        alpha_train=alpha_train,
        **kw,
    )


# ---------------------------------------------------------------------------
# output

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_ser_csv(curves, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for curve in curves:
            for r in curve:
                w.writerow([r.experiment, _fmt(r.alpha_train), _fmt(r.alpha_eval), _fmt(r.alpha_predicted),
                            _fmt(r.ebn0_db), _fmt(r.ser), _fmt(r.ber), r.n_symbols, r.regime, r.seed])


def read_ser_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _curve_name(curve):
    first = curve.records[0]
    name = curve.experiment
    if first.alpha_eval is not None:
        name += f"_a{first.alpha_eval:g}"
    if first.alpha_train is not None and "train" not in name:
        name += f"_t{first.alpha_train:g}"
    return name


def write_plot_data(out_dir, curves=(), tables=()):
    """Two-column text files per curve plus an ``index.txt`` listing them."""
    plot_dir = Path(out_dir) / "plots"
    plot_dir.mkdir(parents=True, exist_ok=True)
    index = []
    for curve in curves:
        if not curve.records:
            continue
        name = _curve_name(curve)
        with open(plot_dir / f"{name}.dat", "w") as fh:
            fh.write("# ebn0_db ser\n")
            for r in curve:
                fh.write(f"{r.ebn0_db:g} {r.ser!r}\n")
        index.append(f"{name}.dat\tSER vs Eb/N0 ({name})")
    for label, table in tables:
        with open(plot_dir / f"{label}.dat", "w") as fh:
            fh.write("# alpha_candidate normalized_reward\n")
            for a, nr in zip(table.grid, table.normalized_rewards):
                fh.write(f"{a:g} {float(nr)!r}\n")
        index.append(f"{label}.dat\tnormalized reward vs candidate alpha ({label})")
    (plot_dir / "index.txt").write_text("\n".join(index) + "\n")


# ---------------------------------------------------------------------------
# presets

def _train(config, alpha, label):
    ae = replace(config.ae, train_alpha=alpha)
    log.info("training %s (alpha=%s, %d steps)", label, alpha, ae.steps)
    return train_end_to_end(ae, rng=stream(config.master_seed, f"train/{label}"))


def _eval(config, model, alpha, experiment, grid=None):
    return evaluate_ser(
        model,
        ChannelSpec(m=2, n=config.ae.n, k=config.ae.k),
        alpha,
        grid if grid is not None else config.ebn0_grid_db,
        config.symbols_per_point,
        seed=config.master_seed,
        jobs=config.jobs,
        experiment=experiment,
    )


def _fig2(config):
    blind = _train(config, None, "blind")
    informed = _train(config, 0.2, "informed_0.2")
    curves = [_eval(config, blind, None, "fig2_no_interference")]
    curves += [_eval(config, blind, a, "fig2_blind") for a in (0.2, 0.4, 0.6, 0.8)]
    curves.append(_eval(config, informed, 0.2, "fig2_informed"))
    return curves, []


def _offset_sweep(config, figure, alpha_train, offsets):
    model = _train(config, alpha_train, f"{figure}_train_{alpha_train:g}")
    return [_eval(config, model, a, f"{figure}_offset") for a in offsets], []


def _fig3(config):
    return _offset_sweep(config, "fig3", 0.5, (0.5, 1.0, 1.5, 2.0, 2.5))


def _fig4(config):
    return _offset_sweep(config, "fig4", 2.0, (2.0, 2.1, 2.2, 2.3, 2.4, 2.5))


def reward_experiment(config, alpha_true, adl_config, model=None, label="fig5", ebn0_db=7.0):
    """Train at the true alpha (unless given a model), then run ADL on a live stream."""
    if model is None:
        model = _train(config, alpha_true, f"{label}_train_{alpha_true:g}")
    bank = build_decoder_bank(model, adl_config, config.ae.train_ebn0_db, seed=config.master_seed)
    channel = ChannelSpec(m=2, alpha=alpha_true, ebn0_db=ebn0_db, n=model.n, k=model.k)
    groups = make_stream(model, channel, adl_config, stream(config.master_seed, f"{label}/stream/{alpha_true:g}"))
    result = run_adl(model, groups, channel, adl_config, bank=bank,
                     train_ebn0_db=config.ae.train_ebn0_db, seed=config.master_seed)
    return model, bank, result


def _fig5(config):
    adl_config = config.adl or AdlConfig()
    curves, tables = [], []
    for alpha in (1.5, 2.0):
        model, _bank, result = reward_experiment(config, alpha, adl_config)
        n = len(result.payload_messages)
        errs = result.decoded_payload != result.payload_messages
        curves.append(SerCurve("fig5_adl_payload", [SerRecord(
            ebn0_db=7.0, ser=float(np.mean(errs)),
            ber=bit_errors(result.payload_messages, result.decoded_payload, model.k) / (n * model.k),
            n_symbols=n, alpha_train=alpha, alpha_eval=alpha, alpha_predicted=result.alpha_hat,
            regime=classify_regime(alpha).name, seed=config.master_seed, experiment="fig5_adl_payload",
        )]))
        tables.append((f"fig5_reward_a{alpha:g}", result.table))
    return curves, tables


FIG6_ADL = AdlConfig(grid_min=0.1, grid_max=4.5)


def _fig6(config):
    adl_config = config.adl or FIG6_ADL
    curves, tables = [], []
    for alpha in (1.5, 2.0):
        received = 2 * alpha
        model = _train(config, alpha, f"fig6_train_{alpha:g}")
        _, bank, result = reward_experiment(config, received, adl_config, model=model, label="fig6")
        known = select_receiver(model, bank, received, adl_config, config.ae.train_ebn0_db, seed=config.master_seed)
        curves.append(_eval(config, model, received, "fig6_without_adl"))
        curves.append(_eval(config, model.with_receiver(known), received, "fig6_known_alpha"))
        with_adl = _eval(config, model.with_receiver(result.receiver), received, "fig6_with_adl")
        for r in with_adl:
            r.alpha_predicted = result.alpha_hat
        curves.append(with_adl)
        tables.append((f"fig6_reward_a{received:g}", result.table))
    return curves, tables


def _custom(config):
    model = _train(config, config.alpha_train, "custom")
    evals = config.alpha_eval_list or (config.alpha_train,)
    return [_eval(config, model, a, "custom") for a in evals], []


_RUNNERS = {"fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5, "fig6": _fig6, "custom": _custom}


def run_preset(config):
    """Run a preset and write ``<preset>.csv``, reward tables and plot data under ``out_path``."""
    out = Path(config.out_path)
    out.mkdir(parents=True, exist_ok=True)
    curves, tables = _RUNNERS[config.preset](config)
    write_ser_csv(curves, out / f"{config.preset}.csv")
    for label, table in tables:
        (out / f"{label}.csv").write_text(table.to_csv())
    write_plot_data(out, curves, tables)
    return curves, tables
