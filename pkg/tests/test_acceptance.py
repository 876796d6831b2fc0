"""Exit criteria, one test per criterion, each printing a PASS/FAIL line.

Full training budgets throughout (10^4 Adam steps per model, 2x10^5
symbols per SER point), master seed 42. Expect several minutes.
"""

import math

import numpy as np
import pytest

from icae import cli
from icae.adl import AdlConfig, select_receiver
from icae.autoencoder import evaluate_ser
from icae.channel import ChannelSpec, qpsk_ser_oracle, simulate_qpsk_ser
from icae.harness import DEFAULT_GRID, FIG6_ADL, ExperimentConfig, _train, reward_experiment
from icae.nn import Adam, Tensor, power_normalize, softmax
from icae.rng import stream

from test_nn import check_network_gradients

pytestmark = pytest.mark.slow

SEED = 42
SYMBOLS = 200_000
CONFIG = ExperimentConfig(master_seed=SEED, symbols_per_point=SYMBOLS)
CHANNEL = ChannelSpec(m=2)


@pytest.fixture(scope="session")
def report(request):
    tr = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number, ok, detail):
        line = f"ACCEPTANCE criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        if tr is not None:
            tr.write_line(line)
        print(line)
        assert ok, line

    return emit


_models = {}


def model(alpha):
    key = "blind" if alpha is None else f"{alpha:g}"
    if key not in _models:
        _models[key] = _train(CONFIG, alpha, f"acceptance_{key}")
    return _models[key]


def ser_at(m, alpha, ebn0=7.0):
    return evaluate_ser(m, CHANNEL, alpha, [ebn0], SYMBOLS, seed=SEED).records[0].ser


def mc_sd(p, n=SYMBOLS):
    return math.sqrt(max(p, 1.0 / n) * (1 - p) / n)


def test_c01_informed_alpha_02(report):
    ser = ser_at(model(0.2), 0.2)
    report(1, 3e-4 <= ser <= 3e-3, f"informed alpha=0.2 SER@7dB = {ser:.3e}, required in [3e-4, 3e-3]")


def test_c02_no_interference_baseline(report):
    curve = evaluate_ser(model(None), CHANNEL, None, DEFAULT_GRID, SYMBOLS, seed=SEED)
    sers = [r.ser for r in curve]
    monotone = all(b < a + 2 * mc_sd(a) for a, b in zip(sers, sers[1:]))
    at9 = curve.at(9.0).ser
    report(2, monotone and at9 <= 1e-3,
           f"monotone={monotone}, SER@9dB = {at9:.3e} (<= 1e-3); curve " + " ".join(f"{s:.1e}" for s in sers))


def test_c03_blind_vs_informed(report):
    blind = ser_at(model(None), 0.8)
    informed = ser_at(model(0.8), 0.8)
    report(3, blind >= 10 * informed,
           f"alpha=0.8 SER@7dB blind = {blind:.3e}, informed = {informed:.3e}, ratio {blind / max(informed, 1e-12):.2f} (>= 10)")


def test_c04_weak_robustness(report):
    m = model(0.5)
    matched = ser_at(m, 0.5)
    offs = {a: ser_at(m, a) for a in (1.0, 1.5, 2.5)}
    ok = all(s <= 10 * matched for s in offs.values())
    report(4, ok, f"trained 0.5, matched SER = {matched:.3e}; offsets "
           + ", ".join(f"{a:g}: {s:.3e}" for a, s in offs.items()) + " (each <= 10x matched)")


def test_c05_very_strong_sensitivity(report):
    m = model(2.0)
    matched = ser_at(m, 2.0)
    off = ser_at(m, 2.5)
    report(5, off >= 0.1 and matched < 1e-2,
           f"trained 2.0: offset 2.5 SER = {off:.3e} (>= 0.1), matched SER = {matched:.3e} (< 1e-2)")


def test_c06_reward_localization(report):
    widths, argmaxes = {}, {}
    for alpha in (1.5, 2.0):
        _, _, res = reward_experiment(CONFIG, alpha, AdlConfig(), model=model(alpha), label="acceptance_fig5")
        q = res.table.qualifying(0.6)
        widths[alpha] = float(q.max() - q.min())
        argmaxes[alpha] = res.table.argmax
    ok = all(abs(argmaxes[a] - a) <= 0.2 + 1e-9 for a in argmaxes) and widths[2.0] <= widths[1.5] + 1e-9
    report(6, ok, f"argmax {argmaxes}, qualifying width {widths}")


def test_c07_adl_recovery(report):
    lines, ok = [], True
    for alpha in (1.5, 2.0):
        received = 2 * alpha
        m = model(alpha)
        _, bank, res = reward_experiment(CONFIG, received, FIG6_ADL, model=m, label="acceptance_fig6")
        known = select_receiver(m, bank, received, FIG6_ADL, seed=SEED)
        without = ser_at(m, received)
        with_adl = ser_at(m.with_receiver(res.receiver), received)
        known_ser = ser_at(m.with_receiver(known), received)
        ok &= without > 0.1 and with_adl <= 5 * known_ser
        lines.append(f"alpha={alpha:g}->{received:g}: without {without:.3e}, ADL {with_adl:.3e} "
                     f"(alpha_hat {res.alpha_hat:.2f}), known {known_ser:.3e}")
    report(7, ok, "; ".join(lines))


def test_c08_numeric_core(report):
    worst = max(check_network_gradients(seed) for seed in range(50))
    x = Tensor(np.array([[1.0]]), name="x")
    opt = Adam([x], learning_rate=0.1)
    steps = 0
    while x.values[0, 0] ** 2 >= 1e-6 and steps < 500:
        x.grad = 2 * x.values
        opt.step()
        steps += 1
    rng = stream(SEED, "acceptance/invariants")
    z = rng.normal(scale=20.0, size=(10_000, 16))
    p = softmax(z)
    soft_ok = np.max(np.abs(p.sum(axis=1) - 1)) < 1e-12 and np.allclose(softmax(z + 7.5), p, atol=1e-12)
    u = rng.normal(size=(10_000, 8))
    xn = power_normalize(u, 4)
    norm_ok = np.max(np.abs((xn * xn).sum(axis=1) - 4)) < 1e-10 and np.allclose(power_normalize(xn, 4), xn, atol=1e-12)
    quad = x.values[0, 0] ** 2
    ok = worst < 1e-4 and quad < 1e-6 and soft_ok and norm_ok
    report(8, ok, f"worst FD rel err {worst:.2e} (< 1e-4); Adam x^2 = {quad:.1e} after {steps} steps; "
           f"softmax ok={soft_ok}; power-norm ok={norm_ok}")


def test_c09_qpsk_sanity(report):
    n = 1_000_000
    details, ok = [], True
    for ebn0 in (0.0, 2.0, 4.0, 6.0):
        p = float(qpsk_ser_oracle(ebn0))
        est = simulate_qpsk_ser(ebn0, n, stream(SEED, f"acceptance/qpsk/{ebn0:g}"))
        z = abs(est - p) / math.sqrt(p * (1 - p) / n)
        ok &= z < 3
        details.append(f"{ebn0:g}dB {est:.4e} vs {p:.4e} ({z:.2f} sd)")
    report(9, ok, "; ".join(details))


def test_c10_reproducible_csv(report, tmp_path):
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["reproduce", "--figure", "2", "--seed", "42", "--out", str(out)]) == 0
        outs.append((out / "fig2.csv").read_bytes())
    report(10, outs[0] == outs[1] and len(outs[0]) > 0, f"fig2.csv identical across runs ({len(outs[0])} bytes)")
