"""Acceptance checks, one test per criterion; each prints a PASS/FAIL line."""

import math
import time

import numpy as np

from physlearn import cli, contlearn, doublewell, observer, perceptron, qkernel, spiking, switch, thermo
from physlearn.core import RngStream
from physlearn.experiments import REGISTRY

PAIRS = [(1.0, 3.0), (0.5, 0.5), (1.0, 10.0)]


def _z(p_hat, p, n):
    se = math.sqrt(max(p * (1 - p), 1e-300) / n)
    return abs(p_hat - p) / se


def test_criterion_01_two_state_analytics(criterion):
    n = 100_000
    start = time.perf_counter()
    worst = 0.0
    for k, (mu, nu) in enumerate(PAIRS):
        gen = RngStream(1).child(k).generator()
        # steady state: constant rates, long enough to forget the start
        const = switch.RateSchedule.constant(mu, nu)
        t_ss = 10.0 / (mu + nu)
        finals = np.array([switch.simulate_path(switch.TwoStateSwitch(mu, nu, n=-1), const, t_ss, gen)["n"][-1]
                           for _ in range(n)])
        worst = max(worst, _z(np.mean(finals > 0), switch.steady_state(mu, nu)[1], n))
        # linear swap from steady state
        tau = 1.0 / (mu + nu)
        ramp = switch.RateSchedule.linear_ramp(mu, nu, tau)
        p0 = switch.steady_state(mu, nu)[1]
        finals = np.array([switch.simulate_path(switch.TwoStateSwitch(mu, nu, n=1 if gen.random() < p0 else -1),
                                                ramp, tau, gen)["n"][-1] for _ in range(n)])
        worst = max(worst, _z(np.mean(finals > 0), switch.ramp_propagate(mu, nu, tau)[1], n))
        # swap variable s from the clock events of the same thinning algorithm
        ens = switch.sample_ensemble(ramp, tau, n, RngStream(1).child(10 + k))
        eta, up, down = switch.swap_statistics(mu, nu, tau)
        s0 = np.mean(~ens["fired"])
        s_up = np.mean(ens["fired"] & (ens["n"] > 0))
        s_down = np.mean(ens["fired"] & (ens["n"] < 0))
        worst = max(worst, _z(s0, eta, n), _z(s_up, up, n), _z(s_down, down, n))
    elapsed = time.perf_counter() - start
    ok = worst < 3 and elapsed < 30
    criterion(1, ok, f"max |z| = {worst:.2f} over 3 rate pairs (< 3), {elapsed:.1f} s (< 30 s)")
    assert ok


def test_criterion_02_fluctuation_relation(criterion):
    mu, nu, E0 = 1.0, 3.0, 1.0
    tau = 20.0 / (mu + nu)
    start = time.perf_counter()
    ens = switch.sample_ensemble(switch.RateSchedule.linear_ramp(mu, nu, tau), tau, 100_000, RngStream(2))
    dE = E0 * (ens["n"] - ens["n0"]) / 2.0
    elapsed = time.perf_counter() - start
    target = switch.mean_work(mu, nu, E0)
    se = dE.std(ddof=1) / math.sqrt(dE.size)
    z = (dE.mean() - target) / se
    ok = abs(z) < 3 and elapsed < 60
    criterion(2, ok, f"<dE> = {dE.mean():.4f} vs E0(nu-mu)/(nu+mu) = {target:.4f}, z = {z:.1f} "
                     f"(finite-tau exact value {switch.mean_energy_change_finite(mu, nu, E0, tau):.4f})")
    assert ok


def test_criterion_02_companion_finite_tau():
    # the exact finite-duration mean the same ensemble should match
    mu, nu, E0 = 1.0, 3.0, 1.0
    tau = 20.0 / (mu + nu)
    ens = switch.sample_ensemble(switch.RateSchedule.linear_ramp(mu, nu, tau), tau, 100_000, RngStream(2))
    dE = E0 * (ens["n"] - ens["n0"]) / 2.0
    z = (dE.mean() - switch.mean_energy_change_finite(mu, nu, E0, tau)) / (dE.std(ddof=1) / math.sqrt(dE.size))
    assert abs(z) < 3


def test_criterion_03_boltzmann_stationarity(criterion):
    edges = np.linspace(-1.6, 1.6, 41)
    tvs = []
    for k, lam in enumerate((0.0, 0.2)):
        well = doublewell.DoubleWell(lam, 0.05)
        stream = RngStream(3).child(k)
        x0 = doublewell.sample_stationary(well, 2000, stream.child(0))
        tr = doublewell.simulate(well, None, x0, 0.01, 5.0, stream.child(1))
        samples = tr["x"][1:].ravel()
        assert samples.size == 1_000_000
        tvs.append(doublewell.total_variation(samples, doublewell.DEFAULT_GRID,
                                              doublewell.stationary_density(well), edges))
    ok = max(tvs) < 0.02
    criterion(3, ok, f"TV = {tvs[0]:.4f} (lam=0), {tvs[1]:.4f} (lam=0.2), 1e6 steps each (< 0.02)")
    assert ok


def test_criterion_04_jarzynski(criterion):
    start = time.perf_counter()
    res = thermo.jarzynski_check(thermo.linear_protocol(0.0, 0.5, 1.0), 20.0, 1.0, 100_000, 1e-3,
                                 RngStream(1))
    elapsed = time.perf_counter() - start
    ok = abs(res.lhs - res.rhs) < 3 * res.stderr and elapsed < 300
    criterion(4, ok, f"E[e^-bw] = {res.lhs:.2f}, e^-bdF = {res.rhs:.2f}, z = {res.z_score:.2f}, "
                     f"{elapsed:.1f} s (< 300 s)")
    assert ok


def test_criterion_05_observer_martingale(criterion):
    model = observer.ReadoutModel.from_Gamma(10.0, kappa=40.0, r=20.0)
    tr = observer.simulate_conditional(0.5, 0.5, model, 10.0, 1e-3, RngStream(1), n0=1.0,
                                       n_paths=10_000, record_every=100)
    n_c = tr["n_c"][1:]
    t = tr.times[1:]
    se = n_c.std(axis=1, ddof=1) / math.sqrt(n_c.shape[1])
    z = np.abs(n_c.mean(axis=1) - observer.master_mean(0.5, 0.5, 1.0, t)) / se
    ok = z.max() < 3
    criterion(5, ok, f"max |z| = {z.max():.2f} over {t.size} times on (0, 10] (< 3)")
    assert ok


def _fd(f, params, h):
    grad = np.empty(params.size)
    for i in range(params.size):
        up, dn = params.copy(), params.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (f(up) - f(dn)) / (2 * h)
    return grad


def test_criterion_06_perceptron_gradients(criterion):
    gen = RngStream(6).generator()
    worst_single = worst_xor = 0.0
    for _ in range(100):
        # single unit, two inputs
        beta = gen.uniform(0.5, 2.0)
        xi = gen.choice([-1.0, 1.0], 2)
        n_T = int(gen.choice([-1, 1]))
        theta = gen.uniform(-1, 1, 3)

        def eps_single(th):
            return perceptron.mean_error(perceptron.mean_output(xi @ th[:2] + th[2], beta), n_T)

        net = perceptron.PerceptronNet([(theta[:2, None], theta[2:])], beta=beta, eta=1.0)
        n_bar = perceptron.mean_output(xi @ theta[:2] + theta[2], beta)
        dw, db = perceptron.single_layer_update(net, perceptron.Datum(tuple(xi), n_T), n_bar)
        rule = np.r_[dw[:, 0], db]
        fd = -_fd(eps_single, theta, 1e-5)
        worst_single = max(worst_single, np.linalg.norm(rule - fd) / np.linalg.norm(fd))

        # 2-2-1 mean field
        beta = gen.uniform(0.5, 2.0)
        xi = gen.choice([-1.0, 1.0], 2)
        n_T = int(gen.choice([-1, 1]))
        theta = gen.uniform(-2, 2, 9)

        def unpack(th):
            return perceptron.xor_net(wh=th[:4].reshape(2, 2), bh=th[4:6], wo=th[6:8], bo=th[8], beta=beta)

        def eps_xor(th):
            return perceptron.mean_error(perceptron.xor_mean_field(unpack(th), xi)[1], n_T)

        net = unpack(theta)
        n_h, n_o = perceptron.xor_mean_field(net, xi)
        d_wh, d_bh, d_wo, d_bo = perceptron.xor_backward(net, xi, n_T, n_h, n_o)
        rule = np.r_[d_wh.ravel(), d_bh, d_wo, d_bo]
        fd = -_fd(eps_xor, theta, 1e-5)
        worst_xor = max(worst_xor, np.linalg.norm(rule - fd) / np.linalg.norm(fd))
    ok = worst_single < 1e-6 and worst_xor < 1e-4
    criterion(6, ok, f"max relative error {worst_single:.1e} single layer (< 1e-6), "
                     f"{worst_xor:.1e} XOR mean field (< 1e-4), 100 draws")
    assert ok


def test_criterion_07_not_training(criterion):
    start = time.perf_counter()
    finals, negative = [], 0
    for seed in range(20):
        net, rec = perceptron.train_not(beta=1.0, eta=1.0, n_samples=200, epochs=500, rng=RngStream(seed))
        finals.append(rec.moving_average(50)[-1])
        negative += net.layers[0][0][0, 0] < 0
    elapsed = time.perf_counter() - start
    med = float(np.median(finals))
    ok = med < 0.05 and negative >= 19 and elapsed < 60
    criterion(7, ok, f"median eps = {med:.4f} (< 0.05), negative weight in {negative}/20, {elapsed:.1f} s")
    assert ok


def test_criterion_08_xor_training(criterion):
    start = time.perf_counter()
    good = 0
    for seed in range(20):
        _, rec = perceptron.train_xor(n_samples=200, epochs=3000, rng=RngStream(seed))
        good += np.median(rec.eps_est[-100:]) < 0.1
    elapsed = time.perf_counter() - start
    ok = good >= 16 and elapsed < 300
    criterion(8, ok, f"final-100-epoch median eps < 0.1 in {good}/20 seeds (>= 16), {elapsed:.1f} s")
    assert ok


def test_criterion_09_thermo_ledger(criterion):
    eta, E0, beta, beta_th = 1.0, 1.0, 1.0, 1.0
    _, rec = perceptron.train_not(beta=beta, eta=eta, rng=RngStream(1))
    ledger = thermo.ThermoLedger(beta_th)
    d_eps = np.array(rec.eps_after) - np.array(rec.eps_before)
    n_T = np.array([perceptron.NOT_DATA[d][1] for d in rec.datum])
    for k in range(len(rec)):
        thermo.ledger_step(ledger, eta, int(n_T[k]), E0, beta, rec.activation[k], d_eps[k])
    rows = ledger.as_array()
    err_E = np.max(np.abs(rows[:, 1] - (-2 * eta * n_T * E0 * d_eps)))
    err_F = np.max(np.abs(rows[:, 3] - (rows[:, 1] - rows[:, 2] / beta_th)))
    dF = np.abs(rows[:, 3])
    decile = len(dF) // 10
    first_median = np.median(dF[:decile])
    last_max = dF[-decile:].max()
    ok = err_E <= 1e-12 and err_F <= 1e-12 and last_max < first_median
    criterion(9, ok, f"identity errors {err_E:.1e}, {err_F:.1e} (<= 1e-12); final-decile max |dF| "
                     f"{last_max:.2e} < first-decile median {first_median:.2e}")
    assert ok


def test_criterion_10_continuous_learning(criterion):
    lr = contlearn.ContinuousLearner()
    tr = contlearn.simulate_continuous_not(lr, 0.01, 10.0, RngStream(10), n_paths=10_000)
    tv = contlearn.histogram_tv(tr["w"][-1], contlearn.DEFAULT_GRID, contlearn.stationary_weight_density(lr))
    off = contlearn.ContinuousLearner(L=0.0)
    tr = contlearn.simulate_continuous_not(off, 0.01, 10.0, RngStream(11), n_paths=10_000)
    tv_off = contlearn.histogram_tv(tr["w"][-1], contlearn.DEFAULT_GRID,
                                    contlearn.ou_prior_density(off.gamma_w, off.D))
    ok = tv < 0.05 and tv_off < 0.03
    criterion(10, ok, f"TV = {tv:.4f} learning (< 0.05), {tv_off:.4f} feedback off (< 0.03)")
    assert ok


def _periods(neuron, t_end, transient, seed, dt=1e-3):
    tr = spiking.simulate_neuron(neuron, dt, t_end, RngStream(seed))
    keep = tr.times >= transient
    return spiking.period_statistics(tr["x"][keep], tr.times[keep]).periods


def test_criterion_11_spiking(criterion):
    dt = 1e-3
    det = _periods(spiking.SpikingNeuron(gamma=1.0, kappa=1.0, chi=40.0, epsilon=0.1), 100.0, 30.0, 0)
    spread = float(np.ptp(det))
    noisy = _periods(spiking.SpikingNeuron(gamma=10.0, kappa=1.0, chi=40.0, epsilon=0.1, sigma=25.0),
                     760.0, 20.0, 11)
    p_value = spiking.wald_gof(noisy[:500])
    variances = [float(np.var(_periods(spiking.SpikingNeuron(chi=chi, sigma=1.0), 320.0, 20.0, 12 + i),
                             ddof=1)) for i, chi in enumerate((10.0, 20.0, 40.0, 80.0))]
    monotone = all(a > b for a, b in zip(variances, variances[1:]))
    ok = spread <= 2 * dt and noisy.size >= 500 and p_value > 0.01 and monotone
    criterion(11, ok, f"deterministic spread {spread:.1e} (<= {2 * dt:g}); Wald p = {p_value:.3f} on "
                      f"{min(noisy.size, 500)} cycles (> 0.01); variances "
                      + ", ".join(f"{v:.2e}" for v in variances) + " for chi 10..80 (decreasing)")
    assert ok


def test_criterion_12_feedforward(criterion):
    correct = 0
    for seed in range(20):
        low = spiking.simulate_feedforward_pair(spiking.FeedforwardConfig(J0=0.0), RngStream(seed).child(0))
        high = spiking.simulate_feedforward_pair(spiking.FeedforwardConfig(J0=3.0), RngStream(seed).child(1))
        correct += spiking.post_fired(low) and not spiking.post_fired(high)
    ok = correct == 20
    criterion(12, ok, f"low J0 fires and high J0 silent in {correct}/20 seeds")
    assert ok


def test_criterion_13_quantum_kernel(criterion):
    # exact limits on orthogonal (Hadamard rows) and parallel codes
    H = np.array([[1.0]])
    for _ in range(3):
        H = np.block([[H, H], [H, -H]])
    exact_ok = True
    for eta in (1.0, 0.8, 0.37):
        for i in range(8):
            for j in range(8):
                A = qkernel.overlap_probability(qkernel.encode(H[i]), qkernel.encode(H[j]), eta)
                exact_ok &= A == (eta if i == j else 0.0)
            A = qkernel.overlap_probability(qkernel.encode(H[i]), qkernel.encode(-H[i]), eta)
            exact_ok &= A == eta
    w = qkernel.ModeVector(np.array([1.0, 0.0]))
    nu = qkernel.ModeVector(np.array([0.5, math.sqrt(0.75)]))
    base = RngStream(13)
    shots = 10_000
    est = np.array([qkernel.sample_kernel(w, nu, 1.0, shots, base.child(r)).estimate for r in range(100)])
    se = math.sqrt(0.25 * 0.75 / shots)
    z = abs(est.mean() - 0.25) / (se / math.sqrt(est.size))
    sweep = np.array([100, 300, 1000, 3000, 10_000, 30_000])
    spread = [np.std([qkernel.sample_kernel(w, nu, 1.0, int(s), base.child(1000 * (k + 1) + r)).estimate
                      for r in range(400)], ddof=1) for k, s in enumerate(sweep)]
    slope = np.polyfit(np.log(sweep), np.log(spread), 1)[0]
    ok = exact_ok and z < 3 and abs(slope + 0.5) <= 0.05
    criterion(13, ok, f"exact limits {'exact' if exact_ok else 'WRONG'}; A=0.25 mean z = {z:.2f} over 100 "
                      f"repetitions (< 3); stderr-vs-shots slope {slope:.3f} (-0.5 +- 0.05)")
    assert ok


def _snapshot(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_14_determinism(criterion, tmp_path):
    for run in ("a", "b"):
        for name in REGISTRY:
            assert cli.run(name, seed=3, out=str(tmp_path / run)) == 0
    same = _snapshot(tmp_path / "a") == _snapshot(tmp_path / "b")
    parallel = {"switch-sigmoid": {"n_paths": "9000", "n_times": "11"},
                "weight-dist": {"n_paths": "9000"},
                "jarzynski": {"n_traj": "9000"}}
    par_same = True
    for name, sets in parallel.items():
        for w in ("1", "2"):
            assert cli.run(name, seed=3, overrides={**sets, "workers": w}, out=str(tmp_path / f"w{w}")) == 0
        a, b = tmp_path / "w1" / name, tmp_path / "w2" / name
        csvs = sorted(p.name for p in a.glob("*.csv"))
        par_same &= bool(csvs) and all((a / c).read_bytes() == (b / c).read_bytes() for c in csvs)
    ok = same and par_same
    criterion(14, ok, f"{len(REGISTRY)} experiments byte-identical on rerun: {same}; "
                      f"1 vs 2 workers identical: {par_same}")
    assert ok
