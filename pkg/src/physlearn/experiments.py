"""Named, seeded experiments that write CSV tables and return summary numbers.

Each experiment is ``fn(params, stream, out_dir) -> dict``. ``params`` holds the
resolved defaults plus overrides; the returned dict lands in the run manifest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from . import contlearn, doublewell, observer, perceptron, qkernel, spiking, switch, thermo
from .core import RngStream, jump_sample, survival_from_samples, write_csv


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    figure: str
    defaults: dict
    fn: Callable


REGISTRY: dict = {}


def experiment(name, description, figure, **defaults):
    def wrap(fn):
        REGISTRY[name] = Experiment(name, description, figure, defaults, fn)
        return fn
    return wrap


def _grid(lo, hi, n):
    return np.linspace(float(lo), float(hi), int(n))


@experiment("dw-mean", "stationary mean position vs bias for several noise levels",
            "DW-mean", D_values=[0.02, 0.05, 0.1], lam_min=-0.5, lam_max=0.5, n_lam=101)
def _dw_mean(p, stream, out):
    lams = _grid(p["lam_min"], p["lam_max"], p["n_lam"])
    cols = [doublewell.mean_vs_bias(D, lams) for D in p["D_values"]]
    write_csv(out / "mean_vs_bias.csv", ["lam"] + [f"mean_D{D:g}" for D in p["D_values"]],
              np.column_stack([lams] + cols))
    return {"saddle_node_bias": doublewell.SADDLE_NODE_BIAS}


@experiment("dw-paths", "sample double-well paths under a constant bias", "DW-stochastic",
            D=0.05, lam=0.0, dt=1e-3, t_end=50.0, n_paths=4, record_every=10)
def _dw_paths(p, stream, out):
    x0 = np.full(int(p["n_paths"]), -1 / math.sqrt(2))
    tr = doublewell.simulate(doublewell.DoubleWell(p["lam"], p["D"]), None, x0, p["dt"], p["t_end"],
                             stream, int(p["record_every"]))
    x = tr["x"]
    write_csv(out / "paths.csv", ["t"] + [f"x{i}" for i in range(x.shape[1])],
              np.column_stack([tr.times, x]))
    return {"fraction_right_final": float((x[-1] > 0).mean())}


@experiment("switch-sigmoid", "switch occupation under a sigmoidal rate swap", "sigmoid-switch",
            mu=1.0, nu=3.0, t0=5.0, slope=2.0, t_end=10.0, n_paths=10000, n_times=41, workers=1)
def _switch_sigmoid(p, stream, out):
    sched = switch.RateSchedule.sigmoid(p["mu"], p["nu"], p["t0"], p["slope"])
    times = _grid(0.0, p["t_end"], p["n_times"])
    p0 = switch.steady_state(p["mu"], p["nu"])[1]

    def rhs(t, y):
        mu, nu = sched.rates(t)
        return [mu * (1 - y[0]) - nu * y[0]]

    exact = solve_ivp(rhs, (0, times[-1]), [p0], t_eval=times, rtol=1e-10, atol=1e-12).y[0]
    mc = [p0]
    for k, t in enumerate(times[1:], start=1):
        res = switch.sample_ensemble(sched, t, int(p["n_paths"]), stream.child(k),
                                     workers=int(p["workers"]))
        mc.append(float((res["n"] > 0).mean()))
    write_csv(out / "occupation.csv", ["t", "p_plus_mc", "p_plus_exact"],
              np.column_stack([times, mc, exact]))
    return {"max_abs_dev": float(np.max(np.abs(np.array(mc) - exact)))}


@experiment("wait-time", "survival of the first jump under a linear rate ramp", "wait-time",
            mu=1.0, nu=3.0, tau=2.0, t_max=4.0, n_samples=20000, n_times=41)
def _wait_time(p, stream, out):
    sched = switch.RateSchedule.linear_ramp(p["mu"], p["nu"], p["tau"])
    rate = lambda t: float(sched.rates(t)[0])
    gen = stream.generator()
    samples = [jump_sample(rate, 0.0, p["t_max"], gen, sched.ceiling())
               for _ in range(int(p["n_samples"]))]
    times = _grid(0.0, p["t_max"], p["n_times"])
    mc = survival_from_samples(samples, times)
    exact = [switch.wait_time_survival(rate, t, (p["tau"],)) for t in times]
    write_csv(out / "survival.csv", ["t", "survival_mc", "survival_exact"],
              np.column_stack([times, mc, exact]))
    return {"max_abs_dev": float(np.max(np.abs(mc - exact)))}


@experiment("observed-trial", "conditional mean and filtered current of an observed switch",
            "observed-trial", mu=0.5, nu=0.5, Gamma=10.0, r=20.0, kappa=40.0, dt=1e-4,
            t_end=10.0, record_every=10)
def _observed_trial(p, stream, out):
    model = observer.ReadoutModel.from_Gamma(p["Gamma"], kappa=p["kappa"], r=p["r"])
    tr = observer.simulate_conditional(p["mu"], p["nu"], model, p["t_end"], p["dt"], stream,
                                       record_every=int(p["record_every"]))
    tr.to_csv(out / "trial.csv")
    return {"mean_n_c": float(tr["n_c"].mean()), "Gamma": model.Gamma}


@experiment("bernoulli", "switching probability and Bernoulli variance vs activation",
            "Bernoulli-example", beta=0.6, A_min=-10.0, A_max=10.0, n_A=201)
def _bernoulli(p, stream, out):
    A = _grid(p["A_min"], p["A_max"], p["n_A"])
    p1 = perceptron.fire_probability([1.0], 0.0, A[:, None], p["beta"])
    write_csv(out / "bernoulli.csv", ["A", "p1", "variance"], np.column_stack([A, p1, p1 * (1 - p1)]))
    return {"max_variance": float((p1 * (1 - p1)).max())}


@experiment("train-not", "single-unit NOT training by sampled feedback", "NOT-sim",
            beta=1.0, eta=1.0, n_samples=200, epochs=500, w0=0.01, b0=1.0, window=50)
def _train_not(p, stream, out):
    net, rec = perceptron.train_not(p["beta"], p["eta"], int(p["n_samples"]), int(p["epochs"]),
                                    p["w0"], p["b0"], stream)
    rec.to_csv(out / "training.csv")
    w, b = net.layers[0]
    return {"w": float(w[0, 0]), "b": float(b[0]),
            "final_moving_eps": float(rec.moving_average(int(p["window"]))[-1])}


@experiment("train-xor", "2-2-1 network trained on XOR", "XOR-sim",
            beta=1.0, eta=1.0, n_samples=200, epochs=3000)
def _train_xor(p, stream, out):
    start = perceptron.xor_net(beta=p["beta"], eta=p["eta"])
    net, rec = perceptron.train_xor(start, int(p["n_samples"]), int(p["epochs"]), stream)
    rec.to_csv(out / "training.csv")
    tail = rec.eps_est[-min(100, len(rec)):]
    return {"median_eps_tail": float(np.median(tail)), "classifies": perceptron.classifies_xor(net)}


@experiment("weight-dist", "weight distribution before and after continuous learning",
            "ss-dis-weight", L=1.0, gamma_w=1.0, D=0.05, beta=2.0, dt=0.01, t_end=10.0,
            n_paths=10000, mode="closed_form", bins=40, workers=1)
def _weight_dist(p, stream, out):
    lr = contlearn.ContinuousLearner(p["L"], p["gamma_w"], p["D"], p["beta"])
    tr = contlearn.simulate_continuous_not(lr, p["dt"], p["t_end"], stream, int(p["n_paths"]),
                                           p["mode"], workers=int(p["workers"]))
    w0, w1 = tr["w"][0], tr["w"][-1]
    edges = _grid(-2.0, 2.0, int(p["bins"]) + 1)
    h0, _ = np.histogram(w0, edges, density=True)
    h1, _ = np.histogram(w1, edges, density=True)
    mids = (edges[1:] + edges[:-1]) / 2
    prior = contlearn.ou_prior_density(lr.gamma_w, lr.D, mids)
    post = np.interp(mids, contlearn.DEFAULT_GRID, contlearn.stationary_weight_density(lr))
    write_csv(out / "histograms.csv", ["w", "initial", "final", "prior_density", "stationary_density"],
              np.column_stack([mids, h0, h1, prior, post]))
    tv = contlearn.histogram_tv(w1, contlearn.DEFAULT_GRID, contlearn.stationary_weight_density(lr))
    return {"initial_variance": float(w0.var()), "final_variance": float(w1.var()),
            "fixed_point": contlearn.fixed_point_weight(lr), "tv_final": tv}


def _neuron_run(p, stream, out, name):
    nrn = spiking.SpikingNeuron(p["gamma"], p["kappa"], p["chi"], p["epsilon"], p["sigma"])
    tr = spiking.simulate_neuron(nrn, p["dt"], p["t_end"], stream, mode=p["mode"])
    k = int(p["record_every"])
    write_csv(out / f"{name}.csv", ["t", "v", "x", "y"],
              np.column_stack([tr.times, tr["v"], tr["x"], tr["y"]])[::k])
    skip = int(p["transient"] / p["dt"])
    st = spiking.period_statistics(tr["x"][skip:], tr.times[skip:])
    write_csv(out / "periods.csv", ["period"], st.periods[:, None])
    return tr, st


@experiment("quartz", "deterministic limit-cycle neuron", "quartz",
            gamma=1.0, kappa=1.0, chi=40.0, epsilon=0.1, sigma=0.0, dt=1e-3, t_end=100.0,
            transient=30.0, record_every=10, mode="mean_field")
def _quartz(p, stream, out):
    tr, st = _neuron_run(p, stream, out, "neuron")
    return {"mean_period": st.mean, "period_spread": float(np.ptp(st.periods)),
            "amplitude": spiking.amplitude(tr["x"][int(p["transient"] / p["dt"]):])}


@experiment("quartz-noisy", "limit-cycle neuron with thermal noise; period statistics",
            "obs-quartz", gamma=10.0, kappa=1.0, chi=40.0, epsilon=0.1, sigma=25.0, dt=1e-3,
            t_end=400.0, transient=20.0, record_every=10, mode="mean_field")
def _quartz_noisy(p, stream, out):
    _, st = _neuron_run(p, stream, out, "neuron")
    return {"mean_period": st.mean, "period_variance": st.variance, "wald_shape": st.wald_shape,
            "wald_gof_p": spiking.wald_gof(st.periods), "n_periods": int(st.periods.size)}


@experiment("wald", "inverse-Gaussian period densities for three noise levels", "wald-dist",
            r_star=1.0, sigma_values=[0.5, 2.0, 8.0], T_max=20.0, n_T=400)
def _wald(p, stream, out):
    T = _grid(p["T_max"] / p["n_T"], p["T_max"], p["n_T"])
    cols = [spiking.wald_pdf(T, p["r_star"], s) for s in p["sigma_values"]]
    write_csv(out / "wald.csv", ["T"] + [f"pdf_sigma{s:g}" for s in p["sigma_values"]],
              np.column_stack([T] + cols))
    return {"variances": [2 * math.pi * s / p["r_star"] for s in p["sigma_values"]]}


@experiment("feed-forward", "LIF-coupled post-synaptic neuron at two thresholds", "feed-forward",
            chi=20.0, kappa=1.0, gamma=1.0, epsilon=0.1, k=0.01, beta_s=1.0, lam=10.0, period=5.0,
            tau=20.0, alpha=1.0, w=1.0, J0_low=0.0, J0_high=3.0, sigma=0.0, dt=1e-3,
            t_end=60.0, record_every=10)
def _feed_forward(p, stream, out):
    fired = {}
    keys = ("chi", "kappa", "gamma", "epsilon", "k", "beta_s", "lam", "period", "tau", "alpha",
            "w", "sigma", "dt", "t_end")
    for i, tag in enumerate(("low", "high")):
        cfg = spiking.FeedforwardConfig(J0=p[f"J0_{tag}"], **{k: p[k] for k in keys})
        tr = spiking.simulate_feedforward_pair(cfg, stream.child(i))
        k = int(p["record_every"])
        write_csv(out / f"pair_{tag}.csv", ["t", "v_pre", "J", "chi_post", "v_post"],
                  np.column_stack([tr.times, tr["v_pre"], tr["J"], tr["chi_post"], tr["v_post"]])[::k])
        fired[f"fired_{tag}"] = spiking.post_fired(tr)
    return fired


@experiment("rate-code", "binary signal carried by the spike rate", "spike-rate-code",
            chi=40.0, theta=0.5, bit_period=20.0, gamma=1.0, kappa=1.0, epsilon=0.1, sigma=0.0,
            dt=1e-3, t_end=200.0, record_every=10)
def _rate_code(p, stream, out):
    M = spiking.square_wave(p["bit_period"])
    sched = spiking.rate_encode(M, p["chi"] / 2, p["theta"])
    nrn = spiking.SpikingNeuron(p["gamma"], p["kappa"], p["chi"] / 2, p["epsilon"], p["sigma"])
    tr = spiking.simulate_neuron(nrn, p["dt"], p["t_end"], stream, chi_schedule=sched)
    k = int(p["record_every"])
    write_csv(out / "neuron.csv", ["t", "chi", "v", "x"],
              np.column_stack([tr.times, sched(tr.times), tr["v"], tr["x"]])[::k])
    spikes = spiking.spike_times(tr["x"], tr.times)
    write_csv(out / "spikes.csv", ["t"], spikes[:, None])
    edges = np.arange(0.0, p["t_end"] + 1e-9, p["bit_period"] / 2)
    bits = spiking.decode_rate(spikes, edges)
    sent = M(edges[:-1] + p["bit_period"] / 4)
    return {"bit_error": float(np.mean(bits != sent)), "n_spikes": int(spikes.size)}


@experiment("jarzynski", "work fluctuation identity on a ramped double well", "jarzynski",
            lam0=0.0, lam1=0.5, tau=1.0, beta_th=20.0, n_traj=20000, dt=1e-3, workers=1)
def _jarzynski(p, stream, out):
    proto = thermo.linear_protocol(p["lam0"], p["lam1"], p["tau"])
    w = thermo.work_samples(proto, p["beta_th"], p["tau"], int(p["n_traj"]), p["dt"], stream,
                            int(p["workers"]))
    write_csv(out / "work.csv", ["work"], w[:, None])
    res = thermo.jarzynski_from_work(w, proto, p["beta_th"], p["tau"])
    return {"lhs": res.lhs, "rhs": res.rhs, "stderr": res.stderr, "delta_F": res.delta_F,
            "mean_work": res.mean_work}


@experiment("thermo-ledger", "per-trial energy, entropy and free energy of NOT training",
            "thermo-ledger", beta=1.0, eta=1.0, n_samples=200, epochs=500, w0=0.01, b0=1.0,
            E0=1.0, beta_th=1.0)
def _thermo_ledger(p, stream, out):
    _, rec = perceptron.train_not(p["beta"], p["eta"], int(p["n_samples"]), int(p["epochs"]),
                                  p["w0"], p["b0"], stream)
    ledger = thermo.ThermoLedger(p["beta_th"])
    for k in range(len(rec)):
        n_T = perceptron.NOT_DATA[rec.datum[k]][1]
        thermo.ledger_step(ledger, p["eta"], n_T, p["E0"], p["beta"], rec.activation[k],
                           rec.eps_after[k] - rec.eps_before[k])
    ledger.to_csv(out / "ledger.csv")
    cum = ledger.cumulative()[-1]
    return {"cumulative_d_energy": float(cum[1]), "cumulative_d_free": float(cum[3])}


@experiment("qkernel", "shot-sampled single-photon kernel matrix", "qkernel",
            n_data=6, dim=8, eta=0.8, shots=2000)
def _qkernel(p, stream, out):
    gen = stream.child(0).generator()
    data = np.where(gen.random((int(p["n_data"]), int(p["dim"]))) < 0.5, -1.0, 1.0)
    exact = qkernel.exact_kernel_matrix(data, p["eta"])
    sampled = qkernel.kernel_matrix(data, p["eta"], int(p["shots"]), stream.child(1))
    n = data.shape[0]
    rows = [[i, j, exact[i, j], sampled[i, j]] for i in range(n) for j in range(n)]
    write_csv(out / "kernel.csv", ["i", "j", "exact", "sampled"], rows)
    write_csv(out / "data.csv", [f"xi{k}" for k in range(data.shape[1])], data.astype(int))
    return {"max_abs_dev": float(np.max(np.abs(exact - sampled)))}


def resolve_params(name, overrides):
    """Defaults updated with ``overrides``; values are coerced to the default's type."""
    exp = REGISTRY[name]
    params = dict(exp.defaults)
    for key, raw in overrides.items():
        if key not in params:
            raise KeyError(key)
        params[key] = coerce(params[key], raw, key)
    return params


def coerce(default, raw, key):
    try:
        if isinstance(default, list):
            if isinstance(raw, str):
                raw = [s for s in raw.split(",") if s.strip()]
            return [float(v) for v in raw]
        if isinstance(default, bool):
            if isinstance(raw, str):
                if raw.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(raw)
                return raw.lower() in ("true", "1")
            return bool(raw)
        if isinstance(default, int):
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if isinstance(default, float):
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError(raw)
            return value
        return str(raw)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid value {raw!r} for parameter {key!r}") from exc


def run_experiment(name, seed, overrides, out_dir: Path):
    params = resolve_params(name, overrides)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = REGISTRY[name].fn(params, RngStream(int(seed)), out_dir)
    return params, results
