"""Config-driven experiment runner: train, evaluate, write artifacts.

An experiment is one (modulation, channel, objective) triple plus training
and evaluation settings, described either by an INI file or by a built-in
preset. Running one produces, in its output directory: a config echo,
history.csv, model.bin, report.json and the density CSV tables. All
numeric output is a pure function of the master seed.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import evaluate, netcore, vgan
from .channels import (
    AdditiveChi2Channel,
    AwgnChannel,
    ComplexAwgnChannel,
    NonlinearQamChannel,
    NonlinearQamParams,
)
from .errors import ConfigError
from .evaluate import EvalConfig, EvalReport, density_to_csv
from .modulation import bpsk_source, qam16_source, qpsk_source
from .vgan import GeneratorSampler, TrainConfig

MODULATIONS = {"bpsk": bpsk_source, "qpsk": qpsk_source, "qam16": qam16_source}
CHANNELS = ("awgn", "chi2", "complex_awgn", "nonlinear_qam")
OBJECTIVES = ("mse", "gan", "wgan")

_CHANNEL_PARAM_KEYS = {
    "awgn": {"noise_std"},
    "chi2": {"dof"},
    "complex_awgn": {"noise_std"},
    "nonlinear_qam": {"noise_std", "phase_offset", "phase_noise_std",
                      "amam_alpha", "amam_beta", "ampm_alpha", "ampm_beta"},
}


@dataclass
class ExperimentConfig:
    name: str
    modulation: str
    channel: str
    objective: str
    seed: int = 0
    channel_params: dict = field(default_factory=dict)
    learning_rate: float = 2e-4
    batch_size: int = 256
    iterations: int = 10_000
    n_critic: int = 1
    wgan_clip: float = 0.01
    non_saturating: bool = True
    latent_dim: int = 16
    divergence_every: int = 0
    eval_samples: int = 100_000
    bins: int = 100
    range_low: float | None = None
    range_high: float | None = None
    output_dir: str | None = None

    def validate(self) -> None:
        if self.modulation not in MODULATIONS:
            raise ConfigError(f"experiment.modulation: unknown value {self.modulation!r}")
        if self.channel not in CHANNELS:
            raise ConfigError(f"experiment.channel: unknown value {self.channel!r}")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"experiment.objective: unknown value {self.objective!r}")
        dim = 1 if self.modulation == "bpsk" else 2
        chan_dim = 1 if self.channel in ("awgn", "chi2") else 2
        if dim != chan_dim:
            raise ConfigError(
                f"experiment.channel: {self.channel} is {chan_dim}-D but "
                f"{self.modulation} symbols are {dim}-D")
        allowed = _CHANNEL_PARAM_KEYS[self.channel]
        for key in self.channel_params:
            if key not in allowed:
                raise ConfigError(f"channel.{key}: not a parameter of {self.channel}")
        if self.eval_samples < 1:
            raise ConfigError("eval.samples: must be >= 1")
        if self.bins < 1:
            raise ConfigError("eval.bins: must be >= 1")
        if (self.range_low is None) != (self.range_high is None):
            raise ConfigError("eval.range_low/range_high: set both or neither")
        if self.range_low is not None and not self.range_low < self.range_high:
            raise ConfigError("eval.range_low must be below eval.range_high")
        self.train_config().validate()

    def build_source(self):
        return MODULATIONS[self.modulation]()

    def build_channel(self):
        p = self.channel_params
        if self.channel == "awgn":
            return AwgnChannel(noise_std=float(p.get("noise_std", 1.0)))
        if self.channel == "chi2":
            return AdditiveChi2Channel(dof=int(p.get("dof", 2)))
        if self.channel == "complex_awgn":
            return ComplexAwgnChannel(noise_std_per_dim=float(p.get("noise_std", 0.1)))
        defaults = NonlinearQamParams()
        kwargs = {f.name: float(p.get(f.name, getattr(defaults, f.name)))
                  for f in fields(NonlinearQamParams)}
        return NonlinearQamChannel(NonlinearQamParams(**kwargs))

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(
            objective=self.objective,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            iterations=self.iterations,
            seed=self.seed if seed is None else seed,
            wgan_clip=self.wgan_clip,
            non_saturating=self.non_saturating,
            n_critic=self.n_critic,
            latent_dim=self.latent_dim,
            divergence_every=self.divergence_every,
        )

    def eval_config(self, seed: int | None = None) -> EvalConfig:
        cfg = EvalConfig(n_samples=self.eval_samples, bins=self.bins,
                         seed=self.seed if seed is None else seed)
        if self.range_low is not None:
            cfg.range_1d = (self.range_low, self.range_high)
            cfg.range_2d = ((self.range_low, self.range_high),) * 2
        return cfg


def config_to_ini(config: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    cp["experiment"] = {
        "name": config.name,
        "modulation": config.modulation,
        "channel": config.channel,
        "objective": config.objective,
        "seed": str(config.seed),
    }
    cp["channel"] = {k: repr(v) for k, v in sorted(config.channel_params.items())}
    cp["train"] = {
        "learning_rate": repr(config.learning_rate),
        "batch_size": str(config.batch_size),
        "iterations": str(config.iterations),
        "n_critic": str(config.n_critic),
        "wgan_clip": repr(config.wgan_clip),
        "non_saturating": str(config.non_saturating).lower(),
        "latent_dim": str(config.latent_dim),
        "divergence_every": str(config.divergence_every),
    }
    ev = {
        "samples": str(config.eval_samples),
        "bins": str(config.bins),
    }
    if config.range_low is not None:
        ev["range_low"] = repr(config.range_low)
        ev["range_high"] = repr(config.range_high)
    cp["eval"] = ev
    lines = []
    for section in ("experiment", "channel", "train", "eval"):
        lines.append(f"[{section}]")
        for key, value in cp[section].items():
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


def _get_typed(section, key, cast, default, errors_as: str):
    if key not in section:
        return default
    raw = section[key]
    try:
        if cast is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"{errors_as}.{key}: cannot parse {raw!r}") from exc


def parse_config(path) -> ExperimentConfig:
    """Read an experiment INI file; unknown sections or keys are errors."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    known = {"experiment", "channel", "train", "eval"}
    for section in cp.sections():
        if section not in known:
            raise ConfigError(f"[{section}]: unknown config section")
    if "experiment" not in cp:
        raise ConfigError("[experiment]: section is required")

    exp = cp["experiment"]
    for key in exp:
        if key not in ("name", "modulation", "channel", "objective", "seed"):
            raise ConfigError(f"experiment.{key}: unknown key")
    for required in ("name", "modulation", "channel", "objective"):
        if required not in exp:
            raise ConfigError(f"experiment.{required}: missing required key")

    config = ExperimentConfig(
        name=exp["name"],
        modulation=exp["modulation"],
        channel=exp["channel"],
        objective=exp["objective"],
        seed=_get_typed(exp, "seed", int, 0, "experiment"),
    )

    if "channel" in cp:
        for key in cp["channel"]:
            config.channel_params[key] = _get_typed(cp["channel"], key, float,
                                                    None, "channel")
    if "train" in cp:
        tr = cp["train"]
        for key in tr:
            if key not in ("learning_rate", "batch_size", "iterations", "n_critic",
                           "wgan_clip", "non_saturating", "latent_dim",
                           "divergence_every"):
                raise ConfigError(f"train.{key}: unknown key")
        config.learning_rate = _get_typed(tr, "learning_rate", float,
                                          config.learning_rate, "train")
        config.batch_size = _get_typed(tr, "batch_size", int, config.batch_size, "train")
        config.iterations = _get_typed(tr, "iterations", int, config.iterations, "train")
        config.n_critic = _get_typed(tr, "n_critic", int, config.n_critic, "train")
        config.wgan_clip = _get_typed(tr, "wgan_clip", float, config.wgan_clip, "train")
        config.non_saturating = _get_typed(tr, "non_saturating", bool,
                                           config.non_saturating, "train")
        config.latent_dim = _get_typed(tr, "latent_dim", int, config.latent_dim, "train")
        config.divergence_every = _get_typed(tr, "divergence_every", int,
                                             config.divergence_every, "train")
    if "eval" in cp:
        ev = cp["eval"]
        for key in ev:
            if key not in ("samples", "bins", "range_low", "range_high"):
                raise ConfigError(f"eval.{key}: unknown key")
        config.eval_samples = _get_typed(ev, "samples", int, config.eval_samples, "eval")
        config.bins = _get_typed(ev, "bins", int, config.bins, "eval")
        config.range_low = _get_typed(ev, "range_low", float, None, "eval")
        config.range_high = _get_typed(ev, "range_high", float, None, "eval")

    config.validate()
    return config


def derive_seeds(master: int) -> tuple[int, int]:
    """Split the master seed into independent (train, eval) sub-seeds, so
    changing evaluation settings never perturbs training draws."""
    state = np.random.SeedSequence(master).generate_state(2)
    return int(state[0]), int(state[1])


def run_experiment(config: ExperimentConfig, out_dir=None) -> tuple[EvalReport, Path]:
    """Train per config, evaluate against the ground truth, write artifacts."""
    config.validate()
    out = Path(out_dir if out_dir is not None else (config.output_dir or f"runs/{config.name}"))
    out.mkdir(parents=True, exist_ok=True)

    (out / "config_echo").write_text(config_to_ini(config))

    train_seed, eval_seed = derive_seeds(config.seed)
    source = config.build_source()
    channel = config.build_channel()

    gen, history = vgan.train(channel, source, config.train_config(seed=train_seed))
    history.to_csv(out / "history.csv")
    netcore.save_stack(gen, out / "model.bin", seed=config.seed)

    report = evaluate.compare_model(GeneratorSampler(gen), channel, source,
                                    config.eval_config(seed=eval_seed))
    report.summary["experiment"] = config.name
    report.summary["objective"] = config.objective
    report.summary["master_seed"] = config.seed
    report.write_json(out / "report.json")
    for key, est in report.true_densities.items():
        density_to_csv(est, out / f"density_true_{key}.csv")
    for key, est in report.model_densities.items():
        density_to_csv(est, out / f"density_model_{key}.csv")
    return report, out


def _preset_configs() -> dict[str, ExperimentConfig]:
    presets = {
        "bpsk-awgn-mse": ExperimentConfig(
            name="bpsk-awgn-mse", modulation="bpsk", channel="awgn",
            objective="mse", seed=7,
            channel_params={"noise_std": 1.0},
            learning_rate=2e-4, iterations=10_000,
        ),
        "bpsk-awgn-gan": ExperimentConfig(
            name="bpsk-awgn-gan", modulation="bpsk", channel="awgn",
            objective="gan", seed=7,
            channel_params={"noise_std": 1.0},
            learning_rate=1e-4, iterations=20_000, n_critic=3,
        ),
        "bpsk-chi2-gan": ExperimentConfig(
            name="bpsk-chi2-gan", modulation="bpsk", channel="chi2",
            objective="gan", seed=7,
            channel_params={"dof": 2},
            learning_rate=1e-4, iterations=20_000, n_critic=3,
            range_low=-8.0, range_high=12.0,
        ),
        "qpsk-awgn-gan": ExperimentConfig(
            name="qpsk-awgn-gan", modulation="qpsk", channel="complex_awgn",
            objective="gan", seed=7,
            channel_params={"noise_std": 0.1},
            learning_rate=1e-4, iterations=20_000, n_critic=3,
        ),
        "qam16-nonlinear-gan": ExperimentConfig(
            name="qam16-nonlinear-gan", modulation="qam16",
            channel="nonlinear_qam", objective="gan", seed=7,
            learning_rate=1e-4, iterations=30_000, n_critic=3,
        ),
        "qam16-nonlinear-wgan": ExperimentConfig(
            name="qam16-nonlinear-wgan", modulation="qam16",
            channel="nonlinear_qam", objective="wgan", seed=7,
            learning_rate=1e-4, iterations=30_000, n_critic=5,
        ),
    }
    return presets


def list_presets() -> list[str]:
    return list(_preset_configs().keys())


def get_preset(name: str) -> ExperimentConfig:
    presets = _preset_configs()
    if name not in presets:
        known = ", ".join(presets)
        raise ConfigError(f"unknown preset {name!r} (known: {known})")
    return presets[name]


def load_report(path) -> dict:
    """Read a report.json, accepting either the file or its run directory."""
    import json

    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    if not p.exists():
        raise ConfigError(f"report not found: {p}")
    with open(p) as f:
        return json.load(f)


def compare_runs(report_a: dict, report_b: dict) -> dict:
    """Side-by-side divergences and moment errors for two runs on the same
    channel/modulation pair."""
    for key in ("modulation", "channel"):
        if report_a.get(key) != report_b.get(key):
            raise ConfigError(
                f"reports disagree on {key}: "
                f"{report_a.get(key)!r} vs {report_b.get(key)!r}")
    if len(report_a["conditions"]) != len(report_b["conditions"]):
        raise ConfigError("reports have different condition counts")

    def mean_abs_error(entry):
        t = np.array(entry["true"]["mean"])
        m = np.array(entry["model"]["mean"])
        return float(np.abs(m - t).max())

    rows = []
    for ca, cb in zip(report_a["conditions"], report_b["conditions"]):
        rows.append({
            "x": ca["x"],
            "js": [ca["js"], cb["js"]],
            "delta_js": cb["js"] - ca["js"],
            "mean_abs_error": [mean_abs_error(ca), mean_abs_error(cb)],
            "delta_mean_abs_error": mean_abs_error(cb) - mean_abs_error(ca),
        })
    return {
        "a": report_a.get("experiment", "a"),
        "b": report_b.get("experiment", "b"),
        "modulation": report_a["modulation"],
        "channel": report_a["channel"],
        "marginal_js": [report_a["marginal"]["js"], report_b["marginal"]["js"]],
        "delta_marginal_js": report_b["marginal"]["js"] - report_a["marginal"]["js"],
        "conditions": rows,
    }


def format_comparison(cmp: dict) -> str:
    lines = [
        f"A = {cmp['a']}   B = {cmp['b']}   ({cmp['modulation']} / {cmp['channel']})",
        f"{'':>12} {'JS(A)':>10} {'JS(B)':>10} {'dJS':>10} "
        f"{'|mean err|A':>12} {'|mean err|B':>12}",
        f"{'marginal':>12} {cmp['marginal_js'][0]:>10.5f} {cmp['marginal_js'][1]:>10.5f} "
        f"{cmp['delta_marginal_js']:>10.5f} {'':>12} {'':>12}",
    ]
    for row in cmp["conditions"]:
        label = ",".join(f"{v:+.2f}" for v in row["x"])
        lines.append(
            f"{label:>12} {row['js'][0]:>10.5f} {row['js'][1]:>10.5f} "
            f"{row['delta_js']:>10.5f} {row['mean_abs_error'][0]:>12.5f} "
            f"{row['mean_abs_error'][1]:>12.5f}")
    return "\n".join(lines)
