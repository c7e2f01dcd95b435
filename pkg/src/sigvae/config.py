"""Run configuration with a sectioned ``key = value`` text form."""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass

from .encoders import NoiseSpec
from .objectives import LossConfig


_ENCODER_ALIASES = {"naive-sivi": "naive", "naive_sivi": "naive", "nf-vgae": "nf", "nf_vgae": "nf",
                    "sig-vae": "sigvae"}


@dataclass
class ModelConfig:
    # data
    dataset: str = "cora"
    self_loops: bool = True
    # model
    encoder: str = "sigvae"
    decoder: str = "inner_product"
    latent_dim: int = 16
    hidden_dims: tuple = (32,)
    mlp_dims: tuple = (32,)
    noise_family: str = "bernoulli"
    noise_dim: int = 64
    noise_p: float = 0.5
    noise_per_layer: bool = True
    n_flows: int = 4
    # loss
    J: int = 1
    K: int = 0
    K_schedule: tuple | None = (1, 50, 1.0 / 3.0)
    mixture: str = "node"
    kl_weight: float = 1.0
    pair_mode: str = "auto"
    # train
    epochs: int = 3500
    lr: float = 0.0005
    patience: int = 200
    seed: int = 0
    eval_every: int = 1
    two_stage: bool = False
    stage1_latent_dim: int = 128
    stage1_noise_dim: int = 5
    # eval
    eval_samples: int = 15
    shrink_threshold: float = 0.01

    SECTIONS = {
        "data": ("dataset", "self_loops"),
        "model": ("encoder", "decoder", "latent_dim", "hidden_dims", "mlp_dims", "noise_family",
                  "noise_dim", "noise_p", "noise_per_layer", "n_flows"),
        "loss": ("J", "K", "K_schedule", "mixture", "kl_weight", "pair_mode"),
        "train": ("epochs", "lr", "patience", "seed", "eval_every", "two_stage",
                  "stage1_latent_dim", "stage1_noise_dim"),
        "eval": ("eval_samples", "shrink_threshold"),
    }

    def __post_init__(self):
        self.encoder = _ENCODER_ALIASES.get(self.encoder, self.encoder)
        self.decoder = self.decoder.replace("-", "_")
        self.hidden_dims = tuple(int(v) for v in self.hidden_dims)
        self.mlp_dims = tuple(int(v) for v in self.mlp_dims)
        if self.K_schedule is not None:
            a, b, c = self.K_schedule
            self.K_schedule = (int(a), int(b), float(c))
        if self.encoder not in ("vgae", "sigvae", "naive", "nf"):
            raise ValueError(f"unknown encoder {self.encoder!r}")
        if self.decoder not in ("inner_product", "bernoulli_poisson"):
            raise ValueError(f"unknown decoder {self.decoder!r}")

    def noise(self, dim=None):
        return NoiseSpec(self.noise_family, self.noise_dim if dim is None else dim,
                         self.noise_p, self.noise_per_layer)

    def loss(self):
        return LossConfig(J=self.J, K=self.K, K_schedule=self.K_schedule, kl_weight=self.kl_weight,
                          mixture=self.mixture, pair_mode=self.pair_mode)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    # text form ---------------------------------------------------------------

    def to_text(self):
        lines = []
        for section, keys in self.SECTIONS.items():
            lines.append(f"[{section}]")
            for key in keys:
                lines.append(f"{key} = {_format(getattr(self, key))}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text, **overrides):
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        parser.read_file(io.StringIO(text))
        kinds = {f.name: f.default for f in dataclasses.fields(cls)}
        values = {}
        for section in parser.sections():
            if section not in cls.SECTIONS:
                raise ValueError(f"unknown config section [{section}]")
            for key, raw in parser.items(section):
                if key not in cls.SECTIONS[section]:
                    raise ValueError(f"unknown config key {key!r} in [{section}]")
                values[key] = _parse(raw, kinds[key], key)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def load(cls, path, **overrides):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), **overrides)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(v) if isinstance(v, float) else str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw, default, key):
    raw = raw.strip()
    if key == "K_schedule":
        if raw.lower() in ("none", ""):
            return None
        parts = raw.split(",")
        if len(parts) != 3:
            raise ValueError("K_schedule needs 'start,stop,fraction'")
        return (int(parts[0]), int(parts[1]), float(parts[2]))
    if isinstance(default, bool):
        if raw.lower() not in ("true", "false"):
            raise ValueError(f"{key}: expected true/false, got {raw!r}")
        return raw.lower() == "true"
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(int(v) for v in raw.split(",") if v.strip())
    return raw
