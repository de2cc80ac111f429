"""Run configuration: defaults, JSON config files and validation."""
import json
from dataclasses import asdict, dataclass, fields

from .errors import ConfigurationError

SCHEDULES = ("per_epoch", "step10")


@dataclass
class RunConfig:
    preset: str = "tiny"
    neighborhood: int = 8
    hidden_dim: int = 0  # 0: preset default
    num_classes: int = 3  # replaced by the palette size when a dataset is given
    eta: str = "auto"  # "auto" (85/15 rule) or a fraction
    mass: float = 0.85
    k: float = 2.0
    epochs: int = 35
    seed: int = 0
    lr: float = 1e-3
    lr_decay: float = 0.9
    decay_start: int = 10
    schedule: str = "per_epoch"
    momentum: float = 0.9
    clip: float = 0.0  # max gradient norm, 0 disables
    recurrent: bool = True
    freeze: str = ""  # comma-separated stages: conv, rnn, deconv
    data: str = ""
    checkpoint: str = "model.ckpt"
    log: str = "train.log"
    out: str = "predictions"

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.neighborhood not in (4, 8):
            raise ConfigurationError(f"neighborhood must be 4 or 8, got {self.neighborhood}")
        if self.schedule not in SCHEDULES:
            raise ConfigurationError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.eta != "auto":
            try:
                if float(self.eta) <= 0:
                    raise ValueError
            except ValueError:
                raise ConfigurationError(f"eta must be 'auto' or a positive fraction, got {self.eta!r}") from None
        for stage in self.frozen_stages:
            if stage not in ("conv", "rnn", "deconv"):
                raise ConfigurationError(f"unknown stage {stage!r} in freeze")

    @property
    def frozen_stages(self):
        return tuple(s.strip() for s in self.freeze.split(",") if s.strip())

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, values):
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigurationError(f"unknown config key(s): {', '.join(unknown)}")
        coerced = {}
        for key, value in values.items():
            kind = type(known[key].default)
            if kind is bool and isinstance(value, str):
                value = value.lower() in ("1", "true", "yes", "on")
            coerced[key] = kind(value)
        return cls(**coerced)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            values = json.load(fh)
        if not isinstance(values, dict):
            raise ConfigurationError(f"{path}: config must be a flat JSON object")
        return cls.from_dict(values)
