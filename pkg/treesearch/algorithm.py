"""
Algorithm selection and hyperparameters.

AlgorithmConfig is a plain dataclass so experiment files can map onto it
field by field (see pipeline.load_experiment).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from enum import Enum

from treesearch import config

log = logging.getLogger(__name__)


class Algorithm(str, Enum):
    UCT = "uct"
    MENTS = "ments"
    BTS = "bts"
    DENTS = "dents"
    AR_BTS = "ar_bts"
    AR_DENTS = "ar_dents"
    AR_MENTS = "ar_ments"

    @property
    def is_boltzmann(self) -> bool:
        return self is not Algorithm.UCT

    @property
    def average_returns(self) -> bool:
        return self in (Algorithm.AR_BTS, Algorithm.AR_DENTS, Algorithm.AR_MENTS)

    @property
    def uses_bellman(self) -> bool:
        return self in (Algorithm.BTS, Algorithm.DENTS)

    @property
    def uses_soft(self) -> bool:
        return self is Algorithm.MENTS

    @property
    def uses_entropy(self) -> bool:
        return self in (Algorithm.DENTS, Algorithm.AR_DENTS, Algorithm.AR_MENTS)


class ScheduleKind(str, Enum):
    CONSTANT = "constant"
    INVERSE_LOG = "inverse_log"
    INVERSE_SQRT = "inverse_sqrt"


@dataclass(frozen=True)
class Schedule:
    """A positive function of a node's visit count m."""
    kind: ScheduleKind = ScheduleKind.CONSTANT
    init: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ScheduleKind(self.kind))
        if self.init < 0 or not math.isfinite(self.init):
            raise ValueError(f"schedule init must be finite and >= 0, got {self.init!r}")

    def __call__(self, m: int) -> float:
        if self.kind is ScheduleKind.CONSTANT:
            return self.init
        if self.kind is ScheduleKind.INVERSE_LOG:
            return self.init / math.log(math.e + m)
        return self.init / math.sqrt(max(m, 1))

    @property
    def decays(self) -> bool:
        return self.kind is not ScheduleKind.CONSTANT


class Recommendation(str, Enum):
    VALUE = "value"
    MOST_VISITED = "most_visited"


class BackupMode(str, Enum):
    NAIVE = "naive"
    FAST = "fast"


class Initializer(str, Enum):
    CONSTANT = "constant"
    ROLLOUT = "rollout"


@dataclass
class AlgorithmConfig:
    algorithm: Algorithm = Algorithm.BTS
    label: str = ""
    epsilon: float = config.DEFAULT_EPSILON
    alpha: float = config.DEFAULT_ALPHA
    # None picks the algorithm default: inverse-sqrt for the AR variants, constant otherwise
    alpha_schedule: ScheduleKind | None = None
    # None means beta_init = alpha; ignored unless the algorithm tracks entropy
    beta_init: float | None = None
    beta_schedule: ScheduleKind = ScheduleKind.INVERSE_LOG
    uct_bias: float | str = math.sqrt(2.0)
    recommendation: Recommendation = Recommendation.VALUE
    backup: BackupMode = BackupMode.FAST
    use_alias: bool = True
    alias_rebuild_every: int | None = config.ALIAS_REBUILD_EVERY
    initializer: Initializer = Initializer.CONSTANT
    v_init: float = 0.0
    q_init: float = 0.0
    _alpha: Schedule = field(init=False, repr=False, compare=False)
    _beta: Schedule = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.algorithm = Algorithm(self.algorithm)
        self.recommendation = Recommendation(self.recommendation)
        self.backup = BackupMode(self.backup)
        self.initializer = Initializer(self.initializer)
        self.beta_schedule = ScheduleKind(self.beta_schedule)
        if not self.label:
            self.label = self.algorithm.value
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha!r}")
        if isinstance(self.uct_bias, str):
            if self.uct_bias != "auto":
                raise ValueError(f"uct_bias must be a number or 'auto', got {self.uct_bias!r}")
        elif self.uct_bias < 0:
            raise ValueError(f"uct_bias must be >= 0, got {self.uct_bias!r}")
        if self.alias_rebuild_every is not None and self.alias_rebuild_every < 1:
            raise ValueError(f"alias_rebuild_every must be >= 1, got {self.alias_rebuild_every!r}")

        if self.alpha_schedule is None:
            self.alpha_schedule = (ScheduleKind.INVERSE_SQRT
                                   if self.algorithm in (Algorithm.AR_BTS, Algorithm.AR_DENTS)
                                   else ScheduleKind.CONSTANT)
        self.alpha_schedule = ScheduleKind(self.alpha_schedule)

        if self.algorithm is Algorithm.AR_MENTS:
            # fixed temperature, entropy weighted by the same constant
            self.alpha_schedule = ScheduleKind.CONSTANT
            self.beta_schedule = ScheduleKind.CONSTANT
            self.beta_init = self.alpha
        if self.algorithm is Algorithm.MENTS and self.alpha_schedule is not ScheduleKind.CONSTANT:
            raise ValueError("MENTS soft backups need a constant alpha")

        beta_init = self.alpha if self.beta_init is None else self.beta_init
        self._alpha = Schedule(self.alpha_schedule, self.alpha)
        self._beta = Schedule(self.beta_schedule, beta_init)

        if self.algorithm in (Algorithm.AR_BTS, Algorithm.AR_DENTS) and not self._alpha.decays:
            log.warning("%s with a constant alpha=%s is not guaranteed to converge",
                        self.label, self.alpha)

    def temperature(self, visits: int) -> float:
        return self._alpha(visits)

    def beta(self, visits: int) -> float:
        return self._beta(visits)

    def rebuild_cadence(self, n_actions: int) -> int:
        if not self.use_alias:
            return 1
        return self.alias_rebuild_every or max(n_actions, 1)

    def bias(self, node_value: float) -> float:
        if self.uct_bias == "auto":
            return abs(node_value)
        return float(self.uct_bias)

    @classmethod
    def from_dict(cls, data: dict) -> AlgorithmConfig:
        known = {f.name for f in fields(cls) if f.init}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown algorithm field(s): {', '.join(sorted(unknown))}")
        return cls(**data)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if not f.init:
                continue
            value = getattr(self, f.name)
            out[f.name] = value.value if isinstance(value, Enum) else value
        return out


def default_config(algorithm: Algorithm | str, env_name: str | None = None, **overrides) -> AlgorithmConfig:
    """AlgorithmConfig seeded from the tuned table for ``env_name`` (if any), then ``overrides``."""
    algorithm = Algorithm(algorithm)
    base = dict(config.HYPERPARAMETERS.get(env_name or "", {}).get(algorithm.value, {}))
    base.update(overrides)
    base["algorithm"] = algorithm
    return AlgorithmConfig.from_dict(base)
