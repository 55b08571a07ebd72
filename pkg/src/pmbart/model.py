"""Model variants and sampler configuration."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import Mapping

from .priors import TreePriorParams

_ALIASES = {
    "continuous": "bart",
    "probit": "pbart",
    "monotone-continuous": "mbart",
    "monotone": "mbart",
    "probit-monotone": "pmbart",
}


class ModelVariant(str, enum.Enum):
    BART = "bart"
    PBART = "pbart"
    MBART = "mbart"
    PMBART = "pmbart"

    @classmethod
    def parse(cls, name) -> ModelVariant:
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        return cls(_ALIASES.get(key, key))

    @property
    def probit(self) -> bool:
        return self in (ModelVariant.PBART, ModelVariant.PMBART)

    @property
    def monotone(self) -> bool:
        return self in (ModelVariant.MBART, ModelVariant.PMBART)

    @property
    def default_tree_prior(self) -> tuple[float, float]:
        return (0.25, 0.8) if self.monotone else (0.95, 2.0)


@dataclass(frozen=True)
class ModelConfig:
    """Variant, hyperparameters and chain settings for one MCMC run.

    ``monotone`` maps covariate index to direction, +1 for nondecreasing and
    -1 for nonincreasing. ``alpha``/``beta`` default per variant.
    ``max_depth``, ``update_structure`` and ``prior_only`` exist for
    validation runs: they cap tree depth, freeze tree shapes, and switch the
    likelihood off respectively.
    """

    variant: ModelVariant = ModelVariant.PBART
    m: int = 200
    k: float = 2.0
    alpha: float | None = None
    beta: float | None = None
    nu: float = 3.0
    q: float = 0.90
    num_cut: int = 100
    burn_in: int = 1000
    keep: int = 1000
    thin: int = 1
    seed: int = 0
    monotone: Mapping[int, int] = field(default_factory=dict)
    max_depth: int | None = None
    update_structure: bool = True
    prior_only: bool = False

    def __post_init__(self):
        variant = ModelVariant.parse(self.variant)
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "monotone", {int(p): int(s) for p, s in dict(self.monotone).items()})
        a0, b0 = variant.default_tree_prior
        if self.alpha is None:
            object.__setattr__(self, "alpha", a0)
        if self.beta is None:
            object.__setattr__(self, "beta", b0)
        if self.m < 1 or self.k <= 0 or self.num_cut < 1:
            raise ValueError("need m >= 1, k > 0 and num_cut >= 1")
        if self.burn_in < 0 or self.keep < 1 or self.thin < 1:
            raise ValueError("need burn_in >= 0, keep >= 1 and thin >= 1")
        if self.nu <= 0 or not 0 < self.q < 1:
            raise ValueError("need nu > 0 and q in (0, 1)")
        if variant.monotone and not self.monotone:
            raise ValueError(f"variant {variant.value} needs at least one monotone coordinate")
        if not variant.monotone and self.monotone:
            raise ValueError(f"variant {variant.value} does not take monotone coordinates")
        if any(s not in (1, -1) for s in self.monotone.values()):
            raise ValueError("monotone directions must be +1 or -1")
        TreePriorParams(self.alpha, self.beta, self.max_depth)

    @property
    def tree_prior(self) -> TreePriorParams:
        return TreePriorParams(self.alpha, self.beta, self.max_depth)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["variant"] = self.variant.value
        out["monotone"] = {str(p): s for p, s in sorted(self.monotone.items())}
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> ModelConfig:
        d = dict(d)
        if "monotone" in d:
            d["monotone"] = {int(p): int(s) for p, s in d["monotone"].items()}
        return cls(**d)
