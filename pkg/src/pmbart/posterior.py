"""Retained draws: prediction, pointwise credible bands, fit summaries, persistence."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import ndtr

from .data import CutpointGrid, Dataset, OutcomeScaling
from .model import ModelConfig, ModelVariant
from .tree import Tree, dump_forest, load_forest

TRACE_COLUMNS = (
    "iteration",
    "sigma",
    "birth_proposed",
    "birth_accepted",
    "death_proposed",
    "death_accepted",
    "skipped",
    "mean_depth",
)

LOGLOSS_CLIP = 1e-12


@dataclass
class PosteriorDraws:
    """Forest snapshots kept after burn-in plus what is needed to predict from them.

    Trees live in the sampler's coordinates, in which nonincreasing
    covariates are negated; ``directions`` undoes that at prediction time.
    ``reference`` holds the training medians of the covariates, used to fix
    the other coordinates when tracing a curve along one of them.
    """

    variant: ModelVariant
    forests: list[list[Tree]]
    offset: float = 0.0
    scaling: OutcomeScaling | None = None
    sigma: np.ndarray | None = None
    grid: CutpointGrid | None = None
    directions: np.ndarray | None = None
    config: ModelConfig | None = None
    column_names: tuple[str, ...] = ()
    trace: np.ndarray | None = None
    kept_iterations: np.ndarray | None = None
    reference: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_draws(self) -> int:
        return len(self.forests)

    def _prepare(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None] if self._n_vars() == 1 else X[None, :]
        if self.directions is not None:
            X = X * self.directions
        return X

    def _n_vars(self) -> int:
        if self.directions is not None:
            return len(self.directions)
        if self.grid is not None:
            return len(self.grid)
        return 1

    def latent(self, X) -> np.ndarray:
        """Sum-of-trees value for every draw (rows) at every point of ``X`` (columns).

        Continuous models are mapped back to the original outcome scale.
        """
        X = self._prepare(X)
        out = np.zeros((self.n_draws, X.shape[0]))
        for s, forest in enumerate(self.forests):
            for t in forest:
                out[s] += t.predict(X)
        if self.scaling is not None:
            out = self.scaling.inverse(out)
        return out

    def response(self, X) -> np.ndarray:
        """Per-draw posterior of ``E[Y | x]``: probabilities for probit models."""
        g = self.latent(X)
        if self.variant.probit:
            return ndtr(g + self.offset)
        return g


def predict_g(draws: PosteriorDraws, x) -> np.ndarray:
    """Per-draw ``G(x)`` at a single covariate vector."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return draws.latent(x)[:, 0]


def predict_prob(draws: PosteriorDraws, x) -> np.ndarray:
    """Per-draw ``Phi(G(x) + c)`` at a single covariate vector."""
    if not draws.variant.probit:
        raise ValueError(f"predict_prob needs a probit variant, got {draws.variant.value}")
    return ndtr(predict_g(draws, x) + draws.offset)


@dataclass(frozen=True)
class CurveSummary:
    x: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    level: float

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def to_csv(self, path):
        x = self.x if self.x.ndim == 1 else self.x[:, 0]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "mean", "lo", "hi"])
            for row in zip(x, self.mean, self.lower, self.upper):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, level: float = math.nan) -> CurveSummary:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(table[:, 0], table[:, 1], table[:, 2], table[:, 3], level)


def summarize(samples: np.ndarray, level: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise mean and central ``level`` quantile band of a draws-by-points array."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if samples.shape[0] < 2:
        raise ValueError("need at least two draws for a credible band")
    lo, hi = np.quantile(samples, [(1 - level) / 2, (1 + level) / 2], axis=0, method="linear")
    return samples.mean(axis=0), lo, hi


def curve_points(draws: PosteriorDraws, grid, column: int = 0) -> np.ndarray:
    """Covariate rows that vary ``column`` along ``grid`` with the rest at the reference point."""
    grid = np.asarray(grid, dtype=float)
    P = draws._n_vars()
    if grid.ndim == 2:
        return grid
    if P == 1:
        return grid[:, None]
    base = draws.reference if draws.reference is not None else np.zeros(P)
    X = np.tile(np.asarray(base, dtype=float), (grid.size, 1))
    X[:, column] = grid
    return X


def curve_summary(draws: PosteriorDraws, grid, level: float = 0.9, column: int = 0) -> CurveSummary:
    """Posterior mean and pointwise band of ``E[Y | x]`` along ``grid``.

    Probit summaries are taken on the probability scale, draw by draw. With
    several covariates a 1-D grid moves ``column`` only.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty grid")
    mean, lo, hi = summarize(draws.response(curve_points(draws, grid, column)), level)
    return CurveSummary(grid, mean, lo, hi, level)


def effective_sample_size(chain) -> float:
    """Geyer's initial monotone sequence estimate for a scalar chain."""
    x = np.asarray(chain, dtype=float)
    n = x.size
    if n < 4 or np.all(x == x[0]):
        return float(n)
    x = x - x.mean()
    f = np.fft.rfft(x, 2 * n)
    acov = np.fft.irfft(f * np.conj(f))[:n] / n
    rho = acov / acov[0]
    pairs = rho[: 2 * (n // 2)].reshape(-1, 2).sum(axis=1)
    total, prev = 0.0, math.inf
    for g in pairs:
        if g <= 0:
            break
        g = min(g, prev)
        total += g
        prev = g
    tau = max(2 * total - 1, 1.0 / n)
    return float(n / tau)


def fit_report(draws: PosteriorDraws, d: Dataset) -> dict:
    """In-sample fit, tree sizes and move acceptance for a set of draws."""
    per_draw = draws.response(d.X)
    mean = per_draw.mean(axis=0)
    report = {"variant": draws.variant.value, "n": d.n, "draws": draws.n_draws}
    if draws.variant.probit:
        p = np.clip(mean, LOGLOSS_CLIP, 1 - LOGLOSS_CLIP)
        report["log_loss"] = float(-np.mean(d.y * np.log(p) + (1 - d.y) * np.log1p(-p)))
    else:
        report["rmse"] = float(np.sqrt(np.mean((d.y - mean) ** 2)))
    report["mean_tree_depth"] = float(np.mean([[t.depth for t in f] for f in draws.forests]))
    report["mean_leaves"] = float(np.mean([[t.n_leaves for t in f] for f in draws.forests]))
    if draws.trace is not None and len(draws.trace):
        tr = draws.trace
        col = {name: i for i, name in enumerate(TRACE_COLUMNS)}
        bp, ba = tr[:, col["birth_proposed"]].sum(), tr[:, col["birth_accepted"]].sum()
        dp, da = tr[:, col["death_proposed"]].sum(), tr[:, col["death_accepted"]].sum()
        report["birth_acceptance"] = float(ba / bp) if bp else math.nan
        report["death_acceptance"] = float(da / dp) if dp else math.nan
    report["effective_draws"] = effective_sample_size(per_draw.mean(axis=1))
    if draws.sigma is not None:
        report["sigma_mean"] = float(np.mean(draws.sigma) * draws.scaling.scale)
    return report


# ---------------------------------------------------------------- persistence


def save_draws(draws: PosteriorDraws, out_dir):
    """Write ``draws/`` (one forest file per draw plus ``meta.json``) and ``traces.csv``."""
    out_dir = Path(out_dir)
    draw_dir = out_dir / "draws"
    draw_dir.mkdir(parents=True, exist_ok=True)
    for old in draw_dir.glob("draw_*.txt"):
        old.unlink()
    width = max(5, len(str(draws.n_draws)))
    for s, forest in enumerate(draws.forests):
        (draw_dir / f"draw_{s:0{width}d}.txt").write_text(dump_forest(forest))
    meta = {
        "variant": draws.variant.value,
        "n_draws": draws.n_draws,
        "offset": draws.offset,
        "scaling": None
        if draws.scaling is None
        else {"shift": draws.scaling.shift, "scale": draws.scaling.scale},
        "sigma": None if draws.sigma is None else [float(v) for v in draws.sigma],
        "directions": None if draws.directions is None else [float(v) for v in draws.directions],
        "grid": None if draws.grid is None else draws.grid.to_lists(),
        "config": None if draws.config is None else draws.config.to_dict(),
        "column_names": list(draws.column_names),
        "kept_iterations": None
        if draws.kept_iterations is None
        else [int(v) for v in draws.kept_iterations],
        "reference": None if draws.reference is None else [float(v) for v in draws.reference],
    }
    (draw_dir / "meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    if draws.trace is not None:
        write_trace(draws.trace, out_dir / "traces.csv")


def write_trace(trace: np.ndarray, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace:
            w.writerow(
                [int(row[0]), "" if math.isnan(row[1]) else repr(float(row[1]))]
                + [int(v) for v in row[2:7]]
                + [repr(float(row[7]))]
            )


def read_trace(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            rows.append([float(v) if v != "" else math.nan for v in row])
    return np.array(rows, dtype=float).reshape(-1, len(TRACE_COLUMNS))


def load_draws(out_dir) -> PosteriorDraws:
    """Inverse of :func:`save_draws`. ``out_dir`` may also be the ``draws/`` folder itself."""
    out_dir = Path(out_dir)
    draw_dir = out_dir / "draws" if (out_dir / "draws").is_dir() else out_dir
    meta_path = draw_dir / "meta.json"
    if not meta_path.is_file():
        raise FileNotFoundError(f"no draws found under {out_dir} (missing {meta_path})")
    meta = json.loads(meta_path.read_text())
    files = sorted(draw_dir.glob("draw_*.txt"))
    if len(files) != meta["n_draws"]:
        raise ValueError(f"{draw_dir} holds {len(files)} draw files, meta.json expects {meta['n_draws']}")
    forests = [load_forest(f.read_text()) for f in files]
    trace_path = draw_dir.parent / "traces.csv"
    scaling = meta["scaling"]
    return PosteriorDraws(
        variant=ModelVariant.parse(meta["variant"]),
        forests=forests,
        offset=meta["offset"],
        scaling=None if scaling is None else OutcomeScaling(scaling["shift"], scaling["scale"]),
        sigma=None if meta["sigma"] is None else np.array(meta["sigma"]),
        grid=None if meta["grid"] is None else CutpointGrid.from_lists(meta["grid"]),
        directions=None if meta["directions"] is None else np.array(meta["directions"]),
        config=None if meta["config"] is None else ModelConfig.from_dict(meta["config"]),
        column_names=tuple(meta["column_names"]),
        trace=read_trace(trace_path) if trace_path.is_file() else None,
        kept_iterations=None if meta["kept_iterations"] is None else np.array(meta["kept_iterations"]),
        reference=None if meta.get("reference") is None else np.array(meta["reference"]),
    )
