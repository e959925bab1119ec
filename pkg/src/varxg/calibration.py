"""Monte Carlo harness for statistical validation of the link tests.

A scenario draws one generating model (couplings fixed across repetitions,
with selected links forced to zero), simulates many datasets, fits each,
and tallies how often every link reports p below the significance
threshold: the rate on a zeroed link estimates the false discovery rate,
the rate on a true link its power. Sweeps over regularization strength and
signal length, and paired free-versus-basis runs, reuse the same machinery.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .design import LagSpec, TimeSeries, gaussian_basis, lagged_design, valid_history_rows
from .dynamics import EQUATION_ERROR, GeneratorSpec, simulate, spectral_radius
from .exceptions import (
    InsufficientDataError,
    NotPositiveDefiniteError,
    NoValidSamplesError,
    SimulationDivergedError,
    VarxError,
)
from .inference import RegularizationSpec, VarxFit, granger_test

logger = logging.getLogger(__name__)

GRAPHS = ("custom", "common-cause", "collider", "independent")
STABILITY_LIMIT = 0.95
_MAX_MODEL_DRAWS = 100


@dataclass(frozen=True)
class FitSpec:
    """How each simulated dataset is fitted and tested."""

    n_a: int
    n_b: int
    lam: float = 0.0
    n_basis: int = 0

    def lag_spec(self, d_y: int, d_x: int) -> LagSpec:
        return LagSpec(n_a=self.n_a, n_b=self.n_b if d_x else 0, d_y=d_y, d_x=d_x)

    def basis(self):
        if self.n_basis:
            return gaussian_basis(self.n_b, self.n_basis)
        return None


@dataclass(frozen=True)
class ScenarioSpec:
    """One Monte Carlo study: generator, graph, fit configuration, tallies.

    The generating model is drawn once from the master seed (redrawn until
    its AR part is stable) and every repetition re-simulates noise and
    inputs only. ``null_links`` name the links forced to zero in the
    generator, as ``(source, target)`` channel-name pairs like
    ``("y2", "y2")`` or ``("x1", "y5")``.

    Graphs: ``custom`` draws a dense model (AR entries of magnitude
    ``ar_scale`` with random sign, input filters normal with scale
    ``ma_scale``); the three named graphs fix d_y=2, d_x=1 with a
    one-directional ``y1 -> y2`` internal effect and differ in how x
    relates to y: a ``common-cause`` x drives both channels, an
    ``independent`` x drives neither, and a ``collider`` x is generated
    from the lagged sum of both y channels.
    """

    d_y: int
    d_x: int
    n_a: int
    n_b: int
    t_samples: int
    n_reps: int
    seed: int
    graph: str = "custom"
    null_links: tuple[tuple[str, str], ...] = ()
    noise_std: float = 1.0
    input_std: float = 1.0
    ar_scale: float = 0.05
    ma_scale: float = 1.0
    directed_scale: float = 0.15
    collider_coeffs: tuple[float, float] = (0.5, 0.5)
    collider_noise_std: float = 1.0
    model_kind: str = EQUATION_ERROR
    include_x: bool = True
    alpha: float = 0.05
    generator_uses_basis: bool = False
    fit: FitSpec | None = None
    name: str = ""

    def __post_init__(self):
        if self.graph not in GRAPHS:
            raise ValueError(f"unknown graph {self.graph!r}; expected one of {GRAPHS}")
        if self.graph != "custom" and (self.d_y != 2 or self.d_x != 1):
            raise ValueError(f"graph {self.graph!r} requires d_y=2, d_x=1")
        if self.n_reps < 1:
            raise ValueError("n_reps must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.fit is None:
            object.__setattr__(self, "fit", FitSpec(n_a=self.n_a, n_b=self.n_b))
        object.__setattr__(
            self, "null_links", tuple((str(s), str(t)) for s, t in self.null_links)
        )
        for source, target in self.null_links:
            self._parse_channel(source, allow_x=True)
            kind, _ = self._parse_channel(target, allow_x=False)
        if self.generator_uses_basis and not self.fit.n_basis:
            raise ValueError("generator_uses_basis requires fit.n_basis > 0")

    def _parse_channel(self, name: str, allow_x: bool) -> tuple[str, int]:
        kind, idx = name[0], name[1:]
        if kind not in ("y", "x") or not idx.isdigit():
            raise ValueError(f"bad channel name {name!r}; use y<k> or x<k> (1-based)")
        i = int(idx) - 1
        if kind == "y" and not 0 <= i < self.d_y:
            raise ValueError(f"channel {name!r} out of range for d_y={self.d_y}")
        if kind == "x":
            if not allow_x:
                raise ValueError(f"link target must be an output channel, got {name!r}")
            if not 0 <= i < self.d_x:
                raise ValueError(f"channel {name!r} out of range for d_x={self.d_x}")
        return kind, i


def _link_name(kind: str, source: int, target: int) -> str:
    prefix = "y" if kind == "ar" else "x"
    return f"{prefix}{source + 1}->y{target + 1}"


@dataclass(frozen=True)
class LinkRate:
    """Detection rate of one link with its binomial standard error."""

    rate: float
    se: float
    hits: int
    n: int


@dataclass(frozen=True)
class CalibrationReport:
    """Tallied outcome of a scenario run; reproducible from its seeds."""

    scenario: dict
    n_reps: int
    n_failed: int
    fdr: dict[str, LinkRate]
    power: dict[str, LinkRate]
    rates: dict[str, LinkRate]
    deviance_mean: dict[str, float]
    train_error: tuple[float, float]
    test_error: tuple[float, float]
    param_count: int
    model_radius: float
    rep_seeds: tuple[int, ...]
    label: str = ""

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rep_seeds"] = [int(s) for s in self.rep_seeds]
        return out

    def summary_lines(self) -> list[str]:
        lines = [
            f"scenario: {self.scenario.get('name') or self.scenario.get('graph')}"
            + (f" [{self.label}]" if self.label else ""),
            f"repetitions: {self.n_reps} completed, {self.n_failed} failed",
            f"parameters: {self.param_count}",
            f"train error: {self.train_error[0]:.4f} +- {self.train_error[1]:.4f}",
            f"test error:  {self.test_error[0]:.4f} +- {self.test_error[1]:.4f}",
        ]
        if self.fdr:
            lines.append("false discovery (null links):")
            lines += [
                f"  {name:<12} {r.rate:.4f} +- {r.se:.4f}  ({r.hits}/{r.n})"
                for name, r in sorted(self.fdr.items())
            ]
        if self.power:
            lines.append("power (true links):")
            lines += [
                f"  {name:<12} {r.rate:.4f} +- {r.se:.4f}  ({r.hits}/{r.n})"
                for name, r in sorted(self.power.items())
            ]
        return lines


def _random_signs(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape) * 2.0 - 1.0


def _null_indices(spec: ScenarioSpec) -> list[tuple[str, int, int]]:
    out = []
    for source, target in spec.null_links:
        s_kind, s_idx = spec._parse_channel(source, allow_x=True)
        _, t_idx = spec._parse_channel(target, allow_x=False)
        out.append(("ar" if s_kind == "y" else "ma", s_idx, t_idx))
    return out


def _draw_model(spec: ScenarioSpec, rng: np.random.Generator):
    """Draw (a, b_generator) for the scenario graph; reject unstable draws."""
    nulls = _null_indices(spec)
    for attempt in range(_MAX_MODEL_DRAWS):
        if spec.graph == "custom":
            a = spec.ar_scale * _random_signs(rng, (spec.n_a, spec.d_y, spec.d_y))
            b = rng.standard_normal((spec.n_b, spec.d_y, spec.d_x)) * spec.ma_scale
            if spec.d_x == 0:
                b = None
        else:
            a = np.zeros((spec.n_a, 2, 2))
            a[:, 0, 0] = spec.ar_scale * _random_signs(rng, spec.n_a)
            a[:, 1, 1] = spec.ar_scale * _random_signs(rng, spec.n_a)
            a[:, 1, 0] = spec.directed_scale * _random_signs(rng, spec.n_a)
            if spec.graph == "common-cause":
                b = rng.standard_normal((spec.n_b, 2, 1)) * spec.ma_scale
            else:
                b = None  # x is not fed into y
        if spec.generator_uses_basis and b is not None:
            basis = spec.fit.basis()
            compressed = rng.standard_normal((basis.n_compressed, spec.d_y, spec.d_x))
            b = basis.expand(compressed * spec.ma_scale)
        for kind, s_idx, t_idx in nulls:
            if kind == "ar":
                a[:, t_idx, s_idx] = 0.0
            elif b is not None:
                b[:, t_idx, s_idx] = 0.0
        radius = spectral_radius(a)
        if radius <= STABILITY_LIMIT:
            if attempt:
                logger.info("model stable after %d redraws (radius %.3f)", attempt, radius)
            return a, b, radius
    raise VarxError(
        f"no stable model within {_MAX_MODEL_DRAWS} draws; lower the coupling scales"
    )


def _simulate_rep(spec: ScenarioSpec, a, b_gen, seeds) -> tuple[np.ndarray, np.ndarray | None]:
    """One dataset (y, x) from integer seeds (x stream, innovation stream)."""
    x_seed, sim_seed = seeds
    rng_x = np.random.default_rng(int(x_seed))
    t = spec.t_samples
    if spec.graph == "collider":
        y = simulate(
            GeneratorSpec(a=a, noise_std=spec.noise_std, kind=spec.model_kind,
                          t_samples=t, seed=int(sim_seed))
        )
        c1, c2 = spec.collider_coeffs
        x = np.zeros((t, 1))
        x[1:, 0] = c1 * y[:-1, 0] + c2 * y[:-1, 1]
        x[:, 0] += rng_x.standard_normal(t) * spec.collider_noise_std
        return y, x
    x = None
    if spec.d_x:
        x = rng_x.standard_normal((t, spec.d_x)) * spec.input_std
    y = simulate(
        GeneratorSpec(a=a, b=b_gen, noise_std=spec.noise_std, kind=spec.model_kind,
                      t_samples=t, seed=int(sim_seed)),
        x if b_gen is not None else None,
    )
    return y, x


def _relative_error(fit: VarxFit, y: np.ndarray, x: np.ndarray | None) -> float:
    """Mean over channels of residual variance over signal variance."""
    lags = fit.lags
    y_c = TimeSeries(y - np.nanmean(y, axis=0))
    x_c = TimeSeries(x - np.nanmean(x, axis=0)) if x is not None and lags.d_x else None
    valid = valid_history_rows(y_c, x_c, lags)
    rows = np.flatnonzero(valid)
    design = lagged_design(y_c, x_c, lags, rows)
    resid = y_c.values[rows] - design @ fit.raw_h()
    return float(np.mean(resid.var(axis=0) / y_c.values[rows].var(axis=0)))


def _tested_links(spec: ScenarioSpec, fit_include_x: bool):
    links = [("ar", j, i) for i in range(spec.d_y) for j in range(spec.d_y)]
    if fit_include_x and spec.d_x:
        links += [("ma", j, i) for i in range(spec.d_y) for j in range(spec.d_x)]
    return links


def _true_links(a, b_gen, spec: ScenarioSpec) -> set[tuple[str, int, int]]:
    true = set()
    for i in range(spec.d_y):
        for j in range(spec.d_y):
            if np.any(a[:, i, j]):
                true.add(("ar", j, i))
    if b_gen is not None:
        for i in range(spec.d_y):
            for j in range(spec.d_x):
                if np.any(b_gen[:, i, j]):
                    true.add(("ma", j, i))
    return true


def _execute(spec: ScenarioSpec, variants: dict[str, FitSpec]) -> dict[str, CalibrationReport]:
    """Run a scenario once, fitting each simulated dataset per variant."""
    master = np.random.SeedSequence(spec.seed)
    model_ss, reps_ss = master.spawn(2)
    a, b_gen, radius = _draw_model(spec, np.random.default_rng(model_ss))
    rep_seeds = reps_ss.generate_state(spec.n_reps, dtype=np.uint64)
    true_links = _true_links(a, b_gen, spec)
    nulls = set(_null_indices(spec))

    per_variant = {}
    for label, fit_spec in variants.items():
        d_x_fit = spec.d_x if spec.include_x else 0
        links = _tested_links(spec, spec.include_x)
        per_variant[label] = {
            "fit_spec": fit_spec,
            "lags": fit_spec.lag_spec(spec.d_y, d_x_fit),
            "basis": fit_spec.basis() if d_x_fit else None,
            "reg": RegularizationSpec(lam=fit_spec.lam),
            "links": links,
            "hits": {link: 0 for link in links},
            "dev": {link: 0.0 for link in links},
            "train": [],
            "test": [],
            "n_done": 0,
            "n_failed": 0,
        }

    for rep, rep_seed in enumerate(rep_seeds):
        streams = np.random.SeedSequence(int(rep_seed)).generate_state(4, dtype=np.uint64)
        try:
            y, x = _simulate_rep(spec, a, b_gen, streams[:2])
            y_test, x_test = _simulate_rep(spec, a, b_gen, streams[2:])
        except SimulationDivergedError:
            for state in per_variant.values():
                state["n_failed"] += 1
            continue
        x_fit = x if spec.include_x else None
        x_test_fit = x_test if spec.include_x else None
        for state in per_variant.values():
            try:
                fit = granger_test(
                    y, x_fit, lags=state["lags"], reg=state["reg"], basis=state["basis"]
                )
            except (NotPositiveDefiniteError, InsufficientDataError, NoValidSamplesError):
                state["n_failed"] += 1
                continue
            for link in state["links"]:
                kind, j, i = link
                p = fit.pvalue_a[i, j] if kind == "ar" else fit.pvalue_b[i, j]
                d = fit.deviance_a[i, j] if kind == "ar" else fit.deviance_b[i, j]
                state["hits"][link] += p < spec.alpha
                state["dev"][link] += d
            state["train"].append(_relative_error(fit, y, x_fit))
            state["test"].append(_relative_error(fit, y_test, x_test_fit))
            state["n_done"] += 1
        if rep and rep % 200 == 0:
            logger.info("scenario %s: %d/%d repetitions", spec.name or spec.graph, rep, spec.n_reps)

    reports = {}
    for label, state in per_variant.items():
        n = state["n_done"]
        rates = {}
        for link in state["links"]:
            hits = state["hits"][link]
            rate = hits / n if n else np.nan
            se = float(np.sqrt(rate * (1.0 - rate) / n)) if n else np.nan
            rates[_link_name(*link)] = LinkRate(rate=rate, se=se, hits=int(hits), n=n)
        fdr = {_link_name(*link): rates[_link_name(*link)] for link in nulls if _link_name(*link) in rates}
        power = {
            _link_name(*link): rates[_link_name(*link)]
            for link in state["links"]
            if link in true_links and link not in nulls
        }
        train = np.asarray(state["train"])
        test = np.asarray(state["test"])
        lags = state["lags"]
        n_pred = lags.d_y * lags.n_a + lags.d_x * (
            state["basis"].n_compressed if state["basis"] is not None else lags.n_b
        )
        reports[label] = CalibrationReport(
            scenario=_scenario_dict(spec, state["fit_spec"]),
            n_reps=n,
            n_failed=state["n_failed"],
            fdr=fdr,
            power=power,
            rates=rates,
            deviance_mean={
                _link_name(*link): (state["dev"][link] / n if n else np.nan)
                for link in state["links"]
            },
            train_error=_mean_sem(train),
            test_error=_mean_sem(test),
            param_count=spec.d_y * n_pred,
            model_radius=radius,
            rep_seeds=tuple(int(s) for s in rep_seeds),
            label=label,
        )
    return reports


def _mean_sem(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return (float("nan"), float("nan"))
    sem = float(values.std(ddof=1) / np.sqrt(values.size)) if values.size > 1 else 0.0
    return (float(values.mean()), sem)


def _scenario_dict(spec: ScenarioSpec, fit_spec: FitSpec) -> dict:
    out = asdict(spec)
    out["fit"] = asdict(fit_spec)
    out["null_links"] = [list(pair) for pair in spec.null_links]
    out["collider_coeffs"] = list(spec.collider_coeffs)
    return out


def run_scenario(spec: ScenarioSpec) -> CalibrationReport:
    """Simulate, fit, and tally one scenario. Deterministic given its seed."""
    return _execute(spec, {"": spec.fit})[""]


@dataclass(frozen=True)
class SweepCell:
    lam: float
    t_samples: int
    report: CalibrationReport


@dataclass(frozen=True)
class SweepResult:
    """Reports over the Cartesian grid of ridge strength and signal length."""

    cells: tuple[SweepCell, ...]

    def report(self, lam: float, t_samples: int) -> CalibrationReport:
        for cell in self.cells:
            if cell.lam == lam and cell.t_samples == t_samples:
                return cell.report
        raise KeyError(f"no cell for lam={lam}, t_samples={t_samples}")

    def to_dict(self) -> dict:
        return {
            "cells": [
                {"lambda": c.lam, "t_samples": c.t_samples, "report": c.report.to_dict()}
                for c in self.cells
            ]
        }


def regularization_sweep(
    base: ScenarioSpec, lambdas: list[float], lengths: list[int]
) -> SweepResult:
    """Run the scenario at every (lambda, length) grid point.

    Datasets depend only on the master seed and the length, so cells along
    the lambda axis are fitted to identical simulations and train/test
    error comparisons across lambda are paired.
    """
    if not lambdas or not lengths:
        raise ValueError("lambda and length grids must be non-empty")
    cells = []
    for t_samples in lengths:
        for lam in lambdas:
            spec = replace(
                base,
                t_samples=int(t_samples),
                fit=replace(base.fit, lam=float(lam)),
            )
            cells.append(SweepCell(lam=float(lam), t_samples=int(t_samples),
                                   report=run_scenario(spec)))
            logger.info("sweep cell done: lambda=%s, T=%s", lam, t_samples)
    return SweepResult(cells=tuple(cells))


def basis_comparison(spec: ScenarioSpec) -> tuple[CalibrationReport, CalibrationReport]:
    """Paired free-lag versus basis-compressed runs on identical datasets.

    The scenario must set ``generator_uses_basis`` so the generating input
    filters live in the span of the fitting basis. Returns
    ``(free_report, basis_report)``.
    """
    if not spec.generator_uses_basis:
        raise ValueError("basis_comparison requires generator_uses_basis=True")
    variants = {
        "free": replace(spec.fit, n_basis=0),
        "basis": spec.fit,
    }
    reports = _execute(spec, variants)
    logger.info(
        "parameter counts: %d free vs %d basis",
        reports["free"].param_count,
        reports["basis"].param_count,
    )
    return reports["free"], reports["basis"]
