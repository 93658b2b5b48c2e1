"""Temperature fitting on validation logits, plus label-smoothing targets.

All fitters minimize average negative log-likelihood over a log-spaced
temperature grid (the grid always contains tau = 1) and then refine the best
bracket by golden-section search in log-temperature space. Ties prefer the
temperature closest to 1, so a flat objective comes back as exactly 1.0.

Extractive models get two temperatures, fitted independently: one on the
start-position logits, one on the end-position logits. Generative models get
a single temperature over the candidates' normalized log-probabilities.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .confidence_scoring import TemperatureParams
from .errors import EmptyInputError, FitError, FitWarning
from .prediction_log import PredictionRecord, SpanLogitRecord

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FitConfig:
    tau_min: float = 0.05
    tau_max: float = 50.0
    grid_size: int = 50
    refine_tol: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.tau_min < 1.0 < self.tau_max:
            raise ValueError("need 0 < tau_min < 1 < tau_max")
        if self.grid_size < 3:
            raise ValueError("grid_size must be at least 3")
        if self.refine_tol <= 0.0:
            raise ValueError("refine_tol must be positive")


@dataclass(frozen=True)
class SmoothingConfig:
    alpha_start: float = 0.1
    alpha_end: float = 0.1

    def __post_init__(self):
        for name in ("alpha_start", "alpha_end"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def _log_softmax_at(scores: np.ndarray, gold: int) -> float:
    """log softmax(scores)[gold], stabilized by max subtraction."""
    shifted = scores - scores.max()
    return float(shifted[gold] - np.log(np.exp(shifted).sum()))


def nll_position(records: Sequence[SpanLogitRecord], which: str, tau: float) -> float:
    """Mean NLL of the gold position under softmax of the tau-scaled logits.

    ``which`` selects the start or end side; every record must carry gold
    indices. The softmax runs over all token positions of each record.
    """
    if which not in ("start", "end"):
        raise ValueError("which must be 'start' or 'end'")
    if not records:
        raise EmptyInputError("no records to evaluate")
    if not (math.isfinite(tau) and tau > 0):
        raise ValueError("tau must be a positive finite number")
    total = 0.0
    for rec in records:
        if rec.gold_start is None:
            raise FitError(f"record {rec.qid!r} has no gold span")
        logits = rec.start_logits if which == "start" else rec.end_logits
        gold = rec.gold_start if which == "start" else rec.gold_end
        total += -_log_softmax_at(np.asarray(logits, dtype=np.float64) / tau, gold)
    return total / len(records)


def _golden_section(fn: Callable[[float], float], lo: float, hi: float,
                    tol: float) -> tuple[float, float]:
    """Minimize a unimodal function on [lo, hi]; return the best probed point."""
    best_x, best_v = lo, fn(lo)
    v_hi = fn(hi)
    if v_hi < best_v:
        best_x, best_v = hi, v_hi
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > tol:
        for x, v in ((c, fc), (d, fd)):
            if v < best_v:
                best_x, best_v = x, v
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = fn(d)
    for x, v in ((c, fc), (d, fd)):
        if v < best_v:
            best_x, best_v = x, v
    return best_x, best_v


def fit_single_temperature(objective: Callable[[float], float],
                           cfg: FitConfig = FitConfig()) -> TemperatureParams:
    """Fit one temperature by grid search plus golden-section refinement.

    ``objective`` maps a temperature to an average NLL. The returned params
    record the objective at tau = 1 (``fit_nll_before``), the fitted minimum
    (``fit_nll_after``), and whether the optimum was pinned to a bound.
    """
    taus = np.unique(np.concatenate([
        np.geomspace(cfg.tau_min, cfg.tau_max, cfg.grid_size), [1.0]
    ]))
    vals = []
    for t in taus:
        v = float(objective(float(t)))
        if not math.isfinite(v):
            raise FitError(f"objective is not finite at tau={float(t)!r}")
        vals.append(v)
    one = int(np.flatnonzero(taus == 1.0)[0])
    nll_before = vals[one]

    best = min(range(len(vals)), key=lambda i: (vals[i], abs(math.log(taus[i]))))
    lo = math.log(taus[max(best - 1, 0)])
    hi = math.log(taus[min(best + 1, len(vals) - 1)])
    x_ref, v_ref = _golden_section(lambda x: float(objective(math.exp(x))),
                                   lo, hi, cfg.refine_tol)
    if not math.isfinite(v_ref):
        raise FitError("objective is not finite near the optimum")

    candidates = [(vals[i], abs(math.log(taus[i])), float(taus[i]))
                  for i in range(len(vals))]
    candidates.append((v_ref, abs(x_ref), math.exp(x_ref)))
    nll_after, _, tau = min(candidates)
    tau = min(max(tau, cfg.tau_min), cfg.tau_max)

    # Refinement works in log space, so a pinned optimum can come back an
    # ulp inside the bound; snap it so callers see the configured value.
    if tau <= cfg.tau_min * (1 + 1e-9):
        tau = cfg.tau_min
    elif tau >= cfg.tau_max * (1 - 1e-9):
        tau = cfg.tau_max

    hit_bound = tau == cfg.tau_min or tau == cfg.tau_max
    if hit_bound:
        warnings.warn(f"fitted temperature {tau!r} sits on a search bound",
                      FitWarning, stacklevel=2)
    return TemperatureParams(kind="single", tau=tau, fit_nll_before=nll_before,
                             fit_nll_after=nll_after, hit_bound=hit_bound)


def fit_dual_temperature(records: Sequence[SpanLogitRecord],
                         cfg: FitConfig = FitConfig()) -> TemperatureParams:
    """Fit start and end temperatures independently on gold span positions."""
    if not records:
        raise EmptyInputError("no records to fit on")
    start = fit_single_temperature(lambda t: nll_position(records, "start", t), cfg)
    end = fit_single_temperature(lambda t: nll_position(records, "end", t), cfg)
    return TemperatureParams(
        kind="dual",
        tau_start=start.tau,
        tau_end=end.tau,
        fit_nll_before=start.fit_nll_before + end.fit_nll_before,
        fit_nll_after=start.fit_nll_after + end.fit_nll_after,
        hit_bound=start.hit_bound or end.hit_bound,
    )


def fit_generative_temperature(records: Sequence[PredictionRecord],
                               em: Callable[[str, Sequence[str], str], bool] | None = None,
                               cfg: FitConfig = FitConfig()) -> TemperatureParams:
    """Fit a single temperature on generative candidate log-probabilities.

    The gold class of a record is its first candidate whose text matches a
    gold answer (exact match by default). Records with no matching candidate
    cannot contribute a gold class and are excluded; the count comes back in
    ``excluded_count`` of the result.
    """
    if em is None:
        from .qa_metrics import exact_match as em
    if not records:
        raise EmptyInputError("no records to fit on")
    prepared: list[tuple[np.ndarray, int]] = []
    excluded = 0
    for rec in records:
        if rec.model_kind != "generative":
            raise ValueError(f"record {rec.qid!r} is not generative")
        gold = next((i for i, c in enumerate(rec.candidates)
                     if em(c.text, rec.gold_answers, rec.language)), None)
        if gold is None:
            excluded += 1
            continue
        lp = np.array([c.log_prob for c in rec.candidates], dtype=np.float64)
        shifted = lp - lp.max()
        prepared.append((shifted - np.log(np.exp(shifted).sum()), gold))
    if not prepared:
        raise FitError(f"no record has a candidate matching its gold answers "
                       f"({excluded} excluded)")
    if excluded:
        warnings.warn(f"{excluded} of {len(records)} records have no matching "
                      f"candidate and were excluded from the fit",
                      FitWarning, stacklevel=2)

    def objective(tau: float) -> float:
        total = 0.0
        for log_norm, gold in prepared:
            total += -_log_softmax_at(log_norm / tau, gold)
        return total / len(prepared)

    fitted = fit_single_temperature(objective, cfg)
    return TemperatureParams(
        kind="single",
        tau=fitted.tau,
        fit_nll_before=fitted.fit_nll_before,
        fit_nll_after=fitted.fit_nll_after,
        hit_bound=fitted.hit_bound,
        excluded_count=excluded,
    )


def smooth_targets(num_classes: int, gold: int, alpha: float) -> np.ndarray:
    """Label-smoothed one-hot target: (1 - alpha) on gold plus alpha/C everywhere."""
    if num_classes < 1:
        raise ValueError("num_classes must be at least 1")
    if not 0 <= gold < num_classes:
        raise ValueError(f"gold index {gold} outside [0, {num_classes})")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    vec = np.full(num_classes, alpha / num_classes, dtype=np.float64)
    vec[gold] = (1.0 - alpha) + alpha / num_classes
    return vec


def smooth_span_targets(rec: SpanLogitRecord,
                        cfg: SmoothingConfig = SmoothingConfig()
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Start and end smoothing targets over a record's token positions."""
    if rec.gold_start is None:
        raise FitError(f"record {rec.qid!r} has no gold span")
    n = rec.num_tokens
    return (smooth_targets(n, rec.gold_start, cfg.alpha_start),
            smooth_targets(n, rec.gold_end, cfg.alpha_end))


def write_smoothing_targets(path: str | Path,
                            records: Sequence[SpanLogitRecord],
                            cfg: SmoothingConfig = SmoothingConfig()) -> None:
    """Export per-record start/end target vectors as JSONL."""
    if not records:
        raise EmptyInputError("no records to export")
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            start, end = smooth_span_targets(rec, cfg)
            fh.write(json.dumps({"qid": rec.qid,
                                 "start_targets": start.tolist(),
                                 "end_targets": end.tolist()}) + "\n")
