"""Budgeted active-learning annotation engine.

A fixed human-label budget (15% of the dataset by default) is split
1:3:2 across three seeding draws: density-based inliers, uniform random
samples, and the points the provisional model is least sure about. Four
self-training stages then propagate machine labels wherever the model's
confidence clears a strict gate and the sample was not flagged as an
outlier; a final pass labels everything left unconditionally. Outliers
are deferred to that final pass so they can never seed propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Mapping, Sequence

import numpy as np

from . import lof
from .gbdt import GbdtParams, OvaModel, train_ova
from .pipeline import fit_quantile_map


class Provenance(IntEnum):
    NONE = 0
    HUMAN = 1
    PROPAGATED = 2
    FORCED = 3


PROVENANCE_NAMES = {p: p.name.lower() for p in Provenance}

Oracle = Callable[[Sequence[int]], Sequence[int]]


@dataclass
class GroundTruthOracle:
    """Simulated annotator backed by reference labels.

    Refuses to answer the same index twice, which doubles as a check
    that the engine never re-asks.
    """

    labels: np.ndarray
    calls: int = 0
    asked: set = field(default_factory=set)

    def __call__(self, indices: Sequence[int]) -> list[int]:
        out = []
        for i in indices:
            if i in self.asked:
                raise AssertionError(f"index {i} asked twice")
            self.asked.add(i)
            out.append(int(self.labels[i]))
        self.calls += len(out)
        return out


@dataclass
class Budgets:
    """Planned and spent human-label counts per seeding channel."""

    inlier: int
    random: int
    query: int
    inlier_used: int = 0
    random_used: int = 0
    query_used: int = 0
    extra_used: int = 0

    @property
    def planned(self) -> int:
        return self.inlier + self.random + self.query

    @property
    def human_used(self) -> int:
        return self.inlier_used + self.random_used + self.query_used


def plan_budgets(n_samples: int, budget: float = 0.15) -> Budgets:
    """Split the human budget 1:3:2 over inlier, random, and query draws.

    At the default 15% this is floor(n/40), floor(3n/40), floor(n/20).
    """
    if abs(budget - 0.15) < 1e-12:
        parts = (n_samples // 40, (3 * n_samples) // 40, n_samples // 20)
    else:
        parts = (int(n_samples * budget / 6), int(n_samples * budget / 2), int(n_samples * budget / 3))
    if min(parts) < 1:
        raise ValueError(f"dataset of {n_samples} samples is too small for a {budget:.0%} budget")
    return Budgets(*parts)


@dataclass(frozen=True)
class AnnotateConfig:
    budget: float = 0.15
    gate: float | None = 0.7
    stages: int = 4
    lof_k: int = 1
    contamination: float = 0.1
    quantile_normalize: bool = True
    score_mode: str = "raw"
    gbdt: GbdtParams = field(default_factory=GbdtParams)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.budget <= 1.0:
            raise ValueError("budget must lie in (0, 1]")
        if self.gate is not None and not 0.0 <= self.gate <= 1.0:
            raise ValueError("gate must lie in [0, 1] or be None")
        if self.stages < 0:
            raise ValueError("stages must be non-negative")


@dataclass
class AnnotationState:
    """Mutable progress of one annotation run."""

    n_samples: int
    class_names: tuple[str, ...]
    config: AnnotateConfig
    rng_seed: int
    budgets: Budgets
    labels: np.ndarray
    provenance: np.ndarray
    stage_of: np.ndarray
    score_at_assign: np.ndarray
    scores: np.ndarray
    outlier: np.ndarray
    rng: np.random.Generator
    stage: int = 0
    phase: str = "seeding"
    pending: list[int] = field(default_factory=list)
    pending_charge: list[str] = field(default_factory=list)

    @property
    def trusted(self) -> np.ndarray:
        """Rows usable as training data: human or gate-propagated labels."""
        return (self.provenance == Provenance.HUMAN) | (self.provenance == Provenance.PROPAGATED)

    @property
    def human_cap(self) -> int:
        return math.ceil(self.config.budget * self.n_samples)

    def check_invariants(self) -> None:
        labeled = self.provenance != Provenance.NONE
        if not np.all((self.labels >= 0) == labeled):
            raise AssertionError("label/provenance bookkeeping out of sync")
        human = int((self.provenance == Provenance.HUMAN).sum())
        if human > self.human_cap + self.budgets.extra_used:
            raise AssertionError(f"human labels {human} exceed the budget cap {self.human_cap}")
        propagated = self.provenance == Provenance.PROPAGATED
        if np.any(propagated & self.outlier):
            raise AssertionError("an outlier received a propagated label before the final pass")


def _fit_and_score(state: AnnotationState, features: np.ndarray) -> tuple[np.ndarray, OvaModel]:
    """Train on the trusted rows, score every row; returns global label ids."""
    t_idx = np.flatnonzero(state.trusted)
    if state.config.quantile_normalize:
        qmap = fit_quantile_map(features[t_idx])
        transformed = qmap.transform(features)
    else:
        transformed = features
    train_labels = [state.class_names[i] for i in state.labels[t_idx]]
    model = train_ova(transformed[t_idx], train_labels, state.config.gbdt)
    winner, score = model.predict_batch(transformed, score_mode=state.config.score_mode)
    to_global = np.asarray([state.class_names.index(c) for c in model.classes])
    state.scores = score
    return to_global[winner], model


def _queue(state: AnnotationState, indices: Sequence[int], charge: str) -> None:
    state.pending.extend(int(i) for i in indices)
    state.pending_charge.extend([charge] * len(indices))


def begin_from_lof(
    features: np.ndarray,
    lof_model: lof.LofModel,
    class_names: Sequence[str],
    config: AnnotateConfig | None = None,
) -> AnnotationState:
    """Start a run with a pre-fitted outlier model; queues the seed batch."""
    config = config or AnnotateConfig()
    features = np.ascontiguousarray(features, dtype=np.float64)
    n = features.shape[0]
    if lof_model.n != n:
        raise ValueError("outlier model was fitted on a different number of points")
    if len(class_names) < 2:
        raise ValueError("need at least two classes")
    budgets = plan_budgets(n, config.budget)
    state = AnnotationState(
        n_samples=n,
        class_names=tuple(class_names),
        config=config,
        rng_seed=config.seed,
        budgets=budgets,
        labels=np.full(n, -1, dtype=np.int32),
        provenance=np.zeros(n, dtype=np.int8),
        stage_of=np.full(n, -1, dtype=np.int8),
        score_at_assign=np.full(n, np.nan),
        scores=np.full(n, np.nan),
        outlier=lof_model.outlier_mask.copy(),
        rng=np.random.default_rng(config.seed),
    )
    inliers = lof.select_inliers(lof_model, budgets.inlier)
    _queue(state, inliers, "inlier")
    pool = np.setdiff1d(np.arange(n), np.asarray(inliers, dtype=np.int64))
    picks = state.rng.choice(pool, size=budgets.random, replace=False)
    _queue(state, picks, "random")
    return state


def begin_annotation(
    features: np.ndarray, class_names: Sequence[str], config: AnnotateConfig | None = None
) -> AnnotationState:
    """Fit the outlier model and start a run."""
    config = config or AnnotateConfig()
    features = np.ascontiguousarray(features, dtype=np.float64)
    lof_model = lof.fit(features, k=config.lof_k, contamination=config.contamination)
    return begin_from_lof(features, lof_model, class_names, config)


def _apply_answers(state: AnnotationState, answers: Mapping[int, int]) -> None:
    pending_pos = {idx: pos for pos, idx in enumerate(state.pending)}
    for idx, label in answers.items():
        idx = int(idx)
        if idx not in pending_pos:
            raise ValueError(f"sample {idx} is not awaiting a label")
        if not 0 <= int(label) < len(state.class_names):
            raise ValueError(f"label {label} out of range")
        if state.provenance[idx] != Provenance.NONE:
            raise ValueError(f"sample {idx} already labeled")
        charge = state.pending_charge[pending_pos[idx]]
        state.labels[idx] = int(label)
        state.provenance[idx] = Provenance.HUMAN
        state.stage_of[idx] = 0
        if charge == "inlier":
            state.budgets.inlier_used += 1
        elif charge == "random":
            state.budgets.random_used += 1
        else:
            state.budgets.query_used += 1
    keep = [p for p, idx in enumerate(state.pending) if state.provenance[idx] == Provenance.NONE]
    state.pending = [state.pending[p] for p in keep]
    state.pending_charge = [state.pending_charge[p] for p in keep]


def _advance_seeding(state: AnnotationState, features: np.ndarray) -> None:
    """Queue the next seeding batch once the current one is fully answered."""
    labeled = np.flatnonzero(state.provenance == Provenance.HUMAN)
    n_classes_seen = np.unique(state.labels[labeled]).size

    if n_classes_seen < 2:
        # Pathological seed draw: keep sampling at random until a second
        # class shows up, charging the random channel. The uncertainty
        # budget shrinks if needed so the hard cap stays intact.
        unlabeled = np.flatnonzero(state.provenance == Provenance.NONE)
        if unlabeled.size == 0:
            raise ValueError("every sample is labeled but only one class was returned")
        remaining = state.human_cap - state.budgets.human_used
        if remaining < 1:
            raise ValueError("label budget exhausted before a second class appeared")
        if remaining - state.budgets.query < 1 and state.budgets.query > 0:
            state.budgets.query -= 1
        pick = state.rng.choice(unlabeled, size=1, replace=False)
        _queue(state, pick, "random")
        return

    take = min(state.budgets.query, state.human_cap - state.budgets.human_used)
    if take > 0:
        _fit_and_score(state, features)
        unlabeled = np.flatnonzero(state.provenance == Provenance.NONE)
        order = np.lexsort((unlabeled, state.scores[unlabeled]))
        _queue(state, unlabeled[order[:take]], "query")
    else:
        state.phase = "staging"


def submit_answers(state: AnnotationState, features: np.ndarray, answers: Mapping[int, int]) -> None:
    """Record human labels for pending samples; advances the seeding plan
    when the current batch is complete."""
    if state.phase != "seeding":
        raise ValueError(f"no labels are being collected in phase {state.phase!r}")
    if not answers:
        return
    was_query = any(c == "query" for c in state.pending_charge)
    _apply_answers(state, answers)
    if state.pending:
        return
    if was_query:
        state.phase = "staging"
    else:
        _advance_seeding(state, features)
        if state.phase == "seeding" and not state.pending:
            state.phase = "staging"
    state.check_invariants()


def run_stage(state: AnnotationState, features: np.ndarray, lof_model: lof.LofModel | None = None) -> int:
    """One propagation stage: train on trusted rows, adopt confident
    non-outlier predictions. Returns the number of labels adopted.

    The outlier verdicts are carried in the state since seeding; passing
    the fitted LofModel explicitly is equivalent.
    """
    if state.phase != "staging":
        raise ValueError(f"cannot run a stage in phase {state.phase!r}")
    if state.stage >= state.config.stages:
        raise ValueError("all propagation stages have already run")
    if lof_model is not None:
        state.outlier = lof_model.outlier_mask.copy()
    predictions, _ = _fit_and_score(state, features)
    eligible = (state.provenance == Provenance.NONE) & ~state.outlier
    if state.config.gate is not None:
        eligible &= state.scores > state.config.gate
    idx = np.flatnonzero(eligible)
    state.labels[idx] = predictions[idx]
    state.provenance[idx] = Provenance.PROPAGATED
    state.stage_of[idx] = state.stage + 1
    state.score_at_assign[idx] = state.scores[idx]
    state.stage += 1
    state.check_invariants()
    return int(idx.size)


def finalize(state: AnnotationState, features: np.ndarray) -> None:
    """Unconditional final pass: every unlabeled sample (outliers
    included) takes the model's prediction."""
    if state.phase != "staging":
        raise ValueError(f"cannot finalize in phase {state.phase!r}")
    if state.stage < state.config.stages:
        raise ValueError(f"{state.config.stages - state.stage} propagation stages still pending")
    predictions, _ = _fit_and_score(state, features)
    idx = np.flatnonzero(state.provenance == Provenance.NONE)
    state.labels[idx] = predictions[idx]
    state.provenance[idx] = Provenance.FORCED
    state.stage_of[idx] = state.stage + 1
    state.score_at_assign[idx] = state.scores[idx]
    state.stage += 1
    state.phase = "finalized"
    state.check_invariants()


def seed_selection(
    features: np.ndarray,
    lof_model: lof.LofModel,
    oracle: Oracle,
    config: AnnotateConfig | None = None,
    class_names: Sequence[str] | None = None,
) -> AnnotationState:
    """Run the full seeding plan against an oracle."""
    if class_names is None:
        raise ValueError("class_names is required")
    state = begin_from_lof(features, lof_model, class_names, config)
    while state.phase == "seeding" and state.pending:
        batch = list(state.pending)
        submit_answers(state, features, dict(zip(batch, oracle(batch))))
    return state


def annotate(
    features: np.ndarray,
    class_names: Sequence[str],
    oracle: Oracle,
    config: AnnotateConfig | None = None,
) -> AnnotationState:
    """Complete annotation run: seeding, propagation stages, final pass."""
    config = config or AnnotateConfig()
    features = np.ascontiguousarray(features, dtype=np.float64)
    lof_model = lof.fit(features, k=config.lof_k, contamination=config.contamination)
    state = seed_selection(features, lof_model, oracle, config, class_names=class_names)
    while state.stage < config.stages:
        run_stage(state, features)
    finalize(state, features)
    return state


def query_extra(
    state: AnnotationState,
    features: np.ndarray,
    oracle: Oracle,
    fraction: float = 0.009,
    refit: bool = False,
) -> int:
    """Replace the weakest machine labels with fresh human answers.

    Picks floor(fraction * n) samples with the lowest final model scores
    among machine-labeled rows and asks the oracle for their labels.
    Returns how many were replaced. With refit=True the model is retrained
    afterwards and forced labels are re-predicted.
    """
    if state.phase != "finalized":
        raise ValueError("query_extra runs only after finalize")
    if fraction < 0.0:
        raise ValueError("fraction must be non-negative")
    count = int(fraction * state.n_samples)
    machine = np.flatnonzero(state.provenance != Provenance.HUMAN)
    count = min(count, machine.size)
    if count == 0:
        return 0
    order = np.lexsort((machine, state.scores[machine]))
    chosen = machine[order[:count]]
    answers = oracle([int(i) for i in chosen])
    for idx, label in zip(chosen, answers):
        if not 0 <= int(label) < len(state.class_names):
            raise ValueError(f"label {label} out of range")
        state.labels[idx] = int(label)
        state.provenance[idx] = Provenance.HUMAN
        state.score_at_assign[idx] = np.nan
    state.budgets.extra_used += int(chosen.size)
    if refit:
        predictions, _ = _fit_and_score(state, features)
        forced = np.flatnonzero(state.provenance == Provenance.FORCED)
        state.labels[forced] = predictions[forced]
        state.score_at_assign[forced] = state.scores[forced]
    state.check_invariants()
    return int(chosen.size)


def write_report(state: AnnotationState, ids: Sequence[str] | None = None) -> str:
    """Per-sample TSV report; deterministic for a given state."""
    if ids is None:
        ids = [str(i) for i in range(state.n_samples)]
    if len(ids) != state.n_samples:
        raise ValueError("one id per sample required")
    lines = ["sample_id\tlabel\tprovenance\tscore\tstage"]
    for i in range(state.n_samples):
        label = state.class_names[state.labels[i]] if state.labels[i] >= 0 else ""
        score = "" if np.isnan(state.score_at_assign[i]) else format(state.score_at_assign[i], ".9g")
        stage = "" if state.stage_of[i] < 0 else str(int(state.stage_of[i]))
        lines.append(f"{ids[i]}\t{label}\t{PROVENANCE_NAMES[Provenance(state.provenance[i])]}\t{score}\t{stage}")
    return "\n".join(lines) + "\n"


def provenance_counts(state: AnnotationState) -> dict[str, int]:
    return {
        PROVENANCE_NAMES[p]: int((state.provenance == p).sum())
        for p in Provenance
    }
