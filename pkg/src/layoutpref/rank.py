"""Inference-time scaling: pairwise tournaments over candidate sets,
Copeland scoring, best-of-N selection, and the scaling evaluation harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .core import Layout
from .judge import PairJudge, debias, heuristic_score
from .pairs import PreferenceLabel, PreferencePair, Verdict


class RankError(Exception):
    pass


class TournamentMode(str, Enum):
    FULL = "full"
    SWISS = "swiss"


@dataclass(frozen=True)
class Tournament:
    """All verdicts and Copeland scores of one candidate set.

    Verdict keys are (left_id, right_id) in the judged orientation; each
    unordered pair appears at most once.
    """

    candidates: tuple[str, ...]
    verdicts: dict[tuple[str, str], Verdict]
    scores: dict[str, float]
    unjudged: tuple[tuple[str, str], ...] = ()
    failures: dict[tuple[str, str], str] = field(default_factory=dict)


def _credit(label: PreferenceLabel, both_bad_half: bool) -> tuple[float, float]:
    if label is PreferenceLabel.LEFT:
        return 1.0, 0.0
    if label is PreferenceLabel.RIGHT:
        return 0.0, 1.0
    if label is PreferenceLabel.BOTH_GOOD:
        return 0.5, 0.5
    return (0.5, 0.5) if both_bad_half else (0.0, 0.0)


def _check_candidates(candidates: list[Layout]) -> None:
    if len(candidates) < 2:
        raise RankError("a tournament needs at least 2 candidates")
    ids = [c.layout_id for c in candidates]
    if len(set(ids)) != len(ids):
        raise RankError("candidate layout ids must be unique")
    id_sets = {c.element_ids for c in candidates}
    if len(id_sets) != 1:
        raise RankError("candidates must share one element-id set")


def _judge_pair(
    left: Layout,
    right: Layout,
    judge: PairJudge,
    use_debias: bool,
) -> Verdict:
    pair = PreferencePair(
        pair_id=f"t__{left.layout_id}__{right.layout_id}", left=left, right=right
    )
    return debias(pair, judge) if use_debias else judge(pair)


def run_tournament(
    candidates: list[Layout],
    judge: PairJudge,
    mode: TournamentMode = TournamentMode.FULL,
    budget: int | None = None,
    use_debias: bool = True,
    both_bad_half: bool = False,
) -> Tournament:
    """Judge candidate pairs and accumulate Copeland scores.

    Full mode judges every pair; swiss mode judges ~n*log2(n) pairs chosen
    by round-pairing on current score. A judge failure marks that pair
    unjudged (0/0) and is flagged in the result.
    """
    _check_candidates(candidates)
    by_id = {c.layout_id: c for c in candidates}
    ids = [c.layout_id for c in candidates]
    scores: dict[str, float] = {i: 0.0 for i in ids}
    verdicts: dict[tuple[str, str], Verdict] = {}
    unjudged: list[tuple[str, str]] = []
    failures: dict[tuple[str, str], str] = {}

    def judge_and_score(a: str, b: str) -> None:
        key = (a, b)
        try:
            verdict = _judge_pair(by_id[a], by_id[b], judge, use_debias)
        except Exception as exc:  # noqa: BLE001 - any judge fault voids only this pair
            unjudged.append(key)
            failures[key] = f"{type(exc).__name__}: {exc}"
            return
        verdicts[key] = verdict
        left_credit, right_credit = _credit(verdict.label, both_bad_half)
        scores[a] += left_credit
        scores[b] += right_credit

    if mode is TournamentMode.FULL:
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                judge_and_score(ids[i], ids[j])
    else:
        n = len(ids)
        remaining = budget if budget is not None else math.ceil(n * math.log2(n))
        played: set[frozenset[str]] = set()
        total_pairs = n * (n - 1) // 2
        while remaining > 0 and len(played) < total_pairs:
            ranked = sorted(ids, key=lambda i: (-scores[i], i))
            paired: set[str] = set()
            round_pairs: list[tuple[str, str]] = []
            for a in ranked:
                if a in paired:
                    continue
                for b in ranked:
                    if b == a or b in paired or frozenset((a, b)) in played:
                        continue
                    round_pairs.append((a, b))
                    paired.update((a, b))
                    break
            if not round_pairs:
                break
            for a, b in round_pairs:
                if remaining <= 0:
                    break
                played.add(frozenset((a, b)))
                judge_and_score(a, b)
                remaining -= 1

    return Tournament(
        candidates=tuple(ids),
        verdicts=verdicts,
        scores=scores,
        unjudged=tuple(unjudged),
        failures=failures,
    )


def tournament_to_dict(tournament: Tournament) -> dict:
    """Audit dump: every verdict, score, and failure of one tournament."""
    return {
        "candidates": list(tournament.candidates),
        "scores": dict(tournament.scores),
        "verdicts": [
            {
                "left": left,
                "right": right,
                "label": verdict.label.value,
                "left_score": verdict.left_score,
                "right_score": verdict.right_score,
                "swapped_label": verdict.swapped_label.value if verdict.swapped_label else None,
                "debiased": verdict.debiased,
            }
            for (left, right), verdict in tournament.verdicts.items()
        ],
        "unjudged": [list(pair) for pair in tournament.unjudged],
        "failures": {f"{a}|{b}": msg for (a, b), msg in tournament.failures.items()},
    }


def rank_candidates(candidates: list[Layout], tournament: Tournament) -> list[Layout]:
    """Order by Copeland score, then heuristic score, then layout_id."""
    by_id = {c.layout_id: c for c in candidates}
    return sorted(
        candidates,
        key=lambda c: (
            -tournament.scores[c.layout_id],
            -heuristic_score(by_id[c.layout_id]),
            c.layout_id,
        ),
    )


def best_of_n(
    candidates: list[Layout],
    judge: PairJudge,
    use_debias: bool = True,
    both_bad_half: bool = False,
) -> Layout:
    """Highest-Copeland candidate; single candidates pass through."""
    if not candidates:
        raise RankError("no candidates")
    if len(candidates) == 1:
        return candidates[0]
    tournament = run_tournament(
        candidates, judge, use_debias=use_debias, both_bad_half=both_bad_half
    )
    return rank_candidates(candidates, tournament)[0]


@dataclass(frozen=True)
class ScalingSample:
    candidates: tuple[Layout, ...]
    reference: Layout

    def __post_init__(self) -> None:
        if not self.candidates:
            raise RankError("scaling sample needs at least one candidate")


@dataclass(frozen=True)
class ScalingReport:
    baseline_win_rate: float
    scaled_win_rate: float
    n_samples: int

    @property
    def delta(self) -> float:
        return self.scaled_win_rate - self.baseline_win_rate


def scaling_eval(
    samples: list[ScalingSample],
    selection_judge: PairJudge,
    referee_judge: PairJudge,
    use_debias: bool = True,
) -> ScalingReport:
    """Win rates against references for first-candidate vs best-of-N selection.

    Baseline takes each sample's first candidate (the generator default);
    scaled takes best_of_n under the selection judge. Both are compared to
    the sample's reference by the referee judge; a win is the generated
    side being preferred outright.
    """
    if not samples:
        raise RankError("no scaling samples")

    def beats_reference(candidate: Layout, reference: Layout) -> bool:
        pair = PreferencePair(
            pair_id=f"ref__{candidate.layout_id}__{reference.layout_id}",
            left=candidate,
            right=reference,
        )
        return referee_judge(pair).label is PreferenceLabel.LEFT

    baseline_wins = 0
    scaled_wins = 0
    for sample in samples:
        baseline = sample.candidates[0]
        chosen = best_of_n(list(sample.candidates), selection_judge, use_debias=use_debias)
        if beats_reference(baseline, sample.reference):
            baseline_wins += 1
        if beats_reference(chosen, sample.reference):
            scaled_wins += 1
    n = len(samples)
    return ScalingReport(
        baseline_win_rate=100.0 * baseline_wins / n,
        scaled_win_rate=100.0 * scaled_wins / n,
        n_samples=n,
    )
