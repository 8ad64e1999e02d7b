from __future__ import annotations

import random

import pytest

from layoutpref.metrics import (
    CLASS_ORDER,
    ConfusionMatrix,
    MetricsError,
    WinRecord,
    accuracy,
    agreement_rates,
    binary_accuracy,
    cohen_kappa,
    confusion,
    evaluate,
    macro_f1,
    weighted_f1,
    win_rate,
)
from layoutpref.pairs import PreferenceLabel

L, R = PreferenceLabel.LEFT, PreferenceLabel.RIGHT
BG, BB = PreferenceLabel.BOTH_GOOD, PreferenceLabel.BOTH_BAD


# --- independent naive oracle (plain loops over the label lists) ---------------


def oracle_accuracy(preds, golds):
    return sum(1 for p, g in zip(preds, golds) if p == g) / len(golds)


def oracle_binary_accuracy(preds, golds):
    subset = [(p, g) for p, g in zip(preds, golds) if p in (L, R) and g in (L, R)]
    if not subset:
        return None, 0
    return sum(1 for p, g in subset if p == g) / len(subset), len(subset)


def oracle_f1(preds, golds, cls):
    tp = sum(1 for p, g in zip(preds, golds) if p == cls and g == cls)
    fp = sum(1 for p, g in zip(preds, golds) if p == cls and g != cls)
    fn = sum(1 for p, g in zip(preds, golds) if p != cls and g == cls)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def oracle_macro_f1(preds, golds, fixed_classes=False):
    if fixed_classes:
        present = list(CLASS_ORDER)
    else:
        present = [c for c in CLASS_ORDER if c in preds or c in golds]
    return sum(oracle_f1(preds, golds, c) for c in present) / len(present)


def oracle_weighted_f1(preds, golds):
    total = 0.0
    for cls in CLASS_ORDER:
        support = sum(1 for g in golds if g == cls)
        total += support * oracle_f1(preds, golds, cls)
    return total / len(golds)


def oracle_kappa(preds, golds):
    n = len(golds)
    p_o = oracle_accuracy(preds, golds)
    p_e = sum(
        (sum(1 for g in golds if g == c) / n) * (sum(1 for p in preds if p == c) / n)
        for c in CLASS_ORDER
    )
    if p_e == 1.0:
        return None
    return (p_o - p_e) / (1.0 - p_e)


def random_label_vector(rng, n):
    return [rng.choice(CLASS_ORDER) for _ in range(n)]


# --- tests ---------------------------------------------------------------------


class TestConfusion:
    def test_all_correct_is_diagonal(self):
        labels = [L, R, BG, BB, L]
        cm = confusion(labels, labels)
        for i in range(4):
            for j in range(4):
                if i != j:
                    assert cm.counts[i][j] == 0
        assert cm.n_total == 5

    def test_single_off_diagonal(self):
        cm = confusion([R], [L])
        assert cm.counts[cm.index(L)][cm.index(R)] == 1
        assert cm.n_total == 1

    def test_hand_built_eight_pair_tally(self):
        golds = [L, L, R, R, BG, BG, BB, BB]
        preds = [L, R, R, R, BG, BB, L, BB]
        cm = confusion(preds, golds)
        # hand tally: gold L -> pred {L:1, R:1}; gold R -> {R:2};
        # gold BG -> {BG:1, BB:1}; gold BB -> {L:1, BB:1}
        i = cm.index
        assert cm.counts[i(L)][i(L)] == 1
        assert cm.counts[i(L)][i(R)] == 1
        assert cm.counts[i(R)][i(R)] == 2
        assert cm.counts[i(BG)][i(BG)] == 1
        assert cm.counts[i(BG)][i(BB)] == 1
        assert cm.counts[i(BB)][i(L)] == 1
        assert cm.counts[i(BB)][i(BB)] == 1

    def test_length_mismatch(self):
        with pytest.raises(MetricsError):
            confusion([L], [L, R])


class TestF1Family:
    def test_perfect_predictions(self):
        labels = [L, R, BG, BB] * 3
        cm = confusion(labels, labels)
        assert accuracy(cm) == 1.0
        assert macro_f1(cm) == 1.0
        assert weighted_f1(cm) == 1.0

    def test_hand_macro_and_weighted(self):
        # gold: left x3, right x1; preds all left
        golds = [L, L, L, R]
        preds = [L, L, L, L]
        cm = confusion(preds, golds)
        assert accuracy(cm) == 0.75
        # per-class F1: left 6/7, right 0; macro over 2 present classes
        assert macro_f1(cm) == pytest.approx(3 / 7, abs=1e-12)
        assert weighted_f1(cm) == pytest.approx(0.75 * 6 / 7, abs=1e-12)
        # fixed-class mode averages over all four
        assert macro_f1(cm, fixed_classes=True) == pytest.approx((6 / 7) / 4, abs=1e-12)

    def test_macro_permutation_invariance(self):
        rng = random.Random(7)
        golds = random_label_vector(rng, 60)
        preds = random_label_vector(rng, 60)
        base = macro_f1(confusion(preds, golds))
        mapping = {L: BB, R: BG, BG: L, BB: R}
        permuted = macro_f1(
            confusion([mapping[p] for p in preds], [mapping[g] for g in golds])
        )
        assert permuted == pytest.approx(base, abs=1e-12)


class TestBinaryAccuracy:
    def test_hand_trace_of_subset_rule(self):
        golds = [L, R, BG]
        preds = [L, L, R]
        result = binary_accuracy(preds, golds)
        assert result.n_subset == 2
        assert result.value == 0.5

    def test_no_directional_entries_is_undefined(self):
        result = binary_accuracy([BB, BB], [BB, BB])
        assert result.value is None
        assert result.n_subset == 0

    def test_all_correct(self):
        result = binary_accuracy([L, R, L], [L, R, L])
        assert result.value == 1.0
        assert result.n_subset == 3


class TestCohenKappa:
    def test_perfect_agreement(self):
        cm = confusion([L, R, L, R], [L, R, L, R])
        assert cohen_kappa(cm) == 1.0

    def test_independent_two_class(self):
        cm = ConfusionMatrix(classes=(L, R), counts=((25, 25), (25, 25)))
        assert cohen_kappa(cm) == 0.0

    def test_hand_matrix_exact(self):
        # p_o = 0.7, p_e = 0.5 -> kappa = 0.4, float-exact via integer form
        cm = ConfusionMatrix(classes=(L, R), counts=((20, 5), (10, 15)))
        assert cohen_kappa(cm) == 0.4

    def test_degenerate_marginals_sentinel(self):
        cm = confusion([L, L], [L, L])
        assert cohen_kappa(cm) is None

    def test_kappa_is_one_iff_diagonal_with_two_classes(self):
        diag = ConfusionMatrix(classes=(L, R), counts=((5, 0), (0, 3)))
        assert cohen_kappa(diag) == 1.0
        off = ConfusionMatrix(classes=(L, R), counts=((5, 1), (0, 3)))
        assert cohen_kappa(off) != 1.0


class TestAgreementRates:
    def test_unanimous(self):
        rates = agreement_rates([[L, L, L], [R, R]])
        assert rates.four_class == 1.0
        assert rates.binary == 1.0

    def test_systematic_disagreement(self):
        rates = agreement_rates([[L, R], [L, R], [L, R]])
        assert rates.four_class == 0.0
        assert rates.binary == 0.0

    def test_three_annotators_one_agreeing_pair(self):
        rates = agreement_rates([[L, L, R]])
        assert rates.four_class == pytest.approx(1 / 3, abs=1e-12)
        assert rates.n_annotator_pairs == 3

    def test_binary_restriction(self):
        # pairs: (L,L) agree+binary, (L,BG) 4-class only, (L,BG) 4-class only
        rates = agreement_rates([[L, L, BG]])
        assert rates.four_class == pytest.approx(1 / 3, abs=1e-12)
        assert rates.binary == 1.0
        assert rates.n_binary_annotator_pairs == 1

    def test_no_multi_annotated_items(self):
        with pytest.raises(MetricsError):
            agreement_rates([[L]])


class TestWinRate:
    def test_paper_format_fixture(self):
        records = [WinRecord(label=L, generated_side=L) for _ in range(1427)]
        records += [WinRecord(label=R, generated_side=L) for _ in range(10000 - 1427)]
        rate = win_rate(records)
        assert f"{rate:.2f}" == "14.27"

    def test_zero_wins(self):
        assert win_rate([WinRecord(label=R, generated_side=L)] * 5) == 0.0

    def test_half_win_mode(self):
        records = [WinRecord(label=BG, generated_side=L) for _ in range(50)]
        records += [WinRecord(label=R, generated_side=L) for _ in range(50)]
        assert win_rate(records, both_good_half_win=True) == 25.0
        assert win_rate(records, both_good_half_win=False) == 0.0

    def test_generated_side_validation(self):
        with pytest.raises(MetricsError):
            WinRecord(label=L, generated_side=BG)


class TestOracleEquivalence:
    def test_matches_naive_oracle_on_random_vectors(self):
        rng = random.Random(99)
        for _ in range(300):
            n = rng.randint(1, 50)
            golds = random_label_vector(rng, n)
            preds = random_label_vector(rng, n)
            cm = confusion(preds, golds)
            assert accuracy(cm) == pytest.approx(oracle_accuracy(preds, golds), abs=1e-9)
            assert macro_f1(cm) == pytest.approx(oracle_macro_f1(preds, golds), abs=1e-9)
            assert macro_f1(cm, fixed_classes=True) == pytest.approx(
                oracle_macro_f1(preds, golds, fixed_classes=True), abs=1e-9
            )
            assert weighted_f1(cm) == pytest.approx(oracle_weighted_f1(preds, golds), abs=1e-9)
            ok = oracle_kappa(preds, golds)
            k = cohen_kappa(cm)
            if ok is None:
                assert k is None
            else:
                assert k == pytest.approx(ok, abs=1e-9)
            b = binary_accuracy(preds, golds)
            ob, on = oracle_binary_accuracy(preds, golds)
            assert b.n_subset == on
            if ob is None:
                assert b.value is None
            else:
                assert b.value == pytest.approx(ob, abs=1e-9)


class TestReport:
    def test_evaluate_bundle(self):
        golds = [L, R, BG, BB, L, R]
        preds = [L, R, BG, BB, R, R]
        report = evaluate(preds, golds)
        assert report.n_total == 6
        assert report.accuracy == pytest.approx(5 / 6)
        # directional-both indices: 0, 1, 4, 5
        assert report.n_binary_subset == 4
        assert report.binary_accuracy == pytest.approx(3 / 4)
        table = report.to_table()
        assert "Accuracy" in table and "Weighted F1" in table

    def test_report_handles_sentinels(self):
        report = evaluate([BB, BB], [BB, BB])
        assert report.binary_accuracy is None
        assert report.cohen_kappa is None
        assert "undefined" in report.to_table()
