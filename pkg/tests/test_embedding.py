# Import necessary libraries and packages
import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math
import numpy as np
import pytest

from algorithms.embedding import (
    batch_triplet_loss_grad, compatibility_scores, sample_triplets,
    softmax_loss_grad, triplet_loss_grad
)
from models.core import AttributeMatrix
from utils.exceptions import InvalidArgumentError
from utils.gradient_check import check_gradient


def random_problem(seed, n=6, d=5, k=4, c=3):
    rng = np.random.RandomState(seed)
    attrs = AttributeMatrix(tuple(range(c)), rng.rand(c, k))
    features = rng.randn(n, d)
    labels = rng.randint(0, c, size=n)
    w = rng.randn(d, k) * 0.5
    return w, features, labels, attrs


def test_compatibility_scores_examples():
    attrs = AttributeMatrix((0, 1), np.eye(2))
    assert np.array_equal(compatibility_scores(np.eye(2), np.array([1.0, 0.0]), attrs), [1.0, 0.0])
    assert np.array_equal(compatibility_scores(np.eye(2), np.zeros(2), attrs), [0.0, 0.0]), "Zero feature scores zero"

    orthonormal = AttributeMatrix((0, 1, 2), np.eye(3))
    for c in range(3):
        scores = compatibility_scores(np.eye(3), orthonormal.row(c), orthonormal)
        assert int(np.argmax(scores)) == c, f"Class {c} should match its own attribute row"


def test_compatibility_scores_rescaling_keeps_argmax():
    w, features, _, attrs = random_problem(0)
    for f in features:
        base = np.argmax(compatibility_scores(w, f, attrs))
        assert np.argmax(compatibility_scores(w, 3.7 * f, attrs)) == base


def test_compatibility_scores_dimension_mismatch():
    attrs = AttributeMatrix((0, 1), np.eye(2))
    with pytest.raises(InvalidArgumentError):
        compatibility_scores(np.eye(2), np.ones(3), attrs)
    with pytest.raises(InvalidArgumentError):
        compatibility_scores(np.ones((2, 3)), np.ones(2), attrs)


def test_softmax_loss_uniform_at_zero_projection():
    _, features, labels, attrs = random_problem(1, c=5)
    result = softmax_loss_grad(np.zeros((5, 4)), features, labels, attrs)
    assert abs(result.loss - math.log(5)) < 1e-10, f"Uniform softmax should give ln(5), got {result.loss}"


def test_softmax_loss_vanishes_for_large_gap():
    attrs = AttributeMatrix((0, 1), np.eye(2))
    result = softmax_loss_grad(np.eye(2), np.array([[50.0, 0.0]]), [0], attrs)
    assert result.loss < 1e-20


def test_softmax_loss_invariant_to_common_attribute_shift():
    w, features, labels, attrs = random_problem(2)
    shift = np.random.RandomState(3).randn(attrs.k)
    shifted = AttributeMatrix(attrs.class_ids, attrs.values + shift)
    base = softmax_loss_grad(w, features, labels, attrs).loss
    # a common row shift adds <phi_i, shift> to every class score of sample i
    assert abs(softmax_loss_grad(w, features, labels, shifted).loss - base) < 1e-10


def test_softmax_loss_rejects_unknown_label():
    w, features, _, attrs = random_problem(4)
    with pytest.raises(InvalidArgumentError):
        softmax_loss_grad(w, features, [0, 1, 2, 0, 1, 7], attrs)


@pytest.mark.parametrize("seed", range(10))
def test_softmax_gradients_match_finite_differences(seed):
    w, features, labels, attrs = random_problem(seed)
    result = softmax_loss_grad(w, features, labels, attrs)

    error_w = check_gradient(lambda x: softmax_loss_grad(x, features, labels, attrs).loss, result.grad_w, w)
    assert error_w < 1e-4, f"Seed {seed}: projection gradient error {error_w:.2e}"

    error_f = check_gradient(lambda x: softmax_loss_grad(w, x, labels, attrs).loss, result.grad_features, features)
    assert error_f < 1e-4, f"Seed {seed}: feature gradient error {error_f:.2e}"


def test_triplet_loss_examples():
    inactive = triplet_loss_grad(np.zeros(2), np.zeros(2), np.array([1.0, 1.0]), margin=1.0)
    assert inactive.loss == 0.0
    for grad in (inactive.grad_anchor, inactive.grad_positive, inactive.grad_negative):
        assert np.array_equal(grad, np.zeros(2)), "Inactive hinge has zero gradients"

    # d_pos = 1, d_neg = 0.5
    active = triplet_loss_grad(np.zeros(2), np.array([1.0, 0.0]), np.array([0.5, 0.5]), margin=1.0)
    assert abs(active.loss - 1.5) < 1e-12


def test_triplet_loss_zero_iff_negative_far_enough():
    rng = np.random.RandomState(5)
    for _ in range(100):
        a, p, n = rng.randn(3, 4)
        margin = rng.uniform(0.1, 2.0)
        d_pos, d_neg = np.sum((a - p) ** 2), np.sum((a - n) ** 2)
        loss = triplet_loss_grad(a, p, n, margin).loss
        assert loss >= 0.0
        assert (loss == 0.0) == (d_neg >= d_pos + margin)


@pytest.mark.parametrize("seed", range(10))
def test_triplet_gradient_matches_finite_differences(seed):
    rng = np.random.RandomState(seed)
    a, p, n = rng.randn(3, 4)
    margin = 100.0  # keeps the hinge active under perturbation
    result = triplet_loss_grad(a, p, n, margin)
    stacked = np.concatenate([a, p, n])

    def objective(x):
        return triplet_loss_grad(x[:4], x[4:8], x[8:], margin).loss

    analytic = np.concatenate([result.grad_anchor, result.grad_positive, result.grad_negative])
    error = check_gradient(objective, analytic, stacked)
    assert error < 1e-4, f"Seed {seed}: relative error {error:.2e}"


def test_batch_triplet_gradient_matches_finite_differences():
    rng = np.random.RandomState(6)
    lat = rng.randn(6, 3)
    triplets = [(0, 1, 2), (1, 0, 3), (2, 4, 5), (0, 1, 5)]
    _, analytic = batch_triplet_loss_grad(lat, triplets, margin=100.0)
    error = check_gradient(lambda x: batch_triplet_loss_grad(x, triplets, 100.0)[0], analytic, lat)
    assert error < 1e-4


def test_batch_triplet_loss_is_mean_of_single_losses():
    rng = np.random.RandomState(7)
    lat = rng.randn(5, 3)
    triplets = [(0, 1, 2), (3, 4, 0), (1, 0, 4)]
    loss, _ = batch_triplet_loss_grad(lat, triplets, margin=1.0)
    expected = np.mean([triplet_loss_grad(lat[a], lat[p], lat[n], 1.0).loss for a, p, n in triplets])
    assert abs(loss - expected) < 1e-12
    assert batch_triplet_loss_grad(lat, [], 1.0)[0] == 0.0


def test_sample_triplets_single_class_is_empty():
    assert sample_triplets([3, 3, 3, 3], 'random', np.random.RandomState(0)) == []


def test_sample_triplets_enumerates_valid_triples():
    triplets = sample_triplets([0, 0, 1], 'random', np.random.RandomState(0))
    assert sorted(t[0] for t in triplets) == [0, 1], "Only the two class-0 samples have a positive"
    for anchor, positive, negative in triplets:
        assert positive == 1 - anchor
        assert negative == 2


def test_sample_triplets_respects_labels_and_cap():
    rng = np.random.RandomState(8)
    labels = rng.randint(0, 4, size=40)
    triplets = sample_triplets(labels, 'random', np.random.RandomState(1), max_triplets=10)
    assert len(triplets) == 10
    for anchor, positive, negative in triplets:
        assert anchor != positive
        assert labels[anchor] == labels[positive]
        assert labels[anchor] != labels[negative]


def test_sample_triplets_is_deterministic():
    labels = np.random.RandomState(9).randint(0, 3, size=30)
    lat = np.random.RandomState(10).randn(30, 4)
    for strategy in ('random', 'semi-hard'):
        first = sample_triplets(labels, strategy, np.random.RandomState(11), lat=lat)
        second = sample_triplets(labels, strategy, np.random.RandomState(11), lat=lat)
        assert first == second, f"{strategy} sampling must be reproducible"


def test_semi_hard_picks_closest_farther_negative():
    lat = np.array([[0.0], [1.0], [0.5], [2.0], [3.0]])
    labels = [0, 0, 1, 1, 1]
    triplets = sample_triplets(labels, 'semi-hard', np.random.RandomState(0), lat=lat)
    by_anchor = {a: (p, n) for a, p, n in triplets}
    # anchor 0: d_pos 1, negatives at d 0.25, 4, 9 -> index 3
    assert by_anchor[0] == (1, 3)
    # anchor 1: d_pos 1, negatives at d 0.25, 1, 4 -> only index 4 is strictly farther
    assert by_anchor[1] == (0, 4)


def test_sample_triplets_rejects_unknown_strategy():
    with pytest.raises(InvalidArgumentError):
        sample_triplets([0, 0, 1], 'hardest', np.random.RandomState(0))
    with pytest.raises(InvalidArgumentError):
        sample_triplets([0, 0, 1], 'semi-hard', np.random.RandomState(0))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
