import math
import random

import pytest

from slowfast_tokenizer import (
    GroupRollouts,
    InvalidInputError,
    group_advantages,
    gspo_objective,
    sequence_ratio,
)


def rollouts_from_ratios(rewards, ratios, clip_eps=0.2, length=3):
    """A group whose per-response sequence ratios hit the given targets.

    A constant per-token shift of log(ratio) gives exactly that mean; the
    base level keeps every log-probability <= 0.
    """
    lp_old = []
    lp_new = []
    for ratio in ratios:
        shift = math.log(ratio)
        base = -1.0 - max(0.0, shift)
        lp_old.append((base,) * length)
        lp_new.append((base + shift,) * length)
    return GroupRollouts(tuple(rewards), tuple(lp_new), tuple(lp_old), clip_eps)


def test_zero_variance_rewards_give_zero_advantages():
    assert group_advantages([1.0, 1.0, 1.0]) == [0.0, 0.0, 0.0]


def test_two_member_group_standardizes_to_unit_advantages():
    assert group_advantages([1.0, 0.0]) == [1.0, -1.0]


def test_three_member_group_uses_population_std():
    advantages = group_advantages([2.0, 0.0, 1.0])
    expected = math.sqrt(3 / 2)
    assert advantages[0] == pytest.approx(expected, abs=1e-12)
    assert advantages[1] == pytest.approx(-expected, abs=1e-12)
    assert advantages[2] == pytest.approx(0.0, abs=1e-12)


def test_advantages_require_a_group():
    with pytest.raises(InvalidInputError):
        group_advantages([1.0])


def test_advantages_sum_to_zero():
    rng = random.Random(3)
    for _ in range(200):
        rewards = [rng.uniform(-5, 5) for _ in range(rng.randint(2, 16))]
        assert math.fsum(group_advantages(rewards)) == pytest.approx(0.0, abs=1e-9)


def test_advantages_invariant_to_shift_and_scale():
    rng = random.Random(5)
    for _ in range(100):
        rewards = [rng.uniform(-3, 3) for _ in range(rng.randint(2, 8))]
        base = group_advantages(rewards)
        shift = rng.uniform(-10, 10)
        scale = rng.uniform(0.1, 9.0)
        shifted = group_advantages([r + shift for r in rewards])
        scaled = group_advantages([r * scale for r in rewards])
        assert shifted == pytest.approx(base, abs=1e-9)
        assert scaled == pytest.approx(base, abs=1e-9)


def test_identical_policies_have_unit_ratio():
    lp = [-0.5, -1.25, -2.0]
    assert sequence_ratio(lp, lp) == 1.0


def test_constant_per_token_ratio_passes_through():
    lp_old = [-2.0, -3.0, -1.5]
    lp_new = [v + 1.0 for v in lp_old]
    assert sequence_ratio(lp_new, lp_old) == pytest.approx(math.e, rel=1e-12)


def test_geometric_mean_ratio_example():
    lp_old = [-3.0, -3.0]
    lp_new = [lp_old[0] + math.log(2), lp_old[1] + math.log(8)]
    assert sequence_ratio(lp_new, lp_old) == pytest.approx(4.0, rel=1e-12)


def test_ratio_rejects_mismatched_lengths():
    with pytest.raises(InvalidInputError):
        sequence_ratio([-1.0], [-1.0, -2.0])
    with pytest.raises(InvalidInputError):
        sequence_ratio([], [])


def test_ratio_is_invariant_under_token_reordering():
    rng = random.Random(7)
    for _ in range(100):
        n = rng.randint(1, 30)
        lp_old = [rng.uniform(-4, 0) for _ in range(n)]
        lp_new = [v - rng.uniform(0, 1) for v in lp_old]
        base = sequence_ratio(lp_new, lp_old)
        order = list(range(n))
        rng.shuffle(order)
        shuffled = sequence_ratio(
            [lp_new[i] for i in order], [lp_old[i] for i in order]
        )
        assert shuffled == base  # fsum makes this exact


def test_perturbing_one_token_shifts_log_ratio_by_delta_over_length():
    rng = random.Random(9)
    delta = 1e-6
    for _ in range(50):
        n = rng.randint(1, 40)
        lp_old = [rng.uniform(-4, -0.5) for _ in range(n)]
        lp_new = [v - rng.uniform(0, 0.5) for v in lp_old]
        base = math.log(sequence_ratio(lp_new, lp_old))
        bumped = list(lp_new)
        bumped[rng.randrange(n)] -= delta
        moved = math.log(sequence_ratio(bumped, lp_old))
        assert moved - base == pytest.approx(-delta / n, abs=1e-9)


def test_equal_rewards_zero_objective_regardless_of_ratios():
    rollouts = rollouts_from_ratios([2.0, 2.0, 2.0], [0.3, 1.0, 5.0])
    result = gspo_objective(rollouts)
    assert result.objective == 0.0
    assert result.clipped_terms == (0.0, 0.0, 0.0)


def test_clipped_two_member_example():
    rollouts = rollouts_from_ratios([1.0, 0.0], [1.5, 0.5], clip_eps=0.2)
    result = gspo_objective(rollouts)
    assert result.advantages == (1.0, -1.0)
    assert result.ratios == pytest.approx((1.5, 0.5), rel=1e-12)
    assert result.clipped_terms[0] == pytest.approx(1.2, abs=1e-12)
    assert result.clipped_terms[1] == pytest.approx(-0.8, abs=1e-12)
    assert result.objective == pytest.approx(0.2, abs=1e-12)


def test_interior_ratios_leave_clip_inactive():
    rollouts = rollouts_from_ratios([3.0, 1.0, 2.0], [1.1, 0.95, 1.05])
    result = gspo_objective(rollouts)
    expected = math.fsum(
        s * a for s, a in zip(result.ratios, result.advantages)
    ) / 3
    assert result.objective == pytest.approx(expected, rel=1e-12)


def test_terms_never_exceed_the_unclipped_surrogate():
    rng = random.Random(13)
    for _ in range(100):
        g = rng.randint(2, 6)
        rewards = [rng.uniform(-2, 2) for _ in range(g)]
        ratios = [math.exp(rng.uniform(-1, 1)) for _ in range(g)]
        rollouts = rollouts_from_ratios(rewards, ratios, clip_eps=0.2)
        result = gspo_objective(rollouts)
        for term, s, a in zip(
            result.clipped_terms, result.ratios, result.advantages
        ):
            clipped = min(max(s, 0.8), 1.2) * a
            assert term == min(s * a, clipped)
            assert term <= s * a + 1e-15
            assert term <= max(s * a, clipped) + 1e-15


def test_objective_invariant_under_group_permutation():
    rng = random.Random(17)
    rewards = [1.0, 0.25, -0.5, 2.0, 0.0]
    ratios = [1.4, 0.7, 1.0, 0.9, 1.2]
    base = gspo_objective(rollouts_from_ratios(rewards, ratios)).objective
    order = list(range(len(rewards)))
    for _ in range(300):
        rng.shuffle(order)
        permuted = gspo_objective(
            rollouts_from_ratios(
                [rewards[i] for i in order], [ratios[i] for i in order]
            )
        ).objective
        assert permuted == base  # fsum makes the mean order-independent


def test_rollout_validation():
    with pytest.raises(InvalidInputError, match="group size"):
        GroupRollouts((1.0,), ((-1.0,),), ((-1.0,),))
    with pytest.raises(InvalidInputError, match="lengths differ"):
        GroupRollouts((1.0, 0.0), ((-1.0,), (-1.0, -2.0)), ((-1.0,), (-1.0,)))
    with pytest.raises(InvalidInputError, match="<= 0"):
        GroupRollouts((1.0, 0.0), ((0.5,), (-1.0,)), ((-1.0,), (-1.0,)))
    with pytest.raises(InvalidInputError, match="no tokens"):
        GroupRollouts((1.0, 0.0), ((), (-1.0,)), ((), (-1.0,)))
    with pytest.raises(InvalidInputError, match="clip_eps"):
        GroupRollouts((1.0, 0.0), ((-1.0,), (-1.0,)), ((-1.0,), (-1.0,)), 0.0)
