import numpy as np
import pytest

from dofid.drnn import DrnnParams, IdsModel, detect
from dofid.federation import (
    FederationConfig,
    PeerSnapshot,
    acn_update,
    acnl_update,
    average_update,
    consensus_model,
    dfu_merge,
    refit_output,
    select_concurring,
)
from dofid.learning import FistaConfig, TrainSet, layer_projections, local_learn

PAPER = DrnnParams()


def random_model(rng, d=3, n_hidden=2):
    return IdsModel(
        hidden_weights=[rng.uniform(0, 0.5, size=(d + 1, d)) for _ in range(n_hidden)],
        output_weights=rng.normal(0, 1, size=(d + 1, d)),
        whiskers=rng.uniform(0, 0.5, size=d),
        theta=float(rng.uniform(0, 2)),
    )


def models_equal(a, b):
    return (
        all(np.array_equal(x, y) for x, y in zip(a.hidden_weights, b.hidden_weights))
        and np.array_equal(a.output_weights, b.output_weights)
        and np.array_equal(a.whiskers, b.whiskers)
        and a.theta == b.theta
    )


class TestFederationConfig:
    def test_defaults_valid(self):
        cfg = FederationConfig()
        assert cfg.c == 0.75 and cfg.theta_cap == 0.65

    def test_c_range_enforced(self):
        with pytest.raises(ValueError):
            FederationConfig(c=0.4)
        with pytest.raises(ValueError):
            FederationConfig(c=1.1)

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            FederationConfig(strategy="FedAvgPlus")


class TestSelectConcurring:
    def test_full_agreement_always_included(self):
        rng = np.random.default_rng(40)
        model = random_model(rng)
        xs = rng.uniform(0, 1, size=(6, 3))
        ys, _, _ = detect(xs, model, PAPER)
        peers = [PeerSnapshot(1, model)]
        assert select_concurring(xs, ys, peers, PAPER, theta_cap=1.0) == [1]

    def test_half_agreement_excluded_at_paper_threshold(self):
        # peer agreeing on 2 of 4 windows is out at the 0.65 threshold
        rng = np.random.default_rng(41)
        model = random_model(rng)
        xs = rng.uniform(0, 1, size=(4, 3))
        y_peer, _, _ = detect(xs, model, PAPER)
        ys = np.array(y_peer)
        ys[:2] = 1 - ys[:2]
        assert select_concurring(xs, ys, [PeerSnapshot(1, model)], PAPER, 0.65) == []

    def test_boundary_agreement_is_inclusive(self):
        rng = np.random.default_rng(42)
        model = random_model(rng)
        xs = rng.uniform(0, 1, size=(4, 3))
        y_peer, _, _ = detect(xs, model, PAPER)
        ys = np.array(y_peer)
        ys[0] = 1 - ys[0]  # agreement exactly 3/4
        assert select_concurring(xs, ys, [PeerSnapshot(1, model)], PAPER, 0.75) == [1]

    def test_empty_peer_set(self):
        assert select_concurring(np.ones((3, 3)) * 0.5, [0, 0, 0], [], PAPER, 0.5) == []

    def test_replay_cap_limits_history(self):
        rng = np.random.default_rng(43)
        model = random_model(rng)
        xs = rng.uniform(0, 1, size=(10, 3))
        y_peer, _, _ = detect(xs, model, PAPER)
        ys = np.array(y_peer)
        ys[:6] = 1 - ys[:6]  # disagree on the old prefix only
        assert select_concurring(xs, ys, [PeerSnapshot(1, model)], PAPER, 1.0) == []
        assert select_concurring(xs, ys, [PeerSnapshot(1, model)], PAPER, 1.0, replay_cap=4) == [1]

    def test_history_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            select_concurring(np.ones((3, 3)), [0, 0], [], PAPER, 0.5)


class TestDfuMerge:
    def test_empty_concurring_set_is_identity(self):
        rng = np.random.default_rng(44)
        local = random_model(rng)
        assert models_equal(dfu_merge(local, [], c=0.75), local)

    def test_c_equal_one_is_identity(self):
        rng = np.random.default_rng(45)
        local = random_model(rng)
        peers = [PeerSnapshot(i, random_model(rng)) for i in range(1, 4)]
        merged = dfu_merge(local, peers, c=1.0)
        assert models_equal(merged, local)

    def test_identical_peers_are_identity_for_any_c(self):
        rng = np.random.default_rng(46)
        local = random_model(rng)
        peers = [PeerSnapshot(i, local.copy()) for i in range(1, 3)]
        for c in (0.5, 0.6, 0.75, 1.0):
            assert models_equal(dfu_merge(local, peers, c=c), local)

    def test_whisker_blend_hand_value(self):
        # closest whisker to 0.6 among {0.5, 0.9} is 0.5; 0.75*0.6 + 0.25*0.5 = 0.575
        rng = np.random.default_rng(47)
        local = random_model(rng)
        local.whiskers = np.array([0.6, 0.6, 0.6])
        p1, p2 = random_model(rng), random_model(rng)
        p1.whiskers = np.array([0.5, 0.5, 0.5])
        p2.whiskers = np.array([0.9, 0.9, 0.9])
        merged = dfu_merge(local, [PeerSnapshot(1, p1), PeerSnapshot(2, p2)], c=0.75)
        assert np.allclose(merged.whiskers, 0.575)

    def test_merged_values_between_local_and_peer(self):
        rng = np.random.default_rng(48)
        for _ in range(30):
            local = random_model(rng)
            peers = [PeerSnapshot(i, random_model(rng)) for i in range(1, 4)]
            c = float(rng.uniform(0.5, 1.0))
            merged = dfu_merge(local, peers, c)
            for h, W in enumerate(merged.hidden_weights):
                lo = np.minimum.reduce([local.hidden_weights[h]] + [p.model.hidden_weights[h] for p in peers])
                hi = np.maximum.reduce([local.hidden_weights[h]] + [p.model.hidden_weights[h] for p in peers])
                assert np.all(W >= lo - 1e-12) and np.all(W <= hi + 1e-12)

    def test_output_weights_untouched(self):
        rng = np.random.default_rng(49)
        local = random_model(rng)
        peers = [PeerSnapshot(1, random_model(rng))]
        merged = dfu_merge(local, peers, c=0.75)
        assert np.array_equal(merged.output_weights, local.output_weights)

    def test_per_segment_winner_matches_exhaustive_search(self):
        rng = np.random.default_rng(50)
        for _ in range(100):
            local = random_model(rng)
            n_peers = int(rng.integers(1, 6))
            peers = [PeerSnapshot(i, random_model(rng)) for i in range(1, n_peers + 1)]
            c = 0.75
            merged = dfu_merge(local, peers, c)
            for h in range(2):
                dists = [np.abs(local.hidden_weights[h] - p.model.hidden_weights[h]).sum() for p in peers]
                best = peers[int(np.argmin(dists))]
                want = c * local.hidden_weights[h] + (1 - c) * best.model.hidden_weights[h]
                assert np.allclose(merged.hidden_weights[h], want, atol=1e-12)
            for i in range(3):
                dists = [abs(local.whiskers[i] - p.model.whiskers[i]) for p in peers]
                best = peers[int(np.argmin(dists))]
                assert merged.whiskers[i] == pytest.approx(c * local.whiskers[i] + (1 - c) * best.model.whiskers[i])
            dists = [abs(local.theta - p.model.theta) for p in peers]
            best = peers[int(np.argmin(dists))]
            assert merged.theta == pytest.approx(c * local.theta + (1 - c) * best.model.theta)

    def test_tie_breaks_to_lowest_node_id(self):
        rng = np.random.default_rng(51)
        local = random_model(rng)
        twin = random_model(rng)
        # two peers with identical distances everywhere; ids deliberately unordered
        peers = [PeerSnapshot(9, twin.copy()), PeerSnapshot(2, twin.copy())]
        winners: dict[str, int] = {}
        dfu_merge(local, peers, c=0.75, trace_winners=winners)
        assert set(winners.values()) == {2}

    def test_nonnegative_hidden_preserved(self):
        rng = np.random.default_rng(52)
        local = random_model(rng)
        peers = [PeerSnapshot(i, random_model(rng)) for i in range(1, 4)]
        merged = dfu_merge(local, peers, c=0.6)
        assert all(np.all(W >= 0) for W in merged.hidden_weights)


class TestRefitOutput:
    def test_unchanged_hidden_layers_reproduce_output(self):
        rng = np.random.default_rng(53)
        X = rng.uniform(0, 1, size=(12, 3))
        train = TrainSet(X, list(range(1, 13)))
        model = local_learn(train, PAPER, FistaConfig(), layer_projections(PAPER, (0, 0)))
        refit = refit_output(model, train, PAPER)
        assert np.allclose(refit.output_weights, model.output_weights, atol=1e-9)

    def test_refit_never_increases_training_residual(self):
        rng = np.random.default_rng(54)
        X = rng.uniform(0, 1, size=(12, 3))
        train = TrainSet(X, list(range(1, 13)))
        model = local_learn(train, PAPER, FistaConfig(), layer_projections(PAPER, (1, 0)))
        peer = local_learn(train, PAPER, FistaConfig(), layer_projections(PAPER, (2, 0)))
        merged = dfu_merge(model, [PeerSnapshot(1, peer)], c=0.6)
        stale, _, _ = _residual(merged, X)
        fresh, _, _ = _residual(refit_output(merged, train, PAPER), X)
        assert fresh <= stale + 1e-9

    def test_zero_targets_zero_output(self):
        rng = np.random.default_rng(55)
        model = random_model(rng)
        train = TrainSet(np.zeros((5, 3)), list(range(1, 6)))
        refit = refit_output(model, train, PAPER)
        assert np.allclose(refit.output_weights, 0.0)

    def test_empty_train_unchanged(self):
        rng = np.random.default_rng(56)
        model = random_model(rng)
        refit = refit_output(model, TrainSet(np.empty((0, 3)), []), PAPER)
        assert models_equal(refit, model)


def _residual(model, X):
    from dofid.drnn import drnn_forward

    x_hat = drnn_forward(X, model, PAPER)
    return float(np.linalg.norm(x_hat - X)), x_hat, X


class TestAverageUpdate:
    def test_two_nodes_meet_in_the_middle(self):
        rng = np.random.default_rng(57)
        a, b = random_model(rng), random_model(rng)
        a.hidden_weights[0][0, 0] = 1.0
        b.hidden_weights[0][0, 0] = 3.0
        out = average_update({0: a, 1: b})
        assert out[0].hidden_weights[0][0, 0] == pytest.approx(2.0)
        assert out[1].hidden_weights[0][0, 0] == pytest.approx(2.0)

    def test_consensus_is_bit_equal_across_nodes(self):
        rng = np.random.default_rng(58)
        models = {i: random_model(rng) for i in range(4)}
        out = average_update(models)
        base = out[0]
        for i in range(1, 4):
            assert all(np.array_equal(x, y) for x, y in zip(base.hidden_weights, out[i].hidden_weights))
            assert np.array_equal(base.whiskers, out[i].whiskers)
            assert base.theta == out[i].theta

    def test_idempotent_on_consensus(self):
        rng = np.random.default_rng(59)
        m = random_model(rng)
        models = {i: m.copy() for i in range(3)}
        out = average_update(models)
        again = average_update(out)
        for i in range(3):
            assert all(np.array_equal(x, y) for x, y in zip(out[i].hidden_weights, again[i].hidden_weights))
            assert out[i].theta == again[i].theta

    def test_single_node_unchanged(self):
        rng = np.random.default_rng(60)
        m = random_model(rng)
        out = average_update({0: m})
        assert models_equal(out[0], m)

    def test_consensus_model_matches_average_update(self):
        rng = np.random.default_rng(61)
        models = {i: random_model(rng) for i in range(3)}
        out = average_update(models)
        peers = [PeerSnapshot(i, models[i]) for i in (1, 2)]
        mine = consensus_model(models[0], peers, self_id=0)
        assert models_equal(mine, out[0])


class TestAcn:
    def test_single_peer_gives_midpoints(self):
        rng = np.random.default_rng(62)
        local, peer = random_model(rng), random_model(rng)
        merged = acn_update(local, [PeerSnapshot(1, peer)])
        for h in range(2):
            assert np.allclose(merged.hidden_weights[h], 0.5 * (local.hidden_weights[h] + peer.hidden_weights[h]))
        assert np.allclose(merged.whiskers, 0.5 * (local.whiskers + peer.whiskers))
        assert merged.theta == pytest.approx(0.5 * (local.theta + peer.theta))

    def test_theta_midpoint(self):
        rng = np.random.default_rng(63)
        local, peer = random_model(rng), random_model(rng)
        local.theta, peer.theta = 1.0, 3.0
        merged = acn_update(local, [PeerSnapshot(1, peer)])
        assert merged.theta == pytest.approx(2.0)

    def test_combined_winner_used_for_all_segments(self):
        # peer A is closest on theta alone, peer B wins the combined distance;
        # ACN must take B for every segment, including theta
        rng = np.random.default_rng(64)
        local = random_model(rng)
        peer_a = local.copy()
        peer_b = local.copy()
        peer_a.theta = local.theta + 0.01       # best theta, but
        peer_a.hidden_weights[0] = local.hidden_weights[0] + 1.0  # far on layer 1
        peer_b.theta = local.theta + 0.5        # worse theta, tiny elsewhere
        merged = acn_update(local, [PeerSnapshot(1, peer_a), PeerSnapshot(2, peer_b)])
        assert merged.theta == pytest.approx(local.theta + 0.25)
        assert np.allclose(merged.hidden_weights[0], local.hidden_weights[0])

    def test_no_peers_identity(self):
        rng = np.random.default_rng(65)
        local = random_model(rng)
        assert models_equal(acn_update(local, []), local)


class TestAcnL:
    def test_all_peers_identical_to_local_unchanged(self):
        rng = np.random.default_rng(66)
        local = random_model(rng)
        peers = [PeerSnapshot(i, local.copy()) for i in (1, 2)]
        assert models_equal(acnl_update(local, peers), local)

    def test_segments_can_pick_different_peers(self):
        rng = np.random.default_rng(67)
        local = random_model(rng)
        peer_a = local.copy()
        peer_b = local.copy()
        peer_a.hidden_weights[0] = local.hidden_weights[0] + 0.01  # A wins layer 1
        peer_a.whiskers = local.whiskers + 1.0
        peer_b.hidden_weights[0] = local.hidden_weights[0] + 1.0
        peer_b.whiskers = local.whiskers + 0.01                    # B wins whiskers
        merged = acnl_update(local, [PeerSnapshot(1, peer_a), PeerSnapshot(2, peer_b)])
        assert np.allclose(merged.hidden_weights[0], local.hidden_weights[0] + 0.005)
        assert np.allclose(merged.whiskers, local.whiskers + 0.005)

    def test_single_peer_equals_acn(self):
        rng = np.random.default_rng(68)
        local, peer = random_model(rng), random_model(rng)
        a = acn_update(local, [PeerSnapshot(1, peer)])
        b = acnl_update(local, [PeerSnapshot(1, peer)])
        assert models_equal(a, b)

    def test_selection_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(69)
        for _ in range(100):
            local = random_model(rng)
            n_peers = int(rng.integers(1, 6))
            peers = [PeerSnapshot(i, random_model(rng)) for i in range(1, n_peers + 1)]
            merged = acnl_update(local, peers)
            reference = dfu_merge(local, peers, c=0.5)
            assert models_equal(merged, reference)
