import math

import numpy as np
import pytest

from arwlab import arw, bup, oracle, stats
from arwlab.arw import Configuration, InstructionTape, StabilizationCapError
from arwlab.model import Params
from arwlab.rng import derive_seed


def test_all_sleep_tape_freezes_everything():
    # p = 1 makes every instruction a sleep: each lone particle stays put
    n = 12
    tape = InstructionTape(n, 1.0, 0.5, seed=3)
    config = Configuration.all_ones(n)
    out = arw.stabilize(config, Params(n=n, p=1.0, q=0.5), tape)
    assert out.sleeping == n and out.jump_count == 0
    assert config.is_stable()


def test_forced_single_jump_to_sink():
    tape = InstructionTape(1, 0.5, 0.5, seed=1)
    tape._streams[0] = [1]  # site 0's only instruction: jump to the sink
    config = Configuration.all_ones(1)
    out = arw.stabilize(config, Params(n=1, p=0.5, q=0.5), tape)
    assert out.sleeping == 0 and out.jump_count == 1 and out.sink_arrivals == 1


def test_conservation_and_stability():
    params = Params(n=30, p=0.5, q=0.2)
    for i in range(25):
        config = Configuration.all_ones(params.n)
        tape = InstructionTape(params.n, params.p, params.q, seed=derive_seed(9, i))
        out = arw.stabilize(config, params, tape, check_conservation=True,
                            track_per_site=True)
        assert out.sleeping + out.sink_arrivals == params.n
        assert out.per_site_jumps.sum() == out.jump_count
        assert config.is_stable()
        config.validate()


def test_stabilize_small_tv_against_exact_law():
    n, p, q, reps = 2, 0.5, 0.5, 3 * 10**4
    pmf = oracle.exact_final_pmf(n, p, q)
    counts = np.zeros(n + 1)
    params = Params(n=n, p=p, q=q)
    for i in range(reps):
        config = Configuration.all_ones(n)
        tape = InstructionTape(n, p, q, seed=derive_seed(1009, i))
        counts[arw.stabilize(config, params, tape).sleeping] += 1
    assert pmf.tv_distance(counts / reps) < 0.025


def test_fast_engine_tv_against_exact_law():
    n, p, q, reps = 3, 0.5, 1 / 3, 10**5
    pmf = oracle.exact_final_pmf(n, p, q)
    counts = np.zeros(n + 1)
    params = Params(n=n, p=p, q=q)
    for i in range(reps):
        out = arw.sample_stationary_S(params, rng=derive_seed(1013, i), fast=True)
        counts[out.sleeping] += 1
    assert pmf.tv_distance(counts / reps) < 0.015


def test_q1_sleeping_count_is_binomial():
    # with q = 1 each particle sleeps or exits on its first instruction
    n, reps = 20, 10**5
    params = Params(n=n, p=0.5, q=1.0)
    counts = np.zeros(n + 1)
    for i in range(reps):
        out = arw.sample_stationary_S(params, rng=derive_seed(2024, i), fast=True)
        counts[out.sleeping] += 1
    probs = np.array([math.comb(n, k) * 0.5**n for k in range(n + 1)])
    report = stats.chi_square_report(counts, probs, significance=1e-3)
    assert report.passed, report.line()
    # the tape-driven reference engine obeys the same law
    counts2 = np.zeros(n + 1)
    for i in range(2 * 10**4):
        out = arw.sample_stationary_S(params, rng=derive_seed(2025, i), fast=False)
        counts2[out.sleeping] += 1
    report2 = stats.chi_square_report(counts2, probs, significance=1e-3)
    assert report2.passed, report2.line()


def test_cap_guard_on_p1_collision():
    # two particles on one site with all-sleep instructions never stabilize
    tape = InstructionTape(2, 1.0, 0.5, seed=4)
    config = Configuration(counts=[2, 0], asleep=[False, False])
    with pytest.raises(StabilizationCapError):
        arw.stabilize(config, Params(n=2, p=1.0, q=0.5), tape, cap=1000)


def test_check_abelian_across_policies():
    policies = ["fifo", "lifo", "lowest", "highest", "random:17"]
    for i in range(100):
        tape = InstructionTape(8, 0.5, 0.3, seed=derive_seed(333, i))
        assert arw.check_abelian(8, Configuration.all_ones(8), tape, policies)


def test_check_abelian_single_site():
    tape = InstructionTape(1, 0.5, 0.5, seed=5)
    assert arw.check_abelian(1, Configuration.all_ones(1), tape, ["fifo", "lifo"])


def test_corrupted_replay_differs():
    # skipping one instruction must break the replay for some seed
    params = Params(n=8, p=0.5, q=0.3)
    broke = 0
    for i in range(20):
        tape = InstructionTape(8, 0.5, 0.3, seed=derive_seed(77, i))
        ref = Configuration.all_ones(8)
        out_ref = arw.stabilize(ref, params, tape)
        tape._streams[0] = tape._streams[0][1:]  # drop site 0's first instruction
        tape.reset_cursors()
        redo = Configuration.all_ones(8)
        out_redo = arw.stabilize(redo, params, tape)
        if redo != ref or out_redo.jump_count != out_ref.jump_count:
            broke += 1
    assert broke > 0


def test_purgatory_step0_law_is_binomial():
    n, reps = 8, 3 * 10**4
    params = Params(n=n, p=0.5, q=0.3)
    counts = np.zeros(n + 1)
    for i in range(reps):
        trace, _ = arw.stabilize_via_purgatory(params, rng=derive_seed(88, i),
                                               record_trace=True)
        y0, z0 = trace[0]
        assert z0 == 0
        counts[y0] += 1
    probs = np.array([math.comb(n, k) * 0.5**n for k in range(n + 1)])
    report = stats.chi_square_report(counts, probs, significance=1e-3)
    assert report.passed, report.line()


def test_purgatory_final_law_matches_oracle():
    n, p, q, reps = 3, 0.5, 1 / 3, 5 * 10**4
    pmf = oracle.exact_final_pmf(n, p, q)
    counts = np.zeros(n + 1)
    params = Params(n=n, p=p, q=q)
    for i in range(reps):
        _, out = arw.stabilize_via_purgatory(params, rng=derive_seed(99, i))
        counts[out.sleeping] += 1
    assert pmf.tv_distance(counts / reps) < 0.02


def test_purgatory_departures_match_direct_jump_law():
    # departures from the waiting vertex and direct jump counts share a law
    n, p, q, reps = 50, 0.5, 0.2, 10**4
    params = Params(n=n, p=p, q=q)
    purg = np.empty(reps)
    direct = np.empty(reps)
    for i in range(reps):
        _, out = arw.stabilize_via_purgatory(params, rng=derive_seed(111, i))
        purg[i] = out.steps
        direct[i] = arw.sample_stationary_S(
            params, rng=derive_seed(222, i), fast=True
        ).jump_count
    dist = stats.ks_two_sample(purg, direct)
    assert dist < stats.ks_two_sample_threshold(reps, reps, alpha=0.01)


def test_purgatory_conservation():
    params = Params(n=40, p=0.5, q=0.25)
    for i in range(50):
        _, out = arw.stabilize_via_purgatory(params, rng=derive_seed(121, i))
        assert out.sleeping + out.sink_arrivals == params.n


def test_drive_dissipate_single_step_all_sleep():
    params = Params(n=10, p=1.0, q=0.5)
    config = Configuration.empty(10)
    outcomes = arw.drive_dissipate(config, params, steps=1, rng=5)
    assert outcomes[0].sleeping == 1
    assert config.sleeping_count() == 1


def test_drive_dissipate_particle_accounting():
    params = Params(n=25, p=0.5, q=0.3)
    config = Configuration.empty(25)
    steps = 400
    arw.drive_dissipate(config, params, steps, rng=6)
    on_sites = int(config.counts.sum())
    assert on_sites == steps - config.sink_count
    assert config.is_stable()


def test_drive_dissipate_reaches_stationary_law():
    # after burn-in the driven chain's sleeping count matches direct sampling
    n, p, q = 50, 0.5, 0.1
    params = Params(n=n, p=p, q=q)
    config = Configuration.empty(n)
    arw.drive_dissipate(config, params, steps=500, rng=7)
    driven = [o.sleeping for o in arw.drive_dissipate(config, params, 10**4, rng=8)]
    direct = [
        arw.sample_stationary_S(params, rng=derive_seed(131, i), fast=True).sleeping
        for i in range(10**4)
    ]
    dist = stats.ks_two_sample(driven, direct)
    assert dist < stats.ks_two_sample_threshold(len(driven), len(direct), alpha=0.01)


def test_fast_and_tape_engines_share_law():
    n, p, q, reps = 30, 0.5, 0.25, 8000
    params = Params(n=n, p=p, q=q)
    fast = [arw.sample_stationary_S(params, rng=derive_seed(141, i), fast=True).sleeping
            for i in range(reps)]
    slow = [arw.sample_stationary_S(params, rng=derive_seed(142, i), fast=False).sleeping
            for i in range(reps)]
    assert stats.ks_two_sample(fast, slow) < stats.ks_two_sample_threshold(reps, reps)


def test_tape_serialization_roundtrip():
    tape = InstructionTape(6, 0.6, 0.3, seed=12345)
    config = Configuration.all_ones(6)
    arw.stabilize(config, Params(n=6, p=0.6, q=0.3), tape)
    data = tape.serialize()
    assert data[:4] == b"ARWT"
    clone = InstructionTape.deserialize(data, 0.6, 0.3)
    assert clone._streams == tape._streams
    assert clone.seed == tape.seed
    # lazy extension continues identically on both copies
    tape._extend(2)
    clone._extend(2)
    assert tape._streams[2] == clone._streams[2]


def test_tape_deserialize_rejects_garbage():
    with pytest.raises(ValueError):
        InstructionTape.deserialize(b"NOPE" + bytes(16), 0.5, 0.5)


def test_tape_replay_is_deterministic():
    a = InstructionTape(5, 0.4, 0.2, seed=777)
    b = InstructionTape(5, 0.4, 0.2, seed=777)
    for site in range(5):
        for _ in range(200):
            assert a.next_instruction(site) == b.next_instruction(site)


def test_configuration_validation():
    with pytest.raises(ValueError):
        Configuration(counts=[2, 0], asleep=[True, False])
    config = Configuration.all_ones(4)
    config.counts[0] += 1  # break conservation against the recorded total
    with pytest.raises(ValueError):
        config.validate()
