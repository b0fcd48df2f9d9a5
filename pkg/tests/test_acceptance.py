"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (shown in the terminal summary and
printed immediately) before asserting, so a failing criterion still reports
the measured numbers.  Criteria 5 to 8 train models over five seeds and take
several minutes each.
"""
import fnmatch
import time

import numpy as np
import pytest

import refcodec
from conftest import ACCEPTANCE_LINES
from gradcases import ARCH_CASES, OP_CASES
from oracles import boosting_direct, gap_bruteforce
from test_cli import _pipeline
from test_ingest import SPLIT_FIXTURE, REFERENCE_GLOBS, _random_example
from mlvc import experiments as E
from mlvc import tensor as T
from mlvc.ensemble import (SampleWeights, Stacker, attention_stack_forward, boosting_update, stack_combine)
from mlvc.ingest import RecordError, decode_example, parse_record_stream, split_files, write_record_stream
from mlvc.metrics import global_average_precision

SEEDS = range(5)


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def test_criterion_01_gradients_match_finite_differences():
    start = time.time()
    worst = {}
    for name, case in {**OP_CASES, **ARCH_CASES}.items():
        worst[name] = max(T.grad_check(*case(seed), max_entries=8, seed=seed) for seed in range(20))
    elapsed = time.time() - start
    name = max(worst, key=worst.get)
    ok = worst[name] < 1e-4 and elapsed < 300
    report(1, ok, f"{len(worst)} cases x 20 seeds, worst rel. error {worst[name]:.1e} ({name}), {elapsed:.0f}s")
    assert ok, worst


def test_criterion_02_gap_matches_bruteforce_and_ignores_scale():
    start = time.time()
    rng = np.random.default_rng(2024)
    worst, scale_worst = 0.0, 0.0
    for _ in range(200):
        N, L = int(rng.integers(1, 51)), int(rng.integers(1, 31))
        pred = np.round(rng.random((N, L)), int(rng.integers(1, 5)))
        labels = rng.random((N, L)) < rng.uniform(0.05, 0.5)
        labels[rng.integers(N), rng.integers(L)] = True
        gap = global_average_precision(pred, labels)
        worst = max(worst, abs(gap - gap_bruteforce(pred, labels)))
        c = float(np.exp(rng.uniform(-6, 6)))
        scale_worst = max(scale_worst, abs(global_average_precision(pred * c, labels) - gap))
    elapsed = time.time() - start
    ok = worst <= 1e-9 and scale_worst <= 1e-9 and elapsed < 60
    report(2, ok, f"200 instances, max |diff| {worst:.1e}, scaling drift {scale_worst:.1e}, {elapsed:.0f}s")
    assert ok


def test_criterion_03_boosting_algebra():
    rng = np.random.default_rng(3)
    sum_drift, identity_drift, max_weight = 0.0, 0.0, 0.0
    for _ in range(200):
        n = int(rng.integers(2, 40))
        w = rng.uniform(0.2, 3.0, n)
        W0 = SampleWeights(w * n / w.sum())
        W1 = boosting_update(W0, rng.random(n))
        sum_drift = max(sum_drift, abs(W1.W.sum() - n))
        same = boosting_update(W0, np.full(n, rng.uniform(0.05, 0.95)))
        identity_drift = max(identity_drift, np.abs(same.W - W0.W).max())
    worked = boosting_update(SampleWeights.initial(2), [0.2, 0.6]).W
    oracle = np.array(boosting_direct([1.0, 1.0], [0.2, 0.6]))
    worked_err = max(np.abs(worked - oracle).max(), np.abs(worked - [0.9191, 1.0809]).max())
    W = SampleWeights.initial(50)
    for _ in range(1000):
        err = rng.random(50) ** rng.uniform(0.3, 4.0)
        W = boosting_update(W, err, alpha=rng.uniform(0.5, 3.0), clip=5.0)
        max_weight = max(max_weight, W.W.max())
        sum_drift = max(sum_drift, abs(W.W.sum() - 50))
    ok = sum_drift <= 1e-9 and identity_drift <= 1e-12 and worked_err <= 1e-3 and max_weight <= 5.0
    report(3, ok, f"sum drift {sum_drift:.1e}, identity drift {identity_drift:.1e}, worked case "
                  f"{np.round(worked, 4).tolist()}, max weight over 1000 rounds {max_weight:.4f}")
    assert ok


def test_criterion_04_stacking_reductions():
    rng = np.random.default_rng(4)
    agree, zero_ok, sum_worst = True, True, 0.0
    for _ in range(20):
        M, N, L, D = int(rng.integers(2, 6)), int(rng.integers(1, 30)), int(rng.integers(1, 8)), 5
        one = rng.random((N, L))
        P, feats = np.repeat(one[None], M, axis=0), rng.standard_normal((N, D))
        for mode in ("simple", "linear", "classwise", "attention"):
            s = Stacker(mode, M, L, rng, feature_dim=D if mode == "attention" else None)
            for p in s.parameters().values():
                p.values[...] = 2.0 * rng.standard_normal(p.shape)
            out = attention_stack_forward(P, feats, s) if mode == "attention" else stack_combine(P, s)
            agree &= out.tobytes() == one.tobytes()
            w = s.weights(P.transpose(1, 0, 2), feats).values
            sum_worst = max(sum_worst, np.abs(np.broadcast_to(w, (N, M, L)).sum(axis=1) - 1.0).max())
        R = rng.random((M, N, L))
        att = Stacker("attention", M, L, rng, feature_dim=D)
        for p in (att.V, att.A, att.a):
            p.values[...] = rng.standard_normal(p.shape)
        zero_ok &= attention_stack_forward(R, feats, att).tobytes() == \
            stack_combine(R, Stacker("simple", M, L)).tobytes()
    ok = agree and zero_ok and sum_worst <= 1e-9
    report(4, ok, f"identical members agree: {agree}, zeroed attention == simple: {zero_ok}, "
                  f"weight-sum error {sum_worst:.1e}")
    assert ok


@pytest.mark.slow
def test_criterion_05_chaining_beats_matched_flat_moe():
    results = [E.run_chaining(seed) for seed in SEEDS]
    summary = E.summarize(results)
    seconds = sum(r.seconds for r in results)
    ok = summary.wins >= 4 and summary.mean_delta > 0.005 and seconds < 1200
    report(5, ok, f"{summary.line('chaining vs flat MoE')}, {seconds:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_06_multi_ap_beats_vanilla_lstm():
    results = [E.run_attention(seed) for seed in SEEDS]
    summary = E.summarize(results)
    seconds = sum(r.seconds for r in results)
    ok = summary.wins >= 4 and seconds < 1200
    report(6, ok, f"{summary.line('multi-AP vs LSTM')}, {seconds:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_07_stacking_order():
    results = [E.run_stacking(seed) for seed in SEEDS]
    held = [E.stacking_order_holds(r, tolerance=0.001) for r in results]
    shown = "; ".join(f"{r.scores['simple']:.4f} <= {r.scores['classwise']:.4f} <= {r.scores['attention']:.4f}"
                      for r in results)
    ok = sum(held) >= 4
    report(7, ok, f"order held in {sum(held)}/5 seeds (simple <= classwise <= attention: {shown})")
    assert ok


@pytest.mark.slow
def test_criterion_08_distilled_student_beats_plain_student():
    results = [E.run_distillation(seed) for seed in SEEDS]
    summary = E.summarize(results)
    ok = summary.wins >= 4
    report(8, ok, f"{summary.line('distilled vs plain')}, {sum(r.seconds for r in results):.0f}s")
    assert ok


def test_criterion_09_wire_format():
    rng = np.random.default_rng(9)
    payloads = [rng.bytes(int(rng.integers(0, 300))) for _ in range(1000)]
    blob = write_record_stream(payloads)
    round_trip = parse_record_stream(blob) == payloads and blob == b"".join(map(refcodec.frame, payloads))

    small = write_record_stream([b"first", b"", b"third payload"])
    missed = 0
    for pos in range(len(small)):
        for value in range(256):
            if value == small[pos]:
                continue
            bad = bytearray(small)
            bad[pos] = value
            try:
                parse_record_stream(bytes(bad))
                missed += 1
            except RecordError:
                pass

    decoded = 0
    for k in range(100):
        frames = k % 2 == 1
        vid, labels, a, b = _random_example(rng, frames)
        if frames:
            ex = decode_example(refcodec.frame_example(vid, labels, a, b), "frame")
            same = np.array_equal(ex.rgb, -2 + 4 * a / 255) and np.array_equal(ex.audio, -2 + 4 * b / 255)
        else:
            ex = decode_example(refcodec.video_example(vid, labels, a, b), "video")
            same = np.array_equal(ex.mean_rgb, a.astype(np.float64)) and np.array_equal(ex.mean_audio, b)
        decoded += same and ex.video_id == vid and ex.labels == labels

    splits, rejects = split_files(SPLIT_FIXTURE)
    got = {s.part: sorted(s.files) for s in splits}
    split_ok = all(got[p] == sorted(n for n in SPLIT_FIXTURE if fnmatch.fnmatchcase(n, g))
                   for p, g in REFERENCE_GLOBS.items())
    ok = round_trip and missed == 0 and decoded == 100 and split_ok
    report(9, ok, f"1000-payload round trip: {round_trip}, undetected corruptions {missed}/{len(small) * 255}, "
                  f"decoded {decoded}/100, split fixture exact: {split_ok}")
    assert ok


def test_criterion_10_pipeline_is_deterministic(tmp_path):
    a, b = _pipeline(tmp_path / "a"), _pipeline(tmp_path / "b")
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    kinds = sorted({k.rsplit(".", 1)[-1] for k in a})
    ok = not differing and {"ckpt", "pred", "csv"} <= set(kinds)
    report(10, ok, f"{len(a)} artifacts ({', '.join(kinds)}) compared, {len(differing)} differ")
    assert ok, differing
