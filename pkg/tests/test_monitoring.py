from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import GOLDEN, logged_run, small_config
from hypothesis import given
from hypothesis import strategies as st

from rlarch.env import make_env
from rlarch.errors import InvalidFrame, InvalidRecord, RecorderClosed, RenderUnsupported, ReportError
from rlarch.monitoring import (
    Frame,
    FrameRecorder,
    LogRecord,
    MetricLogger,
    finalize_recording,
    format_record,
    format_summary,
    learning_curve,
    parse_ppm,
    ppm_bytes,
    read_log,
    record_frame,
    render,
    summarize,
)

START_ANSI = "A...\n....\n....\n...G\n"
RED_PPM = b"P6\n1 1\n255\n\xff\x00\x00"


def rec(key, value, step=0, episode=None):
    return LogRecord("r0", step, episode, key, value)


def grid_start_info():
    env = make_env("gridworld4")
    env.reset(seed=0)
    return env.render_info()


# -- logging -----------------------------------------------------------------
def test_record_line_format(tmp_path):
    path = tmp_path / "r0.log.jsonl"
    with MetricLogger(path, "r0") as log:
        log.log_value(10, None, "episode_return", 1.0)
        log.log_value(11, 0, "episode_return", 0.1)
    assert path.read_text().splitlines() == [
        '{"run_id":"r0","global_step":10,"episode":null,"key":"episode_return","value":1.0}',
        '{"run_id":"r0","global_step":11,"episode":0,"key":"episode_return","value":0.10000000000000001}',
    ]


@pytest.mark.parametrize("value", [math.nan, math.inf, -math.inf, True])
def test_non_finite_values_rejected(value):
    with pytest.raises(InvalidRecord):
        rec("x", value)


@given(st.lists(st.tuples(st.sampled_from("abc"), st.floats(-1e6, 1e6)), max_size=30), st.data())
def test_every_newline_prefix_parses(items, data):
    text = "".join(format_record(rec(k, v, i)) for i, (k, v) in enumerate(items))
    cut = data.draw(st.integers(0, len(text)))
    parsed = read_log([text[:cut]])
    assert len(parsed) == text[:cut].count("\n")
    assert [(r.key, r.value) for r in parsed] == items[: len(parsed)]


def test_malformed_line_reports_line_number():
    with pytest.raises(ReportError) as info:
        read_log([format_record(rec("a", 1.0)), "{nope}\n"])
    assert info.value.line == 2


@pytest.mark.parametrize("name", ["reinforce_seed0", "q_learning_seed0"])
def test_log_lines_match_golden(tmp_path, name):
    algo = name.rsplit("_", 1)[0]
    if algo == "reinforce":
        cfg = small_config("reinforce", stop={"max_global_steps": 4})
    else:
        cfg = small_config("q_learning", stop={"max_episodes": 2}, buffer={"capacity": 8, "batch_size": 2})
    _, data = logged_run(cfg, tmp_path / "x.log.jsonl", run_id="r0")
    assert data == (GOLDEN / f"{name}.log.jsonl").read_bytes()


# -- reporting ---------------------------------------------------------------
def test_summarize_examples():
    rows = summarize([rec("ret", 0.0), rec("ret", 1.0), rec("ret", 1.0)])
    assert rows[0].mean == pytest.approx(2 / 3) and rows[0].last == 1.0 and rows[0].count == 3
    assert summarize([]) == []
    two = summarize([rec("a", 1.0), rec("b", 5.0), rec("a", 3.0)])
    assert [(r.key, r.count, r.mean) for r in two] == [("a", 2, 2.0), ("b", 1, 5.0)]


@given(st.lists(st.tuples(st.sampled_from("xyz"), st.floats(-100, 100)), max_size=30), st.randoms())
def test_summary_ignores_interleaving_of_keys(items, random):
    # shuffle while keeping each key's own subsequence in order
    queues = {k: [v for kk, v in items if kk == k] for k in "xyz"}
    order = [k for k, _ in items]
    random.shuffle(order)
    shuffled = [(k, queues[k].pop(0)) for k in order]
    a = summarize([rec(k, v) for k, v in items])
    b = summarize([rec(k, v) for k, v in shuffled])
    assert a == b


def test_report_csv_matches_golden():
    rows = summarize(read_log(GOLDEN / "report_input.log.jsonl"))
    assert format_summary(rows, "csv").encode() == (GOLDEN / "report.csv").read_bytes()


def test_report_table_is_aligned():
    table = format_summary(summarize(read_log(GOLDEN / "report_input.log.jsonl")), "table")
    lines = table.splitlines()
    assert lines[0].split() == ["key", "count", "mean", "min", "max", "last"]
    assert len({len(line) for line in lines}) == 1


def test_learning_curve_examples():
    records = [rec("ret", v, i) for i, v in enumerate([0.0, 1.0, 1.0])]
    assert learning_curve(records, "ret", 2).values == (0.0, 0.5, 1.0)
    assert learning_curve(records, "ret", 1).values == (0.0, 1.0, 1.0)
    assert len(learning_curve(records, "missing", 3)) == 0


# -- rendering ---------------------------------------------------------------
def test_ansi_start_render():
    assert render(grid_start_info(), "ansi").payload == START_ANSI


def test_rgb_start_render():
    img = render(grid_start_info(), "rgb_array").payload
    assert img.shape == (4, 4, 3)
    assert tuple(img[0, 0]) == (255, 0, 0) and tuple(img[3, 3]) == (0, 255, 0)
    mask = np.ones((4, 4), bool)
    mask[0, 0] = mask[3, 3] = False
    assert np.all(img[mask] == 255)
    big = render(grid_start_info(), "rgb_array", scale=3).payload
    assert big.shape == (12, 12, 3) and tuple(big[2, 2]) == (255, 0, 0)


def test_bandit_is_not_renderable():
    env = make_env("bandit")
    env.reset(seed=0)
    with pytest.raises(RenderUnsupported):
        render(env.render_info(), "ansi")


def test_render_is_pure():
    info = grid_start_info()
    assert render(info, "rgb_array").to_bytes() == render(info, "rgb_array").to_bytes()


def test_red_pixel_ppm():
    assert ppm_bytes(np.array([[[255, 0, 0]]], dtype=np.uint8)) == RED_PPM


def test_recorder_naming_and_round_trip(tmp_path):
    rec_ = FrameRecorder(tmp_path)
    rng = np.random.default_rng(0)
    frames = [Frame("rgb_array", rng.integers(0, 256, (2, 3, 3), dtype=np.uint8)) for _ in range(3)]
    for f in frames:
        record_frame(rec_, f)
    paths = finalize_recording(rec_)
    assert [p.name for p in paths] == ["frame_000000.ppm", "frame_000001.ppm", "frame_000002.ppm"]
    for p, f in zip(paths, frames):
        assert np.array_equal(parse_ppm(p.read_bytes()), f.payload)
    with pytest.raises(RecorderClosed):
        rec_.finalize()


def test_recorder_rejects_mismatched_frame(tmp_path):
    rec_ = FrameRecorder(tmp_path)
    rec_.record(Frame("rgb_array", np.zeros((2, 2, 3), dtype=np.uint8)))
    with pytest.raises(InvalidFrame):
        rec_.record(Frame("rgb_array", np.zeros((3, 2, 3), dtype=np.uint8)))
    with pytest.raises(InvalidFrame):
        rec_.record(Frame("ansi", START_ANSI))


def test_evaluation_records_first_episode(tmp_path):
    from rlarch.agent import TabularParams, gridworld_model, value_iteration_oracle
    from rlarch.orchestrator import run_evaluation
    _, q = value_iteration_oracle(gridworld_model(4), 0.99)
    recorder = FrameRecorder(tmp_path / "frames")
    run_evaluation(small_config("q_learning"), TabularParams("QTable", q), 2, recorder=recorder)
    paths = recorder.finalize()
    assert len(paths) == 7  # the start plus six moves
    assert np.array_equal(parse_ppm(paths[0].read_bytes()), render(grid_start_info(), "rgb_array").payload)
