import io
from fractions import Fraction

import numpy as np
import pytest

from capsule_codec.controller import (
    ControllerConfig,
    ControllerState,
    Mode,
    StudyTrace,
    TraceFormatError,
    TraceRecord,
    episodes,
    full_schedule,
    missed_pathologies,
    run_trace,
    step,
    sweep,
    write_sweep_csv,
)
from capsule_codec.synth import constant_trace, study_trace
from oracles import schedule_by_hand


def test_config_validation():
    with pytest.raises(ValueError):
        ControllerConfig(2.0, 3.0, 3.6)
    with pytest.raises(ValueError):
        ControllerConfig(2.0, 0, 3.6)
    with pytest.raises(ValueError):
        ControllerConfig(2.0, 0.67, 1.0)
    assert ControllerConfig().reduced_interval == Fraction(100, 67)


def test_step_examples():
    s, iv = step(ControllerState(), 5.0)
    assert s.mode is Mode.NORMAL and iv == 0.5
    s, iv = step(ControllerState(), 2.0)
    assert s.mode is Mode.REDUCED and iv == pytest.approx(1.4925, abs=1e-4)
    s, iv = step(ControllerState(Mode.REDUCED), 3.6)
    assert s.mode is Mode.NORMAL and iv == 0.5
    assert s.next_capture_time == Fraction(1, 2)


def test_example_trace():
    tr = StudyTrace.from_crs([5, 5, 2, 2, 2, 5, 5])
    s = run_trace(tr)
    assert s.indices == [0, 1, 2, 4]
    assert s.modes == [Mode.NORMAL, Mode.NORMAL, Mode.REDUCED, Mode.REDUCED]
    assert s.skipped == 3


@pytest.mark.parametrize(
    "crs,cfg",
    [
        ([5, 5, 2, 2, 2, 5, 5], (2.0, 0.67, 3.6)),
        ([2] * 20, (2.0, 0.67, 3.6)),
        ([5, 2, 5, 2, 5, 2, 5, 2, 5, 2, 5, 2], (2.0, 0.5, 3.6)),
        ([3.5, 3.7] * 10, (2.0, 1.0, 3.6)),
        ([1.9] * 7 + [6.0] * 7 + [2.2] * 9, (3.0, 0.33, 4.0)),
    ],
)
def test_hand_oracle(crs, cfg):
    tr = StudyTrace.from_crs(crs)
    assert run_trace(tr, ControllerConfig(*cfg)).indices == schedule_by_hand(crs, *cfg)


def test_all_high_is_identity():
    tr = constant_trace(5.0, 50)
    assert run_trace(tr).indices == list(range(50))


def test_equal_rates_is_baseline(rng):
    tr = StudyTrace.from_crs(rng.uniform(1.5, 7, 100))
    assert run_trace(tr, ControllerConfig(2.0, 2.0, 3.6)).indices == full_schedule(tr).indices


def test_empty_trace_rejected():
    with pytest.raises(ValueError):
        run_trace(StudyTrace([]))


def test_recovery_is_immediate():
    tr = StudyTrace.from_crs([2, 2, 2, 2, 5, 5, 5, 5, 5, 5])
    s = run_trace(tr)
    k = next(i for i, idx in enumerate(s.indices) if tr[idx].cr >= 3.6)
    assert s.modes[k] is Mode.NORMAL
    assert s.indices[k + 1] - s.indices[k] == 1


def test_missed_examples():
    labels = ["", "p", "", "", "q", "q", "q", ""]
    tr = StudyTrace.from_crs([5] * 8, labels)
    assert episodes(tr) == [(1, 2, "p"), (4, 7, "q")]
    assert missed_pathologies(tr, full_schedule(tr)) == 0
    from capsule_codec.controller import CaptureSchedule

    sched = CaptureSchedule([0, 2, 5], trace_length=8)
    assert missed_pathologies(tr, sched) == 1


def test_trace_io(tmp_path):
    tr = StudyTrace([TraceRecord(0, 5.5, "", "good"), TraceRecord(1, 2.25, "polyp", "bubbles")])
    tr.save(tmp_path / "t.csv")
    back = StudyTrace.load(tmp_path / "t.csv")
    assert [r.cr for r in back] == [5.5, 2.25] and back[1].pathology == "polyp" and back[0].pathology == ""
    (tmp_path / "b.csv").write_text("index,cr\n0,5\n1,abc\n")
    with pytest.raises(TraceFormatError, match=":3:"):
        StudyTrace.load(tmp_path / "b.csv")
    (tmp_path / "c.csv").write_text("0,5\n2,5\n")
    with pytest.raises(TraceFormatError, match=":2:"):
        StudyTrace.load(tmp_path / "c.csv")
    (tmp_path / "d.csv").write_text("0,-1\n")
    with pytest.raises(TraceFormatError):
        StudyTrace.load(tmp_path / "d.csv")


def test_determinism():
    tr = study_trace(np.random.default_rng(1))
    assert run_trace(tr).indices == run_trace(tr).indices


def test_sweep_shape_and_csv():
    tr = study_trace(np.random.default_rng(2), n_frames=300)
    assert sweep(tr, [], [0.5]) == []
    one = sweep(tr, [3.6], [0.67])
    s = run_trace(tr)
    assert one[0].missed == missed_pathologies(tr, s) and one[0].skipped == s.skipped
    cells = sweep(tr, [3.0, 3.6, 4.2], [1.0, 0.5])
    assert [(c.threshold, c.reduced_fps) for c in cells] == [(3.0, 1.0), (3.0, 0.5), (3.6, 1.0), (3.6, 0.5), (4.2, 1.0), (4.2, 0.5)]
    buf = io.StringIO()
    write_sweep_csv(cells, buf)
    assert buf.getvalue().splitlines()[0] == "threshold,reduced_fps,missed,energy_mJ,reduction_pct"


def test_skips_monotone_in_threshold():
    for seed in range(10):
        tr = study_trace(np.random.default_rng([5, seed]), n_frames=400)
        for rf in (1.0, 0.67, 0.33):
            sk = [run_trace(tr, ControllerConfig(2.0, rf, th)).skipped for th in (3.0, 3.3, 3.6, 3.9, 4.2)]
            assert sk == sorted(sk)


def test_long_episodes_never_missed():
    for seed in range(10):
        tr = study_trace(np.random.default_rng([6, seed]), episode_len=(6, 20), pathology_episodes=15)
        assert missed_pathologies(tr, run_trace(tr)) == 0


def test_missed_not_monotone_counterexamples():
    # changing a setting shifts the sampling phase, so a single trace can
    # miss fewer episodes at a higher threshold or a lower reduced rate
    tr = StudyTrace.from_crs([3.5, 2, 2, 2], ["", "", "p", ""])
    lo, hi = (run_trace(tr, ControllerConfig(2.0, 0.67, th)) for th in (3.0, 4.0))
    assert lo.indices == [0, 1, 3] and hi.indices == [0, 2]
    assert missed_pathologies(tr, lo) == 1 > missed_pathologies(tr, hi) == 0
    tr = StudyTrace.from_crs([2, 2, 5, 2, 2], ["", "", "", "", "p"])
    fast, slow = (run_trace(tr, ControllerConfig(2.0, rf, 3.6)) for rf in (1.0, 0.5))
    assert missed_pathologies(tr, fast) == 1 > missed_pathologies(tr, slow) == 0
