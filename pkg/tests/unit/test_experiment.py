"""
Unit tests for experiment specs, trial functions and aggregation
"""
import math

import pytest

from asep_lab.errors import SpecError
from asep_lab.models.experiment import ExperimentKind, ExperimentSpec, Report, TrialRecord
from asep_lab.services.harness import (
    block_key, build_report, identity_trial, identity_window, speed_trial, sweep_trial, trial_indices,
)


def record(index, **values):
    base = dict(trial_index=index, master_seed=1, p=0.7, L=0, t=1.0, wall_time=0.01 * index)
    base.update(values)
    return TrialRecord(**base)


def identity_spec(**overrides):
    values = dict(kind=ExperimentKind.IDENTITY, p=0.7, t=1.0, n_trials=4, identity_I=(-1,), identity_J=(1,),
                  identity_P=0)
    values.update(overrides)
    return ExperimentSpec(**values)


class TestSpecValidation:
    """Test that malformed specs are refused before anything runs"""

    @pytest.mark.parametrize("overrides", [
        {"p": 0.5},
        {"L": -1},
        {"n_trials": 0},
        {"t": 0.0},
        {"master_seed": 2 ** 64},
        {"initial_data": "wedge"},
        {"safety": 0.5},
        {"s_grid": (1.0, -1.0, 11)},
        {"s_grid": (-1.0, 1.0, 1)},
        {"audit_stride": -1},
        {"alpha_range": (0.9, 0.8)},
    ])
    def test_speed_spec_errors(self, speed_spec, overrides):
        values = {**speed_spec.to_dict(), **overrides}
        with pytest.raises(SpecError):
            ExperimentSpec.from_dict(values).validate()

    def test_valid_spec_returns_itself(self, speed_spec):
        assert speed_spec.validate() is speed_spec

    def test_all_errors_reported_together(self):
        with pytest.raises(SpecError) as info:
            ExperimentSpec(kind=ExperimentKind.SPEED, p=0.4, n_trials=0).validate()
        assert "n_trials" in str(info.value) and "p" in str(info.value)

    @pytest.mark.parametrize("overrides", [
        {"identity_I": (0, -1)},
        {"identity_I": (1,), "identity_P": 0},
        {"identity_J": (0,)},
        {"identity_I": (), "identity_J": ()},
    ])
    def test_identity_errors(self, overrides):
        with pytest.raises(SpecError):
            identity_spec(**overrides).validate()

    def test_identity_allows_zero_time(self):
        identity_spec(t=0.0).validate()

    def test_block_errors(self):
        with pytest.raises(SpecError):
            ExperimentSpec(kind=ExperimentKind.BLOCK, p=0.7, block_s=0.5).validate()
        with pytest.raises(SpecError):
            ExperimentSpec(kind=ExperimentKind.BLOCK, p=0.7, t_grid=(10.0, -1.0)).validate()

    def test_fit_needs_single_second_class(self):
        with pytest.raises(SpecError):
            ExperimentSpec(kind=ExperimentKind.FIT_ALPHA, p=0.7).validate()
        ExperimentSpec(kind=ExperimentKind.FIT_ALPHA, p=0.7, initial_data="single_second_class").validate()

    def test_sweep_grid(self):
        base = dict(kind=ExperimentKind.ALPHA_SWEEP, initial_data="single_second_class")
        with pytest.raises(SpecError):
            ExperimentSpec(**base).validate()
        with pytest.raises(SpecError):
            ExperimentSpec(**base, p_grid=(0.7, 0.5)).validate()


class TestSpecSerialization:
    def test_round_trip(self, speed_spec):
        assert ExperimentSpec.from_dict(speed_spec.to_dict()) == speed_spec

    def test_lists_become_tuples(self):
        spec = identity_spec(identity_I=(-2, -1), identity_J=(1, 2))
        data = spec.to_dict()
        assert data["identity_I"] == [-2, -1]
        assert data["kind"] == "identity"
        assert ExperimentSpec.from_dict(data) == spec

    def test_unknown_fields(self, speed_spec):
        with pytest.raises(SpecError):
            ExperimentSpec.from_dict({**speed_spec.to_dict(), "colour": 3})

    def test_block_times(self):
        spec = ExperimentSpec(kind=ExperimentKind.BLOCK, p=0.7, t=50.0)
        assert spec.block_times == (50.0,)
        assert ExperimentSpec(kind=ExperimentKind.BLOCK, p=0.7, t_grid=(20.0, 5.0)).block_times == (5.0, 20.0)


class TestTrialIndices:
    def test_counts(self, speed_spec):
        assert trial_indices(speed_spec) == range(24)
        assert trial_indices(identity_spec()) == range(8)
        sweep = ExperimentSpec(kind=ExperimentKind.ALPHA_SWEEP, n_trials=5, p_grid=(0.8, 0.9, 1.0),
                               initial_data="single_second_class")
        assert trial_indices(sweep) == range(15)

    def test_identity_window_covers_sites(self):
        window = identity_window(identity_spec(t=0.0, identity_I=(-30,), identity_J=(40,), identity_P=5))
        assert window.lo <= -31
        assert window.hi >= 46


class TestTrialFunctions:
    """Test single trials"""

    def test_speed_trial_is_reproducible(self, speed_spec):
        first = speed_trial(speed_spec, 3)
        second = speed_trial(speed_spec, 3)
        assert first.comparable() == second.comparable()
        assert first.speed == first.position / speed_spec.t
        assert first.trial_index == 3 and first.master_seed == 7

    def test_speed_is_position_over_time(self):
        # 31 / 60 * 60 != 31 in floating point; position stays exact
        spec = ExperimentSpec(kind=ExperimentKind.SPEED, p=0.8, L=0, t=60.0, n_trials=3, master_seed=11)
        for index in range(3):
            trial = speed_trial(spec, index)
            assert isinstance(trial.position, int)
            assert trial.speed == trial.position / 60.0

    def test_trials_differ_by_index(self, speed_spec):
        records = [speed_trial(speed_spec, i) for i in range(6)]
        assert len({(r.position, r.events) for r in records}) > 1

    def test_identity_sides_at_time_zero(self):
        # at t = 0 site -1 is occupied, site 1 is empty and color 1 sits at 0
        spec = identity_spec(t=0.0, n_trials=2)
        single = identity_trial(spec, 0)
        colored = identity_trial(spec, 2)
        assert single.observables == {"side": "single", "indicator": 0}
        assert colored.observables == {"side": "colored", "indicator": 0}

    def test_identity_both_hold_at_time_zero(self):
        spec = identity_spec(t=0.0, n_trials=2, identity_I=(-2, -1), identity_J=(1,), identity_P=-1)
        assert identity_trial(spec, 1).observables["indicator"] == 1
        assert identity_trial(spec, 3).observables["indicator"] == 1

    def test_sweep_trial_uses_grid_p(self):
        spec = ExperimentSpec(kind=ExperimentKind.ALPHA_SWEEP, t=2.0, n_trials=2, p_grid=(0.8, 1.0),
                              initial_data="single_second_class")
        assert sweep_trial(spec, 1).p == 0.8
        assert sweep_trial(spec, 3).p == 1.0


class TestBuildReport:
    """Test aggregation of synthetic records"""

    def test_records_sorted_and_covered(self, speed_spec):
        spec = ExperimentSpec.from_dict({**speed_spec.to_dict(), "n_trials": 3})
        records = [record(i, speed=0.1 * i, position=i) for i in (2, 0, 1)]
        report = build_report(spec, records)
        assert [r.trial_index for r in report.records] == [0, 1, 2]
        assert report.aggregates["wall_time"] == pytest.approx(0.03)
        assert len(report.curve) == 11

    def test_missing_or_duplicate_trials(self, speed_spec):
        spec = ExperimentSpec.from_dict({**speed_spec.to_dict(), "n_trials": 3})
        with pytest.raises(SpecError):
            build_report(spec, [record(0, speed=0.0), record(1, speed=0.0)])
        with pytest.raises(SpecError):
            build_report(spec, [record(0, speed=0.0), record(1, speed=0.0), record(1, speed=0.0)])

    def test_speed_criterion(self, speed_spec):
        spec = ExperimentSpec.from_dict({**speed_spec.to_dict(), "n_trials": 3, "ks_threshold": 0.01})
        report = build_report(spec, [record(i, speed=0.9) for i in range(3)])
        assert not report.passed
        assert report.aggregates["ks"] > 0.01

    def test_default_threshold_for_uniform_law(self):
        # evenly spaced quantiles of Uniform[-1, 1] shifted by 0.06: KS = 0.005 + 0.03
        spec = ExperimentSpec(kind=ExperimentKind.SPEED, p=1.0, L=0, t=1.0, n_trials=100, s_grid=(-1.0, 1.0, 11))
        records = [record(i, p=1.0, speed=2 * (i + 0.5) / 100 - 1 + 0.06) for i in range(100)]
        report = build_report(spec, records)
        assert report.aggregates["ks"] == pytest.approx(0.035)
        assert report.aggregates["ks_threshold"] == 0.03
        assert not report.passed

        explicit = ExperimentSpec.from_dict({**spec.to_dict(), "ks_threshold": 0.04})
        assert build_report(explicit, records).passed

    def test_default_threshold_elsewhere(self):
        assert ExperimentSpec(kind=ExperimentKind.SPEED).ks_limit == 0.03
        assert ExperimentSpec(kind=ExperimentKind.SPEED, p=0.7, L=2).ks_limit == 0.04
        assert ExperimentSpec(kind=ExperimentKind.SPEED, L=1).ks_limit == 0.04
        assert ExperimentSpec(kind=ExperimentKind.SPEED, ks_threshold=0.1).ks_limit == 0.1

    def test_identity_with_zero_standard_error(self):
        spec = identity_spec(n_trials=2)
        same = [record(i, observables={"indicator": 1}) for i in range(4)]
        report = build_report(spec, same)
        assert report.aggregates["z"] == 0.0 and report.passed
        split = [record(i, observables={"indicator": int(i < 2)}) for i in range(4)]
        report = build_report(spec, split)
        assert math.isinf(report.aggregates["z"]) and not report.passed

    def test_identity_z(self):
        spec = identity_spec(n_trials=4)
        indicators = [1, 1, 0, 0, 1, 0, 0, 0]
        report = build_report(spec, [record(i, observables={"indicator": v}) for i, v in enumerate(indicators)])
        se = math.sqrt(0.25 / 4 + 0.1875 / 4)
        assert report.aggregates["p_single"] == 0.5
        assert report.aggregates["p_colored"] == 0.25
        assert report.aggregates["z"] == pytest.approx(0.25 / se)

    def test_coupling_violations(self):
        spec = ExperimentSpec(kind=ExperimentKind.COUPLING_AUDIT, p=0.7, n_trials=2)
        violation = {"kind": "projection", "time": 0.5, "event_index": 3, "trial_index": 1}
        records = [record(0, events=10, observables={"violations": 0, "violation": None, "label_swaps": 4}),
                   record(1, events=5, observables={"violations": 1, "violation": violation, "label_swaps": 1})]
        report = build_report(spec, records)
        assert report.aggregates["events_checked"] == 15
        assert report.aggregates["label_swaps"] == 5
        assert report.aggregates["first_violation"] == violation
        assert not report.passed

    def test_block_rows(self):
        spec = ExperimentSpec(kind=ExperimentKind.BLOCK, p=0.7, L=1, block_s=0.1, n_trials=5, t_grid=(1.0, 2.0),
                              block_tolerance=0.5)
        values = [(1, 0), (0, 0), (1, 1), (0, 0), (0, 0)]
        records = [record(i, observables={block_key(1.0): a, block_key(2.0): b}) for i, (a, b) in enumerate(values)]
        report = build_report(spec, records)
        rows = report.aggregates["t_grid"]
        assert [row["estimate"] for row in rows] == [0.4, 0.2]
        assert report.aggregates["target"] == pytest.approx(0.140625)
        assert report.aggregates["abs_error"] == pytest.approx(0.059375)
        assert report.passed

    def test_sweep_marks_failed_fit(self):
        spec = ExperimentSpec(kind=ExperimentKind.ALPHA_SWEEP, n_trials=3, p_grid=(0.8,),
                              initial_data="single_second_class")
        report = build_report(spec, [record(i, speed=0.1) for i in range(3)])
        assert report.aggregates["table"][0]["alpha_hat"] is None
        assert not report.passed


class TestReportComparable:
    def test_wall_time_ignored(self, speed_spec):
        spec = ExperimentSpec.from_dict({**speed_spec.to_dict(), "n_trials": 2})
        a = build_report(spec, [record(0, speed=0.1), record(1, speed=0.2)])
        b = build_report(spec, [record(1, speed=0.2, wall_time=9.0), record(0, speed=0.1, wall_time=3.0)])
        assert a.comparable() == b.comparable()
        assert a.aggregates["wall_time"] != b.aggregates["wall_time"]

    def test_summary(self, speed_spec):
        report = Report(spec=speed_spec, records=[], aggregates={"ks": 0.1}, passed=True)
        summary = report.summary()
        assert summary["n_records"] == 0
        assert summary["spec"]["kind"] == "speed"
