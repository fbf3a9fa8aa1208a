import json

import pytest

from app.cli import EXIT_BAD_INPUT, EXIT_INVALID_PROBLEM, EXIT_OK, EXIT_TASK_FAILED, SUBCOMMANDS, build_parser, main
from app.services.tasks import OPERATIONS

Q0 = {"kind": "observable", "preset": "quadrature", "theta": 0.0}
Q_HALF_PI = {"kind": "observable", "preset": "quadrature", "theta": 1.5707963267948966}


def _problem(tasks, entities=None):
    return {"version": "1.0", "entities": entities or {}, "tasks": tasks}


@pytest.fixture
def run_cli(tmp_path):
    """Write a problem file, run the CLI on it and load the report"""
    def _run(problem, *extra, command="run"):
        source = tmp_path / "problem.json"
        target = tmp_path / "report.json"
        source.write_text(problem if isinstance(problem, str) else json.dumps(problem), encoding="utf-8")
        code = main([command, "-i", str(source), "-o", str(target), *extra])
        report = json.loads(target.read_text(encoding="utf-8")) if target.exists() else None
        return code, report
    return _run


class TestExitCodes:
    def test_classify_q_function(self, run_cli):
        problem = _problem(
            [{"op": "classify", "args": {"observable": "q"}}],
            {"q": {"kind": "observable", "preset": "q_function"}},
        )
        code, report = run_cli(problem)
        assert code == EXIT_OK
        assert report["status"] == "ok"
        assert report["tasks"][0]["outputs"] == {
            "commutative": False, "sharp": False, "covariant": True, "ic": True,
        }

    def test_undefined_entity(self, run_cli):
        code, report = run_cli(_problem([{"op": "classify", "args": {"observable": "missing"}}]))
        assert code == EXIT_INVALID_PROBLEM
        assert report is None

    def test_unknown_op(self, run_cli):
        code, _ = run_cli(_problem([{"op": "teleport", "args": {}}]))
        assert code == EXIT_INVALID_PROBLEM

    def test_unsupported_version(self, run_cli):
        problem = _problem([{"op": "omega", "args": {"n_modes": 1}}])
        problem["version"] = "0.1"
        code, _ = run_cli(problem)
        assert code == EXIT_INVALID_PROBLEM

    def test_bad_json(self, run_cli):
        code, report = run_cli("{not json")
        assert code == EXIT_BAD_INPUT
        assert report is None

    def test_missing_file(self, tmp_path):
        assert main(["run", "-i", str(tmp_path / "absent.json")]) == EXIT_BAD_INPUT

    def test_unphysical_state_entity_is_an_invalid_problem(self, run_cli):
        problem = _problem(
            [{"op": "pushforward", "args": {"observable": "q", "state": "below_uncertainty_limit"}}],
            {
                "q": {"kind": "observable", "preset": "q_function"},
                "below_uncertainty_limit": {"kind": "state", "m": [0.0, 0.0], "v": [[0.5, 0.0], [0.0, 0.5]]},
            },
        )
        code, report = run_cli(problem)
        assert code == EXIT_INVALID_PROBLEM
        assert report is None

    def test_inline_channel_with_antisymmetry_violation(self, run_cli):
        channel = {"kind": "channel", "a": [[1.0, 0.0], [0.0, 1.0]], "b_re": [[0.0, 0.0], [0.0, 0.0]],
                   "b_im": [[1.0, 0.0], [0.0, 1.0]], "v": [0.0, 0.0]}
        state = {"kind": "state", "preset": "vacuum"}
        code, _ = run_cli(_problem([{"op": "apply-channel", "args": {"channel": channel, "state": state}}]))
        assert code == EXIT_INVALID_PROBLEM

    def test_validate_still_reports_unphysical_state(self, run_cli):
        problem = _problem(
            [{"op": "validate", "args": {"entity": "s"}}],
            {"s": {"kind": "state", "m": [0.0, 0.0], "v": [[0.5, 0.0], [0.0, 0.5]]}},
        )
        code, report = run_cli(problem)
        assert code == EXIT_OK
        assert report["tasks"][0]["outputs"]["valid"] is False

    def test_task_failure_writes_partial_report(self, run_cli):
        problem = _problem([
            {"op": "omega", "args": {"n_modes": 1}},
            {"op": "decompose-covariant", "args": {"observable": "q0"}},
            {"op": "omega", "args": {"n_modes": 2}},
        ], {"q0": Q0})
        code, report = run_cli(problem)
        assert code == EXIT_TASK_FAILED
        assert report["status"] == "failed"
        assert [task["index"] for task in report["tasks"]] == [0, 1]
        assert report["tasks"][1]["error"]["type"] == "NotInformationallyCompleteError"


class TestReports:
    def test_ic_set_on_two_quadratures(self, run_cli):
        problem = _problem(
            [{"op": "ic-set", "args": {"set": "pair"}}],
            {"q0": Q0, "q90": Q_HALF_PI, "pair": {"kind": "observable_set", "members": ["q0", "q90"]}},
        )
        code, report = run_cli(problem)
        assert code == EXIT_OK
        outputs = report["tasks"][0]["outputs"]
        assert outputs["ic"] is False
        assert outputs["witness"] is not None
        assert outputs["witness"]["statistics_gap"] <= 1e-10

    def test_outputs_feed_later_tasks(self, run_cli):
        problem = _problem([
            {"op": "pushforward", "args": {"observable": {"kind": "observable", "preset": "q_function"},
                                           "state": {"kind": "state", "preset": "vacuum"}},
             "output_name": "law"},
            {"op": "reconstruct", "args": {"observations": [
                {"observable": {"kind": "observable", "preset": "q_function"}, "distribution": "law"},
            ]}},
        ])
        code, report = run_cli(problem)
        assert code == EXIT_OK
        assert report["tasks"][1]["outputs"]["identifiable"] is True

    def test_same_seed_gives_identical_bytes(self, tmp_path):
        problem = _problem(
            [{"op": "sample", "args": {"observable": "q", "state": "vac", "n": 200, "include_samples": True}}],
            {"q": {"kind": "observable", "preset": "q_function"}, "vac": {"kind": "state", "preset": "vacuum"}},
        )
        source = tmp_path / "problem.json"
        source.write_text(json.dumps(problem), encoding="utf-8")
        outputs = []
        for name in ("a.json", "b.json"):
            assert main(["run", "-i", str(source), "-o", str(tmp_path / name), "--seed", "7"]) == EXIT_OK
            outputs.append((tmp_path / name).read_bytes())
        assert outputs[0] == outputs[1]

    def test_different_seed_changes_samples(self, run_cli):
        problem = _problem(
            [{"op": "sample", "args": {"observable": "q", "state": "vac", "n": 50, "include_samples": True}}],
            {"q": {"kind": "observable", "preset": "q_function"}, "vac": {"kind": "state", "preset": "vacuum"}},
        )
        _, first = run_cli(problem, "--seed", "1")
        _, second = run_cli(problem, "--seed", "2")
        assert first["tasks"][0]["outputs"]["samples"] != second["tasks"][0]["outputs"]["samples"]

    def test_every_entry_carries_timing(self, run_cli):
        problem = _problem([{"op": "omega", "args": {"n_modes": 1}}, {"op": "omega", "args": {"n_modes": 2}}])
        _, plain = run_cli(problem)
        _, timed = run_cli(problem, "--timing")
        assert [task["timing_s"] for task in plain["tasks"]] == [None, None]
        assert all(task["timing_s"] >= 0 for task in timed["tasks"])
        # apart from timing_s the two reports agree
        for task in plain["tasks"] + timed["tasks"]:
            task.pop("timing_s")
        assert plain == timed

    def test_subcommand_runs_matching_tasks_only(self, run_cli):
        problem = _problem(
            [
                {"op": "omega", "args": {"n_modes": 1}},
                {"op": "classify", "args": {"observable": "q"}},
            ],
            {"q": {"kind": "observable", "preset": "q_function"}},
        )
        code, report = run_cli(problem, command="classify")
        assert code == EXIT_OK
        assert [task["op"] for task in report["tasks"]] == ["classify"]
        assert report["tasks"][0]["index"] == 1

    def test_optical_element(self, run_cli):
        problem = _problem([
            {"op": "optical-symplectic", "args": {"element": "beam_splitter", "param": 0.785, "n_modes": 3,
                                                  "modes": [0, 2]}},
        ])
        code, report = run_cli(problem)
        assert code == EXIT_OK
        outputs = report["tasks"][0]["outputs"]
        assert outputs["symplectic"] is True
        assert len(outputs["s"]) == 6

    def test_unknown_optical_element(self, run_cli):
        problem = _problem([{"op": "optical-symplectic", "args": {"element": "mirror", "param": 0.0}}])
        code, _ = run_cli(problem)
        assert code == EXIT_INVALID_PROBLEM

    def test_channel_wire_format(self, run_cli):
        problem = _problem([
            {"op": "channel-from-obs", "args": {"observable": {"kind": "observable", "preset": "quadrature"}}},
        ])
        code, report = run_cli(problem)
        assert code == EXIT_OK
        channel = report["tasks"][0]["outputs"]["channel"]
        assert set(channel) == {"in_modes", "out_modes", "a", "b_re", "b_im", "v"}
        assert (channel["in_modes"], channel["out_modes"]) == (1, 1)

    def test_observable_wire_format(self, run_cli):
        problem = _problem([
            {"op": "obs-from-channel", "args": {"channel": {"kind": "channel", "preset": "attenuator", "eta": 0.5,
                                                            "n_modes": 2}}},
        ])
        code, report = run_cli(problem)
        assert code == EXIT_OK
        observable = report["tasks"][0]["outputs"]["observable"]
        assert set(observable) == {"n_modes", "outcome_dim", "a0", "b0", "v0"}
        assert (observable["n_modes"], observable["outcome_dim"]) == (2, 2)

    def test_channel_modes_must_match_a(self, run_cli):
        channel = {"kind": "channel", "in_modes": 2, "out_modes": 1, "a": [[1.0, 0.0], [0.0, 1.0]],
                   "b_re": [[0.0, 0.0], [0.0, 0.0]], "v": [0.0, 0.0]}
        state = {"kind": "state", "preset": "vacuum"}
        code, _ = run_cli(_problem([{"op": "apply-channel", "args": {"channel": channel, "state": state}}]))
        assert code == EXIT_INVALID_PROBLEM

    def test_stdout_output(self, tmp_path, capsys):
        source = tmp_path / "problem.json"
        source.write_text(json.dumps(_problem([{"op": "omega", "args": {"n_modes": 1}}])), encoding="utf-8")
        assert main(["run", "-i", str(source)]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["tasks"][0]["outputs"]["matrix"] == [[0.0, 1.0], [-1.0, 0.0]]


class TestDispatchTable:
    def test_every_subcommand_has_an_op(self):
        assert set(SUBCOMMANDS.values()) <= set(OPERATIONS)

    def test_library_operations_are_reachable(self):
        expected = {
            "omega", "is-symplectic", "psd-check", "williamson", "optical-symplectic", "validate",
            "weyl-transform", "transform-state", "direct-sum",
            "apply-channel", "compose-channels", "obs-from-channel", "channel-from-obs", "dilate",
            "classify", "pushforward", "characteristic-function", "postprocess", "smear",
            "marginal-direction", "decompose-covariant", "transform-covariant", "sharp-split",
            "subspace-observable", "sample",
            "ic-single", "ic-set", "span", "witness", "state-identifiable", "family-directions",
            "coverage", "reconstruct",
            "f0-eval", "bosonic-probe",
            "ladder-ops", "fock-weyl-matrix", "oracle-weyl", "oracle-pushforward", "weyl-relation", "oracle-check",
        }
        assert expected <= set(OPERATIONS)

    def test_parser_knows_every_subcommand(self):
        parser = build_parser()
        for name in ["run", *SUBCOMMANDS]:
            args = parser.parse_args([name, "-i", "x.json"])
            assert args.command == name
