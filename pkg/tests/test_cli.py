import json

import pytest

from relu_death.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


@pytest.mark.parametrize(
    "argv, lines",
    [
        (["bounds", "--n", "2", "--k", "3", "--zero-bias"], ["lower 0.421875", "upper 0.87890625"]),
        (["bounds", "--n", "3", "--k", "1"], ["lower 0.875", "upper 1.0"]),
        (["bounds", "--conv", "--channels", "1", "--kernel", "3", "--k", "2"], ["lower 0.25", "upper 0.9990234375"]),
    ],
)
def test_bounds(capsys, argv, lines):
    code, out = run(capsys, *argv)
    assert code == EXIT_OK
    assert out.splitlines() == lines


@pytest.mark.parametrize("p, k, width", [("0.5", "1", "1"), ("0.9", "10", "7"), ("0.25", "2", "1")])
def test_width(capsys, p, k, width):
    code, out = run(capsys, "width", "--p", p, "--k", k)
    assert code == EXIT_OK
    assert out.strip() == width


def test_out_of_range_arguments_are_usage_errors(capsys):
    assert main(["width", "--p", "1.5", "--k", "3"]) == EXIT_USAGE
    assert main(["bounds", "--n", "0", "--k", "3"]) == EXIT_USAGE


def test_malformed_flags_exit_with_usage_code():
    with pytest.raises(SystemExit) as error:
        main(["bounds", "--n", "two", "--k", "3"])
    assert error.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as error:
        main(["bounds", "--conv", "--k", "3"])
    assert error.value.code == EXIT_USAGE


def test_simulate_point(capsys):
    code, out = run(capsys, "simulate", "--n", "2", "--k", "3", "--trials", "20000", "--point", "--level", "0.99")
    assert code == EXIT_OK
    assert out.startswith("point alive 0.4")
    assert "lower 0.421875" in out


@pytest.mark.parametrize("mode", ["--neuron", "--variance", "--identity", "--radius=0.5"])
def test_simulate_modes(capsys, mode):
    code, out = run(capsys, "simulate", "--n", "2", "--k", "2", "--trials", "64", "--M", "64", mode)
    assert code == EXIT_OK
    assert out


def test_grid_twice_gives_identical_tables(capsys, tmp_path):
    common = ["--trials", "16", "--M", "16", "--seed", "7", "--n", "1", "2", "--k", "1", "8"]
    assert main(["grid", *common, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["grid", *common, "--out", str(tmp_path / "b"), "--threads", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("n=2 k=8") == 2
    assert (tmp_path / "a" / "grid.csv").read_text() == (tmp_path / "b" / "grid.csv").read_text()


def test_compare_init_respects_the_flip_floor(capsys, tmp_path):
    code, _ = run(
        capsys, "compare-init", "--n", "2", "--k", "4", "--trials", "16", "--M", "64", "--out", str(tmp_path)
    )
    assert code == EXIT_OK
    text = (tmp_path / "compare-init.csv").read_text().splitlines()
    header, row = text[0].split(","), dict(zip(text[0].split(","), text[1].split(",")))
    assert "flip_min" in header
    assert float(row["flip_min"]) >= float(row["floor"]) == 4 / 64


def test_flags_override_config_file(capsys, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"kind": "path", "k_max": 3, "trials": 4, "M": 8, "p": 0.9}))
    code, out = run(capsys, "path", "--config", str(config), "--trials", "6", "--out", str(tmp_path / "run"))
    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "run" / "path.manifest.json").read_text())
    assert manifest["config"]["trials"] == 6
    assert manifest["config"]["p"] == 0.9
    assert manifest["config"]["k_max"] == 3

    # a manifest is itself a valid config
    code, _ = run(capsys, "path", "--config", str(tmp_path / "run" / "path.manifest.json"))
    assert code == EXIT_OK


def test_config_for_another_kind_is_rejected(capsys, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"kind": "grid"}))
    assert main(["path", "--config", str(config), "--out", str(tmp_path)]) == EXIT_USAGE


@pytest.mark.parametrize(
    "contents",
    [{"kind": "grid", "trials": "many"}, {"kind": "grid", "M": [8]}, {"kind": "path", "radius": 0.5}],
)
def test_malformed_config_file_is_a_usage_error(contents, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps(contents))
    assert main([contents["kind"], "--config", str(config), "--out", str(tmp_path / "run")]) == EXIT_USAGE
    assert not (tmp_path / "run").exists()


def test_missing_config_file_is_a_runtime_error(tmp_path):
    assert main(["grid", "--config", str(tmp_path / "absent.json")]) == EXIT_RUNTIME


def test_plot_from_grid_run(capsys, tmp_path):
    main(["grid", "--trials", "8", "--M", "8", "--n", "2", "--k", "1", "2", "4", "--out", str(tmp_path)])
    svg = tmp_path / "grid.svg"
    code, _ = run(
        capsys, "plot", str(tmp_path / "grid.csv"), "--x", "k", "--series", "phat", "lower", "upper",
        "--where", "n=2", "--log-x", "--out", str(svg),
    )
    assert code == EXIT_OK
    assert svg.read_text().startswith("<?xml")

    assert main(["plot", str(tmp_path / "grid.csv"), "--x", "k", "--series", "nope", "--out", str(svg)]) == EXIT_USAGE
