import json
import os

import pytest

from magic_coupling_studio import cli


def _example(examples_dir, name):
    return os.path.join(examples_dir, name)


def test_couplings_command(examples_dir, tmp_path, capsys):
    code = cli.main(["couplings", "--config", _example(examples_dir, "five_ion_19T.json"), "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    assert (tmp_path / "couplings_5_19.csv").exists()
    assert "J_hz" in capsys.readouterr().out


def test_gradient_flag_overrides_the_config(examples_dir, tmp_path):
    code = cli.main(["couplings", "--config", _example(examples_dir, "five_ion_150T.json"),
                     "--out", str(tmp_path), "--gradient", "19"])
    assert code == cli.EXIT_OK
    assert (tmp_path / "couplings_5_19.csv").exists()


def test_repeated_formats(examples_dir, tmp_path):
    code = cli.main(["three-body", "--config", _example(examples_dir, "five_ion_trap.json"),
                     "--out", str(tmp_path), "--format", "structured", "--format", "table", "-q"])
    assert code == cli.EXIT_OK
    with open(tmp_path / "three_body_5_150.json", encoding="utf-8") as file:
        document = json.load(file)
    assert document["J3_trap_max_hz"] > 0
    assert "stability_hierarchy" in document
    assert (tmp_path / "three_body_5_150.csv").exists()


def test_modes_direction(examples_dir, tmp_path):
    code = cli.main(["modes", "--direction", "x", "--config", _example(examples_dir, "five_ion_transversal.json"),
                     "--out", str(tmp_path)])
    assert code == cli.EXIT_OK
    assert (tmp_path / "modes_x_5_150.csv").exists()


def test_fit_command(examples_dir, tmp_path):
    code = cli.main(["fit", "--config", _example(examples_dir, "five_ion_150T.json"), "--out", str(tmp_path),
                     "--n-range", "2:12", "--column", "j2_min", "--format", "plot"])
    assert code == cli.EXIT_OK
    assert (tmp_path / "fit_j2_min_2-12_150.svg").exists()


def test_fit_space_flag(examples_dir, tmp_path):
    code = cli.main(["fit", "--config", _example(examples_dir, "five_ion_150T.json"), "--out", str(tmp_path),
                     "--n-range", "2:8", "--column", "j2_min", "--fit-space", "log", "--format", "structured"])
    assert code == cli.EXIT_OK
    with open(tmp_path / "fit_j2_min_2-8_150.json", encoding="utf-8") as file:
        assert json.load(file)["fit"]["space"] == "log"


def test_linear_log_corrected_fit_exits_with_one(examples_dir, tmp_path):
    code = cli.main(["fit", "--config", _example(examples_dir, "five_ion_150T.json"), "--out", str(tmp_path),
                     "--n-range", "2:8", "--model", "log_corrected", "--fit-space", "linear"])
    assert code == cli.EXIT_CONFIGURATION


def test_invalid_configuration_exits_with_one(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_ions": 0, "omega_z_hz": 130e3}))
    assert cli.main(["couplings", "--config", str(path), "--out", str(tmp_path)]) == cli.EXIT_CONFIGURATION


def test_missing_configuration_exits_with_one(tmp_path):
    code = cli.main(["equilibrium", "--config", str(tmp_path / "absent.json"), "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIGURATION


def test_transversal_without_radial_frequency(examples_dir, tmp_path):
    code = cli.main(["transversal", "--config", _example(examples_dir, "five_ion_150T.json"), "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIGURATION


def test_oracle_too_large_exits_with_two(examples_dir, tmp_path):
    code = cli.main(["oracle", "--config", _example(examples_dir, "three_ion_oracle.json"), "--out", str(tmp_path),
                     "--n-ions", "4"])
    assert code == cli.EXIT_NUMERICAL


def test_unwritable_output_exits_with_two(examples_dir, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    code = cli.main(["equilibrium", "--config", _example(examples_dir, "five_ion_19T.json"), "--out", str(blocker)])
    assert code == cli.EXIT_NUMERICAL


def test_small_oracle_run(examples_dir, tmp_path):
    code = cli.main(["oracle", "--config", _example(examples_dir, "three_ion_oracle.json"), "--out", str(tmp_path),
                     "--n-ions", "2", "--cutoff", "6", "--order", "2", "--format", "structured"])
    assert code == cli.EXIT_OK
    with open(tmp_path / "oracle_2_150.json", encoding="utf-8") as file:
        document = json.load(file)
    assert document["n_ions"] == 2
    assert set(document["extracted_rad_s"]) == {"Z1", "Z2", "Z1Z2"}


@pytest.mark.parametrize("argv", [
    ["sweep", "--config", "five_ion_150T.json", "--n-range", "1:80"],
    ["fit", "--config", "five_ion_150T.json", "--n-range", "2-40"],
    ["couplings"],
    ["couplings", "--config", "five_ion_150T.json", "--gradient", "strong"],
    ["spectrum", "--config", "five_ion_150T.json"],
])
def test_usage_errors_exit_with_one(examples_dir, argv, capsys):
    argv = [_example(examples_dir, a) if a.endswith(".json") else a for a in argv]
    with pytest.raises(SystemExit) as info:
        cli.main(argv)
    assert info.value.code == cli.EXIT_CONFIGURATION
    assert "error:" in capsys.readouterr().err


def test_help_still_exits_cleanly(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["--help"])
    assert info.value.code == 0
    assert "magic-studio" in capsys.readouterr().out


def test_quickstart_runs(tmp_path):
    from magic_coupling_studio.examples import quickstart
    quickstart.main(str(tmp_path))
    assert (tmp_path / "couplings_5_150.csv").exists()
    assert (tmp_path / "oracle_2_150.json").exists()
