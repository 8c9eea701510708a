import csv
import io
import json

import numpy as np
import pytest

from selfsim.cli import CSV_HEADER, main, parse_config
from selfsim.errors import ConfigError
from selfsim.models import TREE, TreeConstants
from selfsim.netcore import DamageCase, freq_fin

from support import matches_printed


def write_config(tmp_path, obj, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj, indent=2))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


INF_TREE = {"model": "tree", "constants": {"k": 2, "b": 1}, "generations": "infinite"}
TREE_G2 = {
    "model": "tree",
    "generations": 2,
    "damage": [{"label": "k_{2,1}", "epsilon": 0.1}, {"kind": "k", "generation": 2, "branch": 2, "epsilon": 0.2}],
}
DAMAGED_INF_TREE = {**INF_TREE, "damage": [{"label": "k_{2,1}", "epsilon": 0.1}, {"label": "b_{2,1}", "epsilon": 0.2}]}


# ---------------------------------------------------------------------------
# freq


def test_freq_infinite_tree_phase(tmp_path, capsys):
    path = write_config(tmp_path, {**INF_TREE, "frequency": {"wmin": 1e-3, "wmax": 1e4, "points": 30}})
    code, out, _ = run(["freq", "--config", path], capsys)
    assert code == 0
    header, data = read_csv(out)
    assert header == CSV_HEADER
    assert data.shape == (30, 5)
    assert np.max(np.abs(data[:, 4] + 45)) < 1e-6
    assert np.allclose(data[:, 3], 20 * np.log10(np.hypot(data[:, 1], data[:, 2])))


def test_freq_finite_tree_matches_engine(tmp_path, capsys):
    cfg = {"model": "tree", "generations": 15, "damage": [{"label": "k_{3,2}", "epsilon": 0.3}],
           "frequency": {"wmin": 0.1, "wmax": 10, "points": 5}}
    code, out, _ = run(["freq", "--config", write_config(tmp_path, cfg)], capsys)
    assert code == 0
    _, data = read_csv(out)
    expected = freq_fin(TREE, DamageCase.of(TREE, ["k_{3,2}"], [0.3]), TreeConstants(), data[:, 0], 15)
    assert np.array_equal(data[:, 1] + 1j * data[:, 2], expected)


def test_freq_json_and_flag_overrides(tmp_path, capsys):
    path = write_config(tmp_path, INF_TREE)
    code, out, _ = run(["freq", "--config", path, "--format", "json", "--wmin", "1", "--wmax", "100", "--points", "3"], capsys)
    assert code == 0
    blob = json.loads(out)
    assert blob["columns"] == CSV_HEADER
    assert [r[0] for r in blob["rows"]] == pytest.approx([1, 10, 100])


def test_freq_output_is_deterministic(tmp_path, capsys):
    path = write_config(tmp_path, {**TREE_G2, "generations": 6})
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["freq", "--config", path, "--out", str(first)]) == 0
    assert main(["freq", "--config", path, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    # round-trip-safe decimals
    _, data = read_csv(first.read_text())
    assert data[:, 1] + 1j * data[:, 2] == pytest.approx(
        freq_fin(TREE, DamageCase.of(TREE, ["k_{2,1}", "k_{2,2}"], [0.1, 0.2]), TreeConstants(), data[:, 0], 6), rel=0
    )


def test_thread_count_does_not_change_output(tmp_path, capsys, monkeypatch):
    path = write_config(tmp_path, {**TREE_G2, "generations": 5})
    outputs = []
    for threads in ("1", "7"):
        monkeypatch.setenv("SELFSIM_THREADS", threads)
        code, out, _ = run(["freq", "--config", path], capsys)
        assert code == 0
        outputs.append(out)
    assert outputs[0] == outputs[1]
    monkeypatch.setenv("SELFSIM_THREADS", "many")
    assert run(["freq", "--config", path], capsys)[0] == 2


def test_single_point_grid_is_rejected(tmp_path, capsys):
    path = write_config(tmp_path, {**INF_TREE, "frequency": {"wmin": 1, "wmax": 2, "points": 1}})
    code, _, err = run(["freq", "--config", path], capsys)
    assert code == 2
    assert "frequency.points" in err and "line" in err
    code, _, err = run(["freq", "--config", write_config(tmp_path, INF_TREE, "b.json"), "--points", "1"], capsys)
    assert code == 2


def test_row_errors_continue_and_set_exit_status(tmp_path, capsys, monkeypatch):
    import selfsim.cli as cli
    from selfsim.errors import PoleEvaluationError

    real = cli.freq_inf

    def flaky(model, damage, constants, w, **kw):
        if np.any(np.isclose(w, 10.0)):
            raise PoleEvaluationError("denominator vanishes")
        return real(model, damage, constants, w, **kw)

    monkeypatch.setattr(cli, "freq_inf", flaky)
    path = write_config(tmp_path, {**INF_TREE, "frequency": {"wmin": 1, "wmax": 100, "points": 3}})
    code, out, err = run(["freq", "--config", path], capsys)
    assert code == 1
    _, data = read_csv(out)
    assert data.shape == (3, 5)
    assert np.isnan(data[1, 1]) and np.isfinite(data[0, 1]) and np.isfinite(data[2, 1])
    assert "row 1" in err


# ---------------------------------------------------------------------------
# configuration diagnostics


@pytest.mark.parametrize(
    "cfg, field",
    [
        ({"generations": 2}, "model"),
        ({"model": "lattice", "generations": 2}, "model"),
        ({"model": "tree", "generations": 0}, "generations"),
        ({"model": "tree", "generations": 2, "constants": {"r1": 1}}, "constants.r1"),
        ({"model": "tree", "generations": 2, "constants": {"k": -1}}, "constants"),
        ({"model": "tree", "generations": 2, "damage": [{"label": "k_{9,1}", "epsilon": 0.5}]}, "damage"),
        ({"model": "tree", "generations": 2, "damage": [{"label": "k_{2,1}", "epsilon": 0}]}, "damage[0].epsilon"),
        ({"model": "tree", "generations": 2, "damage": [{"label": "k_{2,5}", "epsilon": 0.5}]}, "damage[0]"),
        ({"model": "tree", "generations": 2, "frequency": {"wmin": -1}}, "frequency.wmin"),
        ({"model": "tree", "generations": 2, "colour": "red"}, "colour"),
    ],
)
def test_config_errors_name_field_and_line(cfg, field):
    text = json.dumps(cfg, indent=2)
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field
    assert info.value.line is not None


def test_config_error_line_is_accurate():
    text = '{\n  "model": "tree",\n  "generations": 2,\n  "damage": [\n    {"label": "k_{2,1}", "epsilon": -2}\n  ]\n}'
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == 5
    with pytest.raises(ConfigError) as info:
        parse_config('{\n  "model": "tree",\n  "generations": 2,\n}')
    assert info.value.line == 4


def test_config_damage_forms_agree():
    a = parse_config(json.dumps({**TREE_G2}))
    assert a.damage == DamageCase.of(TREE, ["k_{2,1}", "k_{2,2}"], [0.1, 0.2])
    assert a.constants == TreeConstants()
    assert parse_config(json.dumps(INF_TREE)).infinite


def test_missing_config_file(capsys):
    code, _, err = run(["tf", "--config", "/nonexistent/run.json"], capsys)
    assert code == 2 and "cannot read" in err


# ---------------------------------------------------------------------------
# tf


def test_tf_two_generation_tree(tmp_path, capsys):
    code, out, _ = run(["tf", "--config", write_config(tmp_path, TREE_G2)], capsys)
    assert code == 0
    tf = json.loads(out)["transfer_function"]
    assert tf["normalization"] == "den-leading-one"
    assert tf["num"]["data"] == pytest.approx([2, 4.8, 0.88], rel=1e-12)
    assert tf["den"]["data"] == pytest.approx([1, 6.6, 2.48, 0.16], rel=1e-12)


def test_tf_infinite_tree_uses_half_powers(tmp_path, capsys):
    code, out, _ = run(["tf", "--config", write_config(tmp_path, DAMAGED_INF_TREE)], capsys)
    assert code == 0
    tf = json.loads(out)["transfer_function"]
    assert tf["basis"] == tf["num"]["basis"]
    assert "1/2" in json.dumps(tf["basis"])
    den = [v for v in tf["den"]["data"] if v != 0]
    assert len(den) == 5
    for v, text in zip(den, ["1", "3.1113", "13.6", "3.3941", "2"]):
        assert matches_printed(v, text)


def test_tf_undamaged_infinite_eladder_is_bivariate(tmp_path, capsys):
    cfg = {"model": "electrical_ladder", "generations": "infinite"}
    code, out, _ = run(["tf", "--config", write_config(tmp_path, cfg)], capsys)
    assert code == 0
    tf = json.loads(out)["transfer_function"]
    assert tf["num"]["shape"] == "matrix" and tf["den"]["shape"] == "matrix"
    assert np.shape(tf["num"]["data"]) == (2, 2) and np.shape(tf["den"]["data"]) == (2, 2)
    assert len(tf["basis"]) == 2


def test_tf_warns_for_large_trees(tmp_path, capsys):
    code, _, err = run(["tf", "--config", write_config(tmp_path, {"model": "tree", "generations": 7})], capsys)
    assert code == 0
    assert "warning" in err
    code, _, err = run(["tf", "--config", write_config(tmp_path, {"model": "tree", "generations": 13})], capsys)
    assert code == 1
    assert "warning" in err and "CoefficientOverflow" in err
    assert run(["tf", "--config", write_config(tmp_path, {"model": "tree", "generations": 6})], capsys)[2] == ""
    code, _, err = run(["tf", "--config", write_config(tmp_path, {"model": "electrical_ladder", "generations": 30})], capsys)
    assert code == 0 and "warning" not in err


# ---------------------------------------------------------------------------
# delta


def test_delta_identical_configs(tmp_path, capsys):
    a = write_config(tmp_path, TREE_G2, "a.json")
    bode = tmp_path / "bode.csv"
    code, out, _ = run(["delta", "--config", a, "--config-b", a, "--bode-out", str(bode), "--points", "7"], capsys)
    assert code == 0
    delta = json.loads(out)["delta"]
    assert delta["num"]["data"] == pytest.approx(delta["den"]["data"], rel=1e-12)
    _, data = read_csv(bode.read_text())
    assert data.shape == (7, 5)
    assert np.allclose(data[:, 1], 1) and np.allclose(data[:, 2], 0, atol=1e-12)


def test_delta_damaged_infinite_tree(tmp_path, capsys):
    a = write_config(tmp_path, INF_TREE, "a.json")
    b = write_config(tmp_path, DAMAGED_INF_TREE, "b.json")
    code, out, _ = run(["delta", "--config", a, "--config-b", b], capsys)
    assert code == 0
    delta = json.loads(out)["delta"]
    assert delta["num"]["data"] == pytest.approx([1, 3.1113, 13.6, 17.2534, 2], abs=0.005)
    assert delta["den"]["data"] == pytest.approx([1, 3.1113, 13.6, 3.3941, 2], abs=0.005)


def test_delta_finite_versus_infinite_tree(tmp_path, capsys):
    a = write_config(tmp_path, INF_TREE, "a.json")
    b = write_config(tmp_path, {"model": "tree", "generations": 3}, "b.json")
    code, out, _ = run(["delta", "--config", a, "--config-b", b], capsys)
    assert code == 0
    num = [v for v in json.loads(out)["delta"]["num"]["data"] if v != 0]
    for v, text in zip(num, ["4.243", "87.68", "605.3", "1799", "2421", "1403", "271.5"]):
        assert matches_printed(v, text)


def test_delta_requires_second_config(tmp_path, capsys):
    assert run(["delta", "--config", write_config(tmp_path, INF_TREE)], capsys)[0] == 2


# ---------------------------------------------------------------------------
# zpk, approx, converge, validate


def test_zpk_single_generation(tmp_path, capsys):
    code, out, _ = run(["zpk", "--config", write_config(tmp_path, {"model": "tree", "generations": 1})], capsys)
    assert code == 0
    blob = json.loads(out)
    assert blob["poles"] == [[-2.0, 0.0]] and blob["zeros"] == []
    assert run(["zpk", "--config", write_config(tmp_path, INF_TREE, "inf.json")], capsys)[0] == 2


def test_approx_section_example(tmp_path, capsys):
    sweep = tmp_path / "sweep.csv"
    code, out, _ = run(["approx", "100", "100", "1", "5", "--sweep-out", str(sweep)], capsys)
    assert code == 0
    blob = json.loads(out)
    assert blob["r2"] == pytest.approx(24.2474, abs=1e-4)
    assert blob["c"] == pytest.approx(0.040825, abs=1e-6)
    num = blob["H_g"]["num"]["data"]
    printed = [1, 251, 2.2e4, 8.2e5, 1.1e7, 3.8e7, 2.8e7]
    assert all(abs(a - b) <= 0.05 * b for a, b in zip(num, printed))
    header, data = read_csv(sweep.read_text())
    assert header == ["omega_rad_s", "relative_error"] and data.shape == (200, 2)
    assert data[:, 1].max() == pytest.approx(blob["max_relative_error"])


def test_approx_without_solution(capsys):
    code, _, err = run(["approx", "1", "1", "1", "5"], capsys)
    assert code == 1 and "NoSolutionError" in err


def test_converge_table(tmp_path, capsys):
    path = write_config(tmp_path, {"model": "tree", "generations": "infinite", "frequency": {"wmin": 1, "wmax": 1, "points": 2}})
    code, out, _ = run(["converge", "--config", path, "--g-list", "5,10,15,inf"], capsys)
    assert code == 0
    header, data = read_csv(out)
    assert header == ["omega_rad_s", "err_g5", "err_g10", "err_g15", "err_ginf"]
    assert data[0, 1] > data[0, 2] > data[0, 3] > data[0, 4] == 0
    assert run(["converge", "--config", path, "--g-list", "5,x"], capsys)[0] == 2


def test_validate_tree(tmp_path, capsys):
    path = write_config(tmp_path, {"model": "tree", "generations": 6})
    code, out, _ = run(["validate", "--config", path, "--trials", "20"], capsys)
    assert code == 0
    assert out.count("PASS") == 20
    assert "20/20 trials within 1e-09" in out


def test_validate_failure_sets_exit_status(tmp_path, capsys):
    path = write_config(tmp_path, {"model": "tree", "generations": 4})
    code, out, _ = run(["validate", "--config", path, "--trials", "3", "--tol", "0"], capsys)
    # agreement to the last bit everywhere is not expected
    assert code == 1 and "FAIL" in out
