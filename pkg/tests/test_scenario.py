import math
import warnings

import numpy as np
import pytest

from qmarket import cli, scenario
from qmarket.errors import CompletePositivityWarning, ConfigError, DimensionError
from qmarket.market_model import LindbladCoefficients
from qmarket.metrics import MetricsRecord

HEADER = "step,time,s_vn,s_shannon,p_ent,excess_kurtosis,d2_power,frob_to_maxent,trace_error,min_eigenvalue"

SMALL = """
n = 11
x_min = -1
x_max = 1
dt = 0.004
sigma = 0.4
nu_u = 0.2
nu_d = 0.2
segments = {segments}
initial = gaussian(0.2)
record_stride = 10
"""


def small(segments="50:nonclassical, 50:classical", **extra):
    text = SMALL.format(segments=segments)
    text += "".join(f"{k} = {v}\n" for k, v in extra.items())
    return scenario.parse_config(text)


# -- parsing -------------------------------------------------------------------

def test_packaged_sim1():
    cfg = scenario.packaged_config("sim1")
    assert (cfg.n, cfg.dt, cfg.sigma, cfg.nu_u, cfg.nu_d) == (101, 0.004, 0.4, 0.36, 0.36)
    assert cfg.segments == ((5000, "nonclassical"), (95000, "nonclassical"))
    assert cfg.initial == ("gaussian", 0.05)
    assert cfg.boundary_mode == "hard-wall" and cfg.record_stride == 100
    assert not cfg.type2_conjugation


def test_packaged_sim2_and_onestep():
    assert scenario.packaged_config("sim2").segments == ((5000, "nonclassical"), (95000, "classical"))
    t1 = scenario.packaged_config("onestep_type1")
    t2 = scenario.packaged_config("onestep_type2")
    assert t1.initial == ("dirac", 11) and not t1.type2_conjugation
    assert t2.type2_conjugation


def test_empty_text_names_n():
    with pytest.raises(ConfigError, match="'n'"):
        scenario.parse_config("")


@pytest.mark.parametrize(
    "line, pattern",
    [
        ("record_stride = 0", "record_stride"),
        ("colour = blue", "unknown key"),
        ("seed = abc", "malformed number"),
        ("boundary_mode = toroidal", "boundary_mode"),
        ("type2_conjugation = maybe", "boolean"),
    ],
)
def test_bad_lines_report_line_numbers(line, pattern):
    text = SMALL.format(segments="1:classical") + line + "\n"
    lineno = text.count("\n")
    with pytest.raises(ConfigError, match=pattern) as info:
        scenario.parse_config(text)
    assert info.value.line == lineno
    assert f"line {lineno}" in str(info.value)


@pytest.mark.parametrize(
    "old, new",
    [
        ("n = 11", "n = 1"),
        ("dt = 0.004", "dt = 0"),
        ("dt = 0.004", "dt = 4e-3x"),
        ("initial = gaussian(0.2)", "initial = dirac(12)"),
        ("initial = gaussian(0.2)", "initial = lorentz(1)"),
        ("x_max = 1", "x_max = -2"),
    ],
)
def test_invariants(old, new):
    with pytest.raises(ConfigError):
        scenario.parse_config(SMALL.format(segments="1:classical").replace(old, new))


def test_bad_segments():
    for seg in ("10", "10:quantum", "0:classical", "x:classical"):
        with pytest.raises(ConfigError):
            small(seg)


def test_duplicate_key_and_comments():
    with pytest.raises(ConfigError, match="duplicate"):
        scenario.parse_config(SMALL.format(segments="1:classical") + "n = 12\n")
    cfg = scenario.parse_config("# header\n" + SMALL.format(segments="3:classical  # trailing"))
    assert cfg.segments == ((3, "classical"),)


def test_classical_segment_forces_zero_nu():
    cfg = small()
    assert cfg.coefficients("classical").is_classical
    assert cfg.coefficients("nonclassical").nu_u2 == pytest.approx(0.04)


# -- running -------------------------------------------------------------------

def test_zero_segments_header_only():
    cfg = small("")
    records, summary, _ = scenario.run_scenario(cfg)
    assert records == [] and summary.total_steps == 0
    assert scenario.csv_text(records) == HEADER + "\n"


def test_rows_and_boundaries():
    cfg = small("55:nonclassical, 45:classical")
    records, summary, final = scenario.run_scenario(cfg)
    steps = [r.step for r in records]
    assert steps == [0, 10, 20, 30, 40, 50, 55, 60, 70, 80, 90, 100]
    assert summary.total_steps == 100 and summary.d2_peak_step <= 100
    assert len(summary.segment_wall_times) == 2
    assert abs(np.trace(final) - 1) < 1e-12
    assert summary.max_trace_error < 1e-12
    assert MetricsRecord.header() == HEADER.split(",")
    # min eigenvalue only on every 10th record
    filled = [i for i, r in enumerate(records) if r.min_eigenvalue is not None]
    assert filled == [0, 10]


def test_runs_are_byte_identical():
    cfg = small()
    a = scenario.csv_text(scenario.run_scenario(cfg)[0])
    b = scenario.csv_text(scenario.run_scenario(cfg)[0])
    assert a == b
    assert a.splitlines()[0] == HEADER


def test_cp_warning_only_when_violated():
    with warnings.catch_warnings():
        warnings.simplefilter("error", CompletePositivityWarning)
        scenario.run_scenario(small("5:nonclassical"))
    bad = scenario.with_overrides(small("5:nonclassical, 5:classical"), nu_u=0.36, nu_d=0.36)
    with pytest.warns(CompletePositivityWarning) as rec:
        _, summary, _ = scenario.run_scenario(bad)
    assert len(rec) == 1 and summary.cp_violations == [0]


def test_matrix_dump_roundtrip(rng):
    m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    m[0, 0] = -0.0 + 1e-300j
    text = scenario.format_matrix(m)
    back = scenario.parse_matrix(text)
    np.testing.assert_array_equal(back, m)
    assert len(text.splitlines()) == 6


def test_parse_matrix_rejects_ragged():
    with pytest.raises(DimensionError):
        scenario.parse_matrix("1+0j 0+0j\n0+0j\n")


def test_atomic_write(tmp_path):
    p = tmp_path / "sub" / "out.csv"
    scenario.atomic_write(p, "a\n")
    scenario.atomic_write(p, "b\n")
    assert p.read_text() == "b\n"
    assert [f.name for f in p.parent.iterdir()] == ["out.csv"]


# -- one-step demonstrations -----------------------------------------------------

def one_step(name, **overrides):
    cfg = scenario.with_overrides(scenario.packaged_config(name), **overrides)
    if cfg.coefficients("nonclassical").is_classical:
        return scenario.one_step_report(cfg)
    with pytest.warns(CompletePositivityWarning):
        return scenario.one_step_report(cfg)


def test_one_step_type1():
    rho = one_step("onestep_type1")
    assert rho[10, 10].real == pytest.approx(0.9968, abs=1e-15)
    nz = {(int(i), int(j)) for i, j in zip(*np.nonzero(np.abs(rho) > 0))}
    diag = {(9, 9), (10, 10), (11, 11)}
    second = {(8, 10), (10, 12), (10, 8), (12, 10), (9, 11), (11, 9)}
    assert nz == diag | second


def test_one_step_type2_smaller_offcenter():
    r1 = one_step("onestep_type1")
    r2 = one_step("onestep_type2")

    def max_off_center(r):
        a = np.abs(r).copy()
        a[10, 10] = 0
        return a.max()

    assert max_off_center(r2) < max_off_center(r1)
    assert np.count_nonzero(np.abs(r2) > 1e-15) > 9
    assert abs(np.trace(r2) - 1) < 1e-12


def test_one_step_classical_is_diagonal():
    rho = one_step("onestep_type1", nu_u=0.0, nu_d=0.0)
    assert not np.any(rho - np.diag(np.diagonal(rho)))


def test_one_step_rejects_multi_step():
    with pytest.raises(ConfigError):
        scenario.one_step_report(small("2:nonclassical"))
    with pytest.raises(ConfigError):
        scenario.one_step_report(small("1:nonclassical, 1:classical"))


# -- oracle --------------------------------------------------------------------

CP_OK = LindbladCoefficients.from_rates(0.4, 0.2, 0.2)


def test_oracle_first_order():
    rows = scenario.oracle_check(5, CP_OK, 1.0, [0.01, 0.005, 0.0025, 0.00125])
    assert rows[0].ratio is None
    for r in rows[1:]:
        assert r.ratio == pytest.approx(2.0, abs=0.2)
        assert r.order == pytest.approx(1.0, abs=0.15)


def test_oracle_zero_time():
    rows = scenario.oracle_check(5, CP_OK, 0.0, [0.01, 0.005])
    assert all(r.max_error == 0.0 and r.steps == 0 for r in rows)


def test_oracle_stationary_periodic():
    rows = scenario.oracle_check(6, CP_OK, 1.0, [0.01, 0.005], rho0=np.eye(6) / 6, boundary_mode="periodic")
    assert all(r.max_error < 1e-12 for r in rows)


def test_oracle_dimension_limit():
    with pytest.raises(DimensionError):
        scenario.oracle_check(13, CP_OK, 1.0, [0.1])


# -- command line ----------------------------------------------------------------

def write_cfg(tmp_path, body):
    p = tmp_path / "s.cfg"
    p.write_text(body)
    return p


def test_cli_run_writes_csv_and_dump(tmp_path):
    cfg = write_cfg(tmp_path, SMALL.format(segments="20:nonclassical"))
    out = tmp_path / "out.csv"
    assert cli.main(["run", str(cfg), "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == HEADER and len(lines) == 1 + 3
    dump = out.with_suffix(".final.txt")
    assert scenario.parse_matrix(dump.read_text()).shape == (11, 11)

    assert cli.main(["analyze", str(dump)]) == 0


def test_cli_run_stdout(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMALL.format(segments="10:classical"))
    assert cli.main(["run", str(cfg), "--seed", "3"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == HEADER


def test_cli_output_path_relative_to_config(tmp_path):
    cfg = write_cfg(tmp_path, SMALL.format(segments="10:classical") + "output_path = rel.csv\n")
    assert cli.main(["run", str(cfg)]) == 0
    assert (tmp_path / "rel.csv").exists()


def test_cli_one_step(tmp_path, capsys, caplog):
    from qmarket.scenario import CONFIG_DIR
    assert cli.main(["one-step", str(CONFIG_DIR / "onestep_type1.cfg")]) == 0
    # warnings are reported as one log line each
    assert any(r.getMessage().startswith("CompletePositivityWarning:") for r in caplog.records)
    rho = scenario.parse_matrix(capsys.readouterr().out)
    assert rho[10, 10].real == pytest.approx(0.9968)


def test_cli_oracle(capsys):
    assert cli.main(["oracle", "--n", "4", "--t", "0.5", "--dts", "0.01,0.005"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 3 and out[0].split()[0] == "dt"


def test_cli_analyze_reports_metrics(tmp_path, capsys):
    p = tmp_path / "m.txt"
    p.write_text(scenario.format_matrix(np.eye(4) / 4))
    assert cli.main(["analyze", str(p)]) == 0
    out = dict(line.split(" = ", 1) for line in capsys.readouterr().out.splitlines())
    assert float(out["s_vn"]) == pytest.approx(math.log(4))
    assert float(out["frob_to_maxent"]) == 0.0


def test_cli_exit_codes(tmp_path, monkeypatch):
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 1
    bad = write_cfg(tmp_path, "n = 11\nrecord_stride = 0\n")
    assert cli.main(["run", str(bad)]) == 1

    from qmarket import dynamics
    from qmarket.errors import ConsistencyError, HealthCheckError

    good = write_cfg(tmp_path, SMALL.format(segments="10:classical"))

    def abort(*a, **k):
        raise HealthCheckError("trace drift", 7)

    monkeypatch.setattr(dynamics, "simulate", abort)
    assert cli.main(["run", str(good)]) == 2

    def inconsistent(*a, **k):
        raise ConsistencyError("mismatch")

    monkeypatch.setattr(dynamics, "simulate", inconsistent)
    assert cli.main(["run", str(good)]) == 3
