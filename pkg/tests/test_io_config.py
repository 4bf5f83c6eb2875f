import numpy as np
import pytest

from pogamp.config import parse_config
from pogamp.errors import ConfigError, DuplicateLocation, OutOfDomain, ParseError
from pogamp.geometry import Domain
from pogamp.io import load_dataset, read_table, write_dataset, write_table


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_load_dataset_keeps_order(tmp_path):
    p = _write(tmp_path / "d.csv", "x,y,value\n0.5,0.5,1.25\n0.1,0.9,-3\n")
    data = load_dataset(p, Domain())
    np.testing.assert_array_equal(data.obs_locs, [[0.5, 0.5], [0.1, 0.9]])
    np.testing.assert_array_equal(data.y_o, [1.25, -3.0])


def test_parse_error_reports_line_and_column(tmp_path):
    p = _write(tmp_path / "d.csv", "x,y,value\n0.5,0.5,1\n0.2,abc,2\n")
    with pytest.raises(ParseError) as info:
        load_dataset(p)
    assert info.value.line == 3 and info.value.column == 2


@pytest.mark.parametrize("text", [
    "a,b,c\n1,2,3\n4,5,6\n",
    "x,y,value\n1,2\n",
    "x,y,value\n1,2,nan\n3,4,5\n",
    "x,y,value\n1,2,3\n",
    "",
])
def test_malformed_files(tmp_path, text):
    with pytest.raises(ParseError):
        load_dataset(_write(tmp_path / "d.csv", text))


def test_duplicate_and_out_of_domain(tmp_path):
    with pytest.raises(DuplicateLocation):
        load_dataset(_write(tmp_path / "a.csv", "x,y,value\n0.1,0.2,1\n0.1,0.2,2\n"))
    with pytest.raises(OutOfDomain):
        load_dataset(_write(tmp_path / "b.csv", "x,y,value\n0.1,0.2,1\n1.5,0.2,2\n"), Domain())


def test_round_trip_is_byte_identical(tmp_path, rng):
    locs, vals = rng.uniform(size=(20, 2)), rng.normal(size=20)
    write_dataset(tmp_path / "a.csv", locs, vals)
    data = load_dataset(tmp_path / "a.csv")
    np.testing.assert_array_equal(data.obs_locs, locs)
    np.testing.assert_array_equal(data.y_o, vals)
    write_dataset(tmp_path / "b.csv", data.obs_locs, data.y_o)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_table_round_trip(tmp_path):
    write_table(tmp_path / "t.csv", {"a": [1.0, 2.5], "b": [np.pi, -0.0]})
    names, data = read_table(tmp_path / "t.csv")
    assert names == ["a", "b"]
    assert data[0, 1] == np.pi and data[1, 0] == 2.5
    with pytest.raises(ValueError):
        write_table(tmp_path / "u.csv", {"a": [1.0], "b": [1.0, 2.0]})


def test_default_config_is_valid():
    cfg = parse_config("")
    assert cfg.model.f.family == "skew_normal"
    assert cfg.mcmc.build().theta_mode == "shared"


def test_full_config():
    cfg = parse_config("""
model:
  domain: {x_min: 0, x_max: 2, y_min: 0, y_max: 2}
  kernel: {family: matern32, mean: 0, sigma2: 1, phi: 0.3, tau2: 0.1}
  f: {family: skew_t, alpha: 2, nu: 5}
  intensity: {kind: parametric, form: linear_x, params: {a: 1, b: 2}}
  priors:
    lambda: {shape: 3, rate: 1}
    theta_f:
      alpha: {kind: pc, params: {xi0: 0, zeta: 1}}
mcmc: {iterations: 10, burn_in: 5, chains: 3, nngp: true, m: 8}
predict:
  sites: [[0.5, 0.5]]
  functionals: [{integrand: indicator_above, threshold: 1.0, strata: 4}]
""")
    assert cfg.model.domain.build().area == 4.0
    assert cfg.model.priors.build().theta_f["alpha"].kind == "pc"
    assert cfg.model.intensity.build().form == "linear_x"
    assert cfg.mcmc.build().m == 8


@pytest.mark.parametrize("text", [
    "model: {kernel: {family: gaussianish}}",
    "model: {f: {family: skew_t}}",
    "model: {f: {family: student_t, alpha: 1, nu: 4}}",
    "mcmc: {iterations: -1}",
    "mcmc: {update_theta_f: [f_phi]}",
    "unknown_section: {}",
    "model: {kernel: {sigma2: -1}}",
    "model: {intensity: {kind: parametric, form: spiral}}",
    "model: {priors: {theta_g: {phi: {kind: cauchy}}}}",
    "predict: {functionals: [{integrand: constant}]}",
    "- just\n- a list",
    "a: [unclosed",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        cfg = parse_config(text)
        cfg.mcmc.build()
