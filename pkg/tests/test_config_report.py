import csv
import io

import pytest

from drglm.errors import ConfigError
from drglm.report import (
    efficiency_to_text,
    se_comparison_to_text,
    summaries_to_csv,
    summaries_to_text,
)
from drglm.simconfig import bundled_config_path, bundled_configs, load_config, parse_config
from drglm.simlab import CELLS, EfficiencyRow, ScenarioSpec, SeComparisonRow, run_scenario


def one(dgp="gaussian", **sc):
    return {"scenario": [dict(dgp=dgp, **sc)]}


class TestParseConfig:
    def test_defaults_expand_all_cells(self):
        specs = parse_config(one())
        assert [s.cell for s in specs] == list(CELLS)
        assert all(s.n == 2000 for s in specs)

    def test_run_defaults_and_override(self):
        specs = parse_config({"run": {"seed": 3, "replicates": 7, "B": 9},
                              "scenario": [{"dgp": "poisson", "cells": ["right both"], "B": 11}]})
        (s,) = specs
        assert (s.seed, s.replicates, s.B, s.dgp) == (3, 7, 11, "poisson")

    def test_n_list_expands(self):
        specs = parse_config(one(cells=["both wrong"], n=[100, 500]))
        assert [s.n for s in specs] == [100, 500]

    def test_lists_become_tuples(self):
        (s,) = parse_config(one(cells=["right both"], estimators=["iptw_glm", "aipw"],
                                inference=["influence"], coefficients=[-2, 2, 1, 0.4, 1.5]))
        assert s.estimators == ("iptw_glm", "aipw")
        assert s.inference == ("influence",)
        assert s.coefficients == (-2, 2, 1, 0.4, 1.5)

    def test_label(self):
        (s,) = parse_config(one("residual_confounding", cells=["both wrong"], label="residual confounding"))
        assert s.label == "residual confounding"

    def test_family_and_link(self):
        (s,) = parse_config(one("bernoulli", family="binomial", link="log", cells=["right both"]))
        assert s.analysis_family.link_name == "log"

    @pytest.mark.parametrize("data,key", [
        ({"runn": {}, "scenario": [{"dgp": "gaussian"}]}, "runn"),
        ({"run": {"seeds": 1}, "scenario": [{"dgp": "gaussian"}]}, "seeds"),
        (one(replicate=5), "replicate"),
    ])
    def test_unknown_key_is_named(self, data, key):
        with pytest.raises(ConfigError, match=repr(key)):
            parse_config(data)

    @pytest.mark.parametrize("sc", [{"seed": "1"}, {"replicates": 2.5}, {"cells": "right both"},
                                    {"seed": True}])
    def test_wrong_types(self, sc):
        with pytest.raises(ConfigError):
            parse_config(one(**sc))

    def test_missing_dgp(self):
        with pytest.raises(ConfigError, match="dgp"):
            parse_config({"scenario": [{"n": 100}]})

    def test_no_scenarios(self):
        with pytest.raises(ConfigError):
            parse_config({"run": {"seed": 1}})

    def test_unknown_cell(self):
        with pytest.raises(ConfigError, match="right everything"):
            parse_config(one(cells=["right everything"]))

    def test_invalid_values_surface_as_config_errors(self):
        with pytest.raises(ConfigError):
            parse_config(one(if_mode="fast"))


class TestLoadConfig:
    def test_file_round_trip(self, tmp_path):
        p = tmp_path / "grid.toml"
        p.write_text('[run]\nseed = 5\nn = 300\n\n[[scenario]]\ndgp = "bernoulli"\ncells = ["right both"]\n')
        (s,) = load_config(p)
        assert (s.dgp, s.n, s.seed) == ("bernoulli", 300, 5)

    def test_invalid_toml(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[run\nseed = 1\n")
        with pytest.raises(ConfigError, match="invalid TOML"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.toml")

    @pytest.mark.parametrize("name", bundled_configs())
    def test_bundled_configs_load(self, name):
        specs = load_config(bundled_config_path(name))
        assert specs and all(isinstance(s, ScenarioSpec) for s in specs)

    def test_bundled_names(self):
        assert {"smoke.toml", "table2.toml", "table3.toml"} <= set(bundled_configs())
        assert bundled_config_path("smoke").name == "smoke.toml"
        with pytest.raises(ConfigError):
            bundled_config_path("missing")


@pytest.fixture(scope="module")
def summaries():
    base = dict(n=150, replicates=3, seed=1, B=10, estimators=("iptw_glm", "aipw"),
                inference=("bootstrap", "influence"))
    return [run_scenario(ScenarioSpec("gaussian", **base)),
            run_scenario(ScenarioSpec("gaussian", ps_spec="misspecified", outcome_spec="misspecified", **base)),
            run_scenario(ScenarioSpec("poisson", **base))]


class TestReport:
    def test_csv_rows(self, summaries):
        buf = io.StringIO()
        text = summaries_to_csv(summaries, buf)
        assert buf.getvalue() == text
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == 6
        assert [r["estimator"] for r in rows[:2]] == ["iptw_glm", "aipw"]
        assert rows[0]["type"] == "right both" and rows[2]["type"] == "both wrong"
        assert float(rows[0]["mean"]) == pytest.approx(summaries[0].primary.mean)
        assert rows[1]["coverage_boot"] == ""

    def test_csv_to_path(self, summaries, tmp_path):
        p = tmp_path / "out.csv"
        assert summaries_to_csv(summaries, p) == p.read_text()

    def test_text_sections(self, summaries):
        lines = summaries_to_text(summaries).splitlines()
        assert lines[0] == "Generation: linear; analysis: ols weighted standardized"
        assert "Generation: log poisson; analysis: poisson weighted standardized" in lines
        assert sum(line.startswith("right both") for line in lines) == 2
        assert any(line.startswith("both wrong") for line in lines)
        assert "aipw: percent bias (SD)" in lines[1]

    def test_tiny_sd_shown_as_bound(self):
        s = run_scenario(ScenarioSpec("inverse_gaussian", n=300, replicates=3, seed=2,
                                      inference=("influence",)))
        assert "(<0.01)" in summaries_to_text([s])

    def test_empty(self):
        assert summaries_to_text([]) == ""
        assert summaries_to_csv([]) == ""

    def test_grid_tables(self):
        eff = efficiency_to_text([EfficiencyRow("gaussian", 2000, "both wrong", 0.1234, 0.2)])
        assert eff.splitlines()[-1].split() == ["gaussian", "2000", "both", "wrong", "0.123", "0.200"]
        se = se_comparison_to_text([SeComparisonRow("bernoulli", "right both", 0.02, 0.03, None)])
        assert se.splitlines()[-1].split()[-1] == "NA"
