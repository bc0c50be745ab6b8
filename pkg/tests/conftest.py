"""Shared fixtures: the shipped climate year, the traced and reference
optical tables, the calibrated LUE factor, and the nine scenario runs."""

from __future__ import annotations

import time
from pathlib import Path

import pytest

from pipefarm.climate import load_climate
from pipefarm.config import load_scenario_config
from pipefarm.crop import LueTable
from pipefarm.engine import (calibrate_lue_scale, load_lue_table,
                             prepare_efficiency_table, run_scenario, solar_angles)
from pipefarm.optics import OpticalEfficiencyTable
from pipefarm.tracer import build_efficiency_table

REPO = Path(__file__).resolve().parent.parent
CONFIG_DIR = REPO / "configs"
DATA_DIR = REPO / "data"

SCENARIO_FILES = {
    "Bench": "bench.yaml",
    "LP_NL": "lp_nl.yaml",
    "LP_Min_200": "lp_min_200.yaml",
    "LP_Min_250": "lp_min_250.yaml",
    "LP_Dim": "lp_dim.yaml",
    "LP_Dim_IR_98": "lp_dim_ir_98.yaml",
    "LP_Dim_IR_90": "lp_dim_ir_90.yaml",
    "LP_Dim_EC": "lp_dim_ec.yaml",
    "GH": "gh.yaml",
}


@pytest.fixture(scope="session")
def repo_paths():
    return {"repo": REPO, "configs": CONFIG_DIR, "data": DATA_DIR}


@pytest.fixture(scope="session")
def bench_config():
    return load_scenario_config(CONFIG_DIR / "bench.yaml")


@pytest.fixture(scope="session")
def scenario_configs():
    return {name: load_scenario_config(CONFIG_DIR / fn)
            for name, fn in SCENARIO_FILES.items()}


@pytest.fixture(scope="session")
def climate(bench_config):
    return load_climate(bench_config.climate_path, bench_config.climate_columns)


@pytest.fixture(scope="session")
def solar(bench_config):
    return solar_angles(bench_config.site, bench_config.hour_center_offset)


@pytest.fixture(scope="session")
def reference_table(bench_config) -> OpticalEfficiencyTable:
    return prepare_efficiency_table(bench_config)


@pytest.fixture(scope="session")
def traced_table(bench_config):
    """Full-budget Monte Carlo sweep of the shipped geometry (timed)."""
    t0 = time.time()
    table, _ = build_efficiency_table(bench_config.lp_geometry, rays=100_000,
                                      seed=bench_config.seed)
    return table, time.time() - t0


@pytest.fixture(scope="session")
def lue_base(bench_config) -> LueTable:
    return load_lue_table(bench_config)


@pytest.fixture(scope="session")
def calibration(bench_config, climate, lue_base, solar):
    return calibrate_lue_scale(bench_config, climate, None, lue_base, solar=solar)


@pytest.fixture(scope="session")
def lue_calibrated(lue_base, calibration) -> LueTable:
    return lue_base.with_scale(calibration["lue_scale"])


@pytest.fixture(scope="session")
def scenario_results(scenario_configs, climate, reference_table, lue_calibrated, solar):
    """All nine shipped scenarios at PPE 2.5 with shared calibration."""
    out = {}
    for name, cfg in scenario_configs.items():
        table = reference_table if cfg.uses_light_pipes else None
        out[name] = run_scenario(cfg, climate, table, lue_calibrated, solar=solar)
    return out
