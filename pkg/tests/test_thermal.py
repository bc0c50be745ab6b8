import math

import pytest

from pipefarm.thermal import (ChamberGeometry, CopModel, LatentModel,
                              PowerBreakdown, Surface, envelope_load,
                              hvac_electricity, latent_balance, lp_convection,
                              solve_hvac_load)


def hand_pipe_loss(dt, length=1.0, area=math.pi * 0.075 ** 2):
    """Independent arithmetic for the buoyancy chain, recomputed from scratch."""
    ra = 9.81 * (1.0 / 297.0) * dt * length ** 3 / ((1.5e-5) ** 2 / 0.71)
    nu = 0.15 * ra ** 0.33
    u = nu * 0.026 / length
    return u * area * dt


class TestPipeConvection:
    @pytest.mark.parametrize("dt", [0.0, -5.0])
    def test_suppressed_without_gradient(self, dt):
        q, ra = lp_convection(24.0, 24.0 - dt, 1.0, math.pi * 0.075 ** 2)
        assert q == 0.0 and ra == 0.0

    def test_hand_oracle_single_pipe(self):
        # 24 C inside vs 20 C outside, one 150 mm x 1 m pipe
        q, ra = lp_convection(24.0, 20.0, 1.0, math.pi * 0.075 ** 2)
        expected = hand_pipe_loss(4.0)
        assert expected == pytest.approx(0.1928, abs=0.0005)
        assert q == pytest.approx(expected, rel=1e-12)
        assert 1e7 < ra < 1e11

    def test_monotone_in_dt(self):
        prev = 0.0
        for dt in (0.5, 1.0, 2.0, 4.0, 8.0):
            q, _ = lp_convection(24.0, 24.0 - dt, 1.0, 0.0177)
            assert q > prev
            prev = q

    def test_continuous_at_zero(self):
        q, _ = lp_convection(24.0, 23.999, 1.0, 0.0177)
        assert 0.0 < q < 1e-3

    def test_fleet_scaling(self):
        q1, _ = lp_convection(24.0, 20.0, 1.0, 0.0177, n_pipes=1)
        q750, _ = lp_convection(24.0, 20.0, 1.0, 0.0177, n_pipes=750)
        assert q750 == pytest.approx(750.0 * q1, rel=1e-12)


class TestEnvelope:
    def test_zero_gradient(self):
        assert envelope_load(ChamberGeometry(), 24.0, 24.0) == 0.0

    def test_hand_product(self):
        geom = ChamberGeometry(surfaces=(Surface("wall", 100.0, 0.175),))
        assert envelope_load(geom, 20.0, 30.0) == pytest.approx(175.0, rel=1e-12)

    def test_glazed_roof(self):
        geom = ChamberGeometry(surfaces=(Surface("roof_glazing", 49.0, 3.75),))
        assert envelope_load(geom, 20.0, 30.0) == pytest.approx(1837.5, rel=1e-12)

    def test_sign_convention(self):
        geom = ChamberGeometry()
        assert envelope_load(geom, 24.0, 14.0) < 0.0   # loss when colder outside


class TestBalanceClosure:
    def test_all_zero(self):
        assert solve_hvac_load().q_hc == 0.0

    def test_reference_case(self):
        bd = solve_hvac_load(q_led=9000.0, q_plant=1000.0, q_eva=2000.0)
        assert bd.q_hc == pytest.approx(-6000.0, rel=1e-12)

    def test_solar_gain_grows_cooling(self):
        bd = solve_hvac_load(q_led=9000.0, q_plant=1000.0, q_eva=2000.0,
                             q_lp_sol=5000.0)
        assert bd.q_hc == pytest.approx(-11000.0, rel=1e-12)

    def test_residual_is_tiny(self):
        bd = solve_hvac_load(q_env=123.4, q_led=8765.0, q_lp_sol=432.1,
                             q_lp_conv=55.0, q_plant=321.0, q_eva=654.0,
                             q_ahu=11.0, q_hum=7.0)
        assert bd.relative_residual() <= 1e-12

    def test_breakdown_is_balance_shaped(self):
        bd = PowerBreakdown(q_env=10.0, q_led=100.0, q_hc=-110.0)
        assert bd.residual() == pytest.approx(0.0, abs=1e-12)


class TestCopModel:
    def test_no_load_no_power(self):
        assert hvac_electricity(0.0, 0.0, 25.0, CopModel()) == 0.0

    def test_default_cooling_point(self):
        # 10 kW at 25 C ambient with the default second-law scaling
        cop = CopModel()
        expected_cop = 0.45 * (7.0 + 273.15) / ((25.0 + 10.0) - 7.0)
        assert cop.cop_cooling(25.0) == pytest.approx(expected_cop, rel=1e-12)
        p = hvac_electricity(10_000.0, 0.0, 25.0, cop)
        assert p == pytest.approx(10_000.0 / expected_cop, rel=1e-12)
        assert p == pytest.approx(2221.0, abs=2.0)

    def test_hotter_ambient_draws_more(self):
        cop = CopModel()
        p20 = hvac_electricity(10_000.0, 0.0, 20.0, cop)
        p40 = hvac_electricity(10_000.0, 0.0, 40.0, cop)
        assert p40 > p20

    def test_clamped_range(self):
        cop = CopModel()
        assert cop.cop_cooling(-40.0) <= 8.0
        assert cop.cop_cooling(90.0) >= 1.5

    def test_nonphysical_configuration_rejected(self):
        with pytest.raises(ValueError):
            CopModel(approach_k=0.0)
        with pytest.raises(ValueError):
            CopModel(cop_min=5.0, cop_max=2.0)

    def test_latent_duty_added_to_cooling(self):
        cop = CopModel()
        base = hvac_electricity(5000.0, 0.0, 30.0, cop)
        with_latent = hvac_electricity(5000.0, 0.0, 30.0, cop, coil_latent_w=2000.0)
        assert with_latent == pytest.approx(base * 7000.0 / 5000.0, rel=1e-12)

    def test_heating_uses_heating_cop(self):
        cop = CopModel()
        p = hvac_electricity(0.0, 3000.0, 15.0, cop)
        assert p == pytest.approx(3000.0 / cop.cop_heating(15.0), rel=1e-12)

    def test_magnitude_validation(self):
        with pytest.raises(ValueError):
            hvac_electricity(-1.0, 0.0, 25.0, CopModel())


class TestLatentBalance:
    def test_zero_transpiration(self):
        q_eva, q_ahu, q_hum, coil, rec = latent_balance(0.0, LatentModel())
        assert (q_eva, coil, rec) == (0.0, 0.0, 0.0)

    def test_one_kilogram_per_hour(self):
        q_eva, _, _, coil, rec = latent_balance(1.0 / 3600.0, LatentModel())
        assert q_eva == pytest.approx(680.0, abs=1.0)
        assert coil == q_eva
        assert rec == pytest.approx(0.95, rel=1e-12)

    def test_full_recovery_closes_loop(self):
        model = LatentModel(condensate_recovery=1.0)
        _, _, _, _, rec = latent_balance(2.0 / 3600.0, model, dt_s=3600.0)
        assert rec == pytest.approx(2.0, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            latent_balance(-1.0, LatentModel())
        with pytest.raises(ValueError):
            LatentModel(condensate_recovery=1.5)
