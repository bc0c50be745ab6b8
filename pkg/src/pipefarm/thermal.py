"""Growing-chamber energy balance and HVAC electricity.

Quasi-steady operation: the air node is held at its setpoint and the
balance is solved for the heating/cooling power each hour. Sign
convention: every term is a signed flow into the air node, so cooling
demand shows up as a negative closure term.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "Surface",
    "ChamberGeometry",
    "AirProperties",
    "PowerBreakdown",
    "CopModel",
    "LatentModel",
    "lp_convection",
    "envelope_load",
    "solve_hvac_load",
    "hvac_electricity",
    "latent_balance",
    "LATENT_HEAT_J_PER_KG",
]

LATENT_HEAT_J_PER_KG = 2.45e6  # vaporization, near-ambient water
KELVIN = 273.15


@dataclass(frozen=True)
class Surface:
    name: str
    area_m2: float
    u_value: float             # W m-2 K-1

    def __post_init__(self):
        if self.area_m2 <= 0.0 or self.u_value <= 0.0:
            raise ValueError(f"surface {self.name}: area and U must be positive")


@dataclass(frozen=True)
class ChamberGeometry:
    floor_area_m2: float = 49.0
    height_m: float = 3.0
    air_density: float = 1.204          # kg m-3
    air_cp: float = 1006.0              # J kg-1 K-1
    surfaces: tuple[Surface, ...] = (
        Surface("roof", 49.0, 0.175),
        Surface("walls", 84.0, 0.175),
        Surface("floor", 49.0, 0.175),
    )

    def __post_init__(self):
        if self.floor_area_m2 <= 0.0 or self.height_m <= 0.0:
            raise ValueError("chamber dimensions must be positive")

    @property
    def air_volume_m3(self) -> float:
        return self.floor_area_m2 * self.height_m

    @property
    def thermal_capacity_j_per_k(self) -> float:
        return self.air_density * self.air_cp * self.air_volume_m3


@dataclass(frozen=True)
class AirProperties:
    """Film-temperature air properties for the in-pipe buoyancy correlation.

    Fixed 300 K values by default; the setpoint-to-ambient difference is
    small enough that property variation is noise next to the correlation.
    """

    g: float = 9.81                     # m s-2
    beta: float = 1.0 / 297.0           # K-1
    kinematic_viscosity: float = 1.5e-5  # m2 s-1
    prandtl: float = 0.71
    conductivity: float = 0.026         # W m-1 K-1

    def __post_init__(self):
        for name, v in (("g", self.g), ("beta", self.beta),
                        ("kinematic_viscosity", self.kinematic_viscosity),
                        ("prandtl", self.prandtl), ("conductivity", self.conductivity)):
            if v <= 0.0:
                raise ValueError(f"{name} must be positive")


RA_VALID_RANGE = (1e7, 1e11)


def lp_convection(t_in: float, t_ext: float, length_m: float, heat_area_m2: float,
                  props: AirProperties = AirProperties(), n_pipes: int = 1
                  ) -> tuple[float, float]:
    """Buoyancy-driven heat loss through the open light pipes, in watts.

    Suppressed entirely when the chamber is no warmer than outside.
    Returns (Q, Ra); Ra is 0 on the suppressed branch and lets callers
    flag operation outside the correlation's comfortable range.
    """
    dt = t_in - t_ext
    if dt <= 0.0:
        return 0.0, 0.0
    ra = (props.g * props.beta * dt * length_m ** 3
          / (props.kinematic_viscosity ** 2 / props.prandtl))
    nu = 0.15 * ra ** 0.33
    u_lp = nu * props.conductivity / length_m
    return u_lp * heat_area_m2 * dt * n_pipes, ra


def envelope_load(geometry: ChamberGeometry, t_in: float, t_ext: float) -> float:
    """Transmission gain into the chamber, positive when outside is warmer."""
    return sum(s.u_value * s.area_m2 for s in geometry.surfaces) * (t_ext - t_in)


@dataclass(frozen=True)
class PowerBreakdown:
    """Signed air-node balance terms for one hour, all in watts.

    q_hc closes the quasi-steady balance: negative is cooling demand,
    positive heating. coil_latent is the vapour load condensed at the
    cooling coil; it rides along for HVAC electricity and water
    bookkeeping but is not an air-node term.
    """

    q_env: float = 0.0
    q_led: float = 0.0
    q_lp_sol: float = 0.0
    q_lp_conv: float = 0.0
    q_plant: float = 0.0
    q_eva: float = 0.0
    q_hc: float = 0.0
    q_ahu: float = 0.0
    q_hum: float = 0.0
    coil_latent: float = 0.0

    def residual(self) -> float:
        """Signed quasi-steady balance residual (W)."""
        return (self.q_env + self.q_led + self.q_lp_sol - self.q_lp_conv
                - self.q_plant - self.q_eva + self.q_hc - self.q_ahu - self.q_hum)

    def relative_residual(self) -> float:
        scale = max(1.0, abs(self.q_env), abs(self.q_led), abs(self.q_lp_sol),
                    abs(self.q_lp_conv), abs(self.q_plant), abs(self.q_eva),
                    abs(self.q_hc), abs(self.q_ahu), abs(self.q_hum))
        return abs(self.residual()) / scale


def solve_hvac_load(q_env: float = 0.0, q_led: float = 0.0, q_lp_sol: float = 0.0,
                    q_lp_conv: float = 0.0, q_plant: float = 0.0, q_eva: float = 0.0,
                    q_ahu: float = 0.0, q_hum: float = 0.0,
                    coil_latent: float = 0.0) -> PowerBreakdown:
    """Close the air balance for q_hc with the setpoint held (dT/dt = 0)."""
    q_hc = -(q_env + q_led + q_lp_sol) + q_lp_conv + q_plant + q_eva + q_ahu + q_hum
    return PowerBreakdown(q_env=q_env, q_led=q_led, q_lp_sol=q_lp_sol,
                          q_lp_conv=q_lp_conv, q_plant=q_plant, q_eva=q_eva,
                          q_hc=q_hc, q_ahu=q_ahu, q_hum=q_hum,
                          coil_latent=coil_latent)


@dataclass(frozen=True)
class CopModel:
    """Second-law-scaled Carnot COP against ambient temperature.

    Cooling: COP = eta * T_evap / (T_cond - T_evap) with the condenser
    tracking ambient plus an approach. Heating mirrors the form with a
    fixed supply temperature and the evaporator tracking ambient.
    """

    eta_second_law: float = 0.45
    t_evap_c: float = 7.0
    approach_k: float = 10.0
    heat_supply_c: float = 45.0
    heat_approach_k: float = 5.0
    cop_min: float = 1.5
    cop_max: float = 8.0

    def __post_init__(self):
        if not 0.0 < self.eta_second_law <= 1.0:
            raise ValueError("second-law efficiency must be in (0, 1]")
        if self.cop_min <= 0.0 or self.cop_max < self.cop_min:
            raise ValueError("COP clamp range is non-physical")
        # condenser at or below the evaporator is rejected at config time
        if self.approach_k <= 0.0 or self.heat_approach_k < 0.0:
            raise ValueError("approach temperatures must be positive")
        if self.heat_supply_c + KELVIN <= 0.0:
            raise ValueError("heat supply temperature is non-physical")

    def cop_cooling(self, t_ext_c: float) -> float:
        t_evap = self.t_evap_c + KELVIN
        t_cond = t_ext_c + self.approach_k + KELVIN
        lift = t_cond - t_evap
        if lift <= 0.0:
            return self.cop_max
        return min(self.cop_max, max(self.cop_min, self.eta_second_law * t_evap / lift))

    def cop_heating(self, t_ext_c: float) -> float:
        t_cond = self.heat_supply_c + KELVIN
        t_evap = t_ext_c - self.heat_approach_k + KELVIN
        lift = t_cond - t_evap
        if lift <= 0.0:
            return self.cop_max
        return min(self.cop_max, max(self.cop_min, self.eta_second_law * t_cond / lift))


def hvac_electricity(q_cool_w: float, q_heat_w: float, t_ext_c: float,
                     cop: CopModel, coil_latent_w: float = 0.0) -> float:
    """Electrical draw to meet the sensible loads plus coil latent duty."""
    if q_cool_w < 0.0 or q_heat_w < 0.0:
        raise ValueError("loads are magnitudes; pass the cooling demand as positive")
    p = 0.0
    total_cool = q_cool_w + coil_latent_w
    if total_cool > 0.0:
        p += total_cool / cop.cop_cooling(t_ext_c)
    if q_heat_w > 0.0:
        p += q_heat_w / cop.cop_heating(t_ext_c)
    return p


@dataclass(frozen=True)
class LatentModel:
    """Surrogate for the unpublished evapotranspiration/AHU submodels.

    Transpired vapour is condensed at the cooling coil whenever lights or
    the chiller run (in this quasi-steady model: always, to hold the RH
    setpoint), and most of the condensate is recovered into the loop.
    """

    latent_heat: float = LATENT_HEAT_J_PER_KG
    condensate_recovery: float = 0.95
    q_ahu_w: float = 0.0         # constant sensible AHU load surrogate
    q_hum_w: float = 0.0         # constant humidification surrogate

    def __post_init__(self):
        if not 0.0 <= self.condensate_recovery <= 1.0:
            raise ValueError("condensate recovery must be in [0, 1]")
        if self.latent_heat <= 0.0:
            raise ValueError("latent heat must be positive")


def latent_balance(transpiration_kg_per_s: float, model: LatentModel, dt_s: float = 3600.0
                   ) -> tuple[float, float, float, float, float]:
    """Latent terms for one step.

    Returns (q_eva_w, q_ahu_w, q_hum_w, coil_latent_w, condensate_recovered_l).
    q_eva is the evaporative cooling of the air; the same latent power
    reappears at the coil where the vapour condenses, and the recovered
    condensate volume goes back to the water ledger.
    """
    if transpiration_kg_per_s < 0.0:
        raise ValueError("transpiration rate must be non-negative")
    q_eva = transpiration_kg_per_s * model.latent_heat
    condensed_kg = transpiration_kg_per_s * dt_s
    recovered_l = condensed_kg * model.condensate_recovery  # 1 kg == 1 L
    return q_eva, model.q_ahu_w, model.q_hum_w, q_eva, recovered_l
