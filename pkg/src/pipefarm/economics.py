"""Cost model: capital items, light cost, simple payback, price sweeps.

Light cost is capital cost per unit of delivered photon flux; payback
compares the incremental investment of a daylighting scenario against the
operating savings (electricity, optional carbon price) plus the revenue
delta from yield changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

from .optics import PAR_UMOL_PER_J

__all__ = [
    "CostTable",
    "KpiReport",
    "compute_kpis",
    "led_cost_per_watt",
    "light_cost",
    "lumens_to_photon_flux",
    "fiber_reference_light_cost",
    "payback_time",
    "PaybackResult",
    "sensitivity_sweep",
    "break_even_unit_cost",
]

FT2_PER_M2 = 10.763910416709722
LUMENS_PER_W_PAR = 251.0      # luminous efficacy used for the fiber reference


@dataclass(frozen=True)
class CostTable:
    led_usd_per_ft2: float = 35.0        # installed cost for low-light crops
    reference_ppfd: float = 250.0        # design PPFD behind the $/W conversion
    lp_unit_usd: float = 210.0           # bare light pipe
    lp_aux_usd: float = 90.0             # mirror, gears, motors
    ir_filter_usd: float = 104.0         # per pipe
    ec_film_usd: float = 100.0           # per pipe
    hvac_usd_per_w: float = 0.65         # per watt of installed capacity
    lettuce_usd_per_kg: float = 7.82
    electricity_usd_per_mwh: float = 150.0
    carbon_usd_per_t: float = 0.0
    grid_t_co2_per_mwh: float = 0.40

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def lp_total_usd(self) -> float:
        return self.lp_unit_usd + self.lp_aux_usd


@dataclass(frozen=True)
class KpiReport:
    """Annual performance bundle for one scenario run.

    SEEC is electricity per kg; SEC adds the harvested daylight so free
    solar input is not invisible in the total (for the benchmark the two
    coincide). Total lighting energy consumption counts LED electricity
    plus harvested daylight per kg. Undefined ratios (zero yield) are
    reported as such rather than faked.
    """

    yield_kg: float
    yield_raw_kg: float
    electricity_mwh: float
    harvested_daylight_mwh: float
    led_electricity_mwh: float
    seec_kwh_per_kg: Optional[float]
    sec_kwh_per_kg: Optional[float]
    total_lighting_kwh_per_kg: Optional[float]
    wue_g_per_l: Optional[float]
    net_water_l: float
    mean_dli_per_tier: tuple
    undefined: bool = False


def compute_kpis(yield_kg: float, yield_raw_kg: float, electricity_mwh: float,
                 harvested_daylight_mwh: float, led_electricity_mwh: float,
                 net_water_l: float, mean_dli_per_tier: Sequence[float]) -> KpiReport:
    if yield_kg <= 0.0:
        return KpiReport(yield_kg, yield_raw_kg, electricity_mwh,
                         harvested_daylight_mwh, led_electricity_mwh,
                         None, None, None, None, net_water_l,
                         tuple(mean_dli_per_tier), undefined=True)
    seec = electricity_mwh * 1000.0 / yield_kg
    sec = (electricity_mwh + harvested_daylight_mwh) * 1000.0 / yield_kg
    lighting = (led_electricity_mwh + harvested_daylight_mwh) * 1000.0 / yield_kg
    wue = yield_kg * 1000.0 / net_water_l if net_water_l > 0.0 else None
    return KpiReport(yield_kg, yield_raw_kg, electricity_mwh, harvested_daylight_mwh,
                     led_electricity_mwh, seec, sec, lighting, wue, net_water_l,
                     tuple(mean_dli_per_tier))


def led_cost_per_watt(costs: CostTable, ppe: float) -> float:
    """Installed LED cost in $ per electrical watt for a given efficacy.

    Area cost converts to $ per (umol/s) at the design PPFD, and each
    umol/s costs 1/PPE electrical watts, so $/W scales with PPE.
    """
    if ppe <= 0.0:
        raise ValueError("PPE must be positive")
    usd_per_m2 = costs.led_usd_per_ft2 * FT2_PER_M2
    usd_per_umol_s = usd_per_m2 / costs.reference_ppfd
    return usd_per_umol_s * ppe


def light_cost(capex_usd: float, flux_umol_s: float) -> float:
    """Capital cost per unit of delivered photon flux, $ per (umol/s)."""
    if flux_umol_s <= 0.0:
        raise ValueError("delivered flux must be positive")
    if capex_usd < 0.0:
        raise ValueError("capex must be non-negative")
    return capex_usd / flux_umol_s


def lumens_to_photon_flux(lumens: float,
                          lumens_per_watt: float = LUMENS_PER_W_PAR,
                          umol_per_j: float = PAR_UMOL_PER_J) -> float:
    """Luminous flux to photon flux assuming a PAR-band spectrum."""
    if lumens < 0.0 or lumens_per_watt <= 0.0:
        raise ValueError("invalid luminous flux conversion inputs")
    return lumens / lumens_per_watt * umol_per_j


def fiber_reference_light_cost(cost_usd: float = 3264.0,
                               lumens: float = 9200.0) -> tuple[float, float]:
    """(light cost, photon flux) of the optical-fiber reference system."""
    flux = lumens_to_photon_flux(lumens)
    return light_cost(cost_usd, flux), flux


REFERENCE_PIPE_PPF = 24.9  # umol/s per pipe under the 100 klx reference sky


def light_cost_comparison(costs: CostTable, ppf_ref: float = REFERENCE_PIPE_PPF,
                          ir_tau: float = 0.98, ec_tau_max: float = 0.735,
                          ec_cap_ppfd: float = 400.0,
                          zone_area_m2: float = 0.04) -> list[dict]:
    """Per-pipe light cost of each hardware variant against the fiber system.

    ppf_ref is the delivered flux of a bare pipe under the shared reference
    daylight. The UV-IR variant loses its visible transmittance; the
    film variant is additionally capped at the control bound over the
    growing zone.
    """
    fiber_lc, fiber_flux = fiber_reference_light_cost()
    ec_flux = min(ppf_ref * ec_tau_max, ec_cap_ppfd * zone_area_m2)
    rows = [
        {"system": "Optical Fiber", "cost_usd": 3264.0, "ppf_umol_s": fiber_flux,
         "light_cost": fiber_lc},
        {"system": "LP_NL", "cost_usd": costs.lp_total_usd, "ppf_umol_s": ppf_ref,
         "light_cost": light_cost(costs.lp_total_usd, ppf_ref)},
        {"system": "LP_Min", "cost_usd": costs.lp_total_usd, "ppf_umol_s": ppf_ref,
         "light_cost": light_cost(costs.lp_total_usd, ppf_ref)},
        {"system": "LP_Dim", "cost_usd": costs.lp_total_usd, "ppf_umol_s": ppf_ref,
         "light_cost": light_cost(costs.lp_total_usd, ppf_ref)},
        {"system": "LP_Dim_IR", "cost_usd": costs.lp_total_usd + costs.ir_filter_usd,
         "ppf_umol_s": ppf_ref * ir_tau,
         "light_cost": light_cost(costs.lp_total_usd + costs.ir_filter_usd,
                                  ppf_ref * ir_tau)},
        {"system": "LP_Dim_EC", "cost_usd": costs.lp_total_usd + costs.ec_film_usd,
         "ppf_umol_s": ec_flux,
         "light_cost": light_cost(costs.lp_total_usd + costs.ec_film_usd, ec_flux)},
    ]
    return rows


@dataclass(frozen=True)
class PaybackResult:
    years: float                         # inf when non-viable
    delta_capex_usd: float
    annual_savings_usd: float            # electricity + carbon + revenue delta
    viable: bool

    def __str__(self) -> str:
        return "non-viable" if not self.viable else f"{self.years:.1f} yr"


def payback_time(delta_capex_usd: float, delta_electricity_mwh: float,
                 delta_yield_kg: float, costs: CostTable) -> PaybackResult:
    """Simple payback of the incremental investment.

    delta_electricity_mwh is the annual saving (benchmark minus scenario);
    delta_yield_kg is scenario minus benchmark. Carbon pricing applies to
    the avoided grid energy. A non-positive denominator means the
    investment never pays back.
    """
    savings = (costs.electricity_usd_per_mwh * delta_electricity_mwh
               + costs.carbon_usd_per_t * costs.grid_t_co2_per_mwh * delta_electricity_mwh
               + costs.lettuce_usd_per_kg * delta_yield_kg)
    if delta_capex_usd <= 0.0:
        return PaybackResult(0.0, delta_capex_usd, savings, True)
    if savings <= 0.0:
        return PaybackResult(math.inf, delta_capex_usd, savings, False)
    return PaybackResult(delta_capex_usd / savings, delta_capex_usd, savings, True)


def sensitivity_sweep(delta_capex_usd: float, delta_electricity_mwh: float,
                      delta_yield_kg: float, base_costs: CostTable,
                      electricity_prices: Sequence[float],
                      carbon_prices: Sequence[float]) -> list[dict]:
    """Payback over a price grid; re-prices a finished run, never re-simulates."""
    rows = []
    for c_el in electricity_prices:
        for c_co2 in carbon_prices:
            costs = replace(base_costs, electricity_usd_per_mwh=c_el,
                            carbon_usd_per_t=c_co2)
            pbt = payback_time(delta_capex_usd, delta_electricity_mwh,
                               delta_yield_kg, costs)
            rows.append({
                "electricity_usd_per_mwh": c_el,
                "carbon_usd_per_t": c_co2,
                "pbt_years": pbt.years,
                "annual_savings_usd": pbt.annual_savings_usd,
                "viable": pbt.viable,
            })
    return rows


def break_even_unit_cost(capex_for_unit_cost: Callable[[float], float],
                         delta_electricity_mwh: float, delta_yield_kg: float,
                         costs: CostTable, target_pbt_years: float,
                         lo: float = 0.0, hi: float = 2000.0,
                         tol: float = 0.01) -> Optional[float]:
    """Largest per-pipe unit cost keeping payback at or under the target.

    capex_for_unit_cost maps a candidate unit cost to the scenario's
    incremental CAPEX. Payback is monotone in the unit cost, so plain
    bisection brackets the break-even point; None when even a free system
    misses the target.
    """
    if target_pbt_years <= 0.0:
        raise ValueError("target payback must be positive")

    def pbt(unit_cost: float) -> float:
        return payback_time(capex_for_unit_cost(unit_cost), delta_electricity_mwh,
                            delta_yield_kg, costs).years

    if pbt(lo) > target_pbt_years:
        return None
    if pbt(hi) <= target_pbt_years:
        return hi
    a, b = lo, hi
    while b - a > tol:
        mid = (a + b) / 2.0
        if pbt(mid) <= target_pbt_years:
            a = mid
        else:
            b = mid
    return a
