"""Energy, CO2-equivalent and car-kilometre arithmetic for training runs."""

from __future__ import annotations

from dataclasses import dataclass

INTENSITY_G_PER_KWH = 275.0
CAR_G_PER_KM = 122.0


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    watts: float

    def __post_init__(self):
        if self.watts <= 0:
            raise ValueError("device power must be positive")


CPU = DeviceProfile("Intel i9-7920X", 163.0)
GPU = DeviceProfile("Nvidia GTX 1080 Ti", 250.0)


@dataclass(frozen=True)
class EnergyReport:
    seconds: float | None
    watts: float | None
    multiplier: float
    wh: float
    co2e_g: float
    car_km: float

    def as_dict(self) -> dict[str, float | None]:
        return {"seconds": self.seconds, "watts": self.watts, "multiplier": self.multiplier,
                "wh": self.wh, "co2e_g": self.co2e_g, "car_km": self.car_km}


def _carbon(wh: float, intensity: float, car: float) -> tuple[float, float]:
    g = wh * intensity / 1000.0
    return g, g / car


def energy(seconds: float, device: DeviceProfile, multiplier: float = 1.0,
           intensity_g_per_kwh: float = INTENSITY_G_PER_KWH,
           car_g_per_km: float = CAR_G_PER_KM) -> EnergyReport:
    """Rated-power energy: Wh = seconds * watts * multiplier / 3600.

    Use multiplier 1 for live timings; published runtime tables may need a
    repeat factor.
    """
    if seconds < 0:
        raise ValueError("seconds must be non-negative")
    if multiplier < 1:
        raise ValueError("multiplier must be >= 1")
    wh = seconds * device.watts * multiplier / 3600.0
    g, km = _carbon(wh, intensity_g_per_kwh, car_g_per_km)
    return EnergyReport(seconds, device.watts, multiplier, wh, g, km)


def savings_report(avoided_wh: float, intensity_g_per_kwh: float = INTENSITY_G_PER_KWH,
                   car_g_per_km: float = CAR_G_PER_KM) -> EnergyReport:
    if avoided_wh < 0:
        raise ValueError("avoided energy must be non-negative")
    g, km = _carbon(avoided_wh, intensity_g_per_kwh, car_g_per_km)
    return EnergyReport(None, None, 1.0, avoided_wh, g, km)
