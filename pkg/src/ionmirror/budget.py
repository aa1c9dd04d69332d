"""Timing and loss budget: repetition rate and heralded entanglement rate.

Durations are in seconds. The ledger reads and writes a flat INI-style text
config (one ``[budget]`` section) so it can be diffed and edited by hand.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace

from ._io import write_csv

FACTOR_NAMES = ("success_ideal", "mirror_eta", "focal_intensity_per_ion", "bs_transmission", "extra_loss")


def default_factors() -> dict[str, float]:
    return {
        "success_ideal": 4.0 / 27.0,
        "mirror_eta": 0.47,
        "focal_intensity_per_ion": 0.78,
        "bs_transmission": 0.39,
        "extra_loss": 1.0,
    }


@dataclass(frozen=True)
class BudgetLedger:
    """Per-attempt durations and multiplicative success factors.

    ``attempt_time`` is the nominal duration of one attempt (preparation,
    photon exchange and postselection). None means the sum of the component
    durations.
    """

    cooling_time: float = 200e-6
    prep_time: float = 7e-6
    pi_pulse_time: float = 1e-9
    postselect_time: float = 80e-6
    travel_plus_classical_time: float = 2 * 10e-6
    trials_per_cooling: int = 1
    attempt_time: float | None = 100e-6
    factors: dict = field(default_factory=default_factors)

    def __post_init__(self):
        for f in ("cooling_time", "prep_time", "pi_pulse_time", "postselect_time", "travel_plus_classical_time"):
            v = getattr(self, f)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{f} must be a nonnegative duration, got {v}")
        if self.attempt_time is not None and not (math.isfinite(self.attempt_time) and self.attempt_time >= 0):
            raise ValueError(f"attempt_time must be a nonnegative duration, got {self.attempt_time}")
        if int(self.trials_per_cooling) != self.trials_per_cooling or self.trials_per_cooling < 1:
            raise ValueError("trials_per_cooling must be an integer >= 1")
        unknown = set(self.factors) - set(FACTOR_NAMES)
        if unknown:
            raise ValueError(f"unknown factor: {sorted(unknown)[0]}")
        for name in FACTOR_NAMES:
            v = self.factors.get(name)
            if v is None:
                raise ValueError(f"missing factor: {name}")
            if not 0 <= v <= 1:
                raise ValueError(f"factor {name} must lie in [0, 1], got {v}")

    @property
    def component_attempt_time(self) -> float:
        return self.prep_time + self.pi_pulse_time + self.travel_plus_classical_time + self.postselect_time

    @property
    def resolved_attempt_time(self) -> float:
        return self.component_attempt_time if self.attempt_time is None else self.attempt_time

    def with_factor(self, name: str, value: float) -> "BudgetLedger":
        if name not in FACTOR_NAMES:
            raise ValueError(f"unknown factor: {name}")
        return replace(self, factors={**self.factors, name: value})


def repetition_rate(ledger: BudgetLedger) -> float:
    """Attempts per second including the cooling overhead, Hz."""
    attempt = ledger.resolved_attempt_time
    if attempt <= 0:
        raise ValueError("attempt time must be positive")
    n = ledger.trials_per_cooling
    return n / (n * attempt + ledger.cooling_time)


def success_per_attempt(ledger: BudgetLedger) -> float:
    f = ledger.factors
    return (
        f["success_ideal"]
        * f["mirror_eta"]
        * f["focal_intensity_per_ion"] ** 2
        * f["bs_transmission"]
        * f["extra_loss"]
    )


def entanglement_rate(ledger: BudgetLedger) -> float:
    """Heralded pairs per second."""
    return repetition_rate(ledger) * success_per_attempt(ledger)


def report_rows(ledger: BudgetLedger) -> list[tuple[str, float]]:
    """Budget summary; reports the rate both with and without focal spread."""
    perfect_focus = ledger.with_factor("focal_intensity_per_ion", 1.0)
    return [
        ("attempt_time_s", ledger.resolved_attempt_time),
        ("component_attempt_time_s", ledger.component_attempt_time),
        ("cooling_time_s", ledger.cooling_time),
        ("trials_per_cooling", ledger.trials_per_cooling),
        ("repetition_rate_hz", repetition_rate(ledger)),
        ("success_per_attempt", success_per_attempt(ledger)),
        ("entanglement_rate_hz", entanglement_rate(ledger)),
        ("entanglement_rate_perfect_focus_hz", entanglement_rate(perfect_focus)),
    ]


def report_csv(ledger: BudgetLedger, target=None) -> str:
    return write_csv(target, ["quantity", "value"], report_rows(ledger))


def ledger_to_text(ledger: BudgetLedger) -> str:
    cp = configparser.ConfigParser()
    section = {}
    for f in fields(ledger):
        if f.name == "factors":
            continue
        v = getattr(ledger, f.name)
        section[f.name] = "none" if v is None else repr(v)
    for name in FACTOR_NAMES:
        section[name] = repr(ledger.factors[name])
    cp["budget"] = section
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def ledger_from_mapping(values: dict[str, str], base: BudgetLedger | None = None) -> BudgetLedger:
    """Ledger with string-valued overrides; unknown keys are rejected by name."""
    base = base or BudgetLedger()
    scalar = {f.name for f in fields(BudgetLedger)} - {"factors"}
    kwargs, factors = {}, dict(base.factors)
    for key, raw in values.items():
        if key in FACTOR_NAMES:
            factors[key] = float(raw)
        elif key == "trials_per_cooling":
            kwargs[key] = int(raw)
        elif key == "attempt_time":
            kwargs[key] = None if str(raw).strip().lower() == "none" else float(raw)
        elif key in scalar:
            kwargs[key] = float(raw)
        else:
            raise ValueError(f"unknown key: budget.{key}")
    return replace(base, factors=factors, **kwargs)


def ledger_from_text(text: str) -> BudgetLedger:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    extra = [s for s in cp.sections() if s != "budget"]
    if extra:
        raise ValueError(f"unknown section: {extra[0]}")
    return ledger_from_mapping(dict(cp["budget"]) if cp.has_section("budget") else {})
