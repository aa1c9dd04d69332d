"""Command-line entry point.

Subcommands ``dynamics``, ``state``, ``geometry``, ``postselect``, ``budget``
and ``sweep`` each write one CSV (``--out`` path, default stdout) and, with
``--out``, a sibling ``<out>.manifest.ini`` echoing every resolved parameter
and a few headline results. Configuration is INI text with one section per
module; ``--set section.key=value`` overrides single keys. The config path
defaults to the ``IONMIRROR_CONFIG`` environment variable. Without a
subcommand the defaults manifest is printed.

Outputs are deterministic: floats are written with 12 significant digits
and sweeps are ordered by grid index.
"""
from __future__ import annotations

import argparse
import configparser
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import budget as budget_mod
from . import density, dynamics, geometry, postselect
from ._io import format_value, write_csv
from .levels import ZeemanConfig, build_level_scheme

CONFIG_ENV = "IONMIRROR_CONFIG"
SCENARIOS = ("dynamics", "state", "geometry", "postselect", "budget", "sweep")


def _optional_float(raw: str):
    return None if raw.strip().lower() == "none" else float(raw)


def _priors(raw: str):
    if raw.strip().lower() == "none":
        return None
    parts = [float(x) for x in raw.split(",")]
    if len(parts) != 2:
        raise ValueError("priors must be 'none' or 'p0,p1'")
    return tuple(parts)


def _bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _choice(*options):
    def parse(raw: str) -> str:
        v = raw.strip()
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {v!r}")
        return v

    return parse


def parse_grid(spec: str) -> np.ndarray:
    """``start:stop:step`` inclusive of ``stop`` (to rounding), or a comma list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if not step > 0 or stop < start:
            raise ValueError(f"grid needs step > 0 and stop >= start, got {spec!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(n), 12)
    values = np.array([float(p) for p in spec.split(",") if p.strip()])
    if values.size == 0:
        raise ValueError("empty grid")
    return values


def _grid(raw: str) -> str:
    parse_grid(raw)
    return raw.strip()


# section -> key -> (default text, parser, source note)
SCHEMA: dict[str, dict[str, tuple[str, object, str]]] = {
    "dynamics": {
        "gamma_tau": ("3", float, "delay of the reference excitation curves"),
        "delta": ("0", float, "differential Zeeman splitting in linewidths"),
        "t_max_over_tau": ("1.99", float, "first-order window ends at 2 tau"),
        "points": ("1000", int, "grid resolution choice"),
        "order": ("1", int, "number of mirror traversals kept"),
        "mirror": ("ideal", _choice("ideal", "aperture"), "ideal = full coverage; aperture = geometry section"),
        "method": ("analytic", _choice("analytic", "grid"), "solver choice"),
    },
    "state": {
        "gamma_tau": ("25", float, "any delay longer than the horizon gives the same block"),
        "horizon": ("20", float, "time after the delay at which the block is read, in 1/gamma"),
        "delta_grid": ("0:5:0.1", _grid, "standard fidelity curve range"),
    },
    "geometry": {
        "focal_length": ("2.1e-3", float, "reference mirror focal length, m"),
        "foci_separation": ("3000", float, "reference ion separation, m"),
        "theta_min_deg": ("20", float, "reference aperture lower edge"),
        "theta_max_deg": ("135", float, "reference aperture upper edge"),
        "epsilon_real": ("-18.74", float, "aluminum permittivity at 369 nm"),
        "epsilon_imag": ("3.37", float, "aluminum permittivity at 369 nm"),
        "wavelength": ("369e-9", float, "S1/2 to P1/2 wavelength, m"),
        "perfect_conductor": ("false", _bool, "replace the permittivity with an ideal conductor"),
    },
    "postselect": {
        "saturation_s0": ("0.01", float, "reference probe saturation"),
        "detuning": ("2", float, "reference probe detuning, linewidths"),
        "pulse_length": ("10000", float, "probe length in upper-state lifetimes (model choice)"),
        "reflectivity": ("none", _optional_float, "none = threshold reflectivity"),
        "coupling_efficiency": ("0.8946960917469554", float, "calibrated to a 0.14 pi phase at 2 linewidths"),
        "excitation_cap": ("5e-4", float, "reference per-pulse excitation limit"),
        "error_threshold": ("5e-4", float, "reference discrimination error target"),
        "priors": ("none", _priors, "none = derived from branching and reflectivities"),
        "reference_excitation": ("1e-5", float, "reference excitation at the reference probe"),
        "shape_factor": ("0.03402", float, "calibrated from the reference excitation"),
        "detection_efficiency": ("0.0890675513523223", float, "calibrated so the ion-1 threshold is 0.5"),
        "R1": ("0.5", float, "ion-1 beam-splitter reflectivity"),
        "ion1_qubit_probability": ("0.6666666666666666", float, "two of three decay channels of P,F=1,m=0"),
        "ion2_qubit_probability": (
            repr(4 / 27 * 0.47 * 0.78**2),
            float,
            "ideal success times mirror efficiency times focal factor",
        ),
        "delta": ("0", float, "Zeeman splitting for the postselection fidelity"),
        "include_detection_errors": ("true", _bool, "add Helstrom and excitation errors to the fidelity"),
        "reflectivity_grid": ("0:1:0.01", _grid, "curve sampling"),
    },
    "budget": {
        "cooling_time": ("200e-6", float, "reference Doppler cooling time, s"),
        "prep_time": ("7e-6", float, "reference preparation time, s"),
        "pi_pulse_time": ("1e-9", float, "reference excitation pulse length, s"),
        "postselect_time": ("80e-6", float, "reference probe duration, s"),
        "travel_plus_classical_time": ("20e-6", float, "photon travel plus equal classical signalling, s"),
        "trials_per_cooling": ("1", int, "attempts between cooling cycles"),
        "attempt_time": ("100e-6", _optional_float, "reference attempt duration; none = sum of parts"),
        "success_ideal": (repr(4 / 27), float, "ideal heralding probability"),
        "mirror_eta": ("0.47", float, "reference aperture and reflection efficiency"),
        "focal_intensity_per_ion": ("0.78", float, "thermal focal spread, applied per ion"),
        "bs_transmission": ("0.39", float, "transmission through both probe beam splitters"),
        "extra_loss": ("1", float, "further losses"),
    },
    "sweep": {
        "target": (
            "state",
            _choice("state", "eta", "fiber", "postselect_fidelity", "entanglement_rate"),
            "quantity evaluated per grid point",
        ),
        "grid": ("0:2:0.25", _grid, "sweep values"),
        "workers": ("4", int, "thread pool size"),
    },
}


@dataclass
class RunConfig:
    scenario: str | None
    values: dict[str, dict[str, object]]
    raw: dict[str, dict[str, str]]
    out: str | None = None
    results: list = field(default_factory=list)

    def __getitem__(self, section: str) -> dict[str, object]:
        return self.values[section]


def resolve_config(scenario, config_path=None, overrides=(), extra=None) -> RunConfig:
    """Merge defaults, config file and ``section.key=value`` overrides."""
    raw = {s: {k: v[0] for k, v in keys.items()} for s, keys in SCHEMA.items()}
    if config_path:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            with open(config_path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise ValueError(f"cannot read config {config_path}: {exc.strerror}") from None
        for section in cp.sections():
            for key, value in cp[section].items():
                _store(raw, section, key, value)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValueError(f"override must look like section.key=value, got {item!r}")
        name, value = item.split("=", 1)
        section, key = name.split(".", 1)
        _store(raw, section.strip(), key.strip(), value)
    for (section, key), value in (extra or {}).items():
        _store(raw, section, key, value)
    values = {}
    for section, keys in raw.items():
        values[section] = {}
        for key, text in keys.items():
            parser = SCHEMA[section][key][1]
            try:
                values[section][key] = parser(text)
            except ValueError as exc:
                raise ValueError(f"bad value for {section}.{key}: {exc}") from None
    return RunConfig(scenario, values, raw)


def _store(raw, section, key, value):
    if section not in SCHEMA:
        raise ValueError(f"unknown section: {section}")
    if key not in SCHEMA[section]:
        raise ValueError(f"unknown key: {section}.{key}")
    raw[section][key] = value.strip()


def manifest_text(cfg: RunConfig) -> str:
    buf = io.StringIO()
    buf.write("# ionmirror run manifest\n")
    buf.write(f"# scenario = {cfg.scenario or 'none'}\n")
    for section, keys in SCHEMA.items():
        buf.write(f"\n[{section}]\n")
        for key, (_, _, note) in keys.items():
            buf.write(f"# {note}\n{key} = {cfg.raw[section][key]}\n")
    if cfg.results:
        buf.write("\n[results]\n")
        for key, value in cfg.results:
            buf.write(f"{key} = {format_value(value)}\n")
    return buf.getvalue()


# scenario builders


def _geometry(cfg: RunConfig) -> geometry.MirrorGeometry:
    g = cfg["geometry"]
    eps = complex(math.inf) if g["perfect_conductor"] else complex(g["epsilon_real"], g["epsilon_imag"])
    return geometry.MirrorGeometry(
        focal_length=g["focal_length"],
        foci_separation=g["foci_separation"],
        theta_min=math.radians(g["theta_min_deg"]),
        theta_max=math.radians(g["theta_max_deg"]),
        epsilon=eps,
        wavelength=g["wavelength"],
    )


def _probe(cfg: RunConfig) -> postselect.ProbeConfig:
    p = cfg["postselect"]
    keys = (
        "saturation_s0 detuning pulse_length reflectivity coupling_efficiency excitation_cap error_threshold "
        "priors reference_excitation shape_factor detection_efficiency R1 ion1_qubit_probability "
        "ion2_qubit_probability"
    ).split()
    return postselect.ProbeConfig(**{k: p[k] for k in keys})


def _ledger(cfg: RunConfig) -> budget_mod.BudgetLedger:
    return budget_mod.ledger_from_mapping(cfg.raw["budget"])


def run_dynamics(cfg: RunConfig) -> str:
    d = cfg["dynamics"]
    scheme = build_level_scheme(ZeemanConfig.from_delta(d["delta"]))
    gam = np.eye(3) if d["mirror"] == "ideal" else geometry.gamma_rel(_geometry(cfg))
    kernel = dynamics.build_kernel(scheme, gamma_rel=gam, tau=d["gamma_tau"])
    if d["points"] < 2:
        raise ValueError("dynamics.points must be at least 2")
    t_max = d["t_max_over_tau"] * d["gamma_tau"]
    grid = np.linspace(0.0, t_max, d["points"])
    traj = dynamics.evolve(kernel, dynamics.standard_initial_state(), t_max, order=d["order"], t_grid=grid, method=d["method"])
    t_peak, p_peak = dynamics.peak_time(traj, 2)
    cfg.results += [("ion2_peak_t_over_tau", t_peak / kernel.tau), ("ion2_peak_probability", p_peak)]
    return dynamics.trajectory_csv(traj)


def run_state(cfg: RunConfig) -> str:
    s = cfg["state"]
    grid = parse_grid(s["delta_grid"])
    rows = density.fidelity_curve(grid, s["gamma_tau"], s["horizon"])
    cfg.results += [("success_at_first_delta", rows[0][3]), ("fidelity_at_first_delta", rows[0][4])]
    return write_csv(
        None,
        ["delta", "success_closed_form", "fidelity_closed_form", "success_numeric", "fidelity_numeric"],
        rows,
    )


def run_geometry(cfg: RunConfig) -> str:
    geom = _geometry(cfg)
    gam = geometry.gamma_rel(geom)
    waist, best = geometry.max_fiber_coupling()
    rows = [
        ("tau_s", geom.tau),
        ("gamma_rel_xx", gam[0, 0]),
        ("gamma_rel_yy", gam[1, 1]),
        ("gamma_rel_zz", gam[2, 2]),
        ("eta", geometry.efficiency_eta(geom)),
        ("helicity_cross_overlap_abs", abs(geometry.helicity_cross_overlap(geom))),
        ("fiber_best_waist_over_f", waist),
        ("fiber_max_coupling", best),
        ("two_mirror_fiber_bound", best**2),
    ]
    cfg.results += rows
    return write_csv(None, ["quantity", "value"], rows)


def run_postselect(cfg: RunConfig) -> str:
    probe = _probe(cfg)
    p = cfg["postselect"]
    r1, r2 = postselect.operating_reflectivities(probe)
    cfg.results += [
        ("phase_shift_rad", probe.phase_shift),
        ("photons_at_ion", probe.photons_at_ion),
        ("threshold_R1", postselect.threshold_reflectivity(probe, 1)),
        ("threshold_R2", r2),
        ("success_reduction", postselect.success_reduction(r1, r2)),
        ("postselection_fidelity", postselect.postselection_fidelity(probe, p["delta"], p["include_detection_errors"])),
    ]
    return postselect.reflectivity_csv(probe, parse_grid(p["reflectivity_grid"]))


def run_budget(cfg: RunConfig) -> str:
    return budget_mod.report_csv(_ledger(cfg))


def _sweep_point(cfg: RunConfig, target: str, x: float) -> tuple:
    if target == "state":
        num, _ = density.simulate_post(x, cfg["state"]["gamma_tau"], cfg["state"]["horizon"])
        cf = density.closed_form_post(x)
        return (x, cf.success_probability, cf.fidelity_singlet, num.success_probability, num.fidelity_singlet)
    if target == "eta":
        base = _geometry(cfg)
        geom = geometry.MirrorGeometry(
            focal_length=base.focal_length,
            foci_separation=base.foci_separation,
            theta_min=math.radians(x),
            theta_max=base.theta_max,
            epsilon=base.epsilon,
            wavelength=base.wavelength,
        )
        return (x, geometry.efficiency_eta(geom))
    if target == "fiber":
        return (x, geometry.fiber_coupling_efficiency(x))
    if target == "postselect_fidelity":
        p = cfg["postselect"]
        return (x, postselect.postselection_fidelity(_probe(cfg), x, p["include_detection_errors"]))
    ledger = replace(_ledger(cfg), trials_per_cooling=int(round(x)))
    return (x, budget_mod.repetition_rate(ledger), budget_mod.entanglement_rate(ledger))


SWEEP_HEADERS = {
    "state": ["delta", "success_closed_form", "fidelity_closed_form", "success_numeric", "fidelity_numeric"],
    "eta": ["theta_min_deg", "eta"],
    "fiber": ["waist_over_f", "coupling_efficiency"],
    "postselect_fidelity": ["delta", "postselection_fidelity"],
    "entanglement_rate": ["trials_per_cooling", "repetition_rate_hz", "entanglement_rate_hz"],
}


def run_sweep(cfg: RunConfig) -> str:
    s = cfg["sweep"]
    grid = parse_grid(s["grid"])
    if s["workers"] < 1:
        raise ValueError("sweep.workers must be at least 1")
    with ThreadPoolExecutor(max_workers=s["workers"]) as pool:
        # map preserves grid order regardless of completion order
        rows = list(pool.map(lambda x: _sweep_point(cfg, s["target"], float(x)), grid))
    return write_csv(None, SWEEP_HEADERS[s["target"]], rows)


RUNNERS = {
    "dynamics": run_dynamics,
    "state": run_state,
    "geometry": run_geometry,
    "postselect": run_postselect,
    "budget": run_budget,
    "sweep": run_sweep,
}


def run(cfg: RunConfig) -> str:
    """Execute a resolved config; returns the CSV text and writes files for ``--out``."""
    text = RUNNERS[cfg.scenario](cfg)
    if cfg.out:
        try:
            with open(cfg.out, "w", newline="") as fh:
                fh.write(text)
            with open(cfg.out + ".manifest.ini", "w", newline="") as fh:
                fh.write(manifest_text(cfg))
        except OSError as exc:
            raise ValueError(f"cannot write {cfg.out}: {exc.strerror}") from None
    return text


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValueError(message.replace("\n", " "))


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    # SUPPRESS keeps a subcommand from resetting flags given before it
    common.add_argument("--config", default=argparse.SUPPRESS, help=f"INI config file (default: ${CONFIG_ENV})")
    common.add_argument("--out", default=argparse.SUPPRESS, help="CSV output path; a .manifest.ini is written next to it")
    common.add_argument(
        "--set", action="append", default=argparse.SUPPRESS, metavar="SECTION.KEY=VALUE", help="override one key"
    )
    parser = _Parser(prog="ionmirror", parents=[common], description="Mirror-mediated ion entanglement models")
    sub = parser.add_subparsers(dest="scenario", parser_class=_Parser)
    for name in SCENARIOS:
        p = sub.add_parser(name, parents=[common])
        if name == "state":
            p.add_argument("--delta-grid", help="start:stop:step in linewidths")
        if name == "sweep":
            p.add_argument("--grid", help="start:stop:step")
            p.add_argument("--target", help="sweep quantity")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        extra = {}
        if getattr(args, "delta_grid", None):
            extra[("state", "delta_grid")] = args.delta_grid
        if getattr(args, "grid", None):
            extra[("sweep", "grid")] = args.grid
        if getattr(args, "target", None):
            extra[("sweep", "target")] = args.target
        config_path = getattr(args, "config", None) or os.environ.get(CONFIG_ENV)
        cfg = resolve_config(args.scenario, config_path, getattr(args, "set", []), extra)
        cfg.out = getattr(args, "out", None)
        if args.scenario is None:
            sys.stdout.write(manifest_text(cfg))
            return 0
        text = run(cfg)
        if not cfg.out:
            sys.stdout.write(text)
        else:
            for key, value in cfg.results:
                sys.stdout.write(f"{key}: {format_value(value)}\n")
        return 0
    except (ValueError, ArithmeticError) as exc:
        msg = " ".join(str(exc).split())
        sys.stderr.write(f"error: {msg}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
