"""Configuration files, CSV profiles and figures.

Config files are TOML with five sections. Every key carries its unit in
its name, and every key has a default, so an empty file describes the
reference experiment::

    [geometry]
    slit_a_width_um = 100.0

Dotted top-level keys (``geometry.slit_a_width_um = 100.0``) are the same
thing in TOML and are accepted too.
"""
import math
import re
import sys
from pathlib import Path

import numpy as np

from .aperture import SlitGeometry
from .errors import ConfigError
from .physics import BeamSpec, PhysicalSetup, sigma0_from_width

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "CONFIG_SCHEMA",
    "CSV_HEADER",
    "parse_config",
    "load_config",
    "serialize_config",
    "write_profile_csv",
    "read_profile_csv",
    "render_plots",
    "sweep_matrix",
]

CSV_HEADER = "x_m,psi_re,psi_im,born_density,reported_density"


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _finite(v):
    return math.isfinite(v)


# (section, key) -> (type, default, SI divisor, check, description)
CONFIG_SCHEMA = {
    ("setup", "mass_kg"): (float, 3.84e-26, 1.0, _positive, "atom mass"),
    ("setup", "v_y_m_per_s"): (float, 200.0, 1.0, _positive, "longitudinal speed"),
    ("setup", "hbar_js"): (float, 1.054571817e-34, 1.0, _positive, "reduced Planck constant"),
    ("setup", "n_principal"): (int, 60, None, _positive, "principal quantum number (metadata)"),
    ("setup", "lifetime_ms"): (float, 70.0, 1e3, _positive, "state lifetime (metadata, checked)"),
    ("beam", "width_mm"): (float, 6.0, 1e3, _positive, "full transverse beam width"),
    ("beam", "width_convention"): (str, "1/e2", None, None, "'1/e2', 'fwhm' or 'sigma'"),
    ("beam", "center_um"): (float, 0.0, 1e6, _finite, "beam centre"),
    ("geometry", "slit_a_width_um"): (float, 100.0, 1e6, _positive, "slit A width"),
    ("geometry", "slit_a_center_um"): (float, 150.0, 1e6, _finite, "slit A centre"),
    ("geometry", "grating_slit_width_um"): (float, 0.1, 1e6, _positive, "grating slit width"),
    ("geometry", "grating_separation_um"): (float, 0.2, 1e6, _positive, "gap between grating slits"),
    ("geometry", "grating_count"): (int, 1000, None, _positive, "number of grating slits"),
    ("geometry", "grating_center_um"): (float, -150.0, 1e6, _finite, "grating centre"),
    ("geometry", "d1_m"): (float, 1.0, 1.0, _positive, "source to slits"),
    ("geometry", "d2_m"): (float, 2.0, 1.0, _positive, "slits to detector"),
    ("detector", "halfwidth_mm"): (float, 4.0, 1e3, _positive, "detector window half-width"),
    ("detector", "points"): (int, 4001, None, _positive, "detector samples (odd, >= 101)"),
    ("detector", "prominence_fraction"): (float, 0.1, 1.0, _positive, "peak prominence threshold"),
    ("detector", "tail_tolerance"): (float, 1e-2, 1.0, _positive, "max edge/peak density ratio"),
    ("detector", "delta_vx_mm_per_s"): (float, 0.0, 1e3, _nonneg, "transverse velocity spread"),
    ("run", "assumption"): (str, "usual", None, None, "'usual', 'classical' or 'alternative'"),
    ("run", "fit_rtol"): (float, 1e-8, 1.0, _positive, "amplitude model tolerance"),
    ("run", "max_degree"): (int, 2, None, _positive, "amplitude polynomial degree"),
    ("run", "oracle_phase_step_rad"): (float, 0.2, 1.0, _positive, "oracle phase step"),
    ("run", "oracle_sample_budget"): (int, 20_000_000, None, _positive, "oracle sample budget"),
    ("run", "oracle_points"): (int, 20, None, _positive, "oracle detector points"),
    ("run", "sweep_start_m"): (float, 0.05, 1.0, _positive, "first sweep plane"),
    ("run", "sweep_stop_m"): (float, 2.0, 1.0, _positive, "last sweep plane"),
    ("run", "sweep_count"): (int, 41, None, _positive, "number of sweep planes"),
}
SECTIONS = ("setup", "beam", "geometry", "detector", "run")


def _line_of(text, key, section=False):
    if section:
        pattern = rf"^\s*(?:\[\s*{re.escape(key)}\s*\]|{re.escape(key)}\.)"
    else:
        pattern = rf"^\s*(?:[A-Za-z_]+\.)?{re.escape(key)}\s*="
    m = re.compile(pattern, re.MULTILINE).search(text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _coerce(kind, value, name, line):
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", key=name, line=line)
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", key=name, line=line)
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"expected an integer, got {value!r}", key=name, line=line)
        return int(value)
    return float(value)


def parse_config(text):
    """Parse a config document into an :class:`ExperimentConfig`.

    Unknown sections or keys, malformed values and violated invariants all
    raise :class:`ConfigError` naming the key and, when it can be found, the
    line.
    """
    from .experiment import ExperimentConfig

    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed config: {exc}", line=int(m.group(1)) if m else None) from None

    doc = {section: {} for section in SECTIONS}
    for section, values in raw.items():
        if section not in SECTIONS or not isinstance(values, dict):
            raise ConfigError(f"unknown section {section!r}", key=section,
                              line=_line_of(text, section, section=True))
        for key, value in values.items():
            name = f"{section}.{key}"
            line = _line_of(text, key)
            if (section, key) not in CONFIG_SCHEMA:
                raise ConfigError("unknown key", key=name, line=line)
            kind, _, _, check, _ = CONFIG_SCHEMA[(section, key)]
            value = _coerce(kind, value, name, line)
            if check is not None and not check(value):
                raise ConfigError(f"invalid value {value!r}", key=name, line=line)
            doc[section][key] = value
    for (section, key), (_, default, _, _, _) in CONFIG_SCHEMA.items():
        doc[section].setdefault(key, default)

    try:
        return config_from_document(doc)
    except ConfigError as exc:
        key = exc.key
        line = None
        if key and "." in key:
            line = _line_of(text, key.split(".", 1)[1].split("/")[0])
        raise ConfigError(str(exc).split(" (key")[0], key=key, line=line) from None


def load_config(path):
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _si(doc, section, key):
    kind, _, divisor, _, _ = CONFIG_SCHEMA[(section, key)]
    value = doc[section][key]
    return value / divisor if divisor not in (None, 1.0) else value


def config_from_document(doc):
    """Build the SI config from a complete human-unit document."""
    from .experiment import ExperimentConfig

    def si(section, key):
        return _si(doc, section, key)

    def build(cls, prefix, **kwargs):
        try:
            return cls(**kwargs)
        except ConfigError as exc:
            raise ConfigError(str(exc).split(" (key")[0],
                              key=f"{prefix}.{exc.key}" if exc.key else prefix) from None

    setup = build(PhysicalSetup, "setup", mass=si("setup", "mass_kg"),
                  v_y=si("setup", "v_y_m_per_s"), hbar=si("setup", "hbar_js"),
                  n_principal=doc["setup"]["n_principal"], lifetime=si("setup", "lifetime_ms"))
    width = si("beam", "width_mm")
    convention = doc["beam"]["width_convention"]
    try:
        sigma0 = sigma0_from_width(width, convention)
    except ConfigError:
        raise ConfigError(f"unknown width convention {convention!r}",
                          key="beam.width_convention") from None
    beam = build(BeamSpec, "beam", sigma0=sigma0, center=si("beam", "center_um"))
    geometry = build(
        SlitGeometry, "geometry",
        slit_a_width=si("geometry", "slit_a_width_um"),
        slit_a_center=si("geometry", "slit_a_center_um"),
        grating_slit_width=si("geometry", "grating_slit_width_um"),
        grating_separation=si("geometry", "grating_separation_um"),
        grating_count=doc["geometry"]["grating_count"],
        grating_center=si("geometry", "grating_center_um"),
    )
    return ExperimentConfig(
        setup=setup, beam=beam, geometry=geometry,
        d1=si("geometry", "d1_m"), d2=si("geometry", "d2_m"),
        detector_halfwidth=si("detector", "halfwidth_mm"),
        detector_points=doc["detector"]["points"],
        assumption=doc["run"]["assumption"],
        fit_rtol=si("run", "fit_rtol"),
        max_degree=doc["run"]["max_degree"],
        oracle_phase_step=si("run", "oracle_phase_step_rad"),
        oracle_sample_budget=doc["run"]["oracle_sample_budget"],
        oracle_points=doc["run"]["oracle_points"],
        prominence_fraction=si("detector", "prominence_fraction"),
        tail_tolerance=si("detector", "tail_tolerance"),
        delta_vx=si("detector", "delta_vx_mm_per_s"),
        sweep_start=si("run", "sweep_start_m"),
        sweep_stop=si("run", "sweep_stop_m"),
        sweep_count=doc["run"]["sweep_count"],
        beam_width=width,
        width_convention=convention,
        document=doc,
    )


def default_document():
    doc = {section: {} for section in SECTIONS}
    for (section, key), (_, default, _, _, _) in CONFIG_SCHEMA.items():
        doc[section][key] = default
    return doc


def _toml_value(value):
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def serialize_config(config):
    """Write the config back as a complete TOML document (all keys explicit)."""
    doc = config.document if config.document is not None else default_document()
    lines = []
    for section in SECTIONS:
        lines.append(f"[{section}]")
        for (sec, key), (_, default, _, _, _) in CONFIG_SCHEMA.items():
            if sec == section:
                lines.append(f"{key} = {_toml_value(doc[section].get(key, default))}")
        lines.append("")
    return "\n".join(lines)


def _provenance_lines(result):
    lines = []
    for key, value in result.provenance.items():
        if key == "timings_s":
            continue
        if isinstance(value, float):
            value = repr(float(value))
        lines.append(f"# {key}: {value}")
    return lines


def write_profile_csv(result, destination):
    """Write one scenario's detector profile as CSV.

    A ``#``-prefixed provenance block (everything but the wall-clock
    timings) precedes the header; values use 17 significant digits so they
    read back bit-exactly. Output is LF-terminated and reproducible byte for
    byte.
    """
    f = result.detector_field
    rows = np.column_stack([f.grid, f.values.real, f.values.imag,
                            result.born_profile.values, result.reported_profile.values])
    out = _provenance_lines(result)
    out.append(CSV_HEADER)
    out.extend(",".join(f"{v:.17g}" for v in row) for row in rows)
    path = Path(destination)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")
    return path


def read_profile_csv(path):
    """Read a profile CSV back; returns ``(columns, provenance)``.

    ``columns`` maps each header name to a float array.
    """
    provenance = {}
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(": ")
                provenance[key] = value
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}, provenance


def sweep_matrix(results, which="born"):
    """Stack sweep densities into a 2-D array, one row per plane."""
    attr = {"born": "born_profile", "reported": "reported_profile"}[which]
    return np.vstack([getattr(r, attr).values for r in results])


def _stamp(fig, result):
    fig.subplots_adjust(bottom=0.18)
    fig.text(0.01, 0.005, f"config {result.provenance['config_sha256'][:12]}  "
             f"{result.provenance['geometry_convention']}", fontsize=6, color="0.4")


def render_plots(results, destination_dir, kind="profiles", fmt="png"):
    """Render figures for scenario results; returns the written paths.

    ``kind='profiles'`` writes one detector profile plot per result.
    ``kind='sweep'`` treats ``results`` as one longitudinal sweep and writes
    heatmaps of the Born density and, for the alternative reading, of the
    reported density.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(destination_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = list(results)
    paths = []
    if kind == "profiles":
        for r in results:
            fig, ax = plt.subplots(figsize=(7, 3.5))
            x_mm = r.reported_profile.grid * 1e3
            ax.plot(x_mm, r.reported_profile.values, lw=0.8, label=f"{r.assumption} density")
            if r.assumption == "alternative":
                ax.plot(x_mm, r.born_profile.values, lw=0.5, color="0.6", zorder=0,
                        label=r"$|\psi|^2$")
                ax.axvline(r.median_x * 1e3, color="k", ls="--", lw=0.7, label="median")
            ax.set(xlabel="x (mm)", ylabel=r"density (m$^{-1}$)",
                   title=f"{r.assumption} assumption, {r.y * 100:g} cm behind the slits")
            ax.legend(fontsize=7)
            _stamp(fig, r)
            path = out_dir / f"profile_{r.assumption}_y{r.y * 100:g}cm.{fmt}"
            fig.savefig(path, dpi=120)
            plt.close(fig)
            paths.append(path)
    elif kind == "sweep":
        if not results:
            return paths
        which = ["born"] + (["reported"] if results[0].assumption == "alternative" else [])
        x_mm = results[0].born_profile.grid * 1e3
        y_cm = np.array([r.y for r in results]) * 100
        for w in which:
            fig, ax = plt.subplots(figsize=(7, 4.5))
            mesh = ax.pcolormesh(x_mm, y_cm, sweep_matrix(results, w), shading="nearest")
            fig.colorbar(mesh, ax=ax, label=r"density (m$^{-1}$)")
            ax.set(xlabel="x (mm)", ylabel="distance behind slits (cm)",
                   title=f"{w} density, {results[0].assumption} assumption")
            _stamp(fig, results[0])
            path = out_dir / f"sweep_{w}_{results[0].assumption}.{fmt}"
            fig.savefig(path, dpi=120)
            plt.close(fig)
            paths.append(path)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    return paths
