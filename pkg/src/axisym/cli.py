"""Command-line driver.

Subcommands: simulate, covariance, variogram, converge, check. Every run
reads an INI config (``--config``); see ``configs/`` for the presets and the
README for the key reference.
"""

from __future__ import annotations

import argparse
import configparser
import io as _io
import itertools
import json
import logging
import math
import platform
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import CovarianceSpec, cov, variogram
from .diagnostics import convergence_study, empirical_variogram
from .io import (sha256, write_realization_binary, write_realization_csv,
                 write_table)
from .sampler import CoefficientSampler, SynthesisBasis, derive_seed, highest_order, synthesize
from .sphere_geom import LatLonGrid, uniform_grid
from .spectrum import (AdmissibilityError, CustomXi, DecayCertificate, Exponential,
                       Indicator, Kronecker, LegendreMatern, Multiquadric, Ones,
                       Rational, SpectrumModel, check_c4, gamma_block)
from .sampler import interleaved_lag_matrix

log = logging.getLogger("axisym")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ADMISSIBILITY = 3
EXIT_IO = 4

SCHEMA = {
    "model": {"xi", "tau2", "nu", "delta", "xi_values", "rho", "phi", "lambda",
              "alpha", "gamma", "kappa", "beta", "r", "n0"},
    "run": {"n", "n_colat", "n_lon", "seed", "n_reps"},
    "output": {"directory", "format"},
    "covariance": {"panel", "colat1", "dlon", "half_width", "n_points",
                   "colat_min", "colat_max"},
    "variogram": {"latitudes_deg", "n_lon", "lag_bins"},
    "converge": {"n_ref", "truncations", "n_colat", "n_lon", "power"},
}
SWEEPABLE = ("tau2", "nu", "delta", "phi", "alpha", "gamma", "kappa")

DEFAULT_MODEL = {"xi": "legendre_matern", "tau2": "100", "nu": "1.5",
                 "rho": "kronecker", "lambda": "indicator", "alpha": "10", "kappa": "0"}
COMMAND_DEFAULTS = {
    "simulate": {"n": "200", "n_colat": "500", "n_lon": "500", "seed": "2021", "n_reps": "1"},
    "covariance": {"n": "200", "seed": "2021"},
    "variogram": {"n": "200", "seed": "2021", "n_reps": "1000"},
    "converge": {"seed": "2021", "n_reps": "1000"},
    "check": {"n": "200", "seed": "2021"},
}


class ConfigError(Exception):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        where = ""
        if path:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip())
        self.line = line


class GateError(Exception):
    """Model failed the summability check and no override was given."""


# --- config parsing ----------------------------------------------------------

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")
_ANGLE_RE = re.compile(r"^([+-]?\d*\.?\d*)\s*\*?\s*pi(?:\s*/\s*(\d+(?:\.\d+)?))?$")


def _line_index(text: str) -> dict[tuple[str, str], int]:
    lines = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip().lower()
            lines[(section, "")] = no
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            lines[(section, m.group(1).strip().lower())] = no
    return lines


def parse_angle(token: str) -> float:
    """Float or a multiple of pi such as ``pi/3``, ``2pi/3``, ``-0.5*pi``."""
    token = token.strip().lower()
    m = _ANGLE_RE.match(token)
    if m:
        coef = m.group(1)
        if coef in ("", "+"):
            c = 1.0
        elif coef == "-":
            c = -1.0
        else:
            c = float(coef)
        return c * math.pi / (float(m.group(2)) if m.group(2) else 1.0)
    return float(token)


@dataclass
class RunConfig:
    sections: dict[str, dict[str, str]]
    lines: dict[tuple[str, str], int] = field(default_factory=dict)
    path: str | None = None

    def err(self, section: str, key: str, message: str) -> ConfigError:
        line = self.lines.get((section, key), self.lines.get((section, "")))
        return ConfigError(f"[{section}] {key}: {message}", line, self.path)

    def raw(self, section: str, key: str, default: str | None = None) -> str | None:
        return self.sections.get(section, {}).get(key, default)

    def get(self, section, key, conv, default=None):
        value = self.raw(section, key)
        if value is None:
            if default is None:
                raise self.err(section, key, "missing required key")
            value = default
        try:
            return conv(value)
        except (TypeError, ValueError) as exc:
            raise self.err(section, key, f"bad value {value!r} ({exc})") from None

    def get_list(self, section, key, conv, default=None):
        return self.get(section, key,
                        lambda v: [conv(t) for t in v.split(",") if t.strip()], default)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for sec, items in self.sections.items():
            cp[sec] = items
        buf = _io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def load_config(path: str | None, command: str) -> RunConfig:
    text = ""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError:
            raise
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=path or "<defaults>")
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"syntax error: {exc.errors[0][1].strip() if exc.errors else exc}",
                          line, path) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, path) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, path) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc), None, path) from None
    lines = _line_index(text)
    sections = {s: dict(cp[s]) for s in cp.sections()}
    for sec, items in sections.items():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", lines.get((sec, "")), path)
        for key in items:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", lines.get((sec, key)), path)
    if "model" not in sections:
        sections["model"] = dict(DEFAULT_MODEL)
    run = sections.setdefault("run", {})
    for key, value in COMMAND_DEFAULTS.get(command, {}).items():
        run.setdefault(key, value)
    sections.setdefault("output", {}).setdefault("directory", "out")
    sections["output"].setdefault("format", "csv")
    return RunConfig(sections, lines, path)


def _build_model(cfg: RunConfig, values: dict[str, str]) -> SpectrumModel:
    def num(key, conv=float, default=None):
        return cfg.get("model", key, conv, default) if key not in values else _conv(key, values[key], conv)

    def _conv(key, value, conv):
        try:
            return conv(value)
        except ValueError as exc:
            raise cfg.err("model", key, f"bad value {value!r} ({exc})") from None

    xi_kind = cfg.raw("model", "xi", "legendre_matern").strip().lower()
    try:
        if xi_kind == "legendre_matern":
            xi = LegendreMatern(num("tau2"), num("nu"))
        elif xi_kind == "multiquadric":
            xi = Multiquadric(num("delta"))
        elif xi_kind == "custom":
            xi = CustomXi(tuple(cfg.get_list("model", "xi_values", float)))
        else:
            raise cfg.err("model", "xi", f"unknown xi family {xi_kind!r}")

        rho_kind = cfg.raw("model", "rho", "kronecker").strip().lower()
        if rho_kind == "kronecker":
            rho = Kronecker()
        elif rho_kind == "exponential":
            rho = Exponential(num("phi"))
        else:
            raise cfg.err("model", "rho", f"unknown rho family {rho_kind!r}")

        lam_kind = cfg.raw("model", "lambda", "ones").strip().lower()
        alpha = values.get("alpha", cfg.raw("model", "alpha"))
        if lam_kind == "indicator" and alpha is not None and alpha.strip().lower() in ("inf", "ones"):
            lam_kind = "ones"
        if lam_kind == "indicator":
            lam = Indicator(num("alpha", lambda v: int(v)))
        elif lam_kind == "rational":
            lam = Rational(num("gamma"))
        elif lam_kind == "ones":
            lam = Ones()
        else:
            raise cfg.err("model", "lambda", f"unknown lambda family {lam_kind!r}")
        kappa = num("kappa", float, "0")
    except ConfigError:
        raise
    except ValueError as exc:
        raise cfg.err("model", "", str(exc)) from None
    return SpectrumModel(xi, rho, lam, kappa)


def build_models(cfg: RunConfig) -> list[tuple[str, SpectrumModel]]:
    """Expand comma-separated sweep keys into (tag, model) variants."""
    sweep = []
    for key in SWEEPABLE:
        raw = cfg.raw("model", key)
        if raw is not None and "," in raw:
            sweep.append((key, [t.strip() for t in raw.split(",") if t.strip()]))
    if not sweep:
        return [("model", _build_model(cfg, {}))]
    out = []
    for combo in itertools.product(*(vals for _, vals in sweep)):
        values = {k: v for (k, _), v in zip(sweep, combo)}
        tag = "_".join(f"{k}-{v}" for k, v in values.items())
        out.append((tag, _build_model(cfg, values)))
    return out


def build_certificate(cfg: RunConfig) -> DecayCertificate | None:
    keys = [cfg.raw("model", k) for k in ("beta", "r", "n0")]
    if all(k is None for k in keys):
        return None
    try:
        return DecayCertificate(cfg.get("model", "beta", float), cfg.get("model", "r", float),
                                cfg.get("model", "n0", int))
    except ValueError as exc:
        raise cfg.err("model", "beta", str(exc)) from None


# --- shared helpers -----------------------------------------------------------

def _gate(model: SpectrumModel, cert, allow: bool):
    branch = "kronecker" if isinstance(model.rho, Kronecker) else "general"
    report = check_c4(model, cert, branch)
    if isinstance(model.rho, Kronecker) and model.kappa != int(model.kappa):
        log.warning("Kronecker rho with non-integer kappa=%g gives g == 0", model.kappa)
    if not report.passed:
        if not allow:
            raise GateError(f"{report} (use --allow-unchecked to override)")
        log.warning("proceeding without summability guarantee: %s", report)
    return report


def _model_dict(model: SpectrumModel) -> dict:
    def fam(obj):
        d = {"family": type(obj).__name__}
        d.update({k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(obj).items()})
        return d
    return {"xi": fam(model.xi), "rho": fam(model.rho), "lambda": fam(model.lam),
            "kappa": model.kappa}


def _write_manifest(out: Path, command: str, cfg: RunConfig, files: list[dict], extra=None):
    (out / "config.ini").write_text(cfg.to_ini())
    manifest = {
        "command": command,
        "config": cfg.to_ini(),
        "base_seed": cfg.get("run", "seed", int),
        "files": files,
        "versions": {"axisym": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _file_entry(path: Path, out: Path, **meta) -> dict:
    return {"path": str(path.relative_to(out)), "sha256": sha256(path), **meta}


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.raw("output", "directory"))
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- commands ------------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, args) -> int:
    N = cfg.get("run", "n", int)
    grid = uniform_grid(cfg.get("run", "n_colat", int), cfg.get("run", "n_lon", int))
    seed = cfg.get("run", "seed", int)
    n_reps = cfg.get("run", "n_reps", int)
    fmt = cfg.raw("output", "format").strip().lower()
    if fmt not in ("csv", "binary"):
        raise cfg.err("output", "format", "must be csv or binary")
    cert = build_certificate(cfg)
    out = _outdir(cfg)
    files = []
    for tag, model in build_models(cfg):
        _gate(model, cert, args.allow_unchecked)
        sampler = CoefficientSampler(model, N)
        basis = SynthesisBasis(grid, N, highest_order(model, N))
        for r in range(n_reps):
            rep_seed = derive_seed(seed, r)
            real = synthesize(sampler.draw(rep_seed), grid, basis)
            name = f"realization_{tag}" + (f"_r{r:04d}" if n_reps > 1 else "")
            path = out / (name + (".csv" if fmt == "csv" else ".bin"))
            if fmt == "csv":
                write_realization_csv(path, real)
            else:
                write_realization_binary(path, real)
            files.append(_file_entry(path, out, variant=tag, replicate=r, seed=rep_seed,
                                     truncation=N, model=_model_dict(model)))
            print(f"wrote {path}")
    _write_manifest(out, "simulate", cfg, files,
                    {"grid": {"kind": "uniform", "n_colat": grid.shape[0], "n_lon": grid.shape[1]}})
    return EXIT_OK


def cmd_covariance(cfg: RunConfig, args) -> int:
    N = cfg.get("run", "n", int)
    panel = cfg.raw("covariance", "panel", "l2_dlon").strip().lower()
    n_points = cfg.get("covariance", "n_points", int, "41")
    hw = cfg.get("covariance", "half_width", parse_angle, "0.2")
    out = _outdir(cfg)
    files = []
    for tag, model in build_models(cfg):
        spec = CovarianceSpec(model, N)
        cols = {"L1": [], "L2": [], "dlon": [], "value": []}
        if panel == "l2_dlon":
            for L1 in cfg.get_list("covariance", "colat1", parse_angle, "pi/3, pi/2, 2pi/3"):
                L2 = np.clip(np.linspace(L1 - hw, L1 + hw, n_points), 0.0, math.pi)
                d = np.linspace(-hw, hw, n_points)
                d = (d - d[::-1]) / 2.0  # exactly antisymmetric about dlon = 0
                L2g, dg = np.meshgrid(L2, d, indexing="ij")
                L1g = np.full_like(L2g, L1)
                vals = cov(spec, L1g, L2g, dg)
                for k, v in zip(cols, (L1g, L2g, dg, vals)):
                    cols[k].append(v.ravel())
        elif panel == "l1_l2":
            lo = cfg.get("covariance", "colat_min", parse_angle, "1.2")
            hi = cfg.get("covariance", "colat_max", parse_angle, "1.9")
            Ls = np.linspace(lo, hi, n_points)
            for d in cfg.get_list("covariance", "dlon", parse_angle, "-0.2, 0, 0.2"):
                L1g, L2g = np.meshgrid(Ls, Ls, indexing="ij")
                dg = np.full_like(L1g, d)
                vals = cov(spec, L1g, L2g, dg)
                for k, v in zip(cols, (L1g, L2g, dg, vals)):
                    cols[k].append(v.ravel())
        else:
            raise cfg.err("covariance", "panel", "must be l2_dlon or l1_l2")
        path = out / f"covariance_{tag}_{panel}.csv"
        write_table(path, list(cols), [np.concatenate(v) for v in cols.values()])
        files.append(_file_entry(path, out, variant=tag, truncation=N, model=_model_dict(model)))
        print(f"wrote {path}")
    _write_manifest(out, "covariance", cfg, files)
    return EXIT_OK


def cmd_variogram(cfg: RunConfig, args) -> int:
    N = cfg.get("run", "n", int)
    seed = cfg.get("run", "seed", int)
    n_reps = cfg.get("run", "n_reps", int)
    lats = cfg.get_list("variogram", "latitudes_deg", float, "60, 20, -20, -60")
    if any(not -90 < v < 90 for v in lats):
        raise cfg.err("variogram", "latitudes_deg", "latitudes must lie strictly inside (-90, 90)")
    n_lon = cfg.get("variogram", "n_lon", int, "250")
    colats = np.sort(np.radians(90.0 - np.asarray(lats)))
    grid = LatLonGrid(colats, np.arange(n_lon) * (2 * math.pi / n_lon))
    edges = None
    if cfg.raw("variogram", "lag_bins") is not None:
        edges = cfg.get_list("variogram", "lag_bins", parse_angle)
    cert = build_certificate(cfg)
    out = _outdir(cfg)
    files = []
    from .sampler import ensemble
    for tag, model in build_models(cfg):
        _gate(model, cert, args.allow_unchecked)
        reals = list(ensemble(model, N, grid, n_reps, seed, threads=args.threads))
        spec = CovarianceSpec(model, N)
        cols = {k: [] for k in ("colat", "lag", "gamma_hat", "gamma_theory", "n_pairs",
                                "env_min", "env_max", "env_q025", "env_q975")}
        for L in colats:
            est = empirical_variogram(reals, float(L), edges)
            lo, hi = est.envelope("minmax")
            q_lo, q_hi = est.envelope("quantile")
            theory = variogram(spec, float(L), est.lags)
            for k, v in zip(cols, (np.full(est.lags.size, L), est.lags, est.gamma_hat, theory,
                                   est.n_pairs, lo, hi, q_lo, q_hi)):
                cols[k].append(np.asarray(v))
        path = out / f"variogram_{tag}.csv"
        write_table(path, list(cols), [np.concatenate(v) for v in cols.values()])
        files.append(_file_entry(path, out, variant=tag, truncation=N, model=_model_dict(model)))
        print(f"wrote {path}")
    _write_manifest(out, "variogram", cfg, files, {
        "layout": {"parallels_colat": colats.tolist(), "latitudes_deg": lats,
                   "n_lon_per_parallel": n_lon, "n_locations": int(colats.size * n_lon)}})
    return EXIT_OK


def cmd_converge(cfg: RunConfig, args) -> int:
    N_ref = cfg.get("converge", "n_ref", int, "1000")
    Ns = cfg.get_list("converge", "truncations", int, "16, 32, 64, 128, 256")
    grid = uniform_grid(cfg.get("converge", "n_colat", int, "64"),
                        cfg.get("converge", "n_lon", int, "64"))
    power = cfg.get("converge", "power", int, "2")
    if power not in (1, 2):
        raise cfg.err("converge", "power", "must be 1 or 2")
    seed = cfg.get("run", "seed", int)
    n_reps = cfg.get("run", "n_reps", int)
    cert = build_certificate(cfg)
    out = _outdir(cfg)
    files = []
    for tag, model in build_models(cfg):
        _gate(model, cert, args.allow_unchecked)
        try:
            study = convergence_study(model, N_ref, Ns, grid, n_reps, seed, power=power,
                                      threads=args.threads, certificate=cert)
        except ValueError as exc:
            if isinstance(exc, AdmissibilityError):
                raise
            raise cfg.err("converge", "truncations", str(exc)) from None
        bound = study.theory_bound()
        bound = np.full(study.truncations.size, np.nan) if bound is None else bound
        path = out / f"convergence_{tag}.csv"
        write_table(path, ["N", "mean_error", "theory_bound", "l2_theory"],
                    [study.truncations, study.errors, bound, study.l2_theory])
        files.append(_file_entry(path, out, variant=tag, model=_model_dict(model)))
        theo = study.theoretical_slope
        print(f"{tag}: fitted slope {study.fitted_slope:.4f}; theoretical rate "
              f"{'n/a' if theo is None else f'{theo:.4f}'} "
              f"(statistic: mean of max|Z_ref - Z_N|^{power}, N_ref={N_ref})")
        print(f"wrote {path}")
    _write_manifest(out, "converge", cfg, files)
    return EXIT_OK


def cmd_check(cfg: RunConfig, args) -> int:
    N = cfg.get("run", "n", int)
    cert = build_certificate(cfg)
    ok = True
    for tag, model in build_models(cfg):
        branch = "kronecker" if isinstance(model.rho, Kronecker) else "general"
        report = check_c4(model, cert, branch)
        print(f"{tag}: {report}")
        ok &= report.passed
        try:
            for m in range(min(N, 1) + 1):
                gamma_block(model, m, N)
            if N >= 1:
                W = interleaved_lag_matrix(model, N)
                lo = float(np.linalg.eigvalsh(W)[0])
                print(f"{tag}: PSD ok; min eigenvalue of unit-scale order block "
                      f"(covers all m <= {N}) = {lo:.3e}")
                if lo < -1e-10:
                    CoefficientSampler(model, N)  # names the offending order
        except AdmissibilityError as exc:
            print(f"{tag}: PSD FAIL: {exc}")
            ok = False
    return EXIT_OK if ok else EXIT_ADMISSIBILITY


COMMANDS = {"simulate": cmd_simulate, "covariance": cmd_covariance,
            "variogram": cmd_variogram, "converge": cmd_converge, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI run configuration")
    common.add_argument("--seed", type=int, help="base seed (overrides [run] seed)")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output])")
    common.add_argument("--threads", type=int, default=1, metavar="K",
                        help="worker threads for replicate loops")
    common.add_argument("--allow-unchecked", action="store_true",
                        help="run even if the summability check fails")
    common.add_argument("-v", "--verbose", action="store_true")
    parser = argparse.ArgumentParser(prog="axisym", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__name__.replace("cmd_", ""))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config, args.command)
        if args.seed is not None:
            cfg.sections["run"]["seed"] = str(args.seed)
        if args.out is not None:
            cfg.sections["output"]["directory"] = args.out
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GateError, AdmissibilityError) as exc:
        print(f"admissibility error: {exc}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
