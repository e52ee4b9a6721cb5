"""Command-line front end: ``multisqueeze <command> --config run.toml``.

Config sections: ``[structure]`` (layers), ``[path]`` (exponents, sigma),
``[sweep]`` (energies, eps), plus ``[resonance]`` and ``[bound]`` for those
commands.  Rationals may be written as strings ("3/2") and are kept exact.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import tomli
import tomlkit

from . import model, resonance, squeeze, transfer
from .errors import ConfigError, ExponentOutOfRange, InadmissibleConfiguration, SqueezeError

EXIT_OK, EXIT_CONFIG, EXIT_INADMISSIBLE, EXIT_NUMERIC = 0, 2, 3, 4

SECTIONS = {
    "structure": {"layers"},
    "path": {"exponents", "sigma"},
    "sweep": {"energies", "eps"},
    "resonance": {"id", "multiplier", "free_layers", "bracket", "cross_validate", "offset", "max_roots"},
    "bound": {"source", "matrix", "bracket", "energy"},
}
LAYER_KEYS = {"g", "p", "w"}


def _number(x, where):
    if isinstance(x, bool):
        raise ConfigError(f"{where}: expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"{where}: cannot read {x!r} as a number") from None
    raise ConfigError(f"{where}: expected a number, got {x!r}")


def _numbers(xs, where):
    if not isinstance(xs, list):
        raise ConfigError(f"{where}: expected a list")
    return tuple(_number(x, f"{where}[{k}]") for k, x in enumerate(xs))


@dataclass(frozen=True)
class RunConfig:
    layers: tuple[tuple, ...]
    exponents: tuple | None = None
    sigma: Any = 1
    energies: tuple = (1.0,)
    eps: tuple | None = None
    resonance: dict = field(default_factory=dict)
    bound: dict = field(default_factory=dict)

    @property
    def structure(self) -> model.StructureSpec:
        return model.StructureSpec.of(*self.layers)

    @property
    def path(self) -> model.PathSpec:
        if self.exponents is None:
            return model.PathSpec.linear(len(self.layers))
        return model.PathSpec(self.exponents)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown section(s): {sorted(unknown)}")
        for name, allowed in SECTIONS.items():
            extra = set(data.get(name, {})) - allowed
            if extra:
                raise ConfigError(f"[{name}]: unknown key(s) {sorted(extra)}")
        raw_layers = data.get("structure", {}).get("layers")
        if not raw_layers:
            raise ConfigError("[structure]: 'layers' is required and must be non-empty")
        layers = []
        for k, rec in enumerate(raw_layers):
            if not isinstance(rec, dict) or set(rec) - LAYER_KEYS or "g" not in rec:
                raise ConfigError(f"[structure] layer {k}: expected a table with g and optional p, w")
            layers.append(tuple(_number(rec.get(key, d), f"layer {k}.{key}") for key, d in (("g", 0), ("p", 0), ("w", 1))))
        path = data.get("path", {})
        sweep = data.get("sweep", {})
        cfg = cls(
            layers=tuple(layers),
            exponents=_numbers(path["exponents"], "[path].exponents") if "exponents" in path else None,
            sigma=_number(path.get("sigma", 1), "[path].sigma"),
            energies=_numbers(sweep.get("energies", [1.0]), "[sweep].energies"),
            eps=_numbers(sweep["eps"], "[sweep].eps") if "eps" in sweep else None,
            resonance=_plain(data.get("resonance", {})),
            bound=_plain(data.get("bound", {})),
        )
        cfg.validate()
        return cfg

    def validate(self):
        try:
            structure = self.structure
            model.classify_structure(structure)
            if len(self.path.exponents) != len(structure):
                raise ConfigError("[path].exponents must have one entry per layer")
        except SqueezeError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.sigma < 1:
            raise ConfigError("[path].sigma must be >= 1")

    def to_toml(self) -> str:
        doc = tomlkit.document()
        doc["structure"] = {"layers": [dict(zip(("g", "p", "w"), map(_echo, layer))) for layer in self.layers]}
        path = {"sigma": _echo(self.sigma)}
        if self.exponents is not None:
            path["exponents"] = [_echo(e) for e in self.exponents]
        doc["path"] = path
        sweep = {"energies": [_echo(e) for e in self.energies]}
        if self.eps is not None:
            sweep["eps"] = [_echo(e) for e in self.eps]
        doc["sweep"] = sweep
        for name in ("resonance", "bound"):
            if getattr(self, name):
                doc[name] = getattr(self, name)
        return tomlkit.dumps(doc)


def _plain(obj):
    """Copy parsed TOML into plain dicts/lists for stable comparison."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_plain(v) for v in obj]
    return obj


def _echo(x):
    return str(x) if isinstance(x, Fraction) else x


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return RunConfig.from_dict(data)


def parse_config(text: str) -> RunConfig:
    try:
        return RunConfig.from_dict(tomli.loads(text))
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config: {exc}") from None


# -- output -------------------------------------------------------------------


def _cell(x) -> str:
    if isinstance(x, complex):
        return repr(x.real) if x.imag == 0 else repr(x)
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass
class Table:
    name: str
    columns: list[str]
    rows: list[list]

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_cell(x) for x in row])
        return buf.getvalue()

    def json(self) -> str:
        def conv(x):
            if isinstance(x, complex):
                return x.real if x.imag == 0 else [x.real, x.imag]
            if isinstance(x, float) and not math.isfinite(x):
                return str(x)
            return x

        records = [dict(zip(self.columns, map(conv, row))) for row in self.rows]
        return json.dumps({"table": self.name, "columns": self.columns, "rows": records}, indent=2) + "\n"


def _emit(tables: list[Table], args, extra_files: dict[str, str] | None = None):
    if args.out is None:
        for t in tables:
            sys.stdout.write(t.json() if args.format == "json" else t.csv())
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for t in tables:
        (out / f"{t.name}.csv").write_text(t.csv())
        if args.format == "json":
            (out / f"{t.name}.json").write_text(t.json())
    for name, text in (extra_files or {}).items():
        (out / name).write_text(text)
    (out / "config.toml").write_text(args.config_obj.to_toml())


def _pool_map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))  # map keeps input order
    return [fn(x) for x in items]


# -- commands -------------------------------------------------------------------


def cmd_transmit(cfg: RunConfig, threads: int = 1) -> list[Table]:
    structure, path = cfg.structure, cfg.path
    eps_list = cfg.eps or (1.0,)
    points = [(float(e), float(E)) for e in eps_list for E in cfg.energies]
    if any(E <= 0 for _, E in points):
        raise ConfigError("[sweep].energies must be positive for transmission")

    def row(pt):
        eps, E = pt
        m = transfer.full_matrix(squeeze.realize(structure, path, eps), E)
        t, r = transfer.scattering(m, math.sqrt(E))
        T, R = abs(t) ** 2, abs(r) ** 2
        return [eps, E, T, R, math.atan2(t.imag, t.real), abs(T + R - 1)]

    rows = _pool_map(row, points, threads)
    return [Table("transmit", ["eps", "E", "T", "R", "phase_t", "unitarity_err"], rows)]


def cmd_squeeze(cfg: RunConfig, threads: int = 1):
    structure, path = cfg.structure, cfg.path
    report = model.check_squeeze_admissibility(structure, path)
    rows, cls_rows, traces = [], [], {}
    for E in cfg.energies:
        est = squeeze.limit_matrix(structure, path, float(E), cfg.eps, workers=threads)
        for name in squeeze.ELEMENTS:
            f = est.fits[name]
            rows.append([float(E), name, f.status, f.exponent, f.r2, f.value, f.error,
                         "" if f.order is None else f.order])
            traces[f"trace_E{float(E):g}_{name}.dat"] = "".join(
                f"{e!r} {_cell(v)}\n" for e, v in zip(est.eps, est.trace(name))
            )
        cls = squeeze.classify_limit(est)
        cls_rows.append([float(E), cls.kind, "" if cls.theta is None else cls.theta,
                         "" if cls.alpha is None else cls.alpha, "" if est.order is None else est.order,
                         est.truncated, report.admissible])
    tables = [
        Table("squeeze", ["E", "element", "status", "exponent", "r2", "value", "error", "order"], rows),
        Table("classification", ["E", "class", "theta", "alpha", "order", "truncated", "admissible"], cls_rows),
    ]
    return tables, traces


def _resonance_setup(cfg: RunConfig):
    opts = cfg.resonance
    structure, path = cfg.structure, cfg.path
    classes = model.classify_structure(structure)
    eq = resonance.build_equation(classes, cfg.sigma, opts.get("multiplier"))
    free = opts.get("free_layers")
    if not free:
        raise ConfigError("[resonance].free_layers must list at least one layer")
    template = resonance.scaled_structure(structure, free)

    def params(x):
        return squeeze.limit_parameters(template(x), path, cfg.sigma)

    return eq, template, params


def cmd_resonance(cfg: RunConfig, threads: int = 1) -> list[Table]:
    opts = cfg.resonance
    eq, template, params = _resonance_setup(cfg)
    bracket = opts.get("bracket")
    if not (isinstance(bracket, list) and len(bracket) == 2):
        raise ConfigError("[resonance].bracket must be [lo, hi]")
    roots = resonance.solve(eq, lambda x: {}, bracket, params, max_roots=opts.get("max_roots"))
    check = opts.get("cross_validate", False)
    offset = float(opts.get("offset", 0.1))
    E = float(cfg.energies[0])

    def verdict(x):
        if not check:
            return "skipped"
        res = resonance.cross_validate(eq, x, template, cfg.path, E, offset, cfg.eps)
        return "pass" if res.passed else f"fail({res.below}/{res.at_root}/{res.above})"

    verdicts = _pool_map(verdict, roots, threads)
    config_id = opts.get("id", "-".join(eq.classes))
    rows = [[config_id, float(cfg.sigma), k, x, v] for k, (x, v) in enumerate(zip(roots, verdicts))]
    eq_table = Table(
        "equation",
        ["id", "sigma", "sigma_range", "multiplier", "equation", "pencils"],
        [[config_id, float(cfg.sigma), eq.sigma_range, eq.multiplier, str(eq),
          " ".join(sorted(map(str, eq.pencils)))]],
    )
    return [Table("resonance", ["id", "sigma", "root_index", "root", "cross_validation"], rows), eq_table]


def cmd_bound(cfg: RunConfig, threads: int = 1) -> list[Table]:
    opts = cfg.bound
    bracket = opts.get("bracket")
    if not (isinstance(bracket, list) and len(bracket) == 2):
        raise ConfigError("[bound].bracket must be [lo, hi]")
    source = opts.get("source", "matrix")
    rows = []
    if source == "matrix":
        m = opts.get("matrix")
        try:
            tm = transfer.TransferMatrix(float(m[0][0]), float(m[0][1]), float(m[1][0]), float(m[1][1]))
        except (TypeError, IndexError, ValueError):
            raise ConfigError("[bound].matrix must be [[a, b], [c, d]]") from None
        rows += [["matrix", "", k] for k in transfer.bound_states(transfer.constant_matrix(tm), bracket)]
    elif source == "limit":
        est = squeeze.limit_matrix(cfg.structure, cfg.path, float(opts.get("energy", 1.0)), cfg.eps)
        squeeze.classify_limit(est)
        tm = est.matrix
        tm = transfer.TransferMatrix(*(complex(x).real for x in tm.entries()))
        rows += [["limit", "", k] for k in transfer.bound_states(transfer.constant_matrix(tm), bracket)]
    elif source == "structure":
        eps_list = cfg.eps or (1.0,)

        def levels(eps):
            vals = squeeze.realize(cfg.structure, cfg.path, float(eps))
            return [["structure", float(eps), k] for k in
                    transfer.bound_states(transfer.structure_bound_matrix(vals), bracket)]

        for chunk in _pool_map(levels, eps_list, threads):
            rows += chunk
    else:
        raise ConfigError(f"[bound].source must be matrix, limit or structure, got {source!r}")
    rows = [r + [-r[2] ** 2] for r in rows]
    return [Table("bound", ["source", "eps", "kappa", "energy"], rows)]


def cmd_classify(cfg: RunConfig, threads: int = 1) -> list[Table]:
    structure, path = cfg.structure, cfg.path
    layer_rows = []
    for i, c in enumerate(model.classify_structure(structure), 1):
        layer_rows.append([i, c.kind.value, c.alpha if c.is_regular else "", c.s if c.is_prime else "",
                           "" if c.sigma is None else float(c.sigma)])
    report = model.check_squeeze_admissibility(structure, path)
    face_rows = []
    for f in report.faces:
        tags = model.pencil_membership(structure, path, f.i, f.j, cfg.sigma)
        face_rows.append([f.i, f.j, "/".join(f.classes), f.row, f.requirement, f.passed,
                          " ".join(sorted(map(str, tags)))])
    return [
        Table("layers", ["layer", "class", "alpha", "s", "sigma"], layer_rows),
        Table("faces", ["i", "j", "classes", "rule", "requirement", "passed", "pencils"], face_rows),
    ]


COMMANDS = {
    "transmit": cmd_transmit,
    "squeeze": cmd_squeeze,
    "resonance": cmd_resonance,
    "bound": cmd_bound,
    "classify": cmd_classify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multisqueeze", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--out", help="output directory (default: tables to stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="json also writes a JSON mirror of every table")
    parser.add_argument("--threads", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        args.config_obj = cfg
        result = COMMANDS[args.command](cfg, max(1, args.threads))
        tables, extra = result if isinstance(result, tuple) else (result, None)
        _emit(tables, args, extra)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InadmissibleConfiguration as exc:
        print(f"inadmissible configuration: {exc} [rule: {exc.rule}]", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except ExponentOutOfRange as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SqueezeError, ArithmeticError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
