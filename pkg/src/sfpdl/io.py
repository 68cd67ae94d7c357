"""CSV ingestion, configuration files and report emission."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyData, MissingColumn, ParseError
from .frontier import FrontierFit, FrontierSpec, LevelData, returns_to_scale

ROLES = ("output", "input", "selectable", "dummy")


def read_schema(path) -> dict:
    """Column roles from a two-column ``column,role`` file (header optional, ``#`` comments)."""
    roles = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            if len(row) != 2:
                raise ConfigError(f"{path}:{lineno}: expected 'column,role'")
            name, role = row[0].strip(), row[1].strip().lower()
            if lineno == 1 and (name, role) == ("column", "role"):
                continue
            if role not in ROLES:
                raise ConfigError(f"{path}:{lineno}: unknown role {role!r}; expected one of {ROLES}")
            roles[name] = role
    return validate_schema(roles)


def validate_schema(roles: dict) -> dict:
    outputs = [k for k, v in roles.items() if v == "output"]
    if len(outputs) != 1:
        raise ConfigError(f"schema needs exactly one output column, found {len(outputs)}")
    bad = {k: v for k, v in roles.items() if v not in ROLES}
    if bad:
        raise ConfigError(f"unknown roles {bad}")
    return dict(roles)


def write_schema(path, roles: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["column", "role"])
        for name, role in roles.items():
            w.writerow([name, role])


def load_csv(path, schema: dict) -> LevelData:
    """Read the declared columns of a headed CSV file.

    Rows are numbered from 1 after the header. Missing or non-numeric
    values are rejected with their location; dummies must be 0 or 1.
    """
    schema = validate_schema(schema)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise EmptyData(f"{path} is empty") from None
        missing = [c for c in schema if c not in header]
        if missing:
            raise MissingColumn(f"{path}: columns not found: {missing}")
        index = {c: header.index(c) for c in schema}
        values = {c: [] for c in schema}
        for rowno, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            for col, j in index.items():
                cell = row[j].strip() if j < len(row) else ""
                if cell == "":
                    raise ParseError(rowno, col, "missing value")
                try:
                    x = float(cell)
                except ValueError:
                    raise ParseError(rowno, col, f"not a number: {cell!r}") from None
                if not math.isfinite(x):
                    raise ParseError(rowno, col, f"not finite: {cell!r}")
                if schema[col] == "dummy" and x not in (0.0, 1.0):
                    raise ParseError(rowno, col, f"dummy must be 0 or 1, got {cell!r}")
                values[col].append(x)
    if not values or not next(iter(values.values())):
        raise EmptyData(f"{path} has no data rows")
    output = next(k for k, v in schema.items() if v == "output")
    dummies = frozenset(k for k, v in schema.items() if v == "dummy")
    return LevelData({k: np.array(v) for k, v in values.items()}, output, dummies)


def write_csv(path, columns: dict) -> None:
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*(np.asarray(columns[c]) for c in names)):
            w.writerow([repr(float(x)) for x in row])


def spec_from_schema(schema: dict, form="cobb-douglas", second_order_optional: bool = False) -> FrontierSpec:
    mandatory = tuple(k for k, v in schema.items() if v == "input")
    selectable = tuple(k for k, v in schema.items() if v in ("selectable", "dummy"))
    return FrontierSpec(form, mandatory, selectable, second_order_optional)


def parse_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment. Values stay strings."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            out[key.replace("-", "_")] = value
    return out


def config_digest(config: dict) -> str:
    blob = json.dumps({k: str(v) for k, v in sorted(config.items())}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def fmt3(x) -> str:
    """Fixed three decimals, period separator; non-finite values print as ``nan``."""
    if x is None:
        return ""
    x = float(x)
    return "nan" if not math.isfinite(x) else f"{x:.3f}"


@dataclass
class EstimateReport:
    chain: str
    names: tuple
    estimates: np.ndarray
    std_errors: np.ndarray
    rts: float
    mean_eff: float
    num_z: int
    wrong_skew: bool
    penalty_levels: list = field(default_factory=list)
    seed: int = 0

    @classmethod
    def from_fit(cls, fit: FrontierFit, spec: FrontierSpec, seed: int = 0) -> "EstimateReport":
        return cls(fit.method, tuple(fit.names), np.asarray(fit.coefficients), np.asarray(fit.std_errors),
                   returns_to_scale(fit, spec), fit.mean_efficiency, fit.num_selected, bool(fit.wrong_skew),
                   list(fit.diagnostics.get("penalty_levels", [])), seed)

    def rows(self):
        for name, b, s in zip(self.names, self.estimates, self.std_errors):
            yield name, fmt3(b), fmt3(s)
        yield "RTS", fmt3(self.rts), ""
        yield "Mean Eff", fmt3(self.mean_eff), ""
        yield "Num Z", str(self.num_z), ""

    def to_text(self) -> str:
        width = max(12, *(len(n) for n in self.names))
        lines = [f"{self.chain}", f"{'':<{width}}{'estimate':>12}{'std.err':>12}"]
        for name, b, s in self.rows():
            lines.append(f"{name:<{width}}{b:>12}{s:>12}")
        lines.append(f"wrong skew: {'yes' if self.wrong_skew else 'no'}")
        if self.penalty_levels:
            lines.append("penalty levels: " + ", ".join(fmt3(p) for p in self.penalty_levels))
        return "\n".join(lines) + "\n"

    def write_csv(self, path, header: dict) -> None:
        with open(path, "w", newline="") as fh:
            for k, v in header.items():
                fh.write(f"# {k}: {v}\n")
            fh.write(f"# method: {self.chain}\n# wrong_skew: {int(self.wrong_skew)}\n")
            fh.write("# penalty_levels: " + ";".join(fmt3(p) for p in self.penalty_levels) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["term", "estimate", "std_error"])
            for row in self.rows():
                w.writerow(row)


def comparison_table(reports: list[EstimateReport]) -> tuple[list[str], list[list[str]]]:
    """Wide table: one column per method chain, estimate rows followed by SE rows in parentheses."""
    names = []
    for r in reports:
        names += [n for n in r.names if n not in names]
    header = ["term"] + [r.chain for r in reports]
    body = []
    for name in names:
        est, se = [name], [""]
        for r in reports:
            if name in r.names:
                i = r.names.index(name)
                est.append(fmt3(r.estimates[i]))
                se.append(f"({fmt3(r.std_errors[i])})")
            else:
                est.append("")
                se.append("")
        body += [est, se]
    body.append(["RTS"] + [fmt3(r.rts) for r in reports])
    body.append(["Mean Eff"] + [fmt3(r.mean_eff) for r in reports])
    body.append(["Num Z"] + [str(r.num_z) for r in reports])
    body.append(["Wrong skew"] + [str(int(r.wrong_skew)) for r in reports])
    return header, body


def write_table(path, header: list, body: list, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}: {v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(body)


def format_table(header: list, body: list) -> str:
    widths = [max(len(str(row[j])) for row in [header] + body) for j in range(len(header))]
    lines = []
    for row in [header] + body:
        lines.append("  ".join(str(c).ljust(widths[0]) if j == 0 else str(c).rjust(widths[j])
                               for j, c in enumerate(row)))
    return "\n".join(lines) + "\n"


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
