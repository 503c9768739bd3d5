"""TOML configuration files for pseudogroups.

Layout::

    [transversal]
    epsilon0 = 0.2
    components = [[-1.0, 1.0, -1.5, 1.5]]   # core lo, core hi, extended lo, extended hi

    [[generator]]
    id = "h"
    kind = "affine"
    params = { slope = 2.0, offset = 0.0 }
    component = 0
    domain = [-0.5, 0.5]
    extended_domain = [-0.7, 0.7]
    target = 0
    inverse_of = "k"        # optional: this generator inverts generator "k"

Generators whose inverse is not listed get one computed; every component
gets an identity if none is listed.
"""

from __future__ import annotations

import re
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .maps import Affine, Interval, InvalidMap, LocalMap, OutOfDomain, expr_from_dict
from .pseudogroup import Pseudogroup, Transversal, ValidationError


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


def _pair(value, name):
    if not (isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value)):
        raise ParseError("expected a list of two numbers", field=name)
    return float(value[0]), float(value[1])


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ParseError(f"missing key {key!r}", field=f"{where}.{key}")
    return table[key]


def _orientation_error(exc: InvalidMap, gid: str) -> ValidationError:
    msg = str(exc)
    name = msg.split(":", 1)[0] if ":" in msg else "map data"
    return ValidationError(name, f"{gid}: {msg}")


def pseudogroup_from_dict(data: dict) -> Pseudogroup:
    tv_data = _require(data, "transversal", "root")
    eps0 = float(_require(tv_data, "epsilon0", "transversal"))
    comps = []
    for idx, row in enumerate(_require(tv_data, "components", "transversal")):
        if not (isinstance(row, list) and len(row) == 4):
            raise ParseError("component rows need four numbers", field=f"transversal.components[{idx}]")
        clo, chi, elo, ehi = (float(v) for v in row)
        try:
            comps.append((Interval(idx, clo, chi), Interval(idx, elo, ehi)))
        except ValueError as exc:
            raise ValidationError("interval order", str(exc)) from None
    tv = Transversal(tuple(comps), eps0)

    gens: list[LocalMap] = []
    pairs: dict[str, str] = {}
    for idx, g in enumerate(data.get("generator", [])):
        where = f"generator[{idx}]"
        gid = str(_require(g, "id", where))
        kind = str(_require(g, "kind", where))
        params = dict(g.get("params", {}))
        comp = int(g.get("component", 0))
        target = int(g.get("target", comp))
        if not (0 <= comp < len(tv) and 0 <= target < len(tv)):
            raise ValidationError("component index", f"{gid} refers to a missing component")
        try:
            expr = expr_from_dict({"kind": kind, **params})
        except InvalidMap as exc:
            raise _orientation_error(exc, gid) from None
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad parameters for {kind} map: {exc}", field=f"{where}.params") from None
        dom = _pair(_require(g, "domain", where), f"{where}.domain")
        ext = _pair(_require(g, "extended_domain", where), f"{where}.extended_domain")
        try:
            dom_iv, ext_iv = Interval(comp, *dom), Interval(comp, *ext)
        except ValueError as exc:
            raise ValidationError("interval order", f"{gid}: {exc}") from None
        inv = g.get("inverse_of")
        if inv is not None:
            pairs[gid] = str(inv)
            pairs[str(inv)] = gid
        elif isinstance(expr, Affine) and expr.slope == 1.0 and expr.offset == 0.0 and comp == target:
            pairs.setdefault(gid, gid)
        gens.append(LocalMap(gid, expr, dom_iv, ext_iv, target, gid + "^-1"))
    gens = [LocalMap(m.id, m.expr, m.domain, m.extended_domain, m.target_component, pairs.get(m.id, m.inverse_id))
            for m in gens]
    try:
        return Pseudogroup.from_generators(tv, gens)
    except (InvalidMap, OutOfDomain) as exc:
        raise ValidationError("map data", str(exc)) from None


def loads_config(text: str) -> Pseudogroup:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"invalid TOML: {exc}", line=int(m.group(1)) if m else None) from None
    return pseudogroup_from_dict(data)


def load_config(path) -> Pseudogroup:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return loads_config(text)


def pseudogroup_to_dict(pg: Pseudogroup) -> dict:
    tv = pg.transversal
    out = {
        "transversal": {
            "epsilon0": tv.epsilon0,
            "components": [[c.lo, c.hi, e.lo, e.hi] for c, e in tv.components],
        },
        "generator": [],
    }
    written = set()
    for g in pg.generators:
        params = g.expr.to_dict()
        kind = params.pop("kind")
        entry = {
            "id": g.id, "kind": kind, "params": params, "component": g.source_component,
            "domain": g.domain.to_list(), "extended_domain": g.extended_domain.to_list(),
            "target": g.target_component,
        }
        if g.inverse_id in written or g.inverse_id == g.id:
            entry["inverse_of"] = g.inverse_id
        out["generator"].append(entry)
        written.add(g.id)
    return out


def dumps_config(pg: Pseudogroup) -> str:
    return tomli_w.dumps(pseudogroup_to_dict(pg))


def structure(pg: Pseudogroup) -> list:
    """Generator parameters in comparable form (for round-trip checks)."""
    return [(g.id, g.expr.to_dict(), g.domain.to_list(), g.extended_domain.to_list(), g.target_component,
             g.inverse_id) for g in pg.generators] + [
        [(c.to_list(), e.to_list()) for c, e in pg.transversal.components], pg.transversal.epsilon0]


__all__ = ["ParseError", "ValidationError", "load_config", "loads_config", "dumps_config",
           "pseudogroup_from_dict", "pseudogroup_to_dict", "structure"]
