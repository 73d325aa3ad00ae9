"""Scenario files: a restricted JSON document describing games, models and commands.

Rationals are integers or "p/q" strings; decimal literals are rejected.
The schema lives in docs/scenario.schema.json.
"""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from . import perturbations as gen
from .epistemic import (
    SubjectiveModel,
    SubjectivePayoffStructure,
    TypeStructure,
    common_knowledge,
    consistent_types,
    higher_order_richness,
    make_type,
    model_distance,
    validate_hierarchy,
)
from .forms import ExtensiveForm, fmt_node, parse_node, validate_extensive_form
from .payoffs import StandardPayoffStructure, is_rich
from .solvers import CONCEPTS, BudgetExceeded, SEFR, solve

E_SYNTAX, E_DECIMAL, E_SCHEMA, E_REFERENCE, E_VALIDATION = "E100", "E101", "E200", "E300", "E400"
OPS = ("solve", "compare", "perturb", "distance", "check")


class ScenarioError(Exception):
    def __init__(self, code: str, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: [{code}] {message}")
        self.code, self.message, self.line, self.column = code, message, line, column


@dataclass
class Scenario:
    form: ExtensiveForm
    structures: dict = field(default_factory=dict)  # name -> StandardPayoffStructure
    hierarchies: dict = field(default_factory=dict)  # name -> SubjectivePayoffStructure
    type_structures: dict = field(default_factory=dict)  # name -> TypeStructure
    models: dict = field(default_factory=dict)  # name -> list[SubjectiveModel]
    commands: list = field(default_factory=list)  # list of dicts with an "op" key
    incoherent_ok: frozenset = frozenset()  # hierarchy names exempt from coherence

    def _data(self):
        return (
            self.form,
            {k: (v, tuple(sorted(v.origin.items()))) for k, v in self.structures.items()},
            self.hierarchies,
            self.type_structures,
            {k: [(m.player, m.structure, m.types, m.root) for m in v] for k, v in self.models.items()},
            self.commands,
            self.incoherent_ok,
        )

    def __eq__(self, other):
        return isinstance(other, Scenario) and self._data() == other._data()


# -- lexical layer ----------------------------------------------------------------

_TOKEN = re.compile(r'"(?:[^"\\]|\\.)*"|-?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?')
_DECIMAL_TEXT = re.compile(r"^[+-]?(\d+\.\d*|\.\d+|\d+[eE][+-]?\d+|\d+\.\d*[eE][+-]?\d+)$")
_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


def _position(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    return line, offset - (text.rfind("\n", 0, offset) + 1) + 1


def _lex_check(text: str) -> None:
    for m in _TOKEN.finditer(text):
        tok = m.group(0)
        if tok.startswith('"'):
            try:
                value = json.loads(tok)
            except json.JSONDecodeError:
                continue
            bad = isinstance(value, str) and _DECIMAL_TEXT.match(value.strip())
        else:
            prev = text[m.start() - 1] if m.start() else ""
            bad = (prev.isspace() or prev in "[:,") and any(c in tok for c in ".eE")
        if bad:
            raise ScenarioError(E_DECIMAL, "decimals forbidden; use p/q", *_position(text, m.start()))


class _Locator:
    """Best-effort source positions for semantic errors: first occurrence of a string literal."""

    def __init__(self, text: str):
        self.text = text

    def of(self, value: str) -> tuple[int, int]:
        idx = self.text.find(json.dumps(value, ensure_ascii=False))
        if idx < 0:
            idx = self.text.find(json.dumps(value))
        return _position(self.text, max(idx, 0)) if idx >= 0 else (0, 0)


def _rational(v, loc: _Locator, what: str) -> Fraction:
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise ScenarioError(E_SCHEMA, f"{what}: expected an integer or a \"p/q\" string", *loc.of(str(v)))
    if isinstance(v, str):
        if not _RATIONAL.match(v.strip()):
            raise ScenarioError(E_SCHEMA, f"{what}: {v!r} is not a rational of the form p/q", *loc.of(v))
        q = v.split("/")
        if len(q) == 2 and int(q[1]) == 0:
            raise ScenarioError(E_SCHEMA, f"{what}: zero denominator", *loc.of(v))
    return Fraction(v)


def _text(q: Fraction) -> str | int:
    return int(q) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


# -- parsing ----------------------------------------------------------------------

def _need(obj: Mapping, key: str, kind, loc: _Locator, where: str):
    if key not in obj:
        raise ScenarioError(E_SCHEMA, f"{where}: missing field {key!r}", *loc.of(where.split(" ")[-1]))
    v = obj[key]
    if not isinstance(v, kind):
        raise ScenarioError(E_SCHEMA, f"{where}: field {key!r} has the wrong kind", *loc.of(key))
    return v


def _parse_form(obj, loc) -> ExtensiveForm:
    players = tuple(_need(obj, "players", list, loc, "form"))
    nodes = _need(obj, "nodes", dict, loc, "form")
    moves = {}
    for key, spec in nodes.items():
        if not isinstance(spec, dict):
            raise ScenarioError(E_SCHEMA, f"node {key}: expected an object of player -> actions", *loc.of(key))
        moves[parse_node(key)] = {p: tuple(a) for p, a in spec.items()}
    try:
        form = ExtensiveForm(players, moves)
        report = validate_extensive_form(form)
    except Exception as exc:  # malformed trees surface as validation failures
        raise ScenarioError(E_VALIDATION, f"extensive form: {exc}", *loc.of("form")) from None
    if report:
        raise ScenarioError(E_VALIDATION, "extensive form: " + "; ".join(report), *loc.of("form"))
    return form


def _generated(name, spec, form, structures, loc) -> StandardPayoffStructure:
    kind = _need(spec, "kind", str, loc, f"structure {name}")
    n = spec.get("n")
    if kind == "centipede":
        return gen.centipede_family(n, spec.get("sign", "plus"), form)
    if kind == "two_state":
        return gen.two_state_structure(form)
    if kind == "default_rich":
        return gen.default_rich_structure(form)
    base_name = _need(spec, "base", str, loc, f"structure {name}")
    if base_name not in structures:
        raise ScenarioError(E_REFERENCE, f"structure {name}: unknown base structure {base_name!r}", *loc.of(base_name))
    base = structures[base_name]
    if kind == "tie_break":
        return gen.tie_break(base, int(n))
    if kind == "enrich":
        return gen.enrich(base)
    raise ScenarioError(E_SCHEMA, f"structure {name}: unknown generator {kind!r}", *loc.of(kind))


def _parse_structure(name, obj, form, structures, loc) -> StandardPayoffStructure:
    if "generate" in obj:
        ups = _generated(name, obj["generate"], form, structures, loc)
        if ups.form != form:
            raise ScenarioError(E_VALIDATION, f"structure {name}: generated for a different game tree", *loc.of(name))
        return ups
    terminals = {fmt_node(z): z for z in form.terminals}

    def row(entry, where):
        if set(entry) != set(terminals):
            missing = sorted(set(terminals) - set(entry)) or sorted(set(entry) - set(terminals))
            raise ScenarioError(E_SCHEMA, f"{where}: terminals do not match the tree ({', '.join(missing)})", *loc.of(name))
        out = []
        for p_idx, p in enumerate(form.players):
            vals = []
            for zt, z in terminals.items():
                vec = entry[zt]
                if not isinstance(vec, list) or len(vec) != len(form.players):
                    raise ScenarioError(E_SCHEMA, f"{where}: terminal {zt} needs one utility per player", *loc.of(zt))
                vals.append((z, _rational(vec[p_idx], loc, f"{where} {zt}")))
            order = {z: k for k, z in enumerate(form.terminals)}
            out.append(tuple(v for _, v in sorted(vals, key=lambda x: order[x[0]])))
        return tuple(out)

    if "table" in obj:
        label = obj.get("label", "θ")
        m = row(obj["table"], f"structure {name}")
        return StandardPayoffStructure(
            form, ("θ0",), {p: (label,) for p in form.players}, {("θ0", tuple(label for _ in form.players)): m}
        )
    nature = tuple(_need(obj, "nature", list, loc, f"structure {name}"))
    types = _need(obj, "types", dict, loc, f"structure {name}")
    for p in form.players:
        if p not in types:
            raise ScenarioError(E_SCHEMA, f"structure {name}: no payoff types for player {p}", *loc.of(name))
    payoff = {}
    for entry in _need(obj, "payoffs", list, loc, f"structure {name}"):
        st = entry.get("state")
        if not isinstance(st, list) or len(st) != 1 + len(form.players):
            raise ScenarioError(E_SCHEMA, f"structure {name}: state must list nature then one label per player", *loc.of(name))
        key = (st[0], tuple(st[1:]))
        payoff[key] = row(entry.get("table", {}), f"structure {name} state {'/'.join(st)}")
    ups = StandardPayoffStructure(form, nature, {p: types[p] for p in form.players}, payoff, obj.get("origin"))
    report = ups.validate()
    if report:
        raise ScenarioError(E_VALIDATION, f"structure {name}: " + "; ".join(report), *loc.of(name))
    return ups


def _parse_hierarchy(name, obj, form, structures, hierarchies, loc) -> SubjectivePayoffStructure:
    if isinstance(obj, str):
        if obj in hierarchies:
            return hierarchies[obj]
        if obj in structures:
            return common_knowledge(structures[obj])
        raise ScenarioError(E_REFERENCE, f"hierarchy {name}: unknown structure or hierarchy {obj!r}", *loc.of(obj))
    if "graft" in obj:
        g = obj["graft"]
        base = _parse_hierarchy(name, g.get("base"), form, structures, hierarchies, loc).level1
        rich = g.get("rich")
        rich_ups = None if rich is None else _parse_hierarchy(name, rich, form, structures, hierarchies, loc).level1
        try:
            return gen.richness_graft(base, rich_ups, int(g.get("k", 1)), str(g.get("player")))
        except ValueError as exc:
            raise ScenarioError(E_VALIDATION, f"hierarchy {name}: {exc}", *loc.of(name)) from None
    level1 = _need(obj, "level1", str, loc, f"hierarchy {name}")
    if level1 not in structures:
        raise ScenarioError(E_REFERENCE, f"hierarchy {name}: unknown structure {level1!r}", *loc.of(level1))
    asc = {j: _parse_hierarchy(name, sub, form, structures, hierarchies, loc) for j, sub in obj.get("ascribe", {}).items()}
    return SubjectivePayoffStructure(structures[level1], asc)


def _parse_types(name, obj, players, loc) -> TypeStructure:
    types = {}
    for label, spec in obj.items():
        belief = {}
        for atom in _need(spec, "belief", list, loc, f"type {label}"):
            opp = atom.get("opponents", [])
            opp = [opp] if isinstance(opp, str) else opp
            key = (atom.get("state"), tuple(opp))
            belief[key] = belief.get(key, Fraction(0)) + _rational(atom.get("p"), loc, f"type {label} probability")
        types[label] = make_type(_need(spec, "player", str, loc, f"type {label}"), _need(spec, "payoff", str, loc, f"type {label}"), belief)
    ts = TypeStructure(players, types)
    report = ts.validate()
    if report:
        raise ScenarioError(E_VALIDATION, f"type structure {name}: " + "; ".join(report), *loc.of(name))
    return ts


def _check_command(cmd, sc: Scenario, loc) -> dict:
    if not isinstance(cmd, dict) or cmd.get("op") not in OPS:
        raise ScenarioError(E_SCHEMA, f"command {cmd!r}: op must be one of {', '.join(OPS)}", *loc.of(str(cmd.get("op") if isinstance(cmd, dict) else cmd)))
    refs = []
    if cmd["op"] in ("solve", "compare", "perturb"):
        refs.append(cmd.get("model"))
    if cmd["op"] == "distance":
        refs.extend(cmd.get("models", []))
        if len(cmd.get("models", [])) != 2:
            raise ScenarioError(E_SCHEMA, "distance: exactly two models required", *loc.of("distance"))
    for r in refs:
        if r not in sc.models:
            raise ScenarioError(E_REFERENCE, f"{cmd['op']}: unknown model {r!r}", *loc.of(str(r)))
    for c in cmd.get("concepts", [cmd["concept"]] if "concept" in cmd else []):
        if c not in CONCEPTS:
            raise ScenarioError(E_SCHEMA, f"{cmd['op']}: unknown concept {c!r}", *loc.of(c))
    return cmd


def parse_scenario(text: str) -> Scenario:
    """Parse and validate; raises ScenarioError carrying a code, line and column."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(E_SYNTAX, exc.msg, exc.lineno, exc.colno) from None
    _lex_check(text)
    loc = _Locator(text)
    if not isinstance(doc, dict):
        raise ScenarioError(E_SCHEMA, "top level must be an object", 1, 1)
    form = _parse_form(_need(doc, "form", dict, loc, "scenario"), loc)
    sc = Scenario(form)
    for name, obj in doc.get("structures", {}).items():
        sc.structures[name] = _parse_structure(name, obj, form, sc.structures, loc)
    exempt = set()
    for name, obj in doc.get("hierarchies", {}).items():
        sc.hierarchies[name] = _parse_hierarchy(name, obj, form, sc.structures, sc.hierarchies, loc)
        if isinstance(obj, dict) and obj.get("allow_incoherent"):
            exempt.add(name)
    sc.incoherent_ok = frozenset(exempt)
    for name, obj in doc.get("types", {}).items():
        sc.type_structures[name] = _parse_types(name, obj, form.players, loc)
    for name, entries in doc.get("models", {}).items():
        profile = []
        for e in entries:
            ref = e.get("structure")
            d = _parse_hierarchy(name, ref, form, sc.structures, sc.hierarchies, loc)
            tsn = e.get("types")
            if tsn not in sc.type_structures:
                raise ScenarioError(E_REFERENCE, f"model {name}: unknown type structure {tsn!r}", *loc.of(str(tsn)))
            ts = sc.type_structures[tsn]
            player, root = str(e.get("player")), e.get("root")
            if root not in ts:
                raise ScenarioError(E_REFERENCE, f"model {name}: unknown root type {root!r}", *loc.of(str(root)))
            if ref not in sc.incoherent_ok:
                report = validate_hierarchy(d)
                if report:
                    raise ScenarioError(E_VALIDATION, f"model {name}: incoherent hierarchy: " + "; ".join(report), *loc.of(str(ref)))
            if root not in consistent_types(d, ts, player):
                raise ScenarioError(E_VALIDATION, f"model {name}: type {root} is not consistent with its structure", *loc.of(root))
            profile.append(SubjectiveModel(player, d, ts, root))
        sc.models[name] = profile
    sc.commands = [_check_command(c, sc, loc) for c in doc.get("commands", [])]
    return sc


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# -- serialization ----------------------------------------------------------------

def _structure_doc(ups: StandardPayoffStructure) -> dict:
    form = ups.form
    doc = {
        "nature": list(ups.nature),
        "types": {p: list(ups.types[p]) for p in form.players},
        "payoffs": [
            {
                "state": [st[0], *st[1]],
                "table": {
                    fmt_node(z): [_text(ups.payoff[st][i][k]) for i in range(len(form.players))]
                    for k, z in enumerate(form.terminals)
                },
            }
            for st in ups.states()
        ],
    }
    if ups.origin:
        doc["origin"] = dict(sorted(ups.origin.items()))
    return doc


def serialize_scenario(sc: Scenario) -> str:
    form = sc.form
    names = {}
    for name, ups in sc.structures.items():
        names.setdefault(ups, name)

    def hierarchy_doc(d: SubjectivePayoffStructure):
        if d.level1 not in names:
            raise ValueError("hierarchy refers to an unnamed structure")
        if d.is_common_knowledge:
            return names[d.level1]
        return {"level1": names[d.level1], "ascribe": {j: hierarchy_doc(x) for j, x in sorted(d.ascriptions.items())}}

    hnames = {}
    hdocs = {}
    for name, d in sc.hierarchies.items():
        body = hierarchy_doc(d)
        if isinstance(body, str):
            body = {"level1": body, "ascribe": {}}
        if name in sc.incoherent_ok:
            body["allow_incoherent"] = True
        hdocs[name] = body
        hnames.setdefault(d, name)

    def ref(d):
        return hnames.get(d) or hierarchy_doc(d)

    doc = {
        "form": {
            "players": list(form.players),
            "nodes": {fmt_node(h): {p: list(a) for p, a in form.active(h).items()} for h in form.nodes if not form.is_terminal(h)},
        },
        "structures": {k: _structure_doc(v) for k, v in sc.structures.items()},
        "hierarchies": hdocs,
        "types": {
            name: {
                label: {
                    "player": spec.player,
                    "payoff": spec.payoff_type,
                    "belief": [{"state": t0, "opponents": list(prof), "p": str(_text(p))} for (t0, prof), p in spec.belief],
                }
                for label, spec in ts.types.items()
            }
            for name, ts in sc.type_structures.items()
        },
        "models": {},
        "commands": sc.commands,
    }
    tnames = {id(ts): name for name, ts in sc.type_structures.items()}
    for name, profile in sc.models.items():
        doc["models"][name] = [
            {"player": m.player, "structure": ref(m.structure), "types": tnames[id(m.types)], "root": m.root} for m in profile
        ]
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


# -- running ------------------------------------------------------------------------

def _labels(strategies) -> str:
    return " ".join(sorted(s.label for s in strategies))


def _outcomes(zs) -> str:
    return " ".join(sorted(fmt_node(z) for z in zs))


def _table(header: list[str], rows: list[list[str]]) -> list[str]:
    widths = [max(len(str(r[k])) for r in [header] + rows) for k in range(len(header))]
    fmt = lambda r: "  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip()
    return [fmt(header), fmt(["-" * w for w in widths])] + [fmt(r) for r in rows]


@dataclass
class CommandResult:
    title: str
    lines: list
    csv_rows: list
    status: str = "ok"  # ok | budget | invalid


@dataclass
class Report:
    results: list

    @property
    def exit_code(self) -> int:
        if any(r.status == "invalid" for r in self.results):
            return 2
        if any(r.status == "budget" for r in self.results):
            return 3
        return 0

    def text(self) -> str:
        out = []
        for k, r in enumerate(self.results, 1):
            out.append(f"== [{k}] {r.title} ==")
            out.extend(r.lines)
            out.append("")
        out.append("# machine section (CSV)")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["concept", "round", "player", "type", "strategies", "outcomes"])
        for k, r in enumerate(self.results, 1):
            for row in r.csv_rows:
                w.writerow(row)
        out.append(buf.getvalue().rstrip("\n"))
        return "\n".join(out) + "\n"


def _solve_rows(models, concept, max_rounds, threads):
    trace = solve(models, concept, max_rounds, threads)
    rows, csv_rows = [], []
    for k in range(len(trace.rounds)):
        outs = _outcomes(trace.outcomes(k))
        for key in dict.fromkeys(trace.roots):
            node = trace.nodes[key]
            for t, got in sorted(trace.node_sets(k, key).items()):
                is_root = any(trace.root_types[i] == t and trace.roots[i] == key for i in range(len(trace.roots)))
                label = t + ("*" if is_root else "")
                rows.append([str(k), node.player, label, _labels(got), outs if is_root else ""])
                csv_rows.append([concept, k, node.player, t, _labels(got), outs if is_root else ""])
    lines = [f"fixpoint at round {trace.fixpoint}"] + _table(["round", "player", "type", "strategies", "outcomes"], rows)
    final = trace.outcomes()
    if concept == SEFR:
        classes = {trace.nodes[r].player: frozenset(x for s in trace.final(i) for x in trace.form.outcome_class(s)) for i, r in enumerate(trace.roots)}
        lines.append("outcome-class closure: " + "; ".join(f"{p}: {_labels(v)}" for p, v in sorted(classes.items())))
    lines.append(f"{concept} outcomes: {{{', '.join(sorted(fmt_node(z) for z in final))}}}")
    return trace, lines, csv_rows


def _run_solves(models, concepts, opts, title) -> CommandResult:
    res = CommandResult(title, [], [])
    finals = {}
    for c in concepts:
        try:
            trace, lines, rows = _solve_rows(models, c, opts.get("max_rounds"), opts.get("threads"))
        except BudgetExceeded as exc:
            res.lines.append(f"[{c}] FAILED: {exc}")
            res.status = "budget"
            continue
        finals[c] = trace.outcomes()
        res.lines.append(f"[{c}]")
        res.lines.extend(lines)
        res.csv_rows.extend(rows)
    if len(finals) > 1:
        cs = list(finals)
        for a, b in zip(cs, cs[1:]):
            rel = "⊆" if finals[a] <= finals[b] else "⊄"
            res.lines.append(f"{a} outcomes {rel} {b} outcomes")
    return res


def _perturbed(models, cmd):
    kind = cmd.get("kind")
    if kind == "tie_break":
        return gen.tie_break_models(models, int(cmd.get("n", 1))), f"tie_break n={cmd.get('n', 1)}"
    if kind == "graft":
        rich = gen.enrich(models[0].structure.level1)
        return gen.graft_models(models, rich, int(cmd.get("k", 1))), f"graft k={cmd.get('k', 1)}"
    if kind == "select":
        z = parse_node(cmd["outcome"])
        n = int(cmd.get("n", 1))
        sel = gen.select_outcome(models, gen.selection_targets(models, z), n)
        if sel.missing:
            raise ValueError(f"no perturbed type found for {sel.missing}")
        return sel.models, f"select {fmt_node(z)} n={n} depth={sel.depth}"
    raise ValueError(f"unknown perturbation kind {kind!r}")


def run_command(sc: Scenario, cmd: dict, opts: Mapping | None = None) -> CommandResult:
    opts = dict(opts or {})
    op = cmd["op"]
    override = opts.get("concept")
    if op in ("solve", "compare"):
        concepts = [override] if override else cmd.get("concepts", [cmd.get("concept", "efr")])
        return _run_solves(sc.models[cmd["model"]], concepts, opts, f"{op} {' '.join(concepts)} on {cmd['model']}")
    if op == "perturb":
        concepts = [override] if override else cmd.get("concepts", ["efr"])
        try:
            models, what = _perturbed(sc.models[cmd["model"]], cmd)
        except (ValueError, KeyError) as exc:
            return CommandResult(f"perturb {cmd['model']}", [f"FAILED: {exc}"], [], "invalid")
        return _run_solves(models, concepts, opts, f"perturb {cmd['model']} ({what}) {' '.join(concepts)}")
    if op == "distance":
        a, b = cmd["models"]
        d = model_distance(sc.models[a], sc.models[b])
        return CommandResult(f"distance {a} {b}", [f"model_distance = {_text(d)}"], [])
    lines = []
    for name, ups in sc.structures.items():
        ok, wit = is_rich(ups)
        lines.append([name, "structure", "rich" if ok else "not rich"])
    for name, d in sc.hierarchies.items():
        k = higher_order_richness(d)
        coherent = not validate_hierarchy(d)
        lines.append([name, "hierarchy", f"richness order {k if k is not None else 'none'}" + ("" if coherent else ", incoherent")])
    return CommandResult("check richness", _table(["name", "kind", "result"], lines) if lines else ["nothing to check"], [])


def run_scenario(sc: Scenario, **opts) -> Report:
    return Report([run_command(sc, cmd, opts) for cmd in sc.commands])
