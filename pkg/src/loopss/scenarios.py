"""Preset library and scenario-file ingestion.

Scenario files are JSON documents with top-level keys ``ring``, ``fiber``,
``base``, ``window``, ``assignments``, ``target``, ``flags``, optional
``definitions`` (named element abbreviations usable in element strings)
and an optional ``morphism`` + ``source`` pair describing a map of
fibrations whose differentials transport into this scenario.  Unknown
fields are rejected everywhere.  Serialization is canonical: serializing,
parsing and serializing again is byte-identical.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Optional

from .algebra import (
    DIVIDED_POWER,
    EXTERIOR,
    KINDS,
    POLYNOMIAL,
    TRUNCATED,
    Element,
    Generator,
    GradedAlgebraPresentation,
)
from .engine import (
    DifferentialAssignment,
    Run,
    Scenario,
    ScenarioFlags,
    TargetCohomology,
    run_to_limit,
)
from .errors import ScenarioError
from .grammar import parse_element, render_element
from .linalg import SubquotientInvariants
from .naturality import FibrationMorphism, TransportPair, run_transported, validate_morphism
from .rings import QQ, ZZ, Ring, ring_from_name

SCHEMA_VERSION = 1

PRESET_NAMES = ("path_cpn_diag", "free_loop_cpn", "free_loop_rank_one", "pair_with_morphism")


@dataclass(frozen=True)
class PresetId:
    """A named, parameterized ready-to-run configuration."""

    name: str
    n: Optional[int] = None
    m: Optional[int] = None
    k: Optional[int] = None
    ring: Optional[Ring] = None
    sign: int = 1


@dataclass(frozen=True)
class ScenarioBundle:
    """A scenario plus, for transported runs, its source and the morphism."""

    scenario: Scenario
    source: Optional[Scenario] = None
    morphism: Optional[FibrationMorphism] = None
    transport: tuple[TransportPair, ...] = ()

    @property
    def is_pair(self) -> bool:
        return self.morphism is not None


@dataclass(frozen=True)
class BundleRun:
    """The executed bundle: the main run and, for pairs, the source run."""

    bundle: ScenarioBundle
    run: Run
    source_run: Optional[Run] = None


def run_bundle(bundle: ScenarioBundle, max_page: Optional[int] = None) -> BundleRun:
    if bundle.is_pair:
        src_run, dst_run = run_transported(bundle.source, bundle.morphism,
                                           bundle.transport, bundle.scenario,
                                           max_page=max_page)
        return BundleRun(bundle, dst_run, src_run)
    return BundleRun(bundle, run_to_limit(bundle.scenario, max_page=max_page))


# -- presets ---------------------------------------------------------------------


def _loop_fiber(n: int) -> GradedAlgebraPresentation:
    return GradedAlgebraPresentation(
        (Generator("u", 1, EXTERIOR), Generator("y", 2 * n, DIVIDED_POWER)),
        description="cohomology of the based loop space of CP^n: one exterior class, "
                    "one divided-power class",
    )


def _cpn_target(n: int) -> TargetCohomology:
    return TargetCohomology(tuple((2 * i, SubquotientInvariants(1, ())) for i in range(n + 1)))


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ScenarioError(message)


def _path_cpn_diag(n: int, ring: Ring, sign: int) -> Scenario:
    fiber = _loop_fiber(n)
    base = GradedAlgebraPresentation(
        (Generator("c1", 2, TRUNCATED, n + 1), Generator("c2", 2, TRUNCATED, n + 1)),
        description="cohomology of CP^n x CP^n, both cohomologies assumed free with "
                    "simple coefficients",
    )
    scenario = Scenario(ring, fiber, base, 4 * n, 6 * n)
    combined = scenario.combined()
    top_image = parse_element(" + ".join(f"u*c1^{n - i}*c2^{i}" for i in range(n + 1)),
                              ring, combined).scale(sign)
    assignments = (
        DifferentialAssignment(2, parse_element("u", ring, combined),
                               parse_element("c1 - c2", ring, combined)),
        DifferentialAssignment(2 * n, parse_element("y[1]", ring, combined), top_image),
    )
    return Scenario(ring, fiber, base, 4 * n, 6 * n, assignments, _cpn_target(n))


def _free_loop_cpn(n: int, ring: Ring) -> Scenario:
    fiber = _loop_fiber(n)
    base = GradedAlgebraPresentation(
        (Generator("x", 2, TRUNCATED, n + 1),),
        description="cohomology of CP^n",
    )
    return Scenario(ring, fiber, base, 2 * n, 4 * n + 1)


def _free_loop_rank_one(m: int, k: int, ring: Ring) -> Scenario:
    # The loop-space class y gets degree 2mk - 2: it is forced by the
    # transgression-style differential landing on u x^(k-1), whose total
    # degree is 2m(k-1) + 2m - 1.
    fiber = GradedAlgebraPresentation(
        (Generator("u", 2 * m - 1, EXTERIOR),
         Generator("y", 2 * m * k - 2, POLYNOMIAL)),
        description="rational loop-space cohomology of a space with truncated "
                    "polynomial cohomology; |y| = 2mk - 2, forced by the bidegree "
                    "of the first differential",
    )
    base = GradedAlgebraPresentation(
        (Generator("x", 2 * m, TRUNCATED, k),),
        description="rational cohomology Q[x]/(x^k) with |x| = 2m",
    )
    p_max = 2 * m * (k - 1)
    q_max = 2 * (2 * m * k - 2) + 1
    scenario = Scenario(ring, fiber, base, p_max, q_max)
    combined = scenario.combined()
    assignments = (
        DifferentialAssignment(2 * m * (k - 1), parse_element("y", ring, combined),
                               parse_element(f"{k}*u*x^{k - 1}", ring, combined)),
    )
    return Scenario(ring, fiber, base, p_max, q_max, assignments)


def _pair_morphism(n: int, ring: Ring, src: Scenario, dst: Scenario):
    dst_combined = dst.combined()
    src_combined = src.combined()
    morphism = FibrationMorphism(
        fiber_map=(("u", parse_element("u", ring, dst_combined)),
                   ("y", parse_element("y[1]", ring, dst_combined))),
        base_map=(("c1", parse_element("x", ring, dst_combined)),
                  ("c2", parse_element("x", ring, dst_combined))),
    )
    pairs = (
        TransportPair(parse_element("u", ring, src_combined),
                      parse_element("u", ring, dst_combined)),
        TransportPair(parse_element("y[1]", ring, src_combined),
                      parse_element("y[1]", ring, dst_combined)),
    )
    return morphism, pairs


def materialize(preset: PresetId) -> ScenarioBundle:
    """Build a ready-to-run bundle for a preset id."""
    name = preset.name
    _check(name in PRESET_NAMES, f"unknown preset {name!r} (expected one of {PRESET_NAMES})")
    _check(preset.sign in (1, -1), "sign parameter must be +1 or -1")
    if name == "free_loop_rank_one":
        ring = preset.ring if preset.ring is not None else QQ
        m, k = preset.m, preset.k
        _check(m is not None and m >= 1, "free_loop_rank_one needs m >= 1")
        _check(k is not None and k >= 2, "free_loop_rank_one needs k >= 2")
        return ScenarioBundle(_free_loop_rank_one(m, k, ring))
    ring = preset.ring if preset.ring is not None else ZZ
    n = preset.n
    _check(n is not None and n >= 1, f"{name} needs n >= 1")
    if name == "path_cpn_diag":
        return ScenarioBundle(_path_cpn_diag(n, ring, preset.sign))
    if name == "free_loop_cpn":
        return ScenarioBundle(_free_loop_cpn(n, ring))
    src = _path_cpn_diag(n, ring, preset.sign)
    dst = _free_loop_cpn(n, ring)
    morphism, pairs = _pair_morphism(n, ring, src, dst)
    return ScenarioBundle(dst, src, morphism, pairs)


# -- document writing --------------------------------------------------------------


def _presentation_document(p: GradedAlgebraPresentation) -> dict:
    gens = []
    for g in p.generators:
        item = {"name": g.name, "degree": g.degree, "kind": g.kind}
        if g.kind == TRUNCATED:
            item["height"] = g.height
        gens.append(item)
    doc = {}
    if p.description:
        doc["description"] = p.description
    doc["generators"] = gens
    return doc


def scenario_to_document(s: Scenario) -> dict:
    doc: dict = {
        "schema_version": SCHEMA_VERSION,
        "ring": s.ring.name,
        "fiber": _presentation_document(s.fiber),
        "base": _presentation_document(s.base),
        "window": {"p_max": s.p_max, "q_max": s.q_max},
    }
    if s.definitions:
        doc["definitions"] = {name: render_element(e) for name, e in s.definitions}
    doc["assignments"] = [
        {"page": a.page, "source": render_element(a.source), "image": render_element(a.image)}
        for a in s.assignments
    ]
    if s.target is not None:
        doc["target"] = {
            str(d): {"free_rank": inv.free_rank, "torsion": list(inv.torsion)}
            for d, inv in sorted(s.target.by_degree)
        }
    doc["flags"] = {"divided_power_leibniz": s.flags.divided_power_leibniz}
    return doc


def bundle_to_document(bundle: ScenarioBundle) -> dict:
    doc = scenario_to_document(bundle.scenario)
    if bundle.is_pair:
        doc["morphism"] = {
            "fiber_map": {name: render_element(e) for name, e in bundle.morphism.fiber_map},
            "base_map": {name: render_element(e) for name, e in bundle.morphism.base_map},
            "transport": [
                {"source": render_element(p.source), "target": render_element(p.target)}
                for p in bundle.transport
            ],
        }
        doc["source"] = scenario_to_document(bundle.source)
    return doc


def serialize_scenario(bundle: ScenarioBundle | Scenario) -> str:
    if isinstance(bundle, Scenario):
        bundle = ScenarioBundle(bundle)
    return json.dumps(bundle_to_document(bundle), indent=2) + "\n"


# -- document parsing ---------------------------------------------------------------


def _require_keys(obj: dict, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    unknown = set(obj) - set(required) - set(optional)
    if unknown:
        raise ScenarioError(f"{path}: unknown fields {sorted(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ScenarioError(f"{path}: missing fields {missing}")


def _parse_count(value, path: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 0:
        raise ScenarioError(f"{path}: expected a non-negative integer")
    return value


def _parse_presentation(obj, path: str) -> GradedAlgebraPresentation:
    _require_keys(obj, path, ("generators",), ("description",))
    gens = obj["generators"]
    if not isinstance(gens, list):
        raise ScenarioError(f"{path}.generators: expected a list")
    out = []
    for i, item in enumerate(gens):
        gpath = f"{path}.generators[{i}]"
        _require_keys(item, gpath, ("name", "degree", "kind"), ("height",))
        kind = item["kind"]
        if kind not in KINDS:
            raise ScenarioError(f"{gpath}.kind: unknown kind {kind!r}")
        height = item.get("height")
        if height is not None:
            height = _parse_count(height, f"{gpath}.height")
        try:
            out.append(Generator(item["name"], _parse_count(item["degree"], f"{gpath}.degree"),
                                 kind, height))
        except ScenarioError as exc:
            raise ScenarioError(f"{gpath}: {exc}") from exc
    description = obj.get("description", "")
    if not isinstance(description, str):
        raise ScenarioError(f"{path}.description: expected a string")
    try:
        return GradedAlgebraPresentation(tuple(out), description)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def _parse_target(obj, path: str) -> TargetCohomology:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object keyed by total degree")
    entries = []
    for key, value in obj.items():
        epath = f"{path}.{key}"
        if not key.isdigit():
            raise ScenarioError(f"{epath}: keys must be non-negative integers")
        _require_keys(value, epath, ("free_rank", "torsion"))
        torsion = value["torsion"]
        if not isinstance(torsion, list):
            raise ScenarioError(f"{epath}.torsion: expected a list")
        try:
            inv = SubquotientInvariants(_parse_count(value["free_rank"], f"{epath}.free_rank"),
                                        tuple(torsion))
        except ValueError as exc:
            raise ScenarioError(f"{epath}: {exc}") from exc
        entries.append((int(key), inv))
    return TargetCohomology(tuple(sorted(entries)))


def _parse_scenario_document(doc, path: str) -> Scenario:
    _require_keys(doc, path,
                  ("schema_version", "ring", "fiber", "base", "window", "assignments", "flags"),
                  ("definitions", "target", "morphism", "source"))
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ScenarioError(f"{path}.schema_version: expected {SCHEMA_VERSION}")
    if not isinstance(doc["ring"], str):
        raise ScenarioError(f"{path}.ring: expected a string")
    ring = ring_from_name(doc["ring"])
    fiber = _parse_presentation(doc["fiber"], f"{path}.fiber")
    base = _parse_presentation(doc["base"], f"{path}.base")
    _require_keys(doc["window"], f"{path}.window", ("p_max", "q_max"))
    p_max = _parse_count(doc["window"]["p_max"], f"{path}.window.p_max")
    q_max = _parse_count(doc["window"]["q_max"], f"{path}.window.q_max")
    combined = GradedAlgebraPresentation(fiber.generators + base.generators,
                                         description="fiber (x) base")
    definitions: list[tuple[str, Element]] = []
    defs_obj = doc.get("definitions", {})
    if not isinstance(defs_obj, dict):
        raise ScenarioError(f"{path}.definitions: expected an object")
    for name, text in defs_obj.items():
        if not isinstance(text, str):
            raise ScenarioError(f"{path}.definitions.{name}: expected an element string")
        try:
            definitions.append((name, parse_element(text, ring, combined)))
        except ScenarioError as exc:
            raise ScenarioError(f"{path}.definitions.{name}: {exc}") from exc
    def_map = dict(definitions)

    def element(text, epath):
        if not isinstance(text, str):
            raise ScenarioError(f"{epath}: expected an element string")
        try:
            return parse_element(text, ring, combined, def_map)
        except ScenarioError as exc:
            raise ScenarioError(f"{epath}: {exc}") from exc

    assignments = []
    if not isinstance(doc["assignments"], list):
        raise ScenarioError(f"{path}.assignments: expected a list")
    for i, item in enumerate(doc["assignments"]):
        apath = f"{path}.assignments[{i}]"
        _require_keys(item, apath, ("page", "source", "image"))
        page = item["page"]
        if not isinstance(page, int) or isinstance(page, bool) or page < 2:
            raise ScenarioError(f"{apath}.page: expected an integer page >= 2")
        source = element(item["source"], f"{apath}.source")
        image = element(item["image"], f"{apath}.image")
        if image.is_zero() and item["image"].strip() != "0":
            # normalizing to zero silently is how sign mistakes hide
            warnings.warn(f"{apath}.image normalizes to zero; use an explicit \"0\"",
                          stacklevel=2)
        assignments.append(DifferentialAssignment(page, source, image))
    target = None
    if "target" in doc:
        target = _parse_target(doc["target"], f"{path}.target")
    _require_keys(doc["flags"], f"{path}.flags", (), ("divided_power_leibniz",))
    flag = doc["flags"].get("divided_power_leibniz", True)
    if not isinstance(flag, bool):
        raise ScenarioError(f"{path}.flags.divided_power_leibniz: expected a boolean")
    scenario = Scenario(ring, fiber, base, p_max, q_max, tuple(assignments), target,
                        ScenarioFlags(flag), tuple(definitions))
    try:
        scenario.validate()
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return scenario


def parse_scenario(text: str) -> ScenarioBundle:
    """Parse and fully validate a scenario document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"scenario parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    scenario = _parse_scenario_document(doc, "scenario")
    if ("morphism" in doc) != ("source" in doc):
        raise ScenarioError("scenario: morphism and source must be given together")
    if "morphism" not in doc:
        return ScenarioBundle(scenario)
    source_doc = doc["source"]
    if isinstance(source_doc, dict) and ("morphism" in source_doc or "source" in source_doc):
        raise ScenarioError("scenario.source: nested morphisms are not supported")
    source = _parse_scenario_document(source_doc, "scenario.source")
    mdoc = doc["morphism"]
    _require_keys(mdoc, "scenario.morphism", ("fiber_map", "base_map", "transport"))
    ring = scenario.ring
    dst_combined = scenario.combined()
    src_combined = source.combined()

    def mapped(obj, mpath):
        if not isinstance(obj, dict):
            raise ScenarioError(f"{mpath}: expected an object")
        out = []
        for name, text_ in obj.items():
            if not isinstance(text_, str):
                raise ScenarioError(f"{mpath}.{name}: expected an element string")
            try:
                out.append((name, parse_element(text_, ring, dst_combined)))
            except ScenarioError as exc:
                raise ScenarioError(f"{mpath}.{name}: {exc}") from exc
        return tuple(out)

    morphism = FibrationMorphism(mapped(mdoc["fiber_map"], "scenario.morphism.fiber_map"),
                                 mapped(mdoc["base_map"], "scenario.morphism.base_map"))
    pairs = []
    if not isinstance(mdoc["transport"], list):
        raise ScenarioError("scenario.morphism.transport: expected a list")
    for i, item in enumerate(mdoc["transport"]):
        tpath = f"scenario.morphism.transport[{i}]"
        _require_keys(item, tpath, ("source", "target"))
        try:
            src_elt = parse_element(item["source"], ring, src_combined)
            dst_elt = parse_element(item["target"], ring, dst_combined)
        except ScenarioError as exc:
            raise ScenarioError(f"{tpath}: {exc}") from exc
        pairs.append(TransportPair(src_elt, dst_elt))
    try:
        validate_morphism(morphism, source, scenario)
    except ScenarioError as exc:
        raise ScenarioError(f"scenario.morphism: {exc}") from exc
    return ScenarioBundle(scenario, source, morphism, tuple(pairs))
