"""JSON documents for spaces, points, measures, open sets, lsc functions,
tests and binary representations.  Every loader raises
:class:`MalformedDocument` on input it cannot type-check.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Any, Optional

from .binaryrep import BinaryRep, CantorLevelBasis, UnitLevelBasis
from .cms import (
    CantorSpace,
    EMPTY,
    EuclideanPoints,
    FiniteOpenSet,
    IdealBall,
    MetricSpace,
    PointDescriptor,
    ProductSpace,
    REOpenSet,
    UnitInterval,
    cantor_point,
    unit_point_from_approximations,
)
from .core import as_rational, cantor_pair
from .errors import CompProbError, MalformedDocument
from .lsc import FiniteSup, LscFunction, hat, indicator, lsc_sum, step
from .measures import (
    IdealMeasure,
    MeasureDescriptor,
    bernoulli,
    convex_combo,
    dirac_measure,
    from_stages,
    lebesgue_unit,
)
from .randomness import Certificate, IntegralTest, MLCertificate, MLTest, ml_to_integral, zeros_test


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise MalformedDocument(msg)


def _rational(x: Any, what: str) -> Fraction:
    try:
        return as_rational(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise MalformedDocument(f"{what}: {exc}") from None


def _nat(x: Any, what: str) -> int:
    _require(isinstance(x, int) and not isinstance(x, bool) and x >= 0, f"{what} must be a natural number")
    return x


def load_space(doc: Any) -> MetricSpace:
    if isinstance(doc, dict) and "space" in doc:
        doc = doc["space"]
    if doc == "unit_interval":
        return UnitInterval()
    if doc == "cantor":
        return CantorSpace()
    if isinstance(doc, dict) and "product" in doc:
        parts = doc["product"]
        _require(isinstance(parts, list) and len(parts) == 2, "product takes two spaces")
        return ProductSpace(load_space(parts[0]), load_space(parts[1]))
    if isinstance(doc, dict) and "euclidean_points" in doc:
        pts = doc["euclidean_points"]
        _require(isinstance(pts, list) and pts, "euclidean_points needs a list of pairs")
        return EuclideanPoints([(_rational(p[0], "x"), _rational(p[1], "y")) for p in pts])
    raise MalformedDocument(f"unknown space document {doc!r}")


def _sqrt_point(value: Fraction) -> PointDescriptor:
    n, m = value.numerator, value.denominator

    def approx(k: int) -> Fraction:
        scale = 2 ** (k + 2)
        return Fraction(math.isqrt(n * m * scale * scale), m * scale)

    return unit_point_from_approximations(approx)


def load_point(doc: Any, space: MetricSpace) -> PointDescriptor:
    _require(isinstance(doc, dict), "point documents are objects")
    if "point" in doc and isinstance(doc["point"], dict):
        doc = doc["point"]
    try:
        if "ideal_stream" in doc:
            stream = doc["ideal_stream"]
            _require(isinstance(stream, list) and stream, "ideal_stream must be a nonempty list")
            for i in stream:
                space.check_index(_nat(i, "ideal index"))
            c = doc.get("constant_from")
            if c is not None:
                _nat(c, "constant_from")
            return PointDescriptor.from_prefix(stream, c)
        if "rational" in doc:
            _require(isinstance(space, UnitInterval), "rational points live in the unit interval")
            return PointDescriptor.ideal(space.index_of(_rational(doc["rational"], "rational")))
        if "sqrt" in doc:
            _require(isinstance(space, UnitInterval), "sqrt points live in the unit interval")
            v = _rational(doc["sqrt"], "sqrt")
            _require(0 <= v <= 1, "sqrt argument must lie in [0, 1]")
            return _sqrt_point(v)
        if "bits" in doc:
            _require(isinstance(space, CantorSpace), "bit points live in Cantor space")
            bits = doc["bits"]
            _require(isinstance(bits, str) and set(bits) <= {"0", "1"}, "bits must be a binary string")
            return cantor_point(bits)
        if "product" in doc:
            _require(isinstance(space, ProductSpace), "product points need a product space")
            a = load_point(doc["product"][0], space.left)
            b = load_point(doc["product"][1], space.right)
            cf = None
            if a.constant_from is not None and b.constant_from is not None:
                cf = max(a.constant_from, b.constant_from)
            return PointDescriptor(lambda n: cantor_pair(a.ideal_index_at(n), b.ideal_index_at(n)), cf)
    except CompProbError:
        raise
    except (ValueError, TypeError, KeyError, IndexError) as exc:
        raise MalformedDocument(f"bad point document: {exc}") from None
    raise MalformedDocument(f"unknown point document {doc!r}")


def load_ideal_measure(doc: Any, space: Optional[MetricSpace] = None) -> IdealMeasure:
    _require(isinstance(doc, dict) and isinstance(doc.get("atoms"), list), "ideal measures need an atoms list")
    atoms = []
    for a in doc["atoms"]:
        _require(isinstance(a, dict) and "point" in a and "weight" in a, "atoms need point and weight")
        i = _nat(a["point"], "atom point")
        if space is not None:
            space.check_index(i)
        atoms.append((i, _rational(a["weight"], "weight")))
    return IdealMeasure(atoms)


def load_measure(doc: Any, space: Optional[MetricSpace] = None) -> MeasureDescriptor:
    _require(isinstance(doc, dict), "measure documents are objects")
    if "space" in doc:
        space = load_space(doc["space"])
    if "builtin" in doc:
        b = doc["builtin"]
        if b == "lebesgue_unit":
            return lebesgue_unit()
        if isinstance(b, dict) and "bernoulli" in b:
            return bernoulli(_rational(b["bernoulli"], "bernoulli parameter"))
        if isinstance(b, dict) and "dirac" in b:
            _require(space is not None, "dirac measures need a space")
            return dirac_measure(space, _nat(b["dirac"], "dirac point"))
        raise MalformedDocument(f"unknown builtin measure {b!r}")
    if "convex_combo" in doc:
        parts = doc["convex_combo"]
        _require(isinstance(parts, list) and parts, "convex_combo needs a list")
        return convex_combo(
            [(_rational(p["weight"], "weight"), load_measure(p["measure"], space)) for p in parts]
        )
    if "stages" in doc:
        _require(space is not None, "staged measures need a space")
        _require(isinstance(doc["stages"], list) and doc["stages"], "stages must be a nonempty list")
        return from_stages(space, [load_ideal_measure(s, space) for s in doc["stages"]])
    if "atoms" in doc:
        _require(space is not None, "ideal measures need a space")
        return from_stages(space, [load_ideal_measure(doc, space)])
    raise MalformedDocument(f"unknown measure document {doc!r}")


def load_open_set(doc: Any, space: Optional[MetricSpace] = None) -> REOpenSet:
    _require(isinstance(doc, dict) and isinstance(doc.get("balls"), list), "open sets need a balls list")
    balls = []
    for b in doc["balls"]:
        _require(isinstance(b, dict) and "center" in b and "radius" in b, "balls need center and radius")
        c = _nat(b["center"], "ball center")
        if space is not None:
            space.check_index(c)
        r = _rational(b["radius"], "radius")
        _require(r > 0, "radii must be positive")
        balls.append(IdealBall(c, r))
    return FiniteOpenSet(balls, all_at_once=True)


def _load_basic(doc: Any):
    _require(isinstance(doc, dict) and len(doc) == 1, "a basic function is {'step': ...} or {'hat': ...}")
    try:
        if "step" in doc:
            s = doc["step"]
            return step(_nat(s["center"], "center"), _rational(s["radius"], "radius"), _rational(s["value"], "value"))
        if "hat" in doc:
            h = doc["hat"]
            return hat(
                _rational(h["value"], "value"),
                _nat(h["center"], "center"),
                _rational(h["inner_radius"], "inner_radius"),
                _rational(h["slope_width"], "slope_width"),
            )
    except KeyError as exc:
        raise MalformedDocument(f"missing field {exc}") from None
    except ValueError as exc:
        raise MalformedDocument(str(exc)) from None
    raise MalformedDocument(f"unknown basic function {doc!r}")


def load_lsc(doc: Any) -> LscFunction:
    _require(isinstance(doc, dict), "lsc documents are objects")
    if "indicator" in doc:
        return indicator(load_open_set(doc["indicator"]))
    combine = doc.get("combine", "sup")
    if combine == "sup":
        basics = doc.get("basics", [])
        _require(isinstance(basics, list), "basics must be a list")
        return FiniteSup([_load_basic(b) for b in basics])
    if isinstance(combine, dict) and "weighted_sum" in combine:
        terms = combine["weighted_sum"]
        _require(isinstance(terms, list) and terms, "weighted_sum needs terms")
        _require(not doc.get("basics"), "use either basics or weighted_sum")
        return lsc_sum([(_rational(t["weight"], "weight"), load_lsc(t["f"])) for t in terms])
    raise MalformedDocument(f"unknown combine mode {combine!r}")


def load_ml_test(doc: Any, measure) -> MLTest:
    cert = doc.get("certificate")
    try:
        certificate = MLCertificate(cert) if cert is not None else None
    except ValueError:
        raise MalformedDocument(f"unknown certificate {cert!r}") from None
    levels = doc.get("levels")
    if isinstance(levels, dict) and levels.get("builtin") == "zeros":
        t = zeros_test(measure)
        t.certificate = certificate or t.certificate
        return t
    _require(isinstance(levels, list), "ml tests need a list of levels")
    sets = [load_open_set(level, measure.space) for level in levels]
    return MLTest(lambda n: sets[n] if n < len(sets) else EMPTY, measure, certificate, label="ml-document")


def load_test(doc: Any, measure) -> IntegralTest | MLTest:
    _require(isinstance(doc, dict) and "kind" in doc, "test documents need a kind")
    if doc["kind"] == "ml":
        return load_ml_test(doc, measure)
    if doc["kind"] == "integral":
        if "from_ml" in doc:
            return ml_to_integral(load_ml_test(doc["from_ml"], measure))
        _require(doc.get("certificate") == "asserted", "integral documents can only carry an asserted certificate")
        return IntegralTest(load_lsc(doc["f"]), measure, Certificate.USER_ASSERTED, label="integral-document")
    raise MalformedDocument(f"unknown test kind {doc['kind']!r}")


def load_rep(doc: Any) -> BinaryRep:
    _require(isinstance(doc, dict) and "measure" in doc, "rep documents need a measure")
    measure = load_measure(doc["measure"], load_space(doc["space"]) if "space" in doc else None)
    basis_name = doc.get("basis")
    if basis_name is None:
        basis_name = "unit_levels" if isinstance(measure.space, UnitInterval) else "cantor_levels"
    if basis_name == "unit_levels":
        _require(isinstance(measure.space, UnitInterval), "unit_levels needs the unit interval")
        rep = BinaryRep(measure, UnitLevelBasis())
    elif basis_name == "cantor_levels":
        _require(isinstance(measure.space, CantorSpace), "cantor_levels needs Cantor space")
        rep = BinaryRep(measure, CantorLevelBasis())
    else:
        raise MalformedDocument(f"unknown basis {basis_name!r}")
    if "descriptor_digest" in doc or "radii" in doc:
        full = dict(doc)
        full.setdefault("descriptor_digest", rep.digest)
        rep.check_document(full)
    return rep
