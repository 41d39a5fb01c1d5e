"""Built-in scenarios.

``euclidean-<n>`` and ``round-sphere-<m>`` are families; the bare names
``euclidean-n`` and ``round-sphere-m`` resolve to dimension 3.
"""

from __future__ import annotations

import copy
import re

GEOMETRY_CHECKS = ["contracted-bianchi", "metric-compatibility", "riemann-symmetries"]

SOLITON_CHECKS = [
    "bochner",
    "generalized-geodesic",
    "lambda-quadratic",
    "lambda-quadratic-as-printed",
    "nabla-xi",
    "pairing-identity",
    "soliton-residual",
    "trace-identity",
]

TORUS_CHECKS = [
    "torus-corollary",
    "torus-e56",
    "torus-ibp",
    "torus-laplacian-integral",
    "torus-mu-chain",
    "torus-proposition",
]


def _diag(n: int, entry) -> list[list]:
    return [[entry if i == j else 0 for j in range(n)] for i in range(n)]


def euclidean(n: int = 3) -> dict:
    coords = [f"x{i + 1}" for i in range(n)]
    return {
        "name": f"euclidean-{n}",
        "description": "flat space; every curvature quantity vanishes",
        "chart": {"coordinates": coords},
        "metric": _diag(n, 1),
        "sampling": {"seed": 1, "count": 32, "box": [[-2.0, 2.0]] * n},
        "checks": [{"id": "scal", "expected": 0}] + GEOMETRY_CHECKS,
    }


def round_sphere(m: int = 3) -> dict:
    coords = [f"u{i + 1}" for i in range(m)]
    r2 = "+".join(f"{c}^2" for c in coords)
    return {
        "name": f"round-sphere-{m}",
        "description": "unit round sphere in stereographic coordinates",
        "chart": {"coordinates": coords},
        "metric": _diag(m, f"4/(1+{r2})^2"),
        "sampling": {"seed": 3, "count": 32, "box": [[-1.5, 1.5]] * m},
        "checks": [{"id": "scal", "expected": m * (m - 1)}] + GEOMETRY_CHECKS,
    }


def gaussian_soliton() -> dict:
    return {
        "name": "gaussian-soliton",
        "description": "flat R^3 with f = |x|^2/2, so Hess f = g",
        "chart": {"coordinates": ["x", "y", "z"]},
        "metric": _diag(3, 1),
        "fields": {"f": "(x^2+y^2+z^2)/2", "lambda": "-1", "mu": "0"},
        "sampling": {"seed": 7, "count": 32, "box": [[-2.0, 2.0]] * 3},
        "checks": [
            "discriminant",
            {"id": "fit", "expected": {"lambda": -1.0, "mu": 0.0}},
            "maximum-principle",
            {"id": "scal", "expected": 0},
        ]
        + SOLITON_CHECKS,
    }


def _halfspace(name: str, description: str) -> dict:
    return {
        "name": name,
        "description": description,
        "chart": {"coordinates": ["x", "y", "z"], "constraints": ["z"]},
        "metric": _diag(3, "z^(-2)"),
        "fields": {"f": "-ln(z)"},
        "sampling": {"seed": 11, "count": 32, "box": [[-2.0, 2.0], [-2.0, 2.0], [0.2, 3.0]]},
    }


def hyperbolic_halfspace() -> dict:
    d = _halfspace("hyperbolic-halfspace", "upper half-space model, f = -ln z, constants fitted")
    d["fit_coefficients"] = True
    d["checks"] = (
        [
            "discriminant",
            {"id": "fit", "expected": {"lambda": -7.0, "mu": 1.0}},
            "ricci-contraction",
            {"id": "scal", "expected": -6},
        ]
        + GEOMETRY_CHECKS
        + SOLITON_CHECKS
    )
    return d


def paper_example_hyperbolic() -> dict:
    d = _halfspace("paper-example-hyperbolic", "half-space example with the stated constants (-8, 2)")
    d["fields"].update({"lambda": "-8", "mu": "2"})
    d["checks"] = [
        {"id": "fit", "expected": {"lambda": -7.0, "mu": 1.0}},
        "paper-constants-audit",
        {"id": "scal", "expected": -6},
    ]
    return d


def paper_example_cylinder() -> dict:
    return {
        "name": "paper-example-cylinder",
        "description": "half-space times the round 3-sphere, phi = 1, stated constants (-2, 2)",
        "warped": {"base": "hyperbolic-halfspace", "fiber": "round-sphere-3", "phi": "1"},
        "fields": {"f": "-ln(z)", "lambda": "-2", "mu": "2"},
        "sampling": {
            "seed": 13,
            "count": 32,
            "box": [[-2.0, 2.0], [-2.0, 2.0], [0.2, 3.0]] + [[-1.5, 1.5]] * 3,
        },
        "checks": [
            "block-structure",
            "fit-report",
            "lift",
            "paper-constants-audit",
            {"id": "scal", "expected": 0},
            "warped-scal-crosscheck",
        ],
    }


def line_exp_warped_witness() -> dict:
    return {
        "name": "line-exp-warped-witness",
        "description": "base (R, dt^2, f = t, mu = 1), phi = e^t, fiber the unit 2-sphere",
        "warped": {
            "base": {"chart": {"coordinates": ["t"]}, "metric": [[1]]},
            "fiber": "round-sphere-2",
            "phi": "exp(t)",
        },
        "fields": {"f": "t", "lambda": "2*exp(-2*t)-7", "mu": "1"},
        "sampling": {"seed": 17, "count": 32, "box": [[-1.0, 1.0], [-1.5, 1.5], [-1.5, 1.5]]},
        "checks": [
            "block-structure",
            "e36",
            "fiber-scal",
            {"id": "lambda-base", "expected": "-1"},
            "lift",
            "rrr",
            {"id": "scal", "expected": "2*exp(-2*t)-6"},
            "section33-aux",
            "section33-e38",
            "section33-e40",
            "section33-e51",
            "soliton-residual",
            "theorem3",
            "warped-scal-crosscheck",
        ],
    }


def flat_torus_2() -> dict:
    return {
        "name": "flat-torus-2",
        "description": "flat square torus with a trigonometric potential",
        "chart": {"coordinates": ["x", "y"]},
        "metric": _diag(2, 1),
        "fields": {"f": "sin(x)+cos(2*y)", "mu": "0.5"},
        "periodic": {"periods": ["2*pi", "2*pi"], "resolution": 64},
        "sampling": {"seed": 19, "count": 32, "box": [[0.0, 6.283185307179586]] * 2},
        "checks": [{"id": "scal", "expected": 0}, "section33-aux", "section33-e40"] + TORUS_CHECKS,
    }


def torus_section33() -> dict:
    return {
        "name": "torus-section33",
        "description": "conformally flat torus with non-trivial phi for the integral identities",
        "chart": {"coordinates": ["x", "y"]},
        "metric": _diag(2, "exp(0.3*sin(x)*cos(y))"),
        "fields": {"f": "sin(x)*cos(y)+0.5*sin(2*x)", "mu": "0.5", "phi": "2+sin(x+y)"},
        "periodic": {"periods": ["2*pi", "2*pi"], "resolution": 64},
        "sampling": {"seed": 23, "count": 32, "box": [[0.0, 6.283185307179586]] * 2},
        "checks": ["section33-aux", "section33-e38", "section33-e40", "section33-e51"] + TORUS_CHECKS,
    }


_FIXED = {
    "gaussian-soliton": gaussian_soliton,
    "hyperbolic-halfspace": hyperbolic_halfspace,
    "paper-example-hyperbolic": paper_example_hyperbolic,
    "paper-example-cylinder": paper_example_cylinder,
    "line-exp-warped-witness": line_exp_warped_witness,
    "flat-torus-2": flat_torus_2,
    "torus-section33": torus_section33,
}
_FAMILIES = {"euclidean": euclidean, "round-sphere": round_sphere}
_FAMILY_RE = re.compile(r"^(euclidean|round-sphere)-(\d+|n|m)$")


def names() -> list[str]:
    return sorted(["euclidean-n", "round-sphere-m", *_FIXED])


def is_builtin(name: str) -> bool:
    return name in _FIXED or bool(_FAMILY_RE.match(name))


def builtin(name: str) -> dict:
    if name in _FIXED:
        return copy.deepcopy(_FIXED[name]())
    m = _FAMILY_RE.match(name)
    if m:
        dim = 3 if m.group(2) in ("n", "m") else int(m.group(2))
        if dim < 1 or (m.group(1) == "round-sphere" and dim < 2):
            raise KeyError(f"unsupported dimension in {name!r}")
        return _FAMILIES[m.group(1)](dim)
    raise KeyError(f"unknown builtin {name!r}; available: {', '.join(names())}")
