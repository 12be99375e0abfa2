#!/usr/bin/env python3
"""Regenerate the golden scenario files under src/cartaneds/data/scenarios.

The structure-equation transcriptions below are the single source of truth;
the shipped JSON is hash-pinned inside cartaneds.scenarios, so after editing
anything here rerun this script and refresh the pinned hashes it prints.
"""

from __future__ import annotations

import hashlib
import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "src" / "cartaneds" / "data" / "scenarios"

W = ["w0", "w1", "w2", "w3", "w4"]


def rule(*terms):
    return [[c, list(m)] for c, m in terms]


# --- rank-1 normal-form coframe (master structure equations) -----------------

RANK1 = {
    "format": 1,
    "id": "rank1",
    "description": "Rank-1 normal-form coframe with torsion scalars Q1, Q2 and "
    "connection forms phi0, phi1, phi3, phi7.",
    "coframe": W,
    "independence": W,
    "connection": ["phi0", "phi1", "phi3", "phi7"],
    "scalars": ["Q1", "Q2"],
    "free_scalar_forms": ["Q1", "Q2"],
    "scalar_rules": {},
    "free_derivatives": [],
    "parameters": {},
    "nonzero": [],
    "rules": {
        "w0": rule(("-1", ["phi0", "w0"]), ("1", ["w1", "w2"]), ("1", ["w3", "w4"])),
        "w1": rule(("-1", ["phi1", "w1"]), ("Q1", ["w2", "w3"])),
        "w2": rule(
            ("-1", ["phi3", "w1"]),
            ("-1", ["phi0", "w2"]),
            ("1", ["phi1", "w2"]),
            ("1", ["w0", "w3"]),
        ),
        "w3": rule(("1", ["phi1", "w3"]), ("Q2", ["w4", "w1"])),
        "w4": rule(
            ("-1", ["phi7", "w3"]),
            ("-1", ["phi0", "w4"]),
            ("-1", ["phi1", "w4"]),
            ("-1", ["w0", "w1"]),
        ),
    },
    "checks": {
        "residual_mod": {"w0": ["w0"], "w1": ["w1"], "w2": ["w1", "w2"], "w3": ["w3"], "w4": ["w3", "w4"]},
        "fiber_derivatives": {
            "Q1": {"row": "w1", "connection": [["1", "phi0"], ["-3", "phi1"]], "frame": ["w2", "w3"]},
            "Q2": {"row": "w3", "connection": [["1", "phi0"], ["3", "phi1"]], "frame": ["w4", "w1"]},
        },
        "quarter_turn": {
            "substitution": {
                "w0": ["-1", "w0"],
                "w1": ["1", "w3"],
                "w2": ["-1", "w4"],
                "w3": ["-1", "w1"],
                "w4": ["1", "w2"],
                "phi0": ["1", "phi0"],
                "phi1": ["-1", "phi1"],
            },
            "torsion_image": {"Q1": "Q2", "Q2": "-Q1"},
            "rows": ["w0", "w1", "w3"],
        },
    },
    "expected": {"residuals_vanish": True, "fiber_derivatives_match": True, "quarter_turn_matches": True},
    "citations": ["golden:rank1/rules", "golden:rank1/checks"],
}

# --- model III (nine invariants, e-structure) ---------------------------------

CASE3_RULES = {
    "w0": rule(
        ("3*A2", ["w2", "w0"]),
        ("-3*A4", ["w4", "w0"]),
        ("1", ["w1", "w2"]),
        ("1", ["w3", "w4"]),
    ),
    "w1": rule(
        ("-A2", ["w2", "w1"]),
        ("-A3", ["w3", "w1"]),
        ("-A4", ["w4", "w1"]),
        ("1", ["w2", "w3"]),
    ),
    "w2": rule(
        ("A4/A2", ["w1", "w0"]),
        ("-1", ["w3", "w0"]),
        ("A1 + A5", ["w1", "w2"]),
        ("(A9 - 1)/(3*A2)", ["w1", "w3"]),
        ("A6", ["w1", "w4"]),
        ("-A3", ["w2", "w3"]),
        ("2*A4", ["w2", "w4"]),
    ),
    "w3": rule(
        ("A1", ["w1", "w3"]),
        ("A2", ["w2", "w3"]),
        ("A4", ["w4", "w3"]),
        ("-1", ["w1", "w4"]),
    ),
    "w4": rule(
        ("1", ["w1", "w0"]),
        ("-A2/A4", ["w3", "w0"]),
        ("-A3 + A7", ["w3", "w4"]),
        ("(A9 + 1)/(3*A4)", ["w1", "w3"]),
        ("-A8", ["w2", "w3"]),
        ("-A1", ["w1", "w4"]),
        ("2*A2", ["w2", "w4"]),
    ),
}

CASE3_SCALAR_RULES = {
    "A1": {
        "w0": "A2/A4 + 2*A4",
        "w1": "A1_1",
        "w2": "A1*A2 - A8",
        "w3": "A1_3",
        "w4": "A1*A4 + 2*A2*A6 + 2*A3 - A7",
    },
    "A2": {
        "w1": "-A2*(A1 + A5)",
        "w2": "-A2*(4*A2 + 1/(2*A4) + A5_0*A2/A4 + (A2/A4)^2)",
        "w3": "A4*A8 - A2*A3",
        "w4": "2*A2*A4 + 1/2",
    },
    "A3": {
        "w0": "A4/A2 - 2*A2",
        "w1": "A3_1",
        "w2": "-A2*A3 + 2*A4*A8 + 2*A1 + A5",
        "w3": "A3_3",
        "w4": "-(A3*A4 - A6)",
    },
    "A4": {
        "w1": "A1*A4 + A2*A6",
        "w2": "-(2*A2*A4 + 1/2)",
        "w3": "A4*(A3 - A7)",
        "w4": "A4*(4*A4 + 1/(2*A2) + A7_0*A4/A2 - (A4/A2)^2)",
    },
    "A5": {
        "w0": "A5_0",
        "w1": "A5_1",
        "w2": "A5_2",
        "w3": "A5_3",
        "w4": "A6*(A2/A4)^2 + A5_0*A6*A2/A4 + A8*A4/A2 + A6/(2*A4) - A5/(2*A2) + A4*A5 - 3*A3 + A7",
    },
    "A6": {
        "w0": "-(A4/A2)^3 + A7_0*(A4/A2)^2 - 1",
        "w1": "A6_1",
        "w2": "A6*(A2/A4)^2 + A5_0*A6*A2/A4 + A8*A4/A2 + A6/(2*A4) - A5/(2*A2) + 3*A2*A6",
        "w3": "(1/(3*A2))*(3*A4*(A3_1 - A1_3) + (A9 + 1)*A7_0*A4/A2 + 3*A1*A4*(2*A3 - A7)"
        " + 3*A2*A6*(3*A3 - A7) - 3*A4*A6*A8 + A4*(2*A9 - 3*A7_1 + 6)"
        " - (A9 + 1)*(A4/A2)^2 + 1/A2)",
        "w4": "A6_4",
    },
    "A7": {
        "w0": "A7_0",
        "w1": "A7_1",
        "w2": "A8*(A4/A2)^2 - A7_0*A8*A4/A2 + A6*A2/A4 + A7/(2*A4) - A8/(2*A2) - A2*A7 + 3*A1 + A5",
        "w3": "A7_3",
        "w4": "A7_4",
    },
    "A8": {
        "w0": "(A2/A4)^3 + A5_0*(A2/A4)^2 + 1",
        "w1": "(1/(3*A4))*(3*A2*(A3_1 - A1_3) + (A9 - 1)*A5_0*A2/A4 + 3*A2*A3*(2*A1 + A5)"
        " - 3*A4*A8*(3*A1 + A5) - 3*A2*A6*A8 + A2*(2*A9 - 3*A5_3 - 6)"
        " + (A9 - 1)*(A2/A4)^2 - 1/A4)",
        "w2": "A8_2",
        "w3": "A8_3",
        "w4": "A8*(A4/A2)^2 - A7_0*A8*A4/A2 + A6*A2/A4 + A7/(2*A4) - A8/(2*A2) - 3*A4*A8",
    },
    "A9": {
        "w0": "-3*(A2^2*A6/A4 + A4^2*A8/A2 + A2*A5 + A4*A7)",
        "w1": "A9_1",
        "w2": "A2*((1 - A9)/A2*((A2/A4)^2 + A5_0*A2/A4 + 1/(2*A4)) - 3*A3*(2*A1 + A5)"
        " + 3*A6*A8 - 2*A9 + 3*(A1_3 - A3_1 + A5_3) + 9)",
        "w3": "A9_3",
        "w4": "A4*((1 + A9)/A4*(-(A4/A2)^2 + A7_0*A4/A2 + 1/(2*A2)) + 3*A1*(2*A3 - A7)"
        " - 3*A6*A8 + 2*A9 - 3*(A1_3 - A3_1 + A7_1) + 9)",
    },
}

CASE3 = {
    "format": 1,
    "id": "case3",
    "description": "Nine-invariant e-structure with both torsion scalars normalized to 1.",
    "coframe": W,
    "independence": W,
    "connection": [],
    "scalars": ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9"],
    "parameters": {},
    "nonzero": ["A2", "A4"],
    "rules": CASE3_RULES,
    "scalar_rules": CASE3_SCALAR_RULES,
    "free_derivatives": [
        "A1_1", "A1_3", "A3_1", "A3_3", "A5_0", "A5_1", "A5_2", "A5_3",
        "A7_0", "A7_1", "A7_3", "A7_4", "A6_1", "A6_4", "A8_2", "A8_3",
        "A9_1", "A9_3",
    ],
    "checks": {
        "d2_mod": {},
        "minors": [
            {
                "rows": ["A2", "A3"],
                "cols": ["w0", "w4"],
                "value": "(1/(2*A2))*(4*A2*A4 + 1)*(2*A2^2 - A4)",
            },
            {
                "rows": ["A1", "A4"],
                "cols": ["w0", "w2"],
                "value": "(-1/(2*A4))*(4*A2*A4 + 1)*(2*A4^2 + A2)",
            },
        ],
    },
    "expected": {
        "d2_identity": True,
        "minors_verified": True,
        "equation_count": 33,
        "solved_count": 25,
        "free_count": 20,
        "tableau_dim_before": 20,
        "absorption_solves": ["A6_2", "A8_4"],
        "tableau_dim": 18,
        "characters": [9, 7, 2, 0, 0],
        "prolongation_dim": 29,
        "involutive": True,
        "torsion_absorbable": True,
    },
    "citations": ["golden:case3/rules", "golden:case3/scalar_rules", "golden:case3/expected"],
}

# --- model IIa (six invariants plus one connection form) -----------------------

CASE2A_RULES = {
    "w0": rule(
        ("-(3*A1 + 1)", ["w1", "w0"]),
        ("-3*(A2 - A4)", ["w2", "w0"]),
        ("-3*A3", ["w3", "w0"]),
        ("1", ["w1", "w2"]),
        ("1", ["w3", "w4"]),
    ),
    "w1": rule(
        ("-3*A4^2", ["w0", "w1"]),
        ("A2", ["w1", "w2"]),
        ("A3", ["w1", "w3"]),
        ("1", ["w2", "w3"]),
    ),
    "w2": rule(
        ("-A4", ["w0", "w1"]),
        ("-6*A4^2", ["w0", "w2"]),
        ("1", ["w0", "w3"]),
        ("A5 - 2*A1", ["w1", "w2"]),
        ("A6", ["w1", "w3"]),
        ("2*A3", ["w2", "w3"]),
    ),
    "w3": rule(
        ("3*A4^2", ["w0", "w3"]),
        ("A1", ["w1", "w3"]),
        ("A2", ["w2", "w3"]),
    ),
    "w4": rule(
        ("-1", ["phi", "w3"]),
        ("-1", ["w0", "w1"]),
        ("-12*A4^2", ["w0", "w4"]),
        ("-(4*A1 + 1)", ["w1", "w4"]),
        ("-4*A2 + 3*A4", ["w2", "w4"]),
        ("-4*A3", ["w3", "w4"]),
    ),
}

CASE2A_SCALAR_RULES = {
    "A1": {
        "w0": "6*A4*((A1 - A5 - 1/2)*A4 + A2/2)",
        "w1": "A1_1",
        "w2": "A2*(A5 - A1) + 3*A4^2 + A2_1",
        "w3": "-2/3 + (6*A1 + 1)*A3/3 + (A2 - A4)*A6 + A3_1",
    },
    "A2": {
        "w0": "9*((-1 - 2*A5)*A4^2 + A2*A4 + 2*A5_0/3)*A4",
        "w1": "A2_1",
        "w2": "A2_2",
        "w3": "-9*A6*(A5 + 1)*A4^2 + (6*A6*A2 + 3*A6_2 - 3)*A4 - 3*A5^2 + (3*A1 - 1)*A5"
        " + 3*A2*A3 + 3*A6*A5_0 + A1 - 3*A5_1",
    },
    "A3": {
        "w0": "(-6*A5 - 1)*A4 - A2",
        "w1": "A3_1",
        "w2": "-9*A6*(A5 + 1)*A4^2 + (6*A6*A2 + 3*A6_2 - 3)*A4 + 3*A5*A1 - 3*A5^2"
        " + 3*A6*A5_0 - 3*A5_1",
        "w3": "A3_3",
        "w4": "3*A4^2",
    },
    "A4": {
        "w0": "6*A4^3",
        "w1": "(-A5 + 2*A1)*A4 + A2/3",
        "w2": "(-3*A5 - 3)*A4^2 + 2*A2*A4 + A5_0",
        "w3": "2*A4*A3 - A5 - 1/3",
    },
    "A5": {
        "w0": "A5_0",
        "w1": "A5_1",
        "w2": "A5_2",
        "w3": "-7/3 + (3*A5 + 2)*A3/3 + 2*(A2 - A4)*A6 + A6_2",
    },
    "A6": {
        "w0": "-(6*A6*A4^2 + 2*A5 + 4/3)",
        "w1": "A6_1",
        "w2": "A6_2",
        "w3": "A6_3",
        "w4": "A4",
    },
}

CASE2A = {
    "format": 1,
    "id": "case2a",
    "description": "Six-invariant structure with one residual connection form.",
    "coframe": W,
    "independence": W,
    "connection": ["phi"],
    "scalars": ["A1", "A2", "A3", "A4", "A5", "A6"],
    "parameters": {},
    "nonzero": [],
    "rules": CASE2A_RULES,
    "scalar_rules": CASE2A_SCALAR_RULES,
    "free_derivatives": [
        "A1_1", "A2_1", "A2_2", "A3_1", "A3_3", "A5_0", "A5_1", "A5_2",
        "A6_1", "A6_2", "A6_3",
    ],
    "checks": {"d2_mod": {"w4": ["w3"]}},
    "expected": {
        "d2_identity": True,
        "equation_count": 28,
        "solved_count": 18,
        "free_count": 12,
        "tableau_dim_before": 12,
        "absorption_solves": ["A3_2"],
        "tableau_dim": 11,
        "characters": [6, 4, 1, 0, 0],
        "prolongation_dim": 17,
        "involutive": True,
        "torsion_absorbable": True,
    },
    "citations": ["golden:case2a/rules", "golden:case2a/scalar_rules", "golden:case2a/expected"],
}

# --- model IIb (two invariants, discrete parameter lam = +/-1) -------------------


def case2b(lam: int) -> dict:
    tag = "+" if lam > 0 else "-"
    return {
        "format": 1,
        "id": f"case2b{tag}",
        "description": "Two-invariant structure with discrete parameter lam.",
        "coframe": W,
        "independence": W,
        "connection": ["phi"],
        "scalars": ["A1", "A2"],
        "parameters": {"lam": f"{lam}"},
        "nonzero": [],
        "rules": {
            "w0": rule(
                ("3*A1", ["w0", "w1"]),
                ("7/(2*lam)", ["w0", "w2"]),
                ("3*A2", ["w0", "w3"]),
                ("1", ["w1", "w2"]),
                ("1", ["w3", "w4"]),
            ),
            "w1": rule(
                ("7/(6*lam)", ["w1", "w2"]),
                ("A2", ["w1", "w3"]),
                ("1", ["w2", "w3"]),
            ),
            "w2": rule(
                ("lam", ["w1", "w3"]),
                ("-2*A1", ["w1", "w2"]),
                ("2*A2", ["w2", "w3"]),
                ("1", ["w0", "w3"]),
            ),
            "w3": rule(
                ("A1", ["w1", "w3"]),
                ("7/(6*lam)", ["w2", "w3"]),
            ),
            "w4": rule(
                ("-1", ["phi", "w3"]),
                ("-4*A1", ["w1", "w4"]),
                ("-14/(3*lam)", ["w2", "w4"]),
                ("-4*A2", ["w3", "w4"]),
                ("-1", ["w0", "w1"]),
            ),
        },
        "scalar_rules": {
            "A1": {
                "w1": "A1_1",
                "w2": "-7*A1/(6*lam)",
                "w3": "2*A1*A2 + A2_1 + 1/2",
            },
            "A2": {
                "w0": "-7/(6*lam)",
                "w1": "A2_1",
                "w2": "-(2*A1*lam + 7*A2)/(2*lam)",
                "w3": "A2_3",
            },
        },
        "free_derivatives": ["A1_1", "A2_1", "A2_3"],
        "checks": {
            "d2_mod": {"w4": ["w3"]},
            "tableau_pattern": [
                [0, "A1_1", "w1", "1"],
                [0, "A2_1", "w3", "1"],
                [1, "A2_1", "w1", "1"],
                [1, "A2_3", "w3", "1"],
            ],
        },
        "expected": {
            "d2_identity": True,
            "equation_count": 18,
            "raw_equation_count": 18,
            "solved_count": 7,
            "free_count": 3,
            "tableau_dim_before": 3,
            "absorption_solves": [],
            "tableau_dim": 3,
            "characters": [2, 1, 0, 0, 0],
            "prolongation_dim": 4,
            "involutive": True,
            "torsion_absorbable": True,
            "tableau_pattern": True,
        },
        "citations": [
            f"golden:case2b{tag}/rules",
            f"golden:case2b{tag}/scalar_rules",
            f"golden:case2b{tag}/expected",
        ],
    }


# --- flat-case coordinate model (delegates to the casei module) -----------------

CASE1 = {
    "format": 1,
    "id": "case1",
    "description": "Vanishing-torsion case: symbolic coordinate model round-trip "
    "and the flattest linear equation.",
    "checks": {"kind": "case1"},
    "expected": {
        "structure_residuals_vanish": True,
        "dphi0": "2",
        "dphi1_is_invariant": True,
        "flat_pde": {"a": "x", "b": "-y", "c": "-x*y"},
    },
    "citations": ["golden:case1/expected"],
}


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    combos = [RANK1, CASE3, CASE2A, case2b(1), case2b(-1), CASE1]
    for data in combos:
        path = OUT / f"{data['id']}.json"
        blob = json.dumps(data, indent=1, sort_keys=True, ensure_ascii=False) + "\n"
        path.write_text(blob, encoding="utf-8")
        digest = hashlib.sha256(blob.encode("utf-8")).hexdigest()
        print(f'    "{data["id"]}": "{digest}",')


if __name__ == "__main__":
    main()
