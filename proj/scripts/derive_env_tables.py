#!/usr/bin/env python3
"""Regenerate the shipped environment tables under data/envs/.

The original tables are read off the FICO credit, COMPAS and ENEM datasets.
Those datasets are not redistributed here, so this script rebuilds each
table from parametric shapes that follow the published aggregates:

* lending: ten FICO score classes; white applicants spread over the whole
  range, about half of Black applicants in the two lowest classes; repayment
  probability increasing in score and slightly lower for Black applicants.
* recidivism: five age classes (<25, 25-34, 35-44, 45-54, 55+) and eight
  priors buckets (0, 1, 2, 3, 4, 5-7, 8-12, 13+); group 0 is
  African-American (60% of the screened population), group 1 Caucasian.
  The label is 1 when the individual does not reoffend.
* school: 126 one-hot census features of ENEM applicants plus an indicator
  of an earlier acceptance or positive label. Group 0 is public-school
  applicants (62%), group 1 private-school applicants (38%). A logistic
  label model is shifted so the population positive rate is 37%, and the
  indicator coefficient is set so that switching the indicator on raises the
  mean positive probability of the initial population by exactly 0.5.
* school_continuous: the school table plus three exam scores in [0, 1000].

Run from the repository root:  python3 scripts/derive_env_tables.py
The output is deterministic.
"""

from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

import numpy as np

FORMAT = "sellf-env/1"
SEED = 20240521

PROVENANCE = (
    "synthesized by scripts/derive_env_tables.py from parametric shapes of "
    "the published {} aggregates; not the raw dataset"
)


def normalized(values) -> list[float]:
    arr = np.asarray(values, dtype=float)
    arr = arr / arr.sum()
    # Push the rounding residue into the largest entry so rows sum to 1.
    out = [float(v) for v in arr]
    out[int(np.argmax(arr))] += 1.0 - math.fsum(out)
    return out


def sigmoid(s):
    return 1.0 / (1.0 + np.exp(-s))


def lending() -> dict:
    black = [0.30, 0.19, 0.12, 0.09, 0.07, 0.06, 0.05, 0.05, 0.04, 0.03]
    white = [0.05, 0.06, 0.07, 0.08, 0.09, 0.10, 0.12, 0.13, 0.14, 0.16]
    repay_white = [0.05, 0.12, 0.25, 0.40, 0.55, 0.70, 0.80, 0.88, 0.94, 0.97]
    repay_black = [0.04, 0.10, 0.21, 0.36, 0.51, 0.66, 0.77, 0.86, 0.92, 0.96]
    support = [[1.0 if i == s else 0.0 for i in range(10)] for s in range(10)]
    return {
        "format": FORMAT,
        "name": "lending",
        "kind": "lending",
        "provenance": PROVENANCE.format("FICO credit-score"),
        "group_count": 2,
        "group_prior": [0.5, 0.5],
        "cost": 0.8,
        "pool_size": 5000,
        "feature_dim": 10,
        "support": {"encoding": "dense", "points": support},
        "init_probs": [normalized(black), normalized(white)],
        "alpha": {"type": "table", "values": [repay_black, repay_white]},
    }


def recidivism() -> dict:
    ages, priors = 5, 8
    age_mass = {
        0: [0.30, 0.37, 0.17, 0.11, 0.05],
        1: [0.18, 0.33, 0.19, 0.19, 0.11],
    }
    priors_mass = {
        0: [0.24, 0.14, 0.11, 0.09, 0.08, 0.15, 0.12, 0.07],
        1: [0.42, 0.17, 0.11, 0.08, 0.06, 0.08, 0.06, 0.02],
    }
    support, probs = [], {0: [], 1: []}
    alpha = {0: [], 1: []}
    for a in range(ages):
        for p in range(priors):
            x = [0.0] * (ages + priors)
            x[a] = 1.0
            x[ages + p] = 1.0
            support.append(x)
            for z in (0, 1):
                probs[z].append(age_mass[z][a] * priors_mass[z][p])
                s = 0.55 + 0.35 * a - 0.33 * p - (0.10 if z == 0 else 0.0)
                alpha[z].append(round(float(sigmoid(s)), 6))
    return {
        "format": FORMAT,
        "name": "recidivism",
        "kind": "recidivism",
        "provenance": PROVENANCE.format("COMPAS recidivism"),
        "group_count": 2,
        "group_prior": [0.6, 0.4],
        "cost": 0.9,
        "pool_size": 5000,
        "feature_dim": ages + priors,
        "support": {"encoding": "dense", "points": support},
        "init_probs": [normalized(probs[0]), normalized(probs[1])],
        "alpha": {"type": "table", "values": [alpha[0], alpha[1]]},
    }


# Categorical census blocks, 126 one-hot columns in total. Age comes first so
# the transition can advance it in place.
SCHOOL_BLOCKS = [
    ("age", 7),
    ("sex", 2),
    ("race", 6),
    ("state_region", 27),
    ("family_income", 17),
    ("father_education", 8),
    ("mother_education", 8),
    ("father_occupation", 6),
    ("mother_occupation", 6),
    ("household_size", 20),
    ("internet", 2),
    ("computers", 5),
    ("cars", 5),
    ("exam_purpose", 7),
]
assert sum(w for _, w in SCHOOL_BLOCKS) == 126

SCORE_NAMES = ["math", "language", "science"]


def school_population(rng, n_per_group: int, with_scores: bool):
    """Sample applicant profiles; returns (support, probs per group)."""
    # Socio-economic blocks shift toward higher categories for group 1.
    ses_blocks = {"family_income", "father_education", "mother_education",
                  "computers", "cars", "internet"}
    group_points = {}
    for z in (0, 1):
        counts: dict[tuple, int] = {}
        for _ in range(n_per_group):
            latent = rng.normal(0.9 * z, 1.0)
            active, offset = [], 0
            for name, width in SCHOOL_BLOCKS:
                if name == "age":
                    logits = -0.55 * np.arange(width)
                elif name in ses_blocks:
                    centre = (width - 1) * sigmoid(latent - 0.3)
                    logits = -0.5 * (np.arange(width) - centre) ** 2
                else:
                    logits = np.zeros(width)
                p = np.exp(logits - logits.max())
                p /= p.sum()
                active.append(offset + int(rng.choice(width, p=p)))
                offset += width
            key = tuple(active)
            if with_scores:
                base = 480.0 + 70.0 * latent
                scores = tuple(
                    float(np.clip(round(base + rng.normal(0, 60.0), -1), 0,
                                  1000))
                    for _ in SCORE_NAMES)
                key = key + scores
            counts[key] = counts.get(key, 0) + 1
        group_points[z] = counts
    keys = sorted(set(group_points[0]) | set(group_points[1]))
    probs = {z: [group_points[z].get(k, 0) for k in keys] for z in (0, 1)}
    return keys, probs


def school(with_scores: bool) -> dict:
    rng = np.random.default_rng(SEED + (1 if with_scores else 0))
    keys, probs = school_population(rng, 1500, with_scores)
    n_scores = len(SCORE_NAMES) if with_scores else 0
    dim = 126 + 1 + n_scores
    categorical = len(SCHOOL_BLOCKS)

    x = np.zeros((len(keys), dim))
    for row, key in enumerate(keys):
        for idx in key[:categorical]:
            x[row, idx] = 1.0
        for k in range(n_scores):
            x[row, 127 + k] = key[categorical + k]

    weights = np.zeros(dim + 1)
    offset = 0
    for name, width in SCHOOL_BLOCKS:
        if name == "age":
            block = -0.18 * np.arange(width)
        elif name in {"family_income", "father_education", "mother_education",
                      "computers", "cars"}:
            block = np.linspace(-0.6, 0.6, width)
        else:
            block = rng.normal(0.0, 0.15, width)
        weights[offset:offset + width] = block
        offset += width
    for k in range(n_scores):
        weights[127 + k] = 0.004
    weights[dim] = 0.25  # group indicator

    prior = [0.62, 0.38]
    p0 = np.asarray(normalized(probs[0]))
    p1 = np.asarray(normalized(probs[1]))
    def mean_alpha(bias, indicator_weight, indicator):
        s = x @ weights[:dim] + bias + indicator * indicator_weight
        a0 = sigmoid(s)
        a1 = sigmoid(s + weights[dim])
        return float(prior[0] * p0 @ a0 + prior[1] * p1 @ a1)

    def bisect(f, lo, hi):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    bias = bisect(lambda b: mean_alpha(b, 0.0, 0.0) - 0.37, -50.0, 50.0)
    base = mean_alpha(bias, 0.0, 0.0)
    boost = bisect(lambda w: mean_alpha(bias, w, 1.0) - base - 0.5, 0.0, 50.0)
    weights[126] = boost

    name = "school_continuous" if with_scores else "school"
    support = []
    for key in keys:
        point = {"active": list(key[:categorical])}
        if with_scores:
            point["scores"] = list(key[categorical:])
        support.append(point)
    return {
        "format": FORMAT,
        "name": name,
        "kind": name,
        "provenance": PROVENANCE.format("ENEM admission"),
        "group_count": 2,
        "group_prior": prior,
        "cost": 0.5,
        "pool_size": 5000,
        "feature_dim": dim,
        "layout": {
            "categorical_dim": 126,
            "age_offset": 0,
            "age_classes": 7,
            "indicator_index": 126,
            "score_offset": 127,
            "score_count": n_scores,
            "score_max": 1000.0,
            "score_input_scale": 0.001,
        },
        "support": {"encoding": "sparse", "points": support},
        "init_probs": [normalized(probs[0]), normalized(probs[1])],
        "alpha": {"type": "logistic", "weights": [float(w) for w in weights],
                  "bias": float(bias)},
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data/envs", type=Path)
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for table in (lending(), recidivism(), school(False), school(True)):
        path = args.out / f"{table['name']}.json"
        path.write_text(json.dumps(table, indent=1) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
