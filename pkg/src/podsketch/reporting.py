"""Report assembly, validation, and rendering.

A report is a plain JSON document with top-level keys
{config, sigma, traces, angles?, wedin?, timing, passes}.  Singular values
and angles are emitted as decimal numbers at full binary64 round-trip
precision (Python's default float formatting).  Alongside the JSON the CLI
can write the same tables as comma-separated files and render diagnostic
figures; both derive from the report alone, so saved reports can be
re-rendered later.
"""

from __future__ import annotations

import csv
import json
import math

import jsonschema

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["config", "sigma", "traces", "timing", "passes"],
    "additionalProperties": False,
    "properties": {
        "config": {
            "type": "object",
            "required": ["algorithm", "k"],
            "properties": {
                "algorithm": {"type": "string"},
                "k": {"type": "integer", "minimum": 1},
                "r": {"type": ["integer", "null"]},
                "epsilon": {"type": "number"},
                "delta": {"type": "number"},
                "tau": {"type": "number"},
                "strategy": {"type": ["string", "null"]},
                "rows": {"type": "boolean"},
                "criterion": {"type": ["string", "null"]},
                "seed": {"type": ["integer", "null"]},
                "finalize": {"type": "boolean"},
                "blocks": {"type": ["integer", "null"]},
                "threads": {"type": "integer"},
                "c": {"type": ["integer", "null"]},
                "w": {"type": ["integer", "null"]},
                "input": {"type": "string"},
                "reference": {"type": ["string", "null"]},
            },
        },
        "sigma": {"type": "array", "items": {"type": "number"}},
        "traces": {
            "type": "array",
            "items": {
                "type": "object",
                "required": [
                    "iteration",
                    "columns_sampled",
                    "rows_sampled",
                    "remaining",
                    "cosines",
                    "wall_time",
                ],
                "additionalProperties": False,
                "properties": {
                    "iteration": {"type": "integer", "minimum": 0},
                    "columns_sampled": {"type": "integer", "minimum": 0},
                    "rows_sampled": {"type": "integer", "minimum": 0},
                    "remaining": {"type": "integer", "minimum": 0},
                    "cosines": {
                        "type": "array",
                        "items": {"type": "number", "minimum": -1, "maximum": 1},
                    },
                    "wall_time": {"type": "number", "minimum": 0},
                },
            },
        },
        "angles": {
            "type": "object",
            "required": ["mode_degrees", "principal_degrees"],
            "additionalProperties": False,
            "properties": {
                "mode_degrees": {"type": "array", "items": {"type": "number"}},
                "principal_degrees": {"type": "array", "items": {"type": "number"}},
            },
        },
        "wedin": {
            "type": "object",
            "required": [
                "r_norm",
                "s_norm",
                "omega_hat",
                "measure",
                "ceiling",
                "degenerate",
            ],
            "additionalProperties": False,
            "properties": {
                "r_norm": {"type": "number", "minimum": 0},
                "s_norm": {"type": "number", "minimum": 0},
                "omega_hat": {"type": "number", "minimum": 0},
                "measure": {"type": ["number", "null"], "minimum": 0},
                "ceiling": {"type": "number", "minimum": 0},
                "degenerate": {"type": "boolean"},
                "advisory": {"type": ["string", "null"]},
            },
        },
        "timing": {
            "type": "object",
            "required": ["wall_s", "cpu_s"],
            "additionalProperties": False,
            "properties": {
                "wall_s": {"type": "number", "minimum": 0},
                "cpu_s": {"type": "number", "minimum": 0},
                "flops_estimate": {"type": "number", "minimum": 0},
            },
        },
        "passes": {"type": "integer", "minimum": 0},
    },
}


def validate_report(report):
    """Raise jsonschema.ValidationError if the report is malformed."""
    jsonschema.validate(report, REPORT_SCHEMA)


def traces_to_json(traces):
    return [
        {
            "iteration": tr.iteration,
            "columns_sampled": tr.columns_sampled,
            "rows_sampled": tr.rows_sampled,
            "remaining": tr.remaining,
            "cosines": [float(x) for x in tr.cosines],
            "wall_time": float(tr.wall_time),
        }
        for tr in traces
    ]


def wedin_to_json(rep):
    return {
        "r_norm": rep.r_norm,
        "s_norm": rep.s_norm,
        "omega_hat": rep.omega_hat,
        "measure": None if math.isinf(rep.measure) else rep.measure,
        "ceiling": rep.ceiling,
        "degenerate": rep.degenerate,
        "advisory": rep.advisory,
    }


def dump_report(report):
    """Serialize to canonical JSON text (sorted keys, trailing newline)."""
    validate_report(report)
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def write_report(report, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(dump_report(report))


def write_delimited(report, stem):
    """Write the report's tables as comma-separated files next to the JSON.

    Produces <stem>_sigma.csv always, <stem>_traces.csv when the run has
    traces, and <stem>_angles.csv when a reference comparison is present.
    Returns the written paths.
    """
    paths = []
    p = f"{stem}_sigma.csv"
    with open(p, "w", newline="", encoding="utf-8") as f:
        wr = csv.writer(f)
        wr.writerow(["mode", "sigma"])
        for i, s in enumerate(report["sigma"], start=1):
            wr.writerow([i, repr(float(s))])
    paths.append(p)
    if report["traces"]:
        p = f"{stem}_traces.csv"
        with open(p, "w", newline="", encoding="utf-8") as f:
            wr = csv.writer(f)
            wr.writerow(
                [
                    "iteration",
                    "columns_sampled",
                    "rows_sampled",
                    "remaining",
                    "min_cosine",
                    "wall_time",
                ]
            )
            for tr in report["traces"]:
                cos = tr["cosines"]
                wr.writerow(
                    [
                        tr["iteration"],
                        tr["columns_sampled"],
                        tr["rows_sampled"],
                        tr["remaining"],
                        repr(min(cos)) if cos else "",
                        repr(tr["wall_time"]),
                    ]
                )
        paths.append(p)
    if "angles" in report:
        p = f"{stem}_angles.csv"
        with open(p, "w", newline="", encoding="utf-8") as f:
            wr = csv.writer(f)
            wr.writerow(["mode", "mode_angle_deg", "principal_angle_deg"])
            mode_deg = report["angles"]["mode_degrees"]
            prin_deg = report["angles"]["principal_degrees"]
            for i in range(max(len(mode_deg), len(prin_deg))):
                wr.writerow(
                    [
                        i + 1,
                        repr(mode_deg[i]) if i < len(mode_deg) else "",
                        repr(prin_deg[i]) if i < len(prin_deg) else "",
                    ]
                )
        paths.append(p)
    return paths


def render_plots(report, stem):
    """Render diagnostic figures for a report; returns the written paths.

    Always: the singular-value decay.  When available: per-iteration
    convergence (worst cosine and candidates remaining) and the angle
    comparison against the reference.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    sigma = report["sigma"]
    if sigma:
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.semilogy(range(1, len(sigma) + 1), sigma, "o-", ms=4)
        ax.set_xlabel("mode")
        ax.set_ylabel(r"$\sigma_i$")
        ax.set_title("singular value decay")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        p = f"{stem}_sigma.png"
        fig.savefig(p, dpi=150)
        plt.close(fig)
        paths.append(p)

    traced = [tr for tr in report["traces"] if tr["cosines"]]
    if traced:
        its = [tr["iteration"] for tr in traced]
        worst = [min(tr["cosines"]) for tr in traced]
        remaining = [tr["remaining"] for tr in traced]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(its, worst, "o-", ms=4, label="worst cosine")
        tau = report["config"].get("tau")
        if tau is not None:
            ax.axhline(tau, color="k", ls="--", lw=0.8, label=r"$\tau$")
        ax.set_xlabel("iteration")
        ax.set_ylabel("convergence cosine")
        ax.set_ylim(0, 1.05)
        ax2 = ax.twinx()
        ax2.plot(its, remaining, "s--", ms=3, color="tab:gray", alpha=0.6)
        ax2.set_ylabel("candidates remaining", color="tab:gray")
        ax.legend(loc="lower right")
        fig.tight_layout()
        p = f"{stem}_convergence.png"
        fig.savefig(p, dpi=150)
        plt.close(fig)
        paths.append(p)

    if "angles" in report:
        mode_deg = report["angles"]["mode_degrees"]
        prin_deg = report["angles"]["principal_degrees"]
        idx = range(1, len(mode_deg) + 1)
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.bar([i - 0.2 for i in idx], mode_deg, width=0.4, label="mode angle")
        ax.bar(
            [i + 0.2 for i in range(1, len(prin_deg) + 1)],
            prin_deg,
            width=0.4,
            label="principal angle",
        )
        ax.set_xlabel("mode")
        ax.set_ylabel("degrees")
        ax.set_title("error angles vs reference")
        ax.legend()
        fig.tight_layout()
        p = f"{stem}_angles.png"
        fig.savefig(p, dpi=150)
        plt.close(fig)
        paths.append(p)
    return paths
