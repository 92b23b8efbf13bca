"""Artifact serialization: design files, certificates, re-verification,
and plot-data emission.

The interchange unit is a JSON object {"points": [...], "weights": [...]}
at full double precision.  Solver artifacts wrap it together with the model
name, the criterion description, and the certificate, so a design file can
be re-audited later without re-running the solver.
"""

from __future__ import annotations

import json
import math
from typing import Optional

import numpy as np

from .bayes import ParameterPrior, averaged_directional_derivative
from .design import DesignMeasure
from .local import EquivalenceCertificate, audit_grid, directional_derivative
from .maximin import BetaGrid, _certify, _local_offsets
from .models import Model, get_model, make_logistic


def design_to_json(design: DesignMeasure) -> str:
    return json.dumps(design.to_dict(), sort_keys=True)


def design_from_json(text: str) -> DesignMeasure:
    return DesignMeasure.from_dict(json.loads(text))


def _criterion_dict(criterion) -> dict:
    if isinstance(criterion, dict):
        return criterion
    if isinstance(criterion, ParameterPrior):
        return {
            "kind": "bayes",
            "prior": {
                "kind": criterion.kind,
                "params": list(criterion.params),
                "quadrature_nodes": criterion.quadrature_nodes,
            },
        }
    if isinstance(criterion, BetaGrid):
        return {
            "kind": "maximin",
            "beta_min": criterion.beta_min,
            "beta_max": criterion.beta_max,
            "count": criterion.count,
            "spacing": criterion.spacing,
        }
    raise TypeError(f"cannot describe criterion {criterion!r}")


def write_artifact(
    path: str,
    model: Model,
    criterion,
    design: DesignMeasure,
    certificate: Optional[EquivalenceCertificate] = None,
) -> None:
    doc = {
        "model": model.name,
        "design_interval": list(model.design_interval),
        "criterion": _criterion_dict(criterion),
        "design": design.to_dict(),
    }
    if certificate is not None:
        doc["certificate"] = certificate.to_dict()
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_artifact(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _model_from_doc(doc: dict) -> Model:
    model = get_model(doc["model"])
    interval = tuple(doc.get("design_interval", model.design_interval))
    if model.name == "logistic" and interval != model.design_interval:
        model = make_logistic(interval[1])
    return model


def recertify(
    model: Model, design: DesignMeasure, criterion: dict, tolerance: float = 1e-6
) -> EquivalenceCertificate:
    """Recompute the equivalence audit appropriate to the stored criterion."""
    kind = criterion["kind"]
    if kind == "maximin":
        grid = BetaGrid(
            criterion["beta_min"],
            criterion["beta_max"],
            criterion.get("count", 400),
            criterion.get("spacing", "log"),
        )
        betas = grid.values
        cert, _, _ = _certify(model, design, betas, _local_offsets(model, betas))
        return cert
    ax = audit_grid(model.design_interval, design)
    if kind == "local":
        d = directional_derivative(design, model, float(criterion["beta"]), ax)
    elif kind == "bayes":
        p = criterion["prior"]
        prior = ParameterPrior(p["kind"], tuple(p["params"]),
                               p.get("quadrature_nodes", 200))
        d = averaged_directional_derivative(design, model, prior, ax)
    else:
        raise ValueError(f"unknown criterion kind {kind!r}")
    worst = int(np.argmax(d))
    return EquivalenceCertificate(
        max_directional_derivative=float(d[worst]),
        bound=float(model.m),
        tolerance=tolerance,
        worst_point=float(ax[worst]),
        passed=bool(d[worst] <= model.m * (1.0 + tolerance)),
    )


def verify_artifact(path: str) -> EquivalenceCertificate:
    doc = read_artifact(path)
    model = _model_from_doc(doc)
    design = DesignMeasure.from_dict(doc["design"])
    return recertify(model, design, doc["criterion"])


def write_xy(path: str, xs, ys) -> None:
    """Plain two-column text, one sample per line."""
    with open(path, "w") as fh:
        for x, y in zip(xs, ys):
            fh.write(f"{x!r} {y!r}\n")


def write_plot_data(
    prefix: str, model: Model, design: DesignMeasure, criterion: dict,
    count: int = 512,
) -> list:
    """Emit the derivative curve x -> d(x, xi) and, for parametrized
    criteria, the efficiency curve beta -> eff(xi, beta).  Returns the
    written paths."""
    from .local import local_logdet
    from .design import information_matrix, log_det

    kind = criterion["kind"]
    lo, hi = model.design_interval
    xs = np.linspace(lo, hi, count)
    paths = []
    if kind == "local":
        d = directional_derivative(design, model, float(criterion["beta"]), xs)
        betas = None
    elif kind == "bayes":
        p = criterion["prior"]
        prior = ParameterPrior(p["kind"], tuple(p["params"]),
                               p.get("quadrature_nodes", 200))
        d = averaged_directional_derivative(design, model, prior, xs)
        b_lo, b_hi = prior.support_interval
        betas = np.linspace(max(b_lo, 1e-6), b_hi, count)
    else:
        grid = BetaGrid(criterion["beta_min"], criterion["beta_max"],
                        criterion.get("count", 400),
                        criterion.get("spacing", "log"))
        betas = grid.values
        cert, _, _ = _certify(model, design, betas,
                              _local_offsets(model, betas))
        mu = cert.least_favorable_weights or {}
        d = np.zeros_like(xs)
        for b, q in mu.items():
            d += q * directional_derivative(design, model, float(b), xs)
    path = f"{prefix}.dirderiv.txt"
    write_xy(path, xs, d)
    paths.append(path)
    if betas is not None:
        eff = np.array([
            math.exp(log_det(information_matrix(design, model, float(b)))
                     - local_logdet(model, float(b)))
            if np.isfinite(log_det(information_matrix(design, model, float(b))))
            else 0.0
            for b in betas
        ])
        path = f"{prefix}.efficiency.txt"
        write_xy(path, betas, eff)
        paths.append(path)
    return paths
