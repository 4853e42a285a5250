"""Dataset JSON files and CSV/JSON report rendering."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema

from isocal.model import Author, Dataset, Decision, Paper, Ranking, Review, Role

DATASET_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["papers", "authors", "authorship"],
    "properties": {
        "papers": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id", "reviews"],
                "properties": {
                    "id": {"type": "string"},
                    "reviews": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "additionalProperties": False,
                            "required": ["score"],
                            "properties": {
                                "score": {"type": "integer"},
                                "confidence": {"type": ["integer", "null"]},
                            },
                        },
                    },
                    "decision": {"enum": [d.value for d in Decision] + [None]},
                    "ground_truth": {"type": ["number", "null"]},
                },
            },
        },
        "authors": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["id"],
                "properties": {
                    "id": {"type": "string"},
                    "role": {"enum": [r.value for r in Role]},
                    "ranking": {
                        "type": ["array", "null"],
                        "items": {"type": "array", "items": {"type": "string"}},
                    },
                },
            },
        },
        "authorship": {
            "type": "array",
            "items": {
                "type": "array",
                "items": {"type": "string"},
                "minItems": 2,
                "maxItems": 2,
            },
        },
    },
}


class DatasetFormatError(ValueError):
    pass


def dataset_from_dict(doc: Mapping[str, Any]) -> Dataset:
    try:
        jsonschema.validate(doc, DATASET_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise DatasetFormatError(f"{where}: {e.message}") from None
    papers = [
        Paper(
            p["id"],
            tuple(Review(r["score"], r.get("confidence")) for r in p["reviews"]),
            Decision(p["decision"]) if p.get("decision") is not None else None,
            float(p["ground_truth"]) if p.get("ground_truth") is not None else None,
        )
        for p in doc["papers"]
    ]
    authors = [
        Author(
            a["id"],
            Role(a.get("role", Role.NONE.value)),
            Ranking.from_groups(a["ranking"]) if a.get("ranking") is not None else None,
        )
        for a in doc["authors"]
    ]
    return Dataset.build(papers, authors, (tuple(pair) for pair in doc["authorship"]))


def dataset_to_dict(d: Dataset) -> dict[str, Any]:
    papers = []
    for p in d.papers:
        entry: dict[str, Any] = {
            "id": p.id,
            "reviews": [
                {"score": r.score} if r.confidence is None else {"score": r.score, "confidence": r.confidence}
                for r in p.reviews
            ],
        }
        if p.decision is not None:
            entry["decision"] = p.decision.value
        if p.ground_truth is not None:
            entry["ground_truth"] = p.ground_truth
        papers.append(entry)
    authors = []
    for a in d.authors:
        entry = {"id": a.id, "role": a.role.value}
        if a.ranking is not None:
            entry["ranking"] = a.ranking.to_lists()
        authors.append(entry)
    return {"papers": papers, "authors": authors, "authorship": [list(x) for x in sorted(d.authorship)]}


def load_dataset(path: str | os.PathLike) -> Dataset:
    """Raises OSError / json.JSONDecodeError for unreadable files and
    DatasetFormatError for schema violations."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return dataset_from_dict(doc)


def dump_dataset(d: Dataset, path: str | os.PathLike) -> None:
    atomic_write(path, json.dumps(dataset_to_dict(d), indent=1) + "\n")


def atomic_write(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def render(x) -> str:
    """Text form of a report cell; reals keep 17 significant digits."""
    if x is None:
        return "NA"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return "NA" if math.isnan(x) else f"{x:.17g}"
    return str(x)


def json_value(x):
    if x is None:
        return None
    if isinstance(x, bool) or isinstance(x, int):
        return x
    if isinstance(x, float):
        return None if math.isnan(x) else float(f"{x:.17g}")
    return str(x)


def csv_text(fields: Sequence[str], rows: Iterable[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for row in rows:
        w.writerow([render(row.get(f)) for f in fields])
    return buf.getvalue()


def json_text(fields: Sequence[str], rows: Iterable[Mapping[str, Any]], meta: Mapping[str, Any] | None = None) -> str:
    doc = dict(meta or {})
    doc["fields"] = list(fields)
    doc["rows"] = [{f: json_value(row.get(f)) for f in fields} for row in rows]
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def write_table(base: str | os.PathLike, fields: Sequence[str], rows: Sequence[Mapping[str, Any]], meta=None) -> None:
    """Write ``base``.csv and its ``base``.json mirror."""
    base = str(base)
    atomic_write(base + ".csv", csv_text(fields, rows))
    atomic_write(base + ".json", json_text(fields, rows, meta))


SUMMARY_FIELDS = (
    "seed", "strategy", "target", "n",
    "mse", "mse_improvement_pct", "mse_p_value",
    "mae", "mae_improvement_pct", "mae_p_value",
    "mse_reduction", "ci95_low", "ci95_high", "ci99_low", "ci99_high",
)

PER_PAPER_FIELDS = (
    "seed", "strategy", "paper_id", "raw", "isotonic", "target",
    "raw_sq_error", "iso_sq_error", "raw_abs_error", "iso_abs_error",
)


def summary_rows(reports) -> list[dict[str, Any]]:
    """Rows shaped like the results tables: a raw-score row per seed followed
    by one row per strategy."""
    rows: list[dict[str, Any]] = []
    seen_raw = set()
    for r in reports:
        if r.seed not in seen_raw:
            seen_raw.add(r.seed)
            rows.append({
                "seed": r.seed, "strategy": "raw", "target": r.target_kind, "n": r.n,
                "mse": r.raw_mse, "mae": r.raw_mae,
            })
        lo95, hi95 = r.mse_ci95
        lo99, hi99 = r.mse_ci99
        rows.append({
            "seed": r.seed, "strategy": r.strategy, "target": r.target_kind, "n": r.n,
            "mse": r.iso_mse, "mse_improvement_pct": r.mse_improvement, "mse_p_value": r.mse_p_value,
            "mae": r.iso_mae, "mae_improvement_pct": r.mae_improvement, "mae_p_value": r.mae_p_value,
            "mse_reduction": r.mse_reduction,
            "ci95_low": lo95, "ci95_high": hi95, "ci99_low": lo99, "ci99_high": hi99,
        })
    return rows


def per_paper_rows(report) -> list[dict[str, Any]]:
    return [
        {
            "seed": report.seed, "strategy": report.strategy, "paper_id": pid,
            "raw": float(report.raw[i]), "isotonic": float(report.iso[i]), "target": float(report.target[i]),
            "raw_sq_error": float(report.raw_sq[i]), "iso_sq_error": float(report.iso_sq[i]),
            "raw_abs_error": float(report.raw_abs[i]), "iso_abs_error": float(report.iso_abs[i]),
        }
        for i, pid in enumerate(report.ids)
    ]


PLAN_FIELDS = ("paper_id", "participating", "initial", "emergency", "quantile")


def plan_rows(plan) -> list[dict[str, Any]]:
    return [
        {
            "paper_id": e.paper_id, "participating": e.participating,
            "initial": e.initial_reviewers, "emergency": e.emergency_reviewers, "quantile": e.quantile,
        }
        for e in plan.entries
    ]
