"""First-name gender dictionary lookup (male score in [0, 1])."""

from __future__ import annotations

import csv


def load_gender_dictionary(path) -> dict[str, float]:
    """Read a ``name,male_score`` CSV into a case-folded lookup table."""
    table: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["name", "male_score"]:
            raise ValueError(f"{path}: bad header {header!r}, expected name,male_score")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            name, raw = row[0], row[1]
            score = float(raw)
            if not 0.0 <= score <= 1.0:
                raise ValueError(f"{path}:{line_no}: male_score {score} outside [0, 1]")
            table[name.strip().casefold()] = score
    return table


def perceived_gender(first_name: str, dictionary: dict[str, float]) -> float | None:
    """Male score of a first name by case-folded exact lookup."""
    return dictionary.get(first_name.strip().casefold())
