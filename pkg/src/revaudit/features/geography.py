"""Author geography from email domains via longest-suffix TLD lookup."""

from __future__ import annotations

import csv
import functools
from importlib import resources

from revaudit.corpus.model import Author

NORTH_AMERICA = frozenset({"US", "CA", "MX"})


def _read_suffix_table(handle) -> dict[str, str]:
    reader = csv.reader(handle)
    header = next(reader, None)
    if header != ["suffix", "country"]:
        raise ValueError(f"bad suffix table header {header!r}")
    table = {}
    for row in reader:
        if not row:
            continue
        suffix, country = row[0].strip().casefold(), row[1].strip().upper()
        table[suffix] = country
    return table


@functools.lru_cache(maxsize=1)
def load_tld_table() -> dict[str, str]:
    """The bundled country-code suffix table (plus edu/gov/mil -> US)."""
    ref = resources.files("revaudit").joinpath("data/tld_countries.csv")
    with ref.open("r", encoding="utf-8") as handle:
        return _read_suffix_table(handle)


def load_overrides(path) -> dict[str, str]:
    """Extra suffix -> country rows, e.g. for known institutional domains."""
    with open(path, encoding="utf-8") as handle:
        return _read_suffix_table(handle)


def country_for_domain(domain: str, table=None, overrides=None) -> str | None:
    """Country for a domain by longest matching suffix, or None.

    Override entries win over the bundled table at equal suffix length, so
    e.g. ``deepmind.com`` can be pinned even though ``com`` is unmapped.
    """
    if table is None:
        table = load_tld_table()
    parts = domain.strip().casefold().strip(".").split(".")
    if parts == [""]:
        return None
    for start in range(len(parts)):
        suffix = ".".join(parts[start:])
        if overrides and suffix in overrides:
            return overrides[suffix]
        if suffix in table:
            return table[suffix]
    return None


def geography_of_author(author: Author, year: int, table=None, overrides=None) -> str | None:
    """Country of the author's email domain for the given year.

    The domain recorded for that exact year wins; otherwise the most
    recently recorded domain is used.  Unresolvable domains yield None.
    """
    domain = author.email_domains.get(year)
    if domain is None:
        if not author.email_domains:
            return None
        domain = author.email_domains[max(author.email_domains)]
    return country_for_domain(domain, table=table, overrides=overrides)
