"""Small balanced synthetic economies for tests, demos and smoke runs."""

from __future__ import annotations

import numpy as np

from .ingest import IOTable


def toy_table(
    n_countries: int = 3,
    n_sectors: int = 2,
    blocks: int = 1,
    block_ratio: float = 10.0,
    domestic_ratio: float = 3.0,
    seed: int = 0,
    year: int = 2000,
) -> IOTable:
    """A balanced table whose countries trade mostly inside ``blocks`` groups.

    Countries are split into consecutive groups; flows between countries of
    the same group are ``block_ratio`` times heavier on average, and domestic
    flows are ``domestic_ratio`` times heavier again. Value added is whatever
    makes each column balance, which stays positive because intermediate use
    is kept below half of total output.
    """
    rng = np.random.default_rng(seed)
    countries = tuple(f"C{i:02d}" for i in range(n_countries))
    sectors = tuple(chr(ord("A") + s) for s in range(n_sectors))
    n = n_countries * n_sectors
    group = np.arange(n_countries) * blocks // n_countries
    country_of = np.repeat(np.arange(n_countries), n_sectors)

    same_country = country_of[:, None] == country_of[None, :]
    same_block = group[country_of][:, None] == group[country_of][None, :]
    scale = np.where(same_country, block_ratio * domestic_ratio, np.where(same_block, block_ratio, 1.0))
    Z = scale * rng.uniform(0.5, 1.5, (n, n))
    fd_scale = np.where(
        country_of[:, None] == np.arange(n_countries)[None, :], block_ratio * domestic_ratio,
        np.where(group[country_of][:, None] == group[None, :], block_ratio, 1.0),
    )
    FD = fd_scale * rng.uniform(0.5, 1.5, (n, n_countries))
    T = Z.sum(axis=1) + FD.sum(axis=1)
    # keep intermediate use of each column below half of its output
    col = Z.sum(axis=0)
    shrink = np.minimum(1.0, 0.5 * T / col)
    Z = Z * shrink[None, :]
    T_new = Z.sum(axis=1) + FD.sum(axis=1)
    FD = FD + (T - T_new)[:, None] * FD / FD.sum(axis=1, keepdims=True)
    T = Z.sum(axis=1) + FD.sum(axis=1)
    VA = T - Z.sum(axis=0)
    return IOTable(countries, sectors, Z, FD, VA, T, year)
