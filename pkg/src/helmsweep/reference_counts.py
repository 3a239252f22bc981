"""Published iteration counts for the layered-medium experiments.

Each row lists, per partition count, six entries: Richardson with Robin,
PML width 5 and PML width 10 outer conditions, then GMRES with the same
three.  ``None`` marks a run that did not converge within 100 iterations.
"""

from __future__ import annotations

ALPHAS = (0.0, 0.001, 0.005, 0.01, 0.05, 0.1, 1.0)
OUTERS = ("robin", "pml:5", "pml:10")
DRIVERS = ("richardson", "gmres")

# table id -> (method, setting, medium copied by identity-extension complements)
TABLE_SETUP = {
    1: ("lu-sweep", "guide", "outside"),
    2: ("dosm", "guide", "inside"),
    3: ("lu-sweep", "open", "outside"),
    4: ("dosm", "open", "inside"),
}

_COARSE = {
    1: """
        1 1 1 1 1 1 | 1 1 1 1 1 1 | 1 1 1 1 1 1
        4 3 3 3 3 3 | 5 3 3 4 3 3 | 6 3 3 4 3 3
        6 4 4 5 3 4 | 12 5 5 7 4 4 | 13 5 4 8 5 5
        8 5 4 5 4 4 | 16 6 5 8 5 5 | 38 7 7 11 6 6
        - 8 6 8 6 5 | - 17 12 16 7 8 | - 12 26 22 9 10
        32 10 11 10 7 6 | - - - 18 11 11 | - - - 26 14 15
        - - - 20 19 19 | - - - 45 38 38 | - - - 86 63 62
    """,
    2: """
        1 1 1 1 1 1 | 1 1 1 1 1 1 | 1 1 1 1 1 1
        3 2 2 3 2 2 | 3 2 2 3 2 2 | 3 2 2 3 2 2
        5 3 3 4 3 3 | 5 3 3 4 3 3 | 5 3 3 4 3 3
        7 4 3 4 3 3 | 7 4 4 5 3 3 | 7 4 4 5 4 3
        42 12 7 7 5 4 | - 16 12 9 5 5 | - 21 17 13 7 6
        - - - 9 7 6 | - - - 14 12 11 | - - - 20 17 17
        - - - 26 23 24 | - - - 48 47 47 | - - - 59 68 65
    """,
    3: """
        1 1 1 1 1 1 | 1 1 1 1 1 1 | 1 1 1 1 1 1
        2 2 2 2 2 2 | 3 3 2 3 2 2 | 3 3 3 3 3 3
        3 3 3 3 3 3 | 4 3 3 4 3 3 | 4 3 3 4 3 3
        3 3 3 3 3 3 | 4 4 3 4 3 3 | 5 4 4 5 4 3
        5 5 5 5 4 4 | 7 5 5 6 5 5 | 8 6 5 8 5 5
        7 6 5 6 5 5 | 9 6 6 8 6 6 | 12 7 7 10 7 6
        - 31 27 15 12 12 | - - - 32 25 22 | - - - 58 34 29
    """,
    4: """
        1 1 1 1 1 1 | 1 1 1 1 1 1 | 1 1 1 1 1 1
        3 2 2 2 2 2 | 2 2 2 2 2 2 | 2 2 2 2 2 2
        3 3 3 3 3 3 | 3 3 3 3 3 3 | 3 3 3 3 3 3
        3 3 3 3 3 3 | 3 3 3 3 3 3 | 3 3 3 3 3 3
        5 4 4 4 4 4 | 5 5 4 4 4 4 | 5 5 4 4 4 4
        6 5 5 5 5 4 | 6 6 5 5 5 5 | 7 6 5 6 5 5
        - - - 23 33 37 | - - - 35 44 44 | - - - 41 43 48
    """,
}

_FINE = {
    1: """
        1 1 1 1 1 1
        4 2 3 3 3 3
        7 3 3 5 3 3
        11 4 4 6 4 4
        - - - 13 7 6
        - 22 31 14 9 9
        - - - 36 21 19
    """,
    2: """
        1 1 1 1 1 1
        3 2 3 3 2 2
        5 3 4 4 3 3
        8 4 6 5 4 4
        - - - 10 7 6
        - - - 13 11 9
        - - - 43 40 38
    """,
    3: """
        1 1 1 1 1 1
        3 2 2 3 2 2
        3 3 3 3 3 3
        4 3 3 4 3 3
        6 4 4 6 4 4
        8 5 5 7 5 5
        - - 52 23 13 12
    """,
    4: """
        1 1 1 1 1 1
        3 2 2 2 2 2
        3 3 3 3 3 3
        4 3 3 3 3 3
        5 5 5 5 4 4
        7 7 6 6 6 5
        - - - 32 43 45
    """,
}


def _parse(text: str, ps: tuple) -> dict:
    counts = {}
    rows = [row for row in text.strip().splitlines() if row.strip()]
    for alpha, row in zip(ALPHAS, rows, strict=True):
        for p, group in zip(ps, row.split("|"), strict=True):
            cells = group.split()
            for index, cell in enumerate(cells):
                driver = DRIVERS[index // 3]
                outer = OUTERS[index % 3]
                counts[(alpha, p, outer, driver)] = None if cell == "-" else int(cell)
    return counts


def reference_counts(table_id: int, inverse_h: int) -> dict:
    """``(alpha, p, outer, driver) -> iterations or None`` for one table half."""
    if table_id not in TABLE_SETUP:
        raise KeyError(f"no table {table_id}")
    if inverse_h == 64:
        return _parse(_COARSE[table_id], (4, 8, 16))
    if inverse_h == 128:
        return _parse(_FINE[table_id], (4,))
    raise KeyError(f"no table half for h=1/{inverse_h}")
