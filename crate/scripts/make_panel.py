#!/usr/bin/env python3
"""Generate data/synthetic_panel.csv, the bundled demo panel.

Five daily price-like series over 99 trading days (2016-11-08 through
2017-02-15, with 2016-12-25 skipped): BP carries a fast tone, a slow tone,
and a trend; SPI shares part of BP's oscillation plus its own noise; gold,
silver, and WTI are seeded random walks. Values are plain float repr, which
round-trips bit-exactly, so the file is frozen: rerunning this script
reproduces it byte for byte.
"""

import datetime
import math
import random

N = 99
START = datetime.date(2016, 11, 8)
SKIP = {datetime.date(2016, 12, 25)}


def dates():
    out = []
    day = START
    while len(out) < N:
        if day not in SKIP:
            out.append(day)
        day += datetime.timedelta(days=1)
    return out


def main():
    rng = random.Random(42)
    rows = []
    bp_osc = []
    for t in range(N):
        fast = 25.0 * math.sin(2.0 * math.pi * 0.25 * t + 0.4)
        slow = 40.0 * math.sin(2.0 * math.pi * 0.03 * t + 1.1)
        bp_osc.append(fast + slow)
        bp = 730.0 + 1.8 * t + fast + slow + rng.gauss(0.0, 4.0)
        spi = 2130.0 + 0.55 * t + 0.28 * (fast + slow) + rng.gauss(0.0, 5.0)
        rows.append([spi, bp])

    gold, silver, wti = 1280.0, 18.4, 48.0
    for t in range(N):
        gold += rng.gauss(0.0, 6.0)
        silver += rng.gauss(0.0, 0.22)
        wti += rng.gauss(0.0, 1.1)
        rows[t].extend([gold, silver, wti])

    lines = ["date,SPI,BP,gold,silver,WTI"]
    for day, row in zip(dates(), rows):
        lines.append(day.isoformat() + "," + ",".join(repr(v) for v in row))
    with open("data/synthetic_panel.csv", "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
