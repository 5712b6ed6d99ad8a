#!/usr/bin/env python3
"""Generate the bundled 10,000-row transactions fixture and its manifest.

The manifest records ground truth computed *here*, independently of the
package: per-year value totals are exact Decimal sums over the accepted rows,
and firm/pair counts come from the canonical identities each messy exporter
variant was generated from (not from running the package normalizer). Tests
then require the ingest pipeline to reproduce these numbers exactly.

Run from the repo root:  python tools/make_fixture.py
"""

import csv
import json
import random
from collections import Counter
from decimal import Decimal
from pathlib import Path

OUT_DIR = Path(__file__).resolve().parent.parent / "tests" / "data"
N_ROWS = 10_000
YEARS = [2011, 2012, 2013, 2014, 2015]

# canonical exporter cores: already normalization-fixed (ASCII upper, no
# punctuation, no trailing legal suffix)
WORDS1 = ["ANDES", "PACIFIC", "GLOBAL", "NORTE", "DELTA", "SIGMA", "ORINOCO",
          "CARIBE", "EASTERN", "BOREAL", "AUSTRAL", "MAGDALENA"]
WORDS2 = ["METALS", "TOOLS", "CHEMICALS", "TEXTILES", "PLASTICS", "MACHINERY",
          "FOODS", "PAPER", "ELECTRONICS", "GLASS"]

SUFFIX_VARIANTS = ["S.A.", "SA", "Ltda.", "LTDA", "Inc.", "INC", "LLC",
                   "Corp.", "CORP", "S.A.S.", ""]

PRODUCTS = {  # hs10 -> unit
    "8471300000": "U",
    "8471500000": "U",
    "2710190000": "L",
    "2710129000": "L",
    "5208110000": "KG",
    "5208210000": "KG",
    "3901100000": "KG",
    "8708290000": "KG",
}
ORIGINS = ["US", "CN", "DE", "BR", "MX"]


def accentize(word: str, rng: random.Random) -> str:
    table = {"A": "Á", "E": "É", "I": "Í", "O": "Ó", "U": "Ú", "N": "Ñ"}
    chars = list(word)
    idx = [i for i, ch in enumerate(chars) if ch in table]
    if idx and rng.random() < 0.5:
        i = rng.choice(idx)
        chars[i] = table[chars[i]]
    return "".join(chars)


def messy_variant(canonical: str, rng: random.Random) -> str:
    words = [accentize(w, rng) for w in canonical.split()]
    if rng.random() < 0.4:
        words = [w.capitalize() if rng.random() < 0.5 else w.lower() for w in words]
    sep = rng.choice([" ", "  ", " , ", ", "])
    name = sep.join(words)
    suffix = rng.choice(SUFFIX_VARIANTS)
    if suffix:
        name = name + rng.choice([" ", ", ", " "]) + suffix
    if rng.random() < 0.1:
        name = " " + name + " "
    return name


def main() -> None:
    rng = random.Random(20110815)
    exporters = sorted({f"{a} {b}" for a in WORDS1 for b in WORDS2})
    rng.shuffle(exporters)
    exporters = exporters[:60]
    exporter_origin = {e: rng.choice(ORIGINS) for e in exporters}
    importers = [f"CO9{rng.randrange(10**8):08d}" for _ in range(40)]
    products = list(PRODUCTS)

    rows = []
    truth_year = {}
    rejects = Counter()

    def year_slot(y):
        return truth_year.setdefault(y, {
            "cents": 0, "tx": 0, "pairs": set(), "imp": set(), "exp": set(),
        })

    n_invalid_plan = [("negative_value", 12), ("bad_product", 8),
                      ("empty_exporter_name", 6), ("bad_year", 5),
                      ("negative_quantity", 4)]
    n_invalid = sum(n for _, n in n_invalid_plan)

    for _ in range(N_ROWS - n_invalid):
        year = rng.choice(YEARS)
        exporter = rng.choice(exporters)
        importer = rng.choice(importers)
        product = rng.choice(products)
        value = Decimal(rng.randrange(100, 5_000_000)) / 100   # 1.00 .. 50k USD
        quantity = Decimal(rng.randrange(1, 500_000)) / 100
        unit = PRODUCTS[product]
        r = rng.random()
        if r < 0.01:
            quantity_str, unit_out = "", ""             # missing quantity
        elif r < 0.02:
            quantity_str, unit_out = str(quantity), "PAL"  # odd unit -> mixed cells
        elif r < 0.025:
            value = Decimal(0)                          # zero-price row
            quantity_str, unit_out = str(quantity), unit
        else:
            quantity_str, unit_out = str(quantity), unit
        rows.append([year, importer, messy_variant(exporter, rng),
                     exporter_origin[exporter], product, f"{value:.2f}",
                     quantity_str, unit_out])
        slot = year_slot(year)
        slot["cents"] += int(value * 100)
        slot["tx"] += 1
        slot["pairs"].add((importer, exporter))
        slot["imp"].add(importer)
        slot["exp"].add(exporter)

    for reason, count in n_invalid_plan:
        for _ in range(count):
            year = rng.choice(YEARS)
            row = [year, rng.choice(importers), messy_variant(rng.choice(exporters), rng),
                   rng.choice(ORIGINS), rng.choice(products), "100.00", "5", "KG"]
            if reason == "negative_value":
                row[5] = "-50.00"
            elif reason == "bad_product":
                row[4] = "ABC"
            elif reason == "empty_exporter_name":
                row[2] = rng.choice(["S.A.", "LTDA", "..., Inc."])
            elif reason == "bad_year":
                row[0] = "20x1"
            elif reason == "negative_quantity":
                row[6] = "-3"
            rows.append(row)
            rejects[reason] += 1

    rng.shuffle(rows)

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    csv_path = OUT_DIR / "fixture_transactions.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "importer_id", "exporter_name", "origin_country",
                         "hs10", "value_usd", "quantity", "unit"])
        writer.writerows(rows)

    manifest = {
        "n_rows": len(rows),
        "n_accepted": len(rows) - n_invalid,
        "rejects": dict(sorted(rejects.items())),
        "years": [{
            "year": y,
            "value_cents": s["cents"],
            "transactions": s["tx"],
            "pairs": len(s["pairs"]),
            "importers": len(s["imp"]),
            "exporters": len(s["exp"]),
        } for y, s in sorted(truth_year.items())],
        "total_value_cents": sum(s["cents"] for s in truth_year.values()),
    }
    with open(OUT_DIR / "fixture_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {csv_path} ({len(rows)} rows) and manifest")


if __name__ == "__main__":
    main()
