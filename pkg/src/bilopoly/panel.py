"""Transaction ingestion: normalize, validate, and aggregate customs-style rows.

Raw rows (one per shipment line) are aggregated into importer x exporter x
product x year cells. Money is held as integer cents so that total value is
conserved exactly and results do not depend on record order; physical
quantities are held as Decimal for the same reason. A cell's quantity is
defined only when every merged row carried a quantity and all units agree.
"""

from __future__ import annotations

import csv
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation, ROUND_HALF_UP
from pathlib import Path

from .errors import ConfigError
from .util import write_json

# Trailing legal-form tokens stripped from exporter names (applied repeatedly).
LEGAL_SUFFIXES = frozenset({
    "SA", "SAS", "LTDA", "LTD", "LLC", "INC", "CORP", "CO", "CIA",
    "SRL", "GMBH", "AG", "NV", "BV", "PLC", "EIRL", "SL",
})

CSV_COLUMNS = ["year", "importer_id", "exporter_name", "origin_country",
               "hs10", "value_usd", "quantity", "unit"]
REQUIRED_COLUMNS = [c for c in CSV_COLUMNS if c != "origin_country"]

_PRODUCT_RE = re.compile(r"^[A-Z0-9]{10}$")
_CENT = Decimal("0.01")


def normalize_exporter(raw_name: str) -> str:
    """Deterministic canonical key for a raw exporter name.

    Case-folds, strips accents, turns punctuation into spaces, collapses
    whitespace and trims trailing legal-form tokens. Idempotent. Raises
    ValueError when nothing is left.
    """
    s = unicodedata.normalize("NFKD", str(raw_name))
    s = "".join(ch for ch in s if not unicodedata.combining(ch))
    s = s.upper()
    # periods and apostrophes glue abbreviations (S.A. -> SA); everything
    # else non-alphanumeric separates tokens
    s = s.replace(".", "").replace("'", "")
    s = "".join(ch if ch.isalnum() else " " for ch in s)
    tokens = s.split()
    while len(tokens) > 1 and tokens[-1] in LEGAL_SUFFIXES:
        tokens.pop()
    if len(tokens) == 1 and tokens[0] in LEGAL_SUFFIXES:
        tokens = []
    if not tokens:
        raise ValueError(f"exporter name empty after normalization: {raw_name!r}")
    return " ".join(tokens)


def normalize_product(raw: str) -> str | None:
    """Uppercase 10-character alphanumeric code, or None when malformed."""
    s = str(raw).strip().upper().replace(".", "").replace("-", "").replace(" ", "")
    return s if _PRODUCT_RE.match(s) else None


@dataclass(frozen=True)
class TransactionRecord:
    """One validated customs line."""

    year: int
    importer_id: str
    exporter_name: str
    product: str
    value: Decimal          # USD
    quantity: Decimal | None
    unit: str | None
    origin: str | None = None


class RowError(ValueError):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def parse_row(row) -> TransactionRecord:
    """Validate a raw mapping into a TransactionRecord; RowError on failure."""
    if isinstance(row, TransactionRecord):
        return row
    try:
        year = int(str(row["year"]).strip())
    except (KeyError, ValueError):
        raise RowError("bad_year")
    importer = str(row.get("importer_id", "")).strip()
    if not importer:
        raise RowError("empty_importer")
    exporter = str(row.get("exporter_name", "")).strip()
    if not exporter:
        raise RowError("empty_exporter_name")
    product = normalize_product(row.get("hs10", ""))
    if product is None:
        raise RowError("bad_product")
    try:
        value = Decimal(str(row["value_usd"]).strip())
    except (KeyError, InvalidOperation):
        raise RowError("bad_value")
    if not value.is_finite():
        raise RowError("bad_value")
    if value < 0:
        raise RowError("negative_value")
    qraw = str(row.get("quantity", "") or "").strip()
    quantity = None
    if qraw:
        try:
            quantity = Decimal(qraw)
        except InvalidOperation:
            raise RowError("bad_quantity")
        if not quantity.is_finite():
            raise RowError("bad_quantity")
        if quantity < 0:
            raise RowError("negative_quantity")
    unit = str(row.get("unit", "") or "").strip().upper() or None
    origin = str(row.get("origin_country", "") or "").strip().upper() or None
    return TransactionRecord(year, importer, exporter, product, value,
                             quantity, unit, origin)


@dataclass
class Cell:
    """Aggregated importer x exporter x product x year flow."""

    value_cents: int = 0
    quantity: Decimal | None = None
    unit: str | None = None
    origin: str | None = None
    n_rows: int = 0
    quantity_defined: bool = True
    origin_defined: bool = True
    _qty_conflict_counted: bool = False

    @property
    def value_usd(self) -> Decimal:
        return Decimal(self.value_cents) * _CENT

    @property
    def unit_price(self) -> float | None:
        """USD per unit; defined only for cells with positive quantity."""
        if not self.quantity_defined or self.quantity is None or self.quantity <= 0:
            return None
        return float(self.value_usd / self.quantity)

    def data_tuple(self):
        q = self.quantity if self.quantity_defined else None
        u = self.unit if self.quantity_defined else None
        return (self.value_cents, q, u)


@dataclass
class TradePanel:
    """Deduplicated pair x product x year cells plus ingest bookkeeping."""

    cells: dict = field(default_factory=dict)  # (year, importer, exporter, product) -> Cell
    rejects: Counter = field(default_factory=Counter)
    counters: Counter = field(default_factory=Counter)
    name_map: dict = field(default_factory=dict)  # raw exporter name -> exporter_id
    has_origin: bool = False

    def sorted_keys(self):
        """Canonical emission order: year, product, importer, exporter."""
        return sorted(self.cells, key=lambda k: (k[0], k[3], k[1], k[2]))

    def years(self):
        return sorted({k[0] for k in self.cells})

    def total_value_cents(self) -> int:
        return sum(c.value_cents for c in self.cells.values())

    def same_cells(self, other: "TradePanel") -> bool:
        if set(self.cells) != set(other.cells):
            return False
        return all(self.cells[k].data_tuple() == other.cells[k].data_tuple()
                   for k in self.cells)


def ingest(records) -> TradePanel:
    """Aggregate a stream of raw rows / TransactionRecords into a TradePanel.

    Malformed rows are skipped and counted by reason; duplicate keys merge
    additively. Mixed units or missing quantities make the cell's quantity
    undefined (value is kept).
    """
    panel = TradePanel()
    for raw in records:
        try:
            rec = parse_row(raw)
        except RowError as err:
            panel.rejects[err.reason] += 1
            continue
        try:
            exporter_id = normalize_exporter(rec.exporter_name)
        except ValueError:
            panel.rejects["empty_exporter_name"] += 1
            continue
        panel.name_map.setdefault(rec.exporter_name, exporter_id)
        if rec.origin is not None:
            panel.has_origin = True

        cents = int((rec.value * 100).to_integral_value(rounding=ROUND_HALF_UP))
        key = (rec.year, rec.importer_id, exporter_id, rec.product)
        cell = panel.cells.get(key)
        if cell is None:
            cell = Cell(origin=rec.origin)
            panel.cells[key] = cell
            cell.quantity, cell.unit = rec.quantity, rec.unit
            cell.quantity_defined = rec.quantity is not None
            cell.value_cents = cents
            cell.n_rows = 1
            continue

        cell.value_cents += cents
        cell.n_rows += 1
        if cell.quantity_defined:
            if rec.quantity is None:
                cell.quantity, cell.unit, cell.quantity_defined = None, None, False
                cell._qty_conflict_counted = True
                panel.counters["partial_quantity_cells"] += 1
            elif cell.unit != rec.unit:
                cell.quantity, cell.unit, cell.quantity_defined = None, None, False
                cell._qty_conflict_counted = True
                panel.counters["mixed_unit_cells"] += 1
            else:
                cell.quantity += rec.quantity
        elif rec.quantity is not None and not cell._qty_conflict_counted:
            # earlier rows lacked a quantity, this one has one
            cell._qty_conflict_counted = True
            panel.counters["partial_quantity_cells"] += 1

        if cell.origin_defined and cell.origin != rec.origin:
            cell.origin, cell.origin_defined = None, False
            panel.counters["origin_conflict_cells"] += 1

    for cell in panel.cells.values():
        if cell.quantity_defined and cell.quantity is not None \
                and cell.quantity > 0 and cell.value_cents == 0:
            panel.counters["zero_price_cells"] += 1
    return panel


def read_transactions_csv(path):
    """Yield raw row mappings from a transactions CSV, checking the header."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise ConfigError(f"{path}: missing required columns {missing}")
        yield from reader


def ingest_csv(path) -> TradePanel:
    return ingest(read_transactions_csv(path))


def write_panel_csv(panel: TradePanel, path) -> None:
    """Canonical, re-ingestable panel CSV (sorted; exporter column holds ids)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS + ["n_raw_rows"])
        for key in panel.sorted_keys():
            year, importer, exporter, product = key
            cell = panel.cells[key]
            qty = str(cell.quantity) if cell.quantity_defined and cell.quantity is not None else ""
            unit = cell.unit if cell.quantity_defined and cell.unit else ""
            writer.writerow([
                year, importer, exporter, cell.origin or "", product,
                f"{cell.value_usd:.2f}", qty, unit, cell.n_rows,
            ])


def write_exporter_map_csv(panel: TradePanel, path) -> None:
    """Audit trail of raw exporter names to canonical ids."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["raw_name", "exporter_id"])
        for raw, eid in sorted(panel.name_map.items(), key=lambda kv: (kv[1], kv[0])):
            writer.writerow([raw, eid])


@dataclass(frozen=True)
class YearCoverage:
    year: int
    value_cents: int
    transactions: int
    pairs: int
    importers: int
    exporters: int


@dataclass(frozen=True)
class CoverageSummary:
    rows: tuple

    def as_dict(self):
        return {
            "years": [{
                "year": r.year,
                "import_value_usd": float(Decimal(r.value_cents) * _CENT),
                "import_value_cents": r.value_cents,
                "transactions": r.transactions,
                "pairs": r.pairs,
                "importers": r.importers,
                "exporters": r.exporters,
            } for r in self.rows],
        }


def coverage_summary(panel: TradePanel) -> CoverageSummary:
    """Per-year totals: value, raw transactions, pairs, distinct firms."""
    per_year = {}
    for (year, importer, exporter, _product), cell in panel.cells.items():
        agg = per_year.setdefault(year, {"cents": 0, "tx": 0, "pairs": set(),
                                         "imp": set(), "exp": set()})
        agg["cents"] += cell.value_cents
        agg["tx"] += cell.n_rows
        agg["pairs"].add((importer, exporter))
        agg["imp"].add(importer)
        agg["exp"].add(exporter)
    rows = tuple(
        YearCoverage(y, a["cents"], a["tx"], len(a["pairs"]), len(a["imp"]), len(a["exp"]))
        for y, a in sorted(per_year.items())
    )
    return CoverageSummary(rows)


def write_coverage_json(panel: TradePanel, path) -> None:
    summary = coverage_summary(panel).as_dict()
    summary["rejected_rows"] = dict(sorted(panel.rejects.items()))
    summary["cell_counters"] = dict(sorted(panel.counters.items()))
    write_json(summary, path)


def filter_partner(panel: TradePanel, country_tag: str) -> TradePanel:
    """Restrict the panel to cells whose exporter origin matches the tag."""
    if not panel.has_origin:
        raise ConfigError("origin filter requested but the panel has no origin column")
    tag = country_tag.strip().upper()
    out = TradePanel(rejects=Counter(panel.rejects), counters=Counter(panel.counters),
                     name_map=dict(panel.name_map), has_origin=True)
    for key, cell in panel.cells.items():
        if cell.origin == tag:
            out.cells[key] = cell
    return out
