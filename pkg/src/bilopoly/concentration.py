"""Bilateral shares and the four concentration families.

Shares are computed per product-year market: supplier expenditure shares
within each importer, quantity and revenue buyer shares within each exporter,
trade weights for both sides, and yearly product expenditure weights. On top
of those, two network-based concentration indices (trade-weighted averages of
within-firm HHIs) and the conventional industry-wide HHIs, plus their
import-share-weighted yearly aggregates.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .panel import TradePanel
from .util import fmt_float, write_json

SIDE_SUPPLIERS = "suppliers"
SIDE_BUYERS = "buyers"


@dataclass
class ProductYearShares:
    """Share arrays for one product-year market; one entry per cell.

    x and x_r are NaN for cells without defined quantities and for exporters
    whose quantity-based shares cannot be normalized; s is NaN for cells of
    zero-expenditure importers (their trade weight is zero anyway).
    """

    year: int
    product: str
    exp_ids: list
    imp_ids: list
    ie: np.ndarray
    je: np.ndarray
    value: np.ndarray
    quantity: np.ndarray
    s: np.ndarray
    x: np.ndarray
    x_r: np.ndarray
    iota: np.ndarray
    phi_i: np.ndarray
    phi_j: np.ndarray
    total_value: float
    excluded_exporters: list = field(default_factory=list)
    n_cells_excluded_from_x: int = 0

    @property
    def n_cells(self) -> int:
        return len(self.value)


@dataclass
class ShareTable:
    """All product-year share blocks plus yearly product weights alpha."""

    groups: dict            # (year, product) -> ProductYearShares
    alpha: dict             # (year, product) -> float
    counters: dict

    def years(self):
        return sorted({year for year, _ in self.groups})

    def products(self, year):
        return sorted(product for y, product in self.groups if y == year)


def compute_shares(panel: TradePanel) -> ShareTable:
    """Build the ShareTable from a panel; zero-value product-years skipped."""
    grouped = {}
    for key in panel.sorted_keys():
        year, importer, exporter, product = key
        cell = panel.cells[key]
        qty = float(cell.quantity) if cell.quantity_defined and cell.quantity is not None else np.nan
        grouped.setdefault((year, product), []).append(
            (exporter, importer, cell.value_cents, qty))

    groups, alpha = {}, {}
    counters = {"zero_value_product_years": 0, "zero_value_importers": 0,
                "cells_excluded_from_x": 0, "exporters_excluded_from_x": 0}
    year_totals = {}

    for (year, product), cells in sorted(grouped.items()):
        cells.sort(key=lambda c: (c[0], c[1]))
        total_cents = sum(c[2] for c in cells)
        if total_cents == 0:
            counters["zero_value_product_years"] += 1
            continue
        exp_ids = sorted({c[0] for c in cells})
        imp_ids = sorted({c[1] for c in cells})
        e_index = {e: k for k, e in enumerate(exp_ids)}
        i_index = {j: k for k, j in enumerate(imp_ids)}
        ie = np.array([e_index[c[0]] for c in cells], dtype=np.intp)
        je = np.array([i_index[c[1]] for c in cells], dtype=np.intp)
        value = np.array([c[2] for c in cells], dtype=float) / 100.0
        quantity = np.array([c[3] for c in cells], dtype=float)
        total = float(total_cents) / 100.0

        imp_value = np.bincount(je, weights=value, minlength=len(imp_ids))
        exp_value = np.bincount(ie, weights=value, minlength=len(exp_ids))
        phi_j = imp_value / total
        phi_i = exp_value / total
        iota = value / total

        s = np.full(len(cells), np.nan)
        ok_imp = imp_value[je] > 0
        s[ok_imp] = value[ok_imp] / imp_value[je][ok_imp]
        counters["zero_value_importers"] += int(np.sum(imp_value == 0))

        x = np.full(len(cells), np.nan)
        x_r = np.full(len(cells), np.nan)
        q_def = np.isfinite(quantity)
        excluded = []
        for k, e in enumerate(exp_ids):
            mine = ie == k
            defined = mine & q_def
            qtot = quantity[defined].sum()
            vtot = value[defined].sum()
            if not defined.any() or qtot <= 0 or vtot <= 0:
                excluded.append(e)
                continue
            x[defined] = quantity[defined] / qtot
            x_r[defined] = value[defined] / vtot
        n_excl = int(np.sum(~np.isfinite(x)))
        counters["cells_excluded_from_x"] += n_excl
        counters["exporters_excluded_from_x"] += len(excluded)

        groups[(year, product)] = ProductYearShares(
            year=year, product=product, exp_ids=exp_ids, imp_ids=imp_ids,
            ie=ie, je=je, value=value, quantity=quantity, s=s, x=x, x_r=x_r,
            iota=iota, phi_i=phi_i, phi_j=phi_j, total_value=total,
            excluded_exporters=excluded, n_cells_excluded_from_x=n_excl)
        year_totals[year] = year_totals.get(year, 0.0) + total

    for (year, product), g in groups.items():
        alpha[(year, product)] = g.total_value / year_totals[year]

    return ShareTable(groups=groups, alpha=alpha, counters=counters)


def hhi_suppliers_net(shares: ShareTable, year, product) -> float:
    """Importer-trade-weighted average of within-importer supplier HHIs."""
    g = shares.groups[(year, product)]
    ok = np.isfinite(g.s)
    return float(np.sum(g.phi_j[g.je[ok]] * g.s[ok] ** 2))


def hhi_buyers_net(shares: ShareTable, year, product) -> float | None:
    """Exporter-trade-weighted average of mixed revenue x quantity buyer HHIs.

    Exporters without usable quantities are dropped and the exporter weights
    renormalized; returns None when no exporter remains.
    """
    g = shares.groups[(year, product)]
    ok = np.isfinite(g.x) & np.isfinite(g.x_r)
    if not ok.any():
        return None
    included = np.unique(g.ie[ok])
    weight = g.phi_i[included].sum()
    if weight <= 0:
        return None
    return float(np.sum(g.phi_i[g.ie[ok]] * g.x_r[ok] * g.x[ok]) / weight)


def hhi_std(shares: ShareTable, year, product, side: str) -> float:
    """Conventional HHI over product-level trade shares of one side."""
    g = shares.groups[(year, product)]
    if side == SIDE_SUPPLIERS:
        return float(np.sum(g.phi_i ** 2))
    if side == SIDE_BUYERS:
        return float(np.sum(g.phi_j ** 2))
    raise ValueError(f"side must be '{SIDE_SUPPLIERS}' or '{SIDE_BUYERS}', got {side!r}")


@dataclass(frozen=True)
class ProductIndices:
    year: int
    product: str
    alpha: float
    hhi_suppliers_net: float
    hhi_buyers_net: float | None
    hhi_suppliers_std: float
    hhi_buyers_std: float
    buyers_excluded_exporters: int


@dataclass(frozen=True)
class YearAggregates:
    year: int
    hhi_suppliers_net: float
    hhi_buyers_net: float | None
    hhi_suppliers_std: float
    hhi_buyers_std: float
    buyers_net_alpha_coverage: float   # alpha mass with a defined buyer index


@dataclass(frozen=True)
class ConcentrationReport:
    products: tuple
    yearly: dict  # year -> YearAggregates


def aggregate_indices(products, shares: ShareTable) -> dict:
    """Import-share-weighted yearly aggregates of the four index families.

    Products with an undefined buyer-side network index are excluded from that
    family with the remaining alphas renormalized.
    """
    yearly = {}
    for year in shares.years():
        rows = [p for p in products if p.year == year]
        agg = {}
        for name in ("hhi_suppliers_net", "hhi_suppliers_std", "hhi_buyers_std"):
            agg[name] = float(sum(p.alpha * getattr(p, name) for p in rows))
        defined = [p for p in rows if p.hhi_buyers_net is not None]
        coverage = float(sum(p.alpha for p in defined))
        if coverage > 0:
            agg["hhi_buyers_net"] = float(
                sum(p.alpha * p.hhi_buyers_net for p in defined) / coverage)
        else:
            agg["hhi_buyers_net"] = None
        yearly[year] = YearAggregates(year=year, buyers_net_alpha_coverage=coverage, **agg)
    return yearly


def compute_concentration(shares: ShareTable) -> ConcentrationReport:
    """Product-level indices for every product-year plus yearly aggregates."""
    products = []
    for (year, product) in sorted(shares.groups):
        g = shares.groups[(year, product)]
        products.append(ProductIndices(
            year=year, product=product, alpha=shares.alpha[(year, product)],
            hhi_suppliers_net=hhi_suppliers_net(shares, year, product),
            hhi_buyers_net=hhi_buyers_net(shares, year, product),
            hhi_suppliers_std=hhi_std(shares, year, product, SIDE_SUPPLIERS),
            hhi_buyers_std=hhi_std(shares, year, product, SIDE_BUYERS),
            buyers_excluded_exporters=len(g.excluded_exporters)))
    yearly = aggregate_indices(products, shares)
    return ConcentrationReport(products=tuple(products), yearly=yearly)


def write_concentration_csv(report: ConcentrationReport, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "hs10", "hhi_suppliers_net", "hhi_buyers_net",
                         "hhi_suppliers_std", "hhi_buyers_std", "alpha"])
        for p in report.products:
            writer.writerow([p.year, p.product, fmt_float(p.hhi_suppliers_net),
                             fmt_float(p.hhi_buyers_net), fmt_float(p.hhi_suppliers_std),
                             fmt_float(p.hhi_buyers_std), fmt_float(p.alpha)])


def write_aggregate_csv(report: ConcentrationReport, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "hhi_suppliers_net", "hhi_buyers_net",
                         "hhi_suppliers_std", "hhi_buyers_std",
                         "buyers_net_alpha_coverage"])
        for year in sorted(report.yearly):
            a = report.yearly[year]
            writer.writerow([year, fmt_float(a.hhi_suppliers_net),
                             fmt_float(a.hhi_buyers_net), fmt_float(a.hhi_suppliers_std),
                             fmt_float(a.hhi_buyers_std),
                             fmt_float(a.buyers_net_alpha_coverage)])


def _stats(values) -> dict:
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if arr.size == 0:
        return {"n": 0}
    return {
        "n": int(arr.size),
        "mean": float(arr.mean()),
        "sd": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
        "p10": float(np.percentile(arr, 10)),
        "p50": float(np.percentile(arr, 50)),
        "p90": float(np.percentile(arr, 90)),
    }


def summary_statistics(shares: ShareTable, report: ConcentrationReport) -> dict:
    """Distributional summary across product-years: partner counts and HHIs."""
    n_exp, n_imp, per_imp, per_exp = [], [], [], []
    for key in sorted(shares.groups):
        g = shares.groups[key]
        n_exp.append(len(g.exp_ids))
        n_imp.append(len(g.imp_ids))
        per_imp.append(len(g.value) / len(g.imp_ids))
        per_exp.append(len(g.value) / len(g.exp_ids))
    return {
        "exporter_concentration": {
            "n_exporters_hs10": _stats(n_exp),
            "n_exporters_hs10_x_importer": _stats(per_imp),
            "hhi_suppliers_std": _stats([p.hhi_suppliers_std for p in report.products]),
            "hhi_suppliers_net": _stats([p.hhi_suppliers_net for p in report.products]),
        },
        "importer_concentration": {
            "n_importers_hs10": _stats(n_imp),
            "n_importers_hs10_x_exporter": _stats(per_exp),
            "hhi_buyers_std": _stats([p.hhi_buyers_std for p in report.products]),
            "hhi_buyers_net": _stats([p.hhi_buyers_net for p in report.products]),
        },
    }


def write_summary_json(shares: ShareTable, report: ConcentrationReport, path) -> None:
    write_json(summary_statistics(shares, report), path)


def write_shares_csv(shares: ShareTable, path) -> None:
    """Cell-level share dump (s, x, x_r, iota); x blank where undefined."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "hs10", "importer_id", "exporter_id",
                         "s", "x", "x_r", "iota"])
        for key in sorted(shares.groups):
            g = shares.groups[key]
            for c in range(g.n_cells):
                writer.writerow([
                    g.year, g.product, g.imp_ids[g.je[c]], g.exp_ids[g.ie[c]],
                    fmt_float(g.s[c]) if np.isfinite(g.s[c]) else "",
                    fmt_float(g.x[c]) if np.isfinite(g.x[c]) else "",
                    fmt_float(g.x_r[c]) if np.isfinite(g.x_r[c]) else "",
                    fmt_float(g.iota[c]),
                ])


def write_alpha_csv(shares: ShareTable, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["year", "hs10", "alpha"])
        for (year, product) in sorted(shares.alpha):
            writer.writerow([year, product, fmt_float(shares.alpha[(year, product)])])
