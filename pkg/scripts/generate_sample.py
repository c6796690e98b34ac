#!/usr/bin/env python3
"""Regenerate tests/fixtures/sample.xlsx.

Four sheets with 29 data rows (2..30): PXII, Clipper and Flash each hold
current/voltage columns with per-row product formulas and a per-row Ptotal;
Clipper rows 16 and 17 are entirely empty; Summary averages the three Ptotal
columns per row, squares the deviation from the overall mean, and keeps that
mean in a single labelled cell. Cached formula values are computed here so
the file opens with data visible.

The writer is deterministic, so the checked-in fixture is reproducible
byte-for-byte.
"""

from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sheetair.workbook import WorkbookModel, save_workbook

ROWS = range(2, 31)  # 29 data rows
CLIPPER_GAP = (16, 17)


def _col_values(base: float, step: float) -> dict[int, float]:
    return {row: round(base + (row - 2) * step, 6) for row in ROWS}


def build_sample_model() -> WorkbookModel:
    model = WorkbookModel()
    for sheet in ("PXII", "Clipper", "Flash", "Summary"):
        model.add_sheet(sheet)

    def headers(sheet: str, mapping: dict[str, str]) -> None:
        for col_letter, text in mapping.items():
            col = ord(col_letter) - ord("A") + 1
            model.set_value(sheet, col, 1, text, "text")

    # --- PXII: B*C -> D, E*F -> G, H*I -> J, Ptotal = SUM(D,G,J) in K
    headers("PXII", {
        "B": "Idd", "C": "Vdd", "D": "Pdd",
        "E": "IIO", "F": "VIO", "G": "PIO",
        "H": "IM", "I": "VM", "J": "PM",
        "K": "Ptotal",
    })
    idd = _col_values(0.4, 0.01)
    vdd = _col_values(3.0, 0.1)
    iio = _col_values(0.2, 0.01)
    vio = _col_values(1.5, 0.05)
    im = _col_values(0.1, 0.005)
    vm = _col_values(12.0, 0.25)
    pxii_ptotal = {}
    for r in ROWS:
        model.set_value("PXII", 2, r, idd[r], "number")
        model.set_value("PXII", 3, r, vdd[r], "number")
        model.set_formula("PXII", 4, r, f"=B{r}*C{r}", idd[r] * vdd[r], "number")
        model.set_value("PXII", 5, r, iio[r], "number")
        model.set_value("PXII", 6, r, vio[r], "number")
        model.set_formula("PXII", 7, r, f"=E{r}*F{r}", iio[r] * vio[r], "number")
        model.set_value("PXII", 8, r, im[r], "number")
        model.set_value("PXII", 9, r, vm[r], "number")
        model.set_formula("PXII", 10, r, f"=H{r}*I{r}", im[r] * vm[r], "number")
        pxii_ptotal[r] = idd[r] * vdd[r] + iio[r] * vio[r] + im[r] * vm[r]
        model.set_formula("PXII", 11, r, f"=SUM(D{r},G{r},J{r})", pxii_ptotal[r], "number")

    # --- Clipper: B*C -> D (Pdd), E*F -> G (PCS), Ptotal = SUM(D,G) in H.
    # Rows 16 and 17 hold no data at all.
    headers("Clipper", {
        "B": "Idd", "C": "Vdd", "D": "Pdd",
        "E": "ICS", "F": "VCS", "G": "PCS",
        "H": "Ptotal",
    })
    c_idd = _col_values(0.5, 0.01)
    c_vdd = _col_values(2.5, 0.1)
    c_ics = _col_values(0.3, 0.01)
    c_vcs = _col_values(1.8, 0.05)
    clipper_ptotal = {}
    for r in ROWS:
        if r in CLIPPER_GAP:
            continue
        model.set_value("Clipper", 2, r, c_idd[r], "number")
        model.set_value("Clipper", 3, r, c_vdd[r], "number")
        model.set_formula("Clipper", 4, r, f"=B{r}*C{r}", c_idd[r] * c_vdd[r], "number")
        model.set_value("Clipper", 5, r, c_ics[r], "number")
        model.set_value("Clipper", 6, r, c_vcs[r], "number")
        model.set_formula("Clipper", 7, r, f"=E{r}*F{r}", c_ics[r] * c_vcs[r], "number")
        clipper_ptotal[r] = c_idd[r] * c_vdd[r] + c_ics[r] * c_vcs[r]
        model.set_formula("Clipper", 8, r, f"=SUM(D{r},G{r})", clipper_ptotal[r], "number")

    # --- Flash: B*C -> D (PIO), E*F -> G (PM), Ptotal = SUM(D,G) in H
    headers("Flash", {
        "B": "IIO", "C": "VIO", "D": "PIO",
        "E": "IM", "F": "VM", "G": "PM",
        "H": "Ptotal",
    })
    f_iio = _col_values(0.25, 0.01)
    f_vio = _col_values(1.1, 0.05)
    f_im = _col_values(0.15, 0.005)
    f_vm = _col_values(9.0, 0.25)
    flash_ptotal = {}
    for r in ROWS:
        model.set_value("Flash", 2, r, f_iio[r], "number")
        model.set_value("Flash", 3, r, f_vio[r], "number")
        model.set_formula("Flash", 4, r, f"=B{r}*C{r}", f_iio[r] * f_vio[r], "number")
        model.set_value("Flash", 5, r, f_im[r], "number")
        model.set_value("Flash", 6, r, f_vm[r], "number")
        model.set_formula("Flash", 7, r, f"=E{r}*F{r}", f_im[r] * f_vm[r], "number")
        flash_ptotal[r] = f_iio[r] * f_vio[r] + f_im[r] * f_vm[r]
        model.set_formula("Flash", 8, r, f"=SUM(D{r},G{r})", flash_ptotal[r], "number")

    # --- Summary: per-row average of the three Ptotal columns, squared
    # deviation from the overall mean, and the mean itself under an "avg" label.
    headers("Summary", {"B": "Pavg", "C": "deviation2"})
    pavg = {}
    for r in ROWS:
        inputs = [pxii_ptotal[r], flash_ptotal[r]]
        if r not in CLIPPER_GAP:
            inputs.insert(1, clipper_ptotal[r])
        pavg[r] = sum(inputs) / len(inputs)
        model.set_formula(
            "Summary", 2, r, f"=AVERAGE(PXII!K{r},Clipper!H{r},Flash!H{r})",
            pavg[r], "number",
        )
    mean = sum(pavg.values()) / len(pavg)
    for r in ROWS:
        model.set_formula("Summary", 3, r, f"=(B{r}-B$32)^2", (pavg[r] - mean) ** 2, "number")
    model.set_value("Summary", 2, 31, "avg", "text")
    model.set_formula("Summary", 2, 32, "=AVERAGE(B2:B30)", mean, "number")
    return model


def main() -> None:
    out = os.path.join(
        os.path.dirname(__file__), "..", "tests", "fixtures", "sample.xlsx"
    )
    out = os.path.normpath(os.path.abspath(out))
    if len(sys.argv) > 1:
        out = sys.argv[1]
    os.makedirs(os.path.dirname(out), exist_ok=True)
    model = build_sample_model()
    save_workbook(model, out)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
