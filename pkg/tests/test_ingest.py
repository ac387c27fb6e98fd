import csv
import json
import warnings

import numpy as np
import pytest

from ivanet.ingest import (
    AccountingError,
    AccountingWarning,
    IOTable,
    IOTableError,
    drop_regions,
    load_io_table,
    validate_accounting,
    write_io_table,
)
from ivanet.regions import EUROPE, PACIFIC_RIM, WIOD_REGIONS, load_region_map
from ivanet.toy import toy_table


class TestIOTable:
    def test_shapes_are_checked(self, small_table):
        t = small_table
        with pytest.raises(IOTableError):
            IOTable(t.countries, t.sectors, t.Z[:-1], t.FD, t.VA, t.T, t.year)
        with pytest.raises(IOTableError):
            IOTable(t.countries, t.sectors, t.Z, t.FD[:, :-1], t.VA, t.T, t.year)

    def test_node_order_is_country_major(self, small_table):
        t = small_table
        assert t.nodes[:3] == (("C00", "A"), ("C00", "B"), ("C01", "A"))
        assert t.node_of("C01", "B") == 3
        assert t.country_of(5) == "C02" and t.sector_of(5) == "B"
        assert t.node_codes[0] == "C00_A"

    def test_scaled_multiplies_every_account(self, small_table):
        s = small_table.scaled(1000.0)
        np.testing.assert_allclose(s.Z, 1000 * small_table.Z)
        np.testing.assert_allclose(s.T, 1000 * small_table.T)


class TestValidation:
    def test_balanced_table_passes(self, small_table):
        report = validate_accounting(small_table)
        assert report.passed
        assert report.max_residual < 1e-12

    def test_row_violation_is_located(self, small_table):
        t = small_table
        T = t.T.copy()
        T[4] *= 1.01
        report = validate_accounting(IOTable(t.countries, t.sectors, t.Z, t.FD, t.VA, T, t.year))
        assert not report.passed
        assert 4 in report.failed_rows
        assert "row" in report.summary()

    def test_tolerance_is_relative(self, small_table):
        t = small_table.scaled(1e9)
        assert validate_accounting(t).passed


def _write_manifest(tmp_path, table, **extra):
    path = write_io_table(table, tmp_path)
    manifest = json.loads(path.read_text())
    manifest.update(extra)
    path.write_text(json.dumps(manifest))
    return path


class TestLoad:
    def test_round_trip_is_exact(self, tmp_path, small_table):
        path = write_io_table(small_table, tmp_path)
        back = load_io_table(path)
        for name in ("Z", "FD", "VA", "T"):
            np.testing.assert_array_equal(getattr(back, name), getattr(small_table, name))
        assert back.countries == small_table.countries
        assert back.year == small_table.year

    def test_total_output_derived_when_absent(self, tmp_path, small_table):
        path = _write_manifest(tmp_path, small_table, t_csv=None)
        back = load_io_table(path)
        np.testing.assert_allclose(back.T, small_table.T, rtol=1e-12)

    def test_strict_mode_raises_on_imbalance(self, tmp_path, small_table):
        t = small_table
        bad = IOTable(t.countries, t.sectors, t.Z, t.FD, t.VA * 1.05, t.T, t.year)
        path = write_io_table(bad, tmp_path)
        with pytest.raises(AccountingError):
            load_io_table(path, strict=True)
        with pytest.warns(AccountingWarning):
            load_io_table(path, strict=False)

    def test_final_demand_categories_are_summed_per_country(self, tmp_path, small_table):
        path = write_io_table(small_table, tmp_path)
        fd_path = tmp_path / "FD.csv"
        rows = list(csv.reader(fd_path.open()))
        header = [""] + [f"{c}_{k}" for c in small_table.countries for k in ("hh", "gov")]
        body = []
        for r in rows[1:]:
            vals = [float(x) for x in r[1:]]
            body.append([r[0]] + [repr(v * share) for v in vals for share in (0.25, 0.75)])
        with fd_path.open("w", newline="") as fh:
            csv.writer(fh).writerows([header] + body)
        back = load_io_table(path)
        np.testing.assert_allclose(back.FD, small_table.FD, rtol=1e-14)

    def test_label_mismatch_is_reported(self, tmp_path, small_table):
        path = write_io_table(small_table, tmp_path)
        z = tmp_path / "Z.csv"
        z.write_text(z.read_text().replace("C01_A", "C09_A", 1))
        with pytest.raises(IOTableError):
            load_io_table(path)

    def test_missing_file_and_key(self, tmp_path, small_table):
        path = write_io_table(small_table, tmp_path)
        (tmp_path / "VA.csv").unlink()
        with pytest.raises(FileNotFoundError):
            load_io_table(path)
        path.write_text(json.dumps({"year": 2000}))
        with pytest.raises(IOTableError):
            load_io_table(path)

    def test_manifest_drop_countries(self, tmp_path, small_table):
        path = _write_manifest(tmp_path, small_table, drop_countries=["C02"])
        back = load_io_table(path)
        assert back.countries == ("C00", "C01")
        assert back.Z.shape == (4, 4)
        back_all = load_io_table(path, apply_drop=False)
        assert back_all.n_countries == 3


class TestDropRegions:
    def test_rows_columns_and_demand_removed(self, small_table):
        t = drop_regions(small_table, ["C01"])
        assert t.countries == ("C00", "C02")
        keep = [0, 1, 4, 5]
        np.testing.assert_array_equal(t.Z, small_table.Z[np.ix_(keep, keep)])
        np.testing.assert_array_equal(t.FD, small_table.FD[np.ix_(keep, [0, 2])])
        np.testing.assert_array_equal(t.T, small_table.T[keep])

    def test_unknown_code_raises(self, small_table):
        with pytest.raises(IOTableError):
            drop_regions(small_table, ["XXX"])

    def test_imbalance_after_drop_does_not_raise(self, small_table):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            t = drop_regions(small_table, ["C00"])
        assert not validate_accounting(t).passed


class TestRegions:
    def test_wiod_map_covers_two_regions(self):
        assert WIOD_REGIONS["DEU"] == EUROPE
        assert WIOD_REGIONS["USA"] == PACIFIC_RIM
        assert WIOD_REGIONS["CAN"] == PACIFIC_RIM
        assert len(WIOD_REGIONS) == 43
        assert "ROW" not in WIOD_REGIONS

    def test_custom_map(self, tmp_path):
        p = tmp_path / "r.json"
        p.write_text(json.dumps({"X": "North"}))
        assert load_region_map(p) == {"X": "North"}
        assert load_region_map(None) == WIOD_REGIONS

    def test_toy_tables_balance(self):
        for seed in range(5):
            t = toy_table(6, 4, blocks=2, seed=seed)
            assert validate_accounting(t, 1e-10).passed
            assert t.VA.min() > 0
