import math

import numpy as np
import pytest

from pcpeel.errors import DegenerateSpectrum
from pcpeel.gapsel import (
    GapSelection,
    log_spectral_gap,
    naive_tail,
    scree_export,
)
from pcpeel.matrixcore import EigenBasis


def basis_from(eigenvalues) -> EigenBasis:
    vals = np.asarray(eigenvalues, dtype=np.float64)
    return EigenBasis(vals, np.eye(vals.size))


class TestLogSpectralGap:
    def test_dominant_drop_wins(self):
        sel = log_spectral_gap(basis_from([100.0, 10.0, 1e-8, 1e-8]), 1)
        assert sel.gap_index == 2
        assert sel.pettiest_band == (2,)
        assert sel.principal_band == (1,)
        assert sel.gap_size == pytest.approx(9.0)

    def test_geometric_spectrum_ties_to_smallest_index(self):
        sel = log_spectral_gap(basis_from([2.0**-j for j in range(1, 7)]), 1)
        assert sel.gap_index == 1
        assert sel.gap_size == pytest.approx(math.log10(2.0))

    def test_flat_spectrum_raises(self):
        with pytest.raises(DegenerateSpectrum):
            log_spectral_gap(basis_from([1.0, 1.0, 1.0]), 1)

    def test_floor_eigenvalues_are_inadmissible(self):
        # sub-floor values may not anchor a gap; the selected band stays in
        # the informative region
        sel = log_spectral_gap(basis_from([100.0, 10.0, 1e-30, 1e-30]), 1)
        assert sel.gap_index == 2
        assert max(sel.pettiest_band) <= 2

    def test_band_fits_above_the_gap(self):
        sel = log_spectral_gap(basis_from([100.0, 90.0, 80.0, 1.0, 0.9]), 3)
        assert sel.gap_index == 3
        assert sel.pettiest_band == (1, 2, 3)

    def test_needs_k_plus_one_above_floor(self):
        with pytest.raises(DegenerateSpectrum):
            log_spectral_gap(basis_from([1.0, 1e-30, 1e-30]), 1)

    def test_argmax_against_brute_force(self):
        gen = np.random.default_rng(12)
        for _ in range(25):
            lam = np.sort(gen.uniform(0.5, 50.0, size=8))[::-1]
            k = int(gen.integers(1, 4))
            sel = log_spectral_gap(basis_from(lam), k)
            gaps = {
                j: math.log10(lam[j - 1]) - math.log10(lam[j])
                for j in range(k, lam.size)
            }
            assert sel.gap_size == pytest.approx(max(gaps.values()))
            best = min(j for j, g in gaps.items() if g == max(gaps.values()))
            assert sel.gap_index == best


class TestNaiveTail:
    def test_picks_raw_tail(self):
        sel = naive_tail(basis_from(np.linspace(784.0, 1.0, 784)), 20)
        assert sel.pettiest_band == tuple(range(765, 785))
        assert sel.gap_index is None and sel.gap_size is None

    def test_k_equals_d(self):
        sel = naive_tail(basis_from([3.0, 2.0, 1.0]), 3)
        assert sel.pettiest_band == (1, 2, 3)

    def test_band_ignores_magnitudes(self):
        a = naive_tail(basis_from([100.0, 1.0, 1e-9]), 2)
        b = naive_tail(basis_from([3.0, 2.0, 1.0]), 2)
        assert a.pettiest_band == b.pettiest_band == (2, 3)


class TestScreeExport:
    def test_rows_and_monotonicity(self):
        table = scree_export(basis_from([5.0, 2.0, 1.0]))
        assert table.indices == (1, 2, 3)
        assert list(table.eigenvalues) == sorted(table.eigenvalues, reverse=True)
        assert table.bands == ("none", "none", "none")

    def test_band_tags(self):
        basis = basis_from([100.0, 50.0, 1.0, 0.5, 1e-30, 1e-30])
        sel = log_spectral_gap(basis, 2)
        table = scree_export(basis, sel, naive=naive_tail(basis, 2))
        assert table.bands[0] == "principal" and table.bands[1] == "principal"
        assert table.bands[sel.gap_index - 1] == "pettiest"
        assert table.bands[-1] == "naive"

    def test_zero_eigenvalue_gets_sentinel(self):
        table = scree_export(basis_from([1.0, 0.0]))
        assert table.log10_column() == (repr(0.0), "-inf")
        csv_text = table.to_csv()
        assert csv_text.splitlines()[0] == "index,eigenvalue,log10_eigenvalue,band"
        assert ",-inf," in csv_text.splitlines()[2]

    def test_selection_from_spectrum_only(self):
        # shuffling data rows cannot move the selection: it sees the basis only
        lam = [40.0, 10.0, 0.2, 0.1]
        sels = [log_spectral_gap(basis_from(lam), 1) for _ in range(3)]
        assert all(s == sels[0] for s in sels)
        assert isinstance(sels[0], GapSelection)
