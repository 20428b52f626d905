import math

import numpy as np
import pytest

from casebias import (
    Stratum,
    design_variance,
    neyman_allocation,
    proportional_allocation,
    srs_variance,
    strata_from_csv,
    validate_strata,
)


def test_symmetric_strata_split_evenly():
    strata = [Stratum(0.5, 0.3), Stratum(0.5, 0.3)]
    assert list(neyman_allocation(strata, 100)) == [50, 50]


def test_zero_variance_stratum_gets_nothing():
    strata = [Stratum(0.5, 0.5), Stratum(0.5, 0.0)]
    assert list(neyman_allocation(strata, 100)) == [100, 0]


def test_heterogeneous_reference_allocation():
    # weights 0.8*sqrt(0.0099) and 0.2*sqrt(0.1875): 478.9 and 521.1
    strata = [Stratum(0.8, 0.01), Stratum(0.2, 0.25)]
    assert list(neyman_allocation(strata, 1000)) == [479, 521]


def test_allocation_total_exact():
    rng = np.random.default_rng(5)
    for _ in range(100):
        k = int(rng.integers(2, 8))
        shares = rng.dirichlet(np.ones(k))
        strata = [Stratum(float(s), float(p)) for s, p in zip(shares, rng.uniform(0.01, 0.99, k))]
        n = int(rng.integers(k, 5000))
        assert neyman_allocation(strata, n).sum() == n
        assert proportional_allocation(strata, n).sum() == n


def test_allocation_permutation_equivariant():
    strata = [Stratum(0.5, 0.02), Stratum(0.3, 0.2), Stratum(0.2, 0.4)]
    forward = neyman_allocation(strata, 997)
    backward = neyman_allocation(strata[::-1], 997)
    assert list(forward) == list(backward[::-1])


def test_allocation_validation():
    with pytest.raises(ValueError):
        neyman_allocation([Stratum(0.5, 0.0), Stratum(0.5, 1.0)], 100)
    with pytest.raises(ValueError):
        neyman_allocation([Stratum(0.5, 0.2), Stratum(0.5, 0.3)], 1)
    with pytest.raises(ValueError):
        validate_strata([Stratum(0.5, 0.2), Stratum(0.4, 0.3)])
    with pytest.raises(ValueError):
        Stratum(0.0, 0.5)
    with pytest.raises(ValueError):
        Stratum(0.5, 1.5)


def test_single_stratum_matches_binomial():
    strata = [Stratum(1.0, 0.3)]
    assert design_variance(strata, [200]) == pytest.approx(0.3 * 0.7 / 200, rel=1e-12)


def test_variance_ordering_reference_example():
    strata = [Stratum(0.8, 0.01), Stratum(0.2, 0.25)]
    ney = design_variance(strata, neyman_allocation(strata, 1000))
    prop = design_variance(strata, proportional_allocation(strata, 1000))
    pooled = 0.8 * 0.01 + 0.2 * 0.25
    srs = srs_variance(pooled, 1000, 0, fpc=False)
    assert ney <= prop <= srs


def test_homogeneous_strata_neyman_equals_proportional():
    strata = [Stratum(0.7, 0.2), Stratum(0.3, 0.2)]
    ney = design_variance(strata, neyman_allocation(strata, 500))
    prop = design_variance(strata, proportional_allocation(strata, 500))
    assert ney == pytest.approx(prop, rel=1e-12)


def test_variance_rejects_starved_stratum():
    strata = [Stratum(0.5, 0.2), Stratum(0.5, 0.3)]
    with pytest.raises(ValueError):
        design_variance(strata, [500, 0])
    with pytest.raises(ValueError):
        design_variance(strata, [500])


def test_fpc_variant_shrinks_variance():
    strata = [Stratum(0.6, 0.1), Stratum(0.4, 0.3)]
    alloc = neyman_allocation(strata, 400)
    wr = design_variance(strata, alloc)
    fpc = design_variance(strata, alloc, fpc=True, total_size=10_000)
    assert fpc < wr
    with pytest.raises(ValueError):
        design_variance(strata, alloc, fpc=True)


def test_srs_variance_forms():
    # (1/(N-1)) * ((1-f)/f) * sigma^2 at f = n/N
    value = srs_variance(0.1, 26, 1000)
    expected = 0.09 * (1 - 0.026) / 0.026 / 999.0
    assert value == pytest.approx(expected, rel=1e-12)
    assert srs_variance(0.1, 26, 0, fpc=False) == pytest.approx(0.09 / 26, rel=1e-12)
    with pytest.raises(ValueError):
        srs_variance(0.1, 1000, 1000)


def test_strata_from_csv(tmp_path):
    path = tmp_path / "strata.csv"
    path.write_text("stratum_id,share,prevalence\na,0.8,0.01\nb,0.2,0.25\n")
    strata = strata_from_csv(path)
    assert len(strata) == 2
    assert strata[0].share == 0.8

    bad_header = tmp_path / "bad.csv"
    bad_header.write_text("id,share,prev\na,0.8,0.01\n")
    with pytest.raises(ValueError):
        strata_from_csv(bad_header)

    bad_row = tmp_path / "badrow.csv"
    bad_row.write_text("stratum_id,share,prevalence\na,0.8,x\n")
    with pytest.raises(ValueError, match="line 2"):
        strata_from_csv(bad_row)

    empty = tmp_path / "empty.csv"
    empty.write_text("stratum_id,share,prevalence\n")
    with pytest.raises(ValueError, match="no data rows"):
        strata_from_csv(empty)
