import numpy as np
import pytest

from auprcopt.core import (
    Batch,
    CapacityError,
    Dataset,
    DatasetFormatError,
    DomainError,
    EmptyClassError,
    LabeledVector,
    RngHandle,
    load_dataset,
    sample_batch,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_two_rows(tmp_path):
    ds = load_dataset(write(tmp_path, "1,0.5,0.2\n-1,0.1,0.9\n"))
    assert ds.n_pos == 1 and ds.n_neg == 1 and ds.dim == 2
    assert ds.prior_pi == 0.5
    np.testing.assert_array_equal(ds.positives, [[0.5, 0.2]])


def test_load_non_numeric_reports_line(tmp_path):
    with pytest.raises(DatasetFormatError) as err:
        load_dataset(write(tmp_path, "1,a,b\n"))
    assert err.value.line == 1


def test_load_single_class_rejected(tmp_path):
    with pytest.raises(EmptyClassError):
        load_dataset(write(tmp_path, "1,0.5\n1,0.7\n"))


def test_load_zero_one_labels_rejected(tmp_path):
    with pytest.raises(DatasetFormatError):
        load_dataset(write(tmp_path, "0,0.5\n1,0.7\n"))


def test_load_header_and_crlf(tmp_path):
    ds = load_dataset(write(tmp_path, "label,f1\r\n1,2.0\r\n-1,3.0\r\n"), has_header=True)
    assert ds.n_pos == 1 and ds.n_neg == 1


def test_load_wrong_arity(tmp_path):
    with pytest.raises(DatasetFormatError) as err:
        load_dataset(write(tmp_path, "1,0.5,0.2\n-1,0.1\n"))
    assert err.value.line == 2


def test_row_order_preserved_within_class(tmp_path):
    ds = load_dataset(write(tmp_path, "1,1\n-1,10\n1,2\n-1,20\n1,3\n"))
    np.testing.assert_array_equal(ds.positives[:, 0], [1, 2, 3])
    np.testing.assert_array_equal(ds.negatives[:, 0], [10, 20])


def test_labeled_vector_validation():
    with pytest.raises(ValueError):
        LabeledVector(np.array([1.0]), 0)
    with pytest.raises(DomainError):
        LabeledVector(np.array([np.inf]), 1)


def test_partition_every_row_once():
    rows = [LabeledVector(np.array([float(i)]), 1 if i % 3 == 0 else -1) for i in range(12)]
    ds = Dataset.from_rows(rows)
    assert ds.n_pos + ds.n_neg == len(rows)
    got = sorted(ds.positives[:, 0].tolist() + ds.negatives[:, 0].tolist())
    assert got == [float(i) for i in range(12)]


def small_dataset(n_pos=4, n_neg=6, dim=2):
    gen = np.random.default_rng(0)
    return Dataset(gen.normal(size=(n_pos, dim)), gen.normal(size=(n_neg, dim)))


def test_sample_batch_exhaustive_is_permutation():
    ds = small_dataset(n_pos=4)
    batch = sample_batch(ds, 4, 2, RngHandle(5))
    assert sorted(batch.pos_indices.tolist()) == [0, 1, 2, 3]


def test_sample_batch_deterministic_per_handle():
    ds = small_dataset()
    b1 = sample_batch(ds, 2, 3, RngHandle(9, 4))
    b2 = sample_batch(ds, 2, 3, RngHandle(9, 4))
    np.testing.assert_array_equal(b1.pos_indices, b2.pos_indices)
    np.testing.assert_array_equal(b1.neg_indices, b2.neg_indices)


def test_sample_batch_capacity():
    ds = small_dataset(n_pos=4)
    with pytest.raises(CapacityError):
        sample_batch(ds, 5, 1, RngHandle(0))
    with pytest.raises(CapacityError):
        sample_batch(ds, 1, 0, RngHandle(0))


def test_batch_distinct_indices():
    with pytest.raises(ValueError):
        Batch(np.array([0, 0]), np.array([1]))


def test_sampler_uniformity_chi_square():
    # inclusion counts over repeated draws vs the uniform null
    n_items, k, reps = 10_000, 10, 10_000
    ds = Dataset(np.zeros((n_items, 1)), np.zeros((2, 1)))
    counts = np.zeros(n_items)
    master = RngHandle(123)
    for r in range(reps):
        gen = master.stream(r).generator()
        counts[gen.choice(n_items, size=k, replace=False)] += 1
    expect = reps * k / n_items
    sd = np.sqrt(expect * (1 - k / n_items))
    assert np.all(np.abs(counts - expect) <= 5.0 * sd)
    chi2 = np.sum((counts - expect) ** 2 / expect)
    dof = n_items - 1
    assert abs(chi2 - dof) <= 5.0 * np.sqrt(2.0 * dof)


def test_streams_independent_of_order():
    h = RngHandle(7)
    a_then_b = [h.stream(1).generator().random(), h.stream(2).generator().random()]
    b_then_a = [h.stream(2).generator().random(), h.stream(1).generator().random()]
    assert a_then_b[0] == b_then_a[1] and a_then_b[1] == b_then_a[0]
    assert a_then_b[0] != a_then_b[1]


def test_distinct_streams_distinct_output():
    draws = {RngHandle(3, s).generator().integers(1 << 62) for s in range(64)}
    assert len(draws) == 64
