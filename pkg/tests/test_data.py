import math

import numpy as np
import pytest

from src.modules.data import (
    GENERATORS,
    Dataset,
    generate_three_cluster,
    generate_two_cluster,
    load_csv,
    write_dataset,
)
from src.modules.errors import DataError, DomainError


@pytest.fixture
def write(tmp_path):
    def _write(text, name='data.csv'):
        path = tmp_path / name
        path.write_text(text, encoding='utf-8')
        return str(path)
    return _write


class TestLoadCsv:
    def test_with_header(self, write):
        dataset = load_csv(write("a,b\n1,2\n3,4\n5,6\n"))
        assert dataset.values.shape == (3, 2)
        assert dataset.columns == ['a', 'b']
        assert dataset.values[2].tolist() == [5.0, 6.0]

    def test_without_header(self, write):
        dataset = load_csv(write("1,2\n3,4\n5,6\n"))
        assert dataset.n == 3 and dataset.p == 2
        assert dataset.values[0].tolist() == [1.0, 2.0]

    def test_log_transform(self, write):
        dataset = load_csv(write(f"v\n1\n{math.e!r}\n"), log_transform=True)
        assert np.allclose(dataset.values.ravel(), [0.0, 1.0])
        assert dataset.log_transformed

    def test_log_of_nonpositive(self, write):
        with pytest.raises(DataError) as info:
            load_csv(write("v,w\n1,1\n0,2\n3,3\n"), log_transform=True)
        assert info.value.row == 3

    def test_non_numeric_cell(self, write):
        with pytest.raises(DataError) as info:
            load_csv(write("a,b\n1,2\nabc,4\n5,6\n"))
        assert info.value.row == 3
        assert info.value.column == 'a'
        assert 'abc' in str(info.value)

    def test_blank_lines_keep_file_line_numbers(self, write):
        with pytest.raises(DataError) as info:
            load_csv(write("a,b\n1,2\n\n3,4\nabc,5\n6,7\n"))
        assert info.value.row == 5
        assert info.value.column == 'a'

    def test_blank_lines_are_skipped(self, write):
        dataset = load_csv(write("a,b\n1,2\n\n3,4\n  \n5,7\n\n"))
        assert dataset.columns == ['a', 'b']
        assert dataset.values.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 7.0]]

    def test_only_blank_lines(self, write):
        with pytest.raises(DataError):
            load_csv(write("\n\n\n"))

    def test_missing_values_list_rows(self, write):
        with pytest.raises(DataError) as info:
            load_csv(write("a,b\n1,2\n,4\n5,6\n7,\n"))
        assert 'rows 3, 5' in str(info.value)

    def test_unselected_bad_column_is_ignored(self, write):
        dataset = load_csv(write("a,b,label\n1,2,x\n3,5,y\n6,4,z\n"), columns=['a', 'b'])
        assert dataset.values.shape == (3, 2)

    def test_columns_by_name(self, write):
        dataset = load_csv(write("a,b,c\n1,2,3\n4,5,6\n7,8,10\n"), columns=['c', 'a'])
        assert dataset.columns == ['c', 'a']
        assert dataset.values[:, 0].tolist() == [3.0, 6.0, 10.0]

    def test_columns_by_index(self, write):
        dataset = load_csv(write("a,b,c\n1,2,3\n4,5,6\n7,8,10\n"), columns=['1'])
        assert dataset.values.ravel().tolist() == [2.0, 5.0, 8.0]

    def test_unknown_column(self, write):
        with pytest.raises(DataError):
            load_csv(write("a,b\n1,2\n3,4\n5,6\n"), columns=['z'])

    def test_too_few_rows(self, write):
        with pytest.raises(DomainError):
            load_csv(write("a,b\n1,2\n3,4\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(str(tmp_path / 'absent.csv'))

    def test_empty_file(self, write):
        with pytest.raises(DataError):
            load_csv(write(""))


class TestGenerators:
    def test_two_cluster(self):
        dataset = generate_two_cluster(seed=1)
        assert dataset.values.shape == (304, 2)
        assert np.allclose(dataset.values[:152].mean(axis=0), [0.0, 0.0], atol=0.25)
        assert np.allclose(dataset.values[152:].mean(axis=0), [4.0, 4.0], atol=0.25)

    def test_three_cluster(self):
        dataset = generate_three_cluster(seed=1)
        assert dataset.values.shape == (304, 3)
        assert np.allclose(dataset.values[-101:].mean(axis=0), [0.0, 4.0, 4.0], atol=0.3)

    def test_seeded(self):
        assert np.array_equal(generate_two_cluster(seed=4).values, generate_two_cluster(seed=4).values)

    def test_registry(self):
        assert set(GENERATORS) == {'two-cluster', 'three-cluster'}

    def test_written_file_loads_back(self, tmp_path):
        path = str(tmp_path / 'nested' / 'two.csv')
        write_dataset(generate_two_cluster(seed=2, size=20), path)
        dataset = load_csv(path)
        assert dataset.columns == ['x1', 'x2']
        assert dataset.n == 20


class TestDataset:
    def test_vector_becomes_column(self):
        dataset = Dataset(values=[1.0, 2.0, 3.0])
        assert dataset.values.shape == (3, 1)
        assert dataset.columns == ['x1']
