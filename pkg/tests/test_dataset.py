import io
import math

import numpy as np
import pytest

from proxfactor.dataset import (
    DataError,
    ItemDescriptor,
    Measure,
    Source,
    descriptive_stats,
    load_matrix,
    map_option_scores,
    save_matrix,
)

CSV = """code,title,Work Context - A,Work Activities - B,Work Context - C
11-1011.00,Chief Executives,10,20.5,30
11-1021.00,General Managers,NA,40,50

15-1252.00,Software Developers,70,,90
"""


def test_load_parses_values_and_missing_cells():
    ds = load_matrix(io.StringIO(CSV))
    assert ds.codes == ("11-1011.00", "11-1021.00", "15-1252.00")
    assert ds.item_ids == ("Work Context - A", "Work Activities - B", "Work Context - C")
    assert ds.values[0].tolist() == [10.0, 20.5, 30.0]
    assert math.isnan(ds.values[1, 0]) and math.isnan(ds.values[2, 1])
    assert ds.report.rows_read == 3
    assert len(ds.report.missing_cells) == 2
    assert ds.report.rows_with_missing == ["11-1021.00", "15-1252.00"]
    assert ds.report.dropped_rows == [(4, "blank line")]


def test_item_metadata_is_inferred():
    ds = load_matrix(io.StringIO(CSV))
    assert ds.items[1].source is Source.WORK_ACTIVITIES
    assert ds.items[1].measure is Measure.IMPORTANCE
    assert ds.items[0].source is Source.WORK_CONTEXT
    assert ds.items[0].label == "A"


def test_schema_overrides_inference():
    custom = ItemDescriptor("Work Context - A", "alpha", Source.WORK_ACTIVITIES, Measure.IMPORTANCE, 7)
    ds = load_matrix(io.StringIO(CSV), {"Work Context - A": custom})
    assert ds.items[0] is custom


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("x,y,101\n", "line 2, column 'Work Context - A'"),
        ("x,y,-0.5\n", "out of range"),
        ("x,y,abc\n", "cannot parse"),
        ("x,y,1,2\n", "expected 3 cells"),
        ("x,y,inf\n", "out of range"),
    ],
)
def test_bad_cells_name_their_location(body, fragment):
    with pytest.raises(DataError, match=fragment):
        load_matrix(io.StringIO("code,title,Work Context - A\n" + body))


def test_duplicate_codes_and_items_rejected():
    with pytest.raises(DataError, match="duplicate occupation"):
        load_matrix(io.StringIO("code,title,Work Context - A\nx,a,1\nx,b,2\n"))
    with pytest.raises(DataError, match="duplicate item"):
        load_matrix(io.StringIO("code,title,Work Context - A,Work Context - A\nx,a,1,2\n"))


def test_empty_and_headerless_inputs():
    with pytest.raises(DataError, match="empty input"):
        load_matrix(io.StringIO(""))
    with pytest.raises(DataError, match="header"):
        load_matrix(io.StringIO("code,title\n"))


def test_values_are_read_only():
    ds = load_matrix(io.StringIO(CSV))
    with pytest.raises(ValueError):
        ds.values[0, 0] = 1.0


def test_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(1)
    body = "\n".join(
        f"c{i},t{i}," + ",".join(repr(float(v)) for v in rng.uniform(0, 100, 4)) for i in range(20)
    )
    text = "code,title,Work Context - a,Work Context - b,Work Context - c,Work Context - d\n" + body
    ds = load_matrix(io.StringIO(text))
    saved = save_matrix(ds)
    again = load_matrix(io.StringIO(saved))
    assert again == ds
    assert save_matrix(again) == saved
    path = tmp_path / "m.csv"
    path.write_text(saved)
    assert load_matrix(str(path)) == ds


def test_missing_cells_survive_round_trip():
    ds = load_matrix(io.StringIO(CSV))
    assert load_matrix(io.StringIO(save_matrix(ds))) == ds


@pytest.mark.parametrize("count, expected", [(5, [0, 25, 50, 75, 100]), (2, [0, 100]), (3, [0, 50, 100])])
def test_option_scores(count, expected):
    assert [map_option_scores(i, count) for i in range(count)] == expected


def test_option_scores_validate():
    with pytest.raises(ValueError):
        map_option_scores(5, 5)
    with pytest.raises(ValueError):
        map_option_scores(0, 1)


def test_descriptives_use_sample_sd_over_complete_rows():
    ds = load_matrix(io.StringIO(CSV))
    stats = descriptive_stats(ds, ["Work Context - C"])
    assert stats.n == 3
    assert stats.mean[0] == pytest.approx(170 / 3)
    assert stats.sd[0] == pytest.approx(np.std([30, 50, 90], ddof=1))
    both = descriptive_stats(ds, ["Work Context - A", "Work Context - C"])
    assert both.n == 2


def test_submatrix_listwise_and_unknown_item():
    ds = load_matrix(io.StringIO(CSV))
    block, mask = ds.submatrix(["Work Context - A", "Work Activities - B"])
    assert block.shape == (1, 2) and mask.tolist() == [True, False, False]
    with pytest.raises(KeyError):
        ds.column("Work Context - Z")


def test_select_items_keeps_order():
    ds = load_matrix(io.StringIO(CSV))
    sub = ds.select_items(["Work Context - C", "Work Context - A"])
    assert sub.item_ids == ("Work Context - C", "Work Context - A")
    assert sub.values[0].tolist() == [30.0, 10.0]
