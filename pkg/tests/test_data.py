import numpy as np
import pytest

from dsubmod.data import RatingsFormatError, generate_synthetic, load_ratings


def test_single_line(tmp_path):
    path = tmp_path / "r.dat"
    path.write_text("1::10::4\n")
    r = load_ratings(path)
    assert (r.n_users, r.n_movies) == (1, 1)
    assert r.values.toarray()[0, 0] == 4


def test_duplicate_last_wins(tmp_path):
    path = tmp_path / "r.dat"
    path.write_text("1::10::4::978300760\n1::10::2::978300761\n")
    assert load_ratings(path).values.toarray()[0, 0] == 2


def test_csv_with_header_and_remap(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("userId,movieId,rating\n7,30,5\n3,30,1\n# note\n\n7,12,2.5\n")
    r = load_ratings(path)
    assert r.user_ids == [3, 7] and r.movie_ids == [12, 30]
    assert np.array_equal(r.values.toarray(), [[0, 1], [2.5, 5]])


@pytest.mark.parametrize("body", ["1::2\n", "1::2::9\n", "a::b::c\n1::2::x\n", ""])
def test_bad_files(tmp_path, body):
    path = tmp_path / "bad.dat"
    path.write_text(body)
    with pytest.raises(RatingsFormatError):
        load_ratings(path)


def test_synthetic():
    flat = generate_synthetic(5, 4, density=1.0, rating_range=(3, 3))
    assert np.all(flat.values.toarray() == 3)
    a = generate_synthetic(50, 20, 0.2, seed=1).values.toarray()
    b = generate_synthetic(50, 20, 0.2, seed=1).values.toarray()
    assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        generate_synthetic(5, 5, density=0)
