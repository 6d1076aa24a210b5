"""

    tests.test_utils.py
    ~~~~~~~~~~~~~~~~~~~

    @author: z33k

"""
import logging

import pytest

from rln2.imaging.plane import ImagePlane
from rln2.utils import ConfigError, DataIntegrityError, NumericalError, RangeError, Rln2Error, \
    ShapeError, from_kv_text, getdir, getfile, init_log, is_increasing, timed, to_kv_text, \
    type_checker
from rln2.utils.check_type import channels_checker


class TestKvText:
    def test_sorted_and_canonical(self):
        text = to_kv_text({"b": [1, 2], "a": {"y": 1, "x": "é"}})
        assert text == 'a = {"x": "é", "y": 1}\nb = [1, 2]\n'
        assert to_kv_text({"a": {"x": "é", "y": 1}, "b": [1, 2]}) == text

    def test_round_trip(self):
        data = {"lr": 0.0002, "name": "run = 1", "flags": [True, None]}
        assert from_kv_text(to_kv_text(data)) == data

    def test_skips_comments_and_blanks(self):
        assert from_kv_text("# header\n\nx = 1\n") == {"x": 1}

    def test_malformed_line(self):
        with pytest.raises(ValueError):
            from_kv_text("just words")

    def test_invalid_key(self):
        with pytest.raises(ValueError):
            to_kv_text({"a = b": 1})


class TestCheckers:
    def test_type_checker(self):
        @type_checker(int, str)
        def f(a, b):
            return a, b

        assert f(1, "x") == (1, "x")
        with pytest.raises(TypeError):
            f("1", "x")

    def test_type_checker_on_method(self):
        class A:
            @type_checker(int, is_method=True)
            def f(self, a):
                return a

        assert A().f(3) == 3
        with pytest.raises(TypeError):
            A().f(3.0)

    def test_channels_checker(self):
        @channels_checker(3)
        def f(img):
            return img.channels

        assert f(ImagePlane([[[0.1, 0.2, 0.3]]])) == 3
        with pytest.raises(ShapeError):
            f(ImagePlane([[0.1]]))


class TestErrors:
    @pytest.mark.parametrize("error", [ShapeError, RangeError, ConfigError])
    def test_value_errors(self, error):
        assert issubclass(error, ValueError) and issubclass(error, Rln2Error)

    def test_numerical(self):
        assert issubclass(NumericalError, ArithmeticError)
        assert issubclass(DataIntegrityError, Rln2Error)


class TestFiles:
    def test_getdir_creates(self, tmp_path):
        assert getdir(tmp_path / "a" / "b").is_dir()

    def test_getdir_rejects_file(self, tmp_path):
        f = tmp_path / "f.txt"
        f.write_text("x")
        with pytest.raises(NotADirectoryError):
            getdir(f)

    def test_getfile(self, tmp_path):
        f = tmp_path / "f.json"
        f.write_text("{}")
        assert getfile(f, ext=".json") == f
        with pytest.raises(ValueError):
            getfile(f, ext=".txt")
        with pytest.raises(FileNotFoundError):
            getfile(tmp_path / "missing.json")


def test_is_increasing():
    assert is_increasing([1, 2, 5]) and not is_increasing([1, 1]) and not is_increasing([])


def test_timed_logs_completion(caplog):
    @timed("nothing", precision=1)
    def f():
        return 42

    with caplog.at_level(logging.INFO, logger="rln2.utils"):
        assert f() == 42
    assert "Completed nothing in" in caplog.text


def test_init_log_is_idempotent():
    root = logging.getLogger()
    before = len(root.handlers)
    init_log()
    init_log()
    assert len(root.handlers) == before
